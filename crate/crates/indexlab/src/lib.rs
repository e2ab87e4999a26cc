//! Numerical laboratory for the wave operators of the inverse-square family
//! `H_{m,κ}` on the real line: scattering symbols, point spectra, winding
//! numbers and the operator traces that compute their indices.

pub mod error;
pub mod model;
pub mod quantize;
pub mod specfn;
pub mod verify;
pub mod winding;

pub use error::{Error, ModelError, QuantizeError, SpecFnError, WindingError};
pub use num_complex::Complex64;
