//! Complex special functions: log-Gamma, the unimodular symbol `Ξ_m`, the
//! coupling constant `ς` and the auxiliary ratios `G_n^±`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::SpecFnError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Minimum distance from a pole of Γ accepted by [`log_gamma`].
pub const POLE_GUARD: f64 = 1e-12;

/// Principal log-Gamma, continuous on the plane cut along the non-positive
/// real axis. The imaginary part is not reduced modulo 2π.
pub fn log_gamma(z: Complex64) -> Result<Complex64, SpecFnError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(SpecFnError::Domain(format!("non-finite argument {z}")));
    }
    if z.re <= 0.5 {
        let nearest = z.re.round().min(0.0);
        let d = Complex64::new(z.re - nearest, z.im).norm();
        if d < POLE_GUARD {
            return Err(SpecFnError::PoleProximity { re: z.re, im: z.im });
        }
    }
    Ok(log_gamma_unchecked(z))
}

fn log_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - lanczos(Complex64::new(1.0, 0.0) - z)
    } else {
        lanczos(z)
    }
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// ln sin(πz) on the branch matching the cut-plane log-Gamma.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    let i = Complex64::i();
    let e = (2.0 * PI * i * z).exp();
    -i * PI * z + (1.0 - e).ln() + Complex64::new(-(2f64.ln()), PI / 2.0)
}

/// Γ(z) through the exponential of [`log_gamma`].
pub fn gamma(z: Complex64) -> Result<Complex64, SpecFnError> {
    log_gamma(z).map(|l| l.exp())
}

/// `Ξ_m(ξ) = e^{i ln2 ξ} Γ((m+1+iξ)/2) / Γ((m+1−iξ)/2)`.
pub fn xi(m: Complex64, xi: f64) -> Result<Complex64, SpecFnError> {
    if m.re <= -1.0 {
        return Err(SpecFnError::Domain(format!("Re(m) = {} must exceed -1", m.re)));
    }
    Ok(xi_unchecked(m, xi))
}

/// [`xi`] without the domain test, for hot loops over validated orders.
pub(crate) fn xi_unchecked(m: Complex64, xi: f64) -> Complex64 {
    let top = (m + Complex64::new(1.0, xi)) * 0.5;
    let bottom = (m + Complex64::new(1.0, -xi)) * 0.5;
    let phase = Complex64::new(0.0, 2f64.ln() * xi);
    (phase + log_gamma_unchecked(top) - log_gamma_unchecked(bottom)).exp()
}

/// End of the real line approached by a momentum limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    /// ξ → −∞.
    MinusInfinity,
    /// ξ → +∞.
    PlusInfinity,
}

/// Limit of `ξ ↦ Ξ_m(−ξ) Ξ_{m2}(ξ)`.
///
/// Towards `+∞` the value is `e^{−iπ(m−m2)/2}` (upper sign of the `∓`
/// pattern), towards `−∞` it is `e^{+iπ(m−m2)/2}`.
pub fn xi_pair_limit(m: Complex64, m2: Complex64, direction: Direction) -> Result<Complex64, SpecFnError> {
    if m.re <= -1.0 || m2.re <= -1.0 {
        return Err(SpecFnError::Domain("Re(m) and Re(m2) must exceed -1".into()));
    }
    Ok(xi_pair_limit_unchecked(m, m2, direction))
}

pub(crate) fn xi_pair_limit_unchecked(m: Complex64, m2: Complex64, direction: Direction) -> Complex64 {
    let s = match direction {
        Direction::PlusInfinity => -1.0,
        Direction::MinusInfinity => 1.0,
    };
    (Complex64::i() * s * PI * (m - m2) / 2.0).exp()
}

/// `ς = κ Γ(−m) / Γ(m)`.
pub fn varsigma(m: Complex64, kappa: Complex64) -> Result<Complex64, SpecFnError> {
    if m.im.abs() < POLE_GUARD && (m.re - m.re.round()).abs() < POLE_GUARD {
        return Err(SpecFnError::IntegerOrder { m: m.re });
    }
    if kappa == Complex64::new(0.0, 0.0) {
        return Ok(kappa);
    }
    Ok(kappa * (log_gamma(-m)? - log_gamma(m)?).exp())
}

/// Sign selector for `G_n^±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmSign {
    Plus,
    Minus,
}

/// `G_n^±(ξ) = e^{±πn}(e^{πξ}+e^{∓πn})/(e^{πξ}+e^{±πn})`, equal to
/// `Ξ_{±in}(−ξ) Ξ_{∓in}(ξ)`.
pub fn g_pm(n: f64, xi: f64, sign: PmSign) -> f64 {
    let s = match sign {
        PmSign::Plus => 1.0,
        PmSign::Minus => -1.0,
    };
    let a = s * PI * n;
    if xi > 0.0 {
        a.exp() * (1.0 + (-a - PI * xi).exp()) / (1.0 + (a - PI * xi).exp())
    } else {
        let e = (PI * xi).exp();
        a.exp() * (e + (-a).exp()) / (e + a.exp())
    }
}

/// Limit of [`g_pm`] as ξ → +∞, namely `e^{±πn}`.
pub fn g_pm_limit(n: f64, sign: PmSign) -> f64 {
    match sign {
        PmSign::Plus => (PI * n).exp(),
        PmSign::Minus => (-PI * n).exp(),
    }
}
