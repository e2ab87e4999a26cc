//! Finite quantizations of factorized operators: grid operators on the real
//! line, fiber operators of the Floquet-Bloch decomposition, and the traces
//! `Trace_n` and `Trace_ap`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::QuantizeError;
use crate::model::{self, FactorClass, FactorizedOperator, ParamPair, ParamPoint, ScalarFn, Side, SymbolFactor};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Singular values below this are counted as defects.
pub const TAU_LOW: f64 = 0.2;
/// Singular values above this are counted as regular.
pub const TAU_HIGH: f64 = 0.8;
/// Truncation errors below this are treated as round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Real-line discretization: `N` points on `[−L, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub l: f64,
    pub n: usize,
    pub collar: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { l: 40.0, n: 1024, collar: 0.1 }
    }
}

impl GridSpec {
    pub fn new(l: f64, n: usize, collar: f64) -> Self {
        GridSpec { l, n, collar }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    /// Largest resolved momentum `πN / 2L`.
    pub fn xi_max(&self) -> f64 {
        PI * self.n as f64 / (2.0 * self.l)
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.l + self.spacing() * j as f64
    }

    /// Momentum of DFT bin `k` in transform order.
    pub fn xi(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let k = k as i64;
        let kk = if k < n / 2 { k } else { k - n };
        PI * kk as f64 / self.l
    }

    /// The same spacing on twice the width.
    pub fn enlarged(&self) -> Self {
        GridSpec { l: 2.0 * self.l, n: 2 * self.n, collar: self.collar }
    }

    /// Twice the points on the same width.
    pub fn refined(&self) -> Self {
        GridSpec { l: self.l, n: 2 * self.n, collar: self.collar }
    }

    /// Radius of the phase-space disc used for defect counts and window traces.
    pub fn window_radius(&self) -> f64 {
        (0.6 * self.l).min(0.5 * self.xi_max())
    }

    fn check(&self, max_frequency: f64) -> Result<(), QuantizeError> {
        if !self.n.is_power_of_two() || self.n < 16 {
            return Err(QuantizeError::InvalidSpec(format!("N = {} must be a power of two ≥ 16", self.n)));
        }
        if !(self.l > 0.0) || !(self.collar > 0.0 && self.collar < 0.5) {
            return Err(QuantizeError::InvalidSpec("need L > 0 and collar in (0, 1/2)".into()));
        }
        let required = 16.0 * self.l * max_frequency.max(1.0) / PI;
        if (self.n as f64) < required {
            return Err(QuantizeError::Resolution { n: self.n, required });
        }
        Ok(())
    }
}

fn max_frequency(op: &FactorizedOperator) -> f64 {
    let mut f: f64 = 1.0;
    for b in op.position_factors() {
        match &b.class {
            FactorClass::Periodic { period } | FactorClass::AsymptoticallyPeriodic { period, .. } => f = f.max(2.0 * PI / period),
            FactorClass::AlmostPeriodic { frequencies } => f = frequencies.iter().fold(f, |a, &b| a.max(b)),
            _ => {}
        }
    }
    f
}

enum Sampled {
    Momentum(Vec<Complex64>),
    Position(Vec<Complex64>),
}

struct SampledTerm {
    coefficient: Complex64,
    // application order: first entry acts first
    steps: Vec<Sampled>,
}

/// Matrix-free action of a factorized operator on a grid.
pub struct LineOperator {
    spec: GridSpec,
    prefactor: Complex64,
    terms: Vec<SampledTerm>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

fn collared(f: &SymbolFactor, spec: &GridSpec) -> Vec<Complex64> {
    let n = spec.n;
    let mut v: Vec<Complex64> = (0..n).map(|j| f.eval(spec.x(j))).collect();
    if f.ends_differ() {
        if let Some(left) = f.left_part() {
            let width = ((spec.collar * n as f64).round() as usize).max(1);
            for (i, j) in (n - width..n).enumerate() {
                let t = (i + 1) as f64 / width as f64;
                let w = 0.5 * (1.0 + (PI * t).cos());
                let x = spec.x(j);
                v[j] = w * v[j] + (1.0 - w) * left(x);
            }
        }
    }
    v
}

impl LineOperator {
    pub fn new(op: &FactorizedOperator, spec: GridSpec) -> Result<Self, QuantizeError> {
        spec.check(max_frequency(op))?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(spec.n);
        let ifft = planner.plan_fft_inverse(spec.n);
        let mut terms = Vec::with_capacity(op.terms.len());
        for t in &op.terms {
            let steps = t
                .factors
                .iter()
                .rev()
                .map(|f| match f.side {
                    Side::Momentum => Sampled::Momentum((0..spec.n).map(|k| f.eval(spec.xi(k))).collect()),
                    Side::Position => Sampled::Position(collared(f, &spec)),
                })
                .collect();
            terms.push(SampledTerm { coefficient: t.coefficient, steps });
        }
        Ok(LineOperator { spec, prefactor: op.scalar_prefactor, terms, fft, ifft })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// `out = W v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.spec.n;
        let mut out = vec![c(0.0, 0.0); n];
        let mut buf = vec![c(0.0, 0.0); n];
        let scale = 1.0 / n as f64;
        for t in &self.terms {
            buf.copy_from_slice(v);
            for s in &t.steps {
                match s {
                    Sampled::Position(b) => buf.iter_mut().zip(b).for_each(|(u, b)| *u *= b),
                    Sampled::Momentum(a) => {
                        self.fft.process(&mut buf);
                        buf.iter_mut().zip(a).for_each(|(u, a)| *u *= a * scale);
                        self.ifft.process(&mut buf);
                    }
                }
            }
            let k = t.coefficient * self.prefactor;
            out.iter_mut().zip(&buf).for_each(|(o, b)| *o += k * b);
        }
        out
    }

    /// Applies the operator to every column of a real matrix.
    pub fn apply_columns(&self, h: &DMatrix<f64>) -> DMatrix<Complex64> {
        let n = self.spec.n;
        let cols: Vec<Vec<Complex64>> = (0..h.ncols())
            .into_par_iter()
            .map(|k| {
                let v: Vec<Complex64> = h.column(k).iter().map(|&x| c(x, 0.0)).collect();
                self.apply(&v)
            })
            .collect();
        DMatrix::from_fn(n, h.ncols(), |i, j| cols[j][i])
    }
}

/// Dense quantization on a grid, with the phase-space window used to count
/// defects.
pub struct GridOperator {
    pub spec: GridSpec,
    pub matrix: DMatrix<Complex64>,
    window: DMatrix<f64>,
    action: Option<(LineOperator, LineOperator)>,
}

impl GridOperator {
    /// Wraps an explicit matrix; the window is built from `spec`.
    pub fn from_matrix(spec: GridSpec, matrix: DMatrix<Complex64>) -> Self {
        let window = phase_space_window(&spec, spec.window_radius());
        GridOperator { spec, matrix, window, action: None }
    }

    /// Orthonormal basis of the phase-space disc.
    pub fn window(&self) -> &DMatrix<f64> {
        &self.window
    }

    /// `(W H, W* H)` for the window basis `H`.
    fn windowed(&self) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        match &self.action {
            Some((w, ws)) => (w.apply_columns(&self.window), ws.apply_columns(&self.window)),
            None => {
                let h = self.window.map(|x| c(x, 0.0));
                (&self.matrix * &h, self.matrix.adjoint() * &h)
            }
        }
    }
}

/// Quantizes `op` on the grid: DFT conjugation for momentum factors,
/// diagonal action for position factors with the collar applied.
pub fn line_quantize(op: &FactorizedOperator, spec: GridSpec) -> Result<GridOperator, QuantizeError> {
    let w = LineOperator::new(op, spec)?;
    let ws = LineOperator::new(&op.adjoint(), spec)?;
    let n = spec.n;
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![c(0.0, 0.0); n];
            e[j] = c(1.0, 0.0);
            w.apply(&e)
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    let window = phase_space_window(&spec, spec.window_radius());
    Ok(GridOperator { spec, matrix, window, action: Some((w, ws)) })
}

/// Hermite functions `h_k`, `k < ⌊R²/2⌋`, sampled on the grid and
/// orthonormalized; they fill the phase-space disc of radius `R`.
pub fn phase_space_window(spec: &GridSpec, radius: f64) -> DMatrix<f64> {
    let count = ((radius * radius / 2.0).floor() as usize).max(1);
    let n = spec.n;
    let sqrt_h = spec.spacing().sqrt();
    let mut h = DMatrix::<f64>::zeros(n, count);
    for j in 0..n {
        let u = spec.x(j);
        let h0 = PI.powf(-0.25) * (-u * u / 2.0).exp();
        let mut prev = 0.0;
        let mut cur = h0;
        h[(j, 0)] = h0 * sqrt_h;
        for k in 1..count {
            let next = if k == 1 { 2f64.sqrt() * u * h0 } else { (2.0 / k as f64).sqrt() * u * cur - ((k - 1) as f64 / k as f64).sqrt() * prev };
            prev = cur;
            cur = next;
            h[(j, k)] = next * sqrt_h;
        }
    }
    // Cholesky QR: H L^{-T} has orthonormal columns
    let gram = h.transpose() * &h;
    match gram.cholesky() {
        Some(ch) => {
            let l = ch.l();
            let lt = l.transpose();
            let inv = lt.try_inverse().expect("triangular factor is invertible");
            h * inv
        }
        None => h,
    }
}

/// Numerical kernel and cokernel dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DefectCounts {
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub gap_ok: bool,
}

/// Singular values of a tall complex matrix, ascending, via the Hermitian
/// Gram eigenproblem assembled with real products.
pub fn singular_values(a: &DMatrix<Complex64>) -> Vec<f64> {
    let re = a.map(|z| z.re);
    let im = a.map(|z| z.im);
    let rt = re.transpose();
    let it = im.transpose();
    let gr = &rt * &re + &it * &im;
    let gi = &rt * &im - &it * &re;
    let k = a.ncols();
    let g = DMatrix::from_fn(k, k, |i, j| c(0.5 * (gr[(i, j)] + gr[(j, i)]), 0.5 * (gi[(i, j)] - gi[(j, i)])));
    let mut s: Vec<f64> = g.symmetric_eigenvalues().iter().map(|&e| e.max(0.0).sqrt()).collect();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    s
}

/// Counts singular values of `W H` and `W* H` below `τ_low`; `gap_ok` is
/// false when any lies in `[τ_low, τ_high]`.
pub fn defect_counts(g: &GridOperator, tau_low: f64, tau_high: f64) -> DefectCounts {
    assert!(0.0 < tau_low && tau_low < tau_high && tau_high < 1.0, "need 0 < tau_low < tau_high < 1");
    let (a, b) = g.windowed();
    let (sa, sb) = (singular_values(&a), singular_values(&b));
    let in_gap = |s: &f64| *s >= tau_low && *s <= tau_high;
    DefectCounts {
        dim_ker: sa.iter().filter(|&&s| s < tau_low).count(),
        dim_coker: sb.iter().filter(|&&s| s < tau_low).count(),
        gap_ok: !sa.iter().any(in_gap) && !sb.iter().any(in_gap),
    }
}

/// Smallest singular values of `W H` and `W* H`, for diagnostics.
pub fn smallest_singular_values(g: &GridOperator, count: usize) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = g.windowed();
    let (mut sa, mut sb) = (singular_values(&a), singular_values(&b));
    sa.truncate(count);
    sb.truncate(count);
    (sa, sb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEstimate {
    pub value: Complex64,
    pub truncation_error: f64,
}

impl TraceEstimate {
    pub fn real(value: f64, truncation_error: f64) -> Self {
        TraceEstimate { value: c(value, 0.0), truncation_error }
    }
}

/// True when `refined` has a smaller truncation error than `coarse`, or both
/// sit at the round-off floor.
pub fn error_shrinks(coarse: f64, refined: f64) -> bool {
    refined < coarse || (refined <= ROUNDOFF_FLOOR && coarse <= ROUNDOFF_FLOOR)
}

/// Trace of `W W* − W* W` over the phase-space window of `spec`, with `W`
/// and `W*` quantized on the grid twice as wide. The truncation error is
/// the contribution of the outer half of the window.
pub fn window_trace_index(op: &FactorizedOperator, spec: GridSpec) -> Result<TraceEstimate, QuantizeError> {
    spec.check(max_frequency(op))?;
    let big = spec.enlarged();
    let w = LineOperator::new(op, big)?;
    let ws = LineOperator::new(&op.adjoint(), big)?;
    let h = phase_space_window(&big, spec.window_radius());
    let a = w.apply_columns(&h);
    let b = ws.apply_columns(&h);
    let per: Vec<f64> = (0..h.ncols())
        .map(|k| b.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>() - a.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect();
    let value: f64 = per.iter().sum();
    let outer: f64 = per[per.len() / 2..].iter().sum();
    Ok(TraceEstimate::real(value, outer.abs()))
}

/// Largest relative residual of `W₁* W₂ v − W₃ v` on interior Gaussians,
/// where `W₁ = W((in,κ);(1/2,0))`, `W₂ = W((in,κ);(m',κ'))` and
/// `W₃ = W((1/2,0);(m',κ'))`.
pub fn chain_rule_residual(imaginary: &ParamPoint, reference: &ParamPoint, spec: GridSpec) -> Result<f64, QuantizeError> {
    let w1 = model::wave_factors(&ParamPair::against_free(*imaginary))?;
    let w2 = model::wave_factors(&ParamPair::new(*imaginary, *reference))?;
    let w3 = model::wave_factors(&ParamPair::new(ParamPoint::free(), *reference))?;
    let w1s = LineOperator::new(&w1.adjoint(), spec)?;
    let w2 = LineOperator::new(&w2, spec)?;
    let w3 = LineOperator::new(&w3, spec)?;
    let mut worst: f64 = 0.0;
    for centre in [-5.0, 0.0, 5.0] {
        for width in [1.0, 3.0] {
            let v: Vec<Complex64> = (0..spec.n).map(|j| c((-(spec.x(j) - centre).powi(2) / (2.0 * width * width)).exp(), 0.0)).collect();
            let lhs = w1s.apply(&w2.apply(&v));
            let rhs = w3.apply(&v);
            let num: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(num / den);
        }
    }
    Ok(worst)
}

/// Floquet-Bloch discretization of a π/n-periodic operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloquetSpec {
    pub n: f64,
    pub k: usize,
    pub k_big: usize,
    pub q: usize,
}

impl FloquetSpec {
    pub fn new(n: f64, k: usize, k_big: usize, q: usize) -> Self {
        FloquetSpec { n, k, k_big, q }
    }

    /// Defaults `K = 48`, `K_big = 128`, `Q = 32`.
    pub fn with_defaults(n: f64) -> Self {
        FloquetSpec { n, k: 48, k_big: 128, q: 32 }
    }

    pub fn doubled(&self) -> Self {
        FloquetSpec { n: self.n, k: 2 * self.k, k_big: 2 * self.k_big, q: 2 * self.q }
    }

    fn check(&self) -> Result<(), QuantizeError> {
        if !(self.n > 0.0) {
            return Err(QuantizeError::InvalidSpec("n must be positive".into()));
        }
        if self.k_big < 2 * self.k {
            return Err(QuantizeError::InvalidSpec(format!("K_big = {} must be at least 2K = {}", self.k_big, 2 * self.k)));
        }
        if self.q < 16 {
            return Err(QuantizeError::InvalidSpec(format!("Q = {} must be at least 16", self.q)));
        }
        Ok(())
    }
}

/// Toeplitz bandwidth with `e^{−πn ℓ} < 1e−12`, capped at 80.
pub fn default_lmax(n: f64) -> usize {
    ((12.0 * 10f64.ln() / (PI * n.abs())).ceil() as usize).clamp(1, 80)
}

/// Matrix of one fiber in the basis `e^{i(θ+2nk)x}`, `|k| ≤ K_big`.
#[derive(Debug, Clone)]
pub struct FiberOperator {
    pub theta: f64,
    pub k_big: usize,
    pub matrix: DMatrix<Complex64>,
}

enum FiberStep {
    Momentum(ScalarFn),
    Position(Vec<Complex64>),
}

/// Precomputed Fourier data of a periodic factorized operator.
pub struct FiberQuantizer {
    fspec: FloquetSpec,
    lmax: usize,
    prefactor: Complex64,
    terms: Vec<(Complex64, Vec<FiberStep>)>,
}

fn check_periodic(f: &SymbolFactor, period: f64) -> Result<(), QuantizeError> {
    let ok_class = match &f.class {
        FactorClass::Constant => true,
        FactorClass::Periodic { period: p } => (p - period).abs() <= 1e-12 * period,
        _ => false,
    };
    let mut defect: f64 = 0.0;
    for j in 0..64 {
        let x = -7.3 + 0.37 * j as f64;
        defect = defect.max((f.eval(x + period) - f.eval(x)).norm());
    }
    if !ok_class || defect > 1e-9 {
        return Err(QuantizeError::Periodicity { label: f.label.clone(), period, defect });
    }
    Ok(())
}

impl FiberQuantizer {
    pub fn new(op: &FactorizedOperator, fspec: FloquetSpec, lmax: usize) -> Result<Self, QuantizeError> {
        let fspec = FloquetSpec { n: fspec.n.abs(), ..fspec };
        fspec.check()?;
        let period = PI / fspec.n;
        let mut terms = Vec::new();
        for t in &op.terms {
            let mut steps = Vec::new();
            for f in t.factors.iter().rev() {
                match f.side {
                    Side::Momentum => steps.push(FiberStep::Momentum(f.eval_fn())),
                    Side::Position => {
                        check_periodic(f, period)?;
                        let g = f.eval_fn();
                        steps.push(FiberStep::Position(model::fourier_coefficients(&*g, period, lmax, model::FOURIER_SAMPLES)));
                    }
                }
            }
            terms.push((t.coefficient, steps));
        }
        Ok(FiberQuantizer { fspec, lmax, prefactor: op.scalar_prefactor, terms })
    }

    /// The fiber at quasi-momentum θ.
    pub fn fiber(&self, theta: f64) -> FiberOperator {
        let kb = self.fspec.k_big as i64;
        let d = (2 * kb + 1) as usize;
        let n = self.fspec.n;
        let l = self.lmax as i64;
        let mut total = DMatrix::<Complex64>::zeros(d, d);
        for (coef, steps) in &self.terms {
            let mut m = DMatrix::<Complex64>::identity(d, d);
            for s in steps {
                match s {
                    FiberStep::Momentum(a) => {
                        for i in 0..d {
                            let xi = theta + 2.0 * n * (i as i64 - kb) as f64;
                            let v = a(xi);
                            m.row_mut(i).iter_mut().for_each(|z| *z *= v);
                        }
                    }
                    FiberStep::Position(cl) => {
                        // (T M)[i, j] = Σ_ℓ c_ℓ M[i − ℓ, j]
                        let mut out = DMatrix::<Complex64>::zeros(d, d);
                        for j in 0..d {
                            let col = m.column(j);
                            let mut oc = out.column_mut(j);
                            for ell in -l..=l {
                                let cv = cl[(ell + l) as usize];
                                if cv == c(0.0, 0.0) {
                                    continue;
                                }
                                let lo = ell.max(0) as usize;
                                let hi = (d as i64 + ell.min(0)) as usize;
                                for i in lo..hi {
                                    oc[i] += cv * col[(i as i64 - ell) as usize];
                                }
                            }
                        }
                        m = out;
                    }
                }
            }
            total += m * (*coef * self.prefactor);
        }
        FiberOperator { theta, k_big: self.fspec.k_big, matrix: total }
    }
}

/// Fiber of `op` at θ.
pub fn fiber_quantize(op: &FactorizedOperator, theta: f64, fspec: FloquetSpec, lmax: usize) -> Result<FiberOperator, QuantizeError> {
    Ok(FiberQuantizer::new(op, fspec, lmax)?.fiber(theta))
}

/// Trapezoid nodes `θ_q = 2n q / Q`.
pub fn theta_nodes(fspec: &FloquetSpec) -> Vec<f64> {
    (0..fspec.q).map(|q| 2.0 * fspec.n.abs() * q as f64 / fspec.q as f64).collect()
}

/// Central-block traces `(tr WW*, tr W*W, tr W)` with block half-width `k`.
fn central_traces(w: &DMatrix<Complex64>, k_big: usize, k: usize) -> (f64, f64, Complex64) {
    let lo = k_big - k;
    let hi = k_big + k;
    let mut rows = 0.0;
    let mut cols = 0.0;
    let mut diag = c(0.0, 0.0);
    for i in lo..=hi {
        rows += w.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>();
        cols += w.column(i).iter().map(|z| z.norm_sqr()).sum::<f64>();
        diag += w[(i, i)];
    }
    (rows, cols, diag)
}

/// θ-averaged central trace of a periodic operator.
pub fn fiber_trace(op: &FactorizedOperator, fspec: FloquetSpec, lmax: usize) -> Result<TraceEstimate, QuantizeError> {
    let fq = FiberQuantizer::new(op, fspec, lmax)?;
    let nodes = theta_nodes(&fspec);
    let vals: Vec<(Complex64, Complex64)> = nodes
        .par_iter()
        .map(|&th| {
            let f = fq.fiber(th);
            (central_traces(&f.matrix, fspec.k_big, fspec.k).2, central_traces(&f.matrix, fspec.k_big, fspec.k / 2).2)
        })
        .collect();
    let q = vals.len() as f64;
    let full: Complex64 = vals.iter().map(|v| v.0).sum::<Complex64>() / q;
    let half_k: Complex64 = vals.iter().map(|v| v.1).sum::<Complex64>() / q;
    let half_q: Complex64 = vals.iter().step_by(2).map(|v| v.0).sum::<Complex64>() / (q / 2.0).ceil();
    Ok(TraceEstimate { value: full, truncation_error: (full - half_k).norm() + (full - half_q).norm() })
}

/// Traces of `[W, W*]`, `1 − WW*` and `1 − W*W` for the periodic pair
/// `((in,κ);(1/2,0))`, formed at `K_big` and traced on the central block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorTraces {
    pub trace_full: TraceEstimate,
    pub trace_coker: TraceEstimate,
    pub trace_ker: TraceEstimate,
}

pub fn commutator_trace_periodic(pair: &ParamPair, fspec: FloquetSpec, lmax: usize) -> Result<CommutatorTraces, QuantizeError> {
    if pair.target.branch != model::Branch::ImaginaryBranch || pair.reference != ParamPoint::free() {
        return Err(QuantizeError::Unsupported("commutator trace needs the pair ((in,κ);(1/2,0))".into()));
    }
    let w = model::wave_factors(pair)?;
    let fq = FiberQuantizer::new(&w, fspec, lmax)?;
    let nodes = theta_nodes(&fspec);
    let (k, kb) = (fspec.k, fspec.k_big);
    // per node: (coker, ker) at K and at K/2
    let vals: Vec<[f64; 4]> = nodes
        .par_iter()
        .map(|&th| {
            let f = fq.fiber(th);
            let (r, cl, _) = central_traces(&f.matrix, kb, k);
            let (r2, c2, _) = central_traces(&f.matrix, kb, k / 2);
            let (d, d2) = ((2 * k + 1) as f64, (2 * (k / 2) + 1) as f64);
            [d - r, d - cl, d2 - r2, d2 - c2]
        })
        .collect();
    let q = vals.len() as f64;
    let mean = |i: usize| vals.iter().map(|v| v[i]).sum::<f64>() / q;
    let mean_half_q = |i: usize| {
        let sel: Vec<f64> = vals.iter().step_by(2).map(|v| v[i]).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let est = |i: usize, j: usize| {
        let v = mean(i);
        TraceEstimate::real(v, (v - mean(j)).abs() + (v - mean_half_q(i)).abs())
    };
    let coker = est(0, 2);
    let ker = est(1, 3);
    // [W, W*] = (1 − W*W) − (1 − WW*)
    let full = TraceEstimate::real(ker.value.re - coker.value.re, coker.truncation_error + ker.truncation_error);
    Ok(CommutatorTraces { trace_full: full, trace_coker: coker, trace_ker: ker })
}

/// `−ς c_{−1} (e^{πn} − e^{−πn})` with `c_{−1}` computed numerically.
pub fn analytic_commutator_trace(n: f64, kappa: Complex64) -> Result<Complex64, QuantizeError> {
    let p = model::validate_sa(c(0.0, n), kappa)?;
    let coef = model::f_fourier(n, kappa, 2)?;
    let cm1 = coef[1];
    Ok(-p.varsigma * cm1 * (2.0 * (PI * n).sinh()))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut k = c(0.0, 0.0);
    let mut g = c(0.0, 0.0);
    for i in 0..7 {
        let x = half * GK_NODES[i];
        let s = f(mid - x) + f(mid + x);
        k += GK_WEIGHTS_K[i] * s;
        if i % 2 == 1 {
            g += GK_WEIGHTS_G[i / 2] * s;
        }
    }
    let fm = f(mid);
    k += GK_WEIGHTS_K[7] * fm;
    g += GK_WEIGHTS_G[3] * fm;
    (k * half, ((k - g) * half).norm())
}

/// Adaptive Gauss-Kronrod (7, 15) quadrature over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> (Complex64, f64) {
    let mut stack = vec![(a, b, 0u32)];
    let mut total = c(0.0, 0.0);
    let mut err = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        if e <= tol * (hi - lo) / (b - a) || depth >= 40 {
            total += v;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    (total, err)
}

/// `∫_ℝ a(ξ) dξ` after the map `ξ = t/(1 − t²)`, with a decay test.
pub fn integrate_line(a: &dyn Fn(f64) -> Complex64) -> Result<(Complex64, f64), QuantizeError> {
    let tail = [1e4, -1e4, 1e6, -1e6].iter().map(|&x: &f64| a(x).norm() * x.abs()).fold(0.0, f64::max);
    if !(tail <= 1e-3) {
        return Err(QuantizeError::DecayViolation { tail });
    }
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return c(0.0, 0.0);
        }
        let x = t / d;
        let v = a(x);
        if v == c(0.0, 0.0) {
            v
        } else {
            v * (1.0 + t * t) / (d * d)
        }
    };
    Ok(integrate(&g, -1.0, 1.0, 1e-13))
}

/// Average of a periodic function over one period by the trapezoid rule.
pub fn period_mean(b: &dyn Fn(f64) -> Complex64, period: f64) -> Complex64 {
    let m = model::FOURIER_SAMPLES;
    (0..m).map(|j| b(period * j as f64 / m as f64)).sum::<Complex64>() / m as f64
}

/// `Trace_n(a(D) b(X)) = (1/2n) ∫ a × (n/π) ∫₀^{π/n} b`.
pub fn trace_n_generator(a: &dyn Fn(f64) -> Complex64, b: &dyn Fn(f64) -> Complex64, n: f64) -> Result<TraceEstimate, QuantizeError> {
    let (ia, ea) = integrate_line(a)?;
    let mb = period_mean(b, PI / n);
    Ok(TraceEstimate { value: ia / (2.0 * n) * mb, truncation_error: ea / (2.0 * n) * mb.norm() })
}

/// An almost-periodic position symbol.
#[derive(Clone)]
pub enum ApSymbol {
    /// Finite sum `Σ c_j e^{iω_j x}` given as `(ω_j, c_j)`.
    Trig(Vec<(f64, Complex64)>),
    Periodic { f: ScalarFn, period: f64 },
    General { f: ScalarFn, frequencies: Vec<f64> },
}

impl ApSymbol {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            ApSymbol::Trig(terms) => terms.iter().map(|(w, cf)| cf * c(0.0, w * x).exp()).sum(),
            ApSymbol::Periodic { f, .. } | ApSymbol::General { f, .. } => f(x),
        }
    }

    fn smallest_frequency(&self) -> f64 {
        let freqs: Vec<f64> = match self {
            ApSymbol::Trig(t) => t.iter().map(|(w, _)| w.abs()).collect(),
            ApSymbol::Periodic { period, .. } => vec![2.0 * PI / period],
            ApSymbol::General { frequencies, .. } => frequencies.iter().map(|w| w.abs()).collect(),
        };
        freqs.into_iter().filter(|w| *w > 1e-12).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanMethod {
    ClosedForm,
    LongWindow(f64),
}

/// Mean value `M(b)`; the truncation error of a window average is bounded
/// by `2 sup|b| / (ω_min T)`.
pub fn mean_value(b: &ApSymbol, method: MeanMethod) -> Result<TraceEstimate, QuantizeError> {
    match method {
        MeanMethod::ClosedForm => match b {
            ApSymbol::Trig(t) => {
                let v = t.iter().filter(|(w, _)| w.abs() <= 1e-12).map(|(_, cf)| *cf).sum();
                Ok(TraceEstimate { value: v, truncation_error: 0.0 })
            }
            ApSymbol::Periodic { f, period } => Ok(TraceEstimate { value: period_mean(&**f, *period), truncation_error: 0.0 }),
            ApSymbol::General { .. } => Err(QuantizeError::Unsupported("closed-form mean needs a trigonometric sum or a periodic symbol".into())),
        },
        MeanMethod::LongWindow(t) => {
            if !(t > 0.0) {
                return Err(QuantizeError::InvalidSpec("window half-width must be positive".into()));
            }
            let steps = ((2.0 * t / 0.01).ceil() as usize).max(2) & !1;
            let h = 2.0 * t / steps as f64;
            let mut acc = b.eval(-t) + b.eval(t);
            let mut sup: f64 = 0.0;
            for j in 1..steps {
                let v = b.eval(-t + h * j as f64);
                sup = sup.max(v.norm());
                acc += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let value = acc * h / 3.0 / (2.0 * t);
            let wmin = b.smallest_frequency();
            let bound = if wmin.is_finite() { 2.0 * sup / (wmin * t) } else { 0.0 };
            Ok(TraceEstimate { value, truncation_error: bound })
        }
    }
}

/// `Trace_ap(a(D) b(X)) = ∫ a × M(b)`.
pub fn trace_ap_generator(a: &dyn Fn(f64) -> Complex64, b: &ApSymbol) -> Result<TraceEstimate, QuantizeError> {
    let (ia, ea) = integrate_line(a)?;
    let m = match mean_value(b, MeanMethod::ClosedForm) {
        Ok(m) => m,
        Err(QuantizeError::Unsupported(_)) => mean_value(b, MeanMethod::LongWindow(1e3))?,
        Err(e) => return Err(e),
    };
    Ok(TraceEstimate { value: ia * m.value, truncation_error: ea * m.value.norm() + ia.norm() * m.truncation_error })
}

/// `Trace_ap(1_p(H_{in,κ})) = 2n · Trace_n(1 − WW*)` for `W = W((in,κ);(1/2,0))`.
pub fn projection_trace_ap(p: &ParamPoint, fspec: FloquetSpec) -> Result<TraceEstimate, QuantizeError> {
    if p.branch != model::Branch::ImaginaryBranch {
        return Err(QuantizeError::Model(crate::error::ModelError::BranchMismatch("projection trace needs imaginary m".into())));
    }
    let n = p.m.im.abs();
    let fspec = FloquetSpec { n, ..fspec };
    let t = commutator_trace_periodic(&ParamPair::against_free(*p), fspec, default_lmax(n))?;
    Ok(TraceEstimate::real(2.0 * n * t.trace_coker.value.re, 2.0 * n * t.trace_coker.truncation_error))
}

/// Header of a binary matrix dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub n: u64,
    pub l: f64,
    pub k: u64,
    pub theta: f64,
}

/// Magic bytes of a matrix dump.
pub const DUMP_MAGIC: &[u8; 8] = b"IXLBMAT1";

/// Writes `magic, rows: u64, cols: u64, N: u64, L: f64, K: u64, θ: f64`
/// followed by the entries row-major as `(re, im)` pairs, all little-endian.
pub fn dump_matrix(path: &Path, matrix: &DMatrix<Complex64>, header: DumpHeader) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(matrix.nrows() as u64).to_le_bytes())?;
    w.write_all(&(matrix.ncols() as u64).to_le_bytes())?;
    w.write_all(&header.n.to_le_bytes())?;
    w.write_all(&header.l.to_le_bytes())?;
    w.write_all(&header.k.to_le_bytes())?;
    w.write_all(&header.theta.to_le_bytes())?;
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            let z = matrix[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()
}

/// Reads a dump written by [`dump_matrix`].
pub fn read_matrix_dump(path: &Path) -> std::io::Result<(DumpHeader, DMatrix<Complex64>)> {
    let bytes = std::fs::read(path)?;
    let bad = || std::io::Error::new(std::io::ErrorKind::InvalidData, "malformed matrix dump");
    if bytes.len() < 56 || &bytes[..8] != DUMP_MAGIC {
        return Err(bad());
    }
    let u = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (rows, cols) = (u(8) as usize, u(16) as usize);
    let header = DumpHeader { n: u(24), l: f(32), k: u(40), theta: f(48) };
    if bytes.len() != 56 + 16 * rows * cols {
        return Err(bad());
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| {
        let o = 56 + 16 * (i * cols + j);
        c(f(o), f(o + 8))
    });
    Ok((header, m))
}

/// Operator norm estimate by power iteration on `W* W`.
pub fn norm_estimate(m: &DMatrix<Complex64>, iterations: usize) -> f64 {
    let n = m.ncols();
    let mut v = DVector::<Complex64>::from_fn(n, |i, _| c(1.0 + (i as f64 * 0.618).sin(), 0.0));
    let mut est = 0.0;
    for _ in 0..iterations {
        let nv = v.norm();
        v /= c(nv, 0.0);
        let w = m * &v;
        est = w.norm();
        v = m.adjoint() * w;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_sa;

    fn wave(m: f64, kappa: f64) -> FactorizedOperator {
        let p = validate_sa(c(m, 0.0), c(kappa, 0.0)).unwrap();
        model::wave_factors(&ParamPair::against_free(p)).unwrap()
    }

    #[test]
    fn grid_checks_resolution() {
        let w = wave(0.5, 1.0);
        assert!(matches!(LineOperator::new(&w, GridSpec::new(40.0, 128, 0.1)), Err(QuantizeError::Resolution { .. })));
        assert!(matches!(LineOperator::new(&w, GridSpec::new(40.0, 1000, 0.1)), Err(QuantizeError::InvalidSpec(_))));
        assert!(LineOperator::new(&w, GridSpec::default()).is_ok());
    }

    #[test]
    fn window_is_orthonormal() {
        let spec = GridSpec::default();
        let h = phase_space_window(&spec, spec.window_radius());
        assert_eq!(h.ncols(), 202);
        let g = h.transpose() * &h;
        let err = (g - DMatrix::<f64>::identity(202, 202)).abs().max();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn line_counts_and_traces() {
        let spec = GridSpec::default();
        let cases = [(0.5, -1.0, 0, 1, -1.0), (0.5, 1.0, 0, 0, 0.0), (0.2, -3.0, 0, 1, -1.0), (0.8, 2.0, 0, 0, 0.0)];
        for (m, k, ker, coker, tr) in cases {
            let w = wave(m, k);
            let g = line_quantize(&w, spec).unwrap();
            let d = defect_counts(&g, TAU_LOW, TAU_HIGH);
            assert_eq!((d.dim_ker, d.dim_coker, d.gap_ok), (ker, coker, true), "m={m} k={k}");
            let t = window_trace_index(&w, spec).unwrap();
            assert!((t.value.re - tr).abs() < 1e-5, "m={m} k={k} trace {:?}", t);
            assert!(t.truncation_error < 1e-5);
        }
    }

    #[test]
    fn unitary_free_pair_is_identity() {
        let w = FactorizedOperator::identity();
        let spec = GridSpec::new(10.0, 256, 0.1);
        let g = line_quantize(&w, spec).unwrap();
        let err = (&g.matrix - DMatrix::<Complex64>::identity(256, 256)).map(|z| z.norm()).max();
        assert!(err < 1e-12);
    }

    #[test]
    fn fiber_traces_match_analytic() {
        for (n, kappa) in [(0.5, c(1.0, 0.0)), (1.0, c(0.0, PI / 4.0).exp()), (2.0, c(-1.0, 0.0))] {
            let p = validate_sa(c(0.0, n), kappa).unwrap();
            let pair = ParamPair::against_free(p);
            let t = commutator_trace_periodic(&pair, FloquetSpec::with_defaults(n), default_lmax(n)).unwrap();
            let a = analytic_commutator_trace(n, kappa).unwrap();
            assert!((t.trace_full.value.re - a.re).abs() < 1e-6, "n={n}: {:?} vs {a}", t.trace_full);
            assert!(a.im.abs() < 1e-10);
            assert!((t.trace_ker.value.re - t.trace_coker.value.re - t.trace_full.value.re).abs() < 1e-12);
        }
    }

    #[test]
    fn fiber_rejects_non_periodic() {
        let w = wave(0.5, 1.0);
        assert!(matches!(fiber_quantize(&w, 0.0, FloquetSpec::with_defaults(1.0), 10), Err(QuantizeError::Periodicity { .. })));
    }

    #[test]
    fn trace_n_of_gaussian_times_cosine() {
        let a = |x: f64| c((-x * x).exp(), 0.0);
        let b = |x: f64| c(2.0 + (2.0 * x).cos(), 0.0);
        let t = trace_n_generator(&a, &b, 1.0).unwrap();
        assert!((t.value.re - PI.sqrt()).abs() < 1e-12, "{t:?}");
        let slow = |x: f64| c(1.0 / (1.0 + x.abs()).sqrt(), 0.0);
        assert!(matches!(trace_n_generator(&slow, &b, 1.0), Err(QuantizeError::DecayViolation { .. })));
    }

    #[test]
    fn ap_mean_values() {
        let s2 = 2f64.sqrt();
        let b = ApSymbol::Trig(vec![(0.0, c(1.5, 0.0)), (1.0, c(1.0, 0.0)), (s2, c(0.0, 2.0))]);
        assert_eq!(mean_value(&b, MeanMethod::ClosedForm).unwrap().value, c(1.5, 0.0));
        let long = mean_value(&b, MeanMethod::LongWindow(1000.0)).unwrap();
        assert!((long.value - c(1.5, 0.0)).norm() <= long.truncation_error);
        let a = |x: f64| c(1.0 / (1.0 + x * x), 0.0);
        let t = trace_ap_generator(&a, &b).unwrap();
        assert!((t.value - c(1.5 * PI, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn dump_round_trip() {
        let m = DMatrix::from_fn(3, 2, |i, j| c(i as f64, -(j as f64) * 0.5));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let h = DumpHeader { n: 3, l: 1.5, k: 7, theta: 0.25 };
        dump_matrix(&path, &m, h).unwrap();
        let (h2, m2) = read_matrix_dump(&path).unwrap();
        assert_eq!(h, h2);
        assert_eq!(m, m2);
    }

    #[test]
    fn error_shrink_rule() {
        assert!(error_shrinks(1e-3, 1e-4));
        assert!(!error_shrinks(1e-4, 1e-3));
        assert!(error_shrinks(3e-12, 5e-12));
    }
}


#[cfg(test)]
mod trace_tests {
    use super::*;
    use crate::model::validate_sa;

    fn gauss(x: f64) -> Complex64 {
        c((-x * x).exp(), 0.0)
    }

    #[test]
    fn trace_n_closed_values() {
        let one = |_: f64| c(1.0, 0.0);
        let t = trace_n_generator(&gauss, &one, 1.0).unwrap();
        assert!((t.value.re - PI.sqrt() / 2.0).abs() < 1e-10);
        let wave = |x: f64| c(0.0, 2.0 * x).exp();
        assert!(trace_n_generator(&gauss, &wave, 1.0).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn trace_ap_closed_values() {
        let t = trace_ap_generator(&gauss, &ApSymbol::Trig(vec![(0.0, c(1.0, 0.0))])).unwrap();
        assert!((t.value.re - PI.sqrt()).abs() < 1e-10);
        let t = trace_ap_generator(&gauss, &ApSymbol::Trig(vec![(1.0, c(1.0, 0.0))])).unwrap();
        assert!(t.value.norm() < 1e-12);
        for n in [0.5, 1.0, 2.0] {
            let b: ScalarFn = Arc::new(move |x| c(1.0, 0.0) + 0.5 * c(0.0, 2.0 * n * x).exp() + c(0.0, 0.3) * c(0.0, 4.0 * n * x).cos());
            let ap = trace_ap_generator(&gauss, &ApSymbol::Periodic { f: b.clone(), period: PI / n }).unwrap();
            let tn = trace_n_generator(&gauss, &*b, n).unwrap();
            assert!((ap.value - 2.0 * n * tn.value).norm() < 1e-8);
        }
    }

    #[test]
    fn mean_values() {
        let k = c(0.3, -1.2);
        assert_eq!(mean_value(&ApSymbol::Trig(vec![(0.0, k)]), MeanMethod::ClosedForm).unwrap().value, k);
        for lam in [0.7, 3.0] {
            let b = ApSymbol::Trig(vec![(lam, c(1.0, 0.0))]);
            assert_eq!(mean_value(&b, MeanMethod::ClosedForm).unwrap().value, c(0.0, 0.0));
            let long = mean_value(&b, MeanMethod::LongWindow(1e3)).unwrap();
            assert!(long.value.norm() <= 2.0 / (lam * 1e3));
        }
        let n = 1.3;
        let f: ScalarFn = Arc::new(move |x| c(2.0 + (2.0 * n * x).sin(), (4.0 * n * x).cos().powi(2)));
        let m = mean_value(&ApSymbol::Periodic { f, period: PI / n }, MeanMethod::ClosedForm).unwrap();
        assert!((m.value - c(2.0, 0.5)).norm() < 1e-10);
        let general = ApSymbol::General { f: Arc::new(|x| c(x.cos(), 0.0)), frequencies: vec![1.0] };
        assert!(matches!(mean_value(&general, MeanMethod::ClosedForm), Err(QuantizeError::Unsupported(_))));
    }

    #[test]
    fn projection_traces() {
        let p = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        let t = projection_trace_ap(&p, FloquetSpec::with_defaults(1.0)).unwrap();
        assert!((t.value.re - 2.0).abs() < 0.1);
        let q = validate_sa(c(0.0, 0.5), c(0.0, 1.0)).unwrap();
        let u = projection_trace_ap(&q, FloquetSpec::with_defaults(0.5)).unwrap();
        assert!((u.value.re - 1.0).abs() < 0.1);
        assert!((u.value.re - t.value.re + 1.0).abs() < 0.1);
    }

    #[test]
    fn analytic_trace_values() {
        for (n, k) in [(1.0, c(1.0, 0.0)), (0.5, c(0.0, PI / 4.0).exp())] {
            assert!((analytic_commutator_trace(n, k).unwrap() + 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn window_trace_trivial_pairs() {
        let spec = GridSpec::default();
        let id = window_trace_index(&FactorizedOperator::identity(), spec).unwrap();
        assert!(id.value.norm() < 1e-8);
        let p = validate_sa(c(0.5, 0.0), c(0.0, 0.0)).unwrap();
        let w = model::wave_factors(&ParamPair::against_free(p)).unwrap();
        assert!(window_trace_index(&w, spec).unwrap().value.norm() < 0.1);
    }

    #[test]
    fn equal_size_commutator_is_traceless() {
        let p = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        let w = model::wave_factors(&ParamPair::against_free(p)).unwrap();
        let fib = fiber_quantize(&w, 0.4, FloquetSpec::with_defaults(1.0), default_lmax(1.0)).unwrap();
        let kb = 128;
        let k = 48;
        let pw = fib.matrix.view((kb - k, kb - k), (2 * k + 1, 2 * k + 1)).into_owned();
        let comm = &pw * pw.adjoint() - pw.adjoint() * &pw;
        assert!(comm.trace().norm() < 1e-10);
    }

    #[test]
    fn default_bandwidth() {
        for n in [0.3, 1.0, 2.0] {
            let l = default_lmax(n);
            assert!((-PI * n * l as f64).exp() < 1e-12 || l == 80);
        }
        assert_eq!(default_lmax(0.01), 80);
    }
}
