//! The operator model: self-adjoint parameters, point spectra, the scattering
//! symbol, the factorized wave operators, triangle symbols, periodic
//! asymptotic parts and the Fourier data of `F_{in,κ}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::specfn::{self, Direction};

/// Tolerance on the realness and unit-modulus constraints.
pub const SA_TOL: f64 = 1e-9;

/// Shared scalar function of one real variable.
pub type ScalarFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    RealBranch,
    ImaginaryBranch,
}

/// A validated self-adjoint parameter `(m, κ)` with cached `ς`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint {
    pub m: Complex64,
    pub kappa: Complex64,
    pub branch: Branch,
    pub varsigma: Complex64,
}

impl ParamPoint {
    /// The free reference point `(1/2, 0)`.
    pub fn free() -> Self {
        ParamPoint { m: c(0.5, 0.0), kappa: c(0.0, 0.0), branch: Branch::RealBranch, varsigma: c(0.0, 0.0) }
    }

    /// Real order for the real branch, `n` with `m = in` for the imaginary one.
    pub fn order(&self) -> f64 {
        match self.branch {
            Branch::RealBranch => self.m.re,
            Branch::ImaginaryBranch => self.m.im,
        }
    }

    pub fn is_uncoupled(&self) -> bool {
        self.varsigma == c(0.0, 0.0)
    }
}

/// Which of the two wave operators `W^∓` a pair describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveSign {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPair {
    pub target: ParamPoint,
    pub reference: ParamPoint,
    pub sign: WaveSign,
}

impl ParamPair {
    pub fn new(target: ParamPoint, reference: ParamPoint) -> Self {
        ParamPair { target, reference, sign: WaveSign::Minus }
    }

    pub fn with_sign(mut self, sign: WaveSign) -> Self {
        self.sign = sign;
        self
    }

    /// The pair `(target; (1/2, 0))`.
    pub fn against_free(target: ParamPoint) -> Self {
        Self::new(target, ParamPoint::free())
    }
}

/// Checks `(m, κ)` against the self-adjoint parameter set.
pub fn validate_sa(m: Complex64, kappa: Complex64) -> Result<ParamPoint, ModelError> {
    if !(m.re.is_finite() && m.im.is_finite() && kappa.re.is_finite() && kappa.im.is_finite()) {
        return Err(ModelError::NotSelfAdjoint("parameters must be finite".into()));
    }
    if m.norm() <= SA_TOL {
        return Err(ModelError::MExcluded);
    }
    if m.im.abs() <= SA_TOL {
        let mr = m.re;
        if mr <= -1.0 || mr >= 1.0 {
            return Err(ModelError::NotSelfAdjoint(format!("real m = {mr} must lie in (-1, 1)")));
        }
        if kappa.im.abs() > SA_TOL {
            return Err(ModelError::NotSelfAdjoint(format!("kappa = {kappa} must be real for real m")));
        }
        let m = c(mr, 0.0);
        let kappa = c(kappa.re, 0.0);
        let mut varsigma = specfn::varsigma(m, kappa)?;
        varsigma.im = 0.0;
        return Ok(ParamPoint { m, kappa, branch: Branch::RealBranch, varsigma });
    }
    if m.re.abs() <= SA_TOL {
        let r = kappa.norm();
        if (r - 1.0).abs() > SA_TOL {
            return Err(ModelError::NotSelfAdjoint(format!("|kappa| = {r} must be 1 for imaginary m")));
        }
        let m = c(0.0, m.im);
        let kappa = kappa / r;
        let varsigma = specfn::varsigma(m, kappa)?;
        return Ok(ParamPoint { m, kappa, branch: Branch::ImaginaryBranch, varsigma });
    }
    Err(ModelError::NotSelfAdjoint(format!("m = {m} is neither real nor purely imaginary")))
}

/// Point spectrum of `H_{m,κ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EigenvalueSet {
    Finite(Vec<f64>),
    Lattice { lambda0: f64, ratio: f64 },
}

impl EigenvalueSet {
    /// Number of eigenvalues, `None` for an infinite lattice.
    pub fn count(&self) -> Option<usize> {
        match self {
            EigenvalueSet::Finite(v) => Some(v.len()),
            EigenvalueSet::Lattice { .. } => None,
        }
    }

    /// Lattice element `λ₀ · ratio^j`.
    pub fn lattice_element(&self, j: i64) -> Option<f64> {
        match self {
            EigenvalueSet::Lattice { lambda0, ratio } => Some(lambda0 * ratio.powf(j as f64)),
            EigenvalueSet::Finite(_) => None,
        }
    }
}

fn arg_0_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Eigenvalues from the logarithm branch scan (real `m`) or the geometric
/// lattice (imaginary `m`).
pub fn eigenvalues(p: &ParamPoint) -> EigenvalueSet {
    match p.branch {
        Branch::RealBranch => {
            if p.is_uncoupled() {
                return EigenvalueSet::Finite(Vec::new());
            }
            let m = p.m.re;
            let s = p.varsigma;
            let ln_abs = s.norm().ln();
            let arg = s.arg();
            // |arg + 2πk| < π|m| bounds k to a few values
            let kmax = (m.abs() / 2.0).ceil() as i64 + 1;
            let mut out = Vec::new();
            for k in -kmax..=kmax {
                let w = c(ln_abs, arg + 2.0 * PI * k as f64) / m;
                if (w.im.abs() - PI).abs() <= 1e-9 {
                    log::warn!("DegenerateBranch: Im(w) = {} sits on the boundary of (-pi, pi)", w.im);
                    continue;
                }
                if w.im.abs() < PI {
                    let lambda = -4.0 * (-w).exp();
                    if lambda.im.abs() > 1e-9 * lambda.norm() {
                        log::warn!("non-real eigenvalue candidate {lambda} discarded");
                        continue;
                    }
                    out.push(lambda.re);
                }
            }
            out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            EigenvalueSet::Finite(out)
        }
        Branch::ImaginaryBranch => {
            let n = p.m.im;
            let a = arg_0_2pi(p.varsigma);
            EigenvalueSet::Lattice { lambda0: -4.0 * (-a / n).exp(), ratio: (2.0 * PI / n).exp() }
        }
    }
}

/// Number of lattice eigenvalues in `[−4e^{2πT}, −4e^{−2πT}]`.
pub fn eigenvalue_count_window(p: &ParamPoint, t: f64) -> Result<u64, ModelError> {
    if p.branch != Branch::ImaginaryBranch {
        return Err(ModelError::BranchMismatch("window count needs imaginary m".into()));
    }
    if t <= 0.0 {
        return Ok(0);
    }
    let n = p.m.im.abs();
    let a = arg_0_2pi(p.varsigma);
    // j with |a + 2πj| ≤ 2πnT
    let lo = ((-2.0 * PI * n * t - a) / (2.0 * PI)).ceil() as i64;
    let hi = ((2.0 * PI * n * t - a) / (2.0 * PI)).floor() as i64;
    Ok(if hi >= lo { (hi - lo + 1) as u64 } else { 0 })
}

/// `(1 − ς e^{iπm} e^{2mx}) / (1 − ς e^{−iπm} e^{2mx})`, regrouped to stay
/// bounded when `Re(2mx) > 0`.
fn coupling_ratio(m: Complex64, s: Complex64, x: f64) -> Complex64 {
    if s == c(0.0, 0.0) {
        return c(1.0, 0.0);
    }
    let i = Complex64::i();
    let up = s * (i * PI * m).exp();
    let down = s * (-i * PI * m).exp();
    let e = 2.0 * m * x;
    if e.re > 0.0 {
        let v = (-e).exp();
        (v - up) / (v - down)
    } else {
        let u = e.exp();
        (1.0 - up * u) / (1.0 - down * u)
    }
}

/// Limits of [`coupling_ratio`] at `x → −∞` and `x → +∞` for real `m`.
fn coupling_ratio_limits(m: f64, s: Complex64) -> (Complex64, Complex64) {
    if s == c(0.0, 0.0) {
        return (c(1.0, 0.0), c(1.0, 0.0));
    }
    let far = (c(0.0, 2.0 * PI * m)).exp();
    if m > 0.0 {
        (c(1.0, 0.0), far)
    } else {
        (far, c(1.0, 0.0))
    }
}

/// The scattering symbol `S_{m,κ;m',κ'}(x)`, the `ξ → −∞` edge of `W^−`.
pub fn scattering_symbol(pair: &ParamPair, x: f64) -> Complex64 {
    let (m, s) = (pair.target.m, pair.target.varsigma);
    let (mp, sp) = (pair.reference.m, pair.reference.varsigma);
    let phase = (-Complex64::i() * PI * (m - mp)).exp();
    phase * coupling_ratio(m, s, x) / coupling_ratio(mp, sp, x)
}

/// Limits of the scattering symbol at `x → ∓∞` for a real-branch pair.
pub fn scattering_limits(pair: &ParamPair) -> Result<(Complex64, Complex64), ModelError> {
    if pair.target.branch != Branch::RealBranch || pair.reference.branch != Branch::RealBranch {
        return Err(ModelError::BranchMismatch("scattering limits need real orders".into()));
    }
    let (m, mp) = (pair.target.m.re, pair.reference.m.re);
    let phase = (c(0.0, -PI * (m - mp))).exp();
    let (tl, tr) = coupling_ratio_limits(m, pair.target.varsigma);
    let (rl, rr) = coupling_ratio_limits(mp, pair.reference.varsigma);
    Ok((phase * tl / rl, phase * tr / rr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Momentum,
    Position,
}

/// Structural class of a symbol factor.
#[derive(Clone)]
pub enum FactorClass {
    Constant,
    LimitsAtBothEnds,
    VanishAtPlusInfinity,
    Periodic { period: f64 },
    /// Asymptotic to `left` as `x → −∞` and to `right` as `x → +∞`, both
    /// with the given period.
    AsymptoticallyPeriodic { period: f64, left: ScalarFn, right: ScalarFn },
    AlmostPeriodic { frequencies: Vec<f64> },
}

impl fmt::Debug for FactorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorClass::Constant => write!(f, "Constant"),
            FactorClass::LimitsAtBothEnds => write!(f, "LimitsAtBothEnds"),
            FactorClass::VanishAtPlusInfinity => write!(f, "VanishAtPlusInfinity"),
            FactorClass::Periodic { period } => write!(f, "Periodic({period})"),
            FactorClass::AsymptoticallyPeriodic { period, .. } => write!(f, "AsymptoticallyPeriodic({period})"),
            FactorClass::AlmostPeriodic { frequencies } => write!(f, "AlmostPeriodic({frequencies:?})"),
        }
    }
}

fn same_period(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// One factor `a(D)` or `b(X)` of a product.
#[derive(Clone)]
pub struct SymbolFactor {
    pub side: Side,
    pub label: String,
    pub class: FactorClass,
    /// Limits at `−∞` and `+∞`.
    pub end_values: Option<(Complex64, Complex64)>,
    /// Evaluation point at which `end_values` are attained to 1e−6.
    pub far: f64,
    eval: ScalarFn,
}

impl fmt::Debug for SymbolFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolFactor")
            .field("side", &self.side)
            .field("label", &self.label)
            .field("class", &self.class)
            .field("end_values", &self.end_values)
            .finish()
    }
}

impl SymbolFactor {
    pub fn new(side: Side, label: impl Into<String>, class: FactorClass, eval: ScalarFn) -> Self {
        SymbolFactor { side, label: label.into(), class, end_values: None, far: f64::INFINITY, eval }
    }

    pub fn with_end_values(mut self, minus: Complex64, plus: Complex64, far: f64) -> Self {
        self.end_values = Some((minus, plus));
        self.far = far;
        self
    }

    pub fn constant(side: Side, v: Complex64) -> Self {
        SymbolFactor::new(side, format!("{v}"), FactorClass::Constant, Arc::new(move |_| v)).with_end_values(v, v, 0.0)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Complex64 {
        (self.eval)(t)
    }

    pub fn eval_fn(&self) -> ScalarFn {
        self.eval.clone()
    }

    /// Pointwise complex conjugate, the symbol of the adjoint factor.
    pub fn conj(&self) -> Self {
        let f = self.eval.clone();
        let class = match &self.class {
            FactorClass::AsymptoticallyPeriodic { period, left, right } => {
                let (l, r) = (left.clone(), right.clone());
                FactorClass::AsymptoticallyPeriodic {
                    period: *period,
                    left: Arc::new(move |x| l(x).conj()),
                    right: Arc::new(move |x| r(x).conj()),
                }
            }
            other => other.clone(),
        };
        SymbolFactor {
            side: self.side,
            label: format!("conj({})", self.label),
            class,
            end_values: self.end_values.map(|(a, b)| (a.conj(), b.conj())),
            far: self.far,
            eval: Arc::new(move |t| f(t).conj()),
        }
    }

    /// Pointwise product of two factors acting on the same side.
    pub fn product(&self, other: &SymbolFactor) -> SymbolFactor {
        assert_eq!(self.side, other.side, "pointwise products need a common side");
        if matches!(self.class, FactorClass::Constant) && matches!(other.class, FactorClass::Constant) {
            return SymbolFactor::constant(self.side, self.eval(0.0) * other.eval(0.0));
        }
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let class = product_class(self, other);
        let end_values = match (self.end_values, other.end_values, &class) {
            (Some((a, b)), Some((p, q)), FactorClass::LimitsAtBothEnds | FactorClass::Constant | FactorClass::VanishAtPlusInfinity) => {
                Some((a * p, b * q))
            }
            _ => None,
        };
        SymbolFactor {
            side: self.side,
            label: format!("{}*{}", self.label, other.label),
            class,
            end_values,
            far: self.far.max(other.far),
            eval: Arc::new(move |t| f(t) * g(t)),
        }
    }

    /// Limit towards `−∞` used by the line collar, if the class provides one.
    pub fn left_part(&self) -> Option<ScalarFn> {
        match &self.class {
            FactorClass::LimitsAtBothEnds | FactorClass::VanishAtPlusInfinity => {
                self.end_values.map(|(l, _)| -> ScalarFn { Arc::new(move |_| l) })
            }
            FactorClass::AsymptoticallyPeriodic { left, .. } => Some(left.clone()),
            _ => None,
        }
    }

    /// True when the two ends of the real line carry different asymptotics.
    pub fn ends_differ(&self) -> bool {
        match &self.class {
            FactorClass::LimitsAtBothEnds | FactorClass::VanishAtPlusInfinity => {
                self.end_values.map(|(l, r)| (l - r).norm() > 1e-12).unwrap_or(false)
            }
            FactorClass::AsymptoticallyPeriodic { .. } => true,
            _ => false,
        }
    }
}

fn period_of(f: &SymbolFactor) -> Option<f64> {
    match &f.class {
        FactorClass::Periodic { period } | FactorClass::AsymptoticallyPeriodic { period, .. } => Some(*period),
        _ => None,
    }
}

/// Functions approached at `x → −∞` and `x → +∞`.
fn asymptotic_parts(f: &SymbolFactor) -> Option<(ScalarFn, ScalarFn)> {
    let konst = |v: Complex64| -> ScalarFn { Arc::new(move |_| v) };
    match &f.class {
        FactorClass::Constant | FactorClass::LimitsAtBothEnds | FactorClass::VanishAtPlusInfinity => {
            f.end_values.map(|(l, r)| (konst(l), konst(r)))
        }
        FactorClass::Periodic { .. } => Some((f.eval.clone(), f.eval.clone())),
        FactorClass::AsymptoticallyPeriodic { left, right, .. } => Some((left.clone(), right.clone())),
        FactorClass::AlmostPeriodic { .. } => None,
    }
}

fn frequencies_of(f: &SymbolFactor) -> Vec<f64> {
    match &f.class {
        FactorClass::AlmostPeriodic { frequencies } => frequencies.clone(),
        _ => period_of(f).map(|p| vec![2.0 * PI / p]).unwrap_or_default(),
    }
}

fn product_class(a: &SymbolFactor, b: &SymbolFactor) -> FactorClass {
    use FactorClass::*;
    let almost = matches!(a.class, AlmostPeriodic { .. }) || matches!(b.class, AlmostPeriodic { .. });
    let (pa, pb) = (period_of(a), period_of(b));
    if almost || matches!((pa, pb), (Some(p), Some(q)) if !same_period(p, q)) {
        let mut frequencies = frequencies_of(a);
        frequencies.extend(frequencies_of(b));
        frequencies.sort_by(|x, y| x.partial_cmp(y).unwrap());
        frequencies.dedup_by(|x, y| same_period(*x, *y));
        return AlmostPeriodic { frequencies };
    }
    let Some(period) = pa.or(pb) else {
        return match (&a.class, &b.class) {
            (Constant, x) | (x, Constant) => x.clone(),
            (VanishAtPlusInfinity, _) | (_, VanishAtPlusInfinity) => VanishAtPlusInfinity,
            _ => LimitsAtBothEnds,
        };
    };
    let periodic_only = |f: &SymbolFactor| matches!(f.class, Periodic { .. } | Constant);
    if periodic_only(a) && periodic_only(b) {
        return Periodic { period };
    }
    match (asymptotic_parts(a), asymptotic_parts(b)) {
        (Some((al, ar)), Some((bl, br))) => AsymptoticallyPeriodic {
            period,
            left: Arc::new(move |x| al(x) * bl(x)),
            right: Arc::new(move |x| ar(x) * br(x)),
        },
        _ => AlmostPeriodic { frequencies: vec![2.0 * PI / period] },
    }
}

/// `Σ coefficient · (product of factors)`; factors are listed left to right
/// as operator products, so the last one acts first.
#[derive(Clone, Debug)]
pub struct Term {
    pub coefficient: Complex64,
    pub factors: Vec<SymbolFactor>,
}

/// `scalar_prefactor · Σ_terms`.
#[derive(Clone, Debug)]
pub struct FactorizedOperator {
    pub scalar_prefactor: Complex64,
    pub terms: Vec<Term>,
}

/// Ideal in which a factorized operator lives, read off its position factors.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraClass {
    /// Position factors have limits at both ends (or are constant).
    Fredholm,
    Periodic { period: f64 },
    AsymptoticallyPeriodic { period: f64 },
    AlmostPeriodic { frequencies: Vec<f64> },
}

impl FactorizedOperator {
    pub fn identity() -> Self {
        FactorizedOperator { scalar_prefactor: c(1.0, 0.0), terms: vec![Term { coefficient: c(1.0, 0.0), factors: vec![] }] }
    }

    pub fn single(f: SymbolFactor) -> Self {
        FactorizedOperator { scalar_prefactor: c(1.0, 0.0), terms: vec![Term { coefficient: c(1.0, 0.0), factors: vec![f] }] }
    }

    pub fn product(factors: Vec<SymbolFactor>) -> Self {
        FactorizedOperator { scalar_prefactor: c(1.0, 0.0), terms: vec![Term { coefficient: c(1.0, 0.0), factors }] }
    }

    /// Adjoint: factor order reversed, symbols and coefficients conjugated.
    pub fn adjoint(&self) -> Self {
        FactorizedOperator {
            scalar_prefactor: self.scalar_prefactor.conj(),
            terms: self
                .terms
                .iter()
                .map(|t| Term { coefficient: t.coefficient.conj(), factors: t.factors.iter().rev().map(|f| f.conj()).collect() })
                .collect(),
        }
    }

    /// Operator product `self · other`, with adjacent same-side factors merged.
    pub fn compose(&self, other: &FactorizedOperator) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = a.factors.clone();
                factors.extend(b.factors.iter().cloned());
                terms.push(Term { coefficient: a.coefficient * b.coefficient, factors: merge_adjacent(factors) });
            }
        }
        FactorizedOperator { scalar_prefactor: self.scalar_prefactor * other.scalar_prefactor, terms }
    }

    /// Scalar symbol `Σ coefficient · Π factor` at phase-space point `(x, ξ)`.
    pub fn symbol_at(&self, x: f64, xi: f64) -> Complex64 {
        let mut acc = c(0.0, 0.0);
        for t in &self.terms {
            let mut p = t.coefficient;
            for f in &t.factors {
                p *= match f.side {
                    Side::Momentum => f.eval(xi),
                    Side::Position => f.eval(x),
                };
            }
            acc += p;
        }
        self.scalar_prefactor * acc
    }

    pub fn position_factors(&self) -> impl Iterator<Item = &SymbolFactor> {
        self.terms.iter().flat_map(|t| t.factors.iter()).filter(|f| f.side == Side::Position)
    }

    /// Classifies the operator by its position factors.
    pub fn classify(&self) -> AlgebraClass {
        let mut periods: Vec<f64> = Vec::new();
        let mut asymptotic = false;
        let mut freqs: Vec<f64> = Vec::new();
        for f in self.position_factors() {
            match &f.class {
                FactorClass::Periodic { period } => periods.push(*period),
                FactorClass::AsymptoticallyPeriodic { period, .. } => {
                    asymptotic = true;
                    periods.push(*period)
                }
                FactorClass::AlmostPeriodic { frequencies } => freqs.extend_from_slice(frequencies),
                _ => {}
            }
        }
        if !freqs.is_empty() || periods.windows(2).any(|w| !same_period(w[0], w[1])) {
            freqs.extend(periods.iter().map(|p| 2.0 * PI / p));
            freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            freqs.dedup_by(|a, b| same_period(*a, *b));
            return AlgebraClass::AlmostPeriodic { frequencies: freqs };
        }
        match periods.first() {
            None => AlgebraClass::Fredholm,
            Some(&period) if asymptotic => AlgebraClass::AsymptoticallyPeriodic { period },
            Some(&period) => AlgebraClass::Periodic { period },
        }
    }
}

fn merge_adjacent(factors: Vec<SymbolFactor>) -> Vec<SymbolFactor> {
    let mut out: Vec<SymbolFactor> = Vec::with_capacity(factors.len());
    for f in factors {
        match out.last_mut() {
            Some(last) if last.side == f.side => *last = last.product(&f),
            _ => out.push(f),
        }
    }
    out
}

/// Evaluation point documented for Ξ-product end values: the residual decays
/// like `|μ² − ν²| / (2ξ)`.
pub const MOMENTUM_FAR: f64 = 1e6;

/// `ξ ↦ Ξ_μ(−ξ) Ξ_ν(ξ)`, or `None` when it is identically 1.
fn momentum_pair(mu: Complex64, nu: Complex64) -> Option<SymbolFactor> {
    if (mu - nu).norm() == 0.0 {
        return None;
    }
    let lo = specfn::xi_pair_limit_unchecked(mu, nu, Direction::MinusInfinity);
    let hi = specfn::xi_pair_limit_unchecked(mu, nu, Direction::PlusInfinity);
    let eval: ScalarFn = Arc::new(move |xi| specfn::xi_unchecked(mu, -xi) * specfn::xi_unchecked(nu, xi));
    Some(
        SymbolFactor::new(Side::Momentum, format!("Xi_{mu}(-D)Xi_{nu}(D)"), FactorClass::LimitsAtBothEnds, eval)
            .with_end_values(lo, hi, MOMENTUM_FAR),
    )
}

/// `β₁ = 1/(1 − a e^{2mx})` (`with_exp = false`) or `β₂ = e^{2mx} β₁`, where
/// `a = ς e^{±iπm}`. `None` when the factor is identically 1.
fn beta(p: &ParamPoint, a: Complex64, with_exp: bool) -> Option<SymbolFactor> {
    let m = p.m;
    if a == c(0.0, 0.0) && !with_exp {
        return None;
    }
    let eval: ScalarFn = Arc::new(move |x| {
        let e = 2.0 * m * x;
        if e.re > 0.0 {
            let v = (-e).exp();
            if with_exp {
                1.0 / (v - a)
            } else {
                v / (v - a)
            }
        } else {
            let u = e.exp();
            if with_exp {
                u / (1.0 - a * u)
            } else {
                1.0 / (1.0 - a * u)
            }
        }
    });
    let label = if with_exp { format!("e^(2mX)/(1-({a})e^(2mX)), m={m}") } else { format!("1/(1-({a})e^(2mX)), m={m}") };
    match p.branch {
        Branch::ImaginaryBranch => {
            let period = PI / m.im.abs();
            Some(SymbolFactor::new(Side::Position, label, FactorClass::Periodic { period }, eval))
        }
        Branch::RealBranch => {
            let mr = m.re;
            let zero = c(0.0, 0.0);
            let one = c(1.0, 0.0);
            let (small, large) = if with_exp { (zero, -1.0 / a) } else { (one, zero) };
            let (l, r) = if mr > 0.0 { (small, large) } else { (large, small) };
            // e^{−2|m|X} ≤ 1e−9 beyond the documented far point
            let far = (9.0 * 10f64.ln() + a.norm().ln().abs()) / (2.0 * mr.abs());
            Some(SymbolFactor::new(Side::Position, label, FactorClass::LimitsAtBothEnds, eval).with_end_values(l, r, far))
        }
    }
}

fn check_denominator(p: &ParamPoint, a: Complex64) -> Result<(), ModelError> {
    if a == c(0.0, 0.0) {
        return Ok(());
    }
    let m = p.m;
    let mut margin = f64::INFINITY;
    for j in 0..=2000 {
        let x = -50.0 + 0.05 * j as f64;
        let e = 2.0 * m * x;
        let d = if e.re > 0.0 { ((-e).exp() - a).norm() / (-e).exp().norm().max(1.0) } else { (1.0 - a * e.exp()).norm() };
        margin = margin.min(d);
    }
    if margin < 1e-8 {
        return Err(ModelError::DenominatorNearZero { margin });
    }
    Ok(())
}

/// Expansion of `W^∓_{m,κ;m',κ'}` into bounded momentum and position factors.
///
/// Each term is `Ξ_{1/2}(−D)Ξ_{±m}(D) · b(X) b'(X) · Ξ_{±m'}(−D)Ξ_{1/2}(D)`
/// with `b ∈ {β₁, β₂}` of the target and `b'` of the reference.
pub fn wave_factors(pair: &ParamPair) -> Result<FactorizedOperator, ModelError> {
    let s = match pair.sign {
        WaveSign::Minus => 1.0,
        WaveSign::Plus => -1.0,
    };
    let i = Complex64::i();
    let half = c(0.5, 0.0);
    let t = &pair.target;
    let r = &pair.reference;
    let (m, sg) = (t.m, t.varsigma);
    let (mp, sgp) = (r.m, r.varsigma);
    let prefactor = (-i * s * PI * m / 2.0).exp() * (i * s * PI * mp / 2.0).exp();
    let a_t = sg * (-i * s * PI * m).exp();
    let a_r = sgp * (i * s * PI * mp).exp();
    check_denominator(t, a_t)?;
    check_denominator(r, a_r)?;

    let mut left = vec![(c(1.0, 0.0), momentum_pair(half, m), beta(t, a_t, false))];
    if !t.is_uncoupled() {
        left.push((-sg, momentum_pair(half, -m), beta(t, a_t, true)));
    }
    let mut right = vec![(c(1.0, 0.0), beta(r, a_r, false), momentum_pair(mp, half))];
    if !r.is_uncoupled() {
        right.push((-sgp, beta(r, a_r, true), momentum_pair(-mp, half)));
    }

    let mut terms = Vec::new();
    for (cl, al, bl) in &left {
        for (cr, br, ar) in &right {
            let mut factors = Vec::new();
            if let Some(a) = al {
                factors.push(a.clone());
            }
            let b = match (bl, br) {
                (Some(x), Some(y)) => Some(x.product(y)),
                (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                (None, None) => None,
            };
            if let Some(b) = b {
                factors.push(b);
            }
            if let Some(a) = ar {
                factors.push(a.clone());
            }
            terms.push(Term { coefficient: cl * cr, factors: merge_adjacent(factors) });
        }
    }
    Ok(FactorizedOperator { scalar_prefactor: prefactor, terms })
}

/// Which parameter point sits on the left of the wave operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriangleOrientation {
    /// Boundary of `W^−_{m,κ;1/2,0}`.
    TargetLeft,
    /// Boundary of `W^−_{1/2,0;m',κ'}`.
    ReferenceLeft,
}

/// Analytic values at the three corners of the compactified triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleCorners {
    /// `x = −∞, ξ = −∞` from the momentum edge.
    pub lower_left_momentum: Complex64,
    /// `x = −∞, ξ = −∞` from the scattering edge.
    pub lower_left_position: Complex64,
    /// `x = +∞, ξ = −∞` from the momentum edge.
    pub lower_right_momentum: Complex64,
    /// `x = +∞, ξ = −∞` from the scattering edge.
    pub lower_right_position: Complex64,
    /// `ξ = +∞` from the first momentum edge.
    pub apex_left: Complex64,
    /// `ξ = +∞` from the second momentum edge.
    pub apex_right: Complex64,
}

/// Boundary functions of a symbol in the Fredholm algebra.
#[derive(Clone)]
pub struct TriangleSymbol {
    pub orientation: TriangleOrientation,
    pub corners: TriangleCorners,
    edge1: ScalarFn,
    edge2: ScalarFn,
    edge3: ScalarFn,
}

impl fmt::Debug for TriangleSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TriangleSymbol").field("orientation", &self.orientation).field("corners", &self.corners).finish()
    }
}

impl TriangleSymbol {
    /// Builds a triangle symbol from arbitrary edges and corner values.
    pub fn from_edges(orientation: TriangleOrientation, corners: TriangleCorners, edge1: ScalarFn, edge2: ScalarFn, edge3: ScalarFn) -> Self {
        TriangleSymbol { orientation, corners, edge1, edge2, edge3 }
    }

    /// Edge at `x = −∞` as a function of ξ.
    pub fn edge1(&self, xi: f64) -> Complex64 {
        (self.edge1)(xi)
    }

    /// Edge at `ξ = −∞` as a function of x.
    pub fn edge2(&self, x: f64) -> Complex64 {
        (self.edge2)(x)
    }

    /// Edge at `x = +∞` as a function of ξ.
    pub fn edge3(&self, xi: f64) -> Complex64 {
        (self.edge3)(xi)
    }

    pub fn edge_fns(&self) -> (ScalarFn, ScalarFn, ScalarFn) {
        (self.edge1.clone(), self.edge2.clone(), self.edge3.clone())
    }

    /// Edgewise product; windings add.
    pub fn product(&self, other: &TriangleSymbol) -> TriangleSymbol {
        let mul = |f: ScalarFn, g: ScalarFn| -> ScalarFn { Arc::new(move |t| f(t) * g(t)) };
        let (a, b) = (self.corners, other.corners);
        TriangleSymbol {
            orientation: self.orientation,
            corners: TriangleCorners {
                lower_left_momentum: a.lower_left_momentum * b.lower_left_momentum,
                lower_left_position: a.lower_left_position * b.lower_left_position,
                lower_right_momentum: a.lower_right_momentum * b.lower_right_momentum,
                lower_right_position: a.lower_right_position * b.lower_right_position,
                apex_left: a.apex_left * b.apex_left,
                apex_right: a.apex_right * b.apex_right,
            },
            edge1: mul(self.edge1.clone(), other.edge1.clone()),
            edge2: mul(self.edge2.clone(), other.edge2.clone()),
            edge3: mul(self.edge3.clone(), other.edge3.clone()),
        }
    }
}

/// Triangle symbol of `W^−_{m,κ;1/2,0}` or `W^−_{1/2,0;m,κ}`.
pub fn triangle_symbol(p: &ParamPoint, orientation: TriangleOrientation) -> Result<TriangleSymbol, ModelError> {
    if p.branch != Branch::RealBranch || !(p.m.re > 0.0 && p.m.re < 1.0) {
        return Err(ModelError::BranchMismatch(format!("triangle symbol needs real m in (0,1), got {}", p.m)));
    }
    let m = p.m;
    let half = c(0.5, 0.0);
    let i = Complex64::i();
    let uncoupled = p.is_uncoupled();
    let (pair, e1, e3, p1, p3, mu1, nu1, mu3, nu3) = match orientation {
        TriangleOrientation::TargetLeft => (
            ParamPair::against_free(*p),
            (i * PI / 2.0 * (0.5 - m)).exp(),
            (i * PI / 2.0 * (0.5 + m)).exp(),
            (half, m),
            (half, -m),
            half,
            m,
            half,
            -m,
        ),
        TriangleOrientation::ReferenceLeft => (
            ParamPair::new(ParamPoint::free(), *p),
            (i * PI / 2.0 * (m - 0.5)).exp(),
            (-i * PI / 2.0 * (m + 0.5)).exp(),
            (m, half),
            (-m, half),
            m,
            half,
            -m,
            half,
        ),
    };
    let _ = (p1, p3);
    let edge1: ScalarFn = Arc::new(move |xi| e1 * specfn::xi_unchecked(mu1, -xi) * specfn::xi_unchecked(nu1, xi));
    let edge3: ScalarFn = if uncoupled {
        edge1.clone()
    } else {
        Arc::new(move |xi| e3 * specfn::xi_unchecked(mu3, -xi) * specfn::xi_unchecked(nu3, xi))
    };
    let edge2: ScalarFn = Arc::new(move |x| scattering_symbol(&pair, x));

    let lim = |mu, nu, d| specfn::xi_pair_limit_unchecked(mu, nu, d);
    let (e3c, mu3c, nu3c) = if uncoupled { (e1, mu1, nu1) } else { (e3, mu3, nu3) };
    let (s_minus, s_plus) = scattering_limits(&pair)?;
    let corners = TriangleCorners {
        lower_left_momentum: e1 * lim(mu1, nu1, Direction::MinusInfinity),
        lower_left_position: s_minus,
        lower_right_momentum: e3c * lim(mu3c, nu3c, Direction::MinusInfinity),
        lower_right_position: s_plus,
        apex_left: e1 * lim(mu1, nu1, Direction::PlusInfinity),
        apex_right: e3c * lim(mu3c, nu3c, Direction::PlusInfinity),
    };
    Ok(TriangleSymbol { orientation, corners, edge1, edge2, edge3 })
}

/// The π/n-periodic functions that the scattering symbol of an
/// (imaginary; real) pair approaches at `x → −∞` and `x → +∞`.
pub fn periodic_parts(pair: &ParamPair) -> Result<(SymbolFactor, SymbolFactor), ModelError> {
    if pair.target.branch != Branch::ImaginaryBranch || pair.reference.branch != Branch::RealBranch {
        return Err(ModelError::BranchMismatch("periodic parts need an imaginary target and a real reference".into()));
    }
    let (m, s) = (pair.target.m, pair.target.varsigma);
    let mp = pair.reference.m.re;
    let period = PI / m.im.abs();
    let (rl, rr) = coupling_ratio_limits(mp, pair.reference.varsigma);
    let phase = (-Complex64::i() * PI * (m - mp)).exp();
    let make = |lim: Complex64, label: &str| {
        let eval: ScalarFn = Arc::new(move |x| phase * coupling_ratio(m, s, x) / lim);
        SymbolFactor::new(Side::Position, label, FactorClass::Periodic { period }, eval)
    };
    Ok((make(rl, "S^-"), make(rr, "S^+")))
}

/// `F_{in,κ}(x) = −1/((1 − ς e^{−πn} e^{2inx})(1 − ς e^{πn} e^{2inx}))`.
pub fn f_symbol(n: f64, varsigma: Complex64) -> ScalarFn {
    let a = varsigma * (-PI * n).exp();
    let b = varsigma * (PI * n).exp();
    Arc::new(move |x| {
        let u = c(0.0, 2.0 * n * x).exp();
        -1.0 / ((1.0 - a * u) * (1.0 - b * u))
    })
}

/// Minimum number of samples used for periodic Fourier coefficients.
pub const FOURIER_SAMPLES: usize = 4096;

/// Coefficients `c_ℓ`, `|ℓ| ≤ lmax`, of `f(x) = Σ c_ℓ e^{2πiℓx/period}`,
/// indexed by `ℓ + lmax`.
pub fn fourier_coefficients(f: &dyn Fn(f64) -> Complex64, period: f64, lmax: usize, samples: usize) -> Vec<Complex64> {
    let m = samples.max(FOURIER_SAMPLES).max(4 * lmax + 4).next_power_of_two();
    let mut buf: Vec<Complex64> = (0..m).map(|j| f(period * j as f64 / m as f64)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let l = lmax as i64;
    (-l..=l).map(|k| buf[k.rem_euclid(m as i64) as usize] * scale).collect()
}

/// Fourier coefficients of `F_{in,κ}` over the period π/n.
pub fn f_fourier(n: f64, kappa: Complex64, lmax: usize) -> Result<Vec<Complex64>, ModelError> {
    let p = validate_sa(c(0.0, n), kappa)?;
    let f = f_symbol(n, p.varsigma);
    Ok(fourier_coefficients(&*f, PI / n, lmax, FOURIER_SAMPLES))
}

/// Closed form `c_{−1} = conj(ς) / (e^{πn} − e^{−πn})`.
pub fn c_minus_one_closed_form(n: f64, varsigma: Complex64) -> Complex64 {
    varsigma.conj() / (2.0 * (PI * n).sinh())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(m: f64, k: f64) -> ParamPoint {
        validate_sa(c(m, 0.0), c(k, 0.0)).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert_eq!(pt(0.5, -1.0).branch, Branch::RealBranch);
        assert_eq!(validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap().branch, Branch::ImaginaryBranch);
        assert_eq!(validate_sa(c(0.0, 0.0), c(1.0, 0.0)), Err(ModelError::MExcluded));
        assert!(matches!(validate_sa(c(0.5, 0.0), c(1.0, 0.5)), Err(ModelError::NotSelfAdjoint(_))));
        assert!(matches!(validate_sa(c(0.0, 1.0), c(2.0, 0.0)), Err(ModelError::NotSelfAdjoint(_))));
        assert!(matches!(validate_sa(c(1.2, 0.0), c(1.0, 0.0)), Err(ModelError::NotSelfAdjoint(_))));
        assert!(matches!(validate_sa(c(0.3, 0.3), c(1.0, 0.0)), Err(ModelError::NotSelfAdjoint(_))));
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(eigenvalues(&pt(0.5, 0.0)), EigenvalueSet::Finite(vec![]));
        match eigenvalues(&pt(0.5, -1.0)) {
            EigenvalueSet::Finite(v) => {
                assert_eq!(v.len(), 1);
                assert!((v[0] + 1.0).abs() < 1e-12);
            }
            _ => panic!(),
        }
        let p = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        match eigenvalues(&p) {
            EigenvalueSet::Lattice { lambda0, ratio } => {
                let a = arg_0_2pi(p.varsigma);
                assert!((lambda0 + 4.0 * (-a).exp()).abs() < 1e-12);
                assert!((ratio - (2.0 * PI).exp()).abs() < 1e-9);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn window_count_examples() {
        let p = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        let n10 = eigenvalue_count_window(&p, 10.0).unwrap() as i64;
        assert!((n10 - 20).abs() <= 2);
        assert_eq!(eigenvalue_count_window(&p, 1e-6).unwrap(), 0);
        let q = validate_sa(c(0.0, 2.0), c(0.0, 1.0)).unwrap();
        let n = eigenvalue_count_window(&q, 50.0).unwrap() as f64;
        assert!((n / 100.0 - 2.0).abs() <= 0.02);
        assert!(eigenvalue_count_window(&pt(0.5, 1.0), 1.0).is_err());
    }

    #[test]
    fn scattering_examples() {
        let free = ParamPair::new(ParamPoint::free(), ParamPoint::free());
        let pair = ParamPair::against_free(pt(0.5, -1.0));
        let same = ParamPair::new(pt(0.3, 2.0), pt(0.3, 2.0));
        for j in 0..=200 {
            let x = -50.0 + 0.5 * j as f64;
            assert!((scattering_symbol(&free, x) - 1.0).norm() < 1e-15);
            assert!((scattering_symbol(&same, x) - 1.0).norm() < 1e-14);
            assert!((scattering_symbol(&pair, x).norm() - 1.0).abs() < 1e-12);
        }
        assert!((scattering_symbol(&pair, -60.0) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn wave_factors_identity_pair() {
        let w = wave_factors(&ParamPair::new(ParamPoint::free(), ParamPoint::free())).unwrap();
        assert_eq!(w.terms.len(), 1);
        assert!(w.terms[0].factors.is_empty());
        assert!((w.symbol_at(0.3, -2.0) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn wave_factor_classes() {
        let img = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        let img2 = validate_sa(c(0.0, 0.5), c(1.0, 0.0)).unwrap();
        let real = pt(0.5, -1.0);
        let w = wave_factors(&ParamPair::against_free(img)).unwrap();
        assert_eq!(w.classify(), AlgebraClass::Periodic { period: PI });
        for f in w.position_factors() {
            for j in 0..100 {
                let x = -10.0 + 0.2 * j as f64;
                assert!((f.eval(x + PI) - f.eval(x)).norm() <= 1e-12);
            }
        }
        assert_eq!(wave_factors(&ParamPair::against_free(real)).unwrap().classify(), AlgebraClass::Fredholm);
        assert_eq!(
            wave_factors(&ParamPair::new(img, real)).unwrap().classify(),
            AlgebraClass::AsymptoticallyPeriodic { period: PI }
        );
        match wave_factors(&ParamPair::new(img, img2)).unwrap().classify() {
            AlgebraClass::AlmostPeriodic { frequencies } => {
                assert_eq!(frequencies.len(), 2);
                assert!((frequencies[0] - 1.0).abs() < 1e-12 && (frequencies[1] - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn position_factors_bounded_periodic_case() {
        let img = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        let w = wave_factors(&ParamPair::against_free(img)).unwrap();
        // |β₁| ≤ 1/(e^π − 1), |β₂| ≤ 1/(e^π − 1) on |ς| = 1
        let bound = 1.0 / ((PI).exp() - 1.0) + 1e-12;
        for f in w.position_factors() {
            for j in 0..=20000 {
                let x = -100.0 + 0.01 * j as f64;
                assert!(f.eval(x).norm() <= bound, "{} at {x}", f.label);
            }
        }
    }

    #[test]
    fn triangle_examples() {
        let t = triangle_symbol(&pt(0.5, -1.0), TriangleOrientation::TargetLeft).unwrap();
        let pair = ParamPair::against_free(pt(0.5, -1.0));
        for j in 0..=100 {
            let x = -20.0 + 0.4 * j as f64;
            assert!((t.edge2(x) - scattering_symbol(&pair, x)).norm() <= 1e-14);
        }
        assert!((t.edge1(-100.0) - 1.0).norm() <= 1e-3);
        let t0 = triangle_symbol(&pt(0.3, 0.0), TriangleOrientation::TargetLeft).unwrap();
        for j in 0..=100 {
            let xi = -50.0 + j as f64;
            assert!((t0.edge1(xi) - t0.edge3(xi)).norm() <= 1e-14);
        }
        assert!(triangle_symbol(&pt(-0.5, 1.0), TriangleOrientation::TargetLeft).is_err());
    }

    #[test]
    fn periodic_parts_examples() {
        let img = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        let pair = ParamPair::new(img, pt(0.5, -1.0));
        let (left, right) = periodic_parts(&pair).unwrap();
        let s = img.varsigma;
        let n = 1.0;
        let expected = (-Complex64::i() * PI * (c(0.0, n) - 0.5)).exp() * (1.0 - s * (-PI * n).exp()) / (1.0 - s * (PI * n).exp());
        assert!((left.eval(0.0) - expected).norm() < 1e-12);
        for j in 0..=200 {
            let x = PI * j as f64 / 200.0;
            assert!((left.eval(x).norm() - 1.0).abs() < 1e-10);
            assert!((right.eval(x).norm() - 1.0).abs() < 1e-10);
            let xr = 40.0 + x;
            assert!((scattering_symbol(&pair, xr) - right.eval(xr)).norm() <= 1e-6);
            assert!((scattering_symbol(&pair, -xr) - left.eval(-xr)).norm() <= 1e-6);
        }
        assert!(periodic_parts(&ParamPair::against_free(pt(0.5, 1.0))).is_err());
    }

    #[test]
    fn f_fourier_examples() {
        for (n, kappa) in [(1.0, c(1.0, 0.0)), (0.5, c(0.0, 1.0)), (2.0, (c(0.0, PI / 3.0)).exp())] {
            let p = validate_sa(c(0.0, n), kappa).unwrap();
            let coef = f_fourier(n, kappa, 40).unwrap();
            let cm1 = coef[40 - 1];
            assert!((cm1 - c_minus_one_closed_form(n, p.varsigma)).norm() <= 1e-10, "n={n}");
        }
        let p = validate_sa(c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        let coef = f_fourier(1.0, c(1.0, 0.0), 40).unwrap();
        let f = f_symbol(1.0, p.varsigma);
        for j in 0..50 {
            let x = 0.07 * j as f64;
            let s: Complex64 = (-40i64..=40).map(|l| coef[(l + 40) as usize] * c(0.0, 2.0 * l as f64 * x).exp()).sum();
            assert!((s - f(x)).norm() <= 1e-8);
        }
    }
}
