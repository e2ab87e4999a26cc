//! Winding numbers of nonvanishing complex curves: one period, the boundary
//! of the compactified triangle, the almost-periodic mean winding and the
//! pair of asymptotic windings.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::WindingError;
use crate::model::{SymbolFactor, TriangleSymbol};

/// Largest accepted phase step between neighbouring samples.
pub const STEP_BOUND: f64 = PI / 2.0;
/// Default bisection depth of [`unwind`].
pub const MAX_DEPTH: u32 = 30;
/// Modulus below which a curve is considered to hit zero.
pub const ZERO_GUARD: f64 = 1e-8;
/// Closure tolerance of [`wn_period`].
pub const CLOSURE_TOL: f64 = 1e-9;
/// Largest corner residual accepted by [`wn_triangle`].
pub const CORNER_TOL: f64 = 1e-3;
/// Default number of samples per period.
pub const PERIOD_SAMPLES: usize = 1024;
/// Default samples per triangle edge.
pub const EDGE_SAMPLES: usize = 1025;
/// Default schedule of half-widths for [`wn_ap`].
pub const AP_SCHEDULE: [f64; 4] = [125.0, 250.0, 500.0, 1000.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    params: Vec<f64>,
    values: Vec<Complex64>,
}

impl SampledCurve {
    pub fn new(params: Vec<f64>, values: Vec<Complex64>) -> Result<Self, WindingError> {
        if params.len() != values.len() || params.len() < 2 {
            return Err(WindingError::InvalidCurve("need at least two samples with matching lengths".into()));
        }
        let up = params.windows(2).all(|w| w[1] > w[0]);
        let down = params.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(WindingError::InvalidCurve("parameters must be strictly monotone".into()));
        }
        if let Some(i) = values.iter().position(|v| !(v.norm() >= ZERO_GUARD)) {
            return Err(WindingError::ZeroCrossing { param: params[i] });
        }
        Ok(SampledCurve { params, values })
    }

    /// Samples `f` at the given parameters.
    pub fn sample(f: &dyn Fn(f64) -> Complex64, params: Vec<f64>) -> Result<Self, WindingError> {
        let values = params.iter().map(|&t| f(t)).collect();
        Self::new(params, values)
    }

    /// Samples `f` at `count` equispaced points of `[a, b]`, endpoints included.
    pub fn uniform(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, count: usize) -> Result<Self, WindingError> {
        let count = count.max(2);
        let h = (b - a) / (count - 1) as f64;
        let params = (0..count).map(|j| if j + 1 == count { b } else { a + h * j as f64 }).collect();
        Self::sample(f, params)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingEstimate {
    pub value: f64,
    pub uncertainty: f64,
    pub integer_rounded: Option<i64>,
}

impl WindingEstimate {
    pub fn new(value: f64, uncertainty: f64) -> Self {
        let r = value.round();
        let integer_rounded = if (value - r).abs() <= 0.1 { Some(r as i64) } else { None };
        WindingEstimate { value, uncertainty, integer_rounded }
    }

    fn from_turns(value: f64) -> Self {
        Self::new(value, (value - value.round()).abs())
    }
}

fn step(p0: f64, v0: Complex64, p1: f64, v1: Complex64, f: &dyn Fn(f64) -> Complex64, depth: u32, max_depth: u32) -> Result<f64, WindingError> {
    let d = (v1 / v0).arg();
    if d.abs() < STEP_BOUND {
        return Ok(d);
    }
    if depth >= max_depth {
        return Err(WindingError::RefinementExhausted { param: p0 });
    }
    let pm = 0.5 * (p0 + p1);
    let vm = f(pm);
    if !(vm.norm() >= ZERO_GUARD) {
        return Err(WindingError::ZeroCrossing { param: pm });
    }
    Ok(step(p0, v0, pm, vm, f, depth + 1, max_depth)? + step(pm, vm, p1, v1, f, depth + 1, max_depth)?)
}

/// Total phase change along the curve, in radians.
pub fn unwind(curve: &SampledCurve, refiner: &dyn Fn(f64) -> Complex64) -> Result<f64, WindingError> {
    unwind_with_depth(curve, refiner, MAX_DEPTH)
}

pub fn unwind_with_depth(curve: &SampledCurve, refiner: &dyn Fn(f64) -> Complex64, max_depth: u32) -> Result<f64, WindingError> {
    let (p, v) = (&curve.params, &curve.values);
    let mut total = 0.0;
    for j in 1..p.len() {
        total += step(p[j - 1], v[j - 1], p[j], v[j], refiner, 0, max_depth)?;
    }
    Ok(total)
}

/// Unwrapped phase along the curve, starting from the principal argument.
pub fn unwrapped_phase(curve: &SampledCurve, refiner: &dyn Fn(f64) -> Complex64) -> Result<Vec<f64>, WindingError> {
    let (p, v) = (&curve.params, &curve.values);
    let mut out = Vec::with_capacity(p.len());
    let mut acc = v[0].arg();
    out.push(acc);
    for j in 1..p.len() {
        acc += step(p[j - 1], v[j - 1], p[j], v[j], refiner, 0, MAX_DEPTH)?;
        out.push(acc);
    }
    Ok(out)
}

/// Winding number of an `L`-periodic function over one period.
pub fn wn_period(f: &dyn Fn(f64) -> Complex64, l: f64) -> Result<WindingEstimate, WindingError> {
    wn_period_sampled(f, l, PERIOD_SAMPLES)
}

pub fn wn_period_sampled(f: &dyn Fn(f64) -> Complex64, l: f64, samples: usize) -> Result<WindingEstimate, WindingError> {
    let residual = (f(0.0) - f(l)).norm();
    if !(residual <= CLOSURE_TOL) {
        return Err(WindingError::NotClosed { residual });
    }
    let curve = SampledCurve::uniform(f, 0.0, l, samples + 1)?;
    let total = unwind(&curve, f)?;
    // close with the sample at 0 so the count is an exact multiple of 2π
    let closing = (curve.values[0] / curve.values[samples]).arg();
    Ok(WindingEstimate::from_turns((total + closing) / (2.0 * PI)))
}

/// Outcome of [`wn_triangle_detailed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleWinding {
    pub estimate: WindingEstimate,
    /// Largest distance between an edge end and its analytic corner value.
    pub corner_residual: f64,
    /// Largest disagreement between analytic corner values of adjacent edges.
    pub corner_continuity: f64,
    pub momentum_cutoff: f64,
    pub position_cutoff: f64,
}

/// `s·atanh(t)` grid with `t` uniform, reaching `±cutoff`.
pub fn atanh_grid(cutoff: f64, count: usize) -> Vec<f64> {
    let tmax: f64 = 0.999;
    let s = cutoff / tmax.atanh();
    let count = count.max(3) | 1;
    (0..count)
        .map(|j| {
            let t = -tmax + 2.0 * tmax * j as f64 / (count - 1) as f64;
            if j + 1 == count {
                cutoff
            } else if j == 0 {
                -cutoff
            } else {
                s * t.atanh()
            }
        })
        .collect()
}

fn reversed(mut v: Vec<f64>) -> Vec<f64> {
    v.reverse();
    v
}

/// Winding of the triangle boundary, traversed anticlockwise in the
/// `(ξ, x)` plane: edge1 with ξ increasing, edge3 with ξ decreasing, then
/// edge2 with x decreasing.
pub fn wn_triangle(t: &TriangleSymbol, cutoff: f64) -> Result<WindingEstimate, WindingError> {
    wn_triangle_detailed(t, cutoff, EDGE_SAMPLES).map(|w| w.estimate)
}

/// [`wn_triangle`] with diagnostics. The momentum cutoff doubles, up to 64
/// times `cutoff`, until the momentum edges meet their corners within 1e−3.
pub fn wn_triangle_detailed(t: &TriangleSymbol, cutoff: f64, samples: usize) -> Result<TriangleWinding, WindingError> {
    let k = t.corners;
    let corner_continuity = [
        (k.lower_left_momentum - k.lower_left_position).norm(),
        (k.lower_right_momentum - k.lower_right_position).norm(),
        (k.apex_left - k.apex_right).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if corner_continuity > 1e-6 {
        return Err(WindingError::CornerMismatch { residual: corner_continuity });
    }
    let (e1, e2, e3) = t.edge_fns();
    let position_cutoff = cutoff;
    let position_residual = ((e2(-position_cutoff) - k.lower_left_position).norm()).max((e2(position_cutoff) - k.lower_right_position).norm());
    let momentum_residual = |c: f64| {
        [
            (e1(-c) - k.lower_left_momentum).norm(),
            (e1(c) - k.apex_left).norm(),
            (e3(-c) - k.lower_right_momentum).norm(),
            (e3(c) - k.apex_right).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    };
    let mut momentum_cutoff = cutoff;
    let mut mres = momentum_residual(momentum_cutoff);
    while mres > CORNER_TOL && momentum_cutoff < 64.0 * cutoff {
        momentum_cutoff *= 2.0;
        mres = momentum_residual(momentum_cutoff);
    }
    let corner_residual = mres.max(position_residual);
    if corner_residual > CORNER_TOL {
        return Err(WindingError::CornerMismatch { residual: corner_residual });
    }

    let xi_grid = atanh_grid(momentum_cutoff, samples);
    let x_grid = atanh_grid(position_cutoff, samples);
    let c1 = SampledCurve::sample(&*e1, xi_grid.clone())?;
    let c3 = SampledCurve::sample(&*e3, reversed(xi_grid))?;
    let c2 = SampledCurve::sample(&*e2, reversed(x_grid))?;
    let mut total = unwind(&c1, &*e1)? + unwind(&c3, &*e3)? + unwind(&c2, &*e2)?;
    let last = |c: &SampledCurve| *c.values.last().unwrap();
    let first = |c: &SampledCurve| c.values[0];
    // junctions through the analytic corner values
    let apex = k.apex_left;
    let lower_right = k.lower_right_position;
    let lower_left = k.lower_left_position;
    for (from, via, to) in [(last(&c1), apex, first(&c3)), (last(&c3), lower_right, first(&c2)), (last(&c2), lower_left, first(&c1))] {
        total += (via / from).arg() + (to / via).arg();
    }
    Ok(TriangleWinding {
        estimate: WindingEstimate::from_turns(total / (2.0 * PI)),
        corner_residual,
        corner_continuity,
        momentum_cutoff,
        position_cutoff,
    })
}

/// Step used when tracking the phase of an almost-periodic function.
pub const AP_STEP: f64 = 1.0 / 32.0;

/// Mean winding `lim (σ(T) − σ(−T)) / 2T` over a schedule of half-widths.
///
/// With three or more points the limit is extrapolated by a least-squares
/// fit of `v∞ + c/T`; the uncertainty is the largest successive difference
/// of the raw values.
pub fn wn_ap(f: &dyn Fn(f64) -> Complex64, schedule: &[f64]) -> Result<WindingEstimate, WindingError> {
    let raw = wn_ap_raw(f, schedule)?;
    let uncertainty = raw.windows(2).map(|w| (w[1].1 - w[0].1).abs()).fold(0.0, f64::max);
    let value = if raw.len() >= 3 { inverse_t_fit(&raw) } else { raw.last().map(|r| r.1).unwrap_or(0.0) };
    Ok(WindingEstimate { value, uncertainty, integer_rounded: None })
}

/// `(T, (σ(T) − σ(−T)) / 2T)` for every `T` in the schedule.
pub fn wn_ap_raw(f: &dyn Fn(f64) -> Complex64, schedule: &[f64]) -> Result<Vec<(f64, f64)>, WindingError> {
    let mut ts: Vec<f64> = schedule.to_vec();
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(WindingError::InvalidCurve("schedule must contain positive half-widths".into()));
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let plus = phase_at(f, &ts, 1.0)?;
    let minus = phase_at(f, &ts, -1.0)?;
    Ok(ts.iter().zip(plus.iter().zip(minus.iter())).map(|(&t, (p, m))| (t, (p - m) / (2.0 * t))).collect())
}

/// Phase change from 0 to `dir·T` for each sorted `T`.
fn phase_at(f: &dyn Fn(f64) -> Complex64, ts: &[f64], dir: f64) -> Result<Vec<f64>, WindingError> {
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = 0.0;
    let mut start = 0.0;
    for &t in ts {
        let steps = ((t - start) / AP_STEP).ceil().max(1.0) as usize;
        let params: Vec<f64> = (0..=steps).map(|j| dir * (start + (t - start) * j as f64 / steps as f64)).collect();
        let curve = SampledCurve::sample(f, params)?;
        acc += unwind(&curve, f)?;
        out.push(acc);
        start = t;
    }
    Ok(out)
}

fn inverse_t_fit(points: &[(f64, f64)]) -> f64 {
    // least squares for v = a + b/T
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in points {
        let x = 1.0 / t;
        sx += x;
        sy += v;
        sxx += x * x;
        sxy += x * v;
    }
    let det = n * sxx - sx * sx;
    (sxx * sy - sx * sxy) / det
}

/// One-period winding numbers of the two asymptotic parts.
pub fn wn_pair(left: &SymbolFactor, right: &SymbolFactor, l: f64) -> Result<(i64, i64), WindingError> {
    let a = wn_period(&|x| left.eval(x), l)?;
    let b = wn_period(&|x| right.eval(x), l)?;
    match (a.integer_rounded, b.integer_rounded) {
        (Some(p), Some(q)) => Ok((p, q)),
        _ => Err(WindingError::InvalidCurve(format!("non-integer windings {} and {}", a.value, b.value))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(t: f64) -> Complex64 {
        Complex64::new(0.0, t).exp()
    }

    #[test]
    fn unwind_examples() {
        let one = |_: f64| Complex64::new(1.0, 0.0);
        let c = SampledCurve::uniform(&one, 0.0, 1.0, 10).unwrap();
        assert_eq!(unwind(&c, &one).unwrap(), 0.0);

        let c = SampledCurve::uniform(&e, 0.0, 2.0 * PI, 101).unwrap();
        assert!((unwind(&c, &e).unwrap() - 2.0 * PI).abs() < 1e-12);

        let g = |x: f64| 1.0 - 0.5 * e(x);
        let c = SampledCurve::uniform(&g, 0.0, 2.0 * PI, 64).unwrap();
        assert!(unwind(&c, &g).unwrap().abs() < 1e-10);
    }

    #[test]
    fn unwind_refines_coarse_samples() {
        let f = |x: f64| e(10.0 * x);
        let c = SampledCurve::uniform(&f, 0.0, 2.0 * PI, 17).unwrap();
        assert!((unwind(&c, &f).unwrap() - 20.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn unwind_errors() {
        let zero = |x: f64| Complex64::new(x - 0.5, 0.0);
        assert!(matches!(SampledCurve::uniform(&zero, 0.0, 1.0, 3), Err(WindingError::ZeroCrossing { .. })));
        let c = SampledCurve::new(vec![0.0, 1.0], vec![Complex64::new(-0.5, 0.0), Complex64::new(0.5, 0.0)]).unwrap();
        assert!(matches!(unwind(&c, &zero), Err(WindingError::ZeroCrossing { .. })));
        let jump = |x: f64| if x < 0.3 { Complex64::new(1.0, 0.0) } else { Complex64::new(-1.0, 0.0) };
        let c = SampledCurve::uniform(&jump, 0.0, 1.0, 2).unwrap();
        assert!(matches!(unwind(&c, &jump), Err(WindingError::RefinementExhausted { .. })));
    }

    #[test]
    fn period_examples() {
        let n = 1.5;
        let w = wn_period(&|x| e(2.0 * n * x), PI / n).unwrap();
        assert_eq!(w.integer_rounded, Some(1));
        assert!(matches!(wn_period(&|x| e(x), 1.0), Err(WindingError::NotClosed { .. })));
    }

    #[test]
    fn ap_examples() {
        let w = wn_ap(&|x| e(0.37 * x), &AP_SCHEDULE).unwrap();
        assert!((w.value - 0.37).abs() < 1e-9);
        let l = 2.0;
        let f = |x: f64| e(PI * x) * (1.0 + 0.4 * e(-PI * x));
        let per = wn_period(&f, l).unwrap().value;
        let schedule: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|k| k * l / 2.0).collect();
        let ap = wn_ap(&f, &schedule).unwrap();
        assert!((ap.value - 2.0 * PI / l * per).abs() <= 1e-6);
    }

    #[test]
    fn pair_examples() {
        use crate::model::{FactorClass, Side};
        use std::sync::Arc;
        let n = 1.0;
        let up = SymbolFactor::new(Side::Position, "up", FactorClass::Periodic { period: PI / n }, Arc::new(move |x| e(2.0 * n * x)));
        let down = up.conj();
        assert_eq!(wn_pair(&up, &down, PI / n).unwrap(), (1, -1));
    }

    #[test]
    fn triangle_examples() {
        use crate::model::{triangle_symbol, validate_sa, TriangleOrientation};
        let pt = |m: f64, k: f64| validate_sa(Complex64::new(m, 0.0), Complex64::new(k, 0.0)).unwrap();
        let wn = |m, k, o| wn_triangle(&triangle_symbol(&pt(m, k), o).unwrap(), 60.0).unwrap().integer_rounded;
        assert_eq!(wn(0.5, -1.0, TriangleOrientation::TargetLeft), Some(1));
        assert_eq!(wn(0.5, 0.0, TriangleOrientation::TargetLeft), Some(0));
        assert_eq!(wn(0.5, -1.0, TriangleOrientation::ReferenceLeft), Some(-1));
        for m in [0.2, 0.5, 0.8] {
            for k in [-3.0, -1.0, -0.2, 0.0, 0.5, 2.0] {
                let expected = if k < 0.0 { 1 } else { 0 };
                assert_eq!(wn(m, k, TriangleOrientation::TargetLeft), Some(expected), "m={m} k={k}");
                assert_eq!(wn(m, k, TriangleOrientation::ReferenceLeft), Some(-expected), "m={m} k={k}");
            }
        }
    }
}
