use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use indexlab::model::{self, FactorClass, FactorizedOperator, ParamPair, Side, SymbolFactor, TriangleOrientation};
use indexlab::quantize::{GridSpec, LineOperator};
use indexlab::specfn::{self, PmSign};
use indexlab::winding;
use indexlab::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn poly_on_circle(roots: Vec<Complex64>) -> impl Fn(f64) -> Complex64 {
    move |x| {
        let z = c(0.0, x).exp();
        roots.iter().fold(c(1.0, 0.0), |acc, r| acc * (z - r))
    }
}

fn root_strategy() -> impl Strategy<Value = Complex64> {
    // moduli away from the unit circle so the curves stay clear of zero
    (prop_oneof![0.0f64..0.8, 1.25f64..3.0], 0.0f64..(2.0 * PI)).prop_map(|(r, a)| c(r * a.cos(), r * a.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn xi_is_unimodular_for_real_order(m in -0.99f64..0.99, xi in -100.0f64..100.0) {
        prop_assert!((specfn::xi(c(m, 0.0), xi).unwrap().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn xi_reflection(mr in -0.9f64..2.0, mi in -3.0f64..3.0, xi in -60.0f64..60.0) {
        let m = c(mr, mi);
        let p = specfn::xi(m, xi).unwrap() * specfn::xi(m, -xi).unwrap();
        prop_assert!((p - 1.0).norm() <= 1e-11);
    }

    #[test]
    fn log_gamma_recurrence(re in -8.0f64..20.0, im in 0.05f64..15.0) {
        let z = c(re, im);
        let d = specfn::log_gamma(z + 1.0).unwrap() - specfn::log_gamma(z).unwrap() - z.ln();
        // equal up to a multiple of 2πi
        let k = (d.im / (2.0 * PI)).round();
        prop_assert!(d.re.abs() <= 1e-12 * (1.0 + z.norm()));
        prop_assert!((d.im - 2.0 * PI * k).abs() <= 1e-11 * (1.0 + z.norm()));
    }

    #[test]
    fn cosh_identity(n in 0.1f64..2.5, xi in -20.0f64..20.0) {
        let v = specfn::g_pm(n, xi, PmSign::Minus) + specfn::g_pm(n, xi + 2.0 * n, PmSign::Plus);
        prop_assert!((v / (2.0 * (PI * n).cosh()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn imaginary_branch_coupling_is_unimodular(n in 0.1f64..3.0, a in 0.0f64..(2.0 * PI)) {
        let p = model::validate_sa(c(0.0, n), c(0.0, a).exp()).unwrap();
        prop_assert!((p.varsigma.norm() - 1.0).abs() <= 1e-12);
        let ratio = match model::eigenvalues(&p) {
            model::EigenvalueSet::Lattice { ratio, .. } => ratio,
            _ => unreachable!(),
        };
        let set = model::eigenvalues(&p);
        for j in -3..3 {
            let q = set.lattice_element(j + 1).unwrap() / set.lattice_element(j).unwrap();
            prop_assert!((q / ratio - 1.0).abs() <= 1e-12);
        }
        prop_assert!((ratio - (2.0 * PI / n).exp()).abs() <= 1e-12 * ratio);
    }

    #[test]
    fn scattering_symbol_is_unitary(m in -0.95f64..0.95, k in -5.0f64..5.0, mp in 0.05f64..0.95, kp in -5.0f64..5.0, x in -40.0f64..40.0) {
        prop_assume!(m.abs() > 0.02);
        let pair = ParamPair::new(model::validate_sa(c(m, 0.0), c(k, 0.0)).unwrap(), model::validate_sa(c(mp, 0.0), c(kp, 0.0)).unwrap());
        prop_assert!((model::scattering_symbol(&pair, x).norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn scattering_symbol_is_unitary_imaginary(n in 0.1f64..3.0, a in 0.0f64..6.3, np in 0.1f64..3.0, b in 0.0f64..6.3, x in -40.0f64..40.0) {
        let pair = ParamPair::new(
            model::validate_sa(c(0.0, n), c(0.0, a).exp()).unwrap(),
            model::validate_sa(c(0.0, np), c(0.0, b).exp()).unwrap(),
        );
        prop_assert!((model::scattering_symbol(&pair, x).norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn scattering_ends_match_triangle_corners(m in 0.1f64..0.9, k in -5.0f64..5.0) {
        let p = model::validate_sa(c(m, 0.0), c(k, 0.0)).unwrap();
        let t = model::triangle_symbol(&p, TriangleOrientation::TargetLeft).unwrap();
        let pair = ParamPair::against_free(p);
        let far = 250.0;
        prop_assert!((model::scattering_symbol(&pair, -far) - t.corners.lower_left_position).norm() <= 1e-6);
        prop_assert!((model::scattering_symbol(&pair, far) - t.corners.lower_right_position).norm() <= 1e-6);
        // the ξ = +∞ apex is 1
        prop_assert!((t.corners.apex_left - 1.0).norm() <= 1e-12);
    }

    #[test]
    fn uncoupled_identity_pair_is_one(m in -0.95f64..0.95, x in -30.0f64..30.0, xi in -200.0f64..200.0) {
        prop_assume!(m.abs() > 0.02);
        let p = model::validate_sa(c(m, 0.0), c(0.0, 0.0)).unwrap();
        let w = model::wave_factors(&ParamPair::new(p, p)).unwrap();
        prop_assert!((w.symbol_at(x, xi) - 1.0).norm() <= 1e-10);
    }

    #[test]
    fn periodic_factors_have_period(n in 0.2f64..3.0, a in 0.0f64..6.3, x in -20.0f64..20.0) {
        let p = model::validate_sa(c(0.0, n), c(0.0, a).exp()).unwrap();
        let w = model::wave_factors(&ParamPair::against_free(p)).unwrap();
        for f in w.position_factors() {
            prop_assert!((f.eval(x + PI / n) - f.eval(x)).norm() <= 1e-12 * (1.0 + f.eval(x).norm()));
        }
    }

    #[test]
    fn period_winding_counts_roots(roots in prop::collection::vec(root_strategy(), 0..6)) {
        let inside = roots.iter().filter(|r| r.norm() < 1.0).count() as i64;
        let f = poly_on_circle(roots);
        let w = winding::wn_period(&f, 2.0 * PI).unwrap();
        prop_assert_eq!(w.integer_rounded, Some(inside));
    }

    #[test]
    fn period_winding_is_additive(a in prop::collection::vec(root_strategy(), 0..4), b in prop::collection::vec(root_strategy(), 0..4)) {
        let f = poly_on_circle(a);
        let g = poly_on_circle(b);
        let wf = winding::wn_period(&f, 2.0 * PI).unwrap().integer_rounded.unwrap();
        let wg = winding::wn_period(&g, 2.0 * PI).unwrap().integer_rounded.unwrap();
        let wfg = winding::wn_period(&|x| f(x) * g(x), 2.0 * PI).unwrap().integer_rounded.unwrap();
        prop_assert_eq!(wfg, wf + wg);
        // homotopy stability under a winding-zero factor
        let h = winding::wn_period(&|x| f(x) * (1.0 - 0.3 * c(0.0, x).exp()), 2.0 * PI).unwrap().integer_rounded.unwrap();
        prop_assert_eq!(h, wf);
    }

    #[test]
    fn ap_winding_of_shifted_polynomial(roots in prop::collection::vec(root_strategy(), 0..4), lam in -3.0f64..3.0) {
        let inside = roots.iter().filter(|r| r.norm() < 1.0).count() as f64;
        let f = poly_on_circle(roots);
        let g = move |x: f64| c(0.0, lam * x).exp() * f(x);
        let w = winding::wn_ap(&g, &[125.0, 250.0, 500.0]).unwrap();
        prop_assert!((w.value - (lam + inside)).abs() <= 2e-2, "{} vs {}", w.value, lam + inside);
    }

    #[test]
    fn triangle_winding_is_additive(m1 in 0.1f64..0.9, k1 in -4.0f64..4.0, m2 in 0.1f64..0.9, k2 in -4.0f64..4.0) {
        let p = model::validate_sa(c(m1, 0.0), c(k1, 0.0)).unwrap();
        let q = model::validate_sa(c(m2, 0.0), c(k2, 0.0)).unwrap();
        let a = model::triangle_symbol(&p, TriangleOrientation::TargetLeft).unwrap();
        let b = model::triangle_symbol(&q, TriangleOrientation::ReferenceLeft).unwrap();
        let wa = winding::wn_triangle(&a, 60.0).unwrap().integer_rounded.unwrap();
        let wb = winding::wn_triangle(&b, 60.0).unwrap().integer_rounded.unwrap();
        let wab = winding::wn_triangle(&a.product(&b), 60.0).unwrap().integer_rounded.unwrap();
        prop_assert_eq!(wab, wa + wb);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn line_quantization_respects_adjoints_and_products(m in 0.1f64..0.9, k in -3.0f64..3.0, width in 0.5f64..3.0) {
        let p = model::validate_sa(c(m, 0.0), c(k, 0.0)).unwrap();
        let w = model::wave_factors(&ParamPair::against_free(p)).unwrap();
        let spec = GridSpec::new(20.0, 512, 0.1);
        let a = LineOperator::new(&w, spec).unwrap();
        let b = LineOperator::new(&w.adjoint(), spec).unwrap();
        let e = |j: usize| {
            let mut v = vec![c(0.0, 0.0); spec.n];
            v[j] = c(1.0, 0.0);
            v
        };
        // <e_i, W e_j> = conj(<e_j, W* e_i>) away from the collar
        for (i, j) in [(200, 256), (256, 256), (300, 180), (150, 330)] {
            let wij = a.apply(&e(j))[i];
            let wsji = b.apply(&e(i))[j];
            prop_assert!((wij - wsji.conj()).norm() <= 1e-10);
        }
        let v: Vec<Complex64> = (0..spec.n).map(|j| c((-(spec.x(j) / width).powi(2)).exp(), 0.0)).collect();
        let composite = LineOperator::new(&w.adjoint().compose(&w), spec).unwrap();
        let lhs = composite.apply(&v);
        let rhs = b.apply(&a.apply(&v));
        let err = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-10);
    }
}

#[test]
fn gaussian_momentum_factor_is_normal_with_sampled_spectrum() {
    let spec = GridSpec::new(10.0, 256, 0.1);
    let a = SymbolFactor::new(Side::Momentum, "gauss", FactorClass::VanishAtPlusInfinity, Arc::new(|xi: f64| c((-xi * xi / 50.0).exp(), 0.0)));
    let op = FactorizedOperator::single(a.clone());
    let g = indexlab::quantize::line_quantize(&op, spec).unwrap();
    let m = &g.matrix;
    let comm = m * m.adjoint() - m.adjoint() * m;
    assert!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
    // eigenvectors are the Fourier modes
    for k in [0usize, 3, 17, 128, 200] {
        let v: Vec<Complex64> = (0..spec.n).map(|j| c(0.0, spec.xi(k) * spec.x(j)).exp()).collect();
        let mv = m * nalgebra::DVector::from_vec(v.clone());
        let lam = a.eval(spec.xi(k));
        let err = mv.iter().zip(&v).map(|(x, y)| (x - lam * y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "k={k}: {err}");
    }
}
