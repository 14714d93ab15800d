use std::f64::consts::PI;

use finsler_core::curvature::{
    berwald, bracket_tensor, e_closed_general, e_closed_h, h_derived_closed, h_scalars, landsberg, mean_berwald_trace,
    TOL_JET,
};
use finsler_core::kernel::{scalar_triple, Cone, Direction2, Point2};
use finsler_core::metric::euclidean;
use finsler_core::params::ParamSet;
use finsler_core::spray::{eval_pq, family_spray, quadratic_coeffs, AnsatzSpray, ExprPq, FamilyPq, Spray};
use proptest::prelude::*;

/// Cone points with `r, |y|` in `[0.5, 2]` and `w >= 0.2 r`.
fn cone_point() -> impl Strategy<Value = (Point2, Direction2)> {
    let lo = 0.2f64.asin();
    (0.5..2.0f64, 0.0..2.0 * PI, lo..PI - lo, 0.5..2.0f64).prop_map(|(r, theta, alpha, u)| {
        (
            Point2::new(r * theta.cos(), r * theta.sin()),
            Direction2::new(u * (theta + alpha).cos(), u * (theta + alpha).sin()),
        )
    })
}

fn quadratic_in_r() -> impl Strategy<Value = String> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| format!("({a:?}) + ({b:?})*r + ({c:?})*r^2"))
}

fn params() -> impl Strategy<Value = ParamSet> {
    (
        -2.0..2.0f64,
        quadratic_in_r(),
        quadratic_in_r(),
        quadratic_in_r(),
        quadratic_in_r(),
        quadratic_in_r(),
    )
        .prop_map(|(c, c0, f1, f2, c1, c2)| ParamSet::from_strs(c, &c0, &f1, &f2, &c1, &c2).unwrap())
}

/// A `(P, Q)` pair with no special structure.
fn generic_pair() -> impl Strategy<Value = ExprPq> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c, d)| {
        ExprPq::parse(
            &format!("({a:?})*s^2/r + ({b:?})*s^3"),
            &format!("({c:?})*s^3/r^2 + ({d:?})*exp(s/r)"),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_berwald_tensor_vanishes(p in params(), (x, y) in cone_point()) {
        let b = berwald(&family_spray(&p), x, y).unwrap();
        prop_assert!(b.max_abs() <= TOL_JET * b.scale, "{} vs scale {}", b.max_abs(), b.scale);
        prop_assert!(b.symmetry_defect() <= 1e-12 * b.scale);
    }

    #[test]
    fn family_spray_matches_its_quadratic_form(p in params(), (x, y) in cone_point()) {
        let g = family_spray(&p).value(x, y).unwrap();
        let q = quadratic_coeffs(&p, x, Cone::Positive).unwrap().eval(y);
        for i in 0..2 {
            prop_assert!((g[i] - q[i]).abs() <= 1e-12 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn spray_is_two_homogeneous(p in params(), (x, y) in cone_point(), k in 0.1..10.0f64) {
        let spray = family_spray(&p);
        let g = spray.value(x, y).unwrap();
        let gk = spray.value(x, y.scaled(k)).unwrap();
        for i in 0..2 {
            prop_assert!((gk[i] - k * k * g[i]).abs() <= 1e-11 * (1.0 + (k * k * g[i]).abs()));
        }
    }

    #[test]
    fn family_mean_berwald_vanishes_on_every_route(p in params(), (x, y) in cone_point()) {
        let spray = family_spray(&p);
        let source = FamilyPq::new(p.clone());
        let t = scalar_triple(x, y).unwrap();
        let scale = berwald(&spray, x, y).unwrap().scale;
        prop_assert!(mean_berwald_trace(&spray, x, y).unwrap().max_abs() <= TOL_JET * scale);
        let pq = eval_pq(&source, t.r, t.s).unwrap();
        prop_assert!(e_closed_general(&pq, p.n, x, y).max_abs() <= TOL_JET * scale);
        if t.s.abs() > 1e-3 {
            let h = h_scalars(&source, p.n, t.r, t.s).unwrap();
            prop_assert!(e_closed_h(&h, x, y).unwrap().max_abs() <= TOL_JET * scale);
        }
    }

    #[test]
    fn definitional_h_matches_derived_closed_form(p in params(), (x, y) in cone_point()) {
        let t = scalar_triple(x, y).unwrap();
        let h = h_scalars(&FamilyPq::new(p.clone()), p.n, t.r, t.s).unwrap();
        let closed = h_derived_closed(&p, t.r, t.s).unwrap();
        prop_assert!((h.h - closed).abs() <= 1e-11 * h.scale);
        prop_assert!((h.s_hs_plus_h - (t.s * h.h_s + h.h)).abs() <= 1e-10 * (1.0 + h.s_hs_plus_h.abs()));
    }

    #[test]
    fn rewriting_through_h_is_exact(pair in generic_pair(), (x, y) in cone_point()) {
        let t = scalar_triple(x, y).unwrap();
        prop_assume!(t.s.abs() > 0.1);
        let pq = eval_pq(&pair, t.r, t.s).unwrap();
        let general = e_closed_general(&pq, 2.0, x, y);
        let h = h_scalars(&pair, 2.0, t.r, t.s).unwrap();
        let hform = e_closed_h(&h, x, y).unwrap();
        prop_assert!(general.distance(&hform) <= 1e-9 * general.max_abs().max(1.0));
    }

    #[test]
    fn trace_route_is_half_the_general_formula(pair in generic_pair(), (x, y) in cone_point()) {
        let t = scalar_triple(x, y).unwrap();
        let spray = AnsatzSpray::new(pair.clone());
        let trace = mean_berwald_trace(&spray, x, y).unwrap();
        let general = e_closed_general(&eval_pq(&pair, t.r, t.s).unwrap(), 2.0, x, y);
        let tm = trace.matrix();
        let gm = general.matrix();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((tm[i][j] - 0.5 * gm[i][j]).abs() <= 1e-9 * (1.0 + gm[i][j].abs()));
            }
        }
    }

    #[test]
    fn bracket_identity(x1 in -3.0..3.0f64, x2 in -3.0..3.0f64, y1 in -3.0..3.0f64, y2 in -3.0..3.0f64) {
        let x = Point2::new(x1, x2);
        let y = Direction2::new(y1, y2);
        prop_assume!(y.norm() > 1e-2 && x.norm() > 1e-2);
        let scale = y.norm().powi(2) * x.norm().powi(2);
        for v in bracket_tensor(x, y).iter().flatten() {
            prop_assert!(v.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn family_landsberg_vanishes(p in params(), (x, y) in cone_point()) {
        let l = landsberg(&euclidean(), &family_spray(&p), x, y).unwrap();
        let scale = berwald(&family_spray(&p), x, y).unwrap().scale * y.norm();
        prop_assert!(l.max_abs_l() <= TOL_JET * scale);
        prop_assert!(l.max_abs_j() <= TOL_JET * scale);
    }
}
