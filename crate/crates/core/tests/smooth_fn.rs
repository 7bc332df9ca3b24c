mod common;

use common::{central_difference, close, random_expr, random_point, rng, RandPoly};
use diffspace::smooth_fn::{bump_ball, cutoff1d, distance_sq, hadamard_factors, Expr, Guard, SmoothMap};
use diffspace::Error;
use proptest::prelude::*;
use rand::Rng;

const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-4;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn partials_match_central_differences(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let map = SmoothMap::new(n, random_expr(&mut r, n, 4)).unwrap();
        let x = random_point(&mut r, n, 1.5);
        let grad = map.partials(&x).unwrap();
        for i in 0..n {
            let fd = central_difference(|y| map.eval(y).unwrap(), &x, i, FD_STEP);
            prop_assert!(close(grad[i], fd, FD_TOL), "slot {i}: {} vs {fd} for {map}", grad[i]);
        }
    }

    #[test]
    fn chain_rule_for_compositions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.random_range(1..=3);
        let n = r.random_range(1..=3);
        let outer = SmoothMap::new(m, random_expr(&mut r, m, 3)).unwrap();
        let inners: Vec<SmoothMap> = (0..m).map(|_| SmoothMap::new(n, random_expr(&mut r, n, 3)).unwrap()).collect();
        let composed = SmoothMap::compose(&outer, &inners).unwrap();
        let x = random_point(&mut r, n, 1.0);
        let y: Vec<f64> = inners.iter().map(|g| g.eval(&x).unwrap()).collect();
        let d_outer = outer.partials(&y).unwrap();
        let d_inner: Vec<Vec<f64>> = inners.iter().map(|g| g.partials(&x).unwrap()).collect();
        let got = composed.partials(&x).unwrap();
        prop_assert_eq!(composed.eval(&x).unwrap(), outer.eval(&y).unwrap());
        for i in 0..n {
            let want: f64 = (0..m).map(|k| d_outer[k] * d_inner[k][i]).sum();
            prop_assert!(close(got[i], want, 1e-9), "{} vs {want}", got[i]);
        }
    }

    #[test]
    fn evaluation_is_deterministic_and_serializable(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=3);
        let map = SmoothMap::new(n, random_expr(&mut r, n, 4)).unwrap();
        let x = random_point(&mut r, n, 2.0);
        let json = serde_json::to_string(&map).unwrap();
        let back: SmoothMap = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(map.eval(&x).unwrap().to_bits(), map.eval(&x).unwrap().to_bits());
        prop_assert_eq!(back.eval(&x).unwrap().to_bits(), map.eval(&x).unwrap().to_bits());
    }

    #[test]
    fn hadamard_polynomials(seed in any::<u64>()) {
        let mut r = rng(seed);
        let poly = RandPoly::random(&mut r, 4, 5);
        let map = poly.to_map();
        let p = random_point(&mut r, poly.arity, 2.0);
        let x = random_point(&mut r, poly.arity, 2.0);
        let h = hadamard_factors(&map, &p).unwrap();
        prop_assert!(h.exact);
        prop_assert!((h.reconstruct(&p, &x).unwrap() - poly.eval(&x)).abs() <= 1e-9);
        for i in 0..poly.arity {
            let gi = h.factors[i].eval(&p).unwrap();
            prop_assert!(close(gi, poly.partial(i, &p), 1e-9));
            let fd = central_difference(|y| poly.eval(y), &p, i, FD_STEP);
            prop_assert!(close(gi, fd, FD_TOL));
        }
    }

    #[test]
    fn hadamard_by_quadrature(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=2);
        let body = random_expr(&mut r, n, 3).sin() + Expr::slot(0).cos();
        let map = SmoothMap::new(n, body).unwrap();
        let p = random_point(&mut r, n, 1.0);
        let x = random_point(&mut r, n, 1.0);
        let h = hadamard_factors(&map, &p).unwrap();
        prop_assert!((h.reconstruct(&p, &x).unwrap() - map.eval(&x).unwrap()).abs() <= 1e-9);
        let grad = map.partials(&p).unwrap();
        for i in 0..n {
            prop_assert!(close(h.factors[i].eval(&p).unwrap(), grad[i], 1e-9));
        }
    }

    #[test]
    fn cutoff_shape(t in -3.0f64..3.0) {
        let phi = cutoff1d();
        let v = phi.eval(&[t]).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        if t <= 0.5 { prop_assert_eq!(v, 1.0); }
        if t >= 1.0 { prop_assert_eq!(v, 0.0); }
        let w = phi.eval(&[t + 1e-3]).unwrap();
        prop_assert!(w <= v);
    }

    #[test]
    fn bump_shape(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let p = random_point(&mut r, n, 2.0);
        let radius = r.random_range(0.1..2.0);
        let b = bump_ball(&p, radius).unwrap();
        prop_assert_eq!(b.eval(&p).unwrap(), 1.0);
        let dir = random_point(&mut r, n, 1.0);
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
        // radii close to 1 underflow the profile, so stay below 0.999r
        let inside = r.random_range(0.0..0.999) * radius;
        let outside = r.random_range(1.0..3.0) * radius;
        let at = |s: f64| p.iter().zip(&dir).map(|(c, d)| c + s * d / norm).collect::<Vec<_>>();
        prop_assert!(b.eval(&at(inside)).unwrap() > 0.0);
        prop_assert_eq!(b.eval(&at(outside)).unwrap(), 0.0);
        let x = at(r.random_range(0.0..0.9) * radius);
        let grad = b.partials(&x).unwrap();
        for i in 0..n {
            let fd = central_difference(|y| b.eval(y).unwrap(), &x, i, FD_STEP);
            prop_assert!(close(grad[i], fd, FD_TOL));
        }
    }

    #[test]
    fn distance_matches_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=6);
        let p = random_point(&mut r, n, 3.0);
        let x = random_point(&mut r, n, 3.0);
        let want: f64 = p.iter().zip(&x).map(|(a, b)| (b - a) * (b - a)).sum();
        let d = distance_sq(&p);
        prop_assert!(close(d.eval(&x).unwrap(), want, 1e-12));
        prop_assert_eq!(d.eval(&p).unwrap(), 0.0);
        prop_assert!(d.eval(&x).unwrap() >= 0.0);
    }
}

#[test]
fn hand_worked_partials() {
    let m = SmoothMap::new(1, Expr::slot(0).powi(2)).unwrap();
    assert_eq!(m.eval(&[3.0]).unwrap(), 9.0);
    assert_eq!(m.partials(&[3.0]).unwrap(), vec![6.0]);
    let m = SmoothMap::new(2, Expr::slot(0).sin() * Expr::slot(1)).unwrap();
    assert_eq!(m.eval(&[0.0, 1.0]).unwrap(), 0.0);
    assert_eq!(m.partials(&[0.0, 1.0]).unwrap(), vec![1.0, 0.0]);
}

#[test]
fn guards_report_errors_not_nan() {
    let m = SmoothMap::new(1, Expr::slot(0).recip(Guard::NonZero)).unwrap();
    assert_eq!(m.eval(&[4.0]).unwrap(), 0.25);
    assert!(matches!(m.eval(&[0.0]), Err(Error::GuardViolation { .. })));
    assert!(matches!(m.partials(&[0.0]), Err(Error::GuardViolation { .. })));
}

#[test]
fn arity_and_slot_checks() {
    assert!(matches!(SmoothMap::new(1, Expr::slot(1)), Err(Error::SlotOutOfRange { .. })));
    let m = SmoothMap::new(2, Expr::slot(0)).unwrap();
    assert!(matches!(m.eval(&[1.0]), Err(Error::ArityMismatch { expected: 2, got: 1 })));
}
