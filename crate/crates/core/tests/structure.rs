mod common;

use common::{random_expr, rng};
use diffspace::carrier::{Carrier, OpenInterval, Point, SeqPoint, Side};
use diffspace::smooth_fn::{distance_sq, Expr, Guard, SmoothMap};
use diffspace::structure::{DifferentialSpace, Region, UNIT_LEFT, UNIT_RIGHT};
use diffspace::Error;
use proptest::prelude::*;
use rand::Rng;

fn plane() -> DifferentialSpace {
    DifferentialSpace::with_coordinates("R2", Carrier::euclidean(2), &["x", "y"]).unwrap()
}

fn add() -> SmoothMap {
    SmoothMap::new(2, Expr::slot(0) + Expr::slot(1)).unwrap()
}

fn mul() -> SmoothMap {
    SmoothMap::new(2, Expr::slot(0) * Expr::slot(1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_pure(seed in any::<u64>(), index in 0usize..500) {
        for c in [Carrier::euclidean(3), Carrier::unit_circle(), Carrier::sequences_minus_origin()] {
            let a = c.sample_one(seed, index).unwrap();
            prop_assert_eq!(&a, &c.sample_one(seed, index).unwrap());
            prop_assert_eq!(&a, &c.sample(seed, index + 1).unwrap()[index]);
            prop_assert!(c.contains(&a).unwrap());
        }
    }

    #[test]
    fn seq_points_are_canonical(entries in proptest::collection::vec((1usize..30, -3.0f64..3.0), 0..8)) {
        let mut seen = std::collections::BTreeSet::new();
        let entries: Vec<(usize, f64)> = entries.into_iter().filter(|(i, _)| seen.insert(*i)).collect();
        let p = SeqPoint::new(entries.clone()).unwrap();
        prop_assert!(p.entries().windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert!(p.entries().iter().all(|e| e.1 != 0.0));
        for (i, v) in entries {
            prop_assert_eq!(p.coord(i), v);
        }
        let json = serde_json::to_string(&p).unwrap();
        let back: SeqPoint = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn superposition_acts_pointwise(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut s = plane();
        let f = SmoothMap::new(2, random_expr(&mut r, 2, 3)).unwrap();
        let g = SmoothMap::new(2, random_expr(&mut r, 2, 3)).unwrap();
        s.superpose("f", &f, &["x", "y"]).unwrap();
        s.superpose("g", &g, &["x", "y"]).unwrap();
        s.superpose("sum", &add(), &["f", "g"]).unwrap();
        s.superpose("prod", &mul(), &["f", "g"]).unwrap();
        for p in s.samples(20).unwrap() {
            let fv = s.eval_named("f", &p).unwrap();
            let gv = s.eval_named("g", &p).unwrap();
            prop_assert_eq!(s.eval_named("sum", &p).unwrap(), fv + gv);
            prop_assert_eq!(s.eval_named("prod", &p).unwrap(), fv * gv);
            prop_assert_eq!(fv, f.eval(p.as_vec().unwrap()).unwrap());
        }
    }
}

#[test]
fn generators_are_elements() {
    let s = plane();
    let p = Point::FiniteVec(vec![2.0, 3.0]);
    assert_eq!(s.eval_named("x", &p).unwrap(), 2.0);
    assert_eq!(s.eval_named("pi(2)", &p).unwrap(), 3.0);
    assert!(matches!(s.eval_named("z", &p), Err(Error::UnknownName(_))));
}

#[test]
fn evaluation_outside_the_carrier_errors() {
    let c = Carrier::euclidean(2).minus(vec![Point::FiniteVec(vec![0.0, 0.0])]).unwrap();
    let s = DifferentialSpace::with_coordinates("M", c, &["x", "y"]).unwrap();
    assert_eq!(s.eval_named("x", &Point::FiniteVec(vec![0.0, 0.0])).unwrap_err(), Error::NotInCarrier);
}

#[test]
fn reciprocal_registers_only_where_defined() {
    let inv = SmoothMap::new(1, Expr::slot(0).recip(Guard::NonZero)).unwrap();
    let mut r = DifferentialSpace::with_coordinates("R", Carrier::euclidean(1), &["x"]).unwrap();
    // samples of [−2, 2] avoid 0, so the check passes, but evaluation at 0 errors
    r.superpose("inv", &inv, &["x"]).unwrap();
    assert!(matches!(r.eval_named("inv", &Point::FiniteVec(vec![0.0])), Err(Error::GuardViolation { .. })));
    let mut i = DifferentialSpace::with_coordinates("I", Carrier::open_interval(0.0, 1.0).unwrap(), &["t"]).unwrap();
    i.superpose("inv", &inv, &["t"]).unwrap();
    assert_eq!(i.eval_named("inv", &Point::FiniteVec(vec![0.25])).unwrap(), 4.0);
}

#[test]
fn atlas_glues_local_formulas() {
    // |x| on ℝ − {0}: x on x > 0, −x on x < 0
    let c = Carrier::euclidean(1).minus(vec![Point::FiniteVec(vec![0.0])]).unwrap();
    let mut s = DifferentialSpace::with_coordinates("R*", c, &["x"]).unwrap();
    let x = s.generator_by_name("x").unwrap();
    let pos = Region { bounds: vec![(x.clone(), OpenInterval::above(0.0).unwrap())] };
    let neg = Region { bounds: vec![(x, OpenInterval::new(f64::NEG_INFINITY, 0.0).unwrap())] };
    let id = SmoothMap::projection(1, 0).unwrap();
    let flip = SmoothMap::new(1, -Expr::slot(0)).unwrap();
    s.from_atlas("abs", vec![(pos.clone(), id.clone(), vec!["x"]), (neg, flip, vec!["x"])]).unwrap();
    for p in s.samples(100).unwrap() {
        let v = p.as_vec().unwrap()[0];
        assert_eq!(s.eval_named("abs", &p).unwrap(), v.abs());
    }
    // a single half-line leaves samples uncovered
    let err = s.from_atlas("half", vec![(pos.clone(), id.clone(), vec!["x"])]).unwrap_err();
    assert!(matches!(err, Error::AtlasCoverage { .. }));
    // disagreeing pieces on an overlap
    let shift = SmoothMap::new(1, Expr::slot(0) + Expr::constant(1.0)).unwrap();
    let everywhere = Region::everything();
    let err = s.from_atlas("bad", vec![(everywhere.clone(), id, vec!["x"]), (everywhere, shift, vec!["x"])]).unwrap_err();
    assert!(matches!(err, Error::AtlasDisagreement { .. }));
}

#[test]
fn restriction_keeps_elements() {
    let mut s = plane();
    s.superpose("w", &distance_sq(&[0.0, 0.0]), &["x", "y"]).unwrap();
    let circle = s.restrict("S", Carrier::unit_circle()).unwrap();
    assert_eq!(circle.generator_name(&circle.generator_by_name("x").unwrap()), "x|S");
    for p in circle.samples(50).unwrap() {
        assert!((circle.eval_named("w", &p).unwrap() - 1.0).abs() < 1e-12);
    }
    let r3 = DifferentialSpace::with_coordinates("R3", Carrier::euclidean(3), &["a", "b", "c"]).unwrap();
    assert!(r3.restrict("bad", Carrier::unit_circle()).is_err());
}

#[test]
fn union_idempotents() {
    let circle = DifferentialSpace::with_coordinates("S", Carrier::unit_circle(), &["x", "y"]).unwrap();
    let interval = DifferentialSpace::with_coordinates("I", Carrier::open_interval(0.0, 1.0).unwrap(), &["t"]).unwrap();
    let mut u = DifferentialSpace::union_space("U", circle, interval).unwrap();
    u.superpose("e_sq", &mul(), &[UNIT_LEFT, UNIT_LEFT]).unwrap();
    u.superpose("cross", &mul(), &[UNIT_LEFT, UNIT_RIGHT]).unwrap();
    u.superpose("total", &add(), &[UNIT_LEFT, UNIT_RIGHT]).unwrap();
    u.register_pair("f", "x", "t").unwrap();
    for p in u.samples(100).unwrap() {
        let e = u.eval_named(UNIT_LEFT, &p).unwrap();
        assert_eq!(u.eval_named("e_sq", &p).unwrap(), e);
        assert_eq!(u.eval_named("cross", &p).unwrap(), 0.0);
        assert_eq!(u.eval_named("total", &p).unwrap(), 1.0);
        let Point::Tagged { side, inner } = &p else { panic!("untagged union sample") };
        assert_eq!(u.eval_named("f", &p).unwrap(), inner.coord(1).unwrap());
        let lx = u.eval_named("L.x", &p).unwrap();
        assert_eq!(lx, if *side == Side::Left { inner.coord(1).unwrap() } else { 0.0 });
    }
}

#[test]
fn sequence_space_projection_family() {
    let s = DifferentialSpace::new("RN", Carrier::sequences());
    let p = Point::Seq(SeqPoint::new(vec![(3, 1.5), (7, -2.0)]).unwrap());
    assert_eq!(s.eval_named("pi(3)", &p).unwrap(), 1.5);
    assert_eq!(s.eval_named("pi(4)", &p).unwrap(), 0.0);
    assert_eq!(s.eval_named("pi(7)", &p).unwrap(), -2.0);
    let mut r = rng(7);
    for _ in 0..20 {
        let i = r.random_range(1..100);
        assert!(s.eval_named(&format!("pi({i})"), &p).is_ok());
    }
}
