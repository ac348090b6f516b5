use proptest::prelude::*;

use selfsim::attractor::AttractorGrid;
use selfsim::ideals::{closed_set, contains, ClosedSet, IdealDescriptor};
use selfsim::ifs::{builtin, tent, MultiIndex};
use selfsim::report::sci;
use selfsim::singularity::Singularity;
use selfsim::{Point, Scalar};

fn scalar() -> impl Strategy<Value = Scalar> {
    (-50i64..50, 1i64..20, -50i64..50, 1i64..20).prop_map(|(a, b, c, d)| Scalar::quadratic(a, b, c, d))
}

fn system_name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("tent"), Just("cantor"), Just("sierpinski")]
}

proptest! {
    #[test]
    fn scalar_field_laws(a in scalar(), b in scalar(), c in scalar()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        if !a.is_zero() {
            prop_assert_eq!(&a * &a.inverse().unwrap(), Scalar::one());
        }
        prop_assert!(((&a * &b).to_f64() - a.to_f64() * b.to_f64()).abs() <= 1e-9 * (1.0 + (a.to_f64() * b.to_f64()).abs()));
    }

    #[test]
    fn scalar_order_matches_floats(a in scalar(), b in scalar()) {
        let (x, y) = (a.to_f64(), b.to_f64());
        if (x - y).abs() > 1e-9 {
            prop_assert_eq!(a < b, x < y);
        }
    }

    #[test]
    fn scalar_text_round_trip(a in scalar()) {
        prop_assert_eq!(a.to_string().parse::<Scalar>().unwrap(), a);
    }

    #[test]
    fn flat_index_round_trip(letters in prop::collection::vec(0usize..3, 1..7)) {
        let w = MultiIndex::new(letters.clone(), 3).unwrap();
        let back = MultiIndex::from_flat(w.flat(3), letters.len(), 3);
        prop_assert_eq!(back.letters(), &letters[..]);
    }

    #[test]
    fn words_compose_by_concatenation(
        name in system_name(),
        u in prop::collection::vec(0usize..2, 1..4),
        v in prop::collection::vec(0usize..2, 1..4),
        start in 0usize..16,
    ) {
        let sys = builtin(name).unwrap();
        let grid = AttractorGrid::generate(&sys, 2);
        let x = &grid.points()[start % grid.len()];
        let (u, v) = (MultiIndex::new(u, sys.n_branches()).unwrap(), MultiIndex::new(v, sys.n_branches()).unwrap());
        // the first letter acts first; component maps read the other way round
        let uv = u.concat(&v);
        prop_assert_eq!(sys.apply_word(&uv, x), sys.apply_word(&v, &sys.apply_word(&u, x)));
        prop_assert_eq!(sys.compose(&uv).unwrap().apply(x), sys.apply_word(&uv, x));
        prop_assert_eq!(sys.component_map_apply(&uv, x), sys.component_map_apply(&u, &sys.component_map_apply(&v, x)));
    }

    #[test]
    fn left_inverse_undoes_each_branch(name in system_name(), j in 0usize..3, start in 0usize..64) {
        let sys = builtin(name).unwrap();
        let j = j % sys.n_branches();
        let grid = AttractorGrid::generate(&sys, 3);
        let y = &grid.points()[start % grid.len()];
        prop_assert_eq!(&sys.left_inverse(&sys.branch(j).apply(y)).unwrap(), y);
    }

    #[test]
    fn grids_nest(name in system_name(), depth in 0usize..4) {
        let sys = builtin(name).unwrap();
        let coarse = AttractorGrid::generate(&sys, depth);
        let fine = AttractorGrid::generate(&sys, depth + 1);
        prop_assert!(coarse.points().iter().all(|p| fine.contains(p)));
        prop_assert!(fine.points().iter().all(|p| sys.contains(p)));
    }

    #[test]
    fn float_formatting_round_trips(x in prop::num::f64::NORMAL) {
        let y: f64 = sci(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tent_orbit_sets_are_odd_dyadics(n in 0usize..7) {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        let half = Point::parse("1/2").unwrap();
        let d = IdealDescriptor::orbit(half, n);
        match closed_set(&t, &s, &d).unwrap() {
            ClosedSet::Points(ps) => {
                prop_assert_eq!(ps.len(), 1 << n);
                for p in &ps {
                    let q = &p.coords()[0] * &Scalar::from_int(1 << (n + 1));
                    prop_assert!(q.is_rational() && q.rational_part().is_integer());
                    prop_assert!(q.rational_part().numer() % 2u32 == 1u32.into());
                }
            }
            ClosedSet::Whole => prop_assert!(false, "orbit closed set is K"),
        }
    }

    #[test]
    fn distinct_tent_primitives_are_incomparable(a in 0usize..5, b in 0usize..5) {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        let half = Point::parse("1/2").unwrap();
        let (p, q) = (IdealDescriptor::orbit(half.clone(), a), IdealDescriptor::orbit(half, b));
        prop_assert_eq!(contains(&t, &s, &p, &q).unwrap(), a == b);
        prop_assert!(contains(&t, &s, &p, &IdealDescriptor::Zero).unwrap());
    }
}
