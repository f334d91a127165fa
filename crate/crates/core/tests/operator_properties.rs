use contraction_core::{Path, PathOperator};
use proptest::prelude::*;

fn pl_path() -> impl Strategy<Value = Path> {
    (prop::collection::vec(0.01f64..0.99, 0..6), prop::collection::vec(-3.0f64..3.0, 8)).prop_map(|(mut bps, vals)| {
        bps.push(0.0);
        bps.push(1.0);
        bps.sort_by(f64::total_cmp);
        bps.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let values = vals[..bps.len()].to_vec();
        Path::linear(bps, values).unwrap()
    })
}

fn leaf() -> impl Strategy<Value = PathOperator> {
    prop_oneof![
        (-2.0f64..2.0).prop_map(PathOperator::scale),
        (1.01f64..5.0).prop_map(|b| PathOperator::front_split(b).unwrap()),
        (1.01f64..5.0).prop_map(|b| PathOperator::back_split(b).unwrap()),
    ]
}

fn operator() -> impl Strategy<Value = PathOperator> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| PathOperator::compose(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| PathOperator::sum(a, b)),
        ]
    })
}

proptest! {
    #[test]
    fn splits_preserve_sup_norm(f in pl_path(), beta in 1.001f64..10.0) {
        let front = PathOperator::front_split(beta).unwrap().apply(&f);
        let back = PathOperator::back_split(beta).unwrap().apply(&f);
        prop_assert_eq!(front.sup_norm(), f.sup_norm());
        prop_assert_eq!(back.sup_norm(), f.sup_norm());
    }

    #[test]
    fn operators_are_linear(op in operator(), f in pl_path(), g in pl_path(),
                            a in -2.0f64..2.0, b in -2.0f64..2.0,
                            ts in prop::collection::vec(0.0f64..=1.0, 100)) {
        let combined = op.apply(&contraction_core::affine_combine(&[a, b], &[&f, &g], None).unwrap());
        let (af, ag) = (op.apply(&f), op.apply(&g));
        for t in ts {
            let direct = a * af.eval(t).unwrap() + b * ag.eval(t).unwrap();
            prop_assert!((combined.eval(t).unwrap() - direct).abs() <= 1e-10);
        }
    }

    #[test]
    fn splits_glue_at_inverse_beta(f in pl_path(), g in pl_path(), beta in 1.001f64..10.0) {
        let f0 = f.sub(&Path::constant(f.kind(), f.eval(0.0).unwrap())).unwrap();
        let glued = contraction_core::affine_combine(
            &[1.0, 1.0],
            &[&PathOperator::front_split(beta).unwrap().apply(&f0), &PathOperator::back_split(beta).unwrap().apply(&g)],
            None,
        ).unwrap();
        let at = glued.eval(1.0 / beta).unwrap();
        prop_assert!((at - (f0.eval(1.0).unwrap() + g.eval(0.0).unwrap())).abs() <= 1e-12);
    }

    #[test]
    fn reported_norm_bounds_unit_ball_probes(op in operator(), f in pl_path()) {
        let sup = f.sup_norm();
        prop_assume!(sup > 1e-9);
        let unit = f.scaled(1.0 / sup);
        let norm = op.norm();
        prop_assert!(op.apply(&unit).sup_norm() <= norm.value * (1.0 + 1e-12) + 1e-12);
        prop_assert!(op.op_norm() == norm.value);
    }
}
