use contraction_core::ensemble::Ensemble;
use contraction_core::{affine_combine, Path, PathKind};
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

fn pc_path() -> impl Strategy<Value = Path> {
    (prop::collection::vec(0.01f64..0.99, 0..5), prop::collection::vec(-3.0f64..3.0, 8)).prop_map(|(mut bps, vals)| {
        bps.push(0.0);
        bps.push(1.0);
        bps.sort_by(f64::total_cmp);
        bps.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let values = vals[..bps.len() - 1].to_vec();
        Path::steps(bps, values).unwrap()
    })
}

fn any_path() -> impl Strategy<Value = Path> {
    prop_oneof![pl_path(), pc_path()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lp_norm_bounded_and_monotone(f in any_path()) {
        let sup = f.sup_norm();
        let norms: Vec<f64> = [2u32, 4, 6, 8].iter().map(|&p| f.lp_norm(p).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-12) + 1e-300);
        }
        prop_assert!(norms[3] <= sup * (1.0 + 1e-12));
    }

    #[test]
    fn mesh_membership_duality(f in any_path(), r in 0.0f64..1.0) {
        prop_assert_eq!(f.in_mesh_class(r), r > 0.0 && r <= f.mesh());
    }

    #[test]
    fn affine_combine_is_pointwise(f in pl_path(), g in pl_path(), h in pl_path(),
                                   a in -2.0f64..2.0, b in -2.0f64..2.0,
                                   ts in prop::collection::vec(0.0f64..=1.0, 100)) {
        let c = affine_combine(&[a, b], &[&f, &g], Some(&h)).unwrap();
        for t in ts {
            let direct = a * f.eval(t).unwrap() + b * g.eval(t).unwrap() + h.eval(t).unwrap();
            prop_assert!((c.eval(t).unwrap() - direct).abs() <= 1e-10);
        }
    }

    #[test]
    fn affine_combine_steps_is_pointwise(f in pc_path(), g in pc_path(), a in -2.0f64..2.0,
                                         ts in prop::collection::vec(0.0f64..=1.0, 100)) {
        let c = affine_combine(&[a, 1.0], &[&f, &g], None).unwrap();
        prop_assert_eq!(c.kind(), PathKind::PiecewiseConstant);
        for t in ts.into_iter().chain([1.0]) {
            let direct = a * f.eval(t).unwrap() + g.eval(t).unwrap();
            prop_assert!((c.eval(t).unwrap() - direct).abs() <= 1e-10);
        }
    }

    #[test]
    fn psi_is_one_only_on_the_diagonal(f in pl_path(), g in pl_path()) {
        for p in [4u32, 6] {
            prop_assert!((f.psi_smooth(&f, p).unwrap() - 1.0).abs() <= 1e-15);
            if f != g {
                prop_assert!(f.psi_smooth(&g, p).unwrap() > 1.0);
            }
        }
    }

    #[test]
    fn jsonl_round_trip(paths in prop::collection::vec(pl_path(), 1..8)) {
        let ens = Ensemble::from_paths(paths, "round trip").unwrap();
        let mut bytes = Vec::new();
        ens.write_jsonl(&mut bytes).unwrap();
        let back = Ensemble::read_jsonl(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.samples(), ens.samples());
        prop_assert_eq!(back.meta(), ens.meta());
    }
}

#[test]
fn lp_norm_approaches_sup() {
    let f = Path::linear(vec![0.0, 0.3, 1.0], vec![0.0, 1.0, -0.4]).unwrap();
    let sup = f.sup_norm();
    let gap = |p| 1.0 - f.lp_norm(p).unwrap() / sup;
    assert!(gap(64) < 0.1);
    assert!(gap(64) < gap(8));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// A path with mesh `r` that leaves the sup-ball of radius `γ` around
    /// `g` stays `(1-ϑ)γ` away from `g` on a set of measure at least
    /// `min(r, δ)/6`, where `δ` is the window on which `g` moves by at most
    /// `ϑγ`. The bound fails for small `ϑ` (a tent of height `γ` over
    /// `g = 0` exceeds `(1-ϑ)γ` only on a set of measure `2ϑr`), so `ϑ` is
    /// drawn from `[1/4, 1)`.
    #[test]
    fn excursion_lower_bound(f in pl_path(), g in pl_path(), theta in 0.25f64..1.0) {
        let gamma = f.sup_distance(&g);
        prop_assume!(gamma > 1e-9);
        let r = f.mesh();
        let delta = g.continuity_window(theta * gamma).unwrap();
        let measure = f.excursion_measure(&g, (1.0 - theta) * gamma).unwrap();
        prop_assert!(measure >= r.min(delta) / 6.0 - 1e-12, "measure {measure}, r {r}, delta {delta}");
    }
}

#[test]
fn excursion_tent_counterexample_for_small_theta() {
    let r = 0.5;
    let tent = Path::linear(vec![0.0, r, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
    let zero = Path::zero(PathKind::PiecewiseLinear);
    let theta = 0.01;
    let measure = tent.excursion_measure(&zero, 1.0 - theta).unwrap();
    assert!((measure - 2.0 * theta * r).abs() < 1e-12);
    let delta = zero.continuity_window(theta).unwrap();
    assert!(measure < r.min(delta) / 6.0);
}
