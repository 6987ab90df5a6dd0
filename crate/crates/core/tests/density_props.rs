use hyperlab_core::density::{q_lower_density, visit_set, NatSet, NormSpec};
use hyperlab_core::spaces::{IndexDomain, SeqVector, ShiftOp, WeightSeq};
use hyperlab_core::C64;
use proptest::prelude::*;

fn random_set(horizon: u64) -> impl Strategy<Value = NatSet> {
    prop::collection::vec(1..=horizon, 0..200).prop_map(move |v| NatSet::new(v, horizon).unwrap())
}

proptest! {
    #[test]
    fn ratios_grow_with_q(a in random_set(4096), n_max in 2u64..16) {
        let d1 = q_lower_density(&a, 1, n_max, None).unwrap();
        let d2 = q_lower_density(&a, 2, n_max, None).unwrap();
        let d3 = q_lower_density(&a, 3, n_max, None).unwrap();
        for ((p1, p2), p3) in d1.profile.iter().zip(&d2.profile).zip(&d3.profile) {
            prop_assert!(p1.ratio <= p2.ratio && p2.ratio <= p3.ratio);
        }
        prop_assert!(d1.liminf_proxy <= d2.liminf_proxy && d2.liminf_proxy <= d3.liminf_proxy);
    }

    #[test]
    fn powers_have_unit_density_at_matching_q(j in 1u32..4, n_max in 2u64..40) {
        let horizon = n_max.pow(j);
        let a = NatSet::new((1..=n_max).map(|m| m.pow(j)).collect(), horizon).unwrap();
        let d = q_lower_density(&a, j, n_max, None).unwrap();
        prop_assert!(d.profile.iter().all(|p| p.count == p.n));
        prop_assert_eq!(d.liminf_proxy, 1.0);
    }

    #[test]
    fn counts_add_over_disjoint_sets(a in random_set(2000), b in random_set(2000), x in 0u64..2000) {
        let b_only = NatSet::from_predicate(2000, |n| b.contains(n) && !a.contains(n));
        prop_assert!(a.intersection(&b_only).is_empty());
        let u = a.union(&b_only);
        prop_assert_eq!(u.count_up_to(x), a.count_up_to(x) + b_only.count_up_to(x));
        prop_assert_eq!(u.union(&b), u.clone());
    }

    #[test]
    fn subsets_have_smaller_density(a in random_set(1000), b in random_set(1000), q in 1u32..3) {
        let i = a.intersection(&b);
        prop_assert!(i.is_subset(&a));
        let di = q_lower_density(&i, q, 30, None).unwrap();
        let da = q_lower_density(&a, q, 30, None).unwrap();
        prop_assert!(di.liminf_proxy <= da.liminf_proxy);
    }

    #[test]
    fn visit_sets_grow_with_radius(c in 1.05..2.0f64, r1 in 0.1..1.0f64, extra in 0.0..1.0f64) {
        let op = ShiftOp::backward(WeightSeq::constant(c));
        let x = SeqVector::from_entries(IndexDomain::Naturals, (0..8).map(|i| (i, C64::new(0.5, 0.0)))).unwrap();
        let target = SeqVector::zero(IndexDomain::Naturals);
        let orbit = || (1..=16u64).map(|m| op.apply_power(&x, m));
        let small = visit_set(orbit(), &target, r1, NormSpec::Lp(2.0)).unwrap();
        let big = visit_set(orbit(), &target, r1 + extra, NormSpec::Lp(2.0)).unwrap();
        prop_assert!(small.is_subset(&big));
        prop_assert_eq!(big.horizon(), 16);
    }
}
