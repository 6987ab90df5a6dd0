use hyperlab_core::criteria::{
    check_schatten_summability, check_unilateral_growth, CheckGrid, IndexRange,
};
use hyperlab_core::spaces::{IndexDomain, WeightRule, WeightSeq};
use hyperlab_core::C64;
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = WeightSeq> {
    prop_oneof![
        (0.5..3.0f64).prop_map(WeightSeq::constant),
        prop::collection::vec((0.3..3.0f64).prop_map(|r| C64::new(r, 0.0)), 1..4).prop_map(
            |values| WeightSeq::new(
                WeightRule::Periodic { values, offset: 0 },
                IndexDomain::Naturals
            )
        ),
        Just(WeightSeq::successor_ratio()),
    ]
}

fn small_grid(i_hi: i64, j_hi: i64, r_max: u64, q: u32) -> CheckGrid {
    CheckGrid {
        i_range: IndexRange::new(0, i_hi),
        j_range: IndexRange::new(0, j_hi),
        r_max,
        n_max: 64,
        ..CheckGrid::default()
    }
    .with_q(q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refining_the_grid_only_tightens_the_verdict(
        w in weights(),
        mu in weights(),
        (i1, j1, r1) in (0i64..3, 0i64..3, 0u64..8),
        (di, dj, dr) in (0i64..3, 0i64..3, 0u64..8),
        q in 1u32..3,
        p in 1.0..3.0f64,
    ) {
        let coarse = small_grid(i1, j1, r1, q);
        let fine = small_grid(i1 + di, j1 + dj, r1 + dr, q);
        let vc = check_unilateral_growth(&w, &mu, &coarse).unwrap();
        let vf = check_unilateral_growth(&w, &mu, &fine).unwrap();
        prop_assert!(vf.margin <= vc.margin + 1e-12);
        prop_assert!(!vf.is_satisfied() || vc.is_satisfied());

        let sc = check_schatten_summability(&w, &mu, p, &coarse).unwrap();
        let sf = check_schatten_summability(&w, &mu, p, &fine).unwrap();
        prop_assert!(sf.margin <= sc.margin + 1e-12);
        prop_assert!(!sf.is_satisfied() || sc.is_satisfied());
    }

    #[test]
    fn log_space_tail_matches_direct_sum(c in 1.0..2.5f64, d in 1.0..2.5f64, p in 1.0..3.0f64, i in 0i64..4, j in 0i64..4) {
        let grid = CheckGrid {
            i_range: IndexRange::new(i, i),
            j_range: IndexRange::new(j, j),
            r_max: 0,
            n_max: 16,
            ..CheckGrid::default()
        };
        let v = check_schatten_summability(&WeightSeq::constant(c), &WeightSeq::constant(d), p, &grid).unwrap();
        let direct: f64 = (8..=16)
            .map(|n: i32| (c.powi(n + i as i32) * d.powi(n + j as i32)).powf(-p))
            .sum();
        let expected = grid.tail_tolerance.ln() - direct.ln();
        let got = v.condition("forward_tail").unwrap().margin;
        prop_assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{got} vs {expected}");
        prop_assert_eq!(v.is_satisfied(), direct < grid.tail_tolerance);
    }
}
