use hyperlab_core::algebra::{
    conjugate_by, conjugation, operator_norm, outer, schatten_norm, singular_values, trace, Factor,
    LowRank, MatOp,
};
use hyperlab_core::spaces::{ShiftOp, WeightSeq};
use hyperlab_core::C64;
use proptest::prelude::*;

fn cplx() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(n: usize) -> impl Strategy<Value = MatOp> {
    prop::collection::vec(cplx(), n * n).prop_map(move |d| MatOp::new(n, n, d).unwrap())
}

fn square_pair() -> impl Strategy<Value = (MatOp, MatOp)> {
    (1usize..7).prop_flat_map(|n| (matrix(n), matrix(n)))
}

fn schatten_p() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), 1.0..6.0f64]
}

/// `I - 2 v v^H / |v|^2`.
fn householder(v: &[C64]) -> MatOp {
    let n2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let vh: Vec<C64> = v.iter().map(|c| c.conj()).collect();
    let p = outer(v, &vh).scale(C64::new(2.0 / n2, 0.0));
    MatOp::identity(v.len()).sub(&p).unwrap()
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn schatten_class_is_an_ideal((a, b) in square_pair(), p in schatten_p()) {
        let ab = a.mul(&b).unwrap();
        let ba = b.mul(&a).unwrap();
        let bound = operator_norm(&a).unwrap() * schatten_norm(&b, p).unwrap();
        prop_assert!(schatten_norm(&ab, p).unwrap() <= bound * (1.0 + 1e-9) + 1e-12);
        prop_assert!(schatten_norm(&ba, p).unwrap() <= bound * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn trace_is_cyclic((a, b) in square_pair()) {
        let t1 = trace(&a.mul(&b).unwrap()).unwrap();
        let t2 = trace(&b.mul(&a).unwrap()).unwrap();
        prop_assert!((t1 - t2).norm() <= 1e-12 * (1.0 + t1.norm()));
    }

    #[test]
    fn hermitian_conjugation_preserves_self_adjointness((r, s) in square_pair()) {
        let h = s.add(&s.adjoint()).unwrap();
        let c = conjugate_by(Factor::Mat(&r), &h).unwrap();
        prop_assert!(c.max_abs_diff(&c.adjoint()).unwrap() <= 1e-12 * (1.0 + c.max_abs()));
    }

    #[test]
    fn singular_values_are_unitarily_invariant(
        a in (2usize..7).prop_flat_map(|n| (matrix(n), prop::collection::vec(cplx(), n), prop::collection::vec(cplx(), n))),
    ) {
        let (a, v1, v2) = a;
        prop_assume!(l2(&v1) > 1e-3 && l2(&v2) > 1e-3);
        let u = householder(&v1);
        let w = householder(&v2);
        let uaw = u.mul(&a).unwrap().mul(&w).unwrap();
        let s0 = singular_values(&a).unwrap().values;
        let s1 = singular_values(&uaw).unwrap().values;
        let scale = s0.first().copied().unwrap_or(0.0).max(1e-300);
        for (x, y) in s0.iter().zip(&s1) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn rank_one_schatten_norm_is_product_of_lengths(
        uv in (1usize..12).prop_flat_map(|n| (prop::collection::vec(cplx(), n), prop::collection::vec(cplx(), n))),
        p in schatten_p(),
    ) {
        let (u, v) = uv;
        let expected = l2(&u) * l2(&v);
        let m = outer(&u, &v);
        let got = schatten_norm(&m, p).unwrap();
        prop_assert!((got - expected).abs() <= 1e-10 * expected.max(1e-300));
        let mut lr = LowRank::new(u.len(), v.len());
        lr.push(u.clone(), v.clone()).unwrap();
        prop_assert!((lr.schatten_norm(p).unwrap() - expected).abs() <= 1e-10 * expected.max(1e-300));
    }

    #[test]
    fn shift_conjugation_is_linear_in_s(
        (s1, s2) in (1usize..6).prop_flat_map(|n| (matrix(n), matrix(n))),
        wc in (0.5..2.0f64),
        a in cplx(),
    ) {
        let b = ShiftOp::backward(WeightSeq::constant(wc));
        let f = ShiftOp::forward(WeightSeq::constant(1.0 / wc));
        let combo = s1.add(&s2.scale(a)).unwrap();
        let lhs = conjugation(Factor::Shift(&b), &combo, Factor::Shift(&f)).unwrap();
        let r1 = conjugation(Factor::Shift(&b), &s1, Factor::Shift(&f)).unwrap();
        let r2 = conjugation(Factor::Shift(&b), &s2, Factor::Shift(&f)).unwrap();
        let rhs = r1.add(&r2.scale(a)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * (1.0 + lhs.max_abs()));
    }
}
