use std::collections::BTreeSet;

use serde::Serialize;

use super::vector::{check_exponent, SeqVector};
use crate::error::{Error, Result};
use crate::scalar::C64;

/// Largest `|F|` accepted by [`subset_sum_bound_check`].
pub const MAX_SUBSET_TERMS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `sup_{G⊆F} ‖Σ_{n∈G} x_n‖` over all `2^|F|` subsets.
    pub sup_subset_norm: f64,
    pub holds: bool,
}

/// Compares `‖Σ_{n∈F} λ_n x_n‖_p` against `4 sup_{n∈F}|λ_n| sup_{G⊆F} ‖Σ_{n∈G} x_n‖_p`.
///
/// `f` holds positions into `xs` and `lambdas`. Subsets are enumerated in
/// Gray-code order so each step adds or removes a single dense vector.
pub fn subset_sum_bound_check(
    xs: &[SeqVector],
    lambdas: &[C64],
    f: &[usize],
    p: f64,
) -> Result<SubsetBoundReport> {
    check_exponent(p)?;
    let positions: BTreeSet<usize> = f.iter().copied().collect();
    if positions.len() > MAX_SUBSET_TERMS {
        return Err(Error::TooLarge {
            what: "subset enumeration index set",
            len: positions.len(),
            max: MAX_SUBSET_TERMS,
        });
    }
    if xs.len() != lambdas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vectors but {} coefficients",
            xs.len(),
            lambdas.len()
        )));
    }
    let positions: Vec<usize> = positions.into_iter().collect();
    if let Some(&bad) = positions.iter().find(|&&i| i >= xs.len()) {
        return Err(Error::InvalidArgument(format!(
            "position {bad} outside the list of {} vectors",
            xs.len()
        )));
    }
    if let Some(first) = positions.first() {
        let domain = xs[*first].domain();
        if positions.iter().any(|&i| xs[i].domain() != domain) {
            return Err(Error::DimensionMismatch(
                "vectors live on different domains".into(),
            ));
        }
    }

    let support: BTreeSet<i64> = positions
        .iter()
        .flat_map(|&i| xs[i].iter().map(|(n, _)| n))
        .collect();
    let support: Vec<i64> = support.into_iter().collect();
    let dense: Vec<Vec<C64>> = positions
        .iter()
        .map(|&i| support.iter().map(|&n| xs[i].get(n)).collect())
        .collect();
    let norm = |v: &[C64]| {
        v.iter()
            .map(|c| c.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };

    let mut weighted = vec![C64::new(0.0, 0.0); support.len()];
    for (k, &i) in positions.iter().enumerate() {
        for (acc, x) in weighted.iter_mut().zip(&dense[k]) {
            *acc += lambdas[i] * x;
        }
    }
    let lhs = norm(&weighted);

    let mut running = vec![C64::new(0.0, 0.0); support.len()];
    let mut member = vec![false; positions.len()];
    let mut sup_subset: f64 = 0.0;
    for step in 1u64..(1u64 << positions.len()) {
        let bit = step.trailing_zeros() as usize;
        let sign = if member[bit] { -1.0 } else { 1.0 };
        member[bit] = !member[bit];
        for (acc, x) in running.iter_mut().zip(&dense[bit]) {
            *acc += x * sign;
        }
        sup_subset = sup_subset.max(norm(&running));
    }

    let sup_lambda = positions
        .iter()
        .map(|&i| lambdas[i].norm())
        .fold(0.0, f64::max);
    let rhs = 4.0 * sup_lambda * sup_subset;
    let tol = 1e-12 * lhs.max(rhs).max(1.0);
    Ok(SubsetBoundReport {
        lhs,
        rhs,
        sup_subset_norm: sup_subset,
        holds: lhs <= rhs + tol,
    })
}
