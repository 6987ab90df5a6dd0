use serde::{Deserialize, Serialize};

use super::mat::MatOp;
use crate::error::{Error, Result};
use crate::scalar::C64;
use crate::spaces::SeqVector;

/// How a vector acts as a functional on basis vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `v(e_j) = conj(v_j)`, the inner product of a Hilbert space.
    Hilbert,
    /// `v(e_j) = v_j`, the `ℓ^p × ℓ^{p'}` duality.
    Bilinear,
}

impl Pairing {
    pub fn functional(self, v: C64) -> C64 {
        match self {
            Pairing::Hilbert => v.conj(),
            Pairing::Bilinear => v,
        }
    }

    pub fn pair(self, x: &SeqVector, v: &SeqVector) -> Result<C64> {
        match self {
            Pairing::Hilbert => x.inner(v),
            Pairing::Bilinear => x.pair(v),
        }
    }
}

/// The operator `x ↦ v(x)·u`, written `u ⊗ v`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOne {
    pub left: SeqVector,
    pub right: SeqVector,
}

impl RankOne {
    pub fn new(left: SeqVector, right: SeqVector) -> Self {
        RankOne { left, right }
    }

    /// True when either factor vanishes, so the operator is zero.
    pub fn is_degenerate(&self) -> bool {
        self.left.is_zero() || self.right.is_zero()
    }

    pub fn apply(&self, x: &SeqVector, pairing: Pairing) -> Result<SeqVector> {
        let c = pairing.pair(x, &self.right)?;
        Ok(self.left.scale(c))
    }

    /// `tr(u ⊗ v) = v(u)`.
    pub fn trace(&self, pairing: Pairing) -> Result<C64> {
        pairing.pair(&self.left, &self.right)
    }

    /// Matrix on the window `[0, dim) × [0, dim)`.
    pub fn to_mat(&self, dim: usize, pairing: Pairing) -> Result<MatOp> {
        self.to_mat_window(0, dim, 0, dim, pairing)
    }

    /// Matrix with rows `row_lo..row_lo+rows` and columns `col_lo..col_lo+cols`.
    pub fn to_mat_window(
        &self,
        row_lo: i64,
        rows: usize,
        col_lo: i64,
        cols: usize,
        pairing: Pairing,
    ) -> Result<MatOp> {
        check_window(&self.left, row_lo, rows)?;
        check_window(&self.right, col_lo, cols)?;
        let u = self.left.to_dense(row_lo, rows);
        let v: Vec<C64> = self
            .right
            .to_dense(col_lo, cols)
            .into_iter()
            .map(|c| pairing.functional(c))
            .collect();
        Ok(outer(&u, &v).with_offsets(row_lo, col_lo))
    }
}

fn check_window(v: &SeqVector, lo: i64, len: usize) -> Result<()> {
    let hi = lo + len as i64;
    for i in [v.min_index(), v.max_index()].into_iter().flatten() {
        if i < lo || i >= hi {
            return Err(Error::SupportOutsideWindow { index: i, lo, hi });
        }
    }
    Ok(())
}

/// `M[i][j] = u_i · v_j` (no conjugation).
pub fn outer(u: &[C64], v: &[C64]) -> MatOp {
    MatOp::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
}
