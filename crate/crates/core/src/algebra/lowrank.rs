//! Operators stored as a short sum `Σ_k x_k y_k^H` of outer products.
//!
//! Residuals of eigen-identities are differences of nearly equal rank-one
//! matrices. Forming them densely leaves a rounding floor near `1e-16` times
//! the operand size; keeping the factors and reducing to a `k × k` core keeps
//! residuals accurate down to the size of the factors themselves.

use super::mat::MatOp;
use super::svd::{singular_values, SingularSpectrum};
use crate::error::{Error, Result};
use crate::scalar::C64;
use crate::spaces::check_exponent;

#[derive(Clone, Debug)]
pub struct LowRank {
    rows: usize,
    cols: usize,
    left: Vec<Vec<C64>>,
    right: Vec<Vec<C64>>,
}

impl LowRank {
    pub fn new(rows: usize, cols: usize) -> Self {
        LowRank {
            rows,
            cols,
            left: Vec::new(),
            right: Vec::new(),
        }
    }

    /// Adds the term `x y^H`.
    pub fn push(&mut self, x: Vec<C64>, y: Vec<C64>) -> Result<()> {
        if x.len() != self.rows || y.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "outer product of lengths {}x{} in a {}x{} operator",
                x.len(),
                y.len(),
                self.rows,
                self.cols
            )));
        }
        self.left.push(x);
        self.right.push(y);
        Ok(())
    }

    pub fn terms(&self) -> usize {
        self.left.len()
    }

    pub fn to_mat(&self) -> MatOp {
        MatOp::from_fn(self.rows, self.cols, |i, j| {
            self.left
                .iter()
                .zip(&self.right)
                .map(|(x, y)| x[i] * y[j].conj())
                .sum()
        })
    }

    /// Nonzero part of the spectrum: at most `terms()` values.
    pub fn singular_values(&self) -> Result<SingularSpectrum> {
        if self.left.is_empty() {
            return Ok(SingularSpectrum { values: vec![0.0] });
        }
        let (_, r1) = thin_qr(&self.left);
        let (_, r2) = thin_qr(&self.right);
        let k = self.left.len();
        // core = R1 R2^H
        let core = MatOp::from_fn(k, k, |i, j| {
            (0..k).map(|t| r1[t][i] * r2[t][j].conj()).sum()
        });
        singular_values(&core)
    }

    pub fn operator_norm(&self) -> Result<f64> {
        Ok(self.singular_values()?.largest())
    }

    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(self.singular_values()?.lp(p))
    }
}

fn scaled_norm(v: &[C64]) -> f64 {
    let m = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|c| (c / m).norm_sqr()).sum::<f64>().sqrt()
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
/// `r[k][i]` is the coefficient of `q_i` in column `k` (so `R` is stored by column).
fn thin_qr(cols: &[Vec<C64>]) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let k = cols.len();
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut r = vec![vec![C64::new(0.0, 0.0); k]; k];
    for (c, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let proj: C64 = qi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                r[c][i] += proj;
                for (x, a) in v.iter_mut().zip(qi) {
                    *x -= proj * a;
                }
            }
        }
        let n = scaled_norm(&v);
        r[c][c] = C64::new(n, 0.0);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        q.push(v);
    }
    (q, r)
}
