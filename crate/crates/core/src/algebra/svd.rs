//! One-sided (Hestenes) Jacobi singular value decomposition.

use std::fmt::Write as _;

use serde::Serialize;

use super::mat::MatOp;
use crate::error::{Error, Result};
use crate::scalar::C64;

/// Largest row or column count accepted by the decomposition.
pub const MAX_SVD_DIM: usize = 2048;
const TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 60;

/// Singular values in nonincreasing order; `min(rows, cols)` of them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(Σ σ_i^p)^{1/p}`, scaled by `σ_1` against overflow.
    pub fn lp(&self, p: f64) -> f64 {
        let top = self.largest();
        if top == 0.0 {
            return 0.0;
        }
        let s: f64 = self.values.iter().map(|s| (s / top).powf(p)).sum();
        top * s.powf(1.0 / p)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sigma\n");
        for (i, s) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, s).unwrap();
        }
        out
    }
}

/// `A = U diag(σ) V^H` with `U` of size `rows × k`, `V` of size `cols × k`,
/// `k = min(rows, cols)`. Columns of `U` paired with zero singular values are zero.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: MatOp,
    pub sigma: Vec<f64>,
    pub v: MatOp,
    pub sweeps: usize,
}

fn validate(a: &MatOp) -> Result<()> {
    let big = a.rows().max(a.cols());
    if big > MAX_SVD_DIM {
        return Err(Error::TooLarge {
            what: "matrix dimension for SVD",
            len: big,
            max: MAX_SVD_DIM,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteEntries);
    }
    Ok(())
}

fn dot_h(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Rotates column pairs until all are mutually orthogonal. Returns the sweep count.
fn orthogonalize(cols: &mut [Vec<C64>], mut v: Option<&mut [Vec<C64>]>) -> usize {
    let n = cols.len();
    for sweep in 1..=MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = norm_sqr(&cols[i]);
                let beta = norm_sqr(&cols[j]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot_h(&cols[i], &cols[j]);
                let g = gamma.norm();
                if g <= TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(cols, i, j, c, s, phase);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, i, j, c, s, phase);
                }
            }
        }
        if !rotated {
            return sweep;
        }
    }
    MAX_SWEEPS
}

fn rotate(cols: &mut [Vec<C64>], i: usize, j: usize, c: f64, s: f64, phase: C64) {
    let (left, right) = cols.split_at_mut(j);
    let (ci, cj) = (&mut left[i], &mut right[0]);
    let pc = phase.conj();
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let xo = *x;
        let yo = *y;
        *x = xo * c - pc * yo * s;
        *y = phase * xo * s + yo * c;
    }
}

fn columns(a: &MatOp) -> Vec<Vec<C64>> {
    (0..a.cols()).map(|j| a.column(j)).collect()
}

fn decompose(a: &MatOp, want_vectors: bool) -> Result<Svd> {
    validate(a)?;
    if a.rows() < a.cols() {
        let t = decompose(&a.adjoint(), want_vectors)?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
            sweeps: t.sweeps,
        });
    }
    let (m, n) = (a.rows(), a.cols());
    let scale = a.max_abs();
    if scale == 0.0 {
        return Ok(Svd {
            u: MatOp::zeros(m, n).with_offsets(a.row_offset(), 0),
            sigma: vec![0.0; n],
            v: MatOp::identity(n).with_offsets(a.col_offset(), 0),
            sweeps: 0,
        });
    }
    let mut cols = columns(&a.scale(C64::new(1.0 / scale, 0.0)));
    let mut vcols: Vec<Vec<C64>> = if want_vectors {
        (0..n)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                e
            })
            .collect()
    } else {
        Vec::new()
    };
    let sweeps = orthogonalize(&mut cols, want_vectors.then_some(vcols.as_mut_slice()));

    let norms: Vec<f64> = cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&k| norms[k] * scale).collect();

    let (u, v) = if want_vectors {
        let u = MatOp::from_fn(m, n, |i, k| {
            let src = order[k];
            if norms[src] > 0.0 {
                cols[src][i] / norms[src]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let v = MatOp::from_fn(n, n, |i, k| vcols[order[k]][i]);
        (u, v)
    } else {
        (MatOp::zeros(1, 1), MatOp::zeros(1, 1))
    };
    Ok(Svd {
        u: u.with_offsets(a.row_offset(), 0),
        sigma,
        v: v.with_offsets(a.col_offset(), 0),
        sweeps,
    })
}

pub fn svd(a: &MatOp) -> Result<Svd> {
    decompose(a, true)
}

pub fn singular_values(a: &MatOp) -> Result<SingularSpectrum> {
    decompose(a, false).map(|d| SingularSpectrum { values: d.sigma })
}

/// Truncated pseudo-inverse `V Σ^+ U^H`, dropping `σ_i ≤ rel_cutoff·σ_1`.
/// Returns the inverse together with the retained rank.
pub fn pseudo_inverse(a: &MatOp, rel_cutoff: f64) -> Result<(MatOp, usize)> {
    let d = svd(a)?;
    let top = d.sigma.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..d.sigma.len())
        .filter(|&k| top > 0.0 && d.sigma[k] > rel_cutoff * top)
        .collect();
    let inv = MatOp::from_fn(a.cols(), a.rows(), |i, j| {
        keep.iter()
            .map(|&k| d.v.get(i, k) * d.u.get(j, k).conj() / d.sigma[k])
            .sum()
    })
    .with_offsets(a.col_offset(), a.row_offset());
    Ok((inv, keep.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn identity_spectrum() {
        let s = singular_values(&MatOp::identity(3)).unwrap();
        assert_eq!(s.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted() {
        let a = MatOp::diagonal(&[c(3.0), c(4.0)]);
        let s = singular_values(&a).unwrap();
        assert_eq!(s.values, vec![4.0, 3.0]);
    }

    #[test]
    fn wide_matrix_reconstructs() {
        let a = MatOp::new(
            2,
            3,
            vec![
                c(1.0),
                C64::new(0.0, 2.0),
                c(0.5),
                c(-1.0),
                c(3.0),
                C64::new(1.0, 1.0),
            ],
        )
        .unwrap();
        let d = svd(&a).unwrap();
        assert_eq!(d.sigma.len(), 2);
        let sig = MatOp::diagonal(&d.sigma.iter().map(|&s| c(s)).collect::<Vec<_>>());
        let back = d.u.clone().mul(&sig).unwrap().mul(&d.v.adjoint()).unwrap();
        assert!(back.max_abs_diff(&a).unwrap() < 1e-13);
    }

    #[test]
    fn zero_matrix() {
        let s = singular_values(&MatOp::zeros(3, 2)).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_oversized() {
        let a = MatOp::zeros(1, MAX_SVD_DIM + 1);
        assert!(matches!(singular_values(&a), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn pseudo_inverse_of_rank_deficient() {
        let a = MatOp::new(2, 2, vec![c(1.0), c(1.0), c(1.0), c(1.0)]).unwrap();
        let (p, rank) = pseudo_inverse(&a, 1e-10).unwrap();
        assert_eq!(rank, 1);
        for &x in p.data() {
            assert!((x - c(0.25)).norm() < 1e-14);
        }
    }

    #[test]
    fn csv_output() {
        let s = SingularSpectrum {
            values: vec![2.0, 0.5],
        };
        assert_eq!(s.to_csv(), "index,sigma\n1,2\n2,0.5\n");
    }
}
