use serde::Serialize;

use super::mat::MatOp;
use crate::error::{Error, Result};
use crate::scalar::Wide;
use crate::spaces::{IndexDomain, SeqVector, ShiftOp};

/// A left or right factor in `S ↦ R S T`.
#[derive(Clone, Copy, Debug)]
pub enum Factor<'a> {
    Identity,
    Mat(&'a MatOp),
    Shift(&'a ShiftOp),
}

/// How far a shift factor widened the truncation window, recorded for reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WindowGrowth {
    pub rows_below: usize,
    pub rows_above: usize,
    pub cols_below: usize,
    pub cols_above: usize,
}

fn shift_domain(op: &ShiftOp, offset: i64) -> IndexDomain {
    match op.domain() {
        Some(d) => d,
        None => op.weights().map(|w| w.domain).unwrap_or(if offset < 0 {
            IndexDomain::Integers
        } else {
            IndexDomain::Naturals
        }),
    }
}

/// Applies `op` to each column of `s`, widening the row window by the
/// operator's band reach so that no image mass is cut off.
fn shift_columns(op: &ShiftOp, s: &MatOp) -> Result<(MatOp, usize, usize)> {
    let domain = shift_domain(op, s.row_offset());
    let (down, up) = op.reach();
    let mut lo = s.row_offset() - down as i64;
    if domain == IndexDomain::Naturals {
        lo = lo.max(0);
    }
    let hi = s.row_offset() + (s.rows() + up) as i64;
    let rows = (hi - lo) as usize;
    let mut out = MatOp::zeros(rows, s.cols()).with_offsets(lo, s.col_offset());
    for j in 0..s.cols() {
        let col = SeqVector::from_entries(
            domain,
            (0..s.rows()).map(|i| (s.row_offset() + i as i64, s.get(i, j))),
        )?;
        let img = op.apply(&col)?;
        for (n, c) in img.iter() {
            write_entry(&mut out, (n - lo) as usize, j, c, n)?;
        }
    }
    Ok((out, (s.row_offset() - lo) as usize, up))
}

fn write_entry(m: &mut MatOp, i: usize, j: usize, c: Wide, index: i64) -> Result<()> {
    let z = c.to_c64();
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Overflow { index });
    }
    m.set(i, j, z);
    Ok(())
}

/// `R S T` computed exactly on the union of the windows reached.
///
/// Matrix factors must share the basis window of `s` along the contracted
/// side. Shift factors are applied column-wise (for `R`) and, through the
/// transpose, row-wise (for `T`); the output window grows by each shift's
/// band reach.
pub fn conjugation(r: Factor<'_>, s: &MatOp, t: Factor<'_>) -> Result<MatOp> {
    conjugation_with_growth(r, s, t).map(|(m, _)| m)
}

pub fn conjugation_with_growth(
    r: Factor<'_>,
    s: &MatOp,
    t: Factor<'_>,
) -> Result<(MatOp, WindowGrowth)> {
    let mut growth = WindowGrowth::default();
    let rs = match r {
        Factor::Identity => s.clone(),
        Factor::Mat(m) => m.mul(s)?,
        Factor::Shift(op) => {
            let (m, below, above) = shift_columns(op, s)?;
            growth.rows_below = below;
            growth.rows_above = above;
            m
        }
    };
    let rst = match t {
        Factor::Identity => rs,
        Factor::Mat(m) => rs.mul(m)?,
        Factor::Shift(op) => {
            let (m, below, above) = shift_columns(&op.transpose(), &rs.transpose())?;
            growth.cols_below = below;
            growth.cols_above = above;
            m.transpose()
        }
    };
    Ok((rst, growth))
}

/// `𝔏_R(S) = R S`.
pub fn left_multiplication(r: Factor<'_>, s: &MatOp) -> Result<MatOp> {
    conjugation(r, s, Factor::Identity)
}

/// `ℜ_T(S) = S T`.
pub fn right_multiplication(s: &MatOp, t: Factor<'_>) -> Result<MatOp> {
    conjugation(Factor::Identity, s, t)
}

/// `C_R(S) = R S R*` with the Hilbert adjoint.
pub fn conjugate_by(r: Factor<'_>, s: &MatOp) -> Result<MatOp> {
    match r {
        Factor::Identity => Ok(s.clone()),
        Factor::Mat(m) => {
            let adj = m.adjoint();
            conjugation(r, s, Factor::Mat(&adj))
        }
        Factor::Shift(op) => {
            let adj = op.hilbert_adjoint();
            conjugation(r, s, Factor::Shift(&adj))
        }
    }
}

/// `C_{R,T}^n (S)`.
pub fn conjugation_power(r: Factor<'_>, s: &MatOp, t: Factor<'_>, n: usize) -> Result<MatOp> {
    let mut cur = s.clone();
    for _ in 0..n {
        cur = conjugation(r, &cur, t)?;
    }
    Ok(cur)
}

/// Embeds `s` into a larger zero matrix covering the given window.
pub fn embed(s: &MatOp, row_lo: i64, rows: usize, col_lo: i64, cols: usize) -> Result<MatOp> {
    let r0 = s.row_offset() - row_lo;
    let c0 = s.col_offset() - col_lo;
    if r0 < 0 || c0 < 0 || r0 as usize + s.rows() > rows || c0 as usize + s.cols() > cols {
        return Err(Error::DimensionMismatch(
            "target window does not contain the matrix".into(),
        ));
    }
    let mut out = MatOp::zeros(rows, cols).with_offsets(row_lo, col_lo);
    for i in 0..s.rows() {
        for j in 0..s.cols() {
            out.set(r0 as usize + i, c0 as usize + j, s.get(i, j));
        }
    }
    Ok(out)
}

/// Restricts `s` to a sub-window, dropping entries outside it.
pub fn restrict(s: &MatOp, row_lo: i64, rows: usize, col_lo: i64, cols: usize) -> MatOp {
    MatOp::from_fn(rows, cols, |i, j| {
        s.at_index(row_lo + i as i64, col_lo + j as i64)
    })
    .with_offsets(row_lo, col_lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Pairing, RankOne};
    use crate::scalar::C64;
    use crate::spaces::WeightSeq;

    fn e(n: i64) -> SeqVector {
        SeqVector::basis(IndexDomain::Naturals, n).unwrap()
    }

    fn unit(i: i64, j: i64, dim: usize) -> MatOp {
        RankOne::new(e(i), e(j))
            .to_mat(dim, Pairing::Hilbert)
            .unwrap()
    }

    #[test]
    fn identity_factors() {
        let s = MatOp::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let out = conjugation(Factor::Identity, &s, Factor::Identity).unwrap();
        assert_eq!(out, s);
        let id = MatOp::identity(3);
        let out = conjugation(Factor::Mat(&id), &s, Factor::Mat(&id)).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn backward_forward_on_unit() {
        let b = ShiftOp::backward(WeightSeq::constant(2.0));
        let f = ShiftOp::forward(WeightSeq::constant(2.0));
        let (i, j) = (3, 2);
        let out = conjugation(Factor::Shift(&b), &unit(i, j, 6), Factor::Shift(&f)).unwrap();
        // B E_ij F = w_i μ_j E_{i-1, j-1}
        for r in 0..out.rows() as i64 {
            for c in 0..out.cols() as i64 {
                let want = if (r, c) == (i - 1, j - 1) { 4.0 } else { 0.0 };
                assert_eq!(out.at_index(r, c), C64::new(want, 0.0));
            }
        }
        let killed = conjugation(Factor::Shift(&b), &unit(2, 0, 4), Factor::Shift(&f)).unwrap();
        assert_eq!(killed.max_abs(), 0.0);
    }

    #[test]
    fn window_grows_by_reach() {
        let f = ShiftOp::forward(WeightSeq::constant(1.0));
        let (out, g) =
            conjugation_with_growth(Factor::Shift(&f), &unit(3, 3, 4), Factor::Identity).unwrap();
        assert_eq!(out.rows(), 5);
        assert_eq!(g.rows_above, 1);
        assert_eq!(out.at_index(4, 3), C64::new(1.0, 0.0));
    }

    #[test]
    fn hermitian_preserved() {
        let r = ShiftOp::forward(WeightSeq::constant_complex(C64::new(0.5, 1.5)));
        let s = MatOp::from_fn(4, 4, |i, j| {
            let a = C64::new((i + 2 * j) as f64, (i as f64) - (j as f64));
            if i <= j {
                a
            } else {
                C64::new((j + 2 * i) as f64, (j as f64) - (i as f64)).conj()
            }
        });
        assert!(s.max_abs_diff(&s.adjoint()).unwrap() == 0.0);
        let out = conjugate_by(Factor::Shift(&r), &s).unwrap();
        assert!(out.max_abs_diff(&out.adjoint()).unwrap() < 1e-12);
    }

    #[test]
    fn mat_factor_window_mismatch() {
        let s = MatOp::identity(3);
        let r = MatOp::identity(2);
        assert!(conjugation(Factor::Mat(&r), &s, Factor::Identity).is_err());
    }
}
