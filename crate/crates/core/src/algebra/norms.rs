use serde::Serialize;

use super::mat::MatOp;
use super::svd::singular_values;
use crate::error::{Error, Result};
use crate::scalar::C64;
use crate::spaces::check_exponent;

/// Relative tolerance for the disjointness products in [`orthogonal_sum_additivity`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

pub fn schatten_norm(a: &MatOp, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(singular_values(a)?.lp(p))
}

pub fn operator_norm(a: &MatOp) -> Result<f64> {
    Ok(singular_values(a)?.largest())
}

pub fn trace(a: &MatOp) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok((0..a.rows()).map(|i| a.get(i, i)).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdditivityReport {
    /// `‖Σ T_n‖_p^p`
    pub lhs: f64,
    /// `Σ ‖T_n‖_p^p`
    pub rhs: f64,
    pub mutual_orthogonality_ok: bool,
    /// First pair `(n, m)` whose products `T_n* T_m` or `T_n T_m*` fail to vanish.
    pub failing_pair: Option<(usize, usize)>,
    /// Largest entry of any cross product, relative to `‖T_n‖_F ‖T_m‖_F`.
    pub max_cross_product: f64,
}

/// Checks `T_n* T_m = T_n T_m* = 0` for `n ≠ m` and compares both sides of
/// `‖Σ_n T_n‖_p^p = Σ_n ‖T_n‖_p^p`. The comparison is reported even when the
/// orthogonality hypothesis fails.
pub fn orthogonal_sum_additivity(ts: &[MatOp], p: f64) -> Result<AdditivityReport> {
    check_exponent(p)?;
    let Some(first) = ts.first() else {
        return Err(Error::InvalidArgument("empty operator family".into()));
    };
    let mut sum = first.clone();
    for t in &ts[1..] {
        sum = sum.add(t)?;
    }
    let lhs = schatten_norm(&sum, p)?.powf(p);
    let mut rhs = 0.0;
    for t in ts {
        rhs += schatten_norm(t, p)?.powf(p);
    }

    let norms: Vec<f64> = ts.iter().map(|t| t.frobenius_norm()).collect();
    let plain: Vec<MatOp> = ts.iter().map(|t| t.clone().with_offsets(0, 0)).collect();
    let adjoints: Vec<MatOp> = plain.iter().map(|t| t.adjoint()).collect();
    let mut failing_pair = None;
    let mut max_cross: f64 = 0.0;
    for n in 0..ts.len() {
        for m in 0..ts.len() {
            if n == m {
                continue;
            }
            let scale = norms[n] * norms[m];
            if scale == 0.0 {
                continue;
            }
            let left = adjoints[n].mul(&plain[m])?;
            let right = plain[n].mul(&adjoints[m])?;
            let cross = left.max_abs().max(right.max_abs()) / scale;
            max_cross = max_cross.max(cross);
            if cross > ORTHOGONALITY_TOL && failing_pair.is_none() {
                failing_pair = Some((n, m));
            }
        }
    }
    Ok(AdditivityReport {
        lhs,
        rhs,
        mutual_orthogonality_ok: failing_pair.is_none(),
        failing_pair,
        max_cross_product: max_cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(i: usize, j: usize, dim: usize, v: C64) -> MatOp {
        let mut m = MatOp::zeros(dim, dim);
        m.set(i, j, v);
        m
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn identity_norms() {
        let i = MatOp::identity(4);
        assert!((schatten_norm(&i, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((schatten_norm(&i, 3.0).unwrap() - 4f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(operator_norm(&i).unwrap(), 1.0);
        assert_eq!(trace(&i).unwrap(), C64::new(4.0, 0.0));
    }

    #[test]
    fn trace_rejects_rectangular() {
        assert!(matches!(
            trace(&MatOp::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn nilpotent_trace() {
        let m = MatOp::from_fn(3, 3, |i, j| {
            if j > i {
                C64::new(1.0, 1.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert_eq!(trace(&m).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn diagonal_units_add() {
        let r =
            orthogonal_sum_additivity(&[unit(0, 0, 2, one()), unit(1, 1, 2, one())], 1.0).unwrap();
        assert!(r.mutual_orthogonality_ok);
        assert!((r.lhs - 2.0).abs() < 1e-14 && (r.rhs - 2.0).abs() < 1e-14);
    }

    #[test]
    fn disjoint_scaled_units() {
        let (a, b, g) = (C64::new(0.5, 0.0), C64::new(0.0, 2.0), C64::new(-1.5, 1.0));
        let ts = [unit(0, 3, 6, a), unit(1, 4, 6, b), unit(2, 5, 6, g)];
        let r = orthogonal_sum_additivity(&ts, 3.0).unwrap();
        let want = a.norm().powi(3) + b.norm().powi(3) + g.norm().powi(3);
        assert!(r.mutual_orthogonality_ok);
        assert!((r.lhs - want).abs() < 1e-12 * want);
        assert!((r.rhs - want).abs() < 1e-12 * want);
    }

    #[test]
    fn shared_row_is_flagged() {
        // T_1 = e_0⊗e_0*, T_2 = e_0⊗e_1*: T_1* T_2 = e_0⊗e_1* ≠ 0
        let ts = [unit(0, 0, 2, one()), unit(0, 1, 2, one())];
        let r = orthogonal_sum_additivity(&ts, 2.0).unwrap();
        assert!(!r.mutual_orthogonality_ok);
        assert_eq!(r.failing_pair, Some((0, 1)));
        let t1_t2h = ts[0].mul(&ts[1].adjoint()).unwrap();
        assert_eq!(t1_t2h.max_abs(), 0.0);
    }
}
