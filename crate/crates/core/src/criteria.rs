//! Grid-relative checkers for the weight conditions that make conjugation
//! maps of weighted shifts q-frequently hypercyclic.
//!
//! All products are accumulated as sums of `ln |w_t|`; phases never matter.
//! A limit "uniformly in r" is finitized on a [`CheckGrid`], and every verdict
//! says which grid point decided it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::C64;
use crate::spaces::{IndexDomain, LogPrefix, WeightSeq};

/// Largest log-prefix table a checker will build.
pub const MAX_LOG_TABLE: usize = 1 << 24;

/// Inclusive index range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub lo: i64,
    pub hi: i64,
}

impl IndexRange {
    pub fn new(lo: i64, hi: i64) -> Self {
        IndexRange { lo, hi }
    }

    pub fn iter(self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckGrid {
    pub i_range: IndexRange,
    pub j_range: IndexRange,
    pub r_max: u64,
    pub n_max: u64,
    pub q: u32,
    /// Log-product a diverging sequence must exceed at `n = n_max`.
    pub growth_threshold: f64,
    /// Bound for tail sums and for products that must vanish.
    pub tail_tolerance: f64,
}

impl Default for CheckGrid {
    fn default() -> Self {
        CheckGrid {
            i_range: IndexRange::new(0, 4),
            j_range: IndexRange::new(0, 4),
            r_max: 32,
            n_max: 512,
            q: 1,
            growth_threshold: 1e6f64.ln(),
            tail_tolerance: 1e-2,
        }
    }
}

impl CheckGrid {
    /// Default grid with `i, j ∈ [−4, 4]`.
    pub fn bilateral() -> Self {
        CheckGrid {
            i_range: IndexRange::new(-4, 4),
            j_range: IndexRange::new(-4, 4),
            ..CheckGrid::default()
        }
    }

    pub fn with_q(mut self, q: u32) -> Self {
        self.q = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_range.lo > self.i_range.hi || self.j_range.lo > self.j_range.hi {
            return Err(Error::InvalidArgument(
                "grid index ranges must be nonempty".into(),
            ));
        }
        if self.n_max < 8 {
            return Err(Error::InvalidArgument(format!(
                "n_max = {} must be at least 8",
                self.n_max
            )));
        }
        if self.q == 0 {
            return Err(Error::InvalidArgument("q must be at least 1".into()));
        }
        if !(self.tail_tolerance > 0.0) || !self.growth_threshold.is_finite() {
            return Err(Error::InvalidArgument(
                "grid tolerances must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    fn unilateral_ok(&self) -> Result<()> {
        if self.i_range.lo < 0 || self.j_range.lo < 0 {
            return Err(Error::InvalidArgument(
                "unilateral conditions need i, j ≥ 0".into(),
            ));
        }
        Ok(())
    }

    /// `(n + r)^q − r^q`.
    fn forward_index(&self, n: u64, r: u64) -> Result<i64> {
        let hi = (n + r)
            .checked_pow(self.q)
            .ok_or_else(|| Error::InvalidArgument("grid index overflows".into()))?;
        Ok((hi - r.pow(self.q)) as i64)
    }

    /// `r^q − (r − n)^q` for `n ≤ r`.
    fn backward_len(&self, n: u64, r: u64) -> i64 {
        (r.pow(self.q) - (r - n).pow(self.q)) as i64
    }

    fn max_forward_index(&self) -> Result<i64> {
        self.forward_index(self.n_max, self.r_max)
    }

    fn grid_points(&self) -> Vec<(i64, i64, u64)> {
        let mut out = Vec::new();
        for i in self.i_range.iter() {
            for j in self.j_range.iter() {
                for r in 0..=self.r_max {
                    out.push((i, j, r));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    SatisfiedOnGrid,
    ViolatedWithWitness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: String,
    pub i: i64,
    pub j: i64,
    pub r: u64,
    pub n: u64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub satisfied: bool,
    /// Smallest slack over the grid; negative when violated.
    pub margin: f64,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// First failing condition's witness.
    pub witness: Option<Witness>,
    /// Smallest margin over all conditions.
    pub margin: f64,
    pub conditions: Vec<ConditionReport>,
    pub grid: CheckGrid,
}

impl Verdict {
    fn from_conditions(conditions: Vec<ConditionReport>, grid: &CheckGrid) -> Self {
        let witness = conditions.iter().find_map(|c| c.witness.clone());
        let margin = conditions
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min);
        let status = if conditions.iter().all(|c| c.satisfied) {
            VerdictStatus::SatisfiedOnGrid
        } else {
            VerdictStatus::ViolatedWithWitness
        };
        Verdict {
            status,
            witness,
            margin,
            conditions,
            grid: grid.clone(),
        }
    }

    pub fn is_satisfied(&self) -> bool {
        self.status == VerdictStatus::SatisfiedOnGrid
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Outcome at one grid point: slack and, if negative, where it failed.
struct PointCheck {
    margin: f64,
    failure: Option<(u64, f64)>,
}

/// Runs `eval` over the points in parallel and reduces in grid order, so the
/// witness is the first failing point regardless of scheduling.
fn scan<F>(name: &str, points: &[(i64, i64, u64)], eval: F) -> ConditionReport
where
    F: Fn(i64, i64, u64) -> PointCheck + Sync,
{
    let results: Vec<PointCheck> = points.par_iter().map(|&(i, j, r)| eval(i, j, r)).collect();
    let margin = results
        .iter()
        .map(|p| p.margin)
        .fold(f64::INFINITY, f64::min);
    let witness = points.iter().zip(&results).find_map(|(&(i, j, r), p)| {
        p.failure.map(|(n, value)| Witness {
            condition: name.to_string(),
            i,
            j,
            r,
            n,
            value,
        })
    });
    ConditionReport {
        name: name.to_string(),
        satisfied: witness.is_none(),
        margin,
        witness,
    }
}

/// `ln |w_1 ··· w_k|`, with `ln |w_{k+1}^{-1} ··· w_0^{-1}|` for `k < 0`.
struct LogProduct {
    prefix: LogPrefix,
}

impl LogProduct {
    fn new(w: &WeightSeq, lo: i64, hi: i64) -> Result<Self> {
        let lo = match w.domain {
            IndexDomain::Naturals => lo.max(1),
            IndexDomain::Integers => lo.min(1),
        };
        let hi = hi.max(lo);
        let len = (hi - lo + 1) as usize;
        if len > MAX_LOG_TABLE {
            return Err(Error::TooLarge {
                what: "log-product table",
                len,
                max: MAX_LOG_TABLE,
            });
        }
        Ok(LogProduct {
            prefix: w.log_prefix(lo, hi)?,
        })
    }

    fn upto(&self, k: i64) -> f64 {
        if k >= 0 {
            self.prefix.sum(1, k)
        } else {
            -self.prefix.sum(k + 1, 0)
        }
    }

    /// `ln |w_{a} ··· w_{b}|`.
    fn window(&self, a: i64, b: i64) -> f64 {
        self.prefix.sum(a, b)
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top.is_infinite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Divergence of `ℓ(n) = ln |w_1 ··· w_{m+i} μ_1 ··· μ_{m+j}|`, `m = (n + r)^q − r^q`:
/// `ℓ(n_max)` beats the threshold and `ℓ` does not decrease over the top quartile.
fn growth_condition(
    name: &str,
    lw: &LogProduct,
    lm: &LogProduct,
    grid: &CheckGrid,
    points: &[(i64, i64, u64)],
) -> ConditionReport {
    let n_start = grid.n_max - grid.n_max / 4;
    scan(name, points, |i, j, r| {
        let ell = |n: u64| {
            let m = grid.forward_index(n, r).expect("grid indices validated");
            lw.upto(m + i) + lm.upto(m + j)
        };
        let mut prev = ell(n_start);
        for n in n_start + 1..=grid.n_max {
            let cur = ell(n);
            if cur < prev - 1e-9 * prev.abs().max(1.0) {
                return PointCheck {
                    margin: cur - prev,
                    failure: Some((n, cur)),
                };
            }
            prev = cur;
        }
        let margin = prev - grid.growth_threshold;
        PointCheck {
            margin,
            failure: (margin <= 0.0).then_some((grid.n_max, prev)),
        }
    })
}

/// `Σ_{n=n_max/2}^{n_max} |w_1 ··· w_{m+i} μ_1 ··· μ_{m+j}|^{−p} < tail_tolerance`.
fn tail_condition(
    name: &str,
    lw: &LogProduct,
    lm: Option<&LogProduct>,
    p: f64,
    grid: &CheckGrid,
    points: &[(i64, i64, u64)],
) -> ConditionReport {
    let n_start = grid.n_max / 2;
    let log_tol = grid.tail_tolerance.ln();
    scan(name, points, |i, j, r| {
        let log_tail = log_sum_exp((n_start..=grid.n_max).map(|n| {
            let m = grid.forward_index(n, r).expect("grid indices validated");
            let ell = lw.upto(m + i) + lm.map_or(0.0, |lm| lm.upto(m + j));
            -p * ell
        }));
        let margin = log_tol - log_tail;
        PointCheck {
            margin,
            failure: (margin <= 0.0).then_some((n_start, log_tail.exp())),
        }
    })
}

/// Backward products `ln |a_i ··· a_{i−M+1} b_j ··· b_{j−M+1}|`, `M = r^q − (r − n)^q`,
/// for `r ≤ n_max` and `n ≤ r`.
fn bilateral_backward_tables(
    a: &WeightSeq,
    b: &WeightSeq,
    grid: &CheckGrid,
) -> Result<(LogProduct, LogProduct)> {
    let depth = (grid.n_max)
        .checked_pow(grid.q)
        .ok_or_else(|| Error::InvalidArgument("grid index overflows".into()))?
        as i64;
    let la = LogProduct::new(a, grid.i_range.lo - depth + 1, grid.i_range.hi)?;
    let lb = LogProduct::new(b, grid.j_range.lo - depth + 1, grid.j_range.hi)?;
    Ok((la, lb))
}

fn backward_points(grid: &CheckGrid) -> Vec<(i64, i64, u64)> {
    let mut out = Vec::new();
    for i in grid.i_range.iter() {
        for j in grid.j_range.iter() {
            for r in grid.n_max / 2..=grid.n_max {
                out.push((i, j, r));
            }
        }
    }
    out
}

/// Backward products must fall below `tail_tolerance` for all `n ∈ [n_max/2, r]`.
fn vanishing_condition(
    name: &str,
    la: &LogProduct,
    lb: &LogProduct,
    grid: &CheckGrid,
    points: &[(i64, i64, u64)],
) -> ConditionReport {
    let n_start = grid.n_max / 2;
    let log_tol = grid.tail_tolerance.ln();
    scan(name, points, |i, j, r| {
        let mut margin = f64::INFINITY;
        for n in n_start..=r {
            let len = grid.backward_len(n, r);
            let ell = la.window(i - len + 1, i) + lb.window(j - len + 1, j);
            let slack = log_tol - ell;
            if slack <= 0.0 {
                return PointCheck {
                    margin: slack,
                    failure: Some((n, ell.exp())),
                };
            }
            margin = margin.min(slack);
        }
        PointCheck {
            margin,
            failure: None,
        }
    })
}

/// `S(r) = Σ_{n=0}^{r} |backward product|^p` must stop growing: the maximum over
/// `r ∈ (n_max/2, n_max]` may exceed the one over `r ≤ n_max/2` by at most
/// `tail_tolerance · max(1, that maximum)`.
fn bounded_sum_condition(
    name: &str,
    la: &LogProduct,
    lb: &LogProduct,
    p: f64,
    grid: &CheckGrid,
) -> ConditionReport {
    let mut points = Vec::new();
    for i in grid.i_range.iter() {
        for j in grid.j_range.iter() {
            points.push((i, j, grid.n_max));
        }
    }
    let half = grid.n_max / 2;
    scan(name, &points, |i, j, _| {
        let log_s = |r: u64| {
            log_sum_exp((0..=r).map(|n| {
                let len = grid.backward_len(n, r);
                p * (la.window(i - len + 1, i) + lb.window(j - len + 1, j))
            }))
        };
        let low = (0..=half).map(log_s).fold(f64::NEG_INFINITY, f64::max);
        let (mut high, mut at) = (f64::NEG_INFINITY, half + 1);
        for r in half + 1..=grid.n_max {
            let v = log_s(r);
            if v > high {
                high = v;
                at = r;
            }
        }
        let tol = grid.tail_tolerance;
        let allowed = (low + tol.ln_1p()).max(log_sum_exp([low, tol.ln()].into_iter()));
        let margin = allowed - high;
        PointCheck {
            margin,
            failure: (margin < 0.0).then_some((at, high.exp())),
        }
    })
}

/// `lim_n |w_1 ··· w_{(n+r)^q−r^q+i} μ_1 ··· μ_{(n+r)^q−r^q+j}| = ∞`, uniformly in `r`.
pub fn check_unilateral_growth(w: &WeightSeq, mu: &WeightSeq, grid: &CheckGrid) -> Result<Verdict> {
    grid.validate()?;
    grid.unilateral_ok()?;
    let top = grid.max_forward_index()?;
    let lw = LogProduct::new(w, 1, top + grid.i_range.hi)?;
    let lm = LogProduct::new(mu, 1, top + grid.j_range.hi)?;
    let points = grid.grid_points();
    let growth = growth_condition("forward_growth", &lw, &lm, grid, &points);
    Ok(Verdict::from_conditions(vec![growth], grid))
}

/// Forward products of `a, b` diverge and backward products
/// `a_i a_{i−1} ··· a_{i−r^q+(r−n)^q+1} b_j ···` vanish, uniformly in `r`.
pub fn check_bilateral(a: &WeightSeq, b: &WeightSeq, grid: &CheckGrid) -> Result<Verdict> {
    grid.validate()?;
    let a = a.clone().on_integers();
    let b = b.clone().on_integers();
    let top = grid.max_forward_index()?;
    let lw = LogProduct::new(&a, grid.i_range.lo.min(0), top + grid.i_range.hi)?;
    let lm = LogProduct::new(&b, grid.j_range.lo.min(0), top + grid.j_range.hi)?;
    let growth = growth_condition("forward_growth", &lw, &lm, grid, &grid.grid_points());
    let (la, lb) = bilateral_backward_tables(&a, &b, grid)?;
    let vanish = vanishing_condition("backward_decay", &la, &lb, grid, &backward_points(grid));
    Ok(Verdict::from_conditions(vec![growth, vanish], grid))
}

/// `Σ_n |w_1 ··· w_{m+i} μ_1 ··· μ_{m+j}|^{−p} < ∞`, uniformly in `r`, judged by the
/// tail from `n_max/2`. When either weight lives on ℤ the bilateral variant
/// also requires the finite backward sums to stay bounded.
pub fn check_schatten_summability(
    w: &WeightSeq,
    mu: &WeightSeq,
    p: f64,
    grid: &CheckGrid,
) -> Result<Verdict> {
    grid.validate()?;
    crate::spaces::check_exponent(p)?;
    let bilateral = w.domain == IndexDomain::Integers || mu.domain == IndexDomain::Integers;
    if !bilateral {
        grid.unilateral_ok()?;
    }
    let (w, mu) = if bilateral {
        (w.clone().on_integers(), mu.clone().on_integers())
    } else {
        (w.clone(), mu.clone())
    };
    let top = grid.max_forward_index()?;
    let lw = LogProduct::new(&w, grid.i_range.lo.min(0), top + grid.i_range.hi)?;
    let lm = LogProduct::new(&mu, grid.j_range.lo.min(0), top + grid.j_range.hi)?;
    let mut conditions = vec![tail_condition(
        "forward_tail",
        &lw,
        Some(&lm),
        p,
        grid,
        &grid.grid_points(),
    )];
    if bilateral {
        let (la, lb) = bilateral_backward_tables(&w, &mu, grid)?;
        conditions.push(bounded_sum_condition(
            "backward_sum_bounded",
            &la,
            &lb,
            p,
            grid,
        ));
    }
    Ok(Verdict::from_conditions(conditions, grid))
}

/// `|λ_j| ≥ 1` for every `j` and `Σ_n |μ_1 ··· μ_{(n+r)^q−r^q+i}|^{−p} < ∞`;
/// `p = 1` is the strong-operator-topology variant.
pub fn check_diagonal_forward(
    lambda: &[C64],
    mu: &WeightSeq,
    p: f64,
    grid: &CheckGrid,
) -> Result<Verdict> {
    grid.validate()?;
    grid.unilateral_ok()?;
    crate::spaces::check_exponent(p)?;
    if lambda.is_empty() {
        return Err(Error::InvalidArgument("λ must be nonempty".into()));
    }
    let mut margin = f64::INFINITY;
    let mut witness = None;
    for (idx, l) in lambda.iter().enumerate() {
        let slack = l.norm() - 1.0;
        margin = margin.min(slack);
        if slack < 0.0 && witness.is_none() {
            witness = Some(Witness {
                condition: "unimodular_or_larger".into(),
                i: idx as i64 + 1,
                j: 0,
                r: 0,
                n: 0,
                value: l.norm(),
            });
        }
    }
    let lambda_report = ConditionReport {
        name: "unimodular_or_larger".into(),
        satisfied: witness.is_none(),
        margin,
        witness,
    };
    let top = grid.max_forward_index()?;
    let lm = LogProduct::new(mu, 1, top + grid.i_range.hi)?;
    let points: Vec<(i64, i64, u64)> = grid
        .i_range
        .iter()
        .flat_map(|i| (0..=grid.r_max).map(move |r| (i, 0, r)))
        .collect();
    let tail = tail_condition("forward_tail", &lm, None, p, grid, &points);
    Ok(Verdict::from_conditions(vec![lambda_report, tail], grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_sat(v: &Verdict) -> bool {
        v.status == VerdictStatus::SatisfiedOnGrid
    }

    #[test]
    fn doubling_weights_diverge() {
        let w = WeightSeq::constant(2.0);
        let v = check_unilateral_growth(&w, &w, &CheckGrid::default()).unwrap();
        assert!(is_sat(&v), "{v:?}");
        // ℓ(n_max) at r = 0, i = j = 0 is 2·512·ln 2
        let expected = 2.0 * 512.0 * 2f64.ln() - CheckGrid::default().growth_threshold;
        assert!((v.margin - expected).abs() < 1e-9);
    }

    #[test]
    fn unit_weights_violate() {
        let w = WeightSeq::constant(1.0);
        let v = check_unilateral_growth(&w, &w, &CheckGrid::default()).unwrap();
        assert!(!is_sat(&v));
        let wit = v.witness.unwrap();
        assert_eq!((wit.i, wit.j, wit.r), (0, 0, 0));
        assert_eq!(wit.value, 0.0);
    }

    #[test]
    fn successor_ratio_grows_logarithmically() {
        let grid = CheckGrid {
            growth_threshold: 100f64.ln(),
            ..CheckGrid::default()
        };
        let v = check_unilateral_growth(
            &WeightSeq::successor_ratio(),
            &WeightSeq::constant(1.0),
            &grid,
        )
        .unwrap();
        assert!(is_sat(&v));
        assert!((v.margin - (513.0f64.ln() - 100f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn quadratic_grid_q2() {
        let w = WeightSeq::constant(2.0);
        let grid = CheckGrid {
            n_max: 64,
            ..CheckGrid::default().with_q(2)
        };
        assert!(is_sat(&check_unilateral_growth(&w, &w, &grid).unwrap()));
    }

    #[test]
    fn two_regime_bilateral_satisfied() {
        let a = WeightSeq::two_regime(1, 0.5, 2.0);
        let v = check_bilateral(&a, &a, &CheckGrid::bilateral()).unwrap();
        assert!(is_sat(&v), "{v:?}");
        assert_eq!(v.conditions.len(), 2);
    }

    #[test]
    fn bilateral_unit_weights_fail_both() {
        let a = WeightSeq::constant(1.0).on_integers();
        let v = check_bilateral(&a, &a, &CheckGrid::bilateral()).unwrap();
        assert!(v.conditions.iter().all(|c| !c.satisfied));
    }

    #[test]
    fn bilateral_without_decay_side() {
        let a = WeightSeq::constant(2.0).on_integers();
        let v = check_bilateral(&a, &a, &CheckGrid::bilateral()).unwrap();
        assert!(v.condition("forward_growth").unwrap().satisfied);
        let back = v.condition("backward_decay").unwrap();
        assert!(!back.satisfied);
        assert_eq!(v.witness.unwrap().condition, "backward_decay");
    }

    #[test]
    fn schatten_geometric_tail() {
        let v = check_schatten_summability(
            &WeightSeq::constant(2.0),
            &WeightSeq::constant(1.0),
            2.0,
            &CheckGrid::default(),
        )
        .unwrap();
        assert!(is_sat(&v));
    }

    #[test]
    fn schatten_successor_ratio() {
        let v = check_schatten_summability(
            &WeightSeq::successor_ratio(),
            &WeightSeq::constant(1.0),
            2.0,
            &CheckGrid::default(),
        )
        .unwrap();
        assert!(is_sat(&v), "{v:?}");
        let w1 = WeightSeq::constant(1.0);
        assert!(!is_sat(
            &check_schatten_summability(&w1, &w1, 2.0, &CheckGrid::default()).unwrap()
        ));
    }

    #[test]
    fn schatten_bilateral_variant() {
        let a = WeightSeq::two_regime(1, 0.5, 2.0);
        let v = check_schatten_summability(&a, &a, 2.0, &CheckGrid::bilateral()).unwrap();
        assert!(is_sat(&v), "{v:?}");
        let flat = WeightSeq::constant(2.0).on_integers();
        let v = check_schatten_summability(&flat, &flat, 2.0, &CheckGrid::bilateral()).unwrap();
        assert!(!v.condition("backward_sum_bounded").unwrap().satisfied);
    }

    #[test]
    fn diagonal_examples() {
        let lam = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0)];
        let grid = CheckGrid::default();
        assert!(is_sat(
            &check_diagonal_forward(&lam, &WeightSeq::constant(2.0), 1.0, &grid).unwrap()
        ));

        let v =
            check_diagonal_forward(&[C64::new(0.5, 0.0)], &WeightSeq::constant(2.0), 1.0, &grid)
                .unwrap();
        assert_eq!(v.witness.unwrap().i, 1);

        let v =
            check_diagonal_forward(&[C64::new(1.0, 0.0)], &WeightSeq::constant(1.0), 1.0, &grid)
                .unwrap();
        assert!(!is_sat(&v));
    }

    #[test]
    fn grid_validation() {
        let grid = CheckGrid {
            n_max: 4,
            ..CheckGrid::default()
        };
        let w = WeightSeq::constant(2.0);
        assert!(check_unilateral_growth(&w, &w, &grid).is_err());
        assert!(check_unilateral_growth(&w, &w, &CheckGrid::bilateral()).is_err());
    }
}
