//! Visit sets of orbits and their q-lower density profiles.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algebra::{embed, operator_norm, schatten_norm, MatOp};
use crate::error::{Error, Result};
use crate::spaces::SeqVector;

/// Sorted finite set of naturals, complete up to `horizon`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NatSet {
    elems: Vec<u64>,
    horizon: u64,
}

impl NatSet {
    /// Sorts and deduplicates; every element must be at most `horizon`.
    pub fn new(mut elems: Vec<u64>, horizon: u64) -> Result<Self> {
        elems.sort_unstable();
        elems.dedup();
        if let Some(&last) = elems.last() {
            if last > horizon {
                return Err(Error::InvalidArgument(format!(
                    "element {last} exceeds the horizon {horizon}"
                )));
            }
        }
        Ok(NatSet { elems, horizon })
    }

    pub fn empty(horizon: u64) -> Self {
        NatSet {
            elems: Vec::new(),
            horizon,
        }
    }

    /// `{n ≤ horizon : pred(n)}`, including `n = 0`.
    pub fn from_predicate(horizon: u64, mut pred: impl FnMut(u64) -> bool) -> Self {
        NatSet {
            elems: (0..=horizon).filter(|&n| pred(n)).collect(),
            horizon,
        }
    }

    pub fn elems(&self) -> &[u64] {
        &self.elems
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn min(&self) -> Option<u64> {
        self.elems.first().copied()
    }

    pub fn max(&self) -> Option<u64> {
        self.elems.last().copied()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.elems.binary_search(&n).is_ok()
    }

    /// `card{n ∈ A : n ≤ x}`.
    pub fn count_up_to(&self, x: u64) -> usize {
        self.elems.partition_point(|&n| n <= x)
    }

    pub fn is_subset(&self, other: &NatSet) -> bool {
        self.elems.iter().all(|&n| other.contains(n))
    }

    /// Union, known up to the smaller of the two horizons.
    pub fn union(&self, other: &NatSet) -> NatSet {
        let h = self.horizon.min(other.horizon);
        let mut elems: Vec<u64> = self
            .elems
            .iter()
            .chain(&other.elems)
            .copied()
            .filter(|&n| n <= h)
            .collect();
        elems.sort_unstable();
        elems.dedup();
        NatSet { elems, horizon: h }
    }

    pub fn intersection(&self, other: &NatSet) -> NatSet {
        let h = self.horizon.min(other.horizon);
        NatSet {
            elems: self
                .elems
                .iter()
                .copied()
                .filter(|&n| n <= h && other.contains(n))
                .collect(),
            horizon: h,
        }
    }

    /// Newline-delimited elements.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for n in &self.elems {
            writeln!(out, "{n}").unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityPoint {
    pub n: u64,
    pub count: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub q: u32,
    pub n_max: u64,
    pub tail_window_start: u64,
    /// Minimum ratio over `N ∈ [tail_window_start, n_max]`.
    pub liminf_proxy: f64,
    pub profile: Vec<DensityPoint>,
}

impl DensityEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,count,ratio\n");
        for p in &self.profile {
            writeln!(out, "{},{},{}", p.n, p.count, p.ratio).unwrap();
        }
        out
    }

    pub fn final_ratio(&self) -> f64 {
        self.profile.last().map_or(0.0, |p| p.ratio)
    }
}

/// Profile of `card{n ∈ A : n ≤ N^q}/N` for `N = 1..=n_max`.
///
/// `tail_start` defaults to `max(1, n_max/2)`. The set must be known up to
/// `n_max^q` so that no count is truncated.
pub fn q_lower_density(
    a: &NatSet,
    q: u32,
    n_max: u64,
    tail_start: Option<u64>,
) -> Result<DensityEstimate> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("N_max must be at least 2".into()));
    }
    let tail = tail_start.unwrap_or((n_max / 2).max(1));
    if tail == 0 || tail >= n_max {
        return Err(Error::InvalidArgument(format!(
            "tail start {tail} must lie in [1, {n_max})"
        )));
    }
    let needed = n_max.checked_pow(q).ok_or(Error::HorizonTooSmall {
        needed: u64::MAX,
        have: a.horizon(),
    })?;
    if needed > a.horizon() {
        return Err(Error::HorizonTooSmall {
            needed,
            have: a.horizon(),
        });
    }

    let mut profile = Vec::with_capacity(n_max as usize);
    let mut idx = 0usize;
    let elems = a.elems();
    for n in 1..=n_max {
        let bound = n.pow(q);
        while idx < elems.len() && elems[idx] <= bound {
            idx += 1;
        }
        profile.push(DensityPoint {
            n,
            count: idx as u64,
            ratio: idx as f64 / n as f64,
        });
    }
    let liminf_proxy = profile[(tail - 1) as usize..]
        .iter()
        .map(|p| p.ratio)
        .fold(f64::INFINITY, f64::min);
    Ok(DensityEstimate {
        q,
        n_max,
        tail_window_start: tail,
        liminf_proxy,
        profile,
    })
}

/// Norm used to measure orbit distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum NormSpec {
    Lp(f64),
    Operator,
    Schatten(f64),
}

/// Orbit elements with a notion of distance under some [`NormSpec`].
pub trait OrbitPoint {
    fn distance(&self, other: &Self, norm: NormSpec) -> Result<f64>;
}

impl OrbitPoint for SeqVector {
    fn distance(&self, other: &Self, norm: NormSpec) -> Result<f64> {
        match norm {
            NormSpec::Lp(p) => SeqVector::distance(self, other, p),
            other_norm => Err(Error::Unsupported(format!(
                "{other_norm:?} is not a sequence-space norm"
            ))),
        }
    }
}

impl OrbitPoint for MatOp {
    fn distance(&self, other: &Self, norm: NormSpec) -> Result<f64> {
        let diff = window_difference(self, other)?;
        match norm {
            NormSpec::Operator => operator_norm(&diff),
            NormSpec::Schatten(p) => schatten_norm(&diff, p),
            NormSpec::Lp(_) => Err(Error::Unsupported(
                "entrywise ℓ^p is not an operator norm; use operator or schatten".into(),
            )),
        }
    }
}

/// `a − b` on the smallest window containing both.
pub fn window_difference(a: &MatOp, b: &MatOp) -> Result<MatOp> {
    let r_lo = a.row_offset().min(b.row_offset());
    let r_hi = (a.row_offset() + a.rows() as i64).max(b.row_offset() + b.rows() as i64);
    let c_lo = a.col_offset().min(b.col_offset());
    let c_hi = (a.col_offset() + a.cols() as i64).max(b.col_offset() + b.cols() as i64);
    let (rows, cols) = ((r_hi - r_lo) as usize, (c_hi - c_lo) as usize);
    embed(a, r_lo, rows, c_lo, cols)?.sub(&embed(b, r_lo, rows, c_lo, cols)?)
}

/// Indices `n ≥ 1` (position in the stream, starting at 1) whose element lies
/// within `radius` of `target`; the horizon is the stream length.
pub fn visit_set<T, I>(orbit: I, target: &T, radius: f64, norm: NormSpec) -> Result<NatSet>
where
    T: OrbitPoint,
    I: IntoIterator<Item = Result<T>>,
{
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} must be positive"
        )));
    }
    let mut elems = Vec::new();
    let mut horizon = 0u64;
    for (k, item) in orbit.into_iter().enumerate() {
        let n = k as u64 + 1;
        if item?.distance(target, norm)? < radius {
            elems.push(n);
        }
        horizon = n;
    }
    Ok(NatSet { elems, horizon })
}
