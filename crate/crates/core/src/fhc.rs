//! Explicit construction of q-frequently hypercyclic vectors.
//!
//! Given a countable family `x_1, x_2, ...` with inverse orbits
//! `x_{k,n} = S^n x_k`, the construction picks tail thresholds `N_k`, builds
//! separated sets `J_k` of positive lower density and assembles
//! `x = Σ_k Σ_{n ∈ J_k} x_{k, n^q}`. For `n ∈ J_k` the orbit point `T^{n^q} x`
//! splits into `x_k` plus two series per class, which is where the visit
//! radius `2(k ε_k + Σ_{j>k} ε_j)` comes from.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{LowRank, RankOne};
use crate::density::{q_lower_density, visit_set, NatSet, NormSpec};
use crate::error::{Error, Result};
use crate::scalar::{Wide, C64};
use crate::spaces::{check_exponent, IndexDomain, SeqVector, ShiftOp};

/// Largest number of precomputed iterates per base point.
pub const MAX_TABLE_LEN: usize = 1 << 21;
/// Largest random subset drawn when probing unconditional sums.
pub const MAX_SAMPLE_SUBSET: usize = 12;
/// Number of progression steps per block in [`build_separated_family`].
const STEPS_PER_BLOCK: u64 = 4;

/// `ε_k = scale · 2^{-k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsSchedule {
    pub scale: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule { scale: 1.0 }
    }
}

impl EpsSchedule {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ε scale {scale} must be positive"
            )));
        }
        Ok(EpsSchedule { scale })
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.scale * 0.5f64.powi(k as i32)
    }

    /// `Σ_{k<j≤k_top} ε_j`.
    pub fn tail_sum(&self, k: usize, k_top: usize) -> f64 {
        (k + 1..=k_top).map(|j| self.eps(j)).sum()
    }

    /// `k ε_k + Σ_{j>k} ε_j`, in closed form for the geometric schedule.
    pub fn schedule_term(&self, k: usize) -> f64 {
        k as f64 * self.eps(k) + self.eps(k)
    }

    /// Checks numerically that the schedule terms decrease to zero over `k ≤ k_max`.
    pub fn verify(&self, k_max: usize) -> bool {
        let terms: Vec<f64> = (1..=k_max).map(|k| self.schedule_term(k)).collect();
        let decreasing = terms.windows(2).skip(1).all(|w| w[1] <= w[0]);
        decreasing && terms.last().is_some_and(|&t| t < 1e-12 * self.scale)
    }

    /// Bound on `‖T^{n^q} x − x_k‖` for `n ∈ J_k` when classes `1..=k_top` are used.
    pub fn proof_radius(&self, k: usize, k_top: usize) -> f64 {
        2.0 * (k as f64 * self.eps(k) + self.tail_sum(k, k_top))
    }
}

/// Base points `x_k` of a sequence-space operator `T` with inverse orbits `S^n x_k`.
#[derive(Clone, Debug)]
pub struct BackwardOrbitFamily {
    op: ShiftOp,
    base_points: Vec<SeqVector>,
}

impl BackwardOrbitFamily {
    /// `op` must be right-invertible through its own weights (backward shifts
    /// or diagonals), so that `T S = I`.
    pub fn new(op: ShiftOp, base_points: Vec<SeqVector>) -> Result<Self> {
        if op.inverse_partner()? != op {
            return Err(Error::Unsupported(
                "the family needs T S = I; use a backward shift or a diagonal".into(),
            ));
        }
        if base_points.is_empty() {
            return Err(Error::InvalidArgument(
                "family needs at least one base point".into(),
            ));
        }
        Ok(BackwardOrbitFamily { op, base_points })
    }

    pub fn op(&self) -> &ShiftOp {
        &self.op
    }

    pub fn len(&self) -> usize {
        self.base_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_points.is_empty()
    }

    /// `x_k` for `k ≥ 1`.
    pub fn base(&self, k: usize) -> &SeqVector {
        &self.base_points[k - 1]
    }

    pub fn bases(&self) -> &[SeqVector] {
        &self.base_points
    }

    /// `x_{k,n} = S^n x_k`.
    pub fn inverse_orbit(&self, k: usize, n: u64) -> Result<SeqVector> {
        self.op.apply_right_inverse(self.base(k), n)
    }

    /// `S^j x_k` for `j = 0..len`.
    pub fn inverse_table(&self, k: usize, len: usize) -> Result<Vec<SeqVector>> {
        check_table(len)?;
        let mut out = Vec::with_capacity(len);
        let mut cur = self.base(k).clone();
        for j in 0..len {
            if j > 0 {
                cur = self.op.apply_right_inverse(&cur, 1)?;
            }
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// `T^j x_k` for `j = 0..len`.
    pub fn forward_table(&self, k: usize, len: usize) -> Result<Vec<SeqVector>> {
        check_table(len)?;
        let mut out = Vec::with_capacity(len);
        let mut cur = self.base(k).clone();
        for j in 0..len {
            if j > 0 && !cur.is_zero() {
                cur = self.op.apply(&cur)?;
            }
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Largest relative error in `T^{n^q} x_{k,n^q} = x_k` and
    /// `T^{n^q} x_{k,m^q} = x_{k,m^q−n^q}` over `m > n ≥ 0`, `m ≤ m_max`, all `k`.
    pub fn condition_c_error(&self, q: u32, m_max: u64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 1..=self.len() {
            for m in 0..=m_max {
                let mq = pow(m, q)?;
                let xm = self.inverse_orbit(k, mq)?;
                for n in 0..=m {
                    let nq = pow(n, q)?;
                    let lhs = self.op.apply_power(&xm, nq)?;
                    let rhs = self.inverse_orbit(k, mq - nq)?;
                    worst = worst.max(relative_difference(&lhs, &rhs)?);
                }
            }
        }
        Ok(worst)
    }
}

fn check_table(len: usize) -> Result<()> {
    if len > MAX_TABLE_LEN {
        return Err(Error::TooLarge {
            what: "iterate table",
            len,
            max: MAX_TABLE_LEN,
        });
    }
    Ok(())
}

fn pow(n: u64, q: u32) -> Result<u64> {
    n.checked_pow(q)
        .ok_or_else(|| Error::InvalidArgument(format!("{n}^{q} overflows")))
}

/// `‖a − b‖₂ / ‖b‖₂`, computed after rescaling by the leading exponent of `b`
/// so that vectors far outside the `f64` range compare correctly.
pub fn relative_difference(a: &SeqVector, b: &SeqVector) -> Result<f64> {
    let top = b.iter().map(|(_, c)| c.exponent()).max();
    let Some(top) = top else {
        return if a.is_zero() {
            Ok(0.0)
        } else {
            Ok(f64::INFINITY)
        };
    };
    let scale = Wide::ONE.scale_pow2(-top);
    let d = a.sub(b)?.scale_wide(scale).lp_norm(2.0)?;
    let n = b.scale_wide(scale).lp_norm(2.0)?;
    Ok(d / n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SumKind {
    /// `Σ_{n∈F} T^{r^q − (r−n)^q} x_i`
    Forward,
    /// `Σ_{n∈F} x_{i, (n+r)^q − r^q}`
    Backward,
}

/// Location and size of the largest sub-sum seen while testing a threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumWitness {
    pub n_threshold: u64,
    pub i: usize,
    pub r: u64,
    pub kind: SumKind,
    pub subset: Vec<u64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ThresholdOutcome {
    Found { n: u64, eps: f64, worst: SumWitness },
    Failed { eps: f64, witness: SumWitness },
}

impl ThresholdOutcome {
    pub fn threshold(&self) -> Option<u64> {
        match self {
            ThresholdOutcome::Found { n, .. } => Some(*n),
            ThresholdOutcome::Failed { .. } => None,
        }
    }
}

/// Finite grid on which the uniform-in-`r` unconditional sums are probed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdConfig {
    pub r_max: u64,
    /// Sub-sums use indices in `[N, n_max]`.
    pub n_max: u64,
    /// Random subsets tested per `(i, r, kind)` besides the contiguous tails.
    pub samples: usize,
    pub p: f64,
    /// Largest `N` tried; must be below `n_max`.
    pub hard_cap: u64,
    pub seed: u64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            r_max: 32,
            n_max: 128,
            samples: 16,
            p: 2.0,
            hard_cap: 64,
            seed: 0,
        }
    }
}

impl ThresholdConfig {
    fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        if self.hard_cap == 0 || self.hard_cap >= self.n_max {
            return Err(Error::InvalidArgument(format!(
                "hard cap {} must lie in [1, n_max = {})",
                self.hard_cap, self.n_max
            )));
        }
        Ok(())
    }
}

struct Tables {
    forward: Vec<Vec<SeqVector>>,
    backward: Vec<Vec<SeqVector>>,
}

fn build_tables(
    family: &BackwardOrbitFamily,
    k: usize,
    q: u32,
    cfg: &ThresholdConfig,
) -> Result<Tables> {
    let fwd_len = pow(cfg.r_max, q)? as usize + 1;
    let bwd_len = (pow(cfg.n_max + cfg.r_max, q)? - pow(cfg.r_max, q)?) as usize + 1;
    let mut forward = Vec::with_capacity(k);
    let mut backward = Vec::with_capacity(k);
    for i in 1..=k {
        forward.push(family.forward_table(i, fwd_len)?);
        backward.push(family.inverse_table(i, bwd_len)?);
    }
    Ok(Tables { forward, backward })
}

fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h = (h ^ p).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
    }
    h
}

/// Largest sub-sum over contiguous tails and random subsets of `terms`.
fn probe(
    terms: &[(u64, &SeqVector)],
    p: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<u64>)> {
    let mut best = (0.0, Vec::new());
    if terms.is_empty() {
        return Ok(best);
    }
    let domain = terms[0].1.domain();
    let mut acc = SeqVector::zero(domain);
    for t in (0..terms.len()).rev() {
        acc.axpy(Wide::ONE, terms[t].1)?;
        let v = acc.lp_norm(p)?;
        if v > best.0 {
            best = (v, terms[t..].iter().map(|(n, _)| *n).collect());
        }
    }
    for _ in 0..samples {
        let size = rng.random_range(1..=terms.len().min(MAX_SAMPLE_SUBSET));
        let mut picks = sample(rng, terms.len(), size).into_vec();
        picks.sort_unstable();
        let mut s = SeqVector::zero(domain);
        for &j in &picks {
            s.axpy(Wide::ONE, terms[j].1)?;
        }
        let v = s.lp_norm(p)?;
        if v > best.0 {
            best = (v, picks.iter().map(|&j| terms[j].0).collect());
        }
    }
    Ok(best)
}

fn evaluate(
    tables: &Tables,
    k: usize,
    q: u32,
    n: u64,
    cfg: &ThresholdConfig,
) -> Result<SumWitness> {
    let grid: Vec<(usize, u64)> = (1..=k)
        .flat_map(|i| (0..=cfg.r_max).map(move |r| (i, r)))
        .collect();
    let results: Vec<Result<SumWitness>> = grid
        .par_iter()
        .map(|&(i, r)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &[k as u64, n, i as u64, r]));
            let rq = r.pow(q);
            let hi = r.min(cfg.n_max);
            let fwd: Vec<(u64, &SeqVector)> = (n..=hi)
                .map(|m| (m, &tables.forward[i - 1][(rq - (r - m).pow(q)) as usize]))
                .collect();
            let bwd: Vec<(u64, &SeqVector)> = (n..=cfg.n_max)
                .map(|m| (m, &tables.backward[i - 1][((m + r).pow(q) - rq) as usize]))
                .collect();
            let (fv, fs) = probe(&fwd, cfg.p, cfg.samples, &mut rng)?;
            let (bv, bs) = probe(&bwd, cfg.p, cfg.samples, &mut rng)?;
            let (kind, value, subset) = if fv >= bv {
                (SumKind::Forward, fv, fs)
            } else {
                (SumKind::Backward, bv, bs)
            };
            Ok(SumWitness {
                n_threshold: n,
                i,
                r,
                kind,
                subset,
                value,
            })
        })
        .collect();
    let mut worst: Option<SumWitness> = None;
    for w in results {
        let w = w?;
        if worst.as_ref().is_none_or(|b| w.value > b.value) {
            worst = Some(w);
        }
    }
    Ok(worst.expect("grid is nonempty"))
}

/// Smallest `N` for which every probed sub-sum of both criterion series, for
/// base points `x_1..x_k` and every `r ≤ r_max`, stays below `ε_k`.
///
/// `N` is searched by doubling and then bisection, assuming the pass/fail
/// pattern is monotone in `N`.
pub fn find_tail_threshold(
    family: &BackwardOrbitFamily,
    k: usize,
    q: u32,
    eps: &EpsSchedule,
    cfg: &ThresholdConfig,
) -> Result<ThresholdOutcome> {
    cfg.validate()?;
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if k == 0 || k > family.len() {
        return Err(Error::InvalidArgument(format!(
            "class {k} outside the family of {} points",
            family.len()
        )));
    }
    let tables = build_tables(family, k, q, cfg)?;
    let target = eps.eps(k);
    let mut cache: BTreeMap<u64, SumWitness> = BTreeMap::new();
    let mut test = |n: u64| -> Result<bool> {
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(n) {
            e.insert(evaluate(&tables, k, q, n, cfg)?);
        }
        Ok(cache[&n].value < target)
    };

    let mut lo = 0u64;
    let mut hi = 1u64;
    loop {
        if test(hi)? {
            break;
        }
        if hi >= cfg.hard_cap {
            return Ok(ThresholdOutcome::Failed {
                eps: target,
                witness: cache[&hi].clone(),
            });
        }
        lo = hi;
        hi = (hi * 2).min(cfg.hard_cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if test(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdOutcome::Found {
        n: hi,
        eps: target,
        worst: cache[&hi].clone(),
    })
}

/// Sets `J_1..J_K` with `min J_k ≥ k` and `|m − n| ≥ N_k + N_j` for distinct elements.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparatedFamily {
    pub sets: Vec<NatSet>,
    pub n_ks: Vec<u64>,
    pub horizon: u64,
    pub block_len: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub disjoint: bool,
    pub min_ok: bool,
    pub separation_ok: bool,
    /// First offending pair `(m, class, n, class)` found by the scan.
    pub violation: Option<(u64, usize, u64, usize)>,
    /// 1-lower density proxy of each `J_k` over the horizon.
    pub densities: Vec<f64>,
    pub positive_density: bool,
}

impl SeparationReport {
    pub fn holds(&self) -> bool {
        self.disjoint && self.min_ok && self.separation_ok && self.positive_density
    }
}

/// Block round-robin construction.
///
/// `[1, horizon]` is cut into blocks of length `L = 4 · g_max` with
/// `g_k = 2(N_k + N_max)`. Block `m` serves class `(m mod K) + 1` with the
/// progression `s, s + g_k, ...` kept at least `2 N_max` before the next block.
pub fn build_separated_family(n_ks: &[u64], horizon: u64) -> Result<SeparatedFamily> {
    if n_ks.is_empty() {
        return Err(Error::InvalidArgument("need at least one threshold".into()));
    }
    if n_ks.contains(&0) {
        return Err(Error::InvalidArgument(
            "thresholds must be at least 1".into(),
        ));
    }
    let k_count = n_ks.len() as u64;
    let n_top = *n_ks.iter().max().unwrap();
    let gaps: Vec<u64> = n_ks.iter().map(|&nk| 2 * (nk + n_top)).collect();
    let block = STEPS_PER_BLOCK * gaps.iter().max().unwrap();
    let needed = k_count * block;
    if horizon < needed {
        return Err(Error::HorizonTooSmall {
            needed,
            have: horizon,
        });
    }
    let mut sets: Vec<Vec<u64>> = vec![Vec::new(); n_ks.len()];
    let mut m = 0u64;
    loop {
        let start = 1 + m * block;
        if start > horizon {
            break;
        }
        let class = (m % k_count) as usize;
        let last = (start + block - 2 * n_top).min(horizon);
        let mut e = start;
        while e <= last {
            if e > class as u64 {
                sets[class].push(e);
            }
            e += gaps[class];
        }
        m += 1;
    }
    let sets = sets
        .into_iter()
        .map(|s| NatSet::new(s, horizon))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeparatedFamily {
        sets,
        n_ks: n_ks.to_vec(),
        horizon,
        block_len: block,
    })
}

impl SeparatedFamily {
    pub fn classes(&self) -> usize {
        self.sets.len()
    }

    /// `J_k` for `k ≥ 1`.
    pub fn set(&self, k: usize) -> &NatSet {
        &self.sets[k - 1]
    }

    /// Exhaustive check of the contract. Pairs closer than `2 N_max` are the
    /// only candidates for a separation failure, so a sorted sliding scan suffices.
    pub fn verify(&self) -> Result<SeparationReport> {
        let n_top = *self.n_ks.iter().max().unwrap_or(&0);
        let mut all: Vec<(u64, usize)> = self
            .sets
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.elems().iter().map(move |&e| (e, k)))
            .collect();
        all.sort_unstable();
        let mut disjoint = true;
        let mut separation_ok = true;
        let mut violation = None;
        for a in 0..all.len() {
            let (m, km) = all[a];
            for &(n, kn) in &all[a + 1..] {
                if n - m >= 2 * n_top {
                    break;
                }
                if n == m && km != kn {
                    disjoint = false;
                }
                if n - m < self.n_ks[km] + self.n_ks[kn] {
                    separation_ok = false;
                    violation.get_or_insert((m, km + 1, n, kn + 1));
                }
            }
        }
        let min_ok = self
            .sets
            .iter()
            .enumerate()
            .all(|(k, s)| s.min().is_none_or(|m| m > k as u64));
        let mut densities = Vec::with_capacity(self.sets.len());
        for s in &self.sets {
            densities.push(q_lower_density(s, 1, self.horizon, None)?.liminf_proxy);
        }
        let positive_density = densities.iter().all(|&d| d > 0.0);
        Ok(SeparationReport {
            disjoint,
            min_ok,
            separation_ok,
            violation,
            densities,
            positive_density,
        })
    }
}

/// Assembled vector plus the bookkeeping needed to reproduce it.
#[derive(Clone, Debug)]
pub struct AssembledVector {
    pub vector: SeqVector,
    /// Largest inverse-orbit index `n^q` used.
    pub max_power: u64,
    pub terms: usize,
}

/// `x = Σ_ℓ Σ_{n ∈ J_ℓ} x_{ℓ, n^q}`, walking each inverse orbit once.
pub fn assemble_vector(
    family: &BackwardOrbitFamily,
    sets: &SeparatedFamily,
    q: u32,
) -> Result<AssembledVector> {
    if sets.classes() > family.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} classes but only {} base points",
            sets.classes(),
            family.len()
        )));
    }
    let domain = family.base(1).domain();
    let mut x = SeqVector::zero(domain);
    let mut terms = 0;
    let mut max_power = 0;
    for k in 1..=sets.classes() {
        let mut cur = family.base(k).clone();
        let mut at = 0u64;
        for &n in sets.set(k).elems() {
            let target = pow(n, q)?;
            cur = family.op.apply_right_inverse(&cur, target - at)?;
            at = target;
            x.axpy(Wide::ONE, &cur)?;
            terms += 1;
            max_power = max_power.max(target);
        }
    }
    Ok(AssembledVector {
        vector: x,
        max_power,
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassVisitReport {
    pub k: usize,
    pub radius: f64,
    pub proof_radius: f64,
    pub designed_visits: usize,
    pub designed_within_radius: usize,
    pub max_designed_distance: f64,
    /// Largest per-visit triangle-inequality bound, when computed.
    pub max_triangle_bound: Option<f64>,
    /// Every measured distance was below its triangle bound.
    pub triangle_consistent: bool,
    pub visits: usize,
    /// 1-lower density proxy of `{n : ‖T^{n^q} x − x_k‖ < radius}`.
    pub visit_density: f64,
    pub designed_density: f64,
}

impl ClassVisitReport {
    pub fn all_designed_hit(&self) -> bool {
        self.designed_within_radius == self.designed_visits
    }
}

#[derive(Clone, Debug)]
pub struct VisitConfig {
    pub q: u32,
    /// Radius per class; `None` uses the proof radius.
    pub radii: Option<Vec<f64>>,
    pub p: f64,
    /// Also evaluate the per-visit triangle bound (quadratic in `|J|`).
    pub triangle_bound: bool,
}

/// Follows `T^{n^q} x` for `n = 1..=horizon` and records, per class, which
/// orbit points fall in the ball around `x_k`.
pub fn verify_q_frequent_visits(
    family: &BackwardOrbitFamily,
    x: &SeqVector,
    sets: &SeparatedFamily,
    eps: &EpsSchedule,
    cfg: &VisitConfig,
) -> Result<Vec<ClassVisitReport>> {
    check_exponent(cfg.p)?;
    let k_top = sets.classes();
    let horizon = sets.horizon;
    let radii: Vec<f64> = match &cfg.radii {
        Some(r) if r.len() == k_top => r.clone(),
        Some(r) => {
            return Err(Error::DimensionMismatch(format!(
                "{} radii for {k_top} classes",
                r.len()
            )))
        }
        None => (1..=k_top).map(|k| eps.proof_radius(k, k_top)).collect(),
    };

    let mut distances: Vec<Vec<f64>> = vec![Vec::with_capacity(horizon as usize); k_top];
    let mut cur = x.clone();
    let mut at = 0u64;
    for n in 1..=horizon {
        let target = pow(n, cfg.q)?;
        cur = family.op.apply_power(&cur, target - at)?;
        at = target;
        for (k, row) in distances.iter_mut().enumerate() {
            row.push(cur.distance(family.base(k + 1), cfg.p)?);
        }
    }

    let bounds = if cfg.triangle_bound {
        Some(triangle_bounds(family, sets, cfg.q, cfg.p)?)
    } else {
        None
    };

    let mut reports = Vec::with_capacity(k_top);
    for k in 1..=k_top {
        let d = &distances[k - 1];
        let visits = visit_set(
            d.iter().map(|&v| Ok(Scalar(v))),
            &Scalar(0.0),
            radii[k - 1],
            NormSpec::Lp(1.0),
        )?;
        let j = sets.set(k);
        let mut within = 0;
        let mut max_d: f64 = 0.0;
        let mut consistent = true;
        let mut max_bound: Option<f64> = None;
        for (idx, &n) in j.elems().iter().enumerate() {
            let dist = d[(n - 1) as usize];
            max_d = max_d.max(dist);
            if dist < radii[k - 1] {
                within += 1;
            }
            if let Some(b) = &bounds {
                let bound = b[k - 1][idx];
                max_bound = Some(max_bound.map_or(bound, |m: f64| m.max(bound)));
                if dist > bound * (1.0 + 1e-12) + 1e-300 {
                    consistent = false;
                }
            }
        }
        let tail = Some((horizon / 2).max(1));
        reports.push(ClassVisitReport {
            k,
            radius: radii[k - 1],
            proof_radius: eps.proof_radius(k, k_top),
            designed_visits: j.len(),
            designed_within_radius: within,
            max_designed_distance: max_d,
            max_triangle_bound: max_bound,
            triangle_consistent: consistent,
            visits: visits.len(),
            visit_density: q_lower_density(&visits, 1, horizon, tail)?.liminf_proxy,
            designed_density: q_lower_density(j, 1, horizon, tail)?.liminf_proxy,
        });
    }
    Ok(reports)
}

/// A precomputed distance, so the generic visit-set extraction can be reused.
struct Scalar(f64);

impl crate::density::OrbitPoint for Scalar {
    fn distance(&self, other: &Self, _norm: NormSpec) -> Result<f64> {
        Ok((self.0 - other.0).abs())
    }
}

/// For each `n ∈ J_k`, the sum over classes ℓ of the norms of the two series
/// `Σ_{m∈J_ℓ, m>n} x_{ℓ, m^q − n^q}` and `Σ_{m∈J_ℓ, m<n} T^{n^q − m^q} x_ℓ`.
fn triangle_bounds(
    family: &BackwardOrbitFamily,
    sets: &SeparatedFamily,
    q: u32,
    p: f64,
) -> Result<Vec<Vec<f64>>> {
    let k_top = sets.classes();
    let top = pow(sets.horizon, q)? as usize + 1;
    let mut inv = Vec::with_capacity(k_top);
    let mut fwd = Vec::with_capacity(k_top);
    for l in 1..=k_top {
        inv.push(family.inverse_table(l, top)?);
        fwd.push(family.forward_table(l, top)?);
    }
    let domain = family.base(1).domain();
    let mut out = Vec::with_capacity(k_top);
    for k in 1..=k_top {
        let bounds: Vec<Result<f64>> = sets
            .set(k)
            .elems()
            .par_iter()
            .map(|&n| {
                let nq = n.pow(q);
                let mut total = 0.0;
                for l in 1..=k_top {
                    let mut above = SeqVector::zero(domain);
                    let mut below = SeqVector::zero(domain);
                    for &m in sets.set(l).elems() {
                        let mq = m.pow(q);
                        if m > n {
                            above.axpy(Wide::ONE, &inv[l - 1][(mq - nq) as usize])?;
                        } else if m < n {
                            below.axpy(Wide::ONE, &fwd[l - 1][(nq - mq) as usize])?;
                        }
                    }
                    total += above.lp_norm(p)? + below.lp_norm(p)?;
                }
                Ok(total)
            })
            .collect();
        out.push(bounds.into_iter().collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FhcConfig {
    pub q: u32,
    /// Base-index horizon for the sets `J_k`; the orbit runs to `horizon^q`.
    pub horizon: u64,
    pub eps: EpsSchedule,
    pub threshold: ThresholdConfig,
    pub triangle_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionReport {
    pub q: u32,
    pub horizon: u64,
    pub orbit_steps: u64,
    pub eps_rule: String,
    pub eps: Vec<f64>,
    pub thresholds: Vec<ThresholdOutcome>,
    pub n_ks: Vec<u64>,
    pub block_len: u64,
    pub separation: Option<SeparationReport>,
    pub j_sizes: Vec<usize>,
    pub vector_support_size: usize,
    pub condition_c_error: f64,
    pub classes: Vec<ClassVisitReport>,
    pub passed: bool,
}

/// Runs the whole pipeline: thresholds, separated sets, assembly and visit check.
///
/// A class without a tail threshold ends the run early with `passed = false`,
/// the failing [`ThresholdOutcome`] last in `thresholds` and a zero vector.
pub fn construct(
    family: &BackwardOrbitFamily,
    cfg: &FhcConfig,
) -> Result<(ConstructionReport, SeqVector)> {
    let k_top = family.len();
    let mut report = ConstructionReport {
        q: cfg.q,
        horizon: cfg.horizon,
        orbit_steps: pow(cfg.horizon, cfg.q)?,
        eps_rule: format!("eps_k = {} * 2^-k", cfg.eps.scale),
        eps: (1..=k_top).map(|k| cfg.eps.eps(k)).collect(),
        thresholds: Vec::with_capacity(k_top),
        n_ks: Vec::with_capacity(k_top),
        block_len: 0,
        separation: None,
        j_sizes: Vec::new(),
        vector_support_size: 0,
        condition_c_error: family.condition_c_error(cfg.q, 8)?,
        classes: Vec::new(),
        passed: false,
    };
    for k in 1..=k_top {
        let t = find_tail_threshold(family, k, cfg.q, &cfg.eps, &cfg.threshold)?;
        let n = t.threshold();
        report.thresholds.push(t);
        match n {
            Some(n) => {
                let n = n.max(*report.n_ks.last().unwrap_or(&0));
                report.n_ks.push(n);
            }
            None => return Ok((report, SeqVector::zero(IndexDomain::Naturals))),
        }
    }
    let sets = build_separated_family(&report.n_ks, cfg.horizon)?;
    let separation = sets.verify()?;
    let assembled = assemble_vector(family, &sets, cfg.q)?;
    let classes = verify_q_frequent_visits(
        family,
        &assembled.vector,
        &sets,
        &cfg.eps,
        &VisitConfig {
            q: cfg.q,
            radii: None,
            p: cfg.threshold.p,
            triangle_bound: cfg.triangle_bound,
        },
    )?;
    report.passed = separation.holds()
        && classes
            .iter()
            .all(|c| c.all_designed_hit() && c.visit_density >= 0.5 * c.designed_density);
    report.block_len = sets.block_len;
    report.j_sizes = sets.sets.iter().map(|s| s.len()).collect();
    report.separation = Some(separation);
    report.vector_support_size = assembled.vector.support_size();
    report.classes = classes;
    Ok((report, assembled.vector))
}

/// Rank-one family `F_{k,n} = S^n y_k ⊗ J^n x*_k` for `C_{R,T}(S) = R S T`,
/// where `S` is the right inverse of `R` and `J` the right inverse of `T^*`.
/// Operators are in the bilinear (`ℓ^p × ℓ^{p'}`) convention.
#[derive(Clone, Debug)]
pub struct RankOneFamily {
    pub left_op: ShiftOp,
    pub right_op: ShiftOp,
    pub bases: Vec<(SeqVector, SeqVector)>,
}

impl RankOneFamily {
    pub fn new(
        left_op: ShiftOp,
        right_op: ShiftOp,
        bases: Vec<(SeqVector, SeqVector)>,
    ) -> Result<Self> {
        if left_op.inverse_partner()? != left_op {
            return Err(Error::Unsupported(
                "left factor must satisfy R S = I".into(),
            ));
        }
        right_op.inverse_partner()?;
        if bases.is_empty() {
            return Err(Error::InvalidArgument(
                "family needs at least one base point".into(),
            ));
        }
        Ok(RankOneFamily {
            left_op,
            right_op,
            bases,
        })
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn element(&self, k: usize, n: u64) -> Result<RankOne> {
        let (y, xs) = &self.bases[k - 1];
        Ok(RankOne::new(
            self.left_op.apply_right_inverse(y, n)?,
            self.right_op.apply_right_inverse(xs, n)?,
        ))
    }

    /// `C^n (u ⊗ v) = R^n u ⊗ (T^*)^n v`.
    pub fn conjugation_power(&self, f: &RankOne, n: u64) -> Result<RankOne> {
        Ok(RankOne::new(
            self.left_op.apply_power(&f.left, n)?,
            self.right_op.transpose().apply_power(&f.right, n)?,
        ))
    }

    /// Largest relative error of `C^{n^q} F_{k,m^q} = F_{k,m^q−n^q}` over
    /// `m > n ≥ 0`, `m ≤ m_max`, measured on both rank-one factors.
    pub fn condition_c_error(&self, q: u32, m_max: u64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 1..=self.len() {
            for m in 0..=m_max {
                let mq = pow(m, q)?;
                let fm = self.element(k, mq)?;
                for n in 0..=m {
                    let nq = pow(n, q)?;
                    let lhs = self.conjugation_power(&fm, nq)?;
                    let rhs = self.element(k, mq - nq)?;
                    worst = worst
                        .max(relative_difference(&lhs.left, &rhs.left)?)
                        .max(relative_difference(&lhs.right, &rhs.right)?);
                }
            }
        }
        Ok(worst)
    }

    /// Operator-norm distances `‖C^{n^q} X − F_{k,0}‖` for `n = 1..=horizon`,
    /// where `X = Σ_ℓ Σ_{n∈J_ℓ} F_{ℓ, n^q}`. Returns one row per class.
    pub fn orbit_distances(&self, sets: &SeparatedFamily, q: u32) -> Result<Vec<Vec<f64>>> {
        if sets.classes() > self.len() {
            return Err(Error::DimensionMismatch(
                "more classes than base points".into(),
            ));
        }
        let mut terms = Vec::new();
        for k in 1..=sets.classes() {
            for &n in sets.set(k).elems() {
                terms.push(self.element(k, pow(n, q)?)?);
            }
        }
        let dim = window_dim(terms.iter().chain(self.bases_as_rank_one().iter()));
        let mut rows = vec![Vec::with_capacity(sets.horizon as usize); sets.classes()];
        for n in 1..=sets.horizon {
            let nq = pow(n, q)?;
            let moved: Vec<RankOne> = terms
                .iter()
                .map(|f| self.conjugation_power(f, nq))
                .collect::<Result<_>>()?;
            for (k, row) in rows.iter_mut().enumerate() {
                let (y, xs) = &self.bases[k];
                let mut lr = LowRank::new(dim, dim);
                for f in &moved {
                    if !f.is_degenerate() {
                        lr.push(f.left.to_dense(0, dim), conj(f.right.to_dense(0, dim)))?;
                    }
                }
                lr.push(
                    y.scale(C64::new(-1.0, 0.0)).to_dense(0, dim),
                    conj(xs.to_dense(0, dim)),
                )?;
                row.push(lr.operator_norm()?);
            }
        }
        Ok(rows)
    }

    fn bases_as_rank_one(&self) -> Vec<RankOne> {
        self.bases
            .iter()
            .map(|(y, x)| RankOne::new(y.clone(), x.clone()))
            .collect()
    }
}

fn conj(v: Vec<C64>) -> Vec<C64> {
    v.into_iter().map(|c| c.conj()).collect()
}

fn window_dim<'a>(fs: impl Iterator<Item = &'a RankOne>) -> usize {
    let mut top = 0i64;
    for f in fs {
        for v in [&f.left, &f.right] {
            if v.domain() != IndexDomain::Naturals {
                continue;
            }
            if let Some(m) = v.max_index() {
                top = top.max(m);
            }
        }
    }
    top as usize + 1
}
