//! Weighted Hardy spaces `H^β(𝔻)` and eigenvector checks for conjugation
//! maps built from multiplication operators.
//!
//! A function `f = Σ a_n e_n` with `e_n(z) = β_n z^n` is stored by its
//! coordinates `a_n`, so the space is `ℓ²` and the kernel at `z` has
//! coordinates `β_n conj(z)^n`. Everything is truncated to indices `0..=N`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{operator_norm, pseudo_inverse, LowRank, MatOp, MAX_SVD_DIM};
use crate::error::{Error, Result};
use crate::scalar::C64;
use crate::spaces::{check_exponent, IndexDomain, SeqVector, TaylorPoly};

/// Radius of the circle used to estimate boundary suprema and infima.
pub const BOUNDARY_RADIUS: f64 = 1.0 - 1e-6;
/// Number of boundary samples.
pub const BOUNDARY_SAMPLES: usize = 720;
/// Steps in the orbit desk check of [`converse_certificate`].
pub const ORBIT_STEPS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaRule {
    /// `β_n = 1`.
    Hardy,
    /// `β_n = 1/(n + 1)`, so that `M_z e_n = ((n+2)/(n+1)) e_{n+1}`.
    InvLinear,
    /// `β_n = values[n]`.
    Table { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSpace {
    pub beta: BetaRule,
    /// Largest retained index `N`; vectors have `N + 1` coordinates.
    pub truncation_dim: usize,
}

impl BetaSpace {
    pub fn new(beta: BetaRule, truncation_dim: usize) -> Result<Self> {
        let space = BetaSpace {
            beta,
            truncation_dim,
        };
        if space.dim() > MAX_SVD_DIM {
            return Err(Error::TooLarge {
                what: "truncation dimension",
                len: space.dim(),
                max: MAX_SVD_DIM,
            });
        }
        for n in 0..space.dim() {
            space.beta(n)?;
        }
        Ok(space)
    }

    pub fn hardy(truncation_dim: usize) -> Self {
        BetaSpace {
            beta: BetaRule::Hardy,
            truncation_dim,
        }
    }

    pub fn inv_linear(truncation_dim: usize) -> Self {
        BetaSpace {
            beta: BetaRule::InvLinear,
            truncation_dim,
        }
    }

    pub fn with_truncation(&self, truncation_dim: usize) -> Self {
        BetaSpace {
            beta: self.beta.clone(),
            truncation_dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.truncation_dim + 1
    }

    pub fn beta(&self, n: usize) -> Result<f64> {
        let b = match &self.beta {
            BetaRule::Hardy => 1.0,
            BetaRule::InvLinear => 1.0 / (n as f64 + 1.0),
            BetaRule::Table { values } => *values
                .get(n)
                .ok_or(Error::WeightOutOfTable { index: n as i64 })?,
        };
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "β_{n} = {b} must be positive"
            )));
        }
        Ok(b)
    }

    /// `sup_n β_n`; for a table this is the supremum over the retained indices.
    pub fn beta_sup(&self) -> f64 {
        match &self.beta {
            BetaRule::Hardy | BetaRule::InvLinear => 1.0,
            BetaRule::Table { values } => {
                values.iter().take(self.dim()).copied().fold(0.0, f64::max)
            }
        }
    }

    /// `f(z) = Σ a_n β_n z^n` for coordinates `a`.
    pub fn evaluate(&self, coords: &[C64], z: C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        let mut zn = C64::new(1.0, 0.0);
        for (n, a) in coords.iter().enumerate() {
            acc += a * self.beta(n)? * zn;
            zn *= z;
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelVec {
    #[serde(with = "crate::spaces::cplx_serde")]
    pub z: C64,
    pub coeffs: SeqVector,
    /// ℓ² bound on the discarded coordinates `n > N`.
    pub tail_bound: f64,
}

impl KernelVec {
    pub fn dense(&self, dim: usize) -> Vec<C64> {
        self.coeffs.to_dense(0, dim)
    }
}

fn check_disc(z: C64) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(Error::OutsideDisc(z));
    }
    Ok(())
}

fn kernel_dense(space: &BetaSpace, z: C64) -> Result<Vec<C64>> {
    let zc = z.conj();
    let mut out = Vec::with_capacity(space.dim());
    let mut p = C64::new(1.0, 0.0);
    for n in 0..space.dim() {
        out.push(p * space.beta(n)?);
        p *= zc;
    }
    Ok(out)
}

/// `(k_z)_n = β_n conj(z)^n` for `n ≤ N`.
pub fn kernel_vector(space: &BetaSpace, z: C64) -> Result<KernelVec> {
    check_disc(z)?;
    let dense = kernel_dense(space, z)?;
    let coeffs = SeqVector::from_entries(
        IndexDomain::Naturals,
        dense.iter().enumerate().map(|(n, &c)| (n as i64, c)),
    )?;
    let r = z.norm();
    let tail_bound =
        space.beta_sup() * r.powi(space.truncation_dim as i32 + 1) / (1.0 - r * r).sqrt();
    Ok(KernelVec {
        z,
        coeffs,
        tail_bound,
    })
}

/// Polynomial truncation of an analytic symbol on the disc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSymbol {
    pub taylor: TaylorPoly,
    /// `‖φ‖_∞` on 𝔻 when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_bound: Option<f64>,
}

impl AnalyticSymbol {
    pub fn new(taylor: TaylorPoly) -> Result<Self> {
        if taylor
            .coeffs()
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "symbol coefficients must be finite".into(),
            ));
        }
        Ok(AnalyticSymbol {
            taylor,
            sup_bound: None,
        })
    }

    pub fn constant(c: C64) -> Self {
        AnalyticSymbol {
            taylor: TaylorPoly::constant(c),
            sup_bound: Some(c.norm()),
        }
    }

    pub fn z() -> Self {
        AnalyticSymbol {
            taylor: TaylorPoly::z(),
            sup_bound: Some(1.0),
        }
    }

    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        self.sup_bound = Some(bound);
        self
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.taylor.eval(z)
    }

    pub fn degree(&self) -> usize {
        self.taylor.degree()
    }

    pub fn mul(&self, other: &AnalyticSymbol) -> AnalyticSymbol {
        AnalyticSymbol {
            taylor: self.taylor.mul(&other.taylor),
            sup_bound: self.sup_bound.zip(other.sup_bound).map(|(a, b)| a * b),
        }
    }
}

/// `M[k][n] = c_{k−n} β_n / β_k` for `0 ≤ k − n ≤ deg φ`.
pub fn mult_op_matrix(phi: &AnalyticSymbol, space: &BetaSpace) -> Result<MatOp> {
    let dim = space.dim();
    if dim > MAX_SVD_DIM {
        return Err(Error::TooLarge {
            what: "truncation dimension",
            len: dim,
            max: MAX_SVD_DIM,
        });
    }
    let beta: Vec<f64> = (0..dim).map(|n| space.beta(n)).collect::<Result<_>>()?;
    let deg = phi.degree();
    Ok(MatOp::from_fn(dim, dim, |k, n| {
        if k >= n && k - n <= deg {
            phi.taylor.coeff(k - n) * (beta[n] / beta[k])
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn lp_norm(v: &[C64], p: f64) -> f64 {
    if p.is_infinite() {
        return v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    }
    v.iter()
        .map(|c| c.norm().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

fn axpy(alpha: C64, x: &[C64], y: &[C64]) -> Vec<C64> {
    y.iter().zip(x).map(|(b, a)| b - alpha * a).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenReport {
    #[serde(with = "crate::spaces::cplx_serde")]
    pub eigenvalue: C64,
    /// Operator-norm residual (`ℓ²` norm for vector checks).
    pub residual: f64,
    /// Trace-norm residual, for operator checks.
    pub residual_s1: Option<f64>,
    /// Bound on the residual coming from the discarded coordinates.
    pub tail_bound: f64,
    /// Rounding allowance added to `10 · tail_bound`.
    pub floor: f64,
    pub truncation_dim: usize,
    pub passed: bool,
}

fn rounding_floor(scale: f64, dim: usize) -> f64 {
    16.0 * f64::EPSILON * scale * (dim as f64).sqrt()
}

/// Truncation error of `M*_φ k_z`: at most `deg φ` rows, each below `‖c‖₁ sup β |z|^{N+1}`.
fn adjoint_tail(phi: &AnalyticSymbol, space: &BetaSpace, z: C64) -> f64 {
    let rows = (phi.degree().max(1) as f64).sqrt();
    phi.taylor.l1_norm() * space.beta_sup() * rows * z.norm().powi(space.truncation_dim as i32 + 1)
}

/// `M*_φ k_z` on the truncation, and its deviation from `conj(φ(z)) k_z`.
fn adjoint_parts(
    phi: &AnalyticSymbol,
    space: &BetaSpace,
    z: C64,
) -> Result<(Vec<C64>, Vec<C64>, Vec<C64>)> {
    check_disc(z)?;
    let k = kernel_dense(space, z)?;
    let a = mult_op_matrix(phi, space)?.adjoint().mul_vec(&k)?;
    let delta = axpy(phi.eval(z).conj(), &k, &a);
    Ok((k, a, delta))
}

/// `‖M*_φ k_z − conj(φ(z)) k_z‖₂` on the truncation.
pub fn adjoint_kernel_eigencheck(
    phi: &AnalyticSymbol,
    space: &BetaSpace,
    z: C64,
) -> Result<EigenReport> {
    let (k, _, delta) = adjoint_parts(phi, space, z)?;
    let residual = norm2(&delta);
    let tail_bound = adjoint_tail(phi, space, z);
    let floor = rounding_floor(phi.taylor.l1_norm() * norm2(&k), space.dim());
    Ok(EigenReport {
        eigenvalue: phi.eval(z).conj(),
        residual,
        residual_s1: None,
        tail_bound,
        floor,
        truncation_dim: space.truncation_dim,
        passed: residual <= 10.0 * tail_bound + floor,
    })
}

/// Residual of `M*_φ (k_z ⊗ k_w) M_ψ = conj(φ(z)) ψ(w) (k_z ⊗ k_w)`.
///
/// With `a = M*_φ k_z = conj(φ(z)) k_z + δ₁` and `b = M*_ψ k_w = conj(ψ(w)) k_w + δ₂`
/// the residual is `δ₁ ⊗ b + conj(φ(z)) k_z ⊗ δ₂`, evaluated in factored form.
pub fn conjugation_eigencheck(
    phi: &AnalyticSymbol,
    psi: &AnalyticSymbol,
    space: &BetaSpace,
    z: C64,
    w: C64,
) -> Result<EigenReport> {
    let (kz, _, d1) = adjoint_parts(phi, space, z)?;
    let (kw, b, d2) = adjoint_parts(psi, space, w)?;
    let alpha = phi.eval(z).conj();
    let eigenvalue = alpha * psi.eval(w);
    let dim = space.dim();
    let mut r = LowRank::new(dim, dim);
    r.push(d1, b.clone())?;
    r.push(kz.iter().map(|c| c * alpha).collect(), d2)?;
    let spectrum = r.singular_values()?;
    let tail_bound = adjoint_tail(phi, space, z) * norm2(&b)
        + alpha.norm() * norm2(&kz) * adjoint_tail(psi, space, w);
    let scale = (phi.taylor.l1_norm() * norm2(&kz)) * (psi.taylor.l1_norm() * norm2(&kw));
    let floor = rounding_floor(scale, dim);
    let residual = spectrum.largest();
    Ok(EigenReport {
        eigenvalue,
        residual,
        residual_s1: Some(spectrum.lp(1.0)),
        tail_bound,
        floor,
        truncation_dim: space.truncation_dim,
        passed: residual <= 10.0 * tail_bound + floor,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocusPoint {
    #[serde(with = "crate::spaces::cplx_serde")]
    pub z: C64,
    #[serde(with = "crate::spaces::cplx_serde")]
    pub w: C64,
    /// `|conj(φ(z)) ψ(w)|`.
    pub modulus: f64,
}

fn polar_grid(g: usize) -> Vec<C64> {
    let angles = 4 * g;
    let mut pts = vec![C64::new(0.0, 0.0)];
    for a in 1..=g {
        let r = BOUNDARY_RADIUS * a as f64 / g as f64;
        for t in 0..angles {
            pts.push(C64::from_polar(r, 2.0 * PI * t as f64 / angles as f64));
        }
    }
    pts
}

/// Pairs `(z, w)` on a polar grid of `𝔻 × 𝔻` with `|φ(z) ψ(w)|` within `tol` of one.
///
/// For every grid point `w` and every grid angle `θ`, the radial line
/// `z = ρ e^{iθ}` is scanned and each crossing of the unit level is refined
/// by bisection. An empty result means no crossing was found on this grid.
pub fn unimodular_locus_sample(
    phi: &AnalyticSymbol,
    psi: &AnalyticSymbol,
    grid_density: usize,
    tol: f64,
) -> Result<Vec<LocusPoint>> {
    if grid_density < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid density {grid_density} must be at least 8"
        )));
    }
    let g = grid_density;
    let angles = 4 * g;
    let radii: Vec<f64> = (0..=g)
        .map(|a| BOUNDARY_RADIUS * a as f64 / g as f64)
        .collect();
    let ws = polar_grid(g);
    let found: Vec<Vec<LocusPoint>> = ws
        .par_iter()
        .map(|&w| {
            let gw = psi.eval(w).norm();
            let mut out = Vec::new();
            if gw == 0.0 {
                return out;
            }
            let level = |z: C64| phi.eval(z).norm() * gw - 1.0;
            let push = |z: C64, out: &mut Vec<LocusPoint>| {
                let modulus = (phi.eval(z).conj() * psi.eval(w)).norm();
                if (modulus - 1.0).abs() < tol {
                    out.push(LocusPoint { z, w, modulus });
                }
            };
            for t in 0..angles {
                let dir = C64::from_polar(1.0, 2.0 * PI * t as f64 / angles as f64);
                let mut prev = level(dir * radii[0]);
                if prev.abs() < tol && t == 0 {
                    push(C64::new(0.0, 0.0), &mut out);
                }
                for pair in radii.windows(2) {
                    let (mut lo, mut hi) = (pair[0], pair[1]);
                    let cur = level(dir * hi);
                    if cur.abs() < tol {
                        push(dir * hi, &mut out);
                    } else if prev.signum() != cur.signum() && prev.abs() >= tol {
                        let mut flo = prev;
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            let fm = level(dir * mid);
                            if fm.signum() == flo.signum() {
                                lo = mid;
                                flo = fm;
                            } else {
                                hi = mid;
                            }
                        }
                        push(dir * (0.5 * (lo + hi)), &mut out);
                    }
                    prev = cur;
                }
            }
            out
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

/// `(r e^{2πi k/g}, r e^{2πi k/g²})` for `k = 0..count`, where `g ≈ 1.3247` is the
/// real root of `g³ = g + 1`. The angle pairs form the additive recurrence on the
/// torus with the lowest known discrepancy; each prefix is a smaller sample.
pub fn torus_samples(radius: f64, count: usize) -> Vec<(C64, C64)> {
    let g = plastic_number();
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    (0..count)
        .map(|k| {
            let k = k as f64;
            (
                C64::from_polar(radius, 2.0 * PI * (k * a1).fract()),
                C64::from_polar(radius, 2.0 * PI * (k * a2).fract()),
            )
        })
        .collect()
}

fn plastic_number() -> f64 {
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid * mid * mid - mid - 1.0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Drops pairs whose eigenvalue `conj(φ(z)) ψ(w)` lies within `tol` of an excluded value.
pub fn exclude_eigenvalues(
    points: &[LocusPoint],
    phi: &AnalyticSymbol,
    psi: &AnalyticSymbol,
    exclusions: &[C64],
    tol: f64,
) -> Vec<LocusPoint> {
    points
        .iter()
        .filter(|p| {
            let ev = phi.eval(p.z).conj() * psi.eval(p.w);
            exclusions.iter().all(|e| (ev - e).norm() >= tol)
        })
        .copied()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanResidual {
    /// `‖T − Σ c_i k_{z_i} ⊗ k_{w_i}‖ / ‖T‖` at the least-squares optimum.
    pub relative_residual: f64,
    /// The residual is measured in the Frobenius (`S_2`) metric.
    pub metric: &'static str,
    pub samples: usize,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Least-squares approximation of `target` by `span{k_{z_i} ⊗ k_{w_i}}` in the
/// Frobenius metric, solved through the Gram system with a truncated
/// pseudo-inverse (cutoff `1e-10 σ_1`).
pub fn span_density_residual(
    samples: &[(C64, C64)],
    target: &MatOp,
    space: &BetaSpace,
) -> Result<SpanResidual> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let dim = space.dim();
    if target.rows() != dim || target.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "target is {}x{}, space has dimension {dim}",
            target.rows(),
            target.cols()
        )));
    }
    let kernels: Vec<(Vec<C64>, Vec<C64>)> = samples
        .iter()
        .map(|&(z, w)| Ok((kernel_dense(space, z)?, kernel_dense(space, w)?)))
        .collect::<Result<_>>()?;
    for &(z, w) in samples {
        check_disc(z)?;
        check_disc(w)?;
    }
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let m = samples.len();
    // ⟨K_b, K_a⟩ = (u_a^H u_b)(v_b^H v_a) for K = u v^H
    let gram = MatOp::from_fn(m, m, |a, b| {
        dot(&kernels[a].0, &kernels[b].0) * dot(&kernels[b].1, &kernels[a].1)
    });
    let rhs: Vec<C64> = kernels
        .iter()
        .map(|(u, v)| {
            let tv = target.mul_vec(v).expect("dimensions checked");
            dot(u, &tv)
        })
        .collect();
    let (inv, rank) = pseudo_inverse(&gram, 1e-10)?;
    let coef = inv.mul_vec(&rhs)?;
    let mut resid = target.clone();
    for (c, (u, v)) in coef.iter().zip(&kernels) {
        for i in 0..dim {
            for j in 0..dim {
                let cur = resid.get(i, j);
                resid.set(i, j, cur - c * u[i] * v[j].conj());
            }
        }
    }
    let tn = target.frobenius_norm();
    Ok(SpanResidual {
        relative_residual: if tn == 0.0 {
            0.0
        } else {
            resid.frobenius_norm() / tn
        },
        metric: "frobenius",
        samples: m,
        rank,
        rank_deficient: rank < m,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConverseKind {
    NotHypercyclicContraction,
    NotHypercyclicInverseContraction,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConverseCertificate {
    pub kind: ConverseKind,
    pub sup_phi: f64,
    pub sup_psi: f64,
    pub inf_phi: f64,
    pub inf_psi: f64,
    /// Some supremum came from boundary sampling rather than a supplied bound.
    pub sup_estimated: bool,
    /// `‖C^n S‖` for `n = 0..=50` on a random `S` with `‖S‖ = 1`.
    pub orbit_norms: Vec<f64>,
    /// The orbit norms move in the direction the certificate predicts.
    pub orbit_consistent: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryEstimate {
    pub sup: f64,
    /// Infimum over the closed disc: the boundary minimum when `φ` has no zeros inside, else zero.
    pub inf: f64,
    pub zeros_inside: i64,
}

/// Maximum and minimum modulus of `φ` from `720` samples on `|z| = 1 − 1e-6`,
/// with the zero count from the winding number.
pub fn boundary_estimate(phi: &AnalyticSymbol) -> BoundaryEstimate {
    let vals: Vec<C64> = (0..BOUNDARY_SAMPLES)
        .map(|t| {
            phi.eval(C64::from_polar(
                BOUNDARY_RADIUS,
                2.0 * PI * t as f64 / BOUNDARY_SAMPLES as f64,
            ))
        })
        .collect();
    let sup = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let min = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let mut turn = 0.0;
    for t in 0..vals.len() {
        let a = vals[t];
        let b = vals[(t + 1) % vals.len()];
        if a.norm() > 0.0 && b.norm() > 0.0 {
            turn += (b / a).arg();
        }
    }
    let zeros_inside = (turn / (2.0 * PI)).round() as i64;
    BoundaryEstimate {
        sup,
        inf: if zeros_inside == 0 && min > 0.0 {
            min
        } else {
            0.0
        },
        zeros_inside,
    }
}

fn random_unit(dim: usize, seed: u64) -> Result<MatOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<C64> = (0..dim * dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let s = MatOp::new(dim, dim, data)?;
    let n = operator_norm(&s)?;
    Ok(s.scale(C64::new(1.0 / n, 0.0)))
}

/// Norm-based obstruction to hypercyclicity of `S ↦ M*_φ S M_ψ`: a contraction
/// when `‖φ‖_∞ ‖ψ‖_∞ ≤ 1`, an inverse contraction when `inf|φ| inf|ψ| ≥ 1`.
pub fn converse_certificate(
    phi: &AnalyticSymbol,
    psi: &AnalyticSymbol,
    space: &BetaSpace,
    seed: u64,
) -> Result<ConverseCertificate> {
    let bp = boundary_estimate(phi);
    let bq = boundary_estimate(psi);
    let sup_phi = phi.sup_bound.unwrap_or(bp.sup);
    let sup_psi = psi.sup_bound.unwrap_or(bq.sup);
    let sup_estimated = phi.sup_bound.is_none() || psi.sup_bound.is_none();
    let kind = if sup_phi * sup_psi <= 1.0 {
        ConverseKind::NotHypercyclicContraction
    } else if bp.inf * bq.inf >= 1.0 {
        ConverseKind::NotHypercyclicInverseContraction
    } else {
        ConverseKind::Inconclusive
    };

    let m_phi_adj = mult_op_matrix(phi, space)?.adjoint();
    let m_psi = mult_op_matrix(psi, space)?;
    let mut s = random_unit(space.dim(), seed)?;
    let mut orbit_norms = vec![operator_norm(&s)?];
    for _ in 0..ORBIT_STEPS {
        s = m_phi_adj.mul(&s)?.mul(&m_psi)?;
        orbit_norms.push(operator_norm(&s)?);
    }
    let slack = 1e-12;
    let orbit_consistent = match kind {
        ConverseKind::NotHypercyclicContraction => {
            Some(orbit_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack)))
        }
        ConverseKind::NotHypercyclicInverseContraction => {
            Some(orbit_norms.windows(2).all(|w| w[1] >= w[0] * (1.0 - slack)))
        }
        ConverseKind::Inconclusive => None,
    };
    Ok(ConverseCertificate {
        kind,
        sup_phi,
        sup_psi,
        inf_phi: bp.inf,
        inf_psi: bq.inf,
        sup_estimated,
        orbit_norms,
        orbit_consistent,
    })
}

#[derive(Clone, Debug)]
pub struct NuclearCheck {
    pub phi: AnalyticSymbol,
    pub psi: AnalyticSymbol,
    pub lambda: C64,
    pub mu: C64,
    pub p: f64,
    /// Largest retained index.
    pub truncation_dim: usize,
    /// Seed for the random operator in the trace-duality check.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuclearReport {
    #[serde(with = "crate::spaces::cplx_serde")]
    pub eigenvalue: C64,
    /// `ℓ²` operator norm of the truncated residual.
    pub residual_l2: f64,
    /// Triangle bound on the `ℓ^p` operator norm of the residual.
    pub residual_lp_bound: f64,
    pub tail_bound: f64,
    pub floor: f64,
    pub passed: bool,
    #[serde(with = "crate::spaces::cplx_serde")]
    pub trace_direct: C64,
    #[serde(with = "crate::spaces::cplx_serde")]
    pub trace_pairing: C64,
    pub trace_error: f64,
    pub trace_ok: bool,
}

/// Upper-triangular Toeplitz truncation of `φ(B)`: `(n, n + t) ↦ c_t`.
fn backward_poly(phi: &AnalyticSymbol, dim: usize) -> MatOp {
    let deg = phi.degree();
    MatOp::from_fn(dim, dim, |i, j| {
        if j >= i && j - i <= deg {
            phi.taylor.coeff(j - i)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Residual of `φ(B) (f_λ ⊗ f_μ) ψ(F) = φ(λ) ψ(μ) (f_λ ⊗ f_μ)` in the bilinear
/// duality, where `(u ⊗ v) x = ⟨x, v⟩ u`, plus the trace identity
/// `tr((f_λ ⊗ f_μ) S) = ⟨f_λ, S^T f_μ⟩` on a random `S`.
pub fn nuclear_eigencheck(cfg: &NuclearCheck) -> Result<NuclearReport> {
    check_exponent(cfg.p)?;
    check_disc(cfg.lambda)?;
    check_disc(cfg.mu)?;
    let dim = cfg.truncation_dim + 1;
    if dim > MAX_SVD_DIM {
        return Err(Error::TooLarge {
            what: "truncation dimension",
            len: dim,
            max: MAX_SVD_DIM,
        });
    }
    let fl = SeqVector::geometric(cfg.lambda, dim).to_dense(0, dim);
    let fm = SeqVector::geometric(cfg.mu, dim).to_dense(0, dim);
    let phil = cfg.phi.eval(cfg.lambda);
    let psim = cfg.psi.eval(cfg.mu);
    // (u ⊗ v) ψ(F) = u ⊗ ψ(F)^T v = u ⊗ ψ(B) v
    let a = backward_poly(&cfg.phi, dim).mul_vec(&fl)?;
    let b = backward_poly(&cfg.psi, dim).mul_vec(&fm)?;
    let d1 = axpy(phil, &fl, &a);
    let d2 = axpy(psim, &fm, &b);

    let conj = |v: &[C64]| v.iter().map(|c| c.conj()).collect::<Vec<_>>();
    let mut r = LowRank::new(dim, dim);
    r.push(d1.clone(), conj(&b))?;
    r.push(fl.iter().map(|c| c * phil).collect(), conj(&d2))?;
    let residual_l2 = r.operator_norm()?;

    let pd = dual_exponent(cfg.p);
    let residual_lp_bound = lp_norm(&d1, cfg.p) * lp_norm(&b, pd)
        + phil.norm() * lp_norm(&fl, cfg.p) * lp_norm(&d2, pd);
    let rows = |deg: usize, p: f64| {
        if p.is_infinite() {
            1.0
        } else {
            (deg.max(1) as f64).powf(1.0 / p)
        }
    };
    let n1 = cfg.truncation_dim as i32 + 1;
    let t1 = cfg.phi.taylor.l1_norm() * cfg.lambda.norm().powi(n1) * rows(cfg.phi.degree(), cfg.p);
    let t2 = cfg.psi.taylor.l1_norm() * cfg.mu.norm().powi(n1) * rows(cfg.psi.degree(), pd);
    let tail_bound = t1 * lp_norm(&b, pd) + phil.norm() * lp_norm(&fl, cfg.p) * t2;
    let scale = cfg.phi.taylor.l1_norm()
        * lp_norm(&fl, cfg.p)
        * cfg.psi.taylor.l1_norm()
        * lp_norm(&fm, pd);
    let floor = rounding_floor(scale, dim);
    let passed = residual_lp_bound <= 10.0 * tail_bound + floor
        && residual_l2 <= residual_lp_bound * (1.0 + 1e-12) + floor;

    let s = random_unit(dim, cfg.seed)?;
    let outer = MatOp::from_fn(dim, dim, |i, j| fl[i] * fm[j]);
    let trace_direct: C64 = {
        let prod = outer.mul(&s)?;
        (0..dim).map(|i| prod.get(i, i)).sum()
    };
    let stf = s.transpose().mul_vec(&fm)?;
    let trace_pairing: C64 = fl.iter().zip(&stf).map(|(x, y)| x * y).sum();
    let trace_error = (trace_direct - trace_pairing).norm();
    Ok(NuclearReport {
        eigenvalue: phil * psim,
        residual_l2,
        residual_lp_bound,
        tail_bound,
        floor,
        passed,
        trace_direct,
        trace_pairing,
        trace_error,
        trace_ok: trace_error <= 1e-10 * trace_pairing.norm().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn poly(coeffs: &[f64]) -> AnalyticSymbol {
        AnalyticSymbol::new(TaylorPoly::real(coeffs)).unwrap()
    }

    #[test]
    fn kernel_at_origin_is_first_basis_vector() {
        let k = kernel_vector(&BetaSpace::hardy(16), c(0.0)).unwrap();
        assert_eq!(
            k.coeffs,
            SeqVector::basis(IndexDomain::Naturals, 0).unwrap()
        );
        assert_eq!(k.tail_bound, 0.0);
    }

    #[test]
    fn reproducing_property_on_monomials() {
        let space = BetaSpace::hardy(16);
        let k = kernel_vector(&space, c(0.5)).unwrap();
        let e3 = SeqVector::basis(IndexDomain::Naturals, 3).unwrap();
        assert!((e3.inner(&k.coeffs).unwrap() - c(0.125)).norm() < 1e-15);

        let space = BetaSpace::inv_linear(16);
        let k = kernel_vector(&space, c(0.5)).unwrap();
        let mut f = vec![c(0.0); space.dim()];
        f[0] = c(1.0);
        f[1] = c(1.0);
        let inner: C64 = f
            .iter()
            .zip(k.dense(space.dim()))
            .map(|(a, b)| a * b.conj())
            .sum();
        // f(z) = 1 + z/2
        assert!((inner - c(1.25)).norm() < 1e-10);
        assert!((space.evaluate(&f, c(0.5)).unwrap() - c(1.25)).norm() < 1e-15);
    }

    #[test]
    fn kernel_outside_disc_rejected() {
        assert!(matches!(
            kernel_vector(&BetaSpace::hardy(4), c(1.0)),
            Err(Error::OutsideDisc(_))
        ));
    }

    #[test]
    fn multiplication_matrices() {
        let m = mult_op_matrix(&AnalyticSymbol::z(), &BetaSpace::hardy(4)).unwrap();
        for k in 0..5 {
            for n in 0..5 {
                assert_eq!(m.get(k, n), c(if k == n + 1 { 1.0 } else { 0.0 }));
            }
        }
        let m = mult_op_matrix(&AnalyticSymbol::z(), &BetaSpace::inv_linear(6)).unwrap();
        for n in 0..6 {
            let want = (n as f64 + 2.0) / (n as f64 + 1.0);
            assert!((m.get(n + 1, n).re - want).abs() < 1e-15);
        }
        let m = mult_op_matrix(
            &AnalyticSymbol::constant(C64::new(2.0, 1.0)),
            &BetaSpace::hardy(3),
        )
        .unwrap();
        assert_eq!(m, MatOp::identity(4).scale(C64::new(2.0, 1.0)));
    }

    #[test]
    fn adjoint_eigencheck_examples() {
        let space = BetaSpace::hardy(128);
        let r = adjoint_kernel_eigencheck(&AnalyticSymbol::z(), &space, c(0.6)).unwrap();
        assert!(r.passed);
        assert!(r.residual <= 0.6f64.powi(127));

        let k = AnalyticSymbol::constant(C64::new(0.3, -0.2));
        assert_eq!(
            adjoint_kernel_eigencheck(&k, &space, C64::new(0.2, 0.5))
                .unwrap()
                .residual,
            0.0
        );

        let r = adjoint_kernel_eigencheck(&poly(&[1.0, -2.0, 0.5]), &space, c(0.0)).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.eigenvalue, c(1.0));
    }

    #[test]
    fn conjugation_eigencheck_examples() {
        let space = BetaSpace::hardy(64);
        let r = conjugation_eigencheck(
            &AnalyticSymbol::z(),
            &AnalyticSymbol::z(),
            &space,
            c(0.5),
            c(0.5),
        )
        .unwrap();
        assert!((r.eigenvalue - c(0.25)).norm() < 1e-15);
        assert!(r.passed, "{r:?}");

        let phi = poly(&[0.7, 1.0]);
        let psi = poly(&[-0.2, 0.0, 3.0]);
        let r = conjugation_eigencheck(&phi, &psi, &space, c(0.0), c(0.0)).unwrap();
        assert_eq!(r.eigenvalue, c(0.7 * -0.2));
        assert_eq!(r.residual, 0.0);

        let one = AnalyticSymbol::constant(c(1.0));
        let z = C64::new(0.3, 0.4);
        let conj = conjugation_eigencheck(&phi, &one, &space, z, c(0.1)).unwrap();
        let adj = adjoint_kernel_eigencheck(&phi, &space, z).unwrap();
        let kw = norm2(&kernel_dense(&space, c(0.1)).unwrap());
        assert!((conj.residual - adj.residual * kw).abs() <= 1e-12 * adj.residual.max(1e-300));
    }

    #[test]
    fn factored_residual_matches_dense() {
        let space = BetaSpace::hardy(12);
        let phi = poly(&[0.2, 0.7, -0.3]);
        let psi = poly(&[0.5, 0.5]);
        let (z, w) = (C64::new(0.8, 0.1), C64::new(-0.7, 0.2));
        let r = conjugation_eigencheck(&phi, &psi, &space, z, w).unwrap();
        let kz = kernel_dense(&space, z).unwrap();
        let kw = kernel_dense(&space, w).unwrap();
        let s = MatOp::from_fn(space.dim(), space.dim(), |i, j| kz[i] * kw[j].conj());
        let lhs = mult_op_matrix(&phi, &space)
            .unwrap()
            .adjoint()
            .mul(&s)
            .unwrap()
            .mul(&mult_op_matrix(&psi, &space).unwrap())
            .unwrap();
        let dense = operator_norm(&lhs.sub(&s.scale(r.eigenvalue)).unwrap()).unwrap();
        assert!(
            (dense - r.residual).abs() < 1e-12,
            "{dense} vs {}",
            r.residual
        );
    }

    #[test]
    fn multiplication_is_multiplicative() {
        let space = BetaSpace::inv_linear(20);
        let phi = poly(&[1.0, 0.5, 0.25]);
        let psi = poly(&[0.0, 2.0, 0.0, -1.0]);
        let prod = mult_op_matrix(&phi.mul(&psi), &space).unwrap();
        let composed = mult_op_matrix(&phi, &space)
            .unwrap()
            .mul(&mult_op_matrix(&psi, &space).unwrap())
            .unwrap();
        assert!(prod.max_abs_diff(&composed).unwrap() < 1e-10);
    }

    #[test]
    fn locus_examples() {
        let one = AnalyticSymbol::constant(c(1.0));
        let arc = unimodular_locus_sample(&poly(&[1.0, 1.0]), &one, 8, 1e-9).unwrap();
        assert!(!arc.is_empty());
        for p in &arc {
            assert!(((p.z + 1.0).norm() - 1.0).abs() < 1e-9);
        }

        let k = AnalyticSymbol::constant(c(0.3));
        assert!(unimodular_locus_sample(&k, &k, 8, 1e-6).unwrap().is_empty());

        let pts = unimodular_locus_sample(&poly(&[0.0, 2.0]), &one, 8, 1e-9).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| (p.z.norm() - 0.5).abs() < 1e-9));
        assert!(unimodular_locus_sample(&one, &one, 4, 1e-6).is_err());
    }

    #[test]
    fn exclusions_filter_eigenvalues() {
        let one = AnalyticSymbol::constant(c(1.0));
        let phi = poly(&[0.0, 2.0]);
        let pts = unimodular_locus_sample(&phi, &one, 8, 1e-9).unwrap();
        let kept = exclude_eigenvalues(&pts, &phi, &one, &[c(1.0)], 1e-6);
        assert!(kept.len() < pts.len());
        assert!(kept
            .iter()
            .all(|p| (phi.eval(p.z).conj() - c(1.0)).norm() >= 1e-6));
    }

    #[test]
    fn span_residual_examples() {
        let space = BetaSpace::hardy(16);
        let (z, w) = (C64::new(0.3, 0.2), c(-0.4));
        let kz = kernel_dense(&space, z).unwrap();
        let kw = kernel_dense(&space, w).unwrap();
        let target = MatOp::from_fn(17, 17, |i, j| kz[i] * kw[j].conj());
        let r = span_density_residual(&[(z, w)], &target, &space).unwrap();
        assert!(r.relative_residual < 1e-12);

        // one kernel pair against e_5 ⊗ e_5: the projection keeps only the tiny overlap
        let mut t = MatOp::zeros(17, 17);
        t.set(5, 5, c(1.0));
        let r = span_density_residual(&[(c(0.2), c(0.2))], &t, &space).unwrap();
        assert!(r.relative_residual > 0.999);
    }

    #[test]
    fn torus_samples_are_nested_and_distinct() {
        let g = plastic_number();
        assert!((g * g * g - g - 1.0).abs() < 1e-14);
        let small = torus_samples(0.5, 8);
        let big = torus_samples(0.5, 64);
        assert_eq!(&big[..8], small.as_slice());
        assert!(big
            .iter()
            .all(|(z, w)| (z.norm() - 0.5).abs() < 1e-15 && (w.norm() - 0.5).abs() < 1e-15));
        for (i, a) in big.iter().enumerate() {
            for b in &big[i + 1..] {
                assert!((a.0 - b.0).norm() + (a.1 - b.1).norm() > 1e-6);
            }
        }
    }

    #[test]
    fn converse_examples() {
        let space = BetaSpace::hardy(12);
        let one = AnalyticSymbol::constant(c(1.0));
        let cert =
            converse_certificate(&AnalyticSymbol::constant(c(0.5)), &one, &space, 7).unwrap();
        assert_eq!(cert.kind, ConverseKind::NotHypercyclicContraction);
        assert_eq!(cert.orbit_consistent, Some(true));

        let cert = converse_certificate(&poly(&[3.0, 1.0]), &one, &space, 7).unwrap();
        assert_eq!(cert.kind, ConverseKind::NotHypercyclicInverseContraction);
        assert!((cert.inf_phi - 2.0).abs() < 1e-5);
        assert_eq!(cert.orbit_consistent, Some(true));

        let cert = converse_certificate(&poly(&[1.0, 1.0]), &one, &space, 7).unwrap();
        assert_eq!(cert.kind, ConverseKind::Inconclusive);
    }

    #[test]
    fn winding_counts_zeros() {
        assert_eq!(boundary_estimate(&poly(&[0.0, 1.0])).zeros_inside, 1);
        assert_eq!(boundary_estimate(&poly(&[3.0, 1.0])).zeros_inside, 0);
        assert_eq!(boundary_estimate(&poly(&[0.25, 0.0, 1.0])).zeros_inside, 2);
    }

    #[test]
    fn nuclear_examples() {
        let one = AnalyticSymbol::constant(c(1.0));
        let r = nuclear_eigencheck(&NuclearCheck {
            phi: AnalyticSymbol::z(),
            psi: one.clone(),
            lambda: c(0.5),
            mu: c(0.3),
            p: 2.0,
            truncation_dim: 64,
            seed: 1,
        })
        .unwrap();
        assert_eq!(r.eigenvalue, c(0.5));
        assert!(r.passed, "{r:?}");

        let phi = poly(&[0.4, 1.0, -1.0]);
        let psi = poly(&[2.0, 0.5]);
        let r = nuclear_eigencheck(&NuclearCheck {
            phi: phi.clone(),
            psi: psi.clone(),
            lambda: c(0.0),
            mu: c(0.0),
            p: 1.5,
            truncation_dim: 16,
            seed: 1,
        })
        .unwrap();
        assert_eq!(r.eigenvalue, c(0.8));
        assert_eq!(r.residual_lp_bound, 0.0);

        let r = nuclear_eigencheck(&NuclearCheck {
            phi,
            psi,
            lambda: c(0.3),
            mu: c(0.3),
            p: 1.0,
            truncation_dim: 24,
            seed: 9,
        })
        .unwrap();
        assert!(r.trace_ok);
        assert!(r.trace_error <= 1e-10);
    }
}
