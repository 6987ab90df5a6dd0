use serde::{Deserialize, Serialize};

use super::vector::{IndexDomain, SeqVector};
use super::weights::{cplx_vec, WeightSeq};
use crate::error::{Error, Result};
use crate::scalar::{Wide, C64};

/// Polynomial `c_0 + c_1 z + ... + c_M z^M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PolyRepr", into = "PolyRepr")]
pub struct TaylorPoly {
    coeffs: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    #[serde(with = "cplx_vec")]
    coeffs: Vec<C64>,
}

impl From<PolyRepr> for TaylorPoly {
    fn from(r: PolyRepr) -> Self {
        TaylorPoly::new(r.coeffs)
    }
}

impl From<TaylorPoly> for PolyRepr {
    fn from(p: TaylorPoly) -> Self {
        PolyRepr { coeffs: p.coeffs }
    }
}

impl TaylorPoly {
    /// Trailing zero coefficients are trimmed.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        TaylorPoly { coeffs }
    }

    pub fn real(coeffs: &[f64]) -> Self {
        TaylorPoly::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn constant(c: C64) -> Self {
        TaylorPoly::new(vec![c])
    }

    /// The identity symbol `z`.
    pub fn z() -> Self {
        TaylorPoly::real(&[0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize) -> C64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn mul(&self, other: &TaylorPoly) -> TaylorPoly {
        if self.is_zero() || other.is_zero() {
            return TaylorPoly::new(Vec::new());
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        TaylorPoly::new(out)
    }

    pub fn conj(&self) -> TaylorPoly {
        TaylorPoly::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// `Σ |c_m|`, an upper bound for `sup_{|z|≤1} |p(z)|`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDirection {
    Backward,
    Forward,
}

/// Symbolic shift-type operator applied exactly to sparse vectors.
///
/// Conventions, with `{e_n}` the standard basis:
/// - `BackwardUnilateral`: `B_w e_0 = 0`, `B_w e_n = w_n e_{n-1}`
/// - `ForwardUnilateral`: `F_μ e_n = μ_{n+1} e_{n+1}`
/// - `BackwardBilateral`: `T_a e_n = a_n e_{n-1}` on ℤ
/// - `ForwardBilateral`: `S_b e_n = b_{n+1} e_{n+1}` on ℤ
/// - `Diagonal`: `D_λ e_n = λ_n e_n`
/// - `PolynomialOfShift`: `Σ c_m X^m` with `X` the unweighted unilateral backward or forward shift
///
/// With these conventions the transpose of a backward shift is the forward
/// shift with the same weight sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftOp {
    BackwardUnilateral {
        weights: WeightSeq,
    },
    ForwardUnilateral {
        weights: WeightSeq,
    },
    BackwardBilateral {
        weights: WeightSeq,
    },
    ForwardBilateral {
        weights: WeightSeq,
    },
    Diagonal {
        weights: WeightSeq,
    },
    PolynomialOfShift {
        poly: TaylorPoly,
        base: ShiftDirection,
    },
}

impl ShiftOp {
    pub fn backward(weights: WeightSeq) -> Self {
        ShiftOp::BackwardUnilateral { weights }
    }

    pub fn forward(weights: WeightSeq) -> Self {
        ShiftOp::ForwardUnilateral { weights }
    }

    pub fn backward_bilateral(weights: WeightSeq) -> Self {
        ShiftOp::BackwardBilateral {
            weights: weights.on_integers(),
        }
    }

    pub fn forward_bilateral(weights: WeightSeq) -> Self {
        ShiftOp::ForwardBilateral {
            weights: weights.on_integers(),
        }
    }

    pub fn diagonal(weights: WeightSeq) -> Self {
        ShiftOp::Diagonal { weights }
    }

    /// `φ(B)` or `φ(F)` for the unweighted unilateral shifts.
    pub fn polynomial(poly: TaylorPoly, base: ShiftDirection) -> Self {
        ShiftOp::PolynomialOfShift { poly, base }
    }

    /// Domain the operator acts on; `None` for diagonal operators, which act on either.
    pub fn domain(&self) -> Option<IndexDomain> {
        match self {
            ShiftOp::BackwardUnilateral { .. }
            | ShiftOp::ForwardUnilateral { .. }
            | ShiftOp::PolynomialOfShift { .. } => Some(IndexDomain::Naturals),
            ShiftOp::BackwardBilateral { .. } | ShiftOp::ForwardBilateral { .. } => {
                Some(IndexDomain::Integers)
            }
            ShiftOp::Diagonal { .. } => None,
        }
    }

    pub fn weights(&self) -> Option<&WeightSeq> {
        match self {
            ShiftOp::BackwardUnilateral { weights }
            | ShiftOp::ForwardUnilateral { weights }
            | ShiftOp::BackwardBilateral { weights }
            | ShiftOp::ForwardBilateral { weights }
            | ShiftOp::Diagonal { weights } => Some(weights),
            ShiftOp::PolynomialOfShift { .. } => None,
        }
    }

    fn check(&self, v: &SeqVector) -> Result<()> {
        match self.domain() {
            Some(d) if d != v.domain() => Err(Error::IncompatibleDomains {
                op: d,
                vector: v.domain(),
            }),
            _ => Ok(()),
        }
    }

    /// Number of bands the image support can move `(down, up)`.
    pub fn reach(&self) -> (usize, usize) {
        match self {
            ShiftOp::BackwardUnilateral { .. } | ShiftOp::BackwardBilateral { .. } => (1, 0),
            ShiftOp::ForwardUnilateral { .. } | ShiftOp::ForwardBilateral { .. } => (0, 1),
            ShiftOp::Diagonal { .. } => (0, 0),
            ShiftOp::PolynomialOfShift { poly, base } => match base {
                ShiftDirection::Backward => (poly.degree(), 0),
                ShiftDirection::Forward => (0, poly.degree()),
            },
        }
    }

    /// Exact image `op(v)`.
    pub fn apply(&self, v: &SeqVector) -> Result<SeqVector> {
        self.check(v)?;
        let mut out = SeqVector::zero(v.domain());
        match self {
            ShiftOp::BackwardUnilateral { weights } => {
                for (n, c) in v.iter() {
                    if n >= 1 {
                        out.add_at(n - 1, c * weights.weight_wide(n)?)?;
                    }
                }
            }
            ShiftOp::BackwardBilateral { weights } => {
                for (n, c) in v.iter() {
                    out.add_at(n - 1, c * weights.weight_wide(n)?)?;
                }
            }
            ShiftOp::ForwardUnilateral { weights } | ShiftOp::ForwardBilateral { weights } => {
                for (n, c) in v.iter() {
                    out.add_at(n + 1, c * weights.weight_wide(n + 1)?)?;
                }
            }
            ShiftOp::Diagonal { weights } => {
                for (n, c) in v.iter() {
                    out.add_at(n, c * weights.weight_wide(n)?)?;
                }
            }
            ShiftOp::PolynomialOfShift { poly, base } => {
                let mut power = v.clone();
                for (m, &c) in poly.coeffs().iter().enumerate() {
                    if m > 0 {
                        power = unweighted_shift(&power, *base)?;
                    }
                    out.axpy(Wide::from_c64(c), &power)?;
                }
            }
        }
        Ok(out)
    }

    /// `op^k (v)` by repeated exact application.
    pub fn apply_power(&self, v: &SeqVector, k: u64) -> Result<SeqVector> {
        let mut cur = v.clone();
        for _ in 0..k {
            if cur.is_zero() {
                break;
            }
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// `S^m v` for the right inverse `S` built from the weights:
    /// `S e_n = e_{n+1} / w_{n+1}` for shifts and `S e_n = e_n / λ_n` for diagonals.
    ///
    /// For backward shifts and diagonals `S` is a right inverse of `op`. For
    /// forward shifts it is the map `J_μ`, a right inverse of the transpose
    /// (the Banach adjoint) of `op`. See [`ShiftOp::inverse_partner`].
    pub fn apply_right_inverse(&self, v: &SeqVector, m: u64) -> Result<SeqVector> {
        self.check(v)?;
        let mut out = SeqVector::zero(v.domain());
        match self {
            ShiftOp::BackwardUnilateral { weights }
            | ShiftOp::BackwardBilateral { weights }
            | ShiftOp::ForwardUnilateral { weights }
            | ShiftOp::ForwardBilateral { weights } => {
                let m = m as i64;
                for (n, c) in v.iter() {
                    let prod = weights.product(n + 1, n + m)?;
                    out.add_at(n + m, c / prod)?;
                }
            }
            ShiftOp::Diagonal { weights } => {
                for (n, c) in v.iter() {
                    let lam = weights.weight_wide(n)?;
                    out.add_at(n, c / lam.powu(m))?;
                }
            }
            ShiftOp::PolynomialOfShift { .. } => {
                return Err(Error::Unsupported(
                    "polynomials of shifts have no weight-product right inverse".into(),
                ))
            }
        }
        Ok(out)
    }

    /// The operator that [`ShiftOp::apply_right_inverse`] inverts from the right.
    pub fn inverse_partner(&self) -> Result<ShiftOp> {
        match self {
            ShiftOp::BackwardUnilateral { .. }
            | ShiftOp::BackwardBilateral { .. }
            | ShiftOp::Diagonal { .. } => Ok(self.clone()),
            ShiftOp::ForwardUnilateral { .. } | ShiftOp::ForwardBilateral { .. } => {
                Ok(self.transpose())
            }
            ShiftOp::PolynomialOfShift { .. } => Err(Error::Unsupported(
                "polynomials of shifts have no weight-product right inverse".into(),
            )),
        }
    }

    /// Transpose with respect to the standard basis (the Banach-space adjoint
    /// under the bilinear `ℓ^p × ℓ^{p'}` pairing).
    pub fn transpose(&self) -> ShiftOp {
        match self {
            ShiftOp::BackwardUnilateral { weights } => ShiftOp::ForwardUnilateral {
                weights: weights.clone(),
            },
            ShiftOp::ForwardUnilateral { weights } => ShiftOp::BackwardUnilateral {
                weights: weights.clone(),
            },
            ShiftOp::BackwardBilateral { weights } => ShiftOp::ForwardBilateral {
                weights: weights.clone(),
            },
            ShiftOp::ForwardBilateral { weights } => ShiftOp::BackwardBilateral {
                weights: weights.clone(),
            },
            ShiftOp::Diagonal { .. } => self.clone(),
            ShiftOp::PolynomialOfShift { poly, base } => ShiftOp::PolynomialOfShift {
                poly: poly.clone(),
                base: match base {
                    ShiftDirection::Backward => ShiftDirection::Forward,
                    ShiftDirection::Forward => ShiftDirection::Backward,
                },
            },
        }
    }

    /// Entrywise complex conjugate of the operator's matrix.
    pub fn conj(&self) -> ShiftOp {
        match self {
            ShiftOp::BackwardUnilateral { weights } => ShiftOp::BackwardUnilateral {
                weights: weights.conjugated(),
            },
            ShiftOp::ForwardUnilateral { weights } => ShiftOp::ForwardUnilateral {
                weights: weights.conjugated(),
            },
            ShiftOp::BackwardBilateral { weights } => ShiftOp::BackwardBilateral {
                weights: weights.conjugated(),
            },
            ShiftOp::ForwardBilateral { weights } => ShiftOp::ForwardBilateral {
                weights: weights.conjugated(),
            },
            ShiftOp::Diagonal { weights } => ShiftOp::Diagonal {
                weights: weights.conjugated(),
            },
            ShiftOp::PolynomialOfShift { poly, base } => ShiftOp::PolynomialOfShift {
                poly: poly.conj(),
                base: *base,
            },
        }
    }

    /// Hilbert-space adjoint: conjugate transpose.
    pub fn hilbert_adjoint(&self) -> ShiftOp {
        self.transpose().conj()
    }

    /// Orbit `op^n x0` for `n = 1..=horizon`.
    pub fn iterate_orbit(&self, x0: &SeqVector, horizon: u64) -> Result<Orbit<'_>> {
        if horizon == 0 {
            return Err(Error::InvalidArgument(
                "orbit horizon must be at least 1".into(),
            ));
        }
        self.check(x0)?;
        Ok(Orbit {
            op: self,
            current: x0.clone(),
            step: 0,
            horizon,
        })
    }

    /// The subsampled orbit `op^{k^q} x0` for `k = 1..=k_max`, as `(k, vector)` pairs.
    pub fn q_orbit(&self, x0: &SeqVector, k_max: u64, q: u32) -> Result<QOrbit<'_>> {
        if q == 0 {
            return Err(Error::InvalidArgument("q must be at least 1".into()));
        }
        if k_max == 0 {
            return Err(Error::InvalidArgument(
                "orbit horizon must be at least 1".into(),
            ));
        }
        self.check(x0)?;
        Ok(QOrbit {
            op: self,
            current: x0.clone(),
            power: 0,
            k: 0,
            k_max,
            q,
        })
    }
}

fn unweighted_shift(v: &SeqVector, dir: ShiftDirection) -> Result<SeqVector> {
    let mut out = SeqVector::zero(v.domain());
    for (n, c) in v.iter() {
        match dir {
            ShiftDirection::Backward if n >= 1 => out.add_at(n - 1, c)?,
            ShiftDirection::Backward => {}
            ShiftDirection::Forward => out.add_at(n + 1, c)?,
        }
    }
    Ok(out)
}

/// Iterator over `T x0, T^2 x0, ..., T^horizon x0`.
pub struct Orbit<'a> {
    op: &'a ShiftOp,
    current: SeqVector,
    step: u64,
    horizon: u64,
}

impl Iterator for Orbit<'_> {
    type Item = Result<SeqVector>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.step >= self.horizon {
            return None;
        }
        self.step += 1;
        match self.op.apply(&self.current) {
            Ok(next) => {
                self.current = next.clone();
                Some(Ok(next))
            }
            Err(e) => {
                self.step = self.horizon;
                Some(Err(e))
            }
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.horizon - self.step) as usize;
        (left, Some(left))
    }
}

pub struct QOrbit<'a> {
    op: &'a ShiftOp,
    current: SeqVector,
    power: u64,
    k: u64,
    k_max: u64,
    q: u32,
}

impl Iterator for QOrbit<'_> {
    type Item = Result<(u64, SeqVector)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.k >= self.k_max {
            return None;
        }
        self.k += 1;
        let target = self.k.pow(self.q);
        match self.op.apply_power(&self.current, target - self.power) {
            Ok(v) => {
                self.power = target;
                self.current = v.clone();
                Some(Ok((self.k, v)))
            }
            Err(e) => {
                self.k = self.k_max;
                Some(Err(e))
            }
        }
    }
}
