use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Wide, C64};

/// Index set of a sequence space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexDomain {
    /// `ℓ^p(ℕ₀)`, indices `0, 1, 2, ...`
    Naturals,
    /// `ℓ^p(ℤ)`
    Integers,
}

impl IndexDomain {
    pub fn contains(self, index: i64) -> bool {
        match self {
            IndexDomain::Naturals => index >= 0,
            IndexDomain::Integers => true,
        }
    }

    pub(crate) fn check(self, index: i64) -> Result<()> {
        if self.contains(index) {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                index,
                domain: self,
            })
        }
    }
}

/// Finitely supported sequence with complex coefficients.
///
/// Only nonzero coefficients are stored. Coefficients use [`Wide`] so that
/// products of many weights neither overflow nor flush to zero; the only
/// values ever dropped are exact zeros (including exact cancellation).
#[derive(Clone, Debug, PartialEq)]
pub struct SeqVector {
    domain: IndexDomain,
    entries: BTreeMap<i64, Wide>,
}

/// One serialized coefficient. The value is `(re + i·im)·2^exp2`; `exp2` is
/// omitted for coefficients inside the `f64` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub index: i64,
    pub re: f64,
    pub im: f64,
    #[serde(default, skip_serializing_if = "is_zero_i64")]
    pub exp2: i64,
}

fn is_zero_i64(x: &i64) -> bool {
    *x == 0
}

impl SeqVector {
    pub fn zero(domain: IndexDomain) -> Self {
        SeqVector {
            domain,
            entries: BTreeMap::new(),
        }
    }

    /// The standard basis vector `e_index`.
    pub fn basis(domain: IndexDomain, index: i64) -> Result<Self> {
        let mut v = SeqVector::zero(domain);
        v.add_at(index, Wide::ONE)?;
        Ok(v)
    }

    /// Builds a vector from `(index, coefficient)` pairs; repeated indices add up.
    pub fn from_entries<I>(domain: IndexDomain, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, C64)>,
    {
        let mut v = SeqVector::zero(domain);
        for (i, c) in entries {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Overflow { index: i });
            }
            v.add_at(i, Wide::from_c64(c))?;
        }
        Ok(v)
    }

    pub fn from_wide_entries<I>(domain: IndexDomain, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Wide)>,
    {
        let mut v = SeqVector::zero(domain);
        for (i, c) in entries {
            v.add_at(i, c)?;
        }
        Ok(v)
    }

    /// `f_λ = (1, λ, λ², ...)` truncated to its first `len` coordinates.
    pub fn geometric(ratio: C64, len: usize) -> Self {
        let mut v = SeqVector::zero(IndexDomain::Naturals);
        let mut c = Wide::ONE;
        let r = Wide::from_c64(ratio);
        for n in 0..len {
            v.add_at(n as i64, c).expect("nonnegative index");
            c *= r;
        }
        v
    }

    pub fn domain(&self) -> IndexDomain {
        self.domain
    }

    /// Number of stored (nonzero) coefficients.
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: i64) -> C64 {
        self.get_wide(index).to_c64()
    }

    pub fn get_wide(&self, index: i64) -> Wide {
        self.entries.get(&index).copied().unwrap_or(Wide::ZERO)
    }

    pub fn min_index(&self) -> Option<i64> {
        self.entries.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<i64> {
        self.entries.keys().next_back().copied()
    }

    /// Stored coefficients in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Wide)> + '_ {
        self.entries.iter().map(|(&i, &c)| (i, c))
    }

    pub fn iter_c64(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.entries.iter().map(|(&i, c)| (i, c.to_c64()))
    }

    /// Adds `c` to the coefficient at `index`, keeping canonical form.
    pub fn add_at(&mut self, index: i64, c: Wide) -> Result<()> {
        self.domain.check(index)?;
        if c.is_zero() {
            return Ok(());
        }
        if !c.is_finite() {
            return Err(Error::Overflow { index });
        }
        match self.entries.get_mut(&index) {
            Some(slot) => {
                *slot += c;
                if slot.is_zero() {
                    self.entries.remove(&index);
                }
            }
            None => {
                self.entries.insert(index, c);
            }
        }
        Ok(())
    }

    fn same_domain(&self, other: &SeqVector) -> Result<()> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(Error::IncompatibleDomains {
                op: self.domain,
                vector: other.domain,
            })
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: Wide, other: &SeqVector) -> Result<()> {
        self.same_domain(other)?;
        for (i, c) in other.iter() {
            self.add_at(i, alpha * c)?;
        }
        Ok(())
    }

    pub fn add(&self, other: &SeqVector) -> Result<SeqVector> {
        let mut out = self.clone();
        out.axpy(Wide::ONE, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SeqVector) -> Result<SeqVector> {
        let mut out = self.clone();
        out.axpy(-Wide::ONE, other)?;
        Ok(out)
    }

    pub fn scale(&self, alpha: C64) -> SeqVector {
        self.scale_wide(Wide::from_c64(alpha))
    }

    pub fn scale_wide(&self, alpha: Wide) -> SeqVector {
        if alpha.is_zero() {
            return SeqVector::zero(self.domain);
        }
        SeqVector {
            domain: self.domain,
            entries: self.entries.iter().map(|(&i, &c)| (i, c * alpha)).collect(),
        }
    }

    /// `(Σ |c_n|^p)^{1/p}` over the stored coefficients.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        let Some(top) = self.entries.values().map(|c| c.exponent()).max() else {
            return Ok(0.0);
        };
        let mut sum = 0.0;
        for c in self.entries.values() {
            let gap = c.exponent() - top;
            if gap < -1100 {
                continue;
            }
            let m = libm::ldexp(c.mantissa().norm(), gap as i32);
            sum += m.powf(p);
        }
        let root = sum.powf(1.0 / p);
        let top = top.clamp(-2200, 2200) as i32;
        Ok(libm::ldexp(root, top))
    }

    pub fn distance(&self, other: &SeqVector, p: f64) -> Result<f64> {
        self.sub(other)?.lp_norm(p)
    }

    /// Hilbert-space inner product `Σ self_n · conj(other_n)`.
    pub fn inner(&self, other: &SeqVector) -> Result<C64> {
        self.same_domain(other)?;
        let mut acc = Wide::ZERO;
        for (i, c) in self.iter() {
            let d = other.get_wide(i);
            if !d.is_zero() {
                acc += c * d.conj();
            }
        }
        Ok(acc.to_c64())
    }

    /// Bilinear pairing `Σ self_n · other_n` (the `ℓ^p × ℓ^{p'}` duality).
    pub fn pair(&self, other: &SeqVector) -> Result<C64> {
        self.same_domain(other)?;
        let mut acc = Wide::ZERO;
        for (i, c) in self.iter() {
            let d = other.get_wide(i);
            if !d.is_zero() {
                acc += c * d;
            }
        }
        Ok(acc.to_c64())
    }

    pub fn conj(&self) -> SeqVector {
        SeqVector {
            domain: self.domain,
            entries: self.entries.iter().map(|(&i, c)| (i, c.conj())).collect(),
        }
    }

    pub fn to_records(&self) -> Vec<EntryRecord> {
        self.entries
            .iter()
            .map(|(&index, c)| {
                if c.exponent().abs() < 1000 {
                    let z = c.to_c64();
                    EntryRecord {
                        index,
                        re: z.re,
                        im: z.im,
                        exp2: 0,
                    }
                } else {
                    EntryRecord {
                        index,
                        re: c.mantissa().re,
                        im: c.mantissa().im,
                        exp2: c.exponent(),
                    }
                }
            })
            .collect()
    }

    pub fn from_records(domain: IndexDomain, records: &[EntryRecord]) -> Result<SeqVector> {
        SeqVector::from_wide_entries(
            domain,
            records
                .iter()
                .map(|r| (r.index, Wide::from_parts(C64::new(r.re, r.im), r.exp2))),
        )
    }

    pub fn from_json(domain: IndexDomain, json: &str) -> Result<SeqVector> {
        let records: Vec<EntryRecord> = serde_json::from_str(json)
            .map_err(|e| Error::InvalidArgument(format!("vector JSON: {e}")))?;
        SeqVector::from_records(domain, &records)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_records()).expect("records serialize")
    }

    /// Dense copy of coordinates `lo..lo+len` (entries outside are ignored).
    pub fn to_dense(&self, lo: i64, len: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); len];
        for (i, c) in self.entries.range(lo..lo + len as i64) {
            out[(i - lo) as usize] = c.to_c64();
        }
        out
    }
}

impl Serialize for SeqVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_records().serialize(serializer)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}
