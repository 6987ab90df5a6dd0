use serde::{Deserialize, Serialize};

use super::vector::IndexDomain;
use crate::error::{Error, Result};
use crate::scalar::{Wide, C64};

/// Closed-form or tabulated rule producing the weight `w_n` for any index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightRule {
    Constant {
        #[serde(with = "cplx")]
        value: C64,
    },
    /// `w_n = (num[0]·n + num[1]) / (den[0]·n + den[1])`.
    RationalRatio { num: [f64; 2], den: [f64; 2] },
    /// `w_n = values[(n - offset) mod len]`.
    Periodic {
        #[serde(with = "cplx_vec")]
        values: Vec<C64>,
        #[serde(default)]
        offset: i64,
    },
    /// `below` for `n < threshold`, `at_or_above` otherwise.
    TwoRegime {
        threshold: i64,
        #[serde(with = "cplx")]
        below: C64,
        #[serde(with = "cplx")]
        at_or_above: C64,
    },
    /// `w_n = values[n - start]`; indices outside the table are an error.
    Table {
        #[serde(with = "cplx_vec")]
        values: Vec<C64>,
        #[serde(default)]
        start: i64,
    },
}

/// A weight sequence `(w_n)` on ℕ or ℤ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSeq {
    #[serde(flatten)]
    pub rule: WeightRule,
    #[serde(default = "default_domain")]
    pub domain: IndexDomain,
    /// Produce `conj(w_n)` instead of `w_n`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conjugate: bool,
}

fn default_domain() -> IndexDomain {
    IndexDomain::Naturals
}

impl WeightSeq {
    pub fn new(rule: WeightRule, domain: IndexDomain) -> Self {
        WeightSeq {
            rule,
            domain,
            conjugate: false,
        }
    }

    pub fn constant(value: f64) -> Self {
        WeightSeq::new(
            WeightRule::Constant {
                value: C64::new(value, 0.0),
            },
            IndexDomain::Naturals,
        )
    }

    pub fn constant_complex(value: C64) -> Self {
        WeightSeq::new(WeightRule::Constant { value }, IndexDomain::Naturals)
    }

    /// `w_n = (n + 1)/n`, so that `w_1 w_2 ... w_n = n + 1`.
    pub fn successor_ratio() -> Self {
        WeightSeq::new(
            WeightRule::RationalRatio {
                num: [1.0, 1.0],
                den: [1.0, 0.0],
            },
            IndexDomain::Naturals,
        )
    }

    /// Bilateral weights equal to `below` for `n < threshold` and `at_or_above` after.
    pub fn two_regime(threshold: i64, below: f64, at_or_above: f64) -> Self {
        WeightSeq::new(
            WeightRule::TwoRegime {
                threshold,
                below: C64::new(below, 0.0),
                at_or_above: C64::new(at_or_above, 0.0),
            },
            IndexDomain::Integers,
        )
    }

    pub fn table(values: Vec<C64>, start: i64) -> Self {
        let domain = if start < 0 {
            IndexDomain::Integers
        } else {
            IndexDomain::Naturals
        };
        WeightSeq::new(WeightRule::Table { values, start }, domain)
    }

    pub fn on_integers(mut self) -> Self {
        self.domain = IndexDomain::Integers;
        self
    }

    pub fn conjugated(&self) -> Self {
        let mut out = self.clone();
        out.conjugate = !out.conjugate;
        out
    }

    fn raw(&self, n: i64) -> Result<C64> {
        let w = match &self.rule {
            WeightRule::Constant { value } => *value,
            WeightRule::RationalRatio { num, den } => {
                let x = n as f64;
                C64::new((num[0] * x + num[1]) / (den[0] * x + den[1]), 0.0)
            }
            WeightRule::Periodic { values, offset } => {
                if values.is_empty() {
                    return Err(Error::WeightOutOfTable { index: n });
                }
                let len = values.len() as i64;
                values[(n - offset).rem_euclid(len) as usize]
            }
            WeightRule::TwoRegime {
                threshold,
                below,
                at_or_above,
            } => {
                if n < *threshold {
                    *below
                } else {
                    *at_or_above
                }
            }
            WeightRule::Table { values, start } => {
                let k = n - start;
                if k < 0 || k >= values.len() as i64 {
                    return Err(Error::WeightOutOfTable { index: n });
                }
                values[k as usize]
            }
        };
        Ok(w)
    }

    /// The weight `w_n`; zero or non-finite weights are rejected.
    pub fn weight(&self, n: i64) -> Result<C64> {
        self.domain.check(n)?;
        let w = self.raw(n)?;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFiniteWeight { index: n });
        }
        if w.re == 0.0 && w.im == 0.0 {
            return Err(Error::ZeroWeight { index: n });
        }
        Ok(if self.conjugate { w.conj() } else { w })
    }

    pub fn weight_wide(&self, n: i64) -> Result<Wide> {
        self.weight(n).map(Wide::from_c64)
    }

    /// `w_a · w_{a+1} ··· w_b` in extended range; empty product is one.
    pub fn product(&self, a: i64, b: i64) -> Result<Wide> {
        let mut acc = Wide::ONE;
        for n in a..=b {
            acc *= self.weight_wide(n)?;
        }
        Ok(acc)
    }

    /// Prefix table of `ln |w_n|` covering `lo..=hi`.
    pub fn log_prefix(&self, lo: i64, hi: i64) -> Result<LogPrefix> {
        let mut prefix = Vec::with_capacity((hi - lo + 2).max(1) as usize);
        prefix.push(0.0);
        let mut acc = 0.0;
        for n in lo..=hi {
            acc += self.weight(n)?.norm().ln();
            prefix.push(acc);
        }
        Ok(LogPrefix { lo, prefix })
    }
}

/// Prefix sums of `ln |w_n|` for range queries over products of weights.
#[derive(Clone, Debug)]
pub struct LogPrefix {
    lo: i64,
    prefix: Vec<f64>,
}

impl LogPrefix {
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.prefix.len() as i64 - 2
    }

    /// `Σ_{t=a}^{b} ln |w_t|`, zero for an empty range.
    pub fn sum(&self, a: i64, b: i64) -> f64 {
        if a > b {
            return 0.0;
        }
        assert!(
            a >= self.lo && b <= self.hi(),
            "log-product range [{a}, {b}] outside table [{}, {}]",
            self.lo,
            self.hi()
        );
        let ia = (a - self.lo) as usize;
        let ib = (b - self.lo + 1) as usize;
        self.prefix[ib] - self.prefix[ia]
    }
}

/// Complex numbers as `[re, im]`; a bare number is accepted as a real value.
pub(crate) mod cplx {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    impl From<Repr> for C64 {
        fn from(r: Repr) -> C64 {
            match r {
                Repr::Real(x) => C64::new(x, 0.0),
                Repr::Pair([re, im]) => C64::new(re, im),
            }
        }
    }

    pub fn serialize<S: Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Repr::deserialize(d).map(C64::from)
    }
}

pub(crate) mod cplx_vec {
    use super::cplx::Repr;
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|c| [c.re, c.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Vec::<Repr>::deserialize(d).map(|v| v.into_iter().map(C64::from).collect())
    }
}
