//! Text forms for the values that appear in configs and on the command line.
//!
//! Complex numbers are `re` or `re:im`. Weight rules:
//!
//! | form | meaning |
//! |------|---------|
//! | `constant:<c>` | `w_n = c` |
//! | `successor` | `w_n = (n + 1)/n` |
//! | `ratio:a,b,c,d` | `w_n = (a n + b)/(c n + d)` |
//! | `periodic:c0,c1,...[@offset]` | `w_n = c_{(n - offset) mod len}` |
//! | `two_regime:t,below,above` | `below` for `n < t`, `above` after, on ℤ |
//! | `table:c0,c1,...[@start]` | `w_{start + k} = c_k` |
//!
//! Sparse vectors are comma-separated `index=value` pairs, e.g. `0=1,3=0.5:-1`.

use hyperlab_core::spaces::{IndexDomain, SeqVector, TaylorPoly, WeightRule, WeightSeq};
use hyperlab_core::C64;

pub fn parse_complex(s: &str) -> Result<C64, String> {
    let s = s.trim();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{s}' is not a number or re:im pair"))
    };
    let z = match s.split_once(':') {
        Some((re, im)) => C64::new(num(re)?, num(im)?),
        None => C64::new(num(s)?, 0.0),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(z)
}

pub fn parse_complex_list(s: &str) -> Result<Vec<C64>, String> {
    if s.trim().is_empty() {
        return Err("empty coefficient list".into());
    }
    s.split(',').map(parse_complex).collect()
}

pub fn parse_poly(s: &str) -> Result<TaylorPoly, String> {
    parse_complex_list(s).map(TaylorPoly::new)
}

fn split_at_suffix(s: &str) -> Result<(&str, i64), String> {
    match s.rsplit_once('@') {
        Some((body, at)) => {
            let at = at
                .trim()
                .parse::<i64>()
                .map_err(|_| format!("'{at}' is not an integer offset"))?;
            Ok((body, at))
        }
        None => Ok((s, 0)),
    }
}

pub fn parse_weights(s: &str) -> Result<WeightSeq, String> {
    let s = s.trim();
    let (kind, body) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "constant" => Ok(WeightSeq::constant_complex(parse_complex(body)?)),
        "successor" if body.is_empty() => Ok(WeightSeq::successor_ratio()),
        "ratio" => {
            let v: Vec<f64> = body
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
                .collect::<Result<_, _>>()?;
            let [a, b, c, d] = v[..] else {
                return Err(format!("ratio needs four numbers, got {}", v.len()));
            };
            Ok(WeightSeq::new(
                WeightRule::RationalRatio {
                    num: [a, b],
                    den: [c, d],
                },
                IndexDomain::Naturals,
            ))
        }
        "periodic" => {
            let (body, offset) = split_at_suffix(body)?;
            let values = parse_complex_list(body)?;
            Ok(WeightSeq::new(WeightRule::Periodic { values, offset }, IndexDomain::Naturals))
        }
        "two_regime" => {
            let parts: Vec<&str> = body.split(',').collect();
            let [t, below, above] = parts[..] else {
                return Err("two_regime needs threshold,below,above".into());
            };
            let threshold = t
                .trim()
                .parse::<i64>()
                .map_err(|_| format!("'{t}' is not an integer threshold"))?;
            Ok(WeightSeq::new(
                WeightRule::TwoRegime {
                    threshold,
                    below: parse_complex(below)?,
                    at_or_above: parse_complex(above)?,
                },
                IndexDomain::Integers,
            ))
        }
        "table" => {
            let (body, start) = split_at_suffix(body)?;
            Ok(WeightSeq::table(parse_complex_list(body)?, start))
        }
        _ => Err(format!(
            "unknown weight rule '{s}'; expected constant, successor, ratio, periodic, two_regime or table"
        )),
    }
}

pub fn parse_vector(s: &str, domain: IndexDomain) -> Result<SeqVector, String> {
    let mut entries = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (i, c) = part
            .split_once('=')
            .ok_or_else(|| format!("'{part}' is not an index=value pair"))?;
        let i = i
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("'{i}' is not an integer index"))?;
        entries.push((i, parse_complex(c)?));
    }
    SeqVector::from_entries(domain, entries).map_err(|e| e.to_string())
}
