use std::fmt::Write as _;

use hyperlab_core::algebra::{operator_norm, outer, schatten_norm, singular_values, trace, MatOp};
use hyperlab_core::criteria::{
    check_bilateral, check_diagonal_forward, check_schatten_summability, check_unilateral_growth,
    CheckGrid, IndexRange, Verdict,
};
use hyperlab_core::density::{q_lower_density, NatSet};
use hyperlab_core::fhc::{construct, BackwardOrbitFamily, EpsSchedule, FhcConfig, ThresholdConfig};
use hyperlab_core::hardy::{
    adjoint_kernel_eigencheck, conjugation_eigencheck, converse_certificate, exclude_eigenvalues,
    nuclear_eigencheck, span_density_residual, torus_samples, unimodular_locus_sample,
    AnalyticSymbol, BetaRule, BetaSpace, NuclearCheck,
};
use hyperlab_core::spaces::{IndexDomain, ShiftOp, WeightSeq};
use hyperlab_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    Experiment, ExperimentConfig, Format, HardyCheck, OperatorKind, Proposition, SchattenMode,
};
use crate::syntax::{parse_complex, parse_complex_list, parse_poly, parse_vector, parse_weights};

/// Exit code for a completed run whose check failed.
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// A config value that parsed as TOML but is not meaningful.
    #[error("{section}.{key}: {message}")]
    Invalid {
        section: &'static str,
        key: &'static str,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] hyperlab_core::Error),
    #[error("{0}")]
    Io(String),
}

fn invalid(section: &'static str, key: &'static str) -> impl Fn(String) -> RunError {
    move |message| RunError::Invalid {
        section,
        key,
        message,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    /// `report.json` first, then the CSV companion.
    pub artifacts: Vec<Artifact>,
    /// Human-readable pass/fail table.
    pub summary: String,
}

impl Outcome {
    /// The artifact matching `format`.
    pub fn primary(&self, format: Format) -> &Artifact {
        let ext = match format {
            Format::Json => ".json",
            Format::Csv => ".csv",
        };
        self.artifacts
            .iter()
            .find(|a| a.name.ends_with(ext))
            .unwrap_or(&self.artifacts[0])
    }

    pub fn json(&self) -> &str {
        &self.artifacts[0].contents
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    config_hash: String,
    seed: u64,
    parameters: Value,
    passed: Option<bool>,
    result: &'a T,
}

struct Report {
    parameters: Value,
    passed: Option<bool>,
    result: Value,
    csv_name: &'static str,
    csv: String,
    summary: String,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let report = match cfg.experiment {
        Experiment::Density => density(cfg)?,
        Experiment::Orbit => orbit(cfg)?,
        Experiment::ConstructFhc => construct_fhc(cfg)?,
        Experiment::Check => check(cfg)?,
        Experiment::Hardy => hardy(cfg)?,
        Experiment::Schatten => schatten(cfg)?,
    };
    let envelope = Envelope {
        tool: "hyperlab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        parameters: report.parameters,
        passed: report.passed,
        result: &report.result,
    };
    let mut json =
        serde_json::to_string_pretty(&envelope).map_err(|e| RunError::Io(e.to_string()))?;
    json.push('\n');
    Ok(Outcome {
        exit_code: if report.passed == Some(false) {
            EXIT_VIOLATION
        } else {
            0
        },
        artifacts: vec![
            Artifact {
                name: "report.json".into(),
                contents: json,
            },
            Artifact {
                name: report.csv_name.into(),
                contents: report.csv,
            },
        ],
        summary: report.summary,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn cx(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

fn verdict_line(name: &str, ok: bool, detail: &str) -> String {
    format!(
        "{:<28} {:<4} {detail}\n",
        name,
        if ok { "PASS" } else { "FAIL" }
    )
}

fn density(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let d = &cfg.density;
    let bad = invalid("density", "set");
    let horizon = d
        .n_max
        .checked_pow(d.q)
        .ok_or_else(|| invalid("density", "n_max")(format!("n_max^q overflows for q = {}", d.q)))?;
    let num = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| bad(format!("'{s}' is not an integer")))
    };
    let set = match d.set.split_once(':').unwrap_or((d.set.as_str(), "")) {
        ("squares", "") => NatSet::from_predicate(horizon, |n| is_power(n, 2)),
        ("evens", "") => NatSet::from_predicate(horizon, |n| n >= 1 && n % 2 == 0),
        ("all", "") => NatSet::from_predicate(horizon, |n| n >= 1),
        ("powers", j) => {
            let j = num(j)? as u32;
            if j == 0 {
                return Err(bad("power must be at least 1".into()));
            }
            NatSet::from_predicate(horizon, |n| is_power(n, j))
        }
        ("multiples", m) => {
            let m = num(m)?;
            if m == 0 {
                return Err(bad("modulus must be at least 1".into()));
            }
            NatSet::from_predicate(horizon, |n| n >= 1 && n % m == 0)
        }
        ("file", path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| bad(format!("cannot read {path}: {e}")))?;
            let elems = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(num)
                .collect::<Result<Vec<_>, _>>()?;
            let top = elems.iter().copied().max().unwrap_or(0).max(horizon);
            NatSet::new(elems, top)?
        }
        _ => return Err(bad(format!("unknown set '{}'", d.set))),
    };
    let est = q_lower_density(&set, d.q, d.n_max, d.tail_start)?;
    let summary = format!(
        "q-lower density, q = {}, N_max = {}: liminf proxy {:.6}, final ratio {:.6}\n",
        d.q,
        d.n_max,
        est.liminf_proxy,
        est.final_ratio()
    );
    Ok(Report {
        parameters: json!({
            "set": d.set,
            "q": d.q,
            "n_max": d.n_max,
            "set_horizon": set.horizon(),
            "tail_start": est.tail_window_start,
        }),
        passed: None,
        csv: est.to_csv(),
        result: to_value(&est),
        csv_name: "density.csv",
        summary,
    })
}

/// `n = m^j` for some `m ≥ 1`.
fn is_power(n: u64, j: u32) -> bool {
    if n == 0 {
        return false;
    }
    let guess = (n as f64).powf(1.0 / j as f64).round() as u64;
    (guess.saturating_sub(1)..=guess + 1).any(|m| m >= 1 && m.checked_pow(j) == Some(n))
}

fn build_op(kind: OperatorKind, w: WeightSeq) -> ShiftOp {
    match kind {
        OperatorKind::Backward => ShiftOp::backward(w),
        OperatorKind::Forward => ShiftOp::forward(w),
        OperatorKind::Diagonal => ShiftOp::diagonal(w),
        OperatorKind::BackwardBilateral => ShiftOp::backward_bilateral(w.on_integers()),
        OperatorKind::ForwardBilateral => ShiftOp::forward_bilateral(w.on_integers()),
    }
}

#[derive(Serialize)]
struct OrbitRow {
    n: u64,
    norm: f64,
    support: usize,
    distance: Option<f64>,
}

fn orbit(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let o = &cfg.orbit;
    if o.q == 0 {
        return Err(invalid("orbit", "q")("q must be at least 1".into()));
    }
    let op = build_op(
        o.operator,
        parse_weights(&o.weights).map_err(invalid("orbit", "weights"))?,
    );
    let domain = op.domain().unwrap_or(IndexDomain::Naturals);
    let x0 = parse_vector(&o.x0, domain).map_err(invalid("orbit", "x0"))?;
    let target = o
        .target
        .as_deref()
        .map(|t| parse_vector(t, domain).map_err(invalid("orbit", "target")))
        .transpose()?;
    let mut rows = Vec::with_capacity(o.horizon as usize);
    for (k, x) in op.iterate_orbit(&x0, o.horizon)?.enumerate() {
        let x = x?;
        let distance = target.as_ref().map(|t| x.distance(t, o.p)).transpose()?;
        rows.push(OrbitRow {
            n: k as u64 + 1,
            norm: x.lp_norm(o.p)?,
            support: x.support_size(),
            distance,
        });
    }
    let mut visits = Value::Null;
    let mut summary = format!("orbit of {} steps computed\n", rows.len());
    if target.is_some() {
        let hits: Vec<u64> = rows
            .iter()
            .filter(|r| r.distance.is_some_and(|d| d < o.radius))
            .map(|r| r.n)
            .collect();
        let set = NatSet::new(hits, o.horizon)?;
        let n_max = integer_root(o.horizon, o.q);
        let est = (n_max >= 2)
            .then(|| q_lower_density(&set, o.q, n_max, None))
            .transpose()?;
        let _ = writeln!(
            summary,
            "{} visits to the target ball of radius {}",
            set.len(),
            o.radius
        );
        visits = json!({
            "radius": o.radius,
            "visit_set": set.elems(),
            "q_density": est.map(|e| to_value(&e)),
        });
    }
    let mut csv = String::from("n,norm,support,distance\n");
    for r in &rows {
        let d = r.distance.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{}", r.n, r.norm, r.support, d);
    }
    Ok(Report {
        parameters: json!({
            "operator": o.operator,
            "weights": o.weights,
            "horizon": o.horizon,
            "q": o.q,
            "p": o.p,
        }),
        passed: None,
        result: json!({ "steps": rows, "visits": visits }),
        csv_name: "orbit.csv",
        csv,
        summary,
    })
}

/// Largest `m` with `m^q ≤ n`.
fn integer_root(n: u64, q: u32) -> u64 {
    let mut m = (n as f64).powf(1.0 / q as f64).floor() as u64;
    while m.checked_pow(q).is_none_or(|v| v > n) {
        m -= 1;
    }
    while (m + 1).checked_pow(q).is_some_and(|v| v <= n) {
        m += 1;
    }
    m
}

fn construct_fhc(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let c = &cfg.construct_fhc;
    let w = parse_weights(&c.weights).map_err(invalid("construct_fhc", "weights"))?;
    let bases = c
        .bases
        .iter()
        .map(|b| parse_vector(b, IndexDomain::Naturals))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid("construct_fhc", "bases"))?;
    if bases.is_empty() {
        return Err(invalid("construct_fhc", "bases")(
            "need at least one base point".into(),
        ));
    }
    let family = BackwardOrbitFamily::new(ShiftOp::backward(w), bases)?;
    let threshold = ThresholdConfig {
        r_max: c.r_max,
        n_max: c.n_max,
        samples: c.samples,
        p: c.p,
        hard_cap: c.hard_cap,
        seed: cfg.seed,
    };
    let fhc = FhcConfig {
        q: c.q,
        horizon: c.horizon,
        eps: EpsSchedule::new(c.eps_scale)
            .map_err(|e| invalid("construct_fhc", "eps_scale")(e.to_string()))?,
        threshold: threshold.clone(),
        triangle_bound: c.triangle_bound,
    };
    let (report, _) = construct(&family, &fhc)?;

    let mut summary = format!(
        "{:<6} {:>6} {:>8} {:>12} {:>12} {:>10}  result\n",
        "class", "N_k", "|J_k|", "J density", "visit dens.", "radius"
    );
    let mut csv = String::from(
        "k,n_k,j_size,designed_density,visit_density,radius,proof_radius,designed_visits,designed_within_radius,max_designed_distance\n",
    );
    for (i, cl) in report.classes.iter().enumerate() {
        let ok = cl.all_designed_hit() && cl.visit_density >= 0.5 * cl.designed_density;
        let _ = writeln!(
            summary,
            "{:<6} {:>6} {:>8} {:>12.6} {:>12.6} {:>10.3e}  {}",
            cl.k,
            report.n_ks[i],
            report.j_sizes[i],
            cl.designed_density,
            cl.visit_density,
            cl.radius,
            if ok { "PASS" } else { "FAIL" }
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            cl.k,
            report.n_ks[i],
            report.j_sizes[i],
            cl.designed_density,
            cl.visit_density,
            cl.radius,
            cl.proof_radius,
            cl.designed_visits,
            cl.designed_within_radius,
            cl.max_designed_distance
        );
    }
    if report.separation.is_none() {
        let _ = writeln!(
            summary,
            "no tail threshold found for class {}",
            report.thresholds.len()
        );
    }
    summary.push_str(&verdict_line("construction", report.passed, ""));
    Ok(Report {
        parameters: json!({
            "q": c.q,
            "horizon": c.horizon,
            "orbit_steps": report.orbit_steps,
            "eps_scale": c.eps_scale,
            "threshold_grid": threshold,
        }),
        passed: Some(report.passed),
        result: to_value(&report),
        csv_name: "classes.csv",
        csv,
        summary,
    })
}

fn check(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let c = &cfg.check;
    let bilateral = c.proposition == Proposition::Bilateral;
    let base = if bilateral {
        CheckGrid::bilateral()
    } else {
        CheckGrid::default()
    };
    let range =
        |r: Option<[i64; 2]>, d: IndexRange| r.map_or(d, |[lo, hi]| IndexRange::new(lo, hi));
    let grid = CheckGrid {
        i_range: range(c.i_range, base.i_range),
        j_range: range(c.j_range, base.j_range),
        r_max: c.r_max,
        n_max: c.n_max,
        q: c.q,
        growth_threshold: c.growth_threshold.unwrap_or(base.growth_threshold),
        tail_tolerance: c.tail_tolerance.unwrap_or(base.tail_tolerance),
    };
    let w = parse_weights(&c.weights).map_err(invalid("check", "weights"))?;
    let mu = parse_weights(&c.mu).map_err(invalid("check", "mu"))?;
    let verdict: Verdict = match c.proposition {
        Proposition::Unilateral => check_unilateral_growth(&w, &mu, &grid)?,
        Proposition::Bilateral => check_bilateral(&w, &mu, &grid)?,
        Proposition::Schatten => check_schatten_summability(&w, &mu, c.p, &grid)?,
        Proposition::Diagonal => {
            let lambda = c
                .lambda
                .as_deref()
                .ok_or_else(|| {
                    invalid("check", "lambda")("the diagonal proposition needs lambda".into())
                })
                .and_then(|l| parse_complex_list(l).map_err(invalid("check", "lambda")))?;
            check_diagonal_forward(&lambda, &mu, c.p, &grid)?
        }
    };
    let mut summary = String::new();
    let mut csv = String::from("condition,satisfied,margin,i,j,r,n,value\n");
    for cond in &verdict.conditions {
        let detail = format!("margin {:.4e}", cond.margin);
        summary.push_str(&verdict_line(&cond.name, cond.satisfied, &detail));
        let wit = cond
            .witness
            .as_ref()
            .map(|w| format!("{},{},{},{},{}", w.i, w.j, w.r, w.n, w.value))
            .unwrap_or_else(|| ",,,,".into());
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            cond.name, cond.satisfied, cond.margin, wit
        );
    }
    Ok(Report {
        parameters: json!({ "proposition": c.proposition, "p": c.p, "grid": grid }),
        passed: Some(verdict.is_satisfied()),
        result: to_value(&verdict),
        csv_name: "verdict.csv",
        csv,
        summary,
    })
}

fn beta_space(beta: &str, n: usize) -> Result<BetaSpace, RunError> {
    let bad = invalid("hardy", "beta");
    let rule = match beta.split_once(':').unwrap_or((beta, "")) {
        ("hardy", "") => BetaRule::Hardy,
        ("inv_linear", "") => BetaRule::InvLinear,
        ("table", path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| bad(format!("cannot read {path}: {e}")))?;
            let values = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| bad(format!("'{t}' is not a number")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() < n + 1 {
                return Err(bad(format!(
                    "table has {} values, need {}",
                    values.len(),
                    n + 1
                )));
            }
            BetaRule::Table { values }
        }
        _ => return Err(bad(format!("unknown β rule '{beta}'"))),
    };
    Ok(BetaSpace::new(rule, n)?)
}

fn symbol(text: &str, sup: Option<f64>, key: &'static str) -> Result<AnalyticSymbol, RunError> {
    let poly = parse_poly(text).map_err(invalid("hardy", key))?;
    let s = AnalyticSymbol::new(poly)?;
    Ok(match sup {
        Some(b) => s.with_sup_bound(b),
        None => s,
    })
}

fn hardy(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let h = &cfg.hardy;
    let space = beta_space(&h.beta, h.n)?;
    let phi = symbol(&h.phi, h.phi_sup, "phi")?;
    let psi = symbol(&h.psi, h.psi_sup, "psi")?;
    let point = |s: &str, key: &'static str| parse_complex(s).map_err(invalid("hardy", key));
    let mut parameters = json!({
        "check": h.check,
        "beta": h.beta,
        "truncation_dim": h.n,
        "phi": phi.taylor.coeffs().iter().map(|&c| cx(c)).collect::<Vec<_>>(),
        "psi": psi.taylor.coeffs().iter().map(|&c| cx(c)).collect::<Vec<_>>(),
    });
    let extra = &mut parameters.as_object_mut().expect("object");
    let (passed, result, csv, summary) = match h.check {
        HardyCheck::Eigen => {
            let (z, w) = (point(&h.z, "z")?, point(&h.w, "w")?);
            extra.insert("z".into(), json!(cx(z)));
            extra.insert("w".into(), json!(cx(w)));
            let conj = conjugation_eigencheck(&phi, &psi, &space, z, w)?;
            let adj_phi = adjoint_kernel_eigencheck(&phi, &space, z)?;
            let adj_psi = adjoint_kernel_eigencheck(&psi, &space, w)?;
            let mut csv = String::from(
                "check,eigenvalue_re,eigenvalue_im,residual,tail_bound,floor,passed\n",
            );
            let mut summary = String::new();
            for (name, r) in [
                ("conjugation", &conj),
                ("adjoint_phi", &adj_phi),
                ("adjoint_psi", &adj_psi),
            ] {
                let _ = writeln!(
                    csv,
                    "{name},{},{},{},{},{},{}",
                    r.eigenvalue.re, r.eigenvalue.im, r.residual, r.tail_bound, r.floor, r.passed
                );
                summary.push_str(&verdict_line(
                    name,
                    r.passed,
                    &format!("residual {:.3e}", r.residual),
                ));
            }
            let passed = conj.passed && adj_phi.passed && adj_psi.passed;
            let result =
                json!({ "conjugation": conj, "adjoint_phi": adj_phi, "adjoint_psi": adj_psi });
            (Some(passed), result, csv, summary)
        }
        HardyCheck::Locus => {
            extra.insert("grid_density".into(), json!(h.grid_density));
            extra.insert("tol".into(), json!(h.tol));
            let exclusions = h
                .exclusions
                .iter()
                .map(|e| parse_complex(e))
                .collect::<Result<Vec<_>, _>>()
                .map_err(invalid("hardy", "exclusions"))?;
            let all = unimodular_locus_sample(&phi, &psi, h.grid_density, h.tol)?;
            let kept = exclude_eigenvalues(&all, &phi, &psi, &exclusions, h.tol);
            let mut csv = String::from("z_re,z_im,w_re,w_im,modulus\n");
            for p in &kept {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    p.z.re, p.z.im, p.w.re, p.w.im, p.modulus
                );
            }
            let summary = format!(
                "{} locus points found, {} after exclusions\n",
                all.len(),
                kept.len()
            );
            (
                None,
                json!({ "found": all.len(), "points": kept }),
                csv,
                summary,
            )
        }
        HardyCheck::Density => {
            extra.insert("radius".into(), json!(h.radius));
            extra.insert("samples".into(), json!(h.samples));
            extra.insert("target".into(), json!(h.target));
            let dim = space.dim();
            let [ti, tj] = h.target;
            if ti >= dim || tj >= dim {
                return Err(invalid("hardy", "target")(format!(
                    "target index outside 0..{dim}"
                )));
            }
            let mut target = MatOp::zeros(dim, dim);
            target.set(ti, tj, C64::new(1.0, 0.0));
            let mut runs = Vec::new();
            for &count in &h.samples {
                runs.push(span_density_residual(
                    &torus_samples(h.radius, count),
                    &target,
                    &space,
                )?);
            }
            let decreasing = runs
                .windows(2)
                .all(|w| w[1].relative_residual < w[0].relative_residual);
            let mut csv = String::from("samples,relative_residual,rank\n");
            for r in &runs {
                let _ = writeln!(csv, "{},{},{}", r.samples, r.relative_residual, r.rank);
            }
            let last = runs.last().map_or(f64::NAN, |r| r.relative_residual);
            let summary = verdict_line(
                "span residual decreasing",
                decreasing,
                &format!("final {last:.4}"),
            );
            (Some(decreasing), json!({ "runs": runs }), csv, summary)
        }
        HardyCheck::Converse => {
            let cert = converse_certificate(&phi, &psi, &space, cfg.seed)?;
            let mut csv = String::from("step,norm\n");
            for (i, n) in cert.orbit_norms.iter().enumerate() {
                let _ = writeln!(csv, "{i},{n}");
            }
            let ok = cert.orbit_consistent != Some(false);
            let summary = verdict_line(&format!("{:?}", cert.kind), ok, "orbit desk check");
            (Some(ok), to_value(&cert), csv, summary)
        }
        HardyCheck::Nuclear => {
            let (lambda, mu) = (point(&h.lambda, "lambda")?, point(&h.mu, "mu")?);
            extra.insert("lambda".into(), json!(cx(lambda)));
            extra.insert("mu".into(), json!(cx(mu)));
            extra.insert("p".into(), json!(h.p));
            let rep = nuclear_eigencheck(&NuclearCheck {
                phi: phi.clone(),
                psi: psi.clone(),
                lambda,
                mu,
                p: h.p,
                truncation_dim: h.n,
                seed: cfg.seed,
            })?;
            let ok = rep.passed && rep.trace_ok;
            let csv = format!(
                "eigenvalue_re,eigenvalue_im,residual_l2,residual_lp_bound,trace_error,passed,trace_ok\n{},{},{},{},{},{},{}\n",
                rep.eigenvalue.re,
                rep.eigenvalue.im,
                rep.residual_l2,
                rep.residual_lp_bound,
                rep.trace_error,
                rep.passed,
                rep.trace_ok
            );
            let mut summary = verdict_line(
                "nuclear eigenrelation",
                rep.passed,
                &format!("residual {:.3e}", rep.residual_l2),
            );
            summary.push_str(&verdict_line(
                "trace duality",
                rep.trace_ok,
                &format!("error {:.3e}", rep.trace_error),
            ));
            (Some(ok), to_value(&rep), csv, summary)
        }
    };
    Ok(Report {
        parameters,
        passed,
        result,
        csv_name: "hardy.csv",
        csv,
        summary,
    })
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn schatten(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let s = &cfg.schatten;
    let mut expected = None;
    let m = match s.mode {
        SchattenMode::RankOne => {
            let u = parse_complex_list(&s.u).map_err(invalid("schatten", "u"))?;
            let v = parse_complex_list(&s.v).map_err(invalid("schatten", "v"))?;
            expected = Some(l2(&u) * l2(&v));
            let vh: Vec<C64> = v.iter().map(|c| c.conj()).collect();
            outer(&u, &vh)
        }
        SchattenMode::Random => {
            if s.rows == 0 || s.cols == 0 {
                return Err(invalid("schatten", "rows")(
                    "matrix must be nonempty".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            MatOp::from_fn(s.rows, s.cols, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        }
        SchattenMode::Matrix => {
            let path = s.matrix.as_ref().expect("validated");
            let text = std::fs::read_to_string(path).map_err(|e| {
                invalid("schatten", "matrix")(format!("cannot read {}: {e}", path.display()))
            })?;
            MatOp::from_json(&text)?
        }
    };
    let spectrum = singular_values(&m)?;
    let mut norms = Vec::new();
    let mut summary = String::new();
    let mut all_ok = true;
    for &p in &s.p {
        let value = schatten_norm(&m, p)?;
        let rel_error = expected.map(|e| (value - e).abs() / e.max(f64::MIN_POSITIVE));
        if let Some(err) = rel_error {
            let ok = err <= 1e-9;
            all_ok &= ok;
            summary.push_str(&verdict_line(
                &format!("rank-one identity p = {p}"),
                ok,
                &format!("rel. error {err:.2e}"),
            ));
        } else {
            let _ = writeln!(summary, "S_{p} norm {value:.10e}");
        }
        norms.push(json!({ "p": p, "norm": value, "rel_error": rel_error }));
    }
    let tr = if m.is_square() {
        Some(cx(trace(&m)?))
    } else {
        None
    };
    let result = json!({
        "rows": m.rows(),
        "cols": m.cols(),
        "singular_values": spectrum.values,
        "operator_norm": operator_norm(&m)?,
        "frobenius_norm": m.frobenius_norm(),
        "trace": tr,
        "schatten_norms": norms,
        "expected_rank_one_norm": expected,
    });
    Ok(Report {
        parameters: json!({ "mode": s.mode, "rows": m.rows(), "cols": m.cols(), "p": s.p }),
        passed: expected.map(|_| all_ok),
        result,
        csv_name: "singular_values.csv",
        csv: spectrum.to_csv(),
        summary,
    })
}
