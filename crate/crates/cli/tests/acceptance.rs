//! The twelve acceptance criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so the lines are always printed; the
//! process exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hyperlab::config::{HardyCheck, SchattenMode};
use hyperlab::{run, Experiment, ExperimentConfig};
use hyperlab_core::algebra::{orthogonal_sum_additivity, outer, schatten_norm, MatOp};
use hyperlab_core::criteria::{
    check_bilateral, check_schatten_summability, check_unilateral_growth, CheckGrid,
};
use hyperlab_core::density::{q_lower_density, NatSet};
use hyperlab_core::fhc::{
    build_separated_family, construct, relative_difference, BackwardOrbitFamily, EpsSchedule,
    FhcConfig, ThresholdConfig,
};
use hyperlab_core::hardy::{
    conjugation_eigencheck, converse_certificate, span_density_residual, torus_samples,
    AnalyticSymbol, BetaSpace, ConverseKind,
};
use hyperlab_core::spaces::{
    subset_sum_bound_check, IndexDomain, SeqVector, ShiftOp, TaylorPoly, WeightSeq,
};
use hyperlab_core::C64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn e(n: i64) -> SeqVector {
    SeqVector::basis(IndexDomain::Naturals, n).unwrap()
}

fn c1_density_exactness() -> Verdict {
    let start = Instant::now();
    let squares = NatSet::from_predicate(1_000_000, |n| {
        let r = (n as f64).sqrt().round() as u64;
        n >= 1 && r * r == n
    });
    let sq = q_lower_density(&squares, 2, 1000, None).unwrap();
    let exact = sq.profile.iter().all(|p| p.count == p.n && p.ratio == 1.0);
    let evens = NatSet::from_predicate(1000, |n| n >= 1 && n % 2 == 0);
    let ev = q_lower_density(&evens, 1, 1000, None).unwrap();
    let gap = (ev.liminf_proxy - 0.5).abs();
    let bound = 1.0 / ev.tail_window_start as f64;
    let elapsed = start.elapsed();
    verdict(
        exact && gap <= bound && elapsed < Duration::from_secs(1),
        format!("squares exact = {exact}, evens |proxy - 0.5| = {gap:.2e} <= {bound:.2e}, {elapsed:.2?}"),
    )
}

fn c2_rank_one_schatten() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (m, n) = (rng.random_range(1..=24), rng.random_range(1..=24));
        let u: Vec<C64> = (0..m).map(|_| rand_c(&mut rng)).collect();
        let v: Vec<C64> = (0..n).map(|_| rand_c(&mut rng)).collect();
        let expected = l2(&u) * l2(&v);
        let a = outer(&u, &v.iter().map(|z| z.conj()).collect::<Vec<_>>());
        for p in [1.0, 2.0, 3.5] {
            let got = schatten_norm(&a, p).unwrap();
            worst = worst.max((got - expected).abs() / expected);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("worst relative error {worst:.2e} over 600 norms, {elapsed:.2?}"),
    )
}

/// Splits a shuffled `0..dim` into `parts` nonempty chunks.
fn disjoint_chunks(rng: &mut ChaCha8Rng, dim: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(rng);
    let mut cuts: Vec<usize> = (1..dim).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::new();
    let mut prev = 0;
    for cut in cuts.into_iter().chain([dim]) {
        out.push(idx[prev..cut].to_vec());
        prev = cut;
    }
    out
}

fn c3_orthogonal_additivity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dim = 20;
    let (mut worst, mut orth_failures) = (0.0f64, 0);
    for _ in 0..100 {
        let size = rng.random_range(1..=8);
        let rows = disjoint_chunks(&mut rng, dim, size);
        let cols = disjoint_chunks(&mut rng, dim, size);
        let family: Vec<MatOp> = rows
            .iter()
            .zip(&cols)
            .map(|(r, cl)| {
                let mut u = vec![c(0.0); dim];
                let mut v = vec![c(0.0); dim];
                r.iter().for_each(|&i| u[i] = rand_c(&mut rng));
                cl.iter().for_each(|&j| v[j] = rand_c(&mut rng));
                outer(&u, &v)
            })
            .collect();
        for p in [1.0, 2.0, 4.0] {
            let rep = orthogonal_sum_additivity(&family, p).unwrap();
            orth_failures += usize::from(!rep.mutual_orthogonality_ok);
            worst = worst.max((rep.lhs - rep.rhs).abs() / rep.rhs);
        }
    }
    verdict(
        worst <= 1e-8 && orth_failures == 0,
        format!("worst |lhs - rhs|/rhs {worst:.2e}, orthogonality failures {orth_failures}"),
    )
}

fn c4_subset_inequality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for t in 0..100 {
        let size = rng.random_range(1..=8);
        let xs: Vec<SeqVector> = (0..size)
            .map(|_| {
                let entries: Vec<(i64, C64)> = (0..rng.random_range(1..6))
                    .map(|_| (rng.random_range(0..12), rand_c(&mut rng)))
                    .collect();
                SeqVector::from_entries(IndexDomain::Naturals, entries).unwrap()
            })
            .collect();
        let lambdas: Vec<C64> = (0..size).map(|_| rand_c(&mut rng)).collect();
        let f: Vec<usize> = (0..size).collect();
        let p = [1.0, 2.0, 3.0][t % 3];
        let rep = subset_sum_bound_check(&xs, &lambdas, &f, p).unwrap();
        violations += usize::from(!rep.holds);
        if rep.rhs > 0.0 {
            min_slack = min_slack.min(rep.rhs - rep.lhs);
        }
    }
    verdict(
        violations == 0,
        format!("{violations} violations over 100 instances, smallest slack {min_slack:.3e}"),
    )
}

fn c5_condition_c() -> Verdict {
    let bases = vec![e(0), e(0).add(&e(1)).unwrap()];
    let op = ShiftOp::backward(WeightSeq::constant(2.0));
    let family = BackwardOrbitFamily::new(op.clone(), bases.clone()).unwrap();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for q in [1u32, 2] {
        for n in 0..=8u64 {
            for m in n + 1..=16u64 {
                let (mq, nq) = (m.pow(q), n.pow(q));
                for (k, x) in bases.iter().enumerate() {
                    // S^j e_i = 2^{-j} e_{i+j} for w ≡ 2
                    let closed = |j: u64| {
                        let mut out = SeqVector::zero(IndexDomain::Naturals);
                        for (i, a) in x.iter_c64() {
                            out.add_at(
                                i + j as i64,
                                hyperlab_core::Wide::from(a * 0.5f64.powi(j as i32)),
                            )
                            .unwrap();
                        }
                        out
                    };
                    let xm = family.inverse_orbit(k + 1, mq).unwrap();
                    let lhs = op.apply_power(&xm, nq).unwrap();
                    worst = worst.max(relative_difference(&lhs, &closed(mq - nq)).unwrap());
                    worst = worst.max(relative_difference(&xm, &closed(mq)).unwrap());
                    cases += 1;
                }
            }
        }
    }
    let internal = family.condition_c_error(2, 8).unwrap();
    verdict(
        worst <= 1e-10 && internal <= 1e-10,
        format!("{cases} cases, worst relative error {worst:.2e} (family check {internal:.2e})"),
    )
}

fn c6_end_to_end_fhc() -> Verdict {
    let start = Instant::now();
    let family = BackwardOrbitFamily::new(
        ShiftOp::backward(WeightSeq::constant(2.0)),
        vec![e(0), e(0).add(&e(1)).unwrap()],
    )
    .unwrap();
    let cfg = FhcConfig {
        q: 1,
        horizon: 10_000,
        eps: EpsSchedule::new(2f64.powi(-8)).unwrap(),
        threshold: ThresholdConfig::default(),
        triangle_bound: true,
    };
    let (rep, _) = construct(&family, &cfg).unwrap();
    let elapsed = start.elapsed();
    let hits = rep.classes.iter().all(|cl| {
        cl.all_designed_hit()
            && cl.radius <= cl.proof_radius
            && cl.max_designed_distance < cl.proof_radius
    });
    let dense = rep
        .classes
        .iter()
        .all(|cl| cl.visit_density >= 0.5 * cl.designed_density);
    let sep = rep.separation.as_ref().is_some_and(|s| s.holds());
    let detail: Vec<String> = rep
        .classes
        .iter()
        .map(|cl| {
            format!(
                "k={} max dist {:.2e} < {:.2e}, visit density {:.4} vs J density {:.4}",
                cl.k,
                cl.max_designed_distance,
                cl.proof_radius,
                cl.visit_density,
                cl.designed_density
            )
        })
        .collect();
    verdict(
        hits && dense && sep && rep.classes.len() == 2 && elapsed < Duration::from_secs(60),
        format!("N_k = {:?}; {}; {elapsed:.2?}", rep.n_ks, detail.join("; ")),
    )
}

fn c7_separated_family_contract() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let horizon = 100_000;
    let mut families = 0;
    let mut failures = Vec::new();
    let mut checks: Vec<Vec<u64>> = vec![vec![1], vec![2, 4], vec![10, 12], vec![1, 1, 1, 1]];
    for _ in 0..24 {
        let k = rng.random_range(1..=5);
        let mut n_ks: Vec<u64> = (0..k).map(|_| rng.random_range(1..=200)).collect();
        n_ks.sort_unstable();
        checks.push(n_ks);
    }
    for n_ks in &checks {
        let Ok(fam) = build_separated_family(n_ks, horizon) else {
            continue;
        };
        families += 1;
        let report_ok = fam.verify().unwrap().holds();
        let mut all: Vec<(u64, usize)> = Vec::new();
        let mut min_ok = true;
        for k in 1..=fam.classes() {
            min_ok &= fam.set(k).min().is_some_and(|m| m >= k as u64);
            all.extend(fam.set(k).elems().iter().map(|&n| (n, k)));
        }
        all.sort_unstable();
        let disjoint = all.windows(2).all(|w| w[0].0 != w[1].0);
        let n_top = *n_ks.iter().max().unwrap();
        let mut separated = true;
        for (i, &(m, km)) in all.iter().enumerate() {
            for &(n, kn) in &all[i + 1..] {
                if n - m >= 2 * n_top {
                    break;
                }
                separated &= n - m >= n_ks[km - 1] + n_ks[kn - 1];
            }
        }
        if !(report_ok && min_ok && disjoint && separated) {
            failures.push(n_ks.clone());
        }
    }
    verdict(
        failures.is_empty() && families >= 20,
        format!("{families} families at horizon {horizon}, failures {failures:?}"),
    )
}

fn c8_checker_ground_truth() -> Verdict {
    let two = WeightSeq::constant(2.0);
    let one = WeightSeq::constant(1.0);
    let grid = CheckGrid::default();
    let sat = check_unilateral_growth(&two, &two, &grid)
        .unwrap()
        .is_satisfied();
    let viol = check_unilateral_growth(&one, &one, &grid).unwrap();
    let viol_ok = !viol.is_satisfied() && viol.witness.is_some();
    let schatten = check_schatten_summability(&WeightSeq::successor_ratio(), &one, 2.0, &grid)
        .unwrap()
        .is_satisfied();
    let a = WeightSeq::two_regime(1, 0.5, 2.0);
    let bil = check_bilateral(&a, &a, &CheckGrid::bilateral()).unwrap();
    let both = bil.conditions.len() == 2 && bil.conditions.iter().all(|c| c.satisfied);
    verdict(
        sat && viol_ok && schatten && both,
        format!("w=mu=2 {sat}, w=1 violated with witness {viol_ok}, n+1 schatten {schatten}, two-regime {both}"),
    )
}

fn c9_hardy_eigenchecks() -> Verdict {
    let z = AnalyticSymbol::z();
    let p = c(0.6);
    let r64 = conjugation_eigencheck(&z, &z, &BetaSpace::hardy(64), p, p).unwrap();
    let r128 = conjugation_eigencheck(&z, &z, &BetaSpace::hardy(128), p, p).unwrap();
    let eig_ok = (r128.eigenvalue - c(0.36)).norm() < 1e-15;
    let ratio = r128.residual / r64.residual;
    let bound = 100.0 * 0.6f64.powi(60);
    verdict(
        eig_ok && r128.residual <= 1e-8 && ratio <= bound,
        format!(
            "eigenvalue {:.4}, residual(128) {:.2e}, ratio {ratio:.2e} <= {bound:.2e}",
            r128.eigenvalue.re, r128.residual
        ),
    )
}

fn c10_converse_certificates() -> Verdict {
    let space = BetaSpace::hardy(32);
    let half = AnalyticSymbol::constant(c(0.5)).with_sup_bound(0.5);
    let one = AnalyticSymbol::constant(c(1.0)).with_sup_bound(1.0);
    let shifted = AnalyticSymbol::new(TaylorPoly::new(vec![c(3.0), c(1.0)]))
        .unwrap()
        .with_sup_bound(4.0);
    let a = converse_certificate(&half, &one, &space, 10).unwrap();
    let b = converse_certificate(&shifted, &one, &space, 10).unwrap();
    let a_ok = a.kind == ConverseKind::NotHypercyclicContraction
        && a.orbit_norms.len() == 51
        && a.orbit_norms.windows(2).all(|w| w[1] <= w[0]);
    let b_ok = b.kind == ConverseKind::NotHypercyclicInverseContraction
        && b.orbit_norms.len() == 51
        && b.orbit_norms.windows(2).all(|w| w[1] >= w[0]);
    verdict(
        a_ok && b_ok,
        format!(
            "phi=0.5 {:?} ({a_ok}), phi=z+3 {:?} ({b_ok}), inf|z+3| = {:.4}",
            a.kind, b.kind, b.inf_phi
        ),
    )
}

fn c11_span_density() -> Verdict {
    let space = BetaSpace::hardy(32);
    let mut target = MatOp::zeros(33, 33);
    target.set(0, 0, c(1.0));
    let residuals: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            span_density_residual(&torus_samples(0.5, n), &target, &space)
                .unwrap()
                .relative_residual
        })
        .collect();
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    verdict(
        decreasing && residuals[3] < 0.1,
        format!(
            "residuals at 8/16/32/64 samples {}",
            residuals
                .iter()
                .map(|r| format!("{r:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn c12_determinism() -> Verdict {
    let mut configs = Vec::new();
    let mut fhc = ExperimentConfig::new(Experiment::ConstructFhc);
    fhc.seed = 12;
    fhc.construct_fhc.eps_scale = 2f64.powi(-8);
    configs.push(fhc);
    let mut conv = ExperimentConfig::new(Experiment::Hardy);
    conv.seed = 12;
    conv.hardy.check = HardyCheck::Converse;
    conv.hardy.phi = "0.5".into();
    conv.hardy.psi = "1".into();
    configs.push(conv);
    let mut sch = ExperimentConfig::new(Experiment::Schatten);
    sch.seed = 12;
    sch.schatten.mode = SchattenMode::Random;
    configs.push(sch);
    let same_lib = configs.iter().all(|cfg| {
        let a = run(cfg).unwrap();
        let b = run(cfg).unwrap();
        a.artifacts == b.artifacts
    });

    let bin = env!("CARGO_BIN_EXE_hyperlab");
    let args = [
        "--seed",
        "12",
        "hardy",
        "--check",
        "nuclear",
        "--phi",
        "1,0.5",
        "--psi",
        "0.5,-0.25",
    ];
    let invoke = || Command::new(bin).args(args).output().unwrap();
    let (a, b) = (invoke(), invoke());
    let same_bin = a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout;
    verdict(
        same_lib && same_bin,
        format!("library runs identical {same_lib}, binary stdout identical {same_bin}"),
    )
}

type Criterion = fn() -> Verdict;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 12] = [
        ("q-lower density exactness", c1_density_exactness),
        ("rank-one Schatten identity", c2_rank_one_schatten),
        ("orthogonal-sum additivity", c3_orthogonal_additivity),
        ("subset-sum inequality", c4_subset_inequality),
        ("criterion condition (c)", c5_condition_c),
        ("end-to-end FHC construction", c6_end_to_end_fhc),
        ("separated family contract", c7_separated_family_contract),
        ("checker ground truth", c8_checker_ground_truth),
        ("Hardy eigenchecks", c9_hardy_eigenchecks),
        ("converse certificates", c10_converse_certificates),
        ("span-density surrogate", c11_span_density),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.ok);
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
