use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperlab::config::{locate, HardyCheck, OperatorKind, Proposition, SchattenMode};
use hyperlab::{run, Experiment, ExperimentConfig, Format, RunError};

#[derive(Parser)]
#[command(
    name = "hyperlab",
    version,
    about = "Desk-scale experiments on q-frequently hypercyclic operators"
)]
struct Cli {
    /// TOML experiment manifest; flags given on the command line override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving report.json and the CSV companion
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever experiment the manifest names
    Run,
    /// q-lower density profile of a set of naturals
    Density(DensityArgs),
    /// Orbit of a shift-type operator, with optional visit statistics
    Orbit(OrbitArgs),
    /// Explicit q-frequently hypercyclic vector for a weighted backward shift
    ConstructFhc(FhcArgs),
    /// Grid check of a weight condition
    Check(CheckArgs),
    /// Eigenvector checks on weighted Hardy spaces
    Hardy(HardyArgs),
    /// Singular values and Schatten norms
    Schatten(SchattenArgs),
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    n_max: Option<u64>,
    #[arg(long)]
    tail_start: Option<u64>,
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long, value_enum)]
    operator: Option<OperatorKind>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct FhcArgs {
    #[arg(long)]
    weights: Option<String>,
    /// Base point as index=value pairs; repeat for each class
    #[arg(long = "base")]
    bases: Vec<String>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    eps_scale: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    proposition: Option<Proposition>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct HardyArgs {
    #[arg(long)]
    beta: Option<String>,
    /// Taylor coefficients as comma-separated re:im values
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    #[arg(long, value_enum)]
    check: Option<HardyCheck>,
    /// Largest retained coefficient index
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
}

#[derive(Args)]
struct SchattenArgs {
    #[arg(long, value_enum)]
    mode: Option<SchattenMode>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    p: Vec<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply(cfg: &mut ExperimentConfig, command: Command) {
    let exp = match &command {
        Command::Run => return,
        Command::Density(_) => Experiment::Density,
        Command::Orbit(_) => Experiment::Orbit,
        Command::ConstructFhc(_) => Experiment::ConstructFhc,
        Command::Check(_) => Experiment::Check,
        Command::Hardy(_) => Experiment::Hardy,
        Command::Schatten(_) => Experiment::Schatten,
    };
    cfg.experiment = exp;
    match command {
        Command::Run => {}
        Command::Density(a) => {
            let d = &mut cfg.density;
            set(&mut d.set, a.set);
            set(&mut d.q, a.q);
            set(&mut d.n_max, a.n_max);
            if a.tail_start.is_some() {
                d.tail_start = a.tail_start;
            }
        }
        Command::Orbit(a) => {
            let o = &mut cfg.orbit;
            set(&mut o.operator, a.operator);
            set(&mut o.weights, a.weights);
            set(&mut o.x0, a.x0);
            set(&mut o.horizon, a.horizon);
            set(&mut o.q, a.q);
            set(&mut o.radius, a.radius);
            if a.target.is_some() {
                o.target = a.target;
            }
        }
        Command::ConstructFhc(a) => {
            let c = &mut cfg.construct_fhc;
            set(&mut c.weights, a.weights);
            if !a.bases.is_empty() {
                c.bases = a.bases;
            }
            set(&mut c.q, a.q);
            set(&mut c.horizon, a.horizon);
            set(&mut c.eps_scale, a.eps_scale);
        }
        Command::Check(a) => {
            let c = &mut cfg.check;
            set(&mut c.proposition, a.proposition);
            set(&mut c.weights, a.weights);
            set(&mut c.mu, a.mu);
            set(&mut c.q, a.q);
            set(&mut c.p, a.p);
            if a.lambda.is_some() {
                c.lambda = a.lambda;
            }
        }
        Command::Hardy(a) => {
            let h = &mut cfg.hardy;
            set(&mut h.beta, a.beta);
            set(&mut h.phi, a.phi);
            set(&mut h.psi, a.psi);
            set(&mut h.check, a.check);
            set(&mut h.n, a.n);
            set(&mut h.z, a.z);
            set(&mut h.w, a.w);
        }
        Command::Schatten(a) => {
            let s = &mut cfg.schatten;
            set(&mut s.mode, a.mode);
            set(&mut s.u, a.u);
            set(&mut s.v, a.v);
            if a.matrix.is_some() {
                s.matrix = a.matrix;
            }
            if !a.p.is_empty() {
                s.p = a.p;
            }
        }
    }
}

fn anchored(source: Option<&str>, section: &str, key: &str, message: &str) -> String {
    match source.and_then(|s| locate(s, section, key)) {
        Some(line) => format!("config line {line}: {message}"),
        None => message.to_string(),
    }
}

fn write_artifacts(dir: &Path, outcome: &hyperlab::Outcome) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    for a in &outcome.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> Result<i32, String> {
    let source = match &cli.config {
        Some(p) => Some(
            std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?,
        ),
        None => None,
    };
    let mut cfg = match (&cli.config, &source) {
        (Some(path), Some(src)) => {
            let base = path.parent().unwrap_or(Path::new("."));
            ExperimentConfig::from_toml(src, base).map_err(|e| e.to_string())?
        }
        _ => {
            if matches!(cli.command, Command::Run) {
                return Err("`run` needs --config".into());
            }
            ExperimentConfig::new(Experiment::Density)
        }
    };
    apply(&mut cfg, cli.command);
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.format, cli.format);
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    cfg.validate()
        .map_err(|(key, msg)| anchored(source.as_deref(), cfg.experiment.name(), key, &msg))?;

    let outcome = run(&cfg).map_err(|e| match &e {
        RunError::Invalid { section, key, .. } => {
            anchored(source.as_deref(), section, key, &e.to_string())
        }
        _ => e.to_string(),
    })?;
    match &cfg.out {
        Some(dir) => {
            write_artifacts(dir, &outcome)?;
            print!("{}", outcome.summary);
        }
        None => {
            print!("{}", outcome.primary(cfg.format).contents);
            eprint!("{}", outcome.summary);
        }
    }
    Ok(outcome.exit_code)
}
