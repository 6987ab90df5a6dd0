//! Experiment manifests.
//!
//! A manifest is TOML with the experiment name and seed at the top level and
//! one table per experiment kind. Missing keys take the defaults below;
//! unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Density,
    Orbit,
    ConstructFhc,
    Check,
    Hardy,
    Schatten,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Density => "density",
            Experiment::Orbit => "orbit",
            Experiment::ConstructFhc => "construct_fhc",
            Experiment::Check => "check",
            Experiment::Hardy => "hardy",
            Experiment::Schatten => "schatten",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Backward,
    Forward,
    Diagonal,
    BackwardBilateral,
    ForwardBilateral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Proposition {
    Unilateral,
    Bilateral,
    Schatten,
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum HardyCheck {
    Eigen,
    Locus,
    Density,
    Converse,
    Nuclear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchattenMode {
    RankOne,
    Random,
    Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    /// `squares`, `evens`, `all`, `powers:<j>`, `multiples:<m>` or `file:<path>`.
    pub set: String,
    pub q: u32,
    pub n_max: u64,
    pub tail_start: Option<u64>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            set: "squares".into(),
            q: 2,
            n_max: 1000,
            tail_start: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    pub operator: OperatorKind,
    pub weights: String,
    pub x0: String,
    /// Number of recorded steps; with `q > 1` step `k` is `T^{k^q} x0`.
    pub horizon: u64,
    pub q: u32,
    pub target: Option<String>,
    pub radius: f64,
    pub p: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            operator: OperatorKind::Backward,
            weights: "constant:2".into(),
            x0: "0=1".into(),
            horizon: 16,
            q: 1,
            target: None,
            radius: 0.5,
            p: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructFhcConfig {
    pub weights: String,
    pub bases: Vec<String>,
    pub q: u32,
    pub horizon: u64,
    pub eps_scale: f64,
    pub r_max: u64,
    pub n_max: u64,
    pub samples: usize,
    pub p: f64,
    pub hard_cap: u64,
    pub triangle_bound: bool,
}

impl Default for ConstructFhcConfig {
    fn default() -> Self {
        ConstructFhcConfig {
            weights: "constant:2".into(),
            bases: vec!["0=1".into(), "0=1,1=1".into()],
            q: 1,
            horizon: 10_000,
            eps_scale: 1.0,
            r_max: 32,
            n_max: 128,
            samples: 16,
            p: 2.0,
            hard_cap: 64,
            triangle_bound: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub proposition: Proposition,
    /// `w` for unilateral checks, `a` for bilateral ones.
    pub weights: String,
    /// `μ` for unilateral checks, `b` for bilateral ones.
    pub mu: String,
    /// Diagonal entries `λ` for the diagonal proposition.
    pub lambda: Option<String>,
    pub q: u32,
    pub p: f64,
    pub i_range: Option<[i64; 2]>,
    pub j_range: Option<[i64; 2]>,
    pub r_max: u64,
    pub n_max: u64,
    pub growth_threshold: Option<f64>,
    pub tail_tolerance: Option<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            proposition: Proposition::Unilateral,
            weights: "constant:2".into(),
            mu: "constant:2".into(),
            lambda: None,
            q: 1,
            p: 2.0,
            i_range: None,
            j_range: None,
            r_max: 32,
            n_max: 512,
            growth_threshold: None,
            tail_tolerance: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardyConfig {
    /// `hardy`, `inv_linear` or `table:<path>` with one `β_n` per line.
    pub beta: String,
    /// Largest retained coefficient index.
    pub n: usize,
    pub phi: String,
    pub psi: String,
    pub phi_sup: Option<f64>,
    pub psi_sup: Option<f64>,
    pub check: HardyCheck,
    pub z: String,
    pub w: String,
    pub grid_density: usize,
    pub tol: f64,
    pub exclusions: Vec<String>,
    pub radius: f64,
    pub samples: Vec<usize>,
    /// Target `e_i ⊗ e_j` of the span check.
    pub target: [usize; 2],
    pub lambda: String,
    pub mu: String,
    pub p: f64,
}

impl Default for HardyConfig {
    fn default() -> Self {
        HardyConfig {
            beta: "hardy".into(),
            n: 64,
            phi: "0,1".into(),
            psi: "0,1".into(),
            phi_sup: None,
            psi_sup: None,
            check: HardyCheck::Eigen,
            z: "0.6".into(),
            w: "0.6".into(),
            grid_density: 16,
            tol: 1e-3,
            exclusions: Vec::new(),
            radius: 0.5,
            samples: vec![8, 16, 32, 64],
            target: [0, 0],
            lambda: "0.5".into(),
            mu: "0.5".into(),
            p: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchattenConfig {
    pub mode: SchattenMode,
    pub u: String,
    pub v: String,
    pub rows: usize,
    pub cols: usize,
    /// JSON file holding a matrix for `mode = "matrix"`.
    pub matrix: Option<PathBuf>,
    pub p: Vec<f64>,
}

impl Default for SchattenConfig {
    fn default() -> Self {
        SchattenConfig {
            mode: SchattenMode::RankOne,
            u: "1,1".into(),
            v: "1,0,1".into(),
            rows: 8,
            cols: 8,
            matrix: None,
            p: vec![1.0, 2.0, 3.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub orbit: OrbitConfig,
    #[serde(default)]
    pub construct_fhc: ConstructFhcConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub hardy: HardyConfig,
    #[serde(default)]
    pub schatten: SchattenConfig,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            seed: 0,
            format: Format::Json,
            out: None,
            density: DensityConfig::default(),
            orbit: OrbitConfig::default(),
            construct_fhc: ConstructFhcConfig::default(),
            check: CheckConfig::default(),
            hardy: HardyConfig::default(),
            schatten: SchattenConfig::default(),
        }
    }

    /// Parses a manifest. Relative file references are resolved against `base`.
    pub fn from_toml(source: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(source).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(source, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.resolve_paths(base);
        cfg.validate().map_err(|(key, message)| ConfigError {
            line: locate(source, cfg.experiment.name(), key),
            message,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&source, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &str| base.join(p).to_string_lossy().into_owned();
        if let Some(p) = self.density.set.strip_prefix("file:") {
            self.density.set = format!("file:{}", join(p));
        }
        if let Some(p) = self.hardy.beta.strip_prefix("table:") {
            self.hardy.beta = format!("table:{}", join(p));
        }
        if let Some(p) = &self.schatten.matrix {
            self.schatten.matrix = Some(base.join(p));
        }
    }

    /// Checks that referenced files exist; returns the offending key on failure.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let exists = |key: &'static str, p: &str| {
            if Path::new(p).is_file() {
                Ok(())
            } else {
                Err((key, format!("{key}: file '{p}' does not exist")))
            }
        };
        match self.experiment {
            Experiment::Density => {
                if let Some(p) = self.density.set.strip_prefix("file:") {
                    exists("set", p)?;
                }
            }
            Experiment::Hardy => {
                if let Some(p) = self.hardy.beta.strip_prefix("table:") {
                    exists("beta", p)?;
                }
            }
            Experiment::Schatten if self.schatten.mode == SchattenMode::Matrix => {
                match &self.schatten.matrix {
                    Some(p) => exists("matrix", &p.to_string_lossy())?,
                    None => return Err(("mode", "mode = \"matrix\" needs a matrix file".into())),
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// A manifest problem, anchored to a line when one can be identified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// 1-based line of `key = ...` inside `[section]`, if present.
pub fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in source.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((k, _)) = t.split_once('=') else {
            continue;
        };
        let k = k.trim();
        let dotted = format!("{section}.{key}");
        if (current == section && k == key) || (current.is_empty() && k == dotted) {
            return Some(i + 1);
        }
    }
    None
}
