//! Pipeline configuration read from a TOML file, with flag overrides.
//!
//! ```toml
//! alphas = [0.95]
//! betas = [0.95]
//! tail_frac = 0.1
//! copula_candidates = ["independence", "fgm", "gumbel", "gaussian", "t"]
//! mc_n = 1000000
//! seed = 42
//! output_dir = "out"
//! pseudo_obs = "ranks"
//!
//! [[pairs]]
//! name = "HSI"
//! x_csv = "data/hsi.csv"
//! y_csv = "data/spx.csv"
//! lag_x = 0
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use jmes::copulas::CopulaFamily;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// How pseudo-observations for the copula fit are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoObs {
    /// Average ranks divided by `n + 1`.
    #[default]
    Ranks,
    /// The fitted semiparametric margins' cdf values.
    Fitted,
}

/// One pair of series: `y` is the system, `x` the conditioning market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub name: String,
    pub x_csv: PathBuf,
    pub y_csv: PathBuf,
    /// `1` pairs the `x` loss of the previous aligned day with today's `y`.
    #[serde(default)]
    pub lag_x: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    #[serde(default = "default_levels")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_levels")]
    pub betas: Vec<f64>,
    #[serde(default = "default_tail_frac")]
    pub tail_frac: f64,
    #[serde(default = "default_candidates")]
    pub copula_candidates: Vec<String>,
    #[serde(default = "default_mc_n")]
    pub mc_n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub pseudo_obs: PseudoObs,
}

fn default_levels() -> Vec<f64> {
    vec![0.95]
}

fn default_tail_frac() -> f64 {
    0.1
}

/// Every family with a density; the comonotone copula has no likelihood.
fn default_candidates() -> Vec<String> {
    CopulaFamily::ALL.iter().filter(|f| **f != CopulaFamily::Comonotone).map(|f| f.to_string()).collect()
}

fn default_mc_n() -> usize {
    1_000_000
}

fn default_seed() -> u64 {
    42
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pairs: Vec::new(),
            alphas: default_levels(),
            betas: default_levels(),
            tail_frac: default_tail_frac(),
            copula_candidates: default_candidates(),
            mc_n: default_mc_n(),
            seed: default_seed(),
            output_dir: default_output_dir(),
            pseudo_obs: PseudoObs::default(),
        }
    }
}

/// Values given on the command line; each replaces the config entry.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alphas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub tail_frac: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub mc_n: Option<usize>,
}

impl PipelineConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut cfg.pairs {
            p.x_csv = resolve(base, &p.x_csv);
            p.y_csv = resolve(base, &p.y_csv);
        }
        cfg.output_dir = resolve(base, &cfg.output_dir);
        Ok(cfg)
    }

    /// Parses and validates TOML text; paths are kept as written.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(a) = &o.alphas {
            self.alphas = a.clone();
        }
        if let Some(b) = &o.betas {
            self.betas = b.clone();
        }
        if let Some(t) = o.tail_frac {
            self.tail_frac = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(n) = o.mc_n {
            self.mc_n = n;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        for (name, levels) in [("alphas", &self.alphas), ("betas", &self.betas)] {
            if levels.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
            if let Some(p) = levels.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
                return bad(format!("{name} entry {p} outside (0, 1)"));
            }
        }
        if !(self.tail_frac > 0.0 && self.tail_frac < 0.5) {
            return bad(format!("tail_frac {} outside (0, 0.5)", self.tail_frac));
        }
        if self.copula_candidates.is_empty() {
            return bad("copula_candidates must not be empty".into());
        }
        self.candidate_families()?;
        let mut names = BTreeSet::new();
        for p in &self.pairs {
            if p.name.trim().is_empty() {
                return bad("pair name must not be empty".into());
            }
            if !names.insert(p.name.as_str()) {
                return bad(format!("duplicate pair name '{}'", p.name));
            }
            if p.lag_x > 1 {
                return bad(format!("pair '{}': lag_x must be 0 or 1, got {}", p.name, p.lag_x));
            }
        }
        Ok(())
    }

    pub fn candidate_families(&self) -> Result<Vec<CopulaFamily>> {
        self.copula_candidates
            .iter()
            .map(|s| s.parse().map_err(|e: jmes::Error| CliError::Validation(e.to_string())))
            .collect()
    }

    /// Every `(α, β)` combination, `α` outermost.
    pub fn levels(&self) -> Vec<(f64, f64)> {
        self.alphas.iter().flat_map(|&a| self.betas.iter().map(move |&b| (a, b))).collect()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
