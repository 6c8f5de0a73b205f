//! The report pipeline: align each pair, fit semiparametric margins, select
//! a copula by AIC and evaluate every measure on the `(α, β)` grid.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use jmes::copulas::{aic_select, AicSelection, CopulaFamily, PseudoSample};
use jmes::distributions::MarginalModel;
use jmes::measures::{full_report, BivariateModel, Measure, RiskReport};
use jmes::oracle::{derive_seed, mc_jmes, McEstimate};
use jmes::pot::{build_semiparametric, SemiParametricMarginal};
use jmes::quad::QuadSettings;
use jmes::rng::GeneratorInfo;
use serde::Serialize;

use crate::config::{PairSpec, PipelineConfig, PseudoObs};
use crate::error::{CliError, Result};
use crate::ingest::{align, read_series, Aligned};

/// Below this many aligned observations a pair is reported with a warning.
pub const MIN_RECOMMENDED_OBS: usize = 500;

/// Keeps fitted-cdf pseudo-observations inside the open unit square.
const PSEUDO_CLAMP: f64 = 1e-12;

/// A pair after alignment and marginal fitting.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub aligned: Aligned,
    pub x_margin: SemiParametricMarginal,
    pub y_margin: SemiParametricMarginal,
    pub pseudo: PseudoSample,
    pub warnings: Vec<String>,
}

/// Reads, aligns and fits the margins of one pair.
pub fn prepare_pair(cfg: &PipelineConfig, pair: &PairSpec) -> Result<PreparedPair> {
    let x = read_series(&pair.x_csv)?;
    let y = read_series(&pair.y_csv)?;
    let aligned = align(&x, &y, pair.lag_x)?;
    let mut warnings = Vec::new();
    if aligned.len() < MIN_RECOMMENDED_OBS {
        warnings.push(format!(
            "only {} aligned observations (fewer than {MIN_RECOMMENDED_OBS}); tail fits are unreliable",
            aligned.len()
        ));
    }
    let x_margin =
        build_semiparametric(&aligned.x, cfg.tail_frac).map_err(|e| CliError::library("fitting the x margin", e))?;
    let y_margin =
        build_semiparametric(&aligned.y, cfg.tail_frac).map_err(|e| CliError::library("fitting the y margin", e))?;
    for (side, m) in [("x", &x_margin), ("y", &y_margin)] {
        for (tail, fit) in [("lower", m.lower()), ("upper", m.upper())] {
            if fit.n_exceed < 30 {
                warnings.push(format!("{side} {tail} tail fitted on only {} exceedances", fit.n_exceed));
            }
            if fit.at_boundary {
                warnings.push(format!("{side} {tail} tail shape ξ = {} sits on its search bound", fit.xi));
            }
        }
    }
    let pseudo = match cfg.pseudo_obs {
        PseudoObs::Ranks => PseudoSample::from_ranks(&aligned.x, &aligned.y),
        PseudoObs::Fitted => {
            let clamp = |p: f64| p.clamp(PSEUDO_CLAMP, 1.0 - PSEUDO_CLAMP);
            let pairs =
                aligned.x.iter().zip(&aligned.y).map(|(&a, &b)| (clamp(x_margin.cdf(a)), clamp(y_margin.cdf(b))));
            PseudoSample::new(pairs.collect())
        }
    }
    .map_err(|e| CliError::library("forming pseudo-observations", e))?;
    Ok(PreparedPair { aligned, x_margin, y_margin, pseudo, warnings })
}

/// Fitted tail summary of one margin.
#[derive(Debug, Clone, Serialize)]
pub struct MarginSummary {
    pub n: usize,
    pub tail_frac: f64,
    pub u_lower: f64,
    pub u_upper: f64,
    pub n_lower: usize,
    pub n_upper: usize,
    pub xi_lower: f64,
    pub scale_lower: f64,
    pub xi_upper: f64,
    pub scale_upper: f64,
}

impl From<&SemiParametricMarginal> for MarginSummary {
    fn from(m: &SemiParametricMarginal) -> Self {
        let (n, n_lower, n_upper) = m.counts();
        let (u_lower, u_upper) = m.thresholds();
        Self {
            n,
            tail_frac: m.tail_frac(),
            u_lower,
            u_upper,
            n_lower,
            n_upper,
            xi_lower: m.lower().xi,
            scale_lower: m.lower().scale,
            xi_upper: m.upper().xi,
            scale_upper: m.upper().scale,
        }
    }
}

/// Everything computed for one pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairResult {
    pub name: String,
    pub n_obs: usize,
    pub misaligned_x: usize,
    pub misaligned_y: usize,
    pub x_margin: MarginSummary,
    pub y_margin: MarginSummary,
    pub selection: AicSelection,
    /// Kendall's τ of the pseudo-observations.
    pub empirical_tau: f64,
    /// Kendall's τ of the selected copula.
    pub model_tau: f64,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub reports: Vec<RiskReport>,
    /// Simulated JMES per level; empty when `mc_n = 0`.
    pub mc_jmes: Vec<McCheck>,
    pub warnings: Vec<String>,
}

/// Monte Carlo JMES under the fitted model against the report value.
#[derive(Debug, Clone, Serialize)]
pub struct McCheck {
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<McEstimate>,
    /// `(simulated − reported) / standard error`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn mc_check(model: &BivariateModel, report: &RiskReport, n: usize, seed: u64) -> McCheck {
    let (alpha, beta) = (report.alpha, report.beta);
    match mc_jmes(model, alpha, beta, n, seed) {
        Ok(e) => {
            let z = report.get(Measure::JMES).map(|q| (e.value - q) / e.std_error);
            McCheck { alpha, beta, estimate: Some(e), z, error: None }
        }
        Err(e) => McCheck { alpha, beta, estimate: None, z: None, error: Some(e.to_string()) },
    }
}

/// A pair the pipeline had to skip.
#[derive(Debug, Clone, Serialize)]
pub struct PairFailure {
    pub name: String,
    pub error: String,
    pub exit_code: i32,
}

/// Fits and evaluates one pair at every configured `(α, β)`. The Monte
/// Carlo check of pair `i` at level `j` uses `derive_seed(seed, i·L + j)`
/// with `L` levels, `i` being the pair's position in the configuration.
pub fn run_pair(cfg: &PipelineConfig, pair: &PairSpec) -> Result<PairResult> {
    let families = cfg.candidate_families()?;
    let prep = prepare_pair(cfg, pair)?;
    let selection = select(&families, &prep.pseudo)?;
    let mut warnings = prep.warnings;
    warnings.extend(selection.warnings.iter().cloned());
    let copula = selection.best.model;
    let (lambda_lower, lambda_upper) = copula.tail_dependence();
    let model = BivariateModel::new(
        MarginalModel::semiparametric(prep.x_margin.clone()),
        MarginalModel::semiparametric(prep.y_margin.clone()),
        copula,
    );
    let levels = cfg.levels();
    let model = &model;
    let reports = std::thread::scope(|s| {
        let handles: Vec<_> = levels.iter().map(|&(a, b)| s.spawn(move || full_report(model, a, b))).collect();
        handles.into_iter().map(|h| h.join().expect("report thread panicked")).collect::<Vec<_>>()
    });
    let index = cfg.pairs.iter().position(|p| p.name == pair.name).unwrap_or(0);
    let mc_jmes = if cfg.mc_n == 0 {
        Vec::new()
    } else {
        let base = index * levels.len();
        reports
            .iter()
            .enumerate()
            .map(|(j, r)| mc_check(model, r, cfg.mc_n, derive_seed(cfg.seed, (base + j) as u64)))
            .collect()
    };
    Ok(PairResult {
        name: pair.name.clone(),
        n_obs: prep.aligned.len(),
        misaligned_x: prep.aligned.misaligned_x,
        misaligned_y: prep.aligned.misaligned_y,
        x_margin: (&prep.x_margin).into(),
        y_margin: (&prep.y_margin).into(),
        empirical_tau: prep.pseudo.kendall_tau(),
        model_tau: copula.kendall_tau(),
        lambda_lower,
        lambda_upper,
        selection,
        reports,
        mc_jmes,
        warnings,
    })
}

pub fn select(families: &[CopulaFamily], pseudo: &PseudoSample) -> Result<AicSelection> {
    aic_select(families, pseudo).map_err(|e| CliError::library("copula selection", e))
}

/// Results of a whole run, pairs in configuration order.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineOutput {
    pub pairs: Vec<PairResult>,
    pub failures: Vec<PairFailure>,
    /// `ranks[i][m]` is the rank of `m` for `(α, β)` number `i` among the
    /// successful pairs, keyed by pair name.
    #[serde(skip)]
    pub ranks: Vec<BTreeMap<Measure, BTreeMap<String, usize>>>,
}

impl PipelineOutput {
    /// Exit code of the worst failure, or `0`.
    pub fn exit_code(&self) -> i32 {
        self.failures.iter().map(|f| f.exit_code).max().unwrap_or(0)
    }

    pub fn rank(&self, level: usize, m: Measure, pair: &str) -> Option<usize> {
        self.ranks.get(level)?.get(&m)?.get(pair).copied()
    }
}

/// Runs every pair concurrently; a failing pair is recorded and skipped.
pub fn run(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    if cfg.pairs.is_empty() {
        return Err(CliError::Validation("the configuration lists no pairs".into()));
    }
    let outcomes: Vec<Result<PairResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.pairs.iter().map(|p| s.spawn(move || run_pair(cfg, p))).collect();
        handles.into_iter().map(|h| h.join().expect("pair thread panicked")).collect()
    });
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for (spec, outcome) in cfg.pairs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => pairs.push(r),
            Err(e) => {
                failures.push(PairFailure { name: spec.name.clone(), error: e.to_string(), exit_code: e.exit_code() })
            }
        }
    }
    let ranks = (0..cfg.levels().len()).map(|i| rank_level(&pairs, i)).collect();
    Ok(PipelineOutput { pairs, failures, ranks })
}

/// Ranks pairs per measure at one level: 1 is the largest value, ties go
/// to the alphabetically first name, and absent values are unranked.
fn rank_level(pairs: &[PairResult], level: usize) -> BTreeMap<Measure, BTreeMap<String, usize>> {
    Measure::ALL
        .iter()
        .map(|&m| {
            let mut vals: Vec<(&str, f64)> =
                pairs.iter().filter_map(|p| Some((p.name.as_str(), p.reports[level].get(m)?))).collect();
            vals.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            (m, vals.into_iter().enumerate().map(|(i, (n, _))| (n.to_string(), i + 1)).collect())
        })
        .collect()
}

/// Columns of `report.csv`.
pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["pair", "alpha", "beta", "n_obs", "copula"].iter().map(|s| s.to_string()).collect();
    h.extend(Measure::ALL.iter().map(|m| m.name().to_string()));
    h.extend(Measure::ALL.iter().map(|m| format!("rank_{}", m.name())));
    h.push("flags".into());
    h
}

/// The report table as CSV text, pairs in configuration order and levels
/// with `α` outermost.
pub fn report_csv(out: &PipelineOutput) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Validation(format!("writing CSV: {e}"));
    w.write_record(csv_header()).map_err(csv_err)?;
    for p in &out.pairs {
        for (i, r) in p.reports.iter().enumerate() {
            let mut row = vec![
                p.name.clone(),
                r.alpha.to_string(),
                r.beta.to_string(),
                p.n_obs.to_string(),
                p.selection.best.model.to_string(),
            ];
            row.extend(Measure::ALL.iter().map(|&m| r.get(m).map(|v| v.to_string()).unwrap_or_default()));
            row.extend(
                Measure::ALL.iter().map(|&m| out.rank(i, m, &p.name).map(|k| k.to_string()).unwrap_or_default()),
            );
            let flags: Vec<String> = r
                .flags
                .iter()
                .map(|f| match f.measure {
                    Some(m) => format!("{:?}:{}", f.kind, m.name()),
                    None => format!("{:?}", f.kind),
                })
                .collect();
            row.push(flags.join(";"));
            w.write_record(row).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(format!("writing CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// The JSON sidecar: every setting needed to reproduce the table.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a PipelineConfig,
    pub quadrature: QuadSettings,
    pub generator: GeneratorInfo,
    pub pairs: &'a [PairResult],
    pub failures: &'a [PairFailure],
}

pub fn sidecar_json(cfg: &PipelineConfig, out: &PipelineOutput) -> Result<String> {
    let side = Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        quadrature: QuadSettings::default(),
        generator: GeneratorInfo::current(),
        pairs: &out.pairs,
        failures: &out.failures,
    };
    let mut s = serde_json::to_string_pretty(&side).map_err(|e| CliError::Validation(format!("writing JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes `report.csv` and `report.json` into the configured output
/// directory and returns their paths.
pub fn write_outputs(cfg: &PipelineConfig, out: &PipelineOutput) -> Result<(PathBuf, PathBuf)> {
    let csv_path = cfg.output_dir.join("report.csv");
    let json_path = cfg.output_dir.join("report.json");
    write_file(&csv_path, &report_csv(out)?)?;
    write_file(&json_path, &sidecar_json(cfg, out)?)?;
    Ok((csv_path, json_path))
}
