use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jmes::copulas::{CopulaFamily, CopulaModel};
use jmes::distributions::{MarginalModel, PGrid};
use jmes::orders::{
    check_disp, check_epw, check_icx, check_l_alpha, check_lr, check_rti, check_si, check_st, check_symmetry,
    check_tp2_tail, lr_grid, OrderCheckResult,
};
use jmes::pot::build_semiparametric;
use jmes_cli::config::{Overrides, PairSpec, PipelineConfig, PseudoObs};
use jmes_cli::error::{CliError, Result, EXIT_NUMERICAL};
use jmes_cli::ingest::{align, read_series, Series};
use jmes_cli::pipeline::{self, MarginSummary};
use jmes_cli::synth::{write_synthetic, SynthSpec};
use jmes_cli::{figures, validate};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "jmes", version, about = "Joint marginal expected shortfall and related systemic risk measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every configured pair and write report.csv and report.json.
    Report(ReportArgs),
    /// Write plot-ready CSV data for the illustration figures.
    Figures(FiguresArgs),
    /// Fit the semiparametric GPD-tail margin of one series.
    FitMarginal(FitMarginalArgs),
    /// Fit and rank copula families on a pair of series by AIC.
    FitCopula(FitCopulaArgs),
    /// Check a stochastic order between two margins or a dependence property.
    CheckOrder(CheckOrderArgs),
    /// Compare quadrature with Monte Carlo on a fixed model matrix.
    McValidate(McValidateArgs),
    /// Generate synthetic price series and a matching config.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ReportArgs {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Conditioning levels α, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// System levels β, comma separated.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    tail_frac: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo draws for the JMES cross-check; 0 disables it.
    #[arg(long)]
    mc_n: Option<usize>,
}

#[derive(Args)]
struct FiguresArgs {
    /// Figure ids (fig1a … fig4d); all figures when omitted.
    ids: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "figures")]
    out: PathBuf,
}

#[derive(Args)]
struct FitMarginalArgs {
    /// Price (`date,close`) or loss (one column) CSV.
    csv: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    tail_frac: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FitCopulaArgs {
    /// Take pairs and settings from this configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to these pairs of the configuration.
    #[arg(long)]
    pair: Vec<String>,
    /// Conditioning series `x` and system series `y`, instead of a config.
    #[arg(num_args = 2, value_names = ["X_CSV", "Y_CSV"], conflicts_with = "config")]
    files: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    lag_x: u32,
    /// Candidate families, comma separated.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pseudo_obs: Option<PseudoObsArg>,
    #[arg(long)]
    tail_frac: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PseudoObsArg {
    Ranks,
    Fitted,
}

#[derive(Args)]
struct CheckOrderArgs {
    /// st, icx, disp, epw, lr (two margins); si, rti, tp2_tail, symmetry
    /// (one copula); l_alpha (two copulas, needs --alpha and --beta).
    relation: String,
    /// First model, e.g. `gamma:3,1.5` or `gumbel:3`.
    a: String,
    /// Second model for the two-argument relations.
    b: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Use this many uniform grid points instead of the default grid.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct McValidateArgs {
    /// Draws per comparison.
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Copula of a pair, e.g. `t:0.5,4`; repeat for several pairs.
    #[arg(long, required = true)]
    copula: Vec<String>,
    #[arg(long, default_value = "t:4")]
    x_margin: String,
    #[arg(long, default_value = "t:4")]
    y_margin: String,
    /// Daily losses per series.
    #[arg(long, default_value_t = 2_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for the price files and config.toml.
    #[arg(long)]
    out: PathBuf,
    /// Levels α written to the config, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Levels β written to the config, comma separated.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Candidate families written to the config, comma separated.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<String>>,
    /// Monte Carlo draws written to the config.
    #[arg(long)]
    mc_n: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Report(a) => report(a),
        Command::Figures(a) => emit_figures(a),
        Command::FitMarginal(a) => fit_marginal(a),
        Command::FitCopula(a) => fit_copula(a),
        Command::CheckOrder(a) => check_order(a),
        Command::McValidate(a) => mc_validate(a),
        Command::Synth(a) => synth(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| CliError::Validation(format!("writing JSON: {e}")))?;
    println!("{s}");
    Ok(())
}

fn parse_model<T: std::str::FromStr<Err = jmes::Error>>(what: &str, s: &str) -> Result<T> {
    s.parse().map_err(|e| CliError::library(format!("{what} '{s}'"), e))
}

fn report(a: ReportArgs) -> Result<i32> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    cfg.apply(&Overrides {
        alphas: a.alpha,
        betas: a.beta,
        tail_frac: a.tail_frac,
        seed: a.seed,
        output_dir: a.out,
        mc_n: a.mc_n,
    })?;
    let out = pipeline::run(&cfg)?;
    let (csv, json) = pipeline::write_outputs(&cfg, &out)?;
    for p in &out.pairs {
        for w in &p.warnings {
            eprintln!("warning: {}: {w}", p.name);
        }
        println!("{}: n = {}, copula {}", p.name, p.n_obs, p.selection.best.model);
    }
    for f in &out.failures {
        eprintln!("error: pair {}: {}", f.name, f.error);
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(out.exit_code())
}

fn emit_figures(a: FiguresArgs) -> Result<i32> {
    for p in figures::emit_figures(&a.ids, &a.out)? {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn losses_of(path: &Path) -> Result<Vec<f64>> {
    let s = read_series(path)?;
    match &s {
        Series::Losses(l) => Ok(l.clone()),
        Series::Prices { .. } => Ok(align(&s, &s, 0)?.y),
    }
}

fn fit_marginal(a: FitMarginalArgs) -> Result<i32> {
    let losses = losses_of(&a.csv)?;
    let m = build_semiparametric(&losses, a.tail_frac).map_err(|e| CliError::library("fitting the margin", e))?;
    let s = MarginSummary::from(&m);
    if a.json {
        print_json(&s)?;
    } else {
        println!("n = {}, tail_frac = {}", s.n, s.tail_frac);
        println!("lower tail: u = {}, n = {}, xi = {}, scale = {}", s.u_lower, s.n_lower, s.xi_lower, s.scale_lower);
        println!("upper tail: u = {}, n = {}, xi = {}, scale = {}", s.u_upper, s.n_upper, s.xi_upper, s.scale_upper);
    }
    Ok(0)
}

#[derive(Serialize)]
struct CopulaFitOutput {
    pair: String,
    n_obs: usize,
    empirical_tau: f64,
    selection: jmes::copulas::AicSelection,
}

fn fit_copula(a: FitCopulaArgs) -> Result<i32> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => {
            let [x, y] = a.files.as_slice() else {
                return Err(CliError::Validation("give --config or two CSV files".into()));
            };
            PipelineConfig {
                pairs: vec![PairSpec { name: "pair".into(), x_csv: x.clone(), y_csv: y.clone(), lag_x: a.lag_x }],
                ..PipelineConfig::default()
            }
        }
    };
    if let Some(c) = a.candidates {
        cfg.copula_candidates = c;
    }
    if let Some(p) = a.pseudo_obs {
        cfg.pseudo_obs = match p {
            PseudoObsArg::Ranks => PseudoObs::Ranks,
            PseudoObsArg::Fitted => PseudoObs::Fitted,
        };
    }
    cfg.apply(&Overrides { tail_frac: a.tail_frac, ..Default::default() })?;
    if let Some(missing) = a.pair.iter().find(|n| !cfg.pairs.iter().any(|p| &&p.name == n)) {
        return Err(CliError::Validation(format!("no pair named '{missing}' in the configuration")));
    }
    let families: Vec<CopulaFamily> = cfg.candidate_families()?;
    let mut outputs = Vec::new();
    for pair in cfg.pairs.iter().filter(|p| a.pair.is_empty() || a.pair.contains(&p.name)) {
        let prep = pipeline::prepare_pair(&cfg, pair)?;
        let selection = pipeline::select(&families, &prep.pseudo)?;
        outputs.push(CopulaFitOutput {
            pair: pair.name.clone(),
            n_obs: prep.aligned.len(),
            empirical_tau: prep.pseudo.kendall_tau(),
            selection,
        });
    }
    if a.json {
        print_json(&outputs)?;
        return Ok(0);
    }
    for o in &outputs {
        let best = &o.selection.best.model;
        let (ll, lu) = best.tail_dependence();
        println!("{}: n = {}, empirical tau = {:.6}", o.pair, o.n_obs, o.empirical_tau);
        println!("  {:<13} {:<28} {:>14} {:>14}", "family", "model", "loglik", "aic");
        for c in &o.selection.candidates {
            match &c.fit {
                Some(f) => {
                    let mark = if f.model == *best { " *" } else { "" };
                    println!(
                        "  {:<13} {:<28} {:>14.4} {:>14.4}{mark}",
                        c.family.name(),
                        f.model.to_string(),
                        f.loglik,
                        f.aic
                    );
                }
                None => println!("  {:<13} excluded: {}", c.family.name(), c.error.as_deref().unwrap_or("")),
            }
        }
        println!("  selected {best}: tau = {:.6}, lambda_L = {ll:.6}, lambda_U = {lu:.6}", best.kendall_tau());
    }
    Ok(0)
}

fn check_order(a: CheckOrderArgs) -> Result<i32> {
    let grid = match a.grid {
        Some(n) => PGrid::uniform(n),
        None => PGrid::order_default(),
    };
    let lib = |what: &str| {
        let what = what.to_string();
        move |e| CliError::library(what, e)
    };
    let second = |kind: &str| {
        a.b.clone().ok_or_else(|| CliError::Validation(format!("relation '{}' needs two {kind}", a.relation)))
    };
    let only_one = || match &a.b {
        Some(_) => Err(CliError::Validation(format!("relation '{}' takes one copula", a.relation))),
        None => Ok(()),
    };
    let res: OrderCheckResult = match a.relation.as_str() {
        "st" | "icx" | "disp" | "epw" | "lr" => {
            let m1: MarginalModel = parse_model("margin", &a.a)?;
            let m2: MarginalModel = parse_model("margin", &second("margins")?)?;
            match a.relation.as_str() {
                "st" => check_st(&m1, &m2, &grid),
                "icx" => check_icx(&m1, &m2, &grid).map_err(lib("icx check"))?,
                "disp" => check_disp(&m1, &m2, &grid),
                "epw" => check_epw(&m1, &m2, &grid).map_err(lib("epw check"))?,
                _ => check_lr(&m1, &m2, &lr_grid(&m1, &m2, &grid)),
            }
        }
        "si" | "rti" | "tp2_tail" | "symmetry" => {
            only_one()?;
            let c: CopulaModel = parse_model("copula", &a.a)?;
            match a.relation.as_str() {
                "si" => check_si(&c, &grid),
                "rti" => check_rti(&c, &grid),
                "tp2_tail" => check_tp2_tail(&c, &grid),
                _ => check_symmetry(&c, &grid),
            }
        }
        "l_alpha" => {
            let c1: CopulaModel = parse_model("copula", &a.a)?;
            let c2: CopulaModel = parse_model("copula", &second("copulas")?)?;
            let (Some(alpha), Some(beta)) = (a.alpha, a.beta) else {
                return Err(CliError::Validation("l_alpha needs --alpha and --beta".into()));
            };
            check_l_alpha(&c1, &c2, alpha, beta, &grid).map_err(lib("l_alpha check"))?
        }
        other => return Err(CliError::Validation(format!("unknown relation '{other}'"))),
    };
    if a.json {
        print_json(&res)?;
        return Ok(0);
    }
    let subject = match &a.b {
        Some(b) => format!("{} <= {b}", a.a),
        None => a.a.clone(),
    };
    println!(
        "{} {subject}: {} ({} of {} comparisons violated)",
        res.relation.name(),
        res.verdict.name(),
        res.n_violations,
        res.n_checked
    );
    for w in res.witnesses.iter().take(5) {
        println!("  witness at {:?}: lhs = {}, rhs = {}", w.point, w.lhs, w.rhs);
    }
    if let Some(m) = res.monotone {
        println!("  monotone on the grid: {m}");
    }
    for n in &res.notes {
        println!("  note: {n}");
    }
    Ok(0)
}

fn mc_validate(a: McValidateArgs) -> Result<i32> {
    if a.n < jmes::oracle::MIN_SAMPLES {
        return Err(CliError::Validation(format!("--n must be at least {}", jmes::oracle::MIN_SAMPLES)));
    }
    let rows = validate::run(&validate::default_cases(), a.n, a.seed);
    if a.json {
        print_json(&rows)?;
    } else {
        print!("{}", validate::render(&rows));
    }
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { EXIT_NUMERICAL })
}

fn synth(a: SynthArgs) -> Result<i32> {
    let copulas = a.copula.iter().map(|c| parse_model("copula", c)).collect::<Result<Vec<CopulaModel>>>()?;
    let spec = SynthSpec {
        copulas,
        x_margin: parse_model("margin", &a.x_margin)?,
        y_margin: parse_model("margin", &a.y_margin)?,
        n: a.n,
        seed: a.seed,
    };
    let mut base = PipelineConfig { seed: a.seed, ..PipelineConfig::default() };
    if let Some(c) = a.candidates {
        base.copula_candidates = c;
    }
    base.apply(&Overrides { alphas: a.alpha, betas: a.beta, mc_n: a.mc_n, ..Default::default() })?;
    let path = write_synthetic(&spec, &a.out, &base)?;
    println!("wrote {}", path.display());
    Ok(0)
}
