//! Synthetic market data: copula draws mapped through loss margins and
//! turned into daily closing prices, plus a matching pipeline config.
//!
//! Copula pairs are drawn as `V` first and `U` from `V` by conditional
//! inversion, so every copula generated with the same seed shares its `V`
//! column. With a common `Y` margin the system series `y` is then identical
//! across pairs, which isolates the effect of dependence.

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use jmes::copulas::CopulaModel;
use jmes::distributions::MarginalModel;

use crate::config::{PairSpec, PipelineConfig};
use crate::error::{CliError, Result};
use crate::pipeline::write_file;

/// Price on the day before the first loss.
pub const START_PRICE: f64 = 100.0;

/// First trading day of every synthetic series.
pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

/// Loss pairs `(x, y)` from `copula` with the given margins.
pub fn sample_losses(
    copula: &CopulaModel,
    x: &MarginalModel,
    y: &MarginalModel,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let sample = copula.sample(n, seed);
    let q = |m: &MarginalModel, p: f64| m.quantile(p).map_err(|e| CliError::library("margin quantile", e));
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for &(u, v) in sample.pairs() {
        xs.push(q(x, u)?);
        ys.push(q(y, v)?);
    }
    Ok((xs, ys))
}

/// `n + 1` consecutive weekdays starting at [`start_date`].
pub fn weekdays(n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start_date();
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Closing prices whose daily losses `−100·ln(p_t/p_{t−1})` are `losses`.
pub fn prices_from_losses(losses: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(losses.len() + 1);
    p.push(START_PRICE);
    let mut log_p = START_PRICE.ln();
    for l in losses {
        log_p -= l / 100.0;
        p.push(log_p.exp());
    }
    p
}

/// `date,close` CSV text for a loss series.
pub fn price_csv(losses: &[f64]) -> String {
    let prices = prices_from_losses(losses);
    let mut s = String::from("date,close\n");
    for (d, p) in weekdays(prices.len()).iter().zip(&prices) {
        s.push_str(&format!("{},{p}\n", d.format("%Y-%m-%d")));
    }
    s
}

/// Parameters of one synthetic data set.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub copulas: Vec<CopulaModel>,
    pub x_margin: MarginalModel,
    pub y_margin: MarginalModel,
    pub n: usize,
    pub seed: u64,
}

/// File-system friendly pair name, e.g. `p1_gaussian-0.5`.
pub fn pair_name(index: usize, copula: &CopulaModel) -> String {
    let label: String = copula
        .to_string()
        .chars()
        .map(|c| match c {
            ':' | ',' => '-',
            c if c.is_ascii_alphanumeric() || c == '.' || c == '-' => c,
            _ => '_',
        })
        .collect();
    format!("p{}_{label}", index + 1)
}

/// Writes one `x`/`y` price file per copula and a `config.toml` listing
/// them into `dir`; returns the config path.
pub fn write_synthetic(spec: &SynthSpec, dir: &Path, base: &PipelineConfig) -> Result<PathBuf> {
    if spec.copulas.is_empty() {
        return Err(CliError::Validation("at least one copula is required".into()));
    }
    let mut cfg = base.clone();
    cfg.pairs.clear();
    for (i, c) in spec.copulas.iter().enumerate() {
        let (x, y) = sample_losses(c, &spec.x_margin, &spec.y_margin, spec.n, spec.seed)?;
        let name = pair_name(i, c);
        let (xf, yf) = (format!("{name}_x.csv"), format!("{name}_y.csv"));
        write_file(&dir.join(&xf), &price_csv(&x))?;
        write_file(&dir.join(&yf), &price_csv(&y))?;
        cfg.pairs.push(PairSpec { name, x_csv: xf.into(), y_csv: yf.into(), lag_x: 0 });
    }
    cfg.validate()?;
    let text = toml::to_string(&cfg).map_err(|e| CliError::Validation(format!("writing config: {e}")))?;
    let path = dir.join("config.toml");
    write_file(&path, &text)?;
    Ok(path)
}
