//! Plot-ready data for the illustration figures.
//!
//! Every figure is a long-format table: grid columns first (`theta`,
//! `alpha`, `beta` or `t`), then one column per plotted curve. Orientation
//! follows the usual notation: `…_y_given_x` is the measure of `Y` when `X`
//! is in distress, `…_x_given_y` the reverse.
//!
//! | id      | copula       | margins `(X, Y)`              | content                          |
//! |---------|--------------|-------------------------------|----------------------------------|
//! | fig1a   | Gumbel(θ)    | Gam(3,1.5), Gam(2,2.5)        | JMES vs θ ∈ [1,5], four (α,β)    |
//! | fig1b   | Gumbel(3)    | same                          | JMES over (α,β) ∈ [0,1)²         |
//! | fig2a/b | Gumbel       | Gam(1.5,2.5), Gam(2,3)        | ΔJMES = JMES − ES_β              |
//! | fig3a/b | Gumbel       | Gam(2,1.5), Gam(1,1)          | Δ^R JMES = JMES / ES_β − 1       |
//! | fig4a   | Gumbel(3), Gumbel(2) | none                  | l′_α(t), t ∈ [0.82,1)            |
//! | fig4b–d | Gumbel(3) for pair 1, Gumbel(2) for pair 2 | Y₁, Y₂ as in fig1–3 | JMES / ΔJMES / Δ^R over α ∈ [0.6,0.8], β ∈ [0.82,1) |

use std::path::{Path, PathBuf};

use jmes::copulas::CopulaModel;
use jmes::distributions::MarginalModel;
use jmes::measures::{delta_jmes_simple, delta_r_jmes_simple, es_y, jmes, BivariateModel};
use jmes::orders::{l_alpha, l_alpha_derivative};

use crate::error::{CliError, Result};
use crate::pipeline::write_file;

/// Supported figure ids in emission order.
pub const FIGURE_IDS: [&str; 10] =
    ["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig4c", "fig4d"];

/// A figure's table: named columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub id: String,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl FigureData {
    fn from_rows(id: &str, names: &[&str], rows: Vec<Vec<f64>>) -> Self {
        let columns =
            names.iter().enumerate().map(|(j, n)| (n.to_string(), rows.iter().map(|r| r[j]).collect())).collect();
        Self { id: id.to_string(), columns }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.1.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.0 == name).map(|c| c.1.as_slice())
    }

    pub fn to_csv(&self) -> Result<String> {
        let csv_err = |e: csv::Error| CliError::Validation(format!("writing CSV: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.0.as_str())).map_err(csv_err)?;
        for i in 0..self.n_rows() {
            w.write_record(self.columns.iter().map(|c| c.1[i].to_string())).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Validation(format!("writing CSV: {e}")))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }
}

/// Order-preserving parallel map over a slice.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> =
            items.chunks(chunk).map(|c| s.spawn(move || c.iter().map(f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("figure worker panicked")).collect()
    })
}

fn gamma(shape: f64, scale: f64) -> MarginalModel {
    MarginalModel::gamma(shape, scale).expect("valid gamma parameters")
}

fn gumbel(theta: f64) -> CopulaModel {
    CopulaModel::gumbel(theta).expect("valid Gumbel parameter")
}

/// `start, start + step, …` up to `end` inclusive, on an integer lattice.
fn lattice(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// θ grid for the dependence sweeps.
fn theta_grid() -> Vec<f64> {
    lattice(1.0, 5.0, 0.1)
}

/// `[0, 1)` with step 0.05, for the full-square surfaces.
fn unit_grid() -> Vec<f64> {
    lattice(0.0, 0.95, 0.05)
}

fn product(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

/// The Fig. 4 region α ∈ [0.6, 0.8] × β ∈ [0.82, 1).
fn region_grid() -> Vec<(f64, f64)> {
    product(&lattice(0.6, 0.8, 0.01), &lattice(0.82, 0.99, 0.01))
}

/// One of the three plotted quantities.
#[derive(Debug, Clone, Copy)]
enum Quantity {
    Jmes,
    Delta,
    Ratio,
}

impl Quantity {
    fn prefix(self) -> &'static str {
        match self {
            Self::Jmes => "jmes",
            Self::Delta => "djmes",
            Self::Ratio => "drjmes",
        }
    }

    fn eval(self, b: &BivariateModel, alpha: f64, beta: f64) -> Result<f64> {
        let v = match self {
            Self::Jmes => jmes(b, alpha, beta),
            Self::Delta => delta_jmes_simple(b, alpha, beta),
            Self::Ratio => delta_r_jmes_simple(b, alpha, beta),
        };
        v.map_err(|e| CliError::library(format!("{} at alpha={alpha}, beta={beta}", self.prefix()), e))
    }
}

/// A margin pair `(X, Y)` used by the two-orientation figures.
fn margins(id: &str) -> (MarginalModel, MarginalModel, Quantity) {
    match id {
        "fig1a" | "fig1b" => (gamma(3.0, 1.5), gamma(2.0, 2.5), Quantity::Jmes),
        "fig2a" | "fig2b" => (gamma(1.5, 2.5), gamma(2.0, 3.0), Quantity::Delta),
        _ => (gamma(2.0, 1.5), gamma(1.0, 1.0), Quantity::Ratio),
    }
}

/// The `(α, β)` combinations plotted against θ.
fn theta_levels(id: &str) -> Vec<(f64, f64)> {
    if id == "fig1a" {
        vec![(0.5, 0.5), (0.8, 0.9), (0.9, 0.8), (0.95, 0.95)]
    } else {
        vec![(0.9, 0.8)]
    }
}

/// Both orientations against θ, with the unconditional ES columns.
fn theta_sweep(id: &str) -> Result<FigureData> {
    let (x, y, q) = margins(id);
    let p = q.prefix();
    let points: Vec<(f64, (f64, f64))> =
        theta_levels(id).into_iter().flat_map(|l| theta_grid().into_iter().map(move |t| (t, l))).collect();
    let rows = par_map(&points, |&(theta, (alpha, beta))| -> Result<Vec<f64>> {
        let b = BivariateModel::new(x.clone(), y.clone(), gumbel(theta));
        let s = b.swapped();
        Ok(vec![
            theta,
            alpha,
            beta,
            q.eval(&s, alpha, beta)?,
            q.eval(&b, alpha, beta)?,
            es_y(&s, beta).map_err(|e| CliError::library("ES of X", e))?,
            es_y(&b, beta).map_err(|e| CliError::library("ES of Y", e))?,
        ])
    });
    let names = ["theta", "alpha", "beta", &format!("{p}_x_given_y"), &format!("{p}_y_given_x"), "es_x", "es_y"];
    Ok(FigureData::from_rows(id, &names, rows.into_iter().collect::<Result<_>>()?))
}

/// Both orientations over the `(α, β)` square at θ = 3.
fn surface(id: &str) -> Result<FigureData> {
    const THETA: f64 = 3.0;
    let (x, y, q) = margins(id);
    let p = q.prefix();
    let b = BivariateModel::new(x, y, gumbel(THETA));
    let s = b.swapped();
    let grid = product(&unit_grid(), &unit_grid());
    let rows = par_map(&grid, |&(alpha, beta)| -> Result<Vec<f64>> {
        Ok(vec![THETA, alpha, beta, q.eval(&s, alpha, beta)?, q.eval(&b, alpha, beta)?])
    });
    let names = ["theta", "alpha", "beta", &format!("{p}_x_given_y"), &format!("{p}_y_given_x")];
    Ok(FigureData::from_rows(id, &names, rows.into_iter().collect::<Result<_>>()?))
}

/// `l_α(t)` and `l′_α(t)` for `C₁ = Gumbel(3)`, `C₂ = Gumbel(2)`.
fn l_alpha_curves() -> FigureData {
    let (c1, c2) = (gumbel(3.0), gumbel(2.0));
    let ts: Vec<f64> = lattice(0.82, 0.995, 0.005).into_iter().chain([0.999]).collect();
    let points = product(&lattice(0.6, 0.8, 0.05), &ts);
    let rows = points
        .iter()
        .map(|&(alpha, t)| vec![alpha, t, l_alpha(&c1, &c2, alpha, t), l_alpha_derivative(&c1, &c2, alpha, t)])
        .collect();
    FigureData::from_rows("fig4a", &["alpha", "t", "l_alpha", "l_alpha_prime"], rows)
}

/// `Y₁ | X₁` under Gumbel(3) against `Y₂ | X₂` under Gumbel(2) on the
/// Fig. 4 region. The conditioning margins do not enter these measures.
fn two_vector(id: &str) -> Result<FigureData> {
    let (y1, y2, q) = match id {
        "fig4b" => (gamma(3.0, 1.5), gamma(2.0, 2.5), Quantity::Jmes),
        "fig4c" => (gamma(1.5, 2.5), gamma(2.0, 3.0), Quantity::Delta),
        _ => (gamma(2.0, 1.5), gamma(1.0, 1.0), Quantity::Ratio),
    };
    let x = gamma(1.0, 1.0);
    let b1 = BivariateModel::new(x.clone(), y1, gumbel(3.0));
    let b2 = BivariateModel::new(x, y2, gumbel(2.0));
    let rows = par_map(&region_grid(), |&(alpha, beta)| -> Result<Vec<f64>> {
        Ok(vec![alpha, beta, q.eval(&b1, alpha, beta)?, q.eval(&b2, alpha, beta)?])
    });
    let p = q.prefix();
    let names = ["alpha", "beta", &format!("{p}_y1_given_x1"), &format!("{p}_y2_given_x2")];
    Ok(FigureData::from_rows(id, &names, rows.into_iter().collect::<Result<_>>()?))
}

/// Computes one figure.
pub fn figure(id: &str) -> Result<FigureData> {
    match id {
        "fig1a" | "fig2a" | "fig3a" => theta_sweep(id),
        "fig1b" | "fig2b" | "fig3b" => surface(id),
        "fig4a" => Ok(l_alpha_curves()),
        "fig4b" | "fig4c" | "fig4d" => two_vector(id),
        other => Err(CliError::UnknownFigure(other.to_string())),
    }
}

/// Writes `<id>.csv` for each id into `dir`; every id is checked before
/// any work starts. An empty list means all figures.
pub fn emit_figures(ids: &[String], dir: &Path) -> Result<Vec<PathBuf>> {
    let ids: Vec<String> =
        if ids.is_empty() { FIGURE_IDS.iter().map(|s| s.to_string()).collect() } else { ids.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !FIGURE_IDS.contains(&id.as_str())) {
        return Err(CliError::UnknownFigure(bad.clone()));
    }
    let mut paths = Vec::new();
    for id in &ids {
        let path = dir.join(format!("{id}.csv"));
        write_file(&path, &figure(id)?.to_csv()?)?;
        paths.push(path);
    }
    Ok(paths)
}
