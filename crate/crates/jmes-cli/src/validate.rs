//! Quadrature against Monte Carlo on a fixed matrix of models, for the
//! `mc-validate` subcommand.

use jmes::copulas::CopulaModel;
use jmes::distributions::MarginalModel;
use jmes::measures::{coes, covar, jmes, mes, BivariateModel, Measure};
use jmes::oracle::{derive_seed, mc_measure};
use serde::Serialize;

/// Largest accepted `|z|` between the two routes.
pub const Z_BOUND: f64 = 3.0;

/// Measures compared for every model.
pub const MEASURES: [Measure; 4] = [Measure::JMES, Measure::MES, Measure::CoVaR, Measure::CoES];

/// A named model and the level it is checked at.
#[derive(Debug, Clone)]
pub struct Case {
    pub label: String,
    pub model: BivariateModel,
    pub alpha: f64,
    pub beta: f64,
}

fn case(copula: &str, x: &str, y: &str, alpha: f64, beta: f64) -> Case {
    let c: CopulaModel = copula.parse().expect("valid copula");
    let xm: MarginalModel = x.parse().expect("valid margin");
    let ym: MarginalModel = y.parse().expect("valid margin");
    Case { label: format!("{copula} {x}/{y}"), model: BivariateModel::new(xm, ym, c), alpha, beta }
}

/// The default matrix: one case per copula family with a density.
pub fn default_cases() -> Vec<Case> {
    vec![
        case("gaussian:0.75", "normal:0,1", "normal:0,1", 0.95, 0.95),
        case("gumbel:3", "gamma:3,1.5", "gamma:2,2.5", 0.9, 0.8),
        case("t:0.5,4", "t:4", "t:4", 0.95, 0.9),
        case("fgm:0.7", "lognormal:0,0.5", "gamma:2,3", 0.9, 0.9),
        case("independence", "normal:0,1", "lognormal:0,0.5", 0.9, 0.9),
    ]
}

/// One comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub model: String,
    pub measure: Measure,
    pub alpha: f64,
    pub beta: f64,
    pub quadrature: Option<f64>,
    pub monte_carlo: Option<f64>,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn quadrature(b: &BivariateModel, m: Measure, alpha: f64, beta: f64) -> jmes::Result<f64> {
    match m {
        Measure::JMES => jmes(b, alpha, beta),
        Measure::MES => mes(b, alpha),
        Measure::CoVaR => covar(b, alpha, beta),
        Measure::CoES => coes(b, alpha, beta),
        other => unreachable!("{other} is not in the validation set"),
    }
}

/// Runs every case × measure. Comparison `k` draws with
/// `derive_seed(seed, k)`; cases run concurrently.
pub fn run(cases: &[Case], n: usize, seed: u64) -> Vec<Row> {
    std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .enumerate()
            .map(|(i, c)| {
                s.spawn(move || {
                    MEASURES
                        .iter()
                        .enumerate()
                        .map(|(j, &m)| {
                            let k = (i * MEASURES.len() + j) as u64;
                            compare(c, m, n, derive_seed(seed, k))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("validation worker panicked")).collect()
    })
}

fn compare(c: &Case, m: Measure, n: usize, seed: u64) -> Row {
    let mut row = Row {
        model: c.label.clone(),
        measure: m,
        alpha: c.alpha,
        beta: c.beta,
        quadrature: None,
        monte_carlo: None,
        std_error: None,
        z: None,
        pass: false,
        error: None,
    };
    let q = quadrature(&c.model, m, c.alpha, c.beta);
    let e = mc_measure(&c.model, m, c.alpha, c.beta, n, seed);
    match (q, e) {
        (Ok(q), Ok(e)) => {
            let z = (e.value - q) / e.std_error;
            row.quadrature = Some(q);
            row.monte_carlo = Some(e.value);
            row.std_error = Some(e.std_error);
            row.z = Some(z);
            row.pass = z.abs() <= Z_BOUND;
        }
        (Err(err), _) | (_, Err(err)) => row.error = Some(err.to_string()),
    }
    row
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Fixed-width table, one line per comparison.
pub fn render(rows: &[Row]) -> String {
    let width = rows.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
    let mut s = format!(
        "{:<width$}  {:<7} {:>5} {:>5} {:>13} {:>13} {:>10} {:>7}  result\n",
        "model", "measure", "alpha", "beta", "quadrature", "monte_carlo", "std_err", "z"
    );
    for r in rows {
        let status = match (&r.error, r.pass) {
            (Some(e), _) => format!("ERROR {e}"),
            (None, true) => "PASS".into(),
            (None, false) => "FAIL".into(),
        };
        s.push_str(&format!(
            "{:<width$}  {:<7} {:>5} {:>5} {:>13} {:>13} {:>10} {:>7}  {status}\n",
            r.model,
            r.measure.name(),
            r.alpha,
            r.beta,
            opt(r.quadrature, 6),
            opt(r.monte_carlo, 6),
            opt(r.std_error, 6),
            opt(r.z, 2),
        ));
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    s.push_str(&format!("{passed}/{} comparisons within {Z_BOUND} standard errors\n", rows.len()));
    s
}
