//! Systemic risk measures of `Y` given stress on `X` for a bivariate model
//! `H(x,y) = C(F(x), G(y))` with `U = F(X)`, `V = G(Y)`.
//!
//! All conditional measures are quantile integrals of `G⁻¹` against a
//! conditional distortion (see [`crate::distortion`]):
//!
//! ```text
//! MES_α        = E[Y | X > VaR_α[X]]                 = ∫ G⁻¹ dh̄_{α,0}
//! JMES_{α,β}   = E[Y | X > VaR_α[X], Y > VaR_β[Y]]   = ∫ G⁻¹ dh̄_{α,β}
//! CoVaR_{α,β}  = VaR_β[Y | X > VaR_α[X]]             = G⁻¹(t*),  C̄(α,t*) = (1−α)(1−β)
//! CoES_{α,β}   = (1−β)⁻¹ ∫_β^1 CoVaR_{α,s} ds         = ∫_{t*}^1 G⁻¹(t) P(U>α|V=t) dt / ((1−α)(1−β))
//! ```
//!
//! CoVaR and CoES condition on `{X > VaR_α[X]}` (the strict-exceedance
//! convention) throughout.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::copulas::CopulaModel;
use crate::distortion::{DistortionCurve, DEGENERACY_THRESHOLD};
use crate::distributions::MarginalModel;
use crate::error::{half_open_unit, open_unit, Error, Result};
use crate::optim::bisect_increasing;
use crate::quad::{QuadResult, QuadSettings};

/// Level of the median baseline in the `Δ_m` measures.
pub const MEDIAN_LEVEL: f64 = 0.5;

/// Bracket width of the CoVaR root solve, in `t`.
pub const COVAR_TOL: f64 = 1e-12;

/// `|denominator| ≤ ZERO_DENOMINATOR_TOL·max(1, |numerator|)` counts as zero.
pub const ZERO_DENOMINATOR_TOL: f64 = 1e-12;

/// A bivariate risk `(X, Y)`: margins `F`, `G` joined by `C` with
/// `U ← X`, `V ← Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateModel {
    pub x_marginal: MarginalModel,
    pub y_marginal: MarginalModel,
    pub copula: CopulaModel,
    /// Quadrature settings for every integral; recorded in reports.
    pub settings: QuadSettings,
}

impl BivariateModel {
    pub fn new(x_marginal: MarginalModel, y_marginal: MarginalModel, copula: CopulaModel) -> Self {
        Self { x_marginal, y_marginal, copula, settings: QuadSettings::default() }
    }

    pub fn with_settings(mut self, settings: QuadSettings) -> Self {
        self.settings = settings;
        self
    }

    /// `(Y, X)`: the roles of the two risks exchanged. Every family in
    /// [`CopulaModel`] is exchangeable, so the copula is unchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x_marginal: self.y_marginal.clone(),
            y_marginal: self.x_marginal.clone(),
            copula: self.copula,
            settings: self.settings,
        }
    }

    /// The same model with `Y` replaced by `Y + c`.
    pub fn shift_y(&self, c: f64) -> Result<Self> {
        Ok(Self { y_marginal: self.y_marginal.shifted(c)?, ..self.clone() })
    }

    /// The same model with `Y` replaced by `c·Y`, `c > 0`.
    pub fn scale_y(&self, c: f64) -> Result<Self> {
        Ok(Self { y_marginal: self.y_marginal.scaled(c)?, ..self.clone() })
    }
}

impl fmt::Display for BivariateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X ~ {}, Y ~ {}, C = {}", self.x_marginal, self.y_marginal, self.copula)
    }
}

/// `∫ G⁻¹ dh̄_{α,β}` with its quadrature diagnostics.
fn joint_integral(b: &BivariateModel, alpha: f64, beta: f64) -> Result<QuadResult> {
    let curve = DistortionCurve::joint_tail(b.copula, alpha, beta)?;
    curve.integrate_quantile(&b.y_marginal, &b.settings)
}

/// `VaR_p[Y]`.
pub fn var_y(b: &BivariateModel, p: f64) -> Result<f64> {
    b.y_marginal.quantile(p)
}

/// `ES_p[Y]`.
pub fn es_y(b: &BivariateModel, p: f64) -> Result<f64> {
    b.y_marginal.es(p)
}

/// `MES_α[Y|X] = E[Y | X > VaR_α[X]]`; `MES_0 = E[Y]`.
pub fn mes(b: &BivariateModel, alpha: f64) -> Result<f64> {
    Ok(mes_detailed(b, alpha)?.value)
}

fn mes_detailed(b: &BivariateModel, alpha: f64) -> Result<QuadResult> {
    half_open_unit(alpha)?;
    joint_integral(b, alpha, 0.0)
}

/// `JMES_{α,β}[Y|X] = E[Y | X > VaR_α[X], Y > VaR_β[Y]]`.
pub fn jmes(b: &BivariateModel, alpha: f64, beta: f64) -> Result<f64> {
    Ok(jmes_detailed(b, alpha, beta)?.value)
}

/// [`jmes`] with the quadrature value, error estimate and convergence flag.
pub fn jmes_detailed(b: &BivariateModel, alpha: f64, beta: f64) -> Result<QuadResult> {
    half_open_unit(alpha)?;
    half_open_unit(beta)?;
    joint_integral(b, alpha, beta)
}

/// The level `t* = inf{t : C̄(α,t) ≤ (1−α)(1−β)}` with
/// `CoVaR_{α,β} = G⁻¹(t*)`. Under positive quadrant dependence `t* ≥ β`.
pub fn covar_level(copula: &CopulaModel, alpha: f64, beta: f64) -> Result<f64> {
    open_unit(alpha)?;
    open_unit(beta)?;
    let target = (1.0 - alpha) * (1.0 - beta);
    if target < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateConditioning { alpha, beta, tail: target });
    }
    if *copula == CopulaModel::Comonotone {
        return Ok(1.0 - target);
    }
    // C̄(α,0) = 1 − α ≥ target and C̄(α,1) = 0, so [0,1] brackets the root.
    Ok(bisect_increasing(|t| target - copula.tail(alpha, t), 0.0, 1.0, COVAR_TOL))
}

/// `CoVaR_{α,β}[Y|X] = VaR_β[Y | X > VaR_α[X]]`.
pub fn covar(b: &BivariateModel, alpha: f64, beta: f64) -> Result<f64> {
    let t = covar_level(&b.copula, alpha, beta)?;
    b.y_marginal.quantile_upper(1.0 - t)
}

/// `CoES_{α,β}[Y|X] = (1−β)⁻¹ ∫_β^1 CoVaR_{α,s}[Y|X] ds`.
pub fn coes(b: &BivariateModel, alpha: f64, beta: f64) -> Result<f64> {
    Ok(coes_detailed(b, alpha, beta)?.value)
}

fn coes_detailed(b: &BivariateModel, alpha: f64, beta: f64) -> Result<QuadResult> {
    let t = covar_level(&b.copula, alpha, beta)?;
    // E[Y; U > α, V > t*] / ((1−α)(1−β)), where C̄(α,t*) = (1−α)(1−β).
    let curve = DistortionCurve::joint_tail(b.copula, alpha, t)?;
    let mut r = curve.integrate_quantile(&b.y_marginal, &b.settings)?;
    let factor = curve.conditioning_probability() / ((1.0 - alpha) * (1.0 - beta));
    r.value *= factor;
    r.abs_err *= factor;
    Ok(r)
}

/// `ΔJMES_{α₁,α₂,β} = JMES_{α₂,β} − JMES_{α₁,β}` for `α₁ ≤ α₂`.
pub fn delta_jmes(b: &BivariateModel, alpha1: f64, alpha2: f64, beta: f64) -> Result<f64> {
    check_alpha_order(alpha1, alpha2)?;
    Ok(jmes(b, alpha2, beta)? - jmes(b, alpha1, beta)?)
}

/// `ΔJMES_{α,β} = JMES_{α,β} − ES_β[Y]`.
pub fn delta_jmes_simple(b: &BivariateModel, alpha: f64, beta: f64) -> Result<f64> {
    Ok(jmes(b, alpha, beta)? - es_y(b, beta)?)
}

/// `Δ^R JMES_{α₁,α₂,β} = (JMES_{α₂,β} − JMES_{α₁,β}) / JMES_{α₁,β}`.
pub fn delta_r_jmes(b: &BivariateModel, alpha1: f64, alpha2: f64, beta: f64) -> Result<f64> {
    check_alpha_order(alpha1, alpha2)?;
    let base = jmes(b, alpha1, beta)?;
    ratio("Delta^R JMES", jmes(b, alpha2, beta)? - base, base)
}

/// `Δ^R JMES_{α,β} = (JMES_{α,β} − ES_β[Y]) / ES_β[Y]`.
pub fn delta_r_jmes_simple(b: &BivariateModel, alpha: f64, beta: f64) -> Result<f64> {
    let base = es_y(b, beta)?;
    ratio("Delta^R JMES", jmes(b, alpha, beta)? - base, base)
}

fn check_alpha_order(alpha1: f64, alpha2: f64) -> Result<()> {
    half_open_unit(alpha1)?;
    half_open_unit(alpha2)?;
    if alpha1 <= alpha2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("need alpha1 <= alpha2, got {alpha1} > {alpha2}")))
    }
}

fn is_zero_denominator(num: f64, den: f64) -> bool {
    den.abs() <= ZERO_DENOMINATOR_TOL * num.abs().max(1.0)
}

fn ratio(name: &str, num: f64, den: f64) -> Result<f64> {
    if is_zero_denominator(num, den) {
        Err(Error::ZeroDenominator(name.to_string()))
    } else {
        Ok(num / den)
    }
}

/// Names of the reported measures, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Measure {
    E,
    VaR,
    ES,
    CoVaR,
    CoES,
    MES,
    JMES,
    #[serde(rename = "dCoVaR")]
    DCoVaR,
    #[serde(rename = "dmCoVaR")]
    DmCoVaR,
    #[serde(rename = "dMES")]
    DMES,
    #[serde(rename = "dmMES")]
    DmMES,
    #[serde(rename = "dJMES")]
    DJMES,
    #[serde(rename = "dmJMES")]
    DmJMES,
    #[serde(rename = "drCoVaR")]
    DrCoVaR,
    #[serde(rename = "drmCoVaR")]
    DrmCoVaR,
    #[serde(rename = "drMES")]
    DrMES,
    #[serde(rename = "drmMES")]
    DrmMES,
    #[serde(rename = "drJMES")]
    DrJMES,
    #[serde(rename = "drmJMES")]
    DrmJMES,
}

impl Measure {
    pub const ALL: [Measure; 19] = [
        Measure::E,
        Measure::VaR,
        Measure::ES,
        Measure::CoVaR,
        Measure::CoES,
        Measure::MES,
        Measure::JMES,
        Measure::DCoVaR,
        Measure::DmCoVaR,
        Measure::DMES,
        Measure::DmMES,
        Measure::DJMES,
        Measure::DmJMES,
        Measure::DrCoVaR,
        Measure::DrmCoVaR,
        Measure::DrMES,
        Measure::DrmMES,
        Measure::DrJMES,
        Measure::DrmJMES,
    ];

    /// The ten measures derived from differences against a baseline.
    pub const MEDIAN_BASELINE: [Measure; 10] = [
        Measure::DCoVaR,
        Measure::DmCoVaR,
        Measure::DMES,
        Measure::DmMES,
        Measure::DrCoVaR,
        Measure::DrmCoVaR,
        Measure::DrMES,
        Measure::DrmMES,
        Measure::DmJMES,
        Measure::DrmJMES,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::E => "E",
            Self::VaR => "VaR",
            Self::ES => "ES",
            Self::CoVaR => "CoVaR",
            Self::CoES => "CoES",
            Self::MES => "MES",
            Self::JMES => "JMES",
            Self::DCoVaR => "dCoVaR",
            Self::DmCoVaR => "dmCoVaR",
            Self::DMES => "dMES",
            Self::DmMES => "dmMES",
            Self::DJMES => "dJMES",
            Self::DmJMES => "dmJMES",
            Self::DrCoVaR => "drCoVaR",
            Self::DrmCoVaR => "drmCoVaR",
            Self::DrMES => "drMES",
            Self::DrmMES => "drmMES",
            Self::DrJMES => "drJMES",
            Self::DrmJMES => "drmJMES",
        }
    }

    /// True for the ratio (`dr…`) measures.
    pub fn is_ratio(self) -> bool {
        self.name().starts_with("dr")
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measure `{s}`")))
    }
}

/// Why a report entry is missing or needs care.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlagKind {
    NonintegrableTail,
    DegenerateConditioning,
    /// An integral ran out of subintervals before meeting its tolerance.
    QuadratureFallback,
    ZeroDenominator,
    /// A ratio measure whose baseline is negative: the sign of the ratio
    /// does not carry its usual meaning.
    NonPositiveDenominator,
    /// `Y` has a discrete (empirical) component; the quantile-integral
    /// representation is applied to its generalized inverse.
    EmpiricalMargin,
    /// Any other numerical failure.
    NumericalFailure,
}

/// A warning attached to a report, optionally tied to one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub kind: FlagKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    pub message: String,
}

/// Quadrature bookkeeping for a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub settings: QuadSettings,
    pub evaluations: usize,
    /// Largest absolute error estimate among the integrals.
    pub max_abs_err: f64,
    pub all_converged: bool,
}

/// Measures at one `(α, β)`. Absent entries are explained by a flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub alpha: f64,
    pub beta: f64,
    pub entries: BTreeMap<Measure, f64>,
    pub flags: Vec<Flag>,
    pub quadrature: QuadratureMeta,
}

impl RiskReport {
    fn empty(b: &BivariateModel, alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            entries: BTreeMap::new(),
            flags: Vec::new(),
            quadrature: QuadratureMeta { settings: b.settings, evaluations: 0, max_abs_err: 0.0, all_converged: true },
        }
    }

    pub fn get(&self, m: Measure) -> Option<f64> {
        self.entries.get(&m).copied()
    }

    /// Flags attached to `m`.
    pub fn flags_for(&self, m: Measure) -> impl Iterator<Item = &Flag> {
        self.flags.iter().filter(move |f| f.measure == Some(m))
    }

    pub fn has_flag(&self, kind: FlagKind) -> bool {
        self.flags.iter().any(|f| f.kind == kind)
    }

    /// `alpha, beta` followed by [`Measure::ALL`] names.
    pub fn csv_header() -> Vec<String> {
        let mut h = vec!["alpha".to_string(), "beta".to_string()];
        h.extend(Measure::ALL.iter().map(|m| m.name().to_string()));
        h
    }

    /// Values in [`Self::csv_header`] order; absent entries are empty.
    pub fn csv_row(&self) -> Vec<String> {
        let mut row = vec![self.alpha.to_string(), self.beta.to_string()];
        row.extend(Measure::ALL.iter().map(|m| self.get(*m).map(|v| v.to_string()).unwrap_or_default()));
        row
    }

    fn note_quad(&mut self, r: &QuadResult, m: Measure) {
        self.quadrature.evaluations += r.evaluations;
        self.quadrature.max_abs_err = self.quadrature.max_abs_err.max(r.abs_err);
        if !r.converged {
            self.quadrature.all_converged = false;
            self.flag(FlagKind::QuadratureFallback, Some(m), format!("error estimate {:e}", r.abs_err));
        }
    }

    fn flag(&mut self, kind: FlagKind, measure: Option<Measure>, message: String) {
        self.flags.push(Flag { kind, measure, message });
    }

    fn flag_error(&mut self, m: Measure, e: &Error) {
        let kind = match e {
            Error::NonintegrableTail(_) => FlagKind::NonintegrableTail,
            Error::DegenerateConditioning { .. } => FlagKind::DegenerateConditioning,
            Error::ZeroDenominator(_) => FlagKind::ZeroDenominator,
            _ => FlagKind::NumericalFailure,
        };
        self.flag(kind, Some(m), e.to_string());
    }

    /// Stores `value` or flags its error.
    fn put(&mut self, m: Measure, value: Result<f64>) -> Option<f64> {
        match value {
            Ok(v) => {
                self.entries.insert(m, v);
                Some(v)
            }
            Err(e) => {
                self.flag_error(m, &e);
                None
            }
        }
    }

    fn put_quad(&mut self, m: Measure, r: Result<QuadResult>) -> Option<f64> {
        match r {
            Ok(q) => {
                self.note_quad(&q, m);
                self.put(m, Ok(q.value))
            }
            Err(e) => self.put(m, Err(e)),
        }
    }

    fn put_difference(&mut self, m: Measure, a: Option<f64>, base: Option<f64>) -> Option<f64> {
        match (a, base) {
            (Some(a), Some(base)) => self.put(m, Ok(a - base)),
            _ => {
                self.flag(FlagKind::NumericalFailure, Some(m), "an input measure is unavailable".into());
                None
            }
        }
    }

    fn put_ratio(&mut self, m: Measure, a: Option<f64>, base: Option<f64>) {
        let (Some(a), Some(base)) = (a, base) else {
            self.flag(FlagKind::NumericalFailure, Some(m), "an input measure is unavailable".into());
            return;
        };
        let value = ratio(m.name(), a - base, base);
        if value.is_ok() && base < 0.0 {
            self.flag(FlagKind::NonPositiveDenominator, Some(m), format!("baseline {base} is negative"));
        }
        self.put(m, value);
    }
}

/// Baseline quantities shared by the full and median-baseline reports.
struct Baselines {
    mean: Option<f64>,
    var: Option<f64>,
    es: Option<f64>,
    covar: Option<f64>,
    mes: Option<f64>,
    jmes: Option<f64>,
    covar_med: Option<f64>,
    mes_med: Option<f64>,
    jmes_med: Option<f64>,
}

fn baselines(b: &BivariateModel, alpha: f64, beta: f64, report: &mut RiskReport) -> Baselines {
    let mean = report.put(Measure::E, b.y_marginal.mean());
    let var = report.put(Measure::VaR, var_y(b, beta));
    let es = report.put(Measure::ES, es_y(b, beta));
    let covar_v = report.put(Measure::CoVaR, covar(b, alpha, beta));
    report.put_quad(Measure::CoES, coes_detailed(b, alpha, beta));
    let mes_v = report.put_quad(Measure::MES, mes_detailed(b, alpha));
    let jmes_v = report.put_quad(Measure::JMES, jmes_detailed(b, alpha, beta));
    let med = |r: &mut RiskReport, m: Measure, v: Result<f64>| match v {
        Ok(v) => Some(v),
        Err(e) => {
            r.flag_error(m, &e);
            None
        }
    };
    let covar_med = med(report, Measure::DmCoVaR, covar(b, MEDIAN_LEVEL, beta));
    let mes_med = med(report, Measure::DmMES, mes(b, MEDIAN_LEVEL));
    let jmes_med = med(report, Measure::DmJMES, jmes(b, MEDIAN_LEVEL, beta));
    Baselines { mean, var, es, covar: covar_v, mes: mes_v, jmes: jmes_v, covar_med, mes_med, jmes_med }
}

fn empirical_flag(b: &BivariateModel, report: &mut RiskReport) {
    if !b.y_marginal.is_continuous() {
        report.flag(
            FlagKind::EmpiricalMargin,
            None,
            "Y has a discrete component; measures use its generalized inverse".into(),
        );
    }
}

fn fill_median_variants(report: &mut RiskReport, base: &Baselines) {
    report.put_difference(Measure::DCoVaR, base.covar, base.var);
    report.put_difference(Measure::DmCoVaR, base.covar, base.covar_med);
    report.put_difference(Measure::DMES, base.mes, base.mean);
    report.put_difference(Measure::DmMES, base.mes, base.mes_med);
    report.put_difference(Measure::DmJMES, base.jmes, base.jmes_med);
    report.put_ratio(Measure::DrCoVaR, base.covar, base.var);
    report.put_ratio(Measure::DrmCoVaR, base.covar, base.covar_med);
    report.put_ratio(Measure::DrMES, base.mes, base.mean);
    report.put_ratio(Measure::DrmMES, base.mes, base.mes_med);
    report.put_ratio(Measure::DrmJMES, base.jmes, base.jmes_med);
}

/// The baseline-difference measures `ΔCoVaR`, `Δ_mCoVaR`, `ΔMES`, `Δ_mMES`,
/// `Δ_mJMES` and their ratio forms, with the median baseline at `α = 0.5`.
/// The entries they are built from are included too.
pub fn median_baseline_variants(b: &BivariateModel, alpha: f64, beta: f64) -> RiskReport {
    let mut report = RiskReport::empty(b, alpha, beta);
    let base = baselines(b, alpha, beta, &mut report);
    fill_median_variants(&mut report, &base);
    empirical_flag(b, &mut report);
    report
}

/// Every measure of [`Measure::ALL`] at `(α, β)`. Failures become flags on
/// the affected entries; the report itself is always produced.
pub fn full_report(b: &BivariateModel, alpha: f64, beta: f64) -> RiskReport {
    let mut report = RiskReport::empty(b, alpha, beta);
    let base = baselines(b, alpha, beta, &mut report);
    fill_median_variants(&mut report, &base);
    report.put_difference(Measure::DJMES, base.jmes, base.es);
    report.put_ratio(Measure::DrJMES, base.jmes, base.es);
    empirical_flag(b, &mut report);
    report
}
