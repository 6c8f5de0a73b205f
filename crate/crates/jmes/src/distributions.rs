//! Univariate marginal models and the scalar risk functionals built on them.
//!
//! `VaR_p = F⁻¹(p) = inf{x : F(x) ≥ p}`, `ES_p = (1−p)⁻¹ ∫_p^1 VaR_t dt`,
//! `W_p = E[(X − VaR_p)_+] = (1−p)(ES_p − VaR_p)` and
//! `EPW_p = E[((X − VaR_p)/VaR_p)_+]`.
//!
//! Every quantile integral in the crate goes through
//! [`MarginalModel::integrate_quantile`], which evaluates
//! `∫_{t₀}^1 F⁻¹(t) w(t) dt` for a weight `w` on `[0,1]`: continuous pieces by
//! adaptive quadrature on the exponential scales `t = e^{−r}` (lower half) and
//! `1 − t = e^{−s}` (upper half), atoms of discrete pieces exactly.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{half_open_unit, open_unit, Error, Result};
use crate::optim::bisect_increasing;
use crate::pot::SemiParametricMarginal;
use crate::quad::{integrate, integrate_to_limit, QuadResult, QuadSettings};
use crate::special::{
    gamma_p, gamma_p_inv, gamma_pdf, gamma_q, gamma_q_inv, norm_cdf, norm_isf, norm_pdf, norm_ppf, norm_sf, t_cdf,
    t_isf, t_pdf, t_ppf, t_sf,
};

/// A weight `w(t)` on `[0,1]` for quantile integrals.
pub trait QuantileWeight {
    /// `w(t)`, with `q = 1 − t` supplied accurately for `t` near 1.
    fn density(&self, t: f64, q: f64) -> f64;
    /// `∫_a^b w(t) dt` in closed form (used for atoms and location terms).
    fn mass(&self, a: f64, b: f64) -> f64;
}

/// `w ≡ 1`.
#[derive(Debug, Clone, Copy)]
pub struct UnitWeight;

impl QuantileWeight for UnitWeight {
    fn density(&self, _t: f64, _q: f64) -> f64 {
        1.0
    }
    fn mass(&self, a: f64, b: f64) -> f64 {
        b - a
    }
}

/// Sorted sample with the type-1 (left-continuous) empirical quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    sorted: Vec<f64>,
}

impl EmpiricalMarginal {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("empirical sample contains non-finite values".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `#{x_i ≤ x} / n`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// One-based rank `k` of the order statistic returned by `quantile(p)`:
    /// the smallest `k` with `k/n ≥ p`.
    pub fn rank(&self, p: f64) -> usize {
        empirical_rank(self.sorted.len(), p)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.sorted[self.rank(p) - 1]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }
}

/// Smallest `k ∈ [1, n]` with `k/n ≥ p`, consistent with `cdf = count/n`.
pub(crate) fn empirical_rank(n: usize, p: f64) -> usize {
    let nf = n as f64;
    let mut k = ((nf * p).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= p {
        k -= 1;
    }
    while k < n && (k as f64) / nf < p {
        k += 1;
    }
    k
}

/// A univariate marginal law.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalModel {
    Normal {
        mu: f64,
        sigma: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Standard Student t (location 0, scale 1); `nu` may be non-integer.
    StudentT {
        nu: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    /// `F(x) = 1 − (1 + ξ(x−u)/β)^{−1/ξ}` for `x ≥ u`.
    Gpd {
        xi: f64,
        scale: f64,
        threshold: f64,
    },
    SemiParametric(Arc<SemiParametricMarginal>),
    Empirical(Arc<EmpiricalMarginal>),
    /// Law of `loc + scale·B` for `B ~ base`, `scale > 0`.
    ShiftScale {
        base: Box<MarginalModel>,
        loc: f64,
        scale: f64,
    },
    /// Law of `Σ_i F_i⁻¹(V)` for one uniform `V`: the sum of comonotone
    /// components, whose quantile function is the sum of the components'.
    ComonotoneSum(Vec<MarginalModel>),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl MarginalModel {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sigma", sigma)?;
        Ok(Self::Normal { mu, sigma })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sigma", sigma)?;
        Ok(Self::LogNormal { mu, sigma })
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        positive("nu", nu)?;
        Ok(Self::StudentT { nu })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(Self::Gamma { shape, scale })
    }

    pub fn gpd(xi: f64, scale: f64, threshold: f64) -> Result<Self> {
        finite("xi", xi)?;
        positive("scale", scale)?;
        finite("threshold", threshold)?;
        Ok(Self::Gpd { xi, scale, threshold })
    }

    pub fn empirical(sample: &[f64]) -> Result<Self> {
        Ok(Self::Empirical(Arc::new(EmpiricalMarginal::new(sample)?)))
    }

    pub fn semiparametric(m: SemiParametricMarginal) -> Self {
        Self::SemiParametric(Arc::new(m))
    }

    /// Law of `loc + scale·X`.
    pub fn shift_scale(base: MarginalModel, loc: f64, scale: f64) -> Result<Self> {
        finite("loc", loc)?;
        positive("scale", scale)?;
        Ok(Self::ShiftScale { base: Box::new(base), loc, scale })
    }

    /// Law of the sum of comonotone risks with the given margins.
    pub fn comonotone_sum(components: Vec<MarginalModel>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("comonotone sum needs at least one component".into()));
        }
        Ok(Self::ComonotoneSum(components))
    }

    /// Law of `X + c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::shift_scale(self.clone(), c, 1.0)
    }

    /// Law of `c·X`, `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::shift_scale(self.clone(), 0.0, c)
    }

    /// True when `F` is continuous and strictly increasing on its support.
    pub fn is_continuous(&self) -> bool {
        match self {
            Self::Empirical(_) | Self::SemiParametric(_) => false,
            Self::ShiftScale { base, .. } => base.is_continuous(),
            Self::ComonotoneSum(c) => c.iter().all(Self::is_continuous),
            _ => true,
        }
    }

    /// Whether `E[X_+]` is finite.
    pub fn upper_tail_integrable(&self) -> bool {
        match self {
            Self::StudentT { nu } => *nu > 1.0,
            Self::Gpd { xi, .. } => *xi < 1.0,
            Self::SemiParametric(s) => s.upper().xi < 1.0,
            Self::ShiftScale { base, .. } => base.upper_tail_integrable(),
            Self::ComonotoneSum(c) => c.iter().all(Self::upper_tail_integrable),
            _ => true,
        }
    }

    /// Whether `E[X_−]` is finite.
    pub fn lower_tail_integrable(&self) -> bool {
        match self {
            Self::StudentT { nu } => *nu > 1.0,
            Self::SemiParametric(s) => s.lower().xi < 1.0,
            Self::ShiftScale { base, .. } => base.lower_tail_integrable(),
            Self::ComonotoneSum(c) => c.iter().all(Self::lower_tail_integrable),
            _ => true,
        }
    }

    fn require_upper_tail(&self) -> Result<()> {
        if self.upper_tail_integrable() {
            Ok(())
        } else {
            Err(Error::NonintegrableTail(format!("upper tail of {self} has infinite mean")))
        }
    }

    fn require_lower_tail(&self) -> Result<()> {
        if self.lower_tail_integrable() {
            Ok(())
        } else {
            Err(Error::NonintegrableTail(format!("lower tail of {self} has infinite mean")))
        }
    }

    /// `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mu, sigma } => norm_cdf((x - mu) / sigma),
            Self::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - mu) / sigma)
                }
            }
            Self::StudentT { nu } => t_cdf(*nu, x),
            Self::Gamma { shape, scale } => gamma_p(*shape, x / scale),
            Self::Gpd { .. } => 1.0 - self.sf(x),
            Self::SemiParametric(s) => s.cdf(x),
            Self::Empirical(e) => e.cdf(x),
            Self::ShiftScale { base, loc, scale } => base.cdf((x - loc) / scale),
            Self::ComonotoneSum(_) => self.sum_level(x).0,
        }
    }

    /// `1 − F(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mu, sigma } => norm_sf((x - mu) / sigma),
            Self::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    norm_sf((x.ln() - mu) / sigma)
                }
            }
            Self::StudentT { nu } => t_sf(*nu, x),
            Self::Gamma { shape, scale } => gamma_q(*shape, x / scale),
            Self::Gpd { xi, scale, threshold } => {
                if x <= *threshold {
                    return 1.0;
                }
                let z = (x - threshold) / scale;
                if *xi == 0.0 {
                    (-z).exp()
                } else {
                    let base = xi * z;
                    if base <= -1.0 {
                        0.0
                    } else {
                        (-base.ln_1p() / xi).exp()
                    }
                }
            }
            Self::SemiParametric(s) => 1.0 - s.cdf(x),
            Self::Empirical(e) => 1.0 - e.cdf(x),
            Self::ShiftScale { base, loc, scale } => base.sf((x - loc) / scale),
            Self::ComonotoneSum(_) => self.sum_level(x).1,
        }
    }

    /// `VaR_p = F⁻¹(p)` for `p ∈ (0,1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        open_unit(p)?;
        Ok(self.q_lower(p))
    }

    /// `F⁻¹(1 − q)` for `q ∈ (0,1)`, computed from `q` directly so tiny tail
    /// probabilities keep full precision.
    pub fn quantile_upper(&self, q: f64) -> Result<f64> {
        open_unit(q)?;
        Ok(self.q_upper(q))
    }

    /// Unchecked `F⁻¹(p)`; `p ∈ (0,1)` is assumed.
    pub(crate) fn q_lower(&self, p: f64) -> f64 {
        match self {
            Self::Normal { mu, sigma } => mu + sigma * norm_ppf(p),
            Self::LogNormal { mu, sigma } => (mu + sigma * norm_ppf(p)).exp(),
            Self::StudentT { nu } => t_ppf(*nu, p),
            Self::Gamma { shape, scale } => scale * gamma_p_inv(*shape, p),
            Self::Gpd { .. } => {
                if p > 0.5 {
                    self.q_upper(1.0 - p)
                } else {
                    self.gpd_upper(-(-p).ln_1p())
                }
            }
            Self::SemiParametric(s) => s.quantile_lower(p),
            Self::Empirical(e) => e.quantile(p),
            Self::ShiftScale { base, loc, scale } => loc + scale * base.q_lower(p),
            Self::ComonotoneSum(c) => c.iter().map(|m| m.q_lower(p)).sum(),
        }
    }

    /// Unchecked `F⁻¹(1 − q)`.
    pub(crate) fn q_upper(&self, q: f64) -> f64 {
        match self {
            Self::Normal { mu, sigma } => mu + sigma * norm_isf(q),
            Self::LogNormal { mu, sigma } => (mu + sigma * norm_isf(q)).exp(),
            Self::StudentT { nu } => t_isf(*nu, q),
            Self::Gamma { shape, scale } => {
                if q < 0.5 {
                    scale * gamma_q_inv(*shape, q)
                } else {
                    scale * gamma_p_inv(*shape, 1.0 - q)
                }
            }
            Self::Gpd { .. } => self.gpd_upper(-q.ln()),
            Self::SemiParametric(s) => s.quantile_upper(q),
            Self::Empirical(e) => e.quantile(1.0 - q),
            Self::ShiftScale { base, loc, scale } => loc + scale * base.q_upper(q),
            Self::ComonotoneSum(c) => c.iter().map(|m| m.q_upper(q)).sum(),
        }
    }

    /// `(F(x), 1 − F(x))` of a comonotone sum by bisection on the level,
    /// run on the lower scale below the median and on the upper scale above
    /// it so both tails keep relative precision.
    fn sum_level(&self, x: f64) -> (f64, f64) {
        const LEVEL_TOL: f64 = 1e-300;
        let median = self.q_lower(0.5);
        if x < median {
            let p = bisect_increasing(|p| self.q_lower(p) - x, 0.0, 0.5, LEVEL_TOL);
            (p, 1.0 - p)
        } else {
            // q ↦ Q(1 − q) is decreasing, so bisect its negation.
            let q = bisect_increasing(|q| x - self.q_upper(q), 0.0, 0.5, LEVEL_TOL);
            (1.0 - q, q)
        }
    }

    /// GPD quantile at survival probability `e^{−s}`.
    fn gpd_upper(&self, s: f64) -> f64 {
        let Self::Gpd { xi, scale, threshold } = self else { unreachable!() };
        if *xi == 0.0 {
            threshold + scale * s
        } else {
            threshold + scale * (xi * s).exp_m1() / xi
        }
    }

    /// Density, absent for margins with atoms.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Self::Normal { mu, sigma } => Some(norm_pdf((x - mu) / sigma) / sigma),
            Self::LogNormal { mu, sigma } => {
                Some(if x <= 0.0 { 0.0 } else { norm_pdf((x.ln() - mu) / sigma) / (sigma * x) })
            }
            Self::StudentT { nu } => Some(t_pdf(*nu, x)),
            Self::Gamma { shape, scale } => Some(gamma_pdf(*shape, x / scale) / scale),
            Self::Gpd { xi, scale, threshold } => {
                if x < *threshold {
                    return Some(0.0);
                }
                let z = (x - threshold) / scale;
                let base = 1.0 + xi * z;
                if base <= 0.0 {
                    return Some(0.0);
                }
                Some(if *xi == 0.0 { (-z).exp() / scale } else { (-(1.0 / xi + 1.0) * base.ln()).exp() / scale })
            }
            Self::SemiParametric(_) | Self::Empirical(_) => None,
            Self::ShiftScale { base, loc, scale } => base.density((x - loc) / scale).map(|d| d / scale),
            Self::ComonotoneSum(c) => {
                // dQ/dp = Σ_i 1/f_i(Q_i(p)) at the level p = F(x).
                let (p, q) = self.sum_level(x);
                if p <= 0.0 || q <= 0.0 {
                    return Some(0.0);
                }
                let mut slope = 0.0;
                for m in c {
                    let xi = if p < 0.5 { m.q_lower(p) } else { m.q_upper(q) };
                    slope += 1.0 / m.density(xi)?;
                }
                Some(1.0 / slope)
            }
        }
    }

    /// `E[X]`.
    pub fn mean(&self) -> Result<f64> {
        self.require_upper_tail()?;
        self.require_lower_tail()?;
        Ok(match self {
            Self::Normal { mu, .. } => *mu,
            Self::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Self::StudentT { .. } => 0.0,
            Self::Gamma { shape, scale } => shape * scale,
            Self::Gpd { xi, scale, threshold } => threshold + scale / (1.0 - xi),
            Self::SemiParametric(s) => s.mean(&QuadSettings::default())?,
            Self::Empirical(e) => e.mean(),
            Self::ShiftScale { base, loc, scale } => loc + scale * base.mean()?,
            Self::ComonotoneSum(c) => c.iter().map(Self::mean).sum::<Result<f64>>()?,
        })
    }

    /// `ES_p = (1−p)⁻¹ ∫_p^1 VaR_t dt` for `p ∈ [0,1)`; `ES_0` is the mean.
    /// Closed forms where the family admits one, quadrature otherwise.
    pub fn es(&self, p: f64) -> Result<f64> {
        half_open_unit(p)?;
        if p == 0.0 {
            return self.mean();
        }
        self.require_upper_tail()?;
        let q = 1.0 - p;
        Ok(match self {
            Self::Normal { mu, sigma } => {
                let z = self.standard_quantile(p);
                mu + sigma * norm_pdf(z) / q
            }
            Self::LogNormal { mu, sigma } => {
                let z = self.standard_quantile(p);
                (mu + 0.5 * sigma * sigma).exp() * norm_cdf(sigma - z) / q
            }
            Self::StudentT { nu } => {
                let x = self.q_lower(p);
                (nu + x * x) / (nu - 1.0) * t_pdf(*nu, x) / q
            }
            Self::Gamma { shape, scale } => {
                let x = self.q_lower(p) / scale;
                shape * scale * gamma_q(shape + 1.0, x) / q
            }
            Self::Gpd { xi, scale, threshold } => {
                let v = self.q_lower(p);
                (v + scale - xi * threshold) / (1.0 - xi)
            }
            Self::SemiParametric(s) => s.es(p, &QuadSettings::default())?,
            Self::Empirical(_) => self.es_numeric(p, &QuadSettings::default())?,
            Self::ShiftScale { base, loc, scale } => loc + scale * base.es(p)?,
            Self::ComonotoneSum(c) => c.iter().map(|m| m.es(p)).sum::<Result<f64>>()?,
        })
    }

    /// `Φ⁻¹(p)` for the normal-based families, computed on the accurate side.
    fn standard_quantile(&self, p: f64) -> f64 {
        if p > 0.5 {
            norm_isf(1.0 - p)
        } else {
            norm_ppf(p)
        }
    }

    /// ES by direct quadrature of the quantile function (no closed form).
    pub fn es_numeric(&self, p: f64, settings: &QuadSettings) -> Result<f64> {
        half_open_unit(p)?;
        let r = self.integrate_quantile(p, &UnitWeight, settings)?;
        Ok(r.value / (1.0 - p))
    }

    /// `W_p = E[(X − VaR_p)_+] = (1−p)(ES_p − VaR_p)`.
    pub fn excess_wealth(&self, p: f64) -> Result<f64> {
        open_unit(p)?;
        let var = self.q_lower(p);
        let es = self.es(p)?;
        Ok(((1.0 - p) * (es - var)).max(0.0))
    }

    /// `EPW_p = E[((X − VaR_p)/VaR_p)_+]`. Equals `W_p / VaR_p` when
    /// `VaR_p > 0`; for `VaR_p < 0` the positive part selects the lower tail,
    /// giving `E[(VaR_p − X)_+] / |VaR_p|`.
    pub fn epw(&self, p: f64) -> Result<f64> {
        open_unit(p)?;
        let var = self.q_lower(p);
        if var == 0.0 {
            return Err(Error::ZeroQuantile(p));
        }
        if var > 0.0 {
            return Ok(self.excess_wealth(p)? / var);
        }
        // E[(VaR − X)_+] = p·VaR − ∫_0^p F⁻¹ = p·VaR − (E[X] − (1−p)·ES_p)
        let shortfall = p * var - (self.mean()? - (1.0 - p) * self.es(p)?);
        Ok(shortfall.max(0.0) / var.abs())
    }

    /// `∫_{t₀}^1 F⁻¹(t) w(t) dt`.
    pub fn integrate_quantile(&self, t0: f64, w: &dyn QuantileWeight, settings: &QuadSettings) -> Result<QuadResult> {
        half_open_unit(t0)?;
        self.require_upper_tail()?;
        if t0 == 0.0 {
            self.require_lower_tail()?;
        }
        Ok(match self {
            Self::ShiftScale { base, loc, scale } => {
                let mut r = base.integrate_quantile(t0, w, settings)?;
                r.value = loc * w.mass(t0, 1.0) + scale * r.value;
                r.abs_err *= scale;
                r
            }
            Self::Empirical(e) => {
                let value = atoms_integral(e.sorted(), 1, e.len(), e.len(), t0, w);
                QuadResult { value, abs_err: 0.0, evaluations: e.len(), converged: true }
            }
            Self::SemiParametric(s) => s.integrate_quantile(t0, w, settings),
            _ => continuous_quantile_integral(|t| self.q_lower(t), |q| self.q_upper(q), t0, 1.0, w, settings),
        })
    }
}

/// `Σ_k x_(k) ∫_{((k−1)/n, k/n] ∩ (t₀,1]} w` over ranks `k ∈ [first, last]` of a
/// type-1 empirical quantile on `n` points (`sorted[k−1] = x_(k)`).
pub(crate) fn atoms_integral(
    sorted: &[f64],
    first: usize,
    last: usize,
    n: usize,
    t0: f64,
    w: &dyn QuantileWeight,
) -> f64 {
    let nf = n as f64;
    let start = empirical_rank(n, t0).max(first);
    let mut total = 0.0;
    for k in start..=last {
        let a = ((k - 1) as f64 / nf).max(t0);
        let b = k as f64 / nf;
        if b > a {
            total += sorted[k - 1] * w.mass(a, b);
        }
    }
    total
}

/// `∫_{ta}^{tb} Q(t) w(t) dt` for a continuous quantile `Q` given on both
/// scales: `q_lo(t) = Q(t)` and `q_up(q) = Q(1 − q)`. The lower half uses
/// `t = e^{−r}` and the upper half `1 − t = e^{−s}`, which turns the
/// integrable endpoint singularities of `Q` into exponentially decaying tails.
pub(crate) fn continuous_quantile_integral<L, U>(
    q_lo: L,
    q_up: U,
    ta: f64,
    tb: f64,
    w: &dyn QuantileWeight,
    s: &QuadSettings,
) -> QuadResult
where
    L: Fn(f64) -> f64,
    U: Fn(f64) -> f64,
{
    let mut out = QuadResult { value: 0.0, abs_err: 0.0, evaluations: 0, converged: true };
    let mut add = |r: QuadResult| {
        out.value += r.value;
        out.abs_err += r.abs_err;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    };
    // Lower half: t ∈ [ta, min(tb, ½)], t = e^{−r}, dt = −e^{−r} dr.
    if ta < 0.5 && ta < tb {
        let hi_t = tb.min(0.5);
        let r_lo = -hi_t.ln();
        let f = |r: f64| {
            let t = (-r).exp();
            if t <= 0.0 {
                return 0.0;
            }
            let v = q_lo(t) * w.density(t, 1.0 - t) * t;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        if ta > 0.0 {
            add(integrate(f, r_lo, -ta.ln(), s));
        } else {
            add(integrate_to_limit(f, r_lo, s.max_exponent, s));
        }
    }
    // Upper half: t ∈ [max(ta, ½), tb], 1 − t = e^{−s}.
    if tb > 0.5 && ta < tb {
        let lo_t = ta.max(0.5);
        let s_lo = -(1.0 - lo_t).ln();
        let f = |sv: f64| {
            let q = (-sv).exp();
            if q <= 0.0 {
                return 0.0;
            }
            let v = q_up(q) * w.density(1.0 - q, q) * q;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        if tb < 1.0 {
            add(integrate(f, s_lo, -(1.0 - tb).ln(), s));
        } else {
            add(integrate_to_limit(f, s_lo, s.max_exponent, s));
        }
    }
    out
}

impl fmt::Display for MarginalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mu, sigma } => write!(f, "normal:{mu},{sigma}"),
            Self::LogNormal { mu, sigma } => write!(f, "lognormal:{mu},{sigma}"),
            Self::StudentT { nu } => write!(f, "t:{nu}"),
            Self::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
            Self::Gpd { xi, scale, threshold } => write!(f, "gpd:{xi},{scale},{threshold}"),
            Self::SemiParametric(s) => write!(f, "semiparametric(n={})", s.n()),
            Self::Empirical(e) => write!(f, "empirical(n={})", e.len()),
            Self::ShiftScale { base, loc, scale } => write!(f, "{loc}+{scale}*({base})"),
            Self::ComonotoneSum(c) => {
                write!(f, "comonotone(")?;
                for (i, m) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{m}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses `family:p1,p2,…`, e.g. `gamma:3,1.5`, `normal:0,1`, `t:4`,
/// `lognormal:0,1`, `gpd:0.2,1,0`.
impl FromStr for MarginalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = s.split_once(':').unwrap_or((s, ""));
        let values: Vec<f64> = if params.trim().is_empty() {
            Vec::new()
        } else {
            params
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("cannot parse `{v}` in `{s}`")))
                })
                .collect::<Result<_>>()?
        };
        let arity = |n: usize| {
            if values.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("`{family}` takes {n} parameters, got {}", values.len())))
            }
        };
        match family.trim().to_ascii_lowercase().as_str() {
            "normal" | "norm" => {
                arity(2)?;
                Self::normal(values[0], values[1])
            }
            "lognormal" | "lnorm" => {
                arity(2)?;
                Self::lognormal(values[0], values[1])
            }
            "t" | "student_t" | "studentt" => {
                arity(1)?;
                Self::student_t(values[0])
            }
            "gamma" | "gam" => {
                arity(2)?;
                Self::gamma(values[0], values[1])
            }
            "gpd" => {
                arity(3)?;
                Self::gpd(values[0], values[1], values[2])
            }
            other => Err(Error::InvalidParameter(format!("unknown marginal family `{other}`"))),
        }
    }
}

/// Strictly increasing probabilities in (0,1) used as an evaluation grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PGrid {
    points: Vec<f64>,
}

impl PGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("grid is empty".into()));
        }
        if points.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidParameter("grid points must lie in (0,1)".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `i/(n+1)` for `i = 1..=n`.
    pub fn uniform(n: usize) -> Self {
        Self { points: (1..=n).map(|i| i as f64 / (n + 1) as f64).collect() }
    }

    /// 199 uniform interior points `i/200` plus 20 log-spaced points in
    /// `[1e−7, 4e−3]` near each endpoint.
    pub fn order_default() -> Self {
        let mut pts: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
        let (lo, hi) = (1e-7_f64.ln(), 4e-3_f64.ln());
        for i in 0..20 {
            let e = (lo + (hi - lo) * i as f64 / 19.0).exp();
            pts.push(e);
            pts.push(1.0 - e);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Self { points: pts }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_rank_matches_cdf() {
        let e = EmpiricalMarginal::new(&(1..=10).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(e.quantile(0.9), 9.0);
        assert_eq!(e.quantile(0.90000001), 10.0);
        assert_eq!(e.quantile(0.05), 1.0);
        for &p in &[0.1, 0.2, 0.3, 0.7, 0.9] {
            let x = e.quantile(p);
            assert!(e.cdf(x) >= p);
            assert!(e.cdf(x - 0.5) < p);
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = PGrid::order_default();
        assert_eq!(g.len(), 239);
        assert!(PGrid::new(g.points().to_vec()).is_ok());
    }

    #[test]
    fn parse_and_display_round_trip() {
        let m: MarginalModel = "gamma:3,1.5".parse().unwrap();
        assert_eq!(m, MarginalModel::Gamma { shape: 3.0, scale: 1.5 });
        assert_eq!(m.to_string().parse::<MarginalModel>().unwrap(), m);
        assert!("gamma:3".parse::<MarginalModel>().is_err());
        assert!("gamma:-1,1".parse::<MarginalModel>().is_err());
    }
}
