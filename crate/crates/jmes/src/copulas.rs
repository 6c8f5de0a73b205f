//! Bivariate copulas: distribution and tail functions, the conditional law of
//! `U` given `V`, dependence summaries, sampling and maximum-likelihood fitting.
//!
//! The tail function is `C̄(u,v) = P(U > u, V > v) = 1 − u − v + C(u,v)`. The
//! elliptical and FGM families are radially symmetric, so their tail function
//! is evaluated as `C(1−u, 1−v)`, and Gumbel uses
//! `C̄ = (1−u) + (1−v) + expm1(−s)`; both forms keep full relative accuracy
//! when `C̄` is small.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{brent_min, nelder_mead};
use crate::quad::{integrate, QuadSettings};
use crate::rng::CounterRng;
use crate::special::{ln_gamma, norm_cdf, norm_isf, norm_pdf, norm_ppf, StudentT};

/// Step of the central difference used when no closed-form `∂₂C` exists.
pub const PARTIAL2_STEP: f64 = 1e-6;

/// A bivariate copula. Only `cdf` is required; the conditional derivative
/// falls back to a central difference of `cdf` in `v`.
pub trait Copula {
    /// `C(u, v)`.
    fn cdf(&self, u: f64, v: f64) -> f64;

    /// `C̄(u, v) = P(U > u, V > v)`.
    fn tail(&self, u: f64, v: f64) -> f64 {
        (1.0 - u - v + self.cdf(u, v)).clamp(0.0, 1.0)
    }

    /// `∂₂C(u, v) = P(U ≤ u | V = v)`.
    fn partial2(&self, u: f64, v: f64) -> f64 {
        let lo = (v - PARTIAL2_STEP).max(0.0);
        let hi = (v + PARTIAL2_STEP).min(1.0);
        ((self.cdf(u, hi) - self.cdf(u, lo)) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// `P(U > u | V = v)`, with `q = 1 − v` supplied accurately.
    fn exceed_given_v(&self, u: f64, v: f64, _q: f64) -> f64 {
        1.0 - self.partial2(u, v)
    }

    /// False when `partial2` is the finite-difference fallback.
    fn has_closed_partial2(&self) -> bool {
        false
    }
}

/// Copula families, in the order used to break AIC ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Independence,
    Comonotone,
    Fgm,
    Gumbel,
    Gaussian,
    StudentT,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 6] = [
        CopulaFamily::Independence,
        CopulaFamily::Comonotone,
        CopulaFamily::Fgm,
        CopulaFamily::Gumbel,
        CopulaFamily::Gaussian,
        CopulaFamily::StudentT,
    ];

    /// Number of free parameters (the `k` in AIC).
    pub fn n_params(self) -> usize {
        match self {
            Self::Independence | Self::Comonotone => 0,
            Self::Fgm | Self::Gumbel | Self::Gaussian => 1,
            Self::StudentT => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Independence => "independence",
            Self::Comonotone => "comonotone",
            Self::Fgm => "fgm",
            Self::Gumbel => "gumbel",
            Self::Gaussian => "gaussian",
            Self::StudentT => "t",
        }
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independence" | "indep" | "product" => Ok(Self::Independence),
            "comonotone" | "comonotonic" | "upper" => Ok(Self::Comonotone),
            "fgm" => Ok(Self::Fgm),
            "gumbel" => Ok(Self::Gumbel),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "t" | "student_t" | "studentt" | "student" => Ok(Self::StudentT),
            other => Err(Error::InvalidParameter(format!("unknown copula family '{other}'"))),
        }
    }
}

/// A parametric bivariate copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaModel {
    Independence,
    Comonotone,
    Fgm { theta: f64 },
    Gumbel { theta: f64 },
    Gaussian { rho: f64 },
    StudentT { rho: f64, nu: f64 },
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("correlation {rho} outside (-1, 1)")))
    }
}

/// Precision of the one-dimensional integral behind the elliptical cdfs.
fn cdf_quad() -> QuadSettings {
    QuadSettings { rel_tol: 1e-12, abs_tol: 0.0, max_intervals: 200, ..QuadSettings::default() }
}

/// Keeps a sampled coordinate strictly inside (0, 1).
fn open(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl CopulaModel {
    pub fn fgm(theta: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&theta) {
            Ok(Self::Fgm { theta })
        } else {
            Err(Error::InvalidParameter(format!("FGM theta {theta} outside [-1, 1]")))
        }
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        if theta >= 1.0 && theta.is_finite() {
            Ok(Self::Gumbel { theta })
        } else {
            Err(Error::InvalidParameter(format!("Gumbel theta {theta} must be finite and >= 1")))
        }
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self::Gaussian { rho })
    }

    pub fn student_t(rho: f64, nu: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("t copula nu {nu} must be positive and finite")));
        }
        Ok(Self::StudentT { rho, nu })
    }

    pub fn family(&self) -> CopulaFamily {
        match self {
            Self::Independence => CopulaFamily::Independence,
            Self::Comonotone => CopulaFamily::Comonotone,
            Self::Fgm { .. } => CopulaFamily::Fgm,
            Self::Gumbel { .. } => CopulaFamily::Gumbel,
            Self::Gaussian { .. } => CopulaFamily::Gaussian,
            Self::StudentT { .. } => CopulaFamily::StudentT,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::Independence | Self::Comonotone => vec![],
            Self::Fgm { theta } | Self::Gumbel { theta } => vec![theta],
            Self::Gaussian { rho } => vec![rho],
            Self::StudentT { rho, nu } => vec![rho, nu],
        }
    }

    /// `C(u, v)`.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        match *self {
            Self::Independence => u * v,
            Self::Comonotone => u.min(v),
            Self::Fgm { theta } => u * v * (1.0 + theta * (1.0 - u) * (1.0 - v)),
            Self::Gumbel { theta } => (-gumbel_s(theta, -u.ln(), -v.ln())).exp(),
            Self::Gaussian { rho } => gaussian_cdf(rho, u, v),
            Self::StudentT { rho, nu } => t_cdf2(rho, nu, u, v),
        }
    }

    /// `C̄(u, v) = P(U > u, V > v)`.
    pub fn tail(&self, u: f64, v: f64) -> f64 {
        if u >= 1.0 || v >= 1.0 {
            return 0.0;
        }
        if u <= 0.0 {
            return 1.0 - v.max(0.0);
        }
        if v <= 0.0 {
            return 1.0 - u;
        }
        match *self {
            Self::Independence => (1.0 - u) * (1.0 - v),
            Self::Comonotone => 1.0 - u.max(v),
            Self::Fgm { theta } => (1.0 - u) * (1.0 - v) * (1.0 + theta * u * v),
            Self::Gumbel { theta } => {
                let s = gumbel_s(theta, -u.ln(), -v.ln());
                ((1.0 - u) + (1.0 - v) + (-s).exp_m1()).clamp(0.0, 1.0)
            }
            // Radial symmetry: (U, V) and (1−U, 1−V) have the same law.
            Self::Gaussian { .. } | Self::StudentT { .. } => self.cdf(1.0 - u, 1.0 - v),
        }
    }

    /// `∂₂C(u, v) = P(U ≤ u | V = v)`.
    pub fn partial2(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        1.0 - self.exceed_given_v(u, v, 1.0 - v)
    }

    /// `P(U > u | V = v)` with `q = 1 − v` supplied separately, so the value
    /// stays accurate as `v → 1`.
    pub fn exceed_given_v(&self, u: f64, v: f64, q: f64) -> f64 {
        self.exceedance(u).eval(v, q)
    }

    /// `v ↦ P(U > u | V = v)` with the `u`-dependent work done once.
    pub fn exceedance(&self, u: f64) -> Exceedance {
        let kind = if u <= 0.0 {
            ExceedKind::Const(1.0)
        } else if u >= 1.0 {
            ExceedKind::Const(0.0)
        } else {
            match *self {
                Self::Independence => ExceedKind::Const(1.0 - u),
                Self::Comonotone => ExceedKind::Comonotone,
                Self::Fgm { theta } => ExceedKind::Fgm { theta },
                Self::Gumbel { theta } => ExceedKind::Gumbel { theta, x: -u.ln() },
                Self::Gaussian { rho: 0.0 } => ExceedKind::Const(1.0 - u),
                Self::Gaussian { rho } => {
                    let z_u = if u > 0.5 { norm_isf(1.0 - u) } else { norm_ppf(u) };
                    ExceedKind::Gaussian { rho, r: (1.0 - rho * rho).sqrt(), z_u }
                }
                Self::StudentT { rho, nu } => {
                    let t = StudentT::new(nu);
                    ExceedKind::StudentT { rho, nu, t, t1: StudentT::new(nu + 1.0), x_u: t.ppf(u) }
                }
            }
        };
        Exceedance { u, kind }
    }

    /// Kendall's τ.
    pub fn kendall_tau(&self) -> f64 {
        match *self {
            Self::Independence => 0.0,
            Self::Comonotone => 1.0,
            Self::Fgm { theta } => 2.0 * theta / 9.0,
            Self::Gumbel { theta } => 1.0 - 1.0 / theta,
            Self::Gaussian { rho } | Self::StudentT { rho, .. } => 2.0 / std::f64::consts::PI * rho.asin(),
        }
    }

    /// Tail-dependence coefficients `(λ_L, λ_U)`.
    pub fn tail_dependence(&self) -> (f64, f64) {
        match *self {
            Self::Comonotone => (1.0, 1.0),
            Self::Gumbel { theta } => (0.0, 2.0 - 2f64.powf(1.0 / theta)),
            Self::StudentT { rho, nu } => {
                let arg = ((nu + 1.0) * (1.0 - rho) / (1.0 + rho)).sqrt();
                let lambda = 2.0 * StudentT::new(nu + 1.0).cdf(-arg);
                (lambda, lambda)
            }
            _ => (0.0, 0.0),
        }
    }

    /// `ln c(u, v)`; `None` for the comonotone copula, which has no density.
    pub fn ln_density(&self, u: f64, v: f64) -> Option<f64> {
        Some(match *self {
            Self::Independence => 0.0,
            Self::Comonotone => return None,
            Self::Fgm { theta } => (theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)).ln_1p(),
            Self::Gumbel { theta } => gumbel_ln_density(theta, u, v),
            Self::Gaussian { rho } => gaussian_ln_density(rho, norm_ppf(u), norm_ppf(v)),
            Self::StudentT { rho, nu } => {
                let t = StudentT::new(nu);
                t_ln_density(rho, nu, &t, t.ppf(u), t.ppf(v))
            }
        })
    }

    /// `c(u, v)`.
    pub fn density(&self, u: f64, v: f64) -> Option<f64> {
        self.ln_density(u, v).map(f64::exp)
    }

    /// Conditional quantile: the `u` with `∂₂C(u, v) = w`.
    pub fn conditional_quantile(&self, w: f64, v: f64) -> f64 {
        match *self {
            Self::Independence => w,
            Self::Comonotone => v,
            Self::Fgm { theta } => {
                // u + k·u(1−u) = w with k = θ(1−2v); root of k u² − (1+k) u + w = 0.
                let k = theta * (1.0 - 2.0 * v);
                let b = 1.0 + k;
                2.0 * w / (b + (b * b - 4.0 * k * w).sqrt())
            }
            Self::Gumbel { theta } => gumbel_conditional_quantile(theta, w, v),
            Self::Gaussian { rho } => norm_cdf(rho * norm_ppf(v) + (1.0 - rho * rho).sqrt() * norm_ppf(w)),
            Self::StudentT { rho, nu } => {
                let t = StudentT::new(nu);
                let x_v = t.ppf(v);
                let scale = ((1.0 - rho * rho) * (nu + x_v * x_v) / (nu + 1.0)).sqrt();
                t.cdf(rho * x_v + scale * StudentT::new(nu + 1.0).ppf(w))
            }
        }
    }

    /// One draw by conditional inversion: `V` uniform, then `U = ∂₂C⁻¹(W | V)`.
    pub fn draw(&self, rng: &mut CounterRng) -> (f64, f64) {
        let v = rng.uniform();
        let w = rng.uniform();
        (open(self.conditional_quantile(w, v)), v)
    }

    /// `n` draws from the stream keyed by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> PseudoSample {
        let mut rng = CounterRng::new(seed);
        PseudoSample { pairs: (0..n).map(|_| self.draw(&mut rng)).collect() }
    }
}

impl Copula for CopulaModel {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        CopulaModel::cdf(self, u, v)
    }
    fn tail(&self, u: f64, v: f64) -> f64 {
        CopulaModel::tail(self, u, v)
    }
    fn partial2(&self, u: f64, v: f64) -> f64 {
        CopulaModel::partial2(self, u, v)
    }
    fn exceed_given_v(&self, u: f64, v: f64, q: f64) -> f64 {
        CopulaModel::exceed_given_v(self, u, v, q)
    }
    fn has_closed_partial2(&self) -> bool {
        true
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Independence => write!(f, "independence"),
            Self::Comonotone => write!(f, "comonotone"),
            Self::Fgm { theta } => write!(f, "fgm:{theta}"),
            Self::Gumbel { theta } => write!(f, "gumbel:{theta}"),
            Self::Gaussian { rho } => write!(f, "gaussian:{rho}"),
            Self::StudentT { rho, nu } => write!(f, "t:{rho},{nu}"),
        }
    }
}

impl FromStr for CopulaModel {
    type Err = Error;

    /// Parses `family[:p1[,p2]]`, e.g. `gumbel:3`, `t:0.5,4`, `independence`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, a),
            None => (s, ""),
        };
        let family: CopulaFamily = name.parse()?;
        let params: Vec<f64> = if args.trim().is_empty() {
            vec![]
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("bad copula parameter '{a}' in '{s}'")))
                })
                .collect::<Result<_>>()?
        };
        if params.len() != family.n_params() {
            return Err(Error::InvalidParameter(format!(
                "{family} copula takes {} parameter(s), got {} in '{s}'",
                family.n_params(),
                params.len()
            )));
        }
        match family {
            CopulaFamily::Independence => Ok(Self::Independence),
            CopulaFamily::Comonotone => Ok(Self::Comonotone),
            CopulaFamily::Fgm => Self::fgm(params[0]),
            CopulaFamily::Gumbel => Self::gumbel(params[0]),
            CopulaFamily::Gaussian => Self::gaussian(params[0]),
            CopulaFamily::StudentT => Self::student_t(params[0], params[1]),
        }
    }
}

/// `v ↦ P(U > u | V = v)` for a fixed `u`; see [`CopulaModel::exceedance`].
#[derive(Debug, Clone, Copy)]
pub struct Exceedance {
    u: f64,
    kind: ExceedKind,
}

#[derive(Debug, Clone, Copy)]
enum ExceedKind {
    Const(f64),
    Comonotone,
    Fgm { theta: f64 },
    Gumbel { theta: f64, x: f64 },
    Gaussian { rho: f64, r: f64, z_u: f64 },
    StudentT { rho: f64, nu: f64, t: StudentT, t1: StudentT, x_u: f64 },
}

impl Exceedance {
    /// `P(U > u | V = v)` where `q = 1 − v`.
    pub fn eval(&self, v: f64, q: f64) -> f64 {
        let u = self.u;
        match self.kind {
            ExceedKind::Const(c) => c,
            ExceedKind::Comonotone => {
                if v > u {
                    1.0
                } else {
                    0.0
                }
            }
            ExceedKind::Fgm { theta } => (1.0 - u) * (1.0 - theta * u * (2.0 * q - 1.0)),
            ExceedKind::Gumbel { theta, x } => {
                if q <= 0.0 {
                    return if theta > 1.0 { 1.0 } else { 1.0 - u };
                }
                if v <= 0.0 {
                    return if theta > 1.0 { 0.0 } else { 1.0 - u };
                }
                let y = if v > 0.5 { -(-q).ln_1p() } else { -v.ln() };
                1.0 - gumbel_partial2(theta, x, y)
            }
            ExceedKind::Gaussian { rho, r, z_u } => {
                let z_v = if v > 0.5 { norm_isf(q) } else { norm_ppf(v) };
                if z_v.is_infinite() {
                    return if (z_v > 0.0) == (rho > 0.0) { 1.0 } else { 0.0 };
                }
                norm_cdf((rho * z_v - z_u) / r)
            }
            ExceedKind::StudentT { rho, nu, t, t1, x_u } => {
                let x_v = if v > 0.5 { t.isf(q) } else { t.ppf(v) };
                let scale = (1.0 - rho * rho).sqrt() / (nu + 1.0).sqrt();
                if x_v.is_infinite() {
                    // (x_u − ρ x_v)/√(ν + x_v²) → −ρ·sign(x_v)
                    return t1.sf(-rho * x_v.signum() / scale);
                }
                let spread = nu.sqrt().hypot(x_v);
                t1.sf((x_u - rho * x_v) / (spread * scale))
            }
        }
    }
}

/// `s = (x^θ + y^θ)^{1/θ}` evaluated without overflow.
fn gumbel_s(theta: f64, x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == 0.0 {
        return 0.0;
    }
    if hi.is_infinite() {
        return f64::INFINITY;
    }
    hi * ((lo / hi).powf(theta).ln_1p() / theta).exp()
}

/// Gumbel `∂₂C = e^{y−s} (y/s)^{θ−1}` with `x = −ln u`, `y = −ln v`.
fn gumbel_partial2(theta: f64, x: f64, y: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let r = (x.min(y) / x.max(y)).powf(theta);
    let growth = (r.ln_1p() / theta).exp_m1();
    // s − y ≥ 0, formed without cancellation when y is the larger argument.
    let (s, s_minus_y) = if y >= x {
        (y * (1.0 + growth), y * growth)
    } else {
        let s = x * (1.0 + growth);
        (s, s - y)
    };
    (-s_minus_y).exp() * (y / s).powf(theta - 1.0)
}

fn gumbel_ln_density(theta: f64, u: f64, v: f64) -> f64 {
    let x = -u.ln();
    let y = -v.ln();
    let s = gumbel_s(theta, x, y);
    -s + x + y + (theta - 1.0) * (x.ln() + y.ln()) + (1.0 - 2.0 * theta) * s.ln() + (s + theta - 1.0).ln()
}

/// Solves `∂₂C(u, v) = w` for the Gumbel copula. With `y = −ln v` and
/// `s = (x^θ + y^θ)^{1/θ}` the equation reads
/// `s + (θ−1) ln s = y + (θ−1) ln y − ln w`, increasing in `s ≥ y`; it is
/// solved by Newton iterations in `ln s` safeguarded by bisection.
fn gumbel_conditional_quantile(theta: f64, w: f64, v: f64) -> f64 {
    let y = -v.ln();
    if theta == 1.0 {
        return w;
    }
    let k = theta - 1.0;
    let c = y + k * y.ln() - w.ln();
    let g = |z: f64| z.exp() + k * z - c;
    let mut lo = y.ln();
    let mut hi = y.max(c).max(1.0).ln();
    let mut z = hi;
    for _ in 0..100 {
        let gz = g(z);
        if gz > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let step = gz / (z.exp() + k);
        let mut next = z - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            z = next;
            break;
        }
        z = next;
    }
    let s = z.exp();
    // x = (s^θ − y^θ)^{1/θ}
    let x = s * ((-(y / s).powf(theta)).ln_1p() / theta).exp();
    (-x).exp()
}

/// `C(u, v) = ∫_{−∞}^{z_a} φ(x) Φ((z_b − ρx)/√(1−ρ²)) dx` with `a = min(u,v)`,
/// `b = max(u,v)` (the conditional-normal form, symmetric by construction).
fn gaussian_cdf(rho: f64, u: f64, v: f64) -> f64 {
    if rho == 0.0 {
        return u * v;
    }
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    let za = if a > 0.5 { norm_isf(1.0 - a) } else { norm_ppf(a) };
    let zb = if b > 0.5 { norm_isf(1.0 - b) } else { norm_ppf(b) };
    let r = (1.0 - rho * rho).sqrt();
    lower_half_line(za, |x| norm_pdf(x) * norm_cdf((zb - rho * x) / r)).clamp(0.0, a)
}

/// Student t analogue of [`gaussian_cdf`] with the conditional `t_{ν+1}` law.
fn t_cdf2(rho: f64, nu: f64, u: f64, v: f64) -> f64 {
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    let t = StudentT::new(nu);
    let t1 = StudentT::new(nu + 1.0);
    let xa = t.ppf(a);
    let xb = t.ppf(b);
    let c = (1.0 - rho * rho).sqrt() / (nu + 1.0).sqrt();
    lower_half_line(xa, |x| {
        let spread = nu.sqrt().hypot(x);
        t.pdf(x) * t1.cdf((xb - rho * x) / (spread * c))
    })
    .clamp(0.0, a)
}

/// `∫_{−∞}^{top} f(x) dx` through `x = top − (1 − z)/z`, `z ∈ (0, 1]`.
fn lower_half_line<F: Fn(f64) -> f64>(top: f64, f: F) -> f64 {
    if top == f64::NEG_INFINITY {
        return 0.0;
    }
    let g = |z: f64| {
        if z <= 0.0 {
            return 0.0;
        }
        let x = top - (1.0 - z) / z;
        let val = f(x) / (z * z);
        if val.is_finite() {
            val
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, &cdf_quad()).value
}

fn gaussian_ln_density(rho: f64, a: f64, b: f64) -> f64 {
    let d = 1.0 - rho * rho;
    -0.5 * d.ln() - (rho * rho * (a * a + b * b) - 2.0 * rho * a * b) / (2.0 * d)
}

fn t_ln_density(rho: f64, nu: f64, t: &StudentT, a: f64, b: f64) -> f64 {
    let d = 1.0 - rho * rho;
    let ln_f2 = ln_gamma(0.5 * (nu + 2.0))
        - ln_gamma(0.5 * nu)
        - (nu * std::f64::consts::PI).ln()
        - 0.5 * d.ln()
        - 0.5 * (nu + 2.0) * ((a * a - 2.0 * rho * a * b + b * b) / (nu * d)).ln_1p();
    ln_f2 - t.ln_pdf(a) - t.ln_pdf(b)
}

/// Pseudo-observations: pairs strictly inside the open unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    pairs: Vec<(f64, f64)>,
}

impl PseudoSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        for &(u, v) in &pairs {
            for p in [u, v] {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Domain { value: p, domain: "(0,1)" });
                }
            }
        }
        Ok(Self { pairs })
    }

    /// Rank transform `R_i/(n+1)` of each coordinate (ties get average ranks).
    pub fn from_ranks(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidParameter(format!("coordinate lengths differ: {} vs {}", x.len(), y.len())));
        }
        let (u, v) = (scaled_ranks(x), scaled_ranks(y));
        Self::new(u.into_iter().zip(v).collect())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Sample Kendall τ (tau-b).
    pub fn kendall_tau(&self) -> f64 {
        empirical_kendall_tau(&self.pairs)
    }
}

/// Average ranks divided by `n + 1`.
pub fn scaled_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        // ranks i+1..=j share their average
        let rank = 0.5 * ((i + 1) + j) as f64;
        for &k in &idx[i..j] {
            out[k] = rank / (n + 1) as f64;
        }
        i = j;
    }
    out
}

/// Kendall's tau-b in `O(n log n)` (Knight's merge-sort algorithm).
pub fn empirical_kendall_tau(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut p = pairs.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let pairs_in = |t: u64| t * (t.saturating_sub(1)) / 2;
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && p[j].0 == p[i].0 {
            j += 1;
        }
        tied_x += pairs_in((j - i) as u64);
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && p[l].1 == p[k].1 {
                l += 1;
            }
            tied_xy += pairs_in((l - k) as u64);
            k = l;
        }
        i = j;
    }
    let mut ys: Vec<f64> = p.iter().map(|q| q.1).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);
    let mut tied_y = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        tied_y += pairs_in((j - i) as u64);
        i = j;
    }
    let total = pairs_in(n as u64);
    let s = total as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    let denom = ((total - tied_x) as f64 * (total - tied_y) as f64).sqrt();
    if denom == 0.0 {
        f64::NAN
    } else {
        s / denom
    }
}

/// Sorts `a` and returns the number of strict inversions.
fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = a.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[i] <= a[j] {
            buf[k] = a[i];
            i += 1;
        } else {
            buf[k] = a[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&a[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&buf[..n]);
    count
}

/// Minimum sample size accepted by [`fit_mle`].
pub const MIN_FIT_SIZE: usize = 50;

/// Bounds of the t copula's degrees of freedom during fitting.
pub const T_NU_RANGE: (f64, f64) = (2.0, 30.0);

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopulaFit {
    pub model: CopulaModel,
    pub loglik: f64,
    pub aic: f64,
    pub n_params: usize,
    pub iterations: usize,
}

impl CopulaFit {
    fn new(model: CopulaModel, loglik: f64, iterations: usize) -> Self {
        let k = model.family().n_params();
        Self { model, loglik, aic: 2.0 * k as f64 - 2.0 * loglik, n_params: k, iterations }
    }
}

/// Log-likelihood of `model` on `data`; `None` for the comonotone copula.
pub fn loglik(model: &CopulaModel, data: &PseudoSample) -> Option<f64> {
    match *model {
        CopulaModel::Comonotone => None,
        CopulaModel::Independence => Some(0.0),
        CopulaModel::Gaussian { rho } => Some(NormalScores::new(data).loglik(rho)),
        CopulaModel::StudentT { rho, nu } => Some(t_loglik(data, rho, nu)),
        _ => data.pairs.iter().map(|&(u, v)| model.ln_density(u, v)).sum(),
    }
}

struct NormalScores {
    n: f64,
    sum_sq: f64,
    sum_cross: f64,
}

impl NormalScores {
    fn new(data: &PseudoSample) -> Self {
        let (mut sum_sq, mut sum_cross) = (0.0, 0.0);
        for &(u, v) in &data.pairs {
            let (a, b) = (norm_ppf(u), norm_ppf(v));
            sum_sq += a * a + b * b;
            sum_cross += a * b;
        }
        Self { n: data.len() as f64, sum_sq, sum_cross }
    }

    fn loglik(&self, rho: f64) -> f64 {
        let d = 1.0 - rho * rho;
        -0.5 * self.n * d.ln() - (rho * rho * self.sum_sq - 2.0 * rho * self.sum_cross) / (2.0 * d)
    }
}

fn t_loglik(data: &PseudoSample, rho: f64, nu: f64) -> f64 {
    let t = StudentT::new(nu);
    data.pairs.iter().map(|&(u, v)| t_ln_density(rho, nu, &t, t.ppf(u), t.ppf(v))).sum()
}

fn non_convergence(what: &str, best: Vec<f64>, objective: f64) -> Error {
    Error::NonConvergence { what: what.to_string(), best, objective }
}

/// Maximum-likelihood fit of one family. Brent's method for one-parameter
/// families; Nelder–Mead on `(atanh ρ, logit((ν−2)/28))` for the t copula.
pub fn fit_mle(family: CopulaFamily, data: &PseudoSample) -> Result<CopulaFit> {
    if data.len() < MIN_FIT_SIZE {
        return Err(Error::InsufficientData { needed: MIN_FIT_SIZE, got: data.len() });
    }
    const TOL: f64 = 1e-10;
    match family {
        CopulaFamily::Independence => Ok(CopulaFit::new(CopulaModel::Independence, 0.0, 0)),
        CopulaFamily::Comonotone => Err(Error::DensityUnavailable("comonotone copula".into())),
        CopulaFamily::Fgm => {
            let nll = |theta: f64| -> f64 {
                -data.pairs.iter().map(|&(u, v)| (theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)).ln_1p()).sum::<f64>()
            };
            let m = brent_min(nll, -1.0, 1.0, TOL, 200);
            one_param_result("FGM MLE", m, nll(0.0), 0.0, CopulaModel::fgm)
        }
        CopulaFamily::Gumbel => {
            let nll =
                |theta: f64| -> f64 { -data.pairs.iter().map(|&(u, v)| gumbel_ln_density(theta, u, v)).sum::<f64>() };
            let tau = data.kendall_tau();
            let start = if tau > 0.0 && tau < 0.98 { 1.0 / (1.0 - tau) } else { 1.0 };
            let m = brent_min(nll, 1.0, 50.0, TOL, 200);
            one_param_result("Gumbel MLE", m, nll(start), start, CopulaModel::gumbel)
        }
        CopulaFamily::Gaussian => {
            let scores = NormalScores::new(data);
            let nll = |rho: f64| -scores.loglik(rho);
            let start = (std::f64::consts::FRAC_PI_2 * data.kendall_tau()).sin().clamp(-0.99, 0.99);
            let m = brent_min(nll, -0.9999, 0.9999, TOL, 200);
            one_param_result("Gaussian MLE", m, nll(start), start, CopulaModel::gaussian)
        }
        CopulaFamily::StudentT => {
            let (lo, hi) = T_NU_RANGE;
            let decode = |p: &[f64]| -> (f64, f64) {
                let rho = p[0].tanh().clamp(-0.9999, 0.9999);
                let nu = lo + (hi - lo) / (1.0 + (-p[1]).exp());
                (rho, nu)
            };
            let nll = |p: &[f64]| -> f64 {
                let (rho, nu) = decode(p);
                -t_loglik(data, rho, nu)
            };
            let rho0 = (std::f64::consts::FRAC_PI_2 * data.kendall_tau()).sin().clamp(-0.95, 0.95);
            let nu0: f64 = 8.0;
            let x0 = [rho0.atanh(), ((nu0 - lo) / (hi - nu0)).ln()];
            let init = nll(&x0);
            let m = nelder_mead(nll, &x0, 0.3, TOL, 600);
            let (best, value) = if m.value <= init { (m.x.clone(), m.value) } else { (x0.to_vec(), init) };
            let (rho, nu) = decode(&best);
            if !m.converged {
                return Err(non_convergence("t copula MLE", vec![rho, nu], -value));
            }
            Ok(CopulaFit::new(CopulaModel::student_t(rho, nu)?, -value, m.iterations))
        }
    }
}

fn one_param_result(
    what: &str,
    m: crate::optim::Minimum,
    init_value: f64,
    init: f64,
    build: fn(f64) -> Result<CopulaModel>,
) -> Result<CopulaFit> {
    let (x, value) = if m.value <= init_value { (m.x[0], m.value) } else { (init, init_value) };
    if !m.converged {
        return Err(non_convergence(what, vec![x], -value));
    }
    Ok(CopulaFit::new(build(x)?, -value, m.iterations))
}

/// One candidate's outcome in [`aic_select`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateFit {
    pub family: CopulaFamily,
    pub fit: Option<CopulaFit>,
    pub error: Option<String>,
}

/// AIC-based model choice over a candidate list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AicSelection {
    pub best: CopulaFit,
    pub candidates: Vec<CandidateFit>,
    /// One entry per candidate excluded because its fit failed.
    pub warnings: Vec<String>,
}

/// Fits every candidate family and returns the smallest AIC. Candidates are
/// visited in [`CopulaFamily`] order and only a strictly smaller AIC replaces
/// the incumbent, so ties go to the earlier family. Failed fits are excluded
/// with a warning; if every fit fails the first error is returned.
pub fn aic_select(candidates: &[CopulaFamily], data: &PseudoSample) -> Result<AicSelection> {
    let mut families = candidates.to_vec();
    families.sort();
    families.dedup();
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    let mut best: Option<CopulaFit> = None;
    let mut first_err = None;
    for family in families {
        match fit_mle(family, data) {
            Ok(fit) => {
                if best.as_ref().map_or(true, |b| fit.aic < b.aic) {
                    best = Some(fit.clone());
                }
                out.push(CandidateFit { family, fit: Some(fit), error: None });
            }
            Err(e) => {
                warnings.push(format!("{family} excluded: {e}"));
                out.push(CandidateFit { family, fit: None, error: Some(e.to_string()) });
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(best) => Ok(AicSelection { best, candidates: out, warnings }),
        None => Err(first_err.unwrap_or_else(|| Error::InvalidParameter("empty candidate list".into()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gumbel_s_matches_direct_formula() {
        let (x, y, th) = (0.7_f64, 1.9_f64, 2.5_f64);
        let direct = (x.powf(th) + y.powf(th)).powf(1.0 / th);
        assert!((gumbel_s(th, x, y) - direct).abs() < 1e-14);
        assert_eq!(gumbel_s(3.0, 0.0, 0.0), 0.0);
        assert!(gumbel_s(3.0, 700.0, 650.0).is_finite());
    }

    #[test]
    fn merge_count_counts_strict_inversions() {
        let mut a = [3.0, 1.0, 2.0, 2.0, 0.0];
        let mut b = [0.0; 5];
        assert_eq!(merge_count(&mut a, &mut b), 7);
        assert_eq!(a, [0.0, 1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn scaled_ranks_average_ties() {
        assert_eq!(scaled_ranks(&[10.0, 30.0, 20.0, 20.0]), vec![0.2, 0.8, 0.5, 0.5]);
    }
}
