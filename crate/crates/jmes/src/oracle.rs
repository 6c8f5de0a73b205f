//! Monte Carlo estimators of the conditional risk measures, independent of the
//! quadrature path.
//!
//! Pairs `(U, V)` are drawn from latent stochastic representations of each
//! copula (never through `∂₂C` or its inverse):
//!
//! * Gaussian: `(Z₁, ρZ₁ + √(1−ρ²)Z₂)` for independent standard normals;
//! * Student t: the Gaussian pair divided by `√(W/ν)`, `W ~ χ²_ν`;
//! * Gumbel: Marshall–Olkin, `U = exp(−(E₁/S)^{1/θ})` with `E₁, E₂ ~ Exp(1)`
//!   and `S` positive stable with Laplace transform `exp(−s^{1/θ})`
//!   (Kanter's representation);
//! * FGM: acceptance–rejection from the density `1 + θ(1−2u)(1−2v)`.
//!
//! The events `{U > α}` and `{V > β}` are tested on the latent scale against
//! exact thresholds, and `Y = G⁻¹(V)` is evaluated only for retained draws,
//! with `1 − V` carried separately so upper quantiles keep full accuracy.
//!
//! Draw `i` uses substream `⌊i / 2¹⁶⌋` of the seed (see
//! [`CounterRng::stream`]), so estimates are reproducible bit for bit and
//! blocks can be generated independently.

use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::copulas::CopulaModel;
use crate::distributions::{empirical_rank, MarginalModel};
use crate::error::{half_open_unit, open_unit, Error, Result};
use crate::measures::{BivariateModel, Measure};
use crate::rng::{mix64, CounterRng};
use crate::special::{norm_isf, norm_ppf, norm_sf, StudentT};

/// Draws per substream.
pub const BLOCK_SIZE: u64 = 1 << 16;

/// Smallest admissible total sample size.
pub const MIN_SAMPLES: usize = 10_000;

/// Smallest admissible expected number of conditional draws.
pub const MIN_CONDITIONAL: f64 = 100.0;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_total: usize,
    /// Draws that survived the conditioning event.
    pub n_conditional: usize,
    pub seed: u64,
}

/// Latent representation of a copula with thresholds on the latent scale.
#[derive(Debug, Clone, Copy)]
enum Latent {
    Uniform,
    Comonotone,
    Fgm { theta: f64 },
    Gaussian { rho: f64, r: f64 },
    StudentT { rho: f64, r: f64, nu: f64, t: StudentT, chi: ChiSquared<f64> },
    Gumbel { inv_theta: f64 },
}

impl Latent {
    fn new(c: &CopulaModel) -> Self {
        match *c {
            CopulaModel::Independence => Self::Uniform,
            CopulaModel::Comonotone => Self::Comonotone,
            CopulaModel::Fgm { theta } => Self::Fgm { theta },
            CopulaModel::Gaussian { rho } => Self::Gaussian { rho, r: (1.0 - rho * rho).sqrt() },
            CopulaModel::StudentT { rho, nu } => Self::StudentT {
                rho,
                r: (1.0 - rho * rho).sqrt(),
                nu,
                t: StudentT::new(nu),
                chi: ChiSquared::new(nu).expect("nu > 0 is validated by the copula"),
            },
            CopulaModel::Gumbel { theta } => Self::Gumbel { inv_theta: 1.0 / theta },
        }
    }

    /// Latent value `ℓ` of the first coordinate with `U > p ⟺ ℓ > threshold(p)`.
    fn threshold(&self, p: f64) -> f64 {
        match *self {
            Self::Uniform | Self::Comonotone | Self::Fgm { .. } => p,
            Self::Gaussian { .. } => {
                if p > 0.5 {
                    norm_isf(1.0 - p)
                } else {
                    norm_ppf(p)
                }
            }
            Self::StudentT { t, .. } => t.ppf(p),
            // ℓ = −(−ln U)^θ is increasing in U.
            Self::Gumbel { inv_theta } => {
                if p <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -(-p.ln()).powf(1.0 / inv_theta)
                }
            }
        }
    }

    /// One latent pair `(ℓ_U, ℓ_V)`.
    fn draw(&self, rng: &mut CounterRng) -> (f64, f64) {
        match *self {
            Self::Uniform => (rng.uniform(), rng.uniform()),
            Self::Comonotone => {
                let u = rng.uniform();
                (u, u)
            }
            Self::Fgm { theta } => loop {
                let (u, v) = (rng.uniform(), rng.uniform());
                let accept = rng.uniform() * (1.0 + theta.abs());
                if accept <= 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v) {
                    break (u, v);
                }
            },
            Self::Gaussian { rho, r } => {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                (z1, rho * z1 + r * z2)
            }
            Self::StudentT { rho, r, nu, chi, .. } => {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                let w = (chi.sample(rng) / nu).sqrt();
                (z1 / w, (rho * z1 + r * z2) / w)
            }
            Self::Gumbel { inv_theta } => {
                let s = positive_stable(inv_theta, rng);
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                // (−ln U)^θ = E/S
                (-(e1 / s), -(e2 / s))
            }
        }
    }

    /// `(V, 1 − V)` from the second latent coordinate.
    fn uniform_pair(&self, l: f64) -> (f64, f64) {
        match *self {
            Self::Uniform | Self::Comonotone | Self::Fgm { .. } => (l, 1.0 - l),
            Self::Gaussian { .. } => {
                let q = norm_sf(l);
                (1.0 - q, q)
            }
            Self::StudentT { t, .. } => {
                let q = t.sf(l);
                (1.0 - q, q)
            }
            Self::Gumbel { inv_theta } => {
                // V = exp(−(−ℓ)^{1/θ})
                let x = (-l).powf(inv_theta);
                ((-x).exp(), -(-x).exp_m1())
            }
        }
    }
}

/// Positive stable variate with Laplace transform `exp(−s^a)`, `0 < a ≤ 1`,
/// by Kanter's representation
/// `S = sin(aW)/sin(W)^{1/a} · (sin((1−a)W)/E)^{(1−a)/a}`, `W ~ U(0,π)`,
/// `E ~ Exp(1)`.
pub fn positive_stable(a: f64, rng: &mut CounterRng) -> f64 {
    if a >= 1.0 {
        return 1.0;
    }
    let w = std::f64::consts::PI * rng.uniform();
    let e: f64 = Exp1.sample(rng);
    let left = (a * w).sin() / w.sin().powf(1.0 / a);
    let right = (((1.0 - a) * w).sin() / e).powf((1.0 - a) / a);
    left * right
}

/// Tail complements `1 − V` of all draws with `U > α`, from `n` draws.
#[derive(Debug, Clone)]
pub struct ConditionalSample {
    alpha: f64,
    /// `1 − V` for each retained draw.
    q: Vec<f64>,
    n_total: usize,
    seed: u64,
}

impl ConditionalSample {
    /// Draws `n` pairs from `copula` with `seed` and keeps those with `U > α`.
    pub fn simulate(copula: &CopulaModel, alpha: f64, n: usize, seed: u64) -> Result<Self> {
        half_open_unit(alpha)?;
        if n < MIN_SAMPLES {
            return Err(Error::InsufficientData { needed: MIN_SAMPLES, got: n });
        }
        let latent = Latent::new(copula);
        let threshold = latent.threshold(alpha);
        let mut q = Vec::with_capacity(((1.0 - alpha) * n as f64 * 1.01) as usize + 16);
        let mut done = 0u64;
        let mut block = 0u64;
        while done < n as u64 {
            let mut rng = CounterRng::stream(seed, block);
            let len = BLOCK_SIZE.min(n as u64 - done);
            for _ in 0..len {
                let (lu, lv) = latent.draw(&mut rng);
                if lu > threshold {
                    q.push(latent.uniform_pair(lv).1);
                }
            }
            done += len;
            block += 1;
        }
        Ok(Self { alpha, q, n_total: n, seed })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n_conditional(&self) -> usize {
        self.q.len()
    }

    fn estimate(&self, value: f64, std_error: f64, n_conditional: usize) -> McEstimate {
        McEstimate { value, std_error, n_total: self.n_total, n_conditional, seed: self.seed }
    }

    fn require(&self, expected_fraction: f64) -> Result<()> {
        let expected = expected_fraction * self.n_total as f64;
        if expected < MIN_CONDITIONAL {
            Err(Error::InsufficientTailSamples { expected })
        } else {
            Ok(())
        }
    }

    /// `E[Y | U > α]`.
    pub fn mes(&self, y: &MarginalModel) -> Result<McEstimate> {
        self.require(1.0 - self.alpha)?;
        let (mean, se) = mean_se(self.q.iter().map(|&q| quantile_of_complement(y, q)));
        Ok(self.estimate(mean, se, self.q.len()))
    }

    /// `E[Y | U > α, V > β]`.
    pub fn jmes(&self, copula: &CopulaModel, y: &MarginalModel, beta: f64) -> Result<McEstimate> {
        half_open_unit(beta)?;
        self.require(copula.tail(self.alpha, beta))?;
        let cut = 1.0 - beta;
        let kept: Vec<f64> = self.q.iter().copied().filter(|&q| q < cut).collect();
        let (mean, se) = mean_se(kept.iter().map(|&q| quantile_of_complement(y, q)));
        Ok(self.estimate(mean, se, kept.len()))
    }

    /// Ascending `1 − V` of the retained draws and the index of the
    /// conditional `β`-quantile of `V` in it.
    fn sorted_with_rank(&self, beta: f64) -> Result<(Vec<f64>, usize)> {
        open_unit(beta)?;
        self.require((1.0 - self.alpha) * (1.0 - beta))?;
        let m = self.q.len();
        if m == 0 {
            return Err(Error::InsufficientTailSamples { expected: 0.0 });
        }
        let mut sorted = self.q.clone();
        sorted.sort_by(f64::total_cmp);
        // V_(k) with k the type-1 rank of β among m draws is 1 − q_(m−k+1).
        let k = empirical_rank(m, beta);
        Ok((sorted, m - k))
    }

    /// `VaR_β[Y | U > α]` by the conditional order statistic; the standard
    /// error is half the spread of the order statistics one binomial standard
    /// deviation `√(mβ(1−β))` either side.
    pub fn covar(&self, y: &MarginalModel, beta: f64) -> Result<McEstimate> {
        let (sorted, idx) = self.sorted_with_rank(beta)?;
        let m = sorted.len();
        let delta = ((m as f64 * beta * (1.0 - beta)).sqrt().ceil() as usize).max(1);
        let lo = idx.saturating_sub(delta);
        let hi = (idx + delta).min(m - 1);
        let value = quantile_of_complement(y, sorted[idx]);
        let band = quantile_of_complement(y, sorted[lo]) - quantile_of_complement(y, sorted[hi]);
        Ok(self.estimate(value, 0.5 * band.abs(), m))
    }

    /// `CoES_{α,β}`: mean of `Y` over retained draws with `V` at or above the
    /// conditional `β`-quantile. Standard error from
    /// `Var((Y − CoVaR)_+) / (m(1−β)²)`.
    pub fn coes(&self, y: &MarginalModel, beta: f64) -> Result<McEstimate> {
        let (sorted, idx) = self.sorted_with_rank(beta)?;
        let m = sorted.len();
        let top: Vec<f64> = sorted[..=idx].iter().map(|&q| quantile_of_complement(y, q)).collect();
        let var_level = top[idx];
        let value = top.iter().sum::<f64>() / top.len() as f64;
        // excesses over the order statistic, zero for the other m − |top| draws
        let (s1, s2) = top.iter().fold((0.0, 0.0), |(a, b), &v| {
            let e = v - var_level;
            (a + e, b + e * e)
        });
        let mf = m as f64;
        let var = (s2 / mf - (s1 / mf).powi(2)).max(0.0) * mf / (mf - 1.0).max(1.0);
        let se = var.sqrt() / (mf.sqrt() * (1.0 - beta));
        Ok(self.estimate(value, se, top.len()))
    }
}

/// `G⁻¹(1 − q)`, using the upper-tail form for small `q`.
fn quantile_of_complement(y: &MarginalModel, q: f64) -> f64 {
    if q < 0.5 {
        y.q_upper(q)
    } else {
        y.q_lower(1.0 - q)
    }
}

/// Sample mean and `stdev/√m`, with Welford updates.
fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    if n < 2.0 {
        return (if n == 1.0 { mean } else { f64::NAN }, f64::INFINITY);
    }
    (mean, (m2 / (n - 1.0)).sqrt() / n.sqrt())
}

/// Monte Carlo `JMES_{α,β}[Y|X]`.
pub fn mc_jmes(b: &BivariateModel, alpha: f64, beta: f64, n: usize, seed: u64) -> Result<McEstimate> {
    half_open_unit(beta)?;
    let expected = b.copula.tail(alpha, beta) * n as f64;
    if expected < MIN_CONDITIONAL {
        return Err(Error::InsufficientTailSamples { expected });
    }
    ConditionalSample::simulate(&b.copula, alpha, n, seed)?.jmes(&b.copula, &b.y_marginal, beta)
}

/// Monte Carlo `MES_α[Y|X]`.
pub fn mc_mes(b: &BivariateModel, alpha: f64, n: usize, seed: u64) -> Result<McEstimate> {
    ConditionalSample::simulate(&b.copula, alpha, n, seed)?.mes(&b.y_marginal)
}

/// Monte Carlo `CoVaR_{α,β}[Y|X]`.
pub fn mc_covar(b: &BivariateModel, alpha: f64, beta: f64, n: usize, seed: u64) -> Result<McEstimate> {
    ConditionalSample::simulate(&b.copula, alpha, n, seed)?.covar(&b.y_marginal, beta)
}

/// Monte Carlo `CoES_{α,β}[Y|X]`.
pub fn mc_coes(b: &BivariateModel, alpha: f64, beta: f64, n: usize, seed: u64) -> Result<McEstimate> {
    ConditionalSample::simulate(&b.copula, alpha, n, seed)?.coes(&b.y_marginal, beta)
}

/// Seed of grid point `index` derived from a base seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(1)))
}

/// Monte Carlo estimate of a measure that compares across models: `JMES`,
/// `dJMES` (`JMES − ES_β`, with `ES_β` exact), `drJMES`, `MES`, `CoVaR` or
/// `CoES`.
pub fn mc_measure(b: &BivariateModel, m: Measure, alpha: f64, beta: f64, n: usize, seed: u64) -> Result<McEstimate> {
    match m {
        Measure::JMES => mc_jmes(b, alpha, beta, n, seed),
        Measure::DJMES => {
            let mut e = mc_jmes(b, alpha, beta, n, seed)?;
            e.value -= b.y_marginal.es(beta)?;
            Ok(e)
        }
        Measure::DrJMES => {
            let mut e = mc_jmes(b, alpha, beta, n, seed)?;
            let es = b.y_marginal.es(beta)?;
            e.value = e.value / es - 1.0;
            e.std_error /= es.abs();
            Ok(e)
        }
        Measure::MES => mc_mes(b, alpha, n, seed),
        Measure::CoVaR => mc_covar(b, alpha, beta, n, seed),
        Measure::CoES => mc_coes(b, alpha, beta, n, seed),
        other => Err(Error::InvalidParameter(format!("no Monte Carlo comparison for {other}"))),
    }
}

/// Grid points `(α, β)` where the sampled measure of `b1` exceeds that of
/// `b2` by more than three combined standard errors, i.e. where the
/// simulation contradicts a conclusion `measure[b1] ≤ measure[b2]`. Grid
/// point `i` uses seeds `derive_seed(seed, 2i)` and `derive_seed(seed, 2i+1)`.
pub fn mc_order_witness(
    b1: &BivariateModel,
    b2: &BivariateModel,
    measure: Measure,
    grid: &[(f64, f64)],
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, &(alpha, beta)) in grid.iter().enumerate() {
        let i = i as u64;
        let e1 = mc_measure(b1, measure, alpha, beta, n, derive_seed(seed, 2 * i))?;
        let e2 = mc_measure(b2, measure, alpha, beta, n, derive_seed(seed, 2 * i + 1))?;
        let band = 3.0 * e1.std_error.hypot(e2.std_error);
        if e1.value > e2.value + band {
            out.push((alpha, beta));
        }
    }
    Ok(out)
}
