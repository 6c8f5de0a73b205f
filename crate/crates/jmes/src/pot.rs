//! Peaks over threshold: log losses, GPD maximum likelihood, and the
//! three-piece semiparametric margin (GPD lower tail, empirical body, GPD
//! upper tail).
//!
//! With `N` observations, `N_L` of them below `u_L` and `N_R` above `u_R`:
//!
//! ```text
//! F(x) = N_L/N · (1 + ξ_L(u_L − x)/β_L)^{−1/ξ_L}        x < u_L
//!        #{x_i ≤ x}/N                                    u_L ≤ x ≤ u_R
//!        1 − N_R/N · (1 + ξ_R(x − u_R)/β_R)^{−1/ξ_R}    x > u_R
//! ```

use serde::Serialize;

use crate::distributions::{atoms_integral, continuous_quantile_integral, empirical_rank, QuantileWeight, UnitWeight};
use crate::error::{Error, Result};
use crate::optim::brent_min;
use crate::quad::{QuadResult, QuadSettings};

/// `L_t = −100·ln(p_t / p_{t−1})`; a price drop gives a positive loss.
pub fn log_losses(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: prices.len() });
    }
    if let Some((index, &value)) = prices.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p.is_finite())) {
        return Err(Error::NonPositivePrice { index, value });
    }
    Ok(prices.windows(2).map(|w| -100.0 * (w[1].ln() - w[0].ln())).collect())
}

/// Fitted generalized Pareto tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpdFit {
    pub xi: f64,
    pub scale: f64,
    pub threshold: f64,
    pub n_exceed: usize,
    pub loglik: f64,
    /// True when ξ̂ sits on an end of the search range [−0.5, 2].
    pub at_boundary: bool,
}

impl GpdFit {
    /// Excess `e ≥ 0` with GPD survival probability `s ∈ (0,1]`.
    pub fn excess_at_survival(&self, s: f64) -> f64 {
        let ln_s = s.ln();
        if self.xi == 0.0 {
            -self.scale * ln_s
        } else {
            self.scale * (-self.xi * ln_s).exp_m1() / self.xi
        }
    }

    /// GPD survival probability of excess `e ≥ 0`.
    pub fn survival(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 1.0;
        }
        let z = e / self.scale;
        if self.xi == 0.0 {
            (-z).exp()
        } else if self.xi * z <= -1.0 {
            0.0
        } else {
            (-(self.xi * z).ln_1p() / self.xi).exp()
        }
    }
}

/// Lower and upper search bounds for ξ.
pub const XI_RANGE: (f64, f64) = (-0.5, 2.0);

/// `ln(1 + ξa)/ξ`, continuous at ξ = 0.
fn log1p_over(xi: f64, a: f64) -> f64 {
    if xi == 0.0 {
        a
    } else {
        (xi * a).ln_1p() / xi
    }
}

/// GPD log-likelihood of excesses `y` at `(ξ, σ)`; −∞ outside the support.
pub fn gpd_loglik(y: &[f64], xi: f64, scale: f64) -> f64 {
    if scale.is_nan() || scale <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut ll = -(y.len() as f64) * scale.ln();
    for &v in y {
        let a = v / scale;
        if 1.0 + xi * a <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll -= log1p_over(xi, a) + (xi * a).ln_1p();
    }
    ll
}

/// Gradient of the log-likelihood in `(ξ, ln σ)`.
pub fn gpd_gradient(y: &[f64], xi: f64, scale: f64) -> [f64; 2] {
    let mut g_xi = 0.0;
    let mut g_ls = -(y.len() as f64);
    for &v in y {
        let a = v / scale;
        let z = xi * a;
        g_ls += (1.0 + xi) * a / (1.0 + z);
        g_xi += if z.abs() < 1e-4 {
            -a + 0.5 * a * a + xi * (a * a - 2.0 * a * a * a / 3.0) + xi * xi * (0.75 * a * a * a * a - a * a * a)
        } else {
            z.ln_1p() / (xi * xi) - (1.0 + 1.0 / xi) * a / (1.0 + z)
        };
    }
    [g_xi, g_ls]
}

/// Maximum likelihood GPD fit to positive excesses (threshold 0).
///
/// The profile likelihood over ξ ∈ [−0.5, 2] is maximised by Brent's method
/// with an inner Brent search over ln σ; the optimum is then polished by
/// Newton steps on the analytic gradient.
pub fn fit_gpd(excesses: &[f64]) -> Result<GpdFit> {
    let n = excesses.len();
    if n < 10 {
        return Err(Error::InsufficientData { needed: 10, got: n });
    }
    if excesses.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("GPD excesses must be positive and finite".into()));
    }
    let max_y = excesses.iter().cloned().fold(f64::MIN, f64::max);
    let min_y = excesses.iter().cloned().fold(f64::MAX, f64::min);
    if max_y == min_y {
        return Err(Error::DegenerateSample);
    }
    let mean_y = excesses.iter().sum::<f64>() / n as f64;

    let profile = |xi: f64| -> (f64, f64) {
        let floor = if xi < 0.0 { -xi * max_y * (1.0 + 1e-12) } else { 0.0 };
        let lo = floor.max(1e-6 * mean_y).ln();
        let hi = (50.0 * max_y).ln();
        let m = brent_min(|ls| -gpd_loglik(excesses, xi, ls.exp()), lo, hi, 1e-12, 500);
        (m.x[0].exp(), -m.value)
    };
    let outer = brent_min(|xi| -profile(xi).1, XI_RANGE.0, XI_RANGE.1, 1e-10, 500);
    let mut xi = outer.x[0];
    let mut scale = profile(xi).0;
    let mut ll = gpd_loglik(excesses, xi, scale);

    let interior = |xi: f64| xi > XI_RANGE.0 + 1e-6 && xi < XI_RANGE.1 - 1e-6;
    if interior(xi) {
        for _ in 0..50 {
            let g = gpd_gradient(excesses, xi, scale);
            if g[0].hypot(g[1]) < 1e-9 {
                break;
            }
            let h = hessian(excesses, xi, scale);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if !(det > 0.0 && h[0][0] < 0.0) {
                break;
            }
            let dx = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
            let dl = -(-h[1][0] * g[0] + h[0][0] * g[1]) / det;
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let nxi = xi + step * dx;
                let nscale = scale * (step * dl).exp();
                let nll = gpd_loglik(excesses, nxi, nscale);
                if nll >= ll - 1e-12 * ll.abs() && interior(nxi) {
                    xi = nxi;
                    scale = nscale;
                    ll = nll;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let g = gpd_gradient(excesses, xi, scale);
        if g[0].hypot(g[1]) > 1e-6 * (n as f64).max(1.0) {
            return Err(Error::NonConvergence {
                what: "GPD maximum likelihood".into(),
                best: vec![xi, scale],
                objective: ll,
            });
        }
    }
    Ok(GpdFit { xi, scale, threshold: 0.0, n_exceed: n, loglik: ll, at_boundary: !interior(xi) })
}

/// Hessian of the log-likelihood in `(ξ, ln σ)` by central differences of the gradient.
fn hessian(y: &[f64], xi: f64, scale: f64) -> [[f64; 2]; 2] {
    let h = 1e-6;
    let gx_p = gpd_gradient(y, xi + h, scale);
    let gx_m = gpd_gradient(y, xi - h, scale);
    let gs_p = gpd_gradient(y, xi, scale * h.exp());
    let gs_m = gpd_gradient(y, xi, scale * (-h).exp());
    let hxx = (gx_p[0] - gx_m[0]) / (2.0 * h);
    let hss = (gs_p[1] - gs_m[1]) / (2.0 * h);
    let hxs = 0.5 * ((gx_p[1] - gx_m[1]) / (2.0 * h) + (gs_p[0] - gs_m[0]) / (2.0 * h));
    [[hxx, hxs], [hxs, hss]]
}

/// Three-piece margin: GPD tails glued to the empirical body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiParametricMarginal {
    lower: GpdFit,
    upper: GpdFit,
    #[serde(skip)]
    sorted: Vec<f64>,
    u_lower: f64,
    u_upper: f64,
    n: usize,
    n_lower: usize,
    n_upper: usize,
    tail_frac: f64,
}

/// Fits the three-piece margin with thresholds at the empirical
/// `tail_frac`- and `(1 − tail_frac)`-quantiles (type-1 inverse).
pub fn build_semiparametric(sample: &[f64], tail_frac: f64) -> Result<SemiParametricMarginal> {
    let n = sample.len();
    if n < 100 {
        return Err(Error::InsufficientData { needed: 100, got: n });
    }
    if !(tail_frac > 0.0 && tail_frac < 0.5) {
        return Err(Error::InvalidParameter(format!("tail_frac must lie in (0, 0.5), got {tail_frac}")));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("sample contains non-finite values".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let u_upper = sorted[empirical_rank(n, 1.0 - tail_frac) - 1];
    let u_lower = sorted[empirical_rank(n, tail_frac) - 1];
    let up_ex: Vec<f64> = sorted.iter().filter(|&&x| x > u_upper).map(|&x| x - u_upper).collect();
    let lo_ex: Vec<f64> = sorted.iter().filter(|&&x| x < u_lower).map(|&x| u_lower - x).collect();
    let mut upper = fit_gpd(&up_ex)?;
    upper.threshold = u_upper;
    let mut lower = fit_gpd(&lo_ex)?;
    lower.threshold = u_lower;
    Ok(SemiParametricMarginal {
        n_lower: lo_ex.len(),
        n_upper: up_ex.len(),
        lower,
        upper,
        sorted,
        u_lower,
        u_upper,
        n,
        tail_frac,
    })
}

impl SemiParametricMarginal {
    pub fn lower(&self) -> &GpdFit {
        &self.lower
    }

    pub fn upper(&self) -> &GpdFit {
        &self.upper
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.u_lower, self.u_upper)
    }

    /// `(N, N_L, N_R)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.n, self.n_lower, self.n_upper)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tail_frac(&self) -> f64 {
        self.tail_frac
    }

    fn p_lower(&self) -> f64 {
        self.n_lower as f64 / self.n as f64
    }

    fn p_upper(&self) -> f64 {
        self.n_upper as f64 / self.n as f64
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.u_lower {
            self.p_lower() * self.lower.survival(self.u_lower - x)
        } else if x > self.u_upper {
            1.0 - self.p_upper() * self.upper.survival(x - self.u_upper)
        } else {
            self.sorted.partition_point(|&v| v <= x) as f64 / self.n as f64
        }
    }

    pub fn quantile_lower(&self, p: f64) -> f64 {
        let pl = self.p_lower();
        if p <= pl {
            self.u_lower - self.lower.excess_at_survival(p / pl)
        } else if p > 1.0 - self.p_upper() {
            self.quantile_upper(1.0 - p)
        } else {
            self.sorted[empirical_rank(self.n, p) - 1]
        }
    }

    pub fn quantile_upper(&self, q: f64) -> f64 {
        let pr = self.p_upper();
        if q < pr {
            self.u_upper + self.upper.excess_at_survival(q / pr)
        } else {
            self.quantile_lower(1.0 - q)
        }
    }

    /// `∫_{t₀}^1 F⁻¹(t) w(t) dt` piecewise: quadrature on the GPD pieces,
    /// exact sums over the body atoms.
    pub fn integrate_quantile(&self, t0: f64, w: &dyn QuantileWeight, s: &QuadSettings) -> QuadResult {
        let pl = self.p_lower();
        let tr = 1.0 - self.p_upper();
        let mut out = QuadResult { value: 0.0, abs_err: 0.0, evaluations: 0, converged: true };
        let mut add = |r: QuadResult| {
            out.value += r.value;
            out.abs_err += r.abs_err;
            out.evaluations += r.evaluations;
            out.converged &= r.converged;
        };
        if t0 < pl {
            add(continuous_quantile_integral(
                |t| self.quantile_lower(t),
                |q| self.quantile_lower(1.0 - q),
                t0,
                pl,
                w,
                s,
            ));
        }
        let body = atoms_integral(&self.sorted, self.n_lower + 1, self.n - self.n_upper, self.n, t0, w);
        add(QuadResult { value: body, abs_err: 0.0, evaluations: 0, converged: true });
        add(continuous_quantile_integral(
            |t| self.quantile_lower(t),
            |q| self.quantile_upper(q),
            t0.max(tr),
            1.0,
            w,
            s,
        ));
        out
    }

    pub fn mean(&self, s: &QuadSettings) -> Result<f64> {
        if self.upper.xi >= 1.0 || self.lower.xi >= 1.0 {
            return Err(Error::NonintegrableTail("semiparametric tail with ξ ≥ 1".into()));
        }
        Ok(self.integrate_quantile(0.0, &UnitWeight, s).value)
    }

    pub fn es(&self, p: f64, s: &QuadSettings) -> Result<f64> {
        if self.upper.xi >= 1.0 {
            return Err(Error::NonintegrableTail(format!("upper GPD tail with ξ = {} ≥ 1", self.upper.xi)));
        }
        Ok(self.integrate_quantile(p, &UnitWeight, s).value / (1.0 - p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_loss_examples() {
        let l = log_losses(&[100.0, 100.0 * (-0.1f64).exp()]).unwrap();
        assert!((l[0] - 10.0).abs() < 1e-12);
        let l = log_losses(&[100.0, 105.0]).unwrap();
        assert!((l[0] + 4.879_016_416_943_2).abs() < 1e-9);
        assert_eq!(log_losses(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(log_losses(&[1.0, 0.0]), Err(Error::NonPositivePrice { index: 1, .. })));
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let y: Vec<f64> = (1..50).map(|i| (i as f64 * 0.37).sin().abs() + 0.1 * i as f64).collect();
        for &(xi, sc) in &[(0.3, 1.2), (-0.2, 2.0), (1e-7, 1.5), (1.5, 0.7)] {
            let g = gpd_gradient(&y, xi, sc);
            let h = 1e-6;
            let fx = (gpd_loglik(&y, xi + h, sc) - gpd_loglik(&y, xi - h, sc)) / (2.0 * h);
            let fs = (gpd_loglik(&y, xi, sc * h.exp()) - gpd_loglik(&y, xi, sc * (-h).exp())) / (2.0 * h);
            assert!((g[0] - fx).abs() < 1e-5 * fx.abs().max(1.0), "xi={xi}: {} vs {fx}", g[0]);
            assert!((g[1] - fs).abs() < 1e-5 * fs.abs().max(1.0));
        }
    }

    #[test]
    fn small_samples_rejected() {
        assert!(matches!(fit_gpd(&[1.0, 2.0, 3.0, 4.0, 5.0]), Err(Error::InsufficientData { needed: 10, .. })));
        assert_eq!(fit_gpd(&[2.0; 20]), Err(Error::DegenerateSample));
    }
}
