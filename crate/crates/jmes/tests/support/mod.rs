//! Reference computations that avoid the crate's quantile-integral path.

#![allow(dead_code)]

use gauss_quad::GaussLegendre;
use jmes::copulas::CopulaModel;
use jmes::distributions::MarginalModel;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Composite 20-point Gauss–Legendre on `panels` equal pieces of `[a, b]`.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = GaussLegendre::new(20).unwrap();
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            rule.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// `E[Y | U > α] = (1−α)⁻¹ ∫_0^∞ C̄(α, G(y)) dy` for a margin on `[0, ∞)`,
/// integrated in `y` over geometrically growing panels.
pub fn mes_by_survival(c: &CopulaModel, y: &MarginalModel, alpha: f64) -> f64 {
    let top = y.quantile_upper(1e-17).unwrap();
    let f = |x: f64| c.tail(alpha, y.cdf(x));
    let first = y.quantile(0.01).unwrap();
    let mut s = composite_gl(f, 0.0, first, 100);
    let mut lo = first;
    while lo < top {
        let hi = (lo * 1.05).min(top);
        s += composite_gl(f, lo, hi, 1);
        lo = hi;
    }
    s / (1.0 - alpha)
}

/// `E[Y | X > a, Y > b]` for a standard bivariate normal with correlation
/// `ρ`, by Tallis' moment formula and a one-dimensional integral for the
/// joint tail probability.
pub fn bivariate_normal_jmes(rho: f64, alpha: f64, beta: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let a = n.inverse_cdf(alpha);
    let b = n.inverse_cdf(beta);
    let s = (1.0 - rho * rho).sqrt();
    let sf = |x: f64| n.cdf(-x);
    let moment = n.pdf(b) * sf((a - rho * b) / s) + rho * n.pdf(a) * sf((b - rho * a) / s);
    let prob = composite_gl(|y| n.pdf(y) * sf((a - rho * y) / s), b, b + 40.0, 400);
    moment / prob
}

/// Sup-distance helper: `max_i |a_i − b_i|`.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
