//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Finite intervals are bisected where the local error estimate is largest
//! (QUADPACK QAG strategy). Semi-infinite ranges `[a, ∞)` are covered by
//! panels of doubling width until a panel's contribution is negligible.

use serde::{Deserialize, Serialize};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances and budgets for the adaptive integrator. Recorded verbatim in
/// risk reports so results can be reproduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    /// Relative error target.
    pub rel_tol: f64,
    /// Absolute error target.
    pub abs_tol: f64,
    /// Maximum number of subintervals per finite integral.
    pub max_intervals: usize,
    /// Width of the first panel on a semi-infinite range.
    pub first_panel: f64,
    /// Upper bound of the exponential variable `s` (`1 − t = e^{−s}`).
    pub max_exponent: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-15, max_intervals: 2000, first_panel: 1.0, max_exponent: 700.0 }
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evaluations: usize,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
}

impl QuadResult {
    fn zero() -> Self {
        Self { value: 0.0, abs_err: 0.0, evaluations: 0, converged: true }
    }

    fn add(&mut self, other: QuadResult) {
        self.value += other.value;
        self.abs_err += other.abs_err;
        self.evaluations += other.evaluations;
        self.converged &= other.converged;
    }
}

/// One 15-point Kronrod rule on `[a, b]`: (integral, error estimate).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(round);
    }
    (result, err)
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, s: &QuadSettings) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let (v0, e0) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut total_err = e0;
    let mut evaluations = 15;
    loop {
        let target = s.abs_tol.max(s.rel_tol * total.abs());
        if total_err <= target {
            return QuadResult { value: total, abs_err: total_err, evaluations, converged: true };
        }
        if intervals.len() >= s.max_intervals {
            return QuadResult { value: total, abs_err: total_err, evaluations, converged: false };
        }
        let (idx, _) =
            intervals
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (lo, hi, v, e) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval at floating-point resolution; accept it as is.
            intervals.push((lo, hi, v, 0.0));
            total_err -= e;
            continue;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        // Re-sum occasionally to limit drift from the running updates.
        if intervals.len() % 64 == 0 {
            total = intervals.iter().map(|iv| iv.2).sum();
            total_err = intervals.iter().map(|iv| iv.3).sum();
        }
    }
}

/// Integrates `f` over `[a, limit)` with panels `[a, a+w), [a+w, a+3w), …`
/// of doubling width, stopping once two consecutive panels are negligible
/// relative to the running total (or `limit` is reached).
pub fn integrate_to_limit<F: FnMut(f64) -> f64>(mut f: F, a: f64, limit: f64, s: &QuadSettings) -> QuadResult {
    let mut out = QuadResult::zero();
    let mut lo = a;
    let mut width = s.first_panel;
    let mut quiet = 0;
    while lo < limit {
        let hi = (lo + width).min(limit);
        // Later panels only need accuracy relative to the running total.
        let mut local = *s;
        local.abs_tol = s.abs_tol.max(0.1 * s.rel_tol * out.value.abs());
        let panel = integrate(&mut f, lo, hi, &local);
        out.add(panel);
        let negligible = panel.value.abs() <= s.rel_tol * out.value.abs() + s.abs_tol;
        quiet = if negligible { quiet + 1 } else { 0 };
        if quiet >= 2 {
            break;
        }
        lo = hi;
        width *= 2.0;
    }
    out
}
