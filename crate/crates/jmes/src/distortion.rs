//! Conditional distortion curves.
//!
//! For a copula `C` and levels `α, β ∈ [0,1)` the law of `V` given
//! `{U > α, V > β}` has cdf
//!
//! ```text
//! h̄_{α,β}(t) = (C̄(α,β) − C̄(α, max{β,t})) / C̄(α,β),
//! ```
//!
//! so that `E[Y | X > VaR_α[X], Y > VaR_β[Y]] = ∫ G⁻¹(t) dh̄_{α,β}(t)`. Two
//! companions are provided: the marginal tail curve
//! `h̄_β(t) = max{(t−β)/(1−β), 0}` (the `α = 0` case, giving `ES_β`) and the
//! dual form `h_{α,β}(t) = min{C̄(α,1−t)/C̄(α,β), 1} = 1 − h̄_{α,β}(1−t)`.
//!
//! A [`DistortionCurve`] is also a [`QuantileWeight`], with density
//! `dh/dt` and exact masses `h(b) − h(a)`, so quantile integrals against it go
//! through [`MarginalModel::integrate_quantile`].

use serde::{Deserialize, Serialize};

use crate::copulas::{CopulaModel, Exceedance};
use crate::distributions::{MarginalModel, QuantileWeight, UnitWeight};
use crate::error::{half_open_unit, Error, Result};
use crate::orders::{OrderCheckResult, Relation, Witness};
use crate::quad::{QuadResult, QuadSettings};

/// Conditioning probabilities below this are treated as zero.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Bracket width at which [`DistortionCurve::inverse`] stops, in `t`.
pub const INVERSE_TOL: f64 = 1e-12;

/// Midpoint-convexity tolerance of [`compose_convexity_check`].
pub const CONVEXITY_TOL: f64 = 1e-9;

/// Number of uniform points on `[0,1]` used by [`compose_convexity_check`].
pub const CONVEXITY_POINTS: usize = 1001;

/// Which conditional distortion a curve represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionKind {
    /// `h̄_{α,β}`: cdf of `V` given `U > α, V > β`.
    JointTail,
    /// `h̄_β`: cdf of `V` given `V > β`.
    MarginalTail,
    /// `h_{α,β}(t) = 1 − h̄_{α,β}(1−t)`.
    DualForm,
}

/// A conditional distortion curve on `[0,1]`.
#[derive(Debug, Clone, Copy)]
pub struct DistortionCurve {
    copula: CopulaModel,
    alpha: f64,
    beta: f64,
    kind: DistortionKind,
    /// `C̄(α,β)` for the copula-based kinds, `1 − β` for the marginal one.
    denom: f64,
    exceed: Exceedance,
}

impl DistortionCurve {
    /// Builds the curve, failing with `DegenerateConditioning` when
    /// `C̄(α,β) < 1e-12`.
    pub fn new(copula: CopulaModel, alpha: f64, beta: f64, kind: DistortionKind) -> Result<Self> {
        half_open_unit(alpha)?;
        half_open_unit(beta)?;
        let denom = match kind {
            DistortionKind::MarginalTail => 1.0 - beta,
            DistortionKind::JointTail | DistortionKind::DualForm => copula.tail(alpha, beta),
        };
        if denom < DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateConditioning { alpha, beta, tail: denom });
        }
        Ok(Self { copula, alpha, beta, kind, denom, exceed: copula.exceedance(alpha) })
    }

    /// `h̄_{α,β}`.
    pub fn joint_tail(copula: CopulaModel, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(copula, alpha, beta, DistortionKind::JointTail)
    }

    /// `h̄_β` (the copula is recorded but plays no role).
    pub fn marginal_tail(beta: f64) -> Result<Self> {
        Self::new(CopulaModel::Independence, 0.0, beta, DistortionKind::MarginalTail)
    }

    /// `h_{α,β}`.
    pub fn dual_form(copula: CopulaModel, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(copula, alpha, beta, DistortionKind::DualForm)
    }

    pub fn copula(&self) -> &CopulaModel {
        &self.copula
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kind(&self) -> DistortionKind {
        self.kind
    }

    /// Probability of the conditioning event: `C̄(α,β)`, or `1 − β` for
    /// the marginal tail curve.
    pub fn conditioning_probability(&self) -> f64 {
        self.denom
    }

    /// `C̄(α, t)` with the marginal kind reading `α = 0`.
    fn tail_at(&self, t: f64) -> f64 {
        match self.kind {
            DistortionKind::MarginalTail => 1.0 - t,
            _ => self.copula.tail(self.alpha, t),
        }
    }

    /// `P(U > α, V > β) − P(U > α, V > t)` for `t ≥ β`, i.e. the unnormalised
    /// `h̄_{α,β}(t)`.
    fn joint_mass_below(&self, t: f64) -> f64 {
        if t <= self.beta {
            0.0
        } else {
            (self.denom - self.tail_at(t)).max(0.0)
        }
    }

    /// `h(t)`, clamped to `[0,1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self.kind {
            DistortionKind::MarginalTail => ((t - self.beta) / (1.0 - self.beta)).clamp(0.0, 1.0),
            DistortionKind::JointTail => {
                if t >= 1.0 {
                    1.0
                } else {
                    (self.joint_mass_below(t) / self.denom).min(1.0)
                }
            }
            DistortionKind::DualForm => {
                let s = 1.0 - t;
                if s <= self.beta {
                    1.0
                } else {
                    (self.tail_at(s) / self.denom).min(1.0)
                }
            }
        }
    }

    /// `dh/dt` at `t`, zero where the curve is flat. For the joint kind this
    /// is `P(U > α | V = t) / C̄(α,β)` on `(β, 1)`.
    pub fn derivative(&self, t: f64) -> f64 {
        self.density_at(t, 1.0 - t)
    }

    /// `dh/dt` with `q = 1 − t` supplied separately.
    fn density_at(&self, t: f64, q: f64) -> f64 {
        match self.kind {
            DistortionKind::MarginalTail => {
                if t > self.beta && t < 1.0 {
                    1.0 / (1.0 - self.beta)
                } else {
                    0.0
                }
            }
            DistortionKind::JointTail => {
                if t > self.beta && t < 1.0 {
                    self.exceed.eval(t, q) / self.denom
                } else {
                    0.0
                }
            }
            DistortionKind::DualForm => {
                // h(t) = C̄(α, 1−t)/C̄(α,β) on t < 1 − β.
                if q > self.beta && t > 0.0 {
                    self.exceed.eval(q, t) / self.denom
                } else {
                    0.0
                }
            }
        }
    }

    /// Generalized inverse `inf{t : h(t) ≥ p}` by monotone bisection,
    /// warm-started from the independence (linear) curve.
    pub fn inverse(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain { value: p, domain: "[0,1]" });
        }
        let (lo, hi, guess) = match self.kind {
            DistortionKind::MarginalTail => return Ok(self.beta + (1.0 - self.beta) * p),
            DistortionKind::JointTail => {
                if p == 0.0 {
                    return Ok(self.beta);
                }
                (self.beta, 1.0, self.beta + (1.0 - self.beta) * p)
            }
            DistortionKind::DualForm => {
                if p == 0.0 {
                    return Ok(0.0);
                }
                (0.0, 1.0 - self.beta, (1.0 - self.beta) * p)
            }
        };
        // Invariant: h(lo) < p ≤ h(hi).
        let (mut lo, mut hi) = (lo, hi);
        if guess > lo && guess < hi {
            if self.eval(guess) >= p {
                hi = guess;
            } else {
                lo = guess;
            }
        }
        let tol = INVERSE_TOL * self.denom.min(1.0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `∫_0^1 Q(t) dh(t)` for the quantile function `Q` of `margin`; for the
    /// joint kind this is `E[Y | X > VaR_α[X], Y > VaR_β[Y]]`.
    pub fn integrate_quantile(&self, margin: &MarginalModel, settings: &QuadSettings) -> Result<QuadResult> {
        let start = match self.kind {
            DistortionKind::DualForm => 0.0,
            _ => self.beta,
        };
        let mut r = if self.kind == DistortionKind::JointTail && self.copula == CopulaModel::Comonotone {
            // dh̄ is the uniform law on (max{α,β}, 1); its kink at α is
            // integrated exactly by moving the lower limit.
            margin.integrate_quantile(start.max(self.alpha), &UnitWeight, settings)?
        } else {
            return margin.integrate_quantile(start, self, settings);
        };
        r.value /= self.denom;
        r.abs_err /= self.denom;
        Ok(r)
    }
}

impl QuantileWeight for DistortionCurve {
    fn density(&self, t: f64, q: f64) -> f64 {
        self.density_at(t, q)
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            DistortionKind::JointTail => {
                // Difference of tails directly, avoiding 1 − h̄ cancellation.
                let (a, b) = (a.max(self.beta), b.max(self.beta));
                if b <= a {
                    0.0
                } else {
                    ((self.tail_at(a) - self.tail_at(b)) / self.denom).max(0.0)
                }
            }
            _ => (self.eval(b) - self.eval(a)).max(0.0),
        }
    }
}

/// Midpoint-convexity check of `t ↦ h_outer(h_inner⁻¹(t))` on
/// [`CONVEXITY_POINTS`] uniform points of `[0,1]`; witnesses are triples
/// `(t_{i−1}, t_i, t_{i+1})` whose midpoint value exceeds the chord average
/// by more than [`CONVEXITY_TOL`].
pub fn compose_convexity_check(outer: &DistortionCurve, inner: &DistortionCurve) -> Result<OrderCheckResult> {
    if outer.copula != inner.copula || outer.beta != inner.beta {
        return Err(Error::InvalidParameter("convexity check needs two curves with the same copula and beta".into()));
    }
    let n = CONVEXITY_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let phi: Vec<f64> = grid.iter().map(|&t| inner.inverse(t).map(|s| outer.eval(s))).collect::<Result<_>>()?;
    let mut result = OrderCheckResult::new(Relation::DistortionConvexity, grid.clone(), CONVEXITY_TOL);
    for i in 1..n - 1 {
        let chord = 0.5 * (phi[i - 1] + phi[i + 1]);
        result.record(phi[i] <= chord + CONVEXITY_TOL, || Witness {
            point: vec![grid[i - 1], grid[i], grid[i + 1]],
            lhs: phi[i],
            rhs: chord,
        });
    }
    result.notes.push(format!("outer alpha = {}, inner alpha = {}, beta = {}", outer.alpha, inner.alpha, outer.beta));
    Ok(result.finish())
}
