//! Grid-based checkers for stochastic orders between margins and for
//! positive-dependence properties of copulas.
//!
//! Every checker returns an [`OrderCheckResult`] that records the grid, the
//! tolerance and the witnesses of violation. A `holds` verdict certifies the
//! absence of violations at the grid's resolution; it is not a proof.
//!
//! Monotonicity conditions are checked against the running extremum of all
//! earlier grid points, never just the neighbour, so each check covers every
//! ordered pair of grid points and refining the grid cannot turn a violation
//! into `holds`.

use serde::{Deserialize, Serialize};

use crate::copulas::Copula;
use crate::distributions::{MarginalModel, PGrid};
use crate::error::{Error, Result};

/// Tolerance of the quantile-based margin checks, scaled by
/// `max(1, |lhs|, |rhs|)`.
pub const MARGIN_TOL: f64 = 1e-9;

/// Tolerance of the copula checks whose inputs are closed-form or accurate to
/// near machine precision (log scale for TP₂, RTI and `l_α`).
pub const COPULA_TOL: f64 = 1e-9;

/// Tolerance used instead of [`COPULA_TOL`] for SI when `∂₂C` is the finite
/// difference fallback.
pub const FALLBACK_SI_TOL: f64 = 1e-5;

/// Tolerance of [`check_symmetry`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// At most this many witnesses are stored; `n_violations` counts them all.
pub const MAX_WITNESSES: usize = 25;

/// The relation a check certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Usual stochastic order: `VaR_p[X] ≤ VaR_p[Y]`.
    St,
    /// Increasing convex order: `ES_p[X] ≤ ES_p[Y]`.
    Icx,
    /// Dispersive order: quantile spacings of `X` below those of `Y`.
    Disp,
    /// Expected proportional shortfall order: `EPW_p[X] ≤ EPW_p[Y]`.
    Epw,
    /// Likelihood ratio order: `g/f` nondecreasing.
    Lr,
    /// `U` stochastically increasing in `V`.
    #[serde(rename = "SI")]
    Si,
    /// `U` right-tail increasing in `V`.
    #[serde(rename = "RTI")]
    Rti,
    /// Total positivity of order two of `C̄`.
    #[serde(rename = "TP2_tail")]
    Tp2Tail,
    /// `l_α(t) = C̄₂(α,t)/C̄₁(α,t) ≥ l_α(β)` on `[β,1)`.
    LAlphaRatio,
    /// Exchangeability `C(u,v) = C(v,u)`.
    Symmetry,
    /// Convexity of a composed distortion `h̄_{α₂,β} ∘ h̄⁻¹_{α₁,β}`.
    DistortionConvexity,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Self::St => "st",
            Self::Icx => "icx",
            Self::Disp => "disp",
            Self::Epw => "epw",
            Self::Lr => "lr",
            Self::Si => "SI",
            Self::Rti => "RTI",
            Self::Tp2Tail => "TP2_tail",
            Self::LAlphaRatio => "l_alpha_ratio",
            Self::Symmetry => "symmetry",
            Self::DistortionConvexity => "distortion_convexity",
        }
    }
}

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    /// The check needs information the models cannot provide.
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Violated => "violated",
            Self::Inconclusive => "inconclusive",
        }
    }
}

/// A grid point where the checked inequality fails beyond tolerance; `lhs`
/// and `rhs` are its two sides as documented on each checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Coordinates: `[p]`, `[p_i, p_j]`, `[u, v]`, `[u₁, u₂, v₁, v₂]`, … as
    /// documented on each checker.
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Verdict with witnesses and everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheckResult {
    pub relation: Relation,
    pub verdict: Verdict,
    /// The first [`MAX_WITNESSES`] violations.
    pub witnesses: Vec<Witness>,
    pub n_violations: usize,
    pub n_checked: usize,
    pub grid: Vec<f64>,
    pub tolerance: f64,
    /// For `l_alpha_ratio`: whether `l_α` is nondecreasing on the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
    pub notes: Vec<String>,
}

impl OrderCheckResult {
    pub(crate) fn new(relation: Relation, grid: Vec<f64>, tolerance: f64) -> Self {
        Self {
            relation,
            verdict: Verdict::Holds,
            witnesses: Vec::new(),
            n_violations: 0,
            n_checked: 0,
            grid,
            tolerance,
            monotone: None,
            notes: Vec::new(),
        }
    }

    /// Counts one comparison; `ok = false` records a violation.
    pub(crate) fn record(&mut self, ok: bool, witness: impl FnOnce() -> Witness) {
        self.n_checked += 1;
        if !ok {
            self.n_violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        if self.verdict != Verdict::Inconclusive {
            self.verdict = if self.n_violations == 0 { Verdict::Holds } else { Verdict::Violated };
        }
        self
    }

    fn inconclusive(mut self, note: String) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.notes.push(note);
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

/// `lhs ≤ rhs` up to `tol·max(1, |lhs|, |rhs|)`.
fn le_scaled(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * lhs.abs().max(rhs.abs()).max(1.0)
}

/// Pointwise comparison of two functionals of `p` over the grid.
fn pointwise<F, G>(relation: Relation, grid: &PGrid, mut f: F, mut g: G) -> Result<OrderCheckResult>
where
    F: FnMut(f64) -> Result<f64>,
    G: FnMut(f64) -> Result<f64>,
{
    let mut res = OrderCheckResult::new(relation, grid.points().to_vec(), MARGIN_TOL);
    for &p in grid.points() {
        let (a, b) = (f(p)?, g(p)?);
        res.record(le_scaled(a, b, MARGIN_TOL), || Witness { point: vec![p], lhs: a, rhs: b });
    }
    Ok(res.finish())
}

/// `m1 ≤_st m2`: `VaR_p[m1] ≤ VaR_p[m2]` at every grid point. Witness
/// points are `[p]`.
pub fn check_st(m1: &MarginalModel, m2: &MarginalModel, grid: &PGrid) -> OrderCheckResult {
    pointwise(Relation::St, grid, |p| Ok(m1.q_lower(p)), |p| Ok(m2.q_lower(p))).expect("quantiles on (0,1) cannot fail")
}

/// `m1 ≤_icx m2`: `ES_p[m1] ≤ ES_p[m2]` at every grid point. Witness points
/// are `[p]`.
pub fn check_icx(m1: &MarginalModel, m2: &MarginalModel, grid: &PGrid) -> Result<OrderCheckResult> {
    pointwise(Relation::Icx, grid, |p| m1.es(p), |p| m2.es(p))
}

/// `m1 ≤_disp m2`: `VaR_v[m1] − VaR_u[m1] ≤ VaR_v[m2] − VaR_u[m2]` for all
/// grid pairs `u < v`, i.e. `VaR[m2] − VaR[m1]` nondecreasing. Witness points
/// are `[u, v]` with the two spacings as `lhs`, `rhs`.
pub fn check_disp(m1: &MarginalModel, m2: &MarginalModel, grid: &PGrid) -> OrderCheckResult {
    let pts = grid.points();
    let q1: Vec<f64> = pts.iter().map(|&p| m1.q_lower(p)).collect();
    let q2: Vec<f64> = pts.iter().map(|&p| m2.q_lower(p)).collect();
    let mut res = OrderCheckResult::new(Relation::Disp, pts.to_vec(), MARGIN_TOL);
    // argmax over i < j of d_i = q2_i − q1_i
    let mut best = 0usize;
    for j in 1..pts.len() {
        let i = best;
        let lhs = q1[j] - q1[i];
        let rhs = q2[j] - q2[i];
        let scale = q1[i].abs().max(q1[j].abs()).max(q2[i].abs()).max(q2[j].abs()).max(1.0);
        res.record(lhs <= rhs + MARGIN_TOL * scale, || Witness { point: vec![pts[i], pts[j]], lhs, rhs });
        if q2[j] - q1[j] > q2[best] - q1[best] {
            best = j;
        }
    }
    res.finish()
}

/// `m1 ≤_epw m2`: `EPW_p[m1] ≤ EPW_p[m2]` at grid points where both
/// quantiles are nonzero; zero-quantile points are skipped and noted.
/// Witness points are `[p]`.
pub fn check_epw(m1: &MarginalModel, m2: &MarginalModel, grid: &PGrid) -> Result<OrderCheckResult> {
    let mut res = OrderCheckResult::new(Relation::Epw, grid.points().to_vec(), MARGIN_TOL);
    let mut skipped = Vec::new();
    for &p in grid.points() {
        let (a, b) = match (m1.epw(p), m2.epw(p)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::ZeroQuantile(_)), _) | (_, Err(Error::ZeroQuantile(_))) => {
                skipped.push(p);
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        res.record(le_scaled(a, b, MARGIN_TOL), || Witness { point: vec![p], lhs: a, rhs: b });
    }
    if !skipped.is_empty() {
        res.notes.push(format!("skipped {} zero-quantile grid points: {skipped:?}", skipped.len()));
    }
    Ok(res.finish())
}

/// Sorted, deduplicated union of both margins' quantiles at the grid points:
/// a natural `x`-grid for [`check_lr`].
pub fn lr_grid(m1: &MarginalModel, m2: &MarginalModel, grid: &PGrid) -> Vec<f64> {
    let mut xs: Vec<f64> =
        grid.points().iter().flat_map(|&p| [m1.q_lower(p), m2.q_lower(p)]).filter(|x| x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// `m1 ≤_lr m2`: `g(x)/f(x)` nondecreasing on the sorted `x`-grid, with `f`,
/// `g` the densities of `m1`, `m2`. Compared on the log scale, where
/// `f = 0 < g` reads `+∞`; points where both densities vanish are skipped.
/// Margins without a density (empirical, semiparametric) give an
/// `inconclusive` verdict. Witness points are `[x_i, x_j]` with the two log
/// ratios as `lhs` (later point) and `rhs` (earlier maximum).
pub fn check_lr(m1: &MarginalModel, m2: &MarginalModel, grid_x: &[f64]) -> OrderCheckResult {
    let mut xs = grid_x.to_vec();
    xs.sort_by(f64::total_cmp);
    let res = OrderCheckResult::new(Relation::Lr, xs.clone(), COPULA_TOL);
    let mut ratios = Vec::with_capacity(xs.len());
    for &x in &xs {
        let (Some(f), Some(g)) = (m1.density(x), m2.density(x)) else {
            let which = if m1.density(x).is_none() { m1 } else { m2 };
            return res.inconclusive(format!("{}", Error::DensityUnavailable(which.to_string())));
        };
        if f == 0.0 && g == 0.0 {
            continue;
        }
        ratios.push((x, g.ln() - f.ln()));
    }
    let mut res = res;
    let mut best: Option<(f64, f64)> = None;
    for &(x, r) in &ratios {
        if let Some((bx, br)) = best {
            let ok = r >= br || (r.is_finite() && br.is_finite() && r >= br - COPULA_TOL * br.abs().max(1.0));
            res.record(ok, || Witness { point: vec![bx, x], lhs: r, rhs: br });
            if r > br {
                best = Some((x, r));
            }
        } else {
            best = Some((x, r));
        }
    }
    res.finish()
}

/// `C` viewed with its arguments swapped.
struct Transposed<'a>(&'a dyn Copula);

impl Copula for Transposed<'_> {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.0.cdf(v, u)
    }
    fn tail(&self, u: f64, v: f64) -> f64 {
        self.0.tail(v, u)
    }
}

/// `max |C(u,v) − C(v,u)| ≤ 1e-12` over all grid pairs. Witness points are
/// `[u, v]`.
pub fn check_symmetry(c: &dyn Copula, grid: &PGrid) -> OrderCheckResult {
    let pts = grid.points();
    let mut res = OrderCheckResult::new(Relation::Symmetry, pts.to_vec(), SYMMETRY_TOL);
    let mut max_gap = 0.0f64;
    for (i, &u) in pts.iter().enumerate() {
        for &v in &pts[i + 1..] {
            let (a, b) = (c.cdf(u, v), c.cdf(v, u));
            let gap = (a - b).abs();
            max_gap = max_gap.max(gap);
            res.record(gap <= SYMMETRY_TOL, || Witness { point: vec![u, v], lhs: a, rhs: b });
        }
    }
    res.notes.push(format!("max |C(u,v) - C(v,u)| = {max_gap:e}"));
    res.finish()
}

/// SI of `U` in `V` for one orientation: `∂₂C(u,v)` nonincreasing in `v`.
fn si_one_direction(c: &dyn Copula, pts: &[f64], tol: f64, label: &str, res: &mut OrderCheckResult) {
    for &u in pts {
        // running minimum of ∂₂C(u, ·) over earlier v
        let mut best: Option<(f64, f64)> = None;
        for &v in pts {
            let d = c.partial2(u, v);
            if let Some((bv, bd)) = best {
                res.record(d <= bd + tol, || Witness { point: vec![u, bv, v], lhs: d, rhs: bd });
                if d < bd {
                    best = Some((v, d));
                }
            } else {
                best = Some((v, d));
            }
        }
    }
    res.notes.push(format!("checked {label}"));
}

/// `U ↑_SI V`: `P(U > u | V = v)` nondecreasing in `v`, i.e. `∂₂C(u,v)`
/// nonincreasing in `v`, for every grid `u`. For an exchangeable copula this
/// also gives `V ↑_SI U`; otherwise both directions are checked, so a
/// `holds` verdict means PDS either way. The path taken is recorded in the
/// notes. Witness points are `[u, v_earlier, v_later]`.
pub fn check_si(c: &dyn Copula, grid: &PGrid) -> OrderCheckResult {
    let pts = grid.points();
    let tol = if c.has_closed_partial2() { COPULA_TOL } else { FALLBACK_SI_TOL };
    let mut res = OrderCheckResult::new(Relation::Si, pts.to_vec(), tol);
    si_one_direction(c, pts, tol, "U SI in V", &mut res);
    if check_symmetry(c, grid).holds() {
        res.notes.push("copula exchangeable on the grid: one direction suffices for PDS".into());
    } else {
        si_one_direction(&Transposed(c), pts, tol, "V SI in U (copula not exchangeable)", &mut res);
    }
    res.finish()
}

/// `U ↑_RTI V`: `P(U > u | V > v) = C̄(u,v)/(1−v)` nondecreasing in `v` for
/// every grid `u`, compared on the log scale. Witness points are
/// `[u, v_earlier, v_later]` with the log ratio at `v_later` as `lhs` and the
/// larger one at `v_earlier` as `rhs`.
pub fn check_rti(c: &dyn Copula, grid: &PGrid) -> OrderCheckResult {
    let pts = grid.points();
    let mut res = OrderCheckResult::new(Relation::Rti, pts.to_vec(), COPULA_TOL);
    for &u in pts {
        let mut best: Option<(f64, f64)> = None;
        for &v in pts {
            let tail = c.tail(u, v);
            if tail <= 0.0 {
                continue;
            }
            let r = tail.ln() - (1.0 - v).ln();
            if let Some((bv, br)) = best {
                res.record(r >= br - COPULA_TOL, || Witness { point: vec![u, bv, v], lhs: r, rhs: br });
                if r > br {
                    best = Some((v, r));
                }
            } else {
                best = Some((v, r));
            }
        }
    }
    res.finish()
}

/// `C̄` is TP₂: `C̄(u₁,v₁)C̄(u₂,v₂) ≥ C̄(u₁,v₂)C̄(u₂,v₁)` for all grid
/// rectangles `u₁ < u₂`, `v₁ < v₂`. For each pair `u₁ < u₂` the log ratio
/// `ln C̄(u₂,v) − ln C̄(u₁,v)` must be nondecreasing in `v`. Witness points
/// are `[u₁, u₂, v₁, v₂]` with `lhs = ln C̄(u₁,v₁) + ln C̄(u₂,v₂)` falling
/// short of `rhs = ln C̄(u₁,v₂) + ln C̄(u₂,v₁)`.
pub fn check_tp2_tail(c: &dyn Copula, grid: &PGrid) -> OrderCheckResult {
    let pts = grid.points();
    let n = pts.len();
    let ln_tail: Vec<Vec<f64>> = pts.iter().map(|&u| pts.iter().map(|&v| c.tail(u, v).ln()).collect()).collect();
    let mut res = OrderCheckResult::new(Relation::Tp2Tail, pts.to_vec(), COPULA_TOL);
    for i in 0..n {
        for k in i + 1..n {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                let r = ln_tail[k][j] - ln_tail[i][j];
                if !r.is_finite() {
                    continue;
                }
                if let Some((bj, br)) = best {
                    res.record(r >= br - COPULA_TOL, || Witness {
                        point: vec![pts[i], pts[k], pts[bj], pts[j]],
                        lhs: ln_tail[i][bj] + ln_tail[k][j],
                        rhs: ln_tail[i][j] + ln_tail[k][bj],
                    });
                    if r > br {
                        best = Some((j, r));
                    }
                } else {
                    best = Some((j, r));
                }
            }
        }
    }
    res.finish()
}

/// `l_α(t) = C̄₂(α,t) / C̄₁(α,t)`.
pub fn l_alpha(c1: &dyn Copula, c2: &dyn Copula, alpha: f64, t: f64) -> f64 {
    c2.tail(alpha, t) / c1.tail(alpha, t)
}

/// `l'_α(t) = (C̄₂'·C̄₁ − C̄₂·C̄₁') / C̄₁²` with `∂_t C̄ᵢ(α,t) = −P(U > α | V = t)`.
pub fn l_alpha_derivative(c1: &dyn Copula, c2: &dyn Copula, alpha: f64, t: f64) -> f64 {
    let q = 1.0 - t;
    let (b1, b2) = (c1.tail(alpha, t), c2.tail(alpha, t));
    let (w1, w2) = (c1.exceed_given_v(alpha, t, q), c2.exceed_given_v(alpha, t, q));
    (-w2 * b1 + b2 * w1) / (b1 * b1)
}

/// The floor condition `l_α(t) ≥ l_α(β)` for `t ∈ {β} ∪ (grid ∩ (β,1))`,
/// with `monotone` reporting whether `l_α` is nondecreasing there (the
/// stronger sufficient condition). Witness points are `[t]` with `l_α(t)`
/// as `lhs` below the floor `l_α(β)` as `rhs`.
pub fn check_l_alpha(
    c1: &dyn Copula,
    c2: &dyn Copula,
    alpha: f64,
    beta: f64,
    grid: &PGrid,
) -> Result<OrderCheckResult> {
    crate::error::half_open_unit(alpha)?;
    crate::error::half_open_unit(beta)?;
    for c in [c1, c2] {
        let tail = c.tail(alpha, beta);
        if tail < crate::distortion::DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateConditioning { alpha, beta, tail });
        }
    }
    let mut ts = vec![beta];
    ts.extend(grid.points().iter().copied().filter(|&t| t > beta));
    let ls: Vec<f64> = ts.iter().map(|&t| l_alpha(c1, c2, alpha, t)).collect();
    let mut res = OrderCheckResult::new(Relation::LAlphaRatio, ts.clone(), COPULA_TOL);
    let floor = ls[0];
    for (&t, &l) in ts.iter().zip(&ls).skip(1) {
        res.record(le_scaled(floor, l, COPULA_TOL), || Witness { point: vec![t], lhs: l, rhs: floor });
    }
    let mut running = floor;
    let mut monotone = true;
    for &l in &ls[1..] {
        if !le_scaled(running, l, COPULA_TOL) {
            monotone = false;
        }
        running = running.max(l);
    }
    res.monotone = Some(monotone);
    res.notes.push(format!("alpha = {alpha}, beta = {beta}, l_alpha(beta) = {floor}"));
    Ok(res.finish())
}
