use jmes::copulas::CopulaModel;
use jmes::distortion::{compose_convexity_check, DistortionCurve, DistortionKind};
use jmes::orders::{Relation, Verdict};
use jmes::Error;
use proptest::prelude::*;

fn positive_dependence() -> Vec<CopulaModel> {
    vec![
        CopulaModel::gumbel(1.5).unwrap(),
        CopulaModel::gumbel(3.0).unwrap(),
        CopulaModel::gaussian(0.3).unwrap(),
        CopulaModel::gaussian(0.75).unwrap(),
        CopulaModel::student_t(0.5, 4.0).unwrap(),
    ]
}

fn all_copulas() -> Vec<CopulaModel> {
    let mut v = positive_dependence();
    v.extend([
        CopulaModel::Independence,
        CopulaModel::fgm(0.7).unwrap(),
        CopulaModel::fgm(-0.5).unwrap(),
        CopulaModel::gaussian(-0.4).unwrap(),
    ]);
    v
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[test]
fn independence_curve_is_linear_above_beta() {
    for (alpha, beta) in [(0.0, 0.0), (0.5, 0.3), (0.95, 0.9), (0.2, 0.99)] {
        let h = DistortionCurve::joint_tail(CopulaModel::Independence, alpha, beta).unwrap();
        for t in grid(101) {
            let want = ((t - beta) / (1.0 - beta)).max(0.0);
            assert!((h.eval(t) - want).abs() < 1e-14, "alpha={alpha} beta={beta} t={t}");
            if t > beta && t < 1.0 {
                assert!((h.derivative(t) - 1.0 / (1.0 - beta)).abs() < 1e-12);
            }
        }
        for p in grid(51) {
            let want = beta + (1.0 - beta) * p;
            assert!((h.inverse(p).unwrap() - want).abs() < 1e-11, "p={p}");
        }
    }
}

#[test]
fn curve_vanishes_up_to_beta_and_reaches_one() {
    for c in all_copulas() {
        let h = DistortionCurve::joint_tail(c, 0.6, 0.4).unwrap();
        for t in grid(41).into_iter().filter(|&t| t <= 0.4) {
            assert_eq!(h.eval(t), 0.0, "{c} t={t}");
        }
        assert_eq!(h.eval(1.0), 1.0);
        let vals: Vec<f64> = grid(501).iter().map(|&t| h.eval(t)).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{c} not monotone");
    }
}

#[test]
fn fgm_curve_matches_closed_form() {
    for theta in [-1.0, -0.5, 0.3, 1.0] {
        let c = CopulaModel::fgm(theta).unwrap();
        for (alpha, beta) in [(0.3, 0.2), (0.9, 0.8), (0.95, 0.5)] {
            let h = DistortionCurve::joint_tail(c, alpha, beta).unwrap();
            for t in grid(201).into_iter().filter(|&t| t > beta) {
                let want = 1.0 - (1.0 - t) * (1.0 + theta * alpha * t) / ((1.0 - beta) * (1.0 + theta * alpha * beta));
                assert!((h.eval(t) - want).abs() < 1e-12, "theta={theta} ({alpha},{beta}) t={t}");
            }
        }
    }
}

#[test]
fn marginal_tail_curve_and_inverse() {
    let h = DistortionCurve::marginal_tail(0.8).unwrap();
    assert_eq!(h.kind(), DistortionKind::MarginalTail);
    for t in grid(101) {
        assert!((h.eval(t) - ((t - 0.8) / 0.2).max(0.0)).abs() < 1e-14);
    }
    for p in grid(21) {
        assert!((h.inverse(p).unwrap() - (0.8 + 0.2 * p)).abs() < 1e-15);
    }
}

#[test]
fn inverse_at_zero_is_beta() {
    for c in all_copulas() {
        let h = DistortionCurve::joint_tail(c, 0.7, 0.45).unwrap();
        assert_eq!(h.inverse(0.0).unwrap(), 0.45);
    }
}

#[test]
fn inverse_round_trips() {
    for c in all_copulas() {
        for (alpha, beta) in [(0.0, 0.5), (0.5, 0.5), (0.9, 0.8), (0.95, 0.95), (0.99, 0.3)] {
            let h = DistortionCurve::joint_tail(c, alpha, beta).unwrap();
            for p in grid(101) {
                let t = h.inverse(p).unwrap();
                assert!((h.eval(t) - p).abs() <= 1e-10, "{c} ({alpha},{beta}) p={p}: h(t)={}", h.eval(t));
            }
            let d = DistortionCurve::dual_form(c, alpha, beta).unwrap();
            for p in grid(51) {
                let t = d.inverse(p).unwrap();
                assert!((d.eval(t) - p).abs() <= 1e-10, "dual {c} ({alpha},{beta}) p={p}");
            }
        }
    }
}

#[test]
fn dual_form_complements_joint_tail() {
    for c in all_copulas() {
        for (alpha, beta) in [(0.2, 0.1), (0.9, 0.8), (0.95, 0.95)] {
            let h = DistortionCurve::dual_form(c, alpha, beta).unwrap();
            let hb = DistortionCurve::joint_tail(c, alpha, beta).unwrap();
            for t in grid(201) {
                assert!((h.eval(t) + hb.eval(1.0 - t) - 1.0).abs() < 1e-12, "{c} t={t}");
            }
        }
    }
}

#[test]
fn derivative_matches_finite_differences() {
    for c in all_copulas() {
        let h = DistortionCurve::joint_tail(c, 0.7, 0.6).unwrap();
        for t in [0.62, 0.7, 0.8, 0.9, 0.97] {
            let step = 1e-6;
            let fd = (h.eval(t + step) - h.eval(t - step)) / (2.0 * step);
            let d = h.derivative(t);
            assert!((d - fd).abs() < 1e-5 * d.max(1.0), "{c} t={t}: {d} vs {fd}");
            let want = (1.0 - c.partial2(0.7, t)) / h.conditioning_probability();
            assert!((d - want).abs() < 1e-6 * want.max(1.0), "{c} t={t}");
        }
    }
}

#[test]
fn gaussian_derivative_is_nondecreasing() {
    let c = CopulaModel::gaussian(0.75).unwrap();
    let h = DistortionCurve::joint_tail(c, 0.9, 0.5).unwrap();
    let d: Vec<f64> = grid(1001).iter().filter(|&&t| t > 0.5 && t < 1.0).map(|&t| h.derivative(t)).collect();
    assert!(d.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn gumbel_derivative_limit_at_one() {
    // ∂₂C(α,v) → 0 as v → 1 for θ > 1, so P(U > α | V = 1) = 1.
    let c = CopulaModel::gumbel(3.0).unwrap();
    let h = DistortionCurve::joint_tail(c, 0.9, 0.8).unwrap();
    let limit = 1.0 / h.conditioning_probability();
    let d = h.derivative(1.0 - 1e-9);
    assert!((d - limit).abs() < 1e-4 * limit, "{d} vs {limit}");
}

#[test]
fn si_copulas_give_convex_curves() {
    for c in positive_dependence() {
        for (alpha, beta) in [(0.5, 0.3), (0.9, 0.8), (0.95, 0.5)] {
            let h = DistortionCurve::joint_tail(c, alpha, beta).unwrap();
            let g = grid(1001);
            let v: Vec<f64> = g.iter().map(|&t| h.eval(t)).collect();
            for i in 1..v.len() - 1 {
                assert!(v[i] <= 0.5 * (v[i - 1] + v[i + 1]) + 1e-9, "{c} ({alpha},{beta}) t={}", g[i]);
            }
        }
    }
}

#[test]
fn gumbel_curves_decrease_in_alpha() {
    let c = CopulaModel::gumbel(3.0).unwrap();
    let alphas = [0.0, 0.3, 0.6, 0.9, 0.95, 0.99];
    for beta in [0.0, 0.5, 0.8, 0.95] {
        let curves: Vec<_> = alphas.iter().map(|&a| DistortionCurve::joint_tail(c, a, beta).unwrap()).collect();
        for t in grid(401) {
            for w in curves.windows(2) {
                assert!(w[1].eval(t) <= w[0].eval(t) + 1e-12, "beta={beta} t={t}");
            }
        }
    }
}

#[test]
fn alpha_zero_is_the_marginal_tail_curve() {
    for c in all_copulas() {
        for beta in [0.0, 0.3, 0.9, 0.99] {
            let h = DistortionCurve::joint_tail(c, 0.0, beta).unwrap();
            let m = DistortionCurve::marginal_tail(beta).unwrap();
            for t in grid(201) {
                assert!((h.eval(t) - m.eval(t)).abs() < 1e-12, "{c} beta={beta} t={t}");
            }
        }
    }
}

#[test]
fn degenerate_conditioning_is_reported() {
    // Near-countermonotone dependence leaves almost no joint upper-tail mass.
    let err = DistortionCurve::joint_tail(CopulaModel::gaussian(-0.99).unwrap(), 0.999_999, 0.999_999).unwrap_err();
    assert!(matches!(err, Error::DegenerateConditioning { .. }), "{err:?}");
}

#[test]
fn convexity_check_identity_cases() {
    let c = CopulaModel::gumbel(3.0).unwrap();
    let a = DistortionCurve::joint_tail(c, 0.9, 0.8).unwrap();
    let r = compose_convexity_check(&a, &a).unwrap();
    assert_eq!(r.relation, Relation::DistortionConvexity);
    assert_eq!(r.verdict, Verdict::Holds);
    assert!(r.witnesses.is_empty());

    let i1 = DistortionCurve::joint_tail(CopulaModel::Independence, 0.2, 0.5).unwrap();
    let i2 = DistortionCurve::joint_tail(CopulaModel::Independence, 0.9, 0.5).unwrap();
    assert_eq!(compose_convexity_check(&i2, &i1).unwrap().verdict, Verdict::Holds);
}

#[test]
fn convexity_check_gumbel_pair() {
    let c = CopulaModel::gumbel(3.0).unwrap();
    let inner = DistortionCurve::joint_tail(c, 0.90, 0.8).unwrap();
    let outer = DistortionCurve::joint_tail(c, 0.95, 0.8).unwrap();
    let r = compose_convexity_check(&outer, &inner).unwrap();
    assert_eq!(r.grid.len(), 1001);
    assert_eq!(r.n_checked, 999);
    // Frozen from the 1001-point evaluation: the composed map is convex here.
    assert_eq!(r.verdict, Verdict::Holds, "{:?}", r.witnesses.first());
}

#[test]
fn convexity_check_finds_a_concave_composition() {
    // Swapping the roles makes h̄_{0.9}∘h̄_{0.95}⁻¹ the inverse of a convex
    // increasing map, hence concave.
    let c = CopulaModel::gumbel(3.0).unwrap();
    let inner = DistortionCurve::joint_tail(c, 0.95, 0.8).unwrap();
    let outer = DistortionCurve::joint_tail(c, 0.90, 0.8).unwrap();
    let r = compose_convexity_check(&outer, &inner).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    let w = &r.witnesses[0];
    assert_eq!(w.point.len(), 3);
    assert!(w.lhs > w.rhs + 1e-9);
}

#[test]
fn convexity_check_rejects_mismatched_curves() {
    let a = DistortionCurve::joint_tail(CopulaModel::gumbel(2.0).unwrap(), 0.9, 0.8).unwrap();
    let b = DistortionCurve::joint_tail(CopulaModel::gumbel(3.0).unwrap(), 0.9, 0.8).unwrap();
    let c = DistortionCurve::joint_tail(CopulaModel::gumbel(2.0).unwrap(), 0.9, 0.7).unwrap();
    assert!(compose_convexity_check(&a, &b).is_err());
    assert!(compose_convexity_check(&a, &c).is_err());
}

fn copula_strategy() -> impl Strategy<Value = CopulaModel> {
    prop_oneof![
        (1.0..6.0f64).prop_map(|t| CopulaModel::gumbel(t).unwrap()),
        (-1.0..1.0f64).prop_map(|t| CopulaModel::fgm(t).unwrap()),
        (-0.9..0.9f64).prop_map(|r| CopulaModel::gaussian(r).unwrap()),
        ((-0.9..0.9f64), (2.0..20.0f64)).prop_map(|(r, n)| CopulaModel::student_t(r, n).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn duality_and_round_trip(c in copula_strategy(), alpha in 0.0..0.97f64, beta in 0.0..0.97f64, p in 0.0..1.0f64, t in 0.0..1.0f64) {
        let h = DistortionCurve::joint_tail(c, alpha, beta).unwrap();
        let d = DistortionCurve::dual_form(c, alpha, beta).unwrap();
        prop_assert!((d.eval(t) + h.eval(1.0 - t) - 1.0).abs() < 1e-12);
        let s = h.inverse(p).unwrap();
        prop_assert!((h.eval(s) - p).abs() <= 1e-10);
        prop_assert!(s >= beta);
    }

    #[test]
    fn curve_is_a_distribution_function(c in copula_strategy(), alpha in 0.0..0.97f64, beta in 0.0..0.97f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let h = DistortionCurve::joint_tail(c, alpha, beta).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(h.eval(lo) <= h.eval(hi));
        prop_assert!((0.0..=1.0).contains(&h.eval(a)));
    }
}
