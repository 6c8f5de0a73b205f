use jmes::copulas::{Copula, CopulaModel};
use jmes::distributions::{MarginalModel, PGrid};
use jmes::orders::*;
use proptest::prelude::*;

fn gamma(shape: f64, scale: f64) -> MarginalModel {
    MarginalModel::gamma(shape, scale).unwrap()
}

fn normal(mu: f64, sigma: f64) -> MarginalModel {
    MarginalModel::normal(mu, sigma).unwrap()
}

fn grid() -> PGrid {
    PGrid::order_default()
}

#[test]
fn default_grid_layout() {
    let g = grid();
    assert_eq!(g.len(), 239);
    assert!(g.points()[0] < 1e-6 && g.points()[238] > 1.0 - 1e-6);
}

#[test]
fn example_pairs_are_classified() {
    let g = grid();
    // icx holds while st fails.
    let (x, y) = (gamma(3.0, 1.5), gamma(2.0, 2.5));
    let st = check_st(&x, &y, &g);
    assert_eq!(st.verdict, Verdict::Violated);
    assert_eq!(st.relation.name(), "st");
    let w = &st.witnesses[0];
    assert!(w.lhs > w.rhs);
    assert!(x.quantile(w.point[0]).unwrap() > y.quantile(w.point[0]).unwrap());
    assert!(check_icx(&x, &y, &g).unwrap().holds());
    assert!(check_icx(&y, &x, &g).unwrap().violated());

    let (x, y) = (gamma(1.5, 2.5), gamma(2.0, 3.0));
    assert!(check_disp(&x, &y, &g).holds());
    assert!(check_disp(&y, &x, &g).violated());

    let (x, y) = (gamma(2.0, 1.5), gamma(1.0, 1.0));
    assert!(check_epw(&x, &y, &g).unwrap().holds());
    assert!(check_epw(&y, &x, &g).unwrap().violated());
}

#[test]
fn st_basic_cases() {
    let g = grid();
    let m = gamma(2.0, 2.5);
    let r = check_st(&m, &m, &g);
    assert!(r.holds() && r.witnesses.is_empty());
    assert_eq!(r.n_checked, g.len());
    assert!(check_st(&normal(0.0, 1.0), &normal(1.0, 1.0), &g).holds());
    assert!(check_st(&normal(1.0, 1.0), &normal(0.0, 1.0), &g).violated());
}

#[test]
fn icx_rejects_infinite_means() {
    let t1 = MarginalModel::student_t(1.0).unwrap();
    assert!(check_icx(&t1, &normal(0.0, 1.0), &grid()).is_err());
}

#[test]
fn disp_is_location_invariant() {
    let m = gamma(2.0, 2.5);
    let shifted = m.shifted(7.0).unwrap();
    let r = check_disp(&m, &shifted, &grid());
    assert!(r.holds());
    assert!(check_disp(&shifted, &m, &grid()).holds());
}

#[test]
fn epw_is_scale_invariant_and_skips_zero_quantiles() {
    let m = gamma(2.0, 1.5);
    assert!(check_epw(&m, &m.scaled(4.0).unwrap(), &grid()).unwrap().holds());
    assert!(check_epw(&m.scaled(4.0).unwrap(), &m, &grid()).unwrap().holds());
    // VaR_½ of N(0,1) is exactly zero.
    let g = PGrid::new(vec![0.25, 0.5, 0.75]).unwrap();
    let r = check_epw(&normal(0.0, 1.0), &normal(0.0, 1.0), &g).unwrap();
    assert_eq!(r.n_checked, 2);
    assert!(r.notes.iter().any(|n| n.contains("zero-quantile")));
}

#[test]
fn lr_cases() {
    let g = grid();
    let (a, b) = (normal(0.0, 1.0), normal(1.0, 1.0));
    assert!(check_lr(&a, &b, &lr_grid(&a, &b, &g)).holds());
    let m = gamma(2.0, 2.5);
    assert!(check_lr(&m, &m, &lr_grid(&m, &m, &g)).holds());
    // Gam(2,1)/Gam(3,1) density ratio is 2/x, decreasing.
    let (x, y) = (gamma(3.0, 1.0), gamma(2.0, 1.0));
    let r = check_lr(&x, &y, &lr_grid(&x, &y, &g));
    assert!(r.violated());
    assert!(check_lr(&y, &x, &lr_grid(&y, &x, &g)).holds());

    let e = MarginalModel::empirical(&[1.0, 2.0, 3.0]).unwrap();
    let r = check_lr(&e, &m, &[1.0, 2.0]);
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert!(r.notes[0].contains("density"));
}

#[test]
fn dependence_checks_on_gumbel_and_independence() {
    let g = PGrid::uniform(60);
    let gum = CopulaModel::gumbel(2.0).unwrap();
    assert!(check_si(&gum, &g).holds());
    assert!(check_rti(&gum, &g).holds());
    assert!(check_tp2_tail(&gum, &g).holds());
    let ind = CopulaModel::Independence;
    for r in [check_si(&ind, &g), check_rti(&ind, &g), check_tp2_tail(&ind, &g)] {
        assert!(r.holds(), "{:?}", r.relation);
    }
}

#[test]
fn negative_fgm_is_not_tp2() {
    let c = CopulaModel::fgm(-0.5).unwrap();
    let r = check_tp2_tail(&c, &PGrid::uniform(30));
    assert!(r.violated());
    let w = &r.witnesses[0];
    assert_eq!(w.point.len(), 4);
    let (u1, u2, v1, v2) = (w.point[0], w.point[1], w.point[2], w.point[3]);
    assert!(u1 < u2 && v1 < v2);
    assert!(c.tail(u1, v1) * c.tail(u2, v2) < c.tail(u1, v2) * c.tail(u2, v1));
    assert!(check_si(&c, &PGrid::uniform(30)).violated());
    assert!(check_rti(&c, &PGrid::uniform(30)).violated());
}

#[test]
fn positive_families_pass_the_dependence_checks() {
    let g = PGrid::uniform(40);
    for c in [
        CopulaModel::gumbel(1.5).unwrap(),
        CopulaModel::gumbel(3.0).unwrap(),
        CopulaModel::gaussian(0.3).unwrap(),
        CopulaModel::gaussian(0.75).unwrap(),
        CopulaModel::fgm(0.7).unwrap(),
    ] {
        assert!(check_si(&c, &g).holds(), "{c}");
        assert!(check_rti(&c, &g).holds(), "{c}");
        assert!(check_tp2_tail(&c, &g).holds(), "{c}");
    }
}

#[test]
fn l_alpha_cases() {
    let g = PGrid::uniform(200);
    let (f1, f2) = (CopulaModel::fgm(0.2).unwrap(), CopulaModel::fgm(0.8).unwrap());
    let r = check_l_alpha(&f1, &f2, 0.7, 0.3, &g).unwrap();
    assert!(r.holds());
    assert_eq!(r.monotone, Some(true));
    for t in [0.35, 0.6, 0.95] {
        // l_α(t) = (1 + θ₂αt)/(1 + θ₁αt)
        let want = (1.0 + 0.8 * 0.7 * t) / (1.0 + 0.2 * 0.7 * t);
        assert!((l_alpha(&f1, &f2, 0.7, t) - want).abs() < 1e-12);
    }
    // The reversed pair is decreasing, so the floor condition fails.
    assert!(check_l_alpha(&f2, &f1, 0.7, 0.3, &g).unwrap().violated());

    let c = CopulaModel::gaussian(0.6).unwrap();
    let r = check_l_alpha(&c, &c, 0.5, 0.5, &g).unwrap();
    assert!(r.holds());
    assert_eq!(r.monotone, Some(true));
}

#[test]
fn l_alpha_gumbel_region() {
    let (c1, c2) = (CopulaModel::gumbel(3.0).unwrap(), CopulaModel::gumbel(2.0).unwrap());
    let tgrid = PGrid::new((1..1000).map(|i| 0.82 + 0.18 * i as f64 / 1000.0).collect()).unwrap();
    for i in 0..=20 {
        let alpha = 0.6 + 0.01 * i as f64;
        for beta in [0.82, 0.85, 0.9, 0.95, 0.99, 0.999] {
            let r = check_l_alpha(&c1, &c2, alpha, beta, &tgrid).unwrap();
            assert!(r.holds() && r.monotone == Some(true), "({alpha},{beta})");
        }
        let mut t = 0.82;
        while t < 1.0 {
            assert!(l_alpha_derivative(&c1, &c2, alpha, t) > 0.0, "alpha={alpha} t={t}");
            t += 0.001;
        }
    }
}

#[test]
fn l_alpha_derivative_matches_finite_differences() {
    let (c1, c2) = (CopulaModel::gumbel(3.0).unwrap(), CopulaModel::gaussian(0.5).unwrap());
    for t in [0.3, 0.6, 0.9] {
        let h = 1e-6;
        let fd = (l_alpha(&c1, &c2, 0.7, t + h) - l_alpha(&c1, &c2, 0.7, t - h)) / (2.0 * h);
        let d = l_alpha_derivative(&c1, &c2, 0.7, t);
        assert!((d - fd).abs() < 1e-5 * d.abs().max(1.0), "t={t}: {d} vs {fd}");
    }
}

#[test]
fn l_alpha_reports_degenerate_conditioning() {
    let c1 = CopulaModel::gaussian(-0.99).unwrap();
    let c2 = CopulaModel::gumbel(2.0).unwrap();
    let err = check_l_alpha(&c1, &c2, 0.999_999, 0.999_999, &PGrid::uniform(10)).unwrap_err();
    assert!(matches!(err, jmes::Error::DegenerateConditioning { .. }));
}

/// `uv + θ·uv(1−u)(1−v)(u − v)`: a cdf-like surface that is not exchangeable.
struct Skewed(f64);

impl Copula for Skewed {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        u * v + self.0 * u * v * (1.0 - u) * (1.0 - v) * (u - v)
    }
}

#[test]
fn symmetry_cases() {
    let g = PGrid::uniform(30);
    for c in [
        CopulaModel::Independence,
        CopulaModel::Comonotone,
        CopulaModel::fgm(0.7).unwrap(),
        CopulaModel::gumbel(3.0).unwrap(),
        CopulaModel::gaussian(0.75).unwrap(),
        CopulaModel::student_t(0.5, 4.0).unwrap(),
    ] {
        assert!(check_symmetry(&c, &g).holds(), "{c}");
    }
    let r = check_symmetry(&Skewed(0.5), &g);
    assert!(r.violated());
    let w = &r.witnesses[0];
    assert!((w.lhs - w.rhs).abs() > 1e-12);
}

#[test]
fn si_checks_both_directions_for_asymmetric_copulas() {
    let g = PGrid::uniform(20);
    let r = check_si(&Skewed(0.5), &g);
    assert!(r.notes.iter().any(|n| n.contains("not exchangeable")));
    let r = check_si(&CopulaModel::gumbel(2.0).unwrap(), &g);
    assert!(r.notes.iter().any(|n| n.contains("one direction suffices")));
}

#[test]
fn implication_chain_over_gamma_matrix() {
    let g = grid();
    let shapes = [0.5, 1.0, 1.5, 2.0, 3.0];
    let scales = [0.5, 1.0, 1.5, 2.5];
    let models: Vec<MarginalModel> = shapes.iter().flat_map(|&a| scales.iter().map(move |&s| gamma(a, s))).collect();
    let mut lr_pairs = 0;
    let mut disp_pairs = 0;
    for m1 in &models {
        for m2 in &models {
            let st = check_st(m1, m2, &g).holds();
            let icx = check_icx(m1, m2, &g).unwrap().holds();
            if check_lr(m1, m2, &lr_grid(m1, m2, &g)).holds() {
                lr_pairs += 1;
                assert!(st, "lr without st: {m1} {m2}");
            }
            if st {
                assert!(icx, "st without icx: {m1} {m2}");
            }
            // Gamma supports share the left endpoint 0.
            if check_disp(m1, m2, &g).holds() {
                disp_pairs += 1;
                assert!(st, "disp without st: {m1} {m2}");
            }
        }
    }
    assert!(lr_pairs > models.len());
    assert!(disp_pairs > models.len());
}

#[test]
fn results_serialize_with_witnesses() {
    let r = check_st(&gamma(3.0, 1.5), &gamma(2.0, 2.5), &grid());
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["relation"], "st");
    assert_eq!(json["verdict"], "violated");
    assert!(!json["witnesses"].as_array().unwrap().is_empty());
    assert_eq!(json["grid"].as_array().unwrap().len(), 239);
    assert_eq!(serde_json::to_value(Relation::Tp2Tail).unwrap(), "TP2_tail");
    assert_eq!(serde_json::to_value(Relation::Si).unwrap(), "SI");
    assert_eq!(serde_json::to_value(Relation::LAlphaRatio).unwrap(), "l_alpha_ratio");
}

fn gamma_strategy() -> impl Strategy<Value = MarginalModel> {
    ((0.3..5.0f64), (0.3..4.0f64)).prop_map(|(a, s)| gamma(a, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refining_the_grid_never_clears_a_violation(m1 in gamma_strategy(), m2 in gamma_strategy(), keep in prop::collection::vec(any::<bool>(), 239)) {
        let fine = grid();
        let coarse_pts: Vec<f64> = fine.points().iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
        prop_assume!(coarse_pts.len() >= 2);
        let coarse = PGrid::new(coarse_pts).unwrap();
        if check_st(&m1, &m2, &coarse).violated() {
            prop_assert!(check_st(&m1, &m2, &fine).violated());
        }
        if check_disp(&m1, &m2, &coarse).violated() {
            prop_assert!(check_disp(&m1, &m2, &fine).violated());
        }
        if check_icx(&m1, &m2, &coarse).unwrap().violated() {
            prop_assert!(check_icx(&m1, &m2, &fine).unwrap().violated());
        }
        if check_epw(&m1, &m2, &coarse).unwrap().violated() {
            prop_assert!(check_epw(&m1, &m2, &fine).unwrap().violated());
        }
    }

    #[test]
    fn holds_means_no_witnesses(m1 in gamma_strategy(), m2 in gamma_strategy()) {
        for r in [check_st(&m1, &m2, &grid()), check_disp(&m1, &m2, &grid()), check_icx(&m1, &m2, &grid()).unwrap()] {
            prop_assert_eq!(r.holds(), r.witnesses.is_empty());
            prop_assert_eq!(r.violated(), r.n_violations > 0);
        }
    }

    #[test]
    fn tp2_refinement_is_monotone(theta in -1.0..1.0f64) {
        let c = CopulaModel::fgm(theta).unwrap();
        if check_tp2_tail(&c, &PGrid::uniform(9)).violated() {
            prop_assert!(check_tp2_tail(&c, &PGrid::uniform(19)).violated());
        }
    }
}
