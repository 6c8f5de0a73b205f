// Oracle constants keep every digit the reference printed.
#![allow(clippy::excessive_precision)]

mod support;

use jmes::distributions::{MarginalModel, PGrid};
use jmes::Error;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma, LogNormal, Normal, StudentsT};
use support::composite_gl;

fn families() -> Vec<MarginalModel> {
    vec![
        MarginalModel::normal(1.0, 2.0).unwrap(),
        MarginalModel::lognormal(0.0, 0.5).unwrap(),
        MarginalModel::student_t(1.0).unwrap(),
        MarginalModel::student_t(2.0).unwrap(),
        MarginalModel::student_t(4.05923).unwrap(),
        MarginalModel::gamma(0.5, 2.0).unwrap(),
        MarginalModel::gamma(3.0, 1.5).unwrap(),
        MarginalModel::gpd(0.2, 1.0, 0.0).unwrap(),
        MarginalModel::gpd(-0.3, 2.0, 1.0).unwrap(),
        MarginalModel::gpd(0.0, 1.5, -1.0).unwrap(),
        MarginalModel::shift_scale(MarginalModel::gamma(2.0, 2.5).unwrap(), -3.0, 0.5).unwrap(),
    ]
}

/// Families whose upper tail mean is finite.
fn integrable() -> Vec<MarginalModel> {
    families().into_iter().filter(|m| m.upper_tail_integrable()).collect()
}

#[test]
fn cdf_examples() {
    let gpd = MarginalModel::gpd(1.0, 2.0, 0.0).unwrap();
    assert!((gpd.cdf(2.0) - 0.5).abs() < 1e-15);
    assert_eq!(MarginalModel::normal(0.0, 1.0).unwrap().cdf(0.0), 0.5);
    assert!((MarginalModel::student_t(1.0).unwrap().cdf(1.0) - 0.75).abs() < 1e-15);
}

#[test]
fn quantile_examples() {
    assert!((MarginalModel::student_t(1.0).unwrap().quantile(0.75).unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(MarginalModel::student_t(2.0).unwrap().quantile(0.5).unwrap(), 0.0);
    let n = MarginalModel::normal(1.0, 2.0).unwrap();
    // 1 + 2Φ⁻¹(0.975) by 30-digit root finding on Φ
    let q = n.quantile(0.975).unwrap();
    assert!((q - 4.919_927_969_080_108_5).abs() < 1e-13);
    assert!((q - 4.9199).abs() < 1e-4);
    for p in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(matches!(n.quantile(p), Err(Error::Domain { .. })));
    }
}

#[test]
fn quantiles_match_statrs() {
    let ps = [1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-6];
    let cases: Vec<(MarginalModel, Box<dyn ContinuousCDF<f64, f64>>)> = vec![
        (MarginalModel::normal(1.0, 2.0).unwrap(), Box::new(Normal::new(1.0, 2.0).unwrap())),
        (MarginalModel::lognormal(0.0, 0.5).unwrap(), Box::new(LogNormal::new(0.0, 0.5).unwrap())),
        (MarginalModel::gamma(3.0, 1.5).unwrap(), Box::new(Gamma::new(3.0, 1.0 / 1.5).unwrap())),
        (MarginalModel::student_t(4.05923).unwrap(), Box::new(StudentsT::new(0.0, 1.0, 4.05923).unwrap())),
    ];
    for (m, d) in &cases {
        for &p in &ps {
            let q = m.quantile(p).unwrap();
            assert!((d.cdf(q) - p).abs() < 1e-9 * p.max(1e-3), "{m} p={p}");
            // statrs' erfc carries relative errors near 1e-11 in the tails
            for x in [-3.0, 0.3, 2.0, 7.5] {
                assert!((m.cdf(x) - d.cdf(x)).abs() <= 1e-10 * d.cdf(x), "{m} x={x}");
            }
        }
    }
}

#[test]
fn round_trip_on_the_default_grid() {
    let g = PGrid::order_default();
    for m in families() {
        for &p in g.points() {
            let q = m.quantile(p).unwrap();
            assert!((m.cdf(q) - p).abs() <= 1e-9, "{m} p={p}: {}", m.cdf(q));
        }
    }
}

#[test]
fn upper_quantiles_keep_relative_accuracy() {
    for m in families() {
        for q in [1e-3, 1e-8, 1e-14] {
            let x = m.quantile_upper(q).unwrap();
            assert!((m.sf(x) / q - 1.0).abs() < 1e-8, "{m} q={q}: sf = {}", m.sf(x));
        }
    }
}

#[test]
fn es_examples() {
    let n = MarginalModel::normal(0.0, 1.0).unwrap();
    let es = n.es(0.95).unwrap();
    // φ(Φ⁻¹(0.95))/0.05 at 30 digits
    assert!((es - 2.062_712_807_507_427_7).abs() < 1e-12);
    let ln = MarginalModel::lognormal(0.0, 1.0).unwrap();
    let z = Normal::new(0.0, 1.0).unwrap();
    let closed = 0.5f64.exp() * z.cdf(1.0 - z.inverse_cdf(0.95)) / 0.05;
    assert!((ln.es(0.95).unwrap() - closed).abs() < 1e-9 * closed);
    // e^{1/2}Φ(1 − Φ⁻¹(0.95))/0.05 at 30 digits; it exceeds VaR_0.95 = e^{1.645}
    assert!((closed - 8.557_226_866_796_713).abs() < 1e-9);
    assert!(closed > ln.quantile(0.95).unwrap());
    for m in integrable() {
        assert!((m.es(0.0).unwrap() - m.mean().unwrap()).abs() < 1e-9 * m.mean().unwrap().abs().max(1.0), "{m}");
    }
    let cauchy = MarginalModel::student_t(1.0).unwrap();
    assert!(matches!(cauchy.es(0.5), Err(Error::NonintegrableTail(_))));
    assert!(matches!(cauchy.mean(), Err(Error::NonintegrableTail(_))));
    assert!(matches!(MarginalModel::gpd(1.2, 1.0, 0.0).unwrap().es(0.5), Err(Error::NonintegrableTail(_))));
}

#[test]
fn es_is_the_average_of_var() {
    // ∫_p^1 F⁻¹(t) dt through s = −ln(1−t), integrated in s on [−ln(1−p), 60].
    for m in integrable() {
        for p in [0.1, 0.5, 0.9, 0.99] {
            let s0 = -(1.0f64 - p).ln();
            let f = |s: f64| m.quantile_upper((-s).exp()).unwrap() * (-s).exp();
            let oracle = composite_gl(f, s0, s0 + 60.0, 600) / (1.0 - p);
            let es = m.es(p).unwrap();
            assert!((es - oracle).abs() <= 1e-6 * oracle.abs().max(1.0), "{m} p={p}: {es} vs {oracle}");
            assert!(es >= m.quantile(p).unwrap());
        }
    }
}

#[test]
fn excess_wealth_and_epw_examples() {
    let n = MarginalModel::normal(0.0, 1.0).unwrap();
    let w = n.excess_wealth(0.95).unwrap();
    let z = Normal::new(0.0, 1.0).unwrap();
    assert!((w - 0.05 * (2.062_712_807_507_427_7 - z.inverse_cdf(0.95))).abs() < 1e-12);
    assert!((w - 0.02089).abs() < 1e-5);
    let shifted = n.shifted(4.0).unwrap();
    assert!((shifted.excess_wealth(0.95).unwrap() - w).abs() < 1e-12);
    for (b, p) in [(1.0, 0.3), (2.5, 0.9), (0.7, 0.999)] {
        let exp = MarginalModel::gamma(1.0, b).unwrap();
        assert!((exp.excess_wealth(p).unwrap() - b * (1.0 - p)).abs() < 1e-12 * b);
    }

    let exp = MarginalModel::gamma(1.0, 1.0).unwrap();
    let p = 1.0 - (-1.0f64).exp();
    assert!((exp.quantile(p).unwrap() - 1.0).abs() < 1e-12);
    assert!((exp.epw(p).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
    let g = MarginalModel::gamma(2.0, 1.5).unwrap();
    assert!((g.scaled(3.0).unwrap().epw(0.8).unwrap() - g.epw(0.8).unwrap()).abs() < 1e-12);
    assert_eq!(n.epw(0.5), Err(Error::ZeroQuantile(0.5)));
}

#[test]
fn means_and_densities() {
    assert_eq!(MarginalModel::gamma(3.0, 1.5).unwrap().mean().unwrap(), 4.5);
    assert_eq!(MarginalModel::normal(-2.0, 3.0).unwrap().mean().unwrap(), -2.0);
    let d = MarginalModel::normal(0.0, 1.0).unwrap().density(0.0).unwrap();
    assert!((d - 0.398_942_280_401_432_7).abs() < 1e-15);
    assert!(MarginalModel::empirical(&[1.0, 2.0, 4.0]).unwrap().density(2.0).is_none());
    for m in families() {
        let (a, b) = (m.quantile(0.3).unwrap(), m.quantile(0.7).unwrap());
        let mass = composite_gl(|x| m.density(x).unwrap(), a, b, 40);
        assert!((mass - 0.4).abs() < 1e-10, "{m}: {mass}");
    }
}

#[test]
fn empirical_uses_the_generalized_inverse() {
    let e = MarginalModel::empirical(&[3.0, 1.0, 2.0, 2.0, 5.0]).unwrap();
    assert_eq!(e.quantile(0.2).unwrap(), 1.0);
    assert_eq!(e.quantile(0.21).unwrap(), 2.0);
    assert_eq!(e.quantile(0.6).unwrap(), 2.0);
    assert_eq!(e.quantile(0.61).unwrap(), 3.0);
    assert_eq!(e.cdf(2.0), 0.6);
    assert_eq!(e.cdf(1.999), 0.2);
    assert!((e.mean().unwrap() - 2.6).abs() < 1e-15);
    // ES over the atoms: ∫_{0.6}^1 F⁻¹ = 0.2·3 + 0.2·5.
    assert!((e.es(0.6).unwrap() - 4.0).abs() < 1e-12);
    assert!(MarginalModel::empirical(&[]).is_err());
}

#[test]
fn constructors_validate_parameters() {
    assert!(MarginalModel::normal(0.0, 0.0).is_err());
    assert!(MarginalModel::gamma(-1.0, 1.0).is_err());
    assert!(MarginalModel::gamma(1.0, f64::INFINITY).is_err());
    assert!(MarginalModel::student_t(0.0).is_err());
    assert!(MarginalModel::gpd(0.1, -1.0, 0.0).is_err());
    assert!(MarginalModel::shift_scale(MarginalModel::normal(0.0, 1.0).unwrap(), 0.0, -2.0).is_err());
    assert!(MarginalModel::comonotone_sum(vec![]).is_err());
}

#[test]
fn grid_validation() {
    assert!(PGrid::new(vec![0.1, 0.1]).is_err());
    assert!(PGrid::new(vec![0.2, 0.1]).is_err());
    assert!(PGrid::new(vec![0.0, 0.5]).is_err());
    assert!(PGrid::new(vec![0.5, 1.0]).is_err());
    let u = PGrid::uniform(9);
    assert_eq!(u.len(), 9);
    assert!(u.points().windows(2).all(|w| w[0] < w[1]));
    assert!(u.points()[0] > 0.0 && u.points()[8] < 1.0);
}

#[test]
fn comonotone_sum_adds_quantiles() {
    let parts = vec![MarginalModel::gamma(2.0, 1.0).unwrap(), MarginalModel::lognormal(0.0, 0.5).unwrap()];
    let s = MarginalModel::comonotone_sum(parts.clone()).unwrap();
    for p in [0.01, 0.3, 0.9, 0.999] {
        let want: f64 = parts.iter().map(|m| m.quantile(p).unwrap()).sum();
        assert!((s.quantile(p).unwrap() - want).abs() < 1e-9 * want);
        let es: f64 = parts.iter().map(|m| m.es(p).unwrap()).sum();
        assert!((s.es(p).unwrap() - es).abs() < 1e-8 * es);
    }
}

fn model_strategy() -> impl Strategy<Value = MarginalModel> {
    prop_oneof![
        ((-5.0..5.0f64), (0.1..5.0f64)).prop_map(|(m, s)| MarginalModel::normal(m, s).unwrap()),
        ((-1.0..1.0f64), (0.1..1.5f64)).prop_map(|(m, s)| MarginalModel::lognormal(m, s).unwrap()),
        ((0.3..8.0f64), (0.2..4.0f64)).prop_map(|(a, b)| MarginalModel::gamma(a, b).unwrap()),
        (1.5..30.0f64).prop_map(|nu| MarginalModel::student_t(nu).unwrap()),
        ((-0.4..0.8f64), (0.2..3.0f64)).prop_map(|(x, s)| MarginalModel::gpd(x, s, 0.0).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cdf_is_monotone_with_correct_limits(m in model_strategy(), a in -50.0..50.0f64, d in 0.0..10.0f64) {
        let (fa, fb) = (m.cdf(a), m.cdf(a + d));
        prop_assert!((0.0..=1.0).contains(&fa));
        prop_assert!(fa <= fb);
        prop_assert!(m.cdf(-1e300) < 1e-6 && m.cdf(1e300) > 1.0 - 1e-6);
    }

    #[test]
    fn quantile_is_the_generalized_inverse(m in model_strategy(), p in 1e-6..(1.0 - 1e-6)) {
        let q = m.quantile(p).unwrap();
        prop_assert!((m.cdf(q) - p).abs() <= 1e-9);
    }

    #[test]
    fn es_dominates_var_and_grows(m in model_strategy(), p in 0.0..0.99f64, d in 0.0..0.009f64) {
        let es = m.es(p).unwrap();
        if p > 0.0 {
            prop_assert!(es >= m.quantile(p).unwrap() - 1e-9 * es.abs().max(1.0));
        }
        prop_assert!(m.es(p + d).unwrap() >= es - 1e-9 * es.abs().max(1.0));
    }
}
