#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use heine_core::qdist::*;
use proptest::prelude::*;

fn tol() -> SeriesTolerance<f64> {
    SeriesTolerance::default()
}

// Reference values computed independently at 40 significant digits.
const QPOCH_HALF_HALF: f64 = 0.288_788_095_086_602_42;
const QPOCH_THIRD: f64 = 1.719_011_320_475_471_8;
const QPOCH_NEG_2_5: f64 = 8.242_841_543_032_811_5;
const QPOCH_SLOW: f64 = 3.012_223_764_201_138e-12;
const PMF_THIRD: [(usize, f64); 4] = [
    (0, 0.581_729_735_045_260_73),
    (1, 0.349_037_841_027_156_44),
    (2, 0.064_437_755_266_551_958),
    (5, 1.874_658_666_087_505_2e-6),
];
const CGF_THIRD_AT_1: f64 = 0.745_779_327_408_112_26;
const CGF_TWO_THIRDS_AT_MINUS_2: f64 = -0.839_749_679_646_783_57;
const MEAN_THIRD: f64 = 0.492_442_776_544_138_35;
const VAR_THIRD: f64 = 0.408_462_740_057_364_57;
const MEAN_TWO_THIRDS: f64 = 0.846_224_405_741_673_37;
const DNORM_LOG_NORMALIZER: f64 = 1.319_960_903_750_378_6;
const DNORM_PMF: [(i64, f64); 3] = [(-2, 0.211_078_120_421_500_66), (0, 0.267_145_746_158_461_78), (1, 0.089_048_582_052_820_592)];

fn heine(theta: f64, q: f64) -> HeineParams<f64> {
    HeineParams::new(theta, q).unwrap()
}

#[test]
fn finite_products() {
    assert_eq!(qpoch_finite(0.7, 0.3, 0), 1.0);
    assert_relative_eq!(qpoch_finite(0.5, 0.25, 2), 0.4375, epsilon = 1e-16);
    assert_relative_eq!(qpoch_finite(-1.0, 0.5, 3), 2.0 * 1.5 * 1.25, epsilon = 1e-15);
}

#[test]
fn infinite_products_against_references() {
    let t = tol();
    assert_eq!(qpoch_inf(0.0, 0.5, &t).unwrap(), 1.0);
    assert_relative_eq!(qpoch_inf(0.5, 0.5, &t).unwrap(), QPOCH_HALF_HALF, max_relative = 1e-14);
    assert!((qpoch_inf(0.5, 0.5, &t).unwrap() - qpoch_finite(0.5, 0.5, 200)).abs() < 1e-14);
    assert_relative_eq!(qpoch_inf(-1.0 / 3.0, 4.0 / 9.0, &t).unwrap(), QPOCH_THIRD, max_relative = 1e-14);
    assert_relative_eq!(qpoch_inf(-2.5, 0.3, &t).unwrap(), QPOCH_NEG_2_5, max_relative = 1e-14);
    assert_relative_eq!(qpoch_inf(0.9, 0.95, &t).unwrap(), QPOCH_SLOW, max_relative = 1e-11);
    assert_relative_eq!(log_qpoch_inf(0.9, 0.95, &t).unwrap(), QPOCH_SLOW.ln(), max_relative = 1e-13);
}

#[test]
fn infinite_product_reports_exhaustion() {
    let t = SeriesTolerance { eps: 1e-14, max_terms: 5 };
    assert!(matches!(qpoch_inf(0.5, 0.9, &t), Err(heine_core::Error::NonConvergence { .. })));
}

#[test]
fn heine_pmf_references() {
    let p = heine(1.0 / 3.0, 4.0 / 9.0);
    for (j, v) in PMF_THIRD {
        assert_relative_eq!(heine_pmf(j, &p, &tol()).unwrap(), v, max_relative = 1e-13);
    }
    let z = qpoch_inf(-p.theta, p.q, &tol()).unwrap();
    assert_relative_eq!(heine_pmf(0, &p, &tol()).unwrap(), 1.0 / z, max_relative = 1e-14);
    assert_relative_eq!(heine_pmf(1, &p, &tol()).unwrap(), p.theta / ((1.0 - p.q) * z), max_relative = 1e-14);
    let total: f64 = (0..=80).map(|j| heine_pmf(j, &p, &tol()).unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn heine_cgf_references() {
    let t = tol();
    assert_eq!(heine_cgf(0.0, &heine(1.0 / 3.0, 4.0 / 9.0), &t).unwrap(), 0.0);
    assert_relative_eq!(heine_cgf(1.0, &heine(1.0 / 3.0, 4.0 / 9.0), &t).unwrap(), CGF_THIRD_AT_1, max_relative = 1e-13);
    assert_relative_eq!(
        heine_cgf(-2.0, &heine(2.0 / 3.0, 4.0 / 9.0), &t).unwrap(),
        CGF_TWO_THIRDS_AT_MINUS_2,
        max_relative = 1e-13
    );
}

#[test]
fn heine_moments() {
    let t = tol();
    assert!(heine_mean(&heine(1e-14, 0.5), &t).unwrap() < 1e-13);
    assert_relative_eq!(heine_mean(&heine(1.0 / 3.0, 4.0 / 9.0), &t).unwrap(), MEAN_THIRD, max_relative = 1e-13);
    assert_relative_eq!(heine_variance(&heine(1.0 / 3.0, 4.0 / 9.0), &t).unwrap(), VAR_THIRD, max_relative = 1e-13);
    assert_relative_eq!(heine_mean(&heine(2.0 / 3.0, 4.0 / 9.0), &t).unwrap(), MEAN_TWO_THIRDS, max_relative = 1e-13);
}

#[test]
fn discrete_normal_references() {
    let p = DNormParams::new(1.0 / 3.0, 4.0 / 9.0).unwrap();
    let t = tol();
    assert_relative_eq!(dnorm_log_normalizer(&p, &t).unwrap(), DNORM_LOG_NORMALIZER, max_relative = 1e-14);
    for (k, v) in DNORM_PMF {
        assert_relative_eq!(dnorm_pmf(k, &p, &t).unwrap(), v, max_relative = 1e-13);
    }
    assert_eq!(dnorm_mode(&p), -1);
}

#[test]
fn invalid_parameters_rejected() {
    assert!(HeineParams::new(0.0, 0.5).is_err());
    assert!(HeineParams::new(1.0, 1.0).is_err());
    assert!(DNormParams::new(-1.0, 0.5).is_err());
    assert!(GapLaws::new(1.2, 0.0, 0.0).is_err());
}

#[test]
fn single_precision_products() {
    let t = SeriesTolerance { eps: 1e-6f32, max_terms: 1000 };
    let v = qpoch_inf(0.5f32, 0.5, &t).unwrap();
    assert!((v as f64 - QPOCH_HALF_HALF).abs() < 1e-5);
}

#[test]
fn gap_difference_is_discrete_normal() {
    // X⁺ − X⁻ with θ⁺θ⁻ = q has the discrete normal law with θ = θ⁺.
    let t = tol();
    let laws = GapLaws::new(2.0 / 3.0, 2f64.ln(), 0.4).unwrap();
    for k in -4i64..=4 {
        let mut conv = 0.0;
        for m in 0..80usize {
            let j = m as i64 + k;
            if j >= 0 {
                conv += heine_pmf(j as usize, &laws.plus, &t).unwrap() * heine_pmf(m, &laws.minus, &t).unwrap();
            }
        }
        assert_relative_eq!(conv, dnorm_pmf(k, &laws.dnorm, &t).unwrap(), max_relative = 1e-12);
    }
}

fn pmf_sum_cgf(s: f64, p: &HeineParams<f64>) -> f64 {
    let t = tol();
    let terms: Vec<f64> = (0..200)
        .map(|j| heine_log_pmf(j, p, &t).unwrap() + s * j as f64)
        .collect();
    heine_core::scalar::log_sum_exp(&terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_normalised(theta in 0.01f64..5.0, q in 0.05f64..0.9) {
        let p = heine(theta, q);
        let terms: Vec<f64> = (0..400).map(|j| heine_pmf(j, &p, &tol()).unwrap()).collect();
        prop_assert!((heine_core::scalar::pairwise_sum(&terms) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cgf_matches_pmf_sum(theta in 0.01f64..5.0, q in 0.05f64..0.8, s in -3.0f64..3.0) {
        let p = heine(theta, q);
        let a = heine_cgf(s, &p, &tol()).unwrap();
        prop_assert!((a - pmf_sum_cgf(s, &p)).abs() < 1e-9);
    }

    #[test]
    fn mean_is_cgf_slope(theta in 0.01f64..5.0, q in 0.05f64..0.8) {
        let p = heine(theta, q);
        let h = 1e-5;
        let slope = (heine_cgf(h, &p, &tol()).unwrap() - heine_cgf(-h, &p, &tol()).unwrap()) / (2.0 * h);
        prop_assert!((slope - heine_mean(&p, &tol()).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn finite_product_is_prefix_of_infinite(z in -3.0f64..0.99, q in 0.05f64..0.7, j in 0usize..30) {
        let t = tol();
        let tail: f64 = (j..j + 2000).map(|i| 1.0 - z * q.powi(i as i32)).product();
        let v = qpoch_finite(z, q, j) * tail;
        prop_assert!((v - qpoch_inf(z, q, &t).unwrap()).abs() <= 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn dnorm_normalised(theta in 0.05f64..20.0, q in 0.05f64..0.9) {
        let p = DNormParams::new(theta, q).unwrap();
        let t = tol();
        let m = dnorm_mode(&p);
        let total: f64 = (m - 200..=m + 200).map(|k| dnorm_pmf(k, &p, &t).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
