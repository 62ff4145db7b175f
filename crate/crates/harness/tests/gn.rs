use heine_harness::gn::{gn_direct, gn_evaluate, GapSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gaps(rng: &mut ChaCha8Rng) -> Vec<GapSpec> {
    let count = rng.random_range(1..=3);
    (0..count)
        .map(|_| GapSpec {
            rho: rng.random_range(0.05..0.95),
            delta_inner: rng.random_range(0.2..5.0),
            delta_outer: rng.random_range(0.2..5.0),
            tau: rng.random_range(0.01..0.99),
        })
        .collect()
}

// Jacobi triple product: (ρ²;ρ²)(−ρμ;ρ²)(−ρ/μ;ρ²) = Σ_k ρ^{k²} μ^k.
fn theta_form(gaps: &[GapSpec], n: usize) -> f64 {
    gaps.iter()
        .map(|g| {
            let x = (n as f64 * g.tau).fract();
            let mu = (g.delta_inner / g.delta_outer).sqrt() * g.rho.powf(2.0 * x);
            let series: f64 = (-60i32..=60).map(|k| g.rho.powi(k * k) * mu.powi(k)).sum();
            let q = g.rho * g.rho;
            let euler: f64 = (1..400).map(|k| 1.0 - q.powi(k)).product();
            x * mu.ln() - x * x * g.rho.ln() + series.ln() - euler.ln()
        })
        .sum()
}

#[test]
fn two_paths_agree_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let gaps = random_gaps(&mut rng);
        let n = rng.random_range(32..5000);
        let a = gn_evaluate(&gaps, n).unwrap().value;
        let b = gn_direct(&gaps, n).unwrap();
        assert!((a - b).abs() < 1e-12, "{gaps:?} n = {n}: {a} vs {b}");
    }
}

#[test]
fn triple_product_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let gaps = random_gaps(&mut rng);
        let n = rng.random_range(32..5000);
        let a = gn_evaluate(&gaps, n).unwrap().value;
        assert!((a - theta_form(&gaps, n)).abs() < 1e-11);
    }
}

#[test]
fn integer_mass_and_equal_laplacians() {
    let rho: f64 = 0.6;
    let g = GapSpec { rho, delta_inner: 2.0, delta_outer: 2.0, tau: 0.5 };
    let term = gn_evaluate(&[g], 64).unwrap();
    assert_eq!(term.gaps[0].x_nu, 0.0);
    assert_eq!(term.gaps[0].mu_nu, 1.0);
    let single: f64 = (0..200).map(|k| (1.0 + rho * rho.powi(2 * k)).ln()).sum();
    assert!((term.value - 2.0 * single).abs() < 1e-14);
}

#[test]
fn modulus_parameter() {
    let g = GapSpec { rho: 2.0 / 3.0, delta_inner: 1.0, delta_outer: 4.0, tau: 0.8 };
    let p = gn_evaluate(&[g], 258).unwrap().gaps[0];
    assert!((p.x_nu - 0.4).abs() < 1e-12);
    let c = 0.5 * f64::ln(4.0);
    assert!((p.mu_nu - (-c).exp() * (2.0f64 / 3.0).powf(0.8)).abs() < 1e-14);
}

#[test]
fn periodic_in_size() {
    let g = GapSpec { rho: 0.4, delta_inner: 1.0, delta_outer: 3.0, tau: 0.8 };
    for n in [100, 101, 257] {
        let a = gn_evaluate(&[g], n).unwrap().value;
        let b = gn_evaluate(&[g], n + 5).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn continuous_as_fraction_wraps() {
    let spec = |tau| GapSpec { rho: 0.5, delta_inner: 1.5, delta_outer: 0.7, tau };
    let below = gn_evaluate(&[spec(1.0 - 1e-9)], 1).unwrap().value;
    let above = gn_evaluate(&[spec(1e-9)], 1).unwrap().value;
    assert!((below - above).abs() < 1e-7);
}

#[test]
fn invalid_modulus_rejected() {
    let g = GapSpec { rho: 1.2, delta_inner: 1.0, delta_outer: 1.0, tau: 0.5 };
    assert!(gn_evaluate(&[g], 40).is_err());
}
