//! Oscillatory term of the free energy for droplets separated by gaps.

use heine_core::qdist::{log_qpoch_inf, SeriesTolerance};
use heine_core::scalar::frac;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// One gap: conformal modulus, boundary Laplacians and enclosed mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSpec {
    /// `b/a`, inner over outer radius.
    pub rho: f64,
    /// `ΔQ` on the inner boundary.
    pub delta_inner: f64,
    /// `ΔQ` on the outer boundary.
    pub delta_outer: f64,
    /// Equilibrium mass inside the gap.
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnGap {
    pub rho_nu: f64,
    pub mu_nu: f64,
    pub x_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnTerm {
    pub n: usize,
    pub gaps: Vec<GnGap>,
    pub value: f64,
}

fn params(g: &GapSpec, n: usize) -> Result<GnGap, HarnessError> {
    if !(g.rho > 0.0 && g.rho < 1.0) {
        return Err(HarnessError::Config(format!("rho must lie in (0, 1), got {}", g.rho)));
    }
    let x = frac(n as f64 * g.tau);
    Ok(GnGap {
        rho_nu: g.rho,
        mu_nu: (g.delta_inner / g.delta_outer).sqrt() * g.rho.powf(2.0 * x),
        x_nu: x,
    })
}

/// `Σ (x log μ − x² log ρ) + Σ log(−ρμ; ρ²)_∞ + Σ log(−ρ/μ; ρ²)_∞`.
pub fn gn_evaluate(gaps: &[GapSpec], n: usize) -> Result<GnTerm, HarnessError> {
    let tol = SeriesTolerance::default();
    let mut value = 0.0;
    let mut out = Vec::with_capacity(gaps.len());
    for g in gaps {
        let p = params(g, n)?;
        let (rho, mu, x) = (p.rho_nu, p.mu_nu, p.x_nu);
        let q = rho * rho;
        value += x * mu.ln() - x * x * rho.ln();
        value += log_qpoch_inf(-rho * mu, q, &tol)? + log_qpoch_inf(-rho / mu, q, &tol)?;
        out.push(p);
    }
    Ok(GnTerm { n, gaps: out, value })
}

/// The same sum with each infinite product expanded as `Π_k (1 + z ρ^{2k})`
/// until the factors are one in double precision.
pub fn gn_direct(gaps: &[GapSpec], n: usize) -> Result<f64, HarnessError> {
    let mut total = 0.0;
    for g in gaps {
        let x = (n as f64 * g.tau).fract();
        let mu = (g.delta_inner / g.delta_outer).sqrt() * g.rho.powf(2.0 * x);
        let mut prod_a = 1.0f64;
        let mut prod_b = 1.0f64;
        let mut power = 1.0f64;
        for _ in 0..100_000 {
            let (fa, fb) = (1.0 + g.rho * mu * power, 1.0 + g.rho / mu * power);
            if fa == 1.0 && fb == 1.0 {
                break;
            }
            prod_a *= fa;
            prod_b *= fb;
            power *= g.rho * g.rho;
        }
        total += x * mu.ln() - x * x * g.rho.ln() + prod_a.ln() + prod_b.ln();
    }
    Ok(total)
}
