//! Norms of orthogonal polynomials for radial weights, their two-bump
//! asymptotics near the bifurcation index, and the counting CGF.
//!
//! For a radial weight the monic orthogonal polynomials are monomials and
//! `h_j = ‖z^j‖² = 2∫ r^{2j+1} e^{-nQ(r) + sω(r)} dr` (area measure `dA/π`).

pub mod gram2d;
pub mod planar;
pub mod quasipoly;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{gap_constants, solve_gap_radii, RadialPotential};
use crate::qdist::{heine_cgf, GapLaws, HeineParams, SeriesTolerance};
use crate::quad::{integrate_layout, peak_layout, QuadConfig};
use crate::scalar::{frac, log_add_exp, pairwise_sum, Real};

/// Quintic smoothstep: `0` below `m1`, `1` above `m2`, `C²` in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothStep<T> {
    pub m1: T,
    pub m2: T,
}

impl<T: Real> SmoothStep<T> {
    pub fn new(m1: T, m2: T) -> Result<Self> {
        if !(m1 < m2) {
            return Err(Error::InvalidParameter(format!("smoothstep needs m1 < m2, got {m1}, {m2}")));
        }
        Ok(Self { m1, m2 })
    }

    /// Transition placed in the middle third (in log radius) of a gap.
    pub fn for_gap(b0: T, a1: T) -> Self {
        let (l0, l1) = (b0.ln(), a1.ln());
        let third = (l1 - l0) / T::lit(3.0);
        Self {
            m1: (l0 + third).exp(),
            m2: (l1 - third).exp(),
        }
    }

    /// `[ω, ω', ω'']`.
    pub fn jet(&self, r: T) -> [T; 3] {
        if r <= self.m1 {
            return [T::zero(); 3];
        }
        if r >= self.m2 {
            return [T::one(), T::zero(), T::zero()];
        }
        let l = self.m2 - self.m1;
        let t = (r - self.m1) / l;
        let u = T::one() - t;
        [
            t * t * t * (T::lit(10.0) - T::lit(15.0) * t + T::lit(6.0) * t * t),
            T::lit(30.0) * t * t * u * u / l,
            T::lit(60.0) * t * u * (u - t) / (l * l),
        ]
    }

    pub fn eval(&self, r: T) -> T {
        self.jet(r)[0]
    }

    /// Log-midpoint of the transition, used as the counting threshold.
    pub fn midpoint(&self) -> T {
        (self.m1 * self.m2).sqrt()
    }
}

/// Radial weight `e^{-nQ + sω}`.
#[derive(Debug, Clone)]
pub struct PerturbedWeight<T> {
    pub pot: RadialPotential<T>,
    pub s: T,
    pub omega: SmoothStep<T>,
}

impl<T: Real> PerturbedWeight<T> {
    pub fn new(pot: RadialPotential<T>, s: T, omega: SmoothStep<T>) -> Self {
        Self { pot, s, omega }
    }

    pub fn with_s(&self, s: T) -> Self {
        Self { s, ..self.clone() }
    }

    /// `log(r^{2j+1} e^{-nQ(r) + sω(r)})`, `-∞` outside the windows.
    pub fn log_density(&self, j: usize, n: usize, r: T) -> T {
        match self.pot.q(r) {
            Ok(q) => T::of(2 * j + 1) * r.ln() - T::of(n) * q + self.s * self.omega.eval(r),
            Err(_) => T::neg_infinity(),
        }
    }
}

fn quad_cfg<T: Real>() -> QuadConfig<T> {
    QuadConfig {
        rel_tol: T::attainable(1e-12),
        ..QuadConfig::default()
    }
}

/// Exact `log h_j` by peak-located adaptive Gauss–Kronrod quadrature.
pub fn log_norm_exact<T: Real>(w: &PerturbedWeight<T>, j: usize, n: usize) -> Result<T> {
    let g = |r: T| w.log_density(j, n, r);
    let layout = peak_layout(&g, &w.pot.intervals(), &[w.omega.m1, w.omega.m2])
        .ok_or_else(|| Error::QuadratureFailure(format!("weight vanishes for j = {j}")))?;
    let m = layout.log_max;
    let v = integrate_layout(&|r| (g(r) - m).exp(), &layout, &quad_cfg())?;
    Ok(T::lit(2.0).ln() + m + v.ln())
}

/// `log(h_j(s) / h_j(0))`, accurate also when the ratio is extremely close to one.
pub fn log_norm_ratio<T: Real>(w: &PerturbedWeight<T>, j: usize, n: usize, s: T) -> Result<T> {
    let base = w.with_s(T::zero());
    let g = |r: T| base.log_density(j, n, r);
    let layout = peak_layout(&g, &w.pot.intervals(), &[w.omega.m1, w.omega.m2])
        .ok_or_else(|| Error::QuadratureFailure(format!("weight vanishes for j = {j}")))?;
    let m = layout.log_max;
    let cfg = quad_cfg();
    let h = integrate_layout(&|r| (g(r) - m).exp(), &layout, &cfg)?;
    let d = integrate_layout(&|r| (g(r) - m).exp() * (s * w.omega.eval(r)).exp_m1(), &layout, &cfg)?;
    Ok((d / h).ln_1p())
}

/// Geometric data entering the quasi-polynomial and norm asymptotics.
///
/// `q_k_inf` is the constant term at infinity of the holomorphic function
/// whose real part equals `Q` on the `k`-th gap boundary; `h_k_inf` the
/// one with real part `½ log ΔQ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiPolyData<T> {
    pub r1: T,
    pub r2: T,
    pub tau_star: T,
    pub q1_inf: T,
    pub q2_inf: T,
    pub h1_inf: T,
    pub h2_inf: T,
}

impl<T: Real> QuasiPolyData<T> {
    /// Data of a radial potential around the gap enclosing mass `tau_star`.
    pub fn from_radial(pot: &RadialPotential<T>, tau_star: T) -> Result<Self> {
        let gr = solve_gap_radii(pot, tau_star)?;
        let gc = gap_constants(pot, gr.b0, gr.a1)?;
        Ok(Self {
            r1: gc.r1,
            r2: gc.r2,
            tau_star,
            q1_inf: pot.q(gc.r1)?,
            q2_inf: pot.q(gc.r2)?,
            h1_inf: T::lit(0.5) * gc.delta1.ln(),
            h2_inf: T::lit(0.5) * gc.delta2.ln(),
        })
    }

    /// `c = h2(∞) − h1(∞) = ½ log(Δ2/Δ1)`.
    pub fn c(&self) -> T {
        self.h2_inf - self.h1_inf
    }

    pub fn ratio(&self) -> T {
        self.r1 / self.r2
    }

    /// Exponent `κ` in `log(r2/r1) = κ (q2(∞) − q1(∞)) / 2`.
    pub fn kappa(&self) -> T {
        T::lit(2.0) * (self.r2 / self.r1).ln() / (self.q2_inf - self.q1_inf)
    }

    /// Residual of `2τ* log(r2/r1) = q2(∞) − q1(∞)`, which makes the two
    /// asymptotic terms balance at `j = nτ*` up to the Laplacian ratio.
    pub fn balance_residual(&self) -> T {
        T::lit(2.0) * self.tau_star * (self.r2 / self.r1).ln() - (self.q2_inf - self.q1_inf)
    }

    pub fn is_outpost(&self) -> bool {
        (self.tau_star - T::one()).abs() <= T::attainable(1e-12)
    }

    /// Fractional part `x_n = frac(nτ*)`.
    pub fn x_n(&self, n: usize) -> T {
        frac(T::of(n) * self.tau_star)
    }

    /// Heine parameters of the outpost count, `theta = (r1/r2)e^{-c}`, `q = (r1/r2)²`.
    pub fn outpost_heine(&self) -> Result<HeineParams<T>> {
        let rho = self.ratio();
        HeineParams::new(rho * (-self.c()).exp(), rho * rho)
    }

    /// Heine and discrete normal parameters of the gap at size `n`.
    pub fn gap_laws(&self, n: usize) -> Result<GapLaws<T>> {
        GapLaws::new(self.ratio(), self.c(), self.x_n(n))
    }
}

/// Half-width `⌈log² n⌉` of the bifurcation window.
pub fn bifurcation_halfwidth(n: usize) -> usize {
    let l = (n as f64).ln();
    (l * l).ceil() as usize
}

/// Whether `j` lies within `⌈log² n⌉` of `nτ*`.
pub fn in_bifurcation_window<T: Real>(j: usize, n: usize, tau_star: T) -> bool {
    (T::of(j) - T::of(n) * tau_star).abs() <= T::of(bifurcation_halfwidth(n))
}

/// Two-bump asymptotic `log h_j = ½ log(2π/n) + log(e^{A0} + e^{A1 + s})` with
/// `A_k = (2j+1) log r_k − n q_k(∞) − h_k(∞)`.
pub fn log_norm_asymptotic<T: Real>(g: &QuasiPolyData<T>, j: usize, n: usize, s: T) -> Result<T> {
    if !in_bifurcation_window(j, n, g.tau_star) {
        return Err(Error::RegimeError { j, n });
    }
    let jj = T::of(2 * j + 1);
    let nn = T::of(n);
    let a0 = jj * g.r1.ln() - nn * g.q1_inf - g.h1_inf;
    let a1 = jj * g.r2.ln() - nn * g.q2_inf - g.h2_inf;
    Ok(T::lit(0.5) * (T::TAU() / nn).ln() + log_add_exp(a0, a1 + s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Bulk,
    Bifurcation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormRow<T> {
    pub j: usize,
    pub regime: Regime,
    pub log_h_exact: T,
    pub log_h_asym: Option<T>,
    pub abs_err: Option<T>,
}

/// Exact log-norms for `j < n` with the asymptotic value inside the
/// bifurcation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNormTable<T> {
    pub n: usize,
    pub s: T,
    pub rows: Vec<LogNormRow<T>>,
}

impl<T: Real> LogNormTable<T> {
    pub fn build(w: &PerturbedWeight<T>, g: &QuasiPolyData<T>, n: usize) -> Result<Self> {
        let rows = (0..n)
            .into_par_iter()
            .map(|j| {
                let exact = log_norm_exact(w, j, n)?;
                let (regime, asym) = if in_bifurcation_window(j, n, g.tau_star) {
                    (Regime::Bifurcation, Some(log_norm_asymptotic(g, j, n, w.s)?))
                } else {
                    (Regime::Bulk, None)
                };
                Ok(LogNormRow {
                    j,
                    regime,
                    log_h_exact: exact,
                    log_h_asym: asym,
                    abs_err: asym.map(|a| (a - exact).abs()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, s: w.s, rows })
    }

    /// Largest asymptotic error over the bifurcation window.
    pub fn max_window_error(&self) -> T {
        self.rows.iter().filter_map(|r| r.abs_err).fold(T::zero(), T::max)
    }
}

/// Exact counting CGF `Σ_{j<n} log(h_j(s)/h_j(0)) − ns(1 − τ*)`.
pub fn cgf_count_exact<T: Real>(w: &PerturbedWeight<T>, n: usize, s: T, tau_star: T) -> Result<T> {
    let terms = (0..n)
        .into_par_iter()
        .map(|j| log_norm_ratio(w, j, n, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&terms) - T::of(n) * s * (T::one() - tau_star))
}

/// Predicted counting CGF: the Heine CGF for an outpost and the CGF of
/// `X⁺ − X⁻ + x_n` across a gap.
pub fn cgf_count_predicted<T: Real>(g: &QuasiPolyData<T>, n: usize, s: T) -> Result<T> {
    let tol = SeriesTolerance::default();
    if g.is_outpost() {
        heine_cgf(s, &g.outpost_heine()?, &tol)
    } else {
        Ok(g.gap_laws(n)?.difference_cgf(s, &tol)? + s * g.x_n(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_is_c2() {
        let w = SmoothStep::new(1.0f64, 2.0).unwrap();
        let e = 1e-6;
        for r in [1.0, 1.3, 1.5, 2.0] {
            let [v, d1, d2] = w.jet(r);
            let fd1 = (w.eval(r + e) - w.eval(r - e)) / (2.0 * e);
            let fd2 = (w.jet(r + e)[1] - w.jet(r - e)[1]) / (2.0 * e);
            assert!((d1 - fd1).abs() < 1e-6 && (d2 - fd2).abs() < 1e-4, "{r} {v}");
        }
        assert_eq!(w.eval(0.5), 0.0);
        assert_eq!(w.eval(2.5), 1.0);
    }

    #[test]
    fn window_halfwidth() {
        assert_eq!(bifurcation_halfwidth(128), 24);
        assert_eq!(bifurcation_halfwidth(1024), 49);
    }
}
