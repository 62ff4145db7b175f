//! Brute-force planar orthogonal polynomials on a polar quadrature grid and
//! wavefunction comparisons against the quasi-polynomial approximation.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::planar::PlanarPotential;
use super::quasipoly::{Branch, ConformalQuasiPoly};
use super::{log_norm_asymptotic, log_norm_exact, PerturbedWeight, QuasiPolyData};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::scalar::Real;

/// Tensor grid: composite Gauss–Legendre in `r`, uniform in angle.
/// Weights include the Jacobian and the `1/π` area normalisation.
#[derive(Debug, Clone)]
pub struct PolarGrid<T> {
    pub points: Vec<Complex<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> PolarGrid<T> {
    pub fn new(bands: &[(T, T)], panels: usize, order: usize, angles: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(order);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let dth = T::TAU() / T::of(angles);
        for &(lo, hi) in bands {
            let h = (hi - lo) / T::of(panels);
            for p in 0..panels {
                let a = lo + h * T::of(p);
                for (xi, wi) in x.iter().zip(&w) {
                    let r = a + h * (*xi + T::one()) * T::lit(0.5);
                    let wr = *wi * h * T::lit(0.5) * r * dth / T::PI();
                    for k in 0..angles {
                        points.push(Complex::from_polar(r, dth * T::of(k)));
                        weights.push(wr);
                    }
                }
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Output of the Gram–Schmidt oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Gram2d<T> {
    pub n: usize,
    /// Scale `ρ̂` of the basis `(z/ρ̂)^k`.
    pub scale: T,
    /// `log h_j = log ‖p_j‖²` for the monic `p_j`.
    pub log_norms: Vec<T>,
    /// Coefficients of `p_j` in powers of `z/ρ̂` (monic in that variable).
    pub coeffs: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Gram2d<T> {
    /// `p_j(z)`, monic in `z`.
    pub fn eval(&self, j: usize, z: Complex<T>) -> Complex<T> {
        let u = z / self.scale;
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.coeffs[j].iter().rev() {
            acc = acc * u + c;
        }
        acc * self.scale.powi(j as i32)
    }
}

/// Relative pivot below which the basis is declared numerically dependent.
pub const PIVOT_FLOOR: f64 = 1e-13;

/// Modified Gram–Schmidt with one reorthogonalisation pass on the monomials
/// `(z/ρ̂)^k`, `k <= jmax`, in `L²(e^{-nQ} dA)` discretised on `grid`.
pub fn gram2d_oracle<T: Real>(pot: &dyn PlanarPotential<T>, n: usize, jmax: usize, grid: &PolarGrid<T>) -> Result<Gram2d<T>> {
    if n > 48 || jmax > 48 {
        return Err(Error::InvalidParameter("planar oracle limited to n, j <= 48".into()));
    }
    let nn = T::of(n);
    let qs: Vec<Option<T>> = grid.points.par_iter().map(|&z| pot.q(z)).collect();
    let qmin = qs.iter().flatten().copied().fold(T::infinity(), T::min);
    if !qmin.is_finite() {
        return Err(Error::IllConditioned("potential infinite on the whole grid".into()));
    }
    let mut idx = Vec::new();
    let mut sw = Vec::new();
    for (i, q) in qs.iter().enumerate() {
        if let Some(q) = q {
            let wt = grid.weights[i] * (-(nn * (*q - qmin))).exp();
            if wt > T::zero() {
                idx.push(i);
                sw.push(wt.sqrt());
            }
        }
    }
    let mass: T = sw.iter().map(|s| *s * *s).sum();
    let r2: T = idx.iter().zip(&sw).map(|(&i, s)| grid.points[i].norm_sqr() * *s * *s).sum();
    let scale = (r2 / mass).sqrt();
    let us: Vec<Complex<T>> = idx.iter().map(|&i| grid.points[i] / scale).collect();
    let dot = |a: &[Complex<T>], b: &[Complex<T>]| -> Complex<T> {
        let mut s = Complex::new(T::zero(), T::zero());
        for (x, y) in a.iter().zip(b) {
            s = s + x * y.conj();
        }
        s
    };
    let zero = Complex::new(T::zero(), T::zero());
    let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(jmax + 1);
    let mut norms: Vec<T> = Vec::with_capacity(jmax + 1);
    let mut coeffs: Vec<Vec<Complex<T>>> = Vec::with_capacity(jmax + 1);
    let mut mono: Vec<Complex<T>> = sw.iter().map(|s| Complex::new(*s, T::zero())).collect();
    for k in 0..=jmax {
        if k > 0 {
            for (m, u) in mono.iter_mut().zip(&us) {
                *m = *m * u;
            }
        }
        let mut v = mono.clone();
        let mut c = vec![zero; k + 1];
        c[k] = Complex::new(T::one(), T::zero());
        let start = dot(&v, &v).re;
        for _pass in 0..2 {
            for i in 0..k {
                let proj = dot(&v, &basis[i]) / norms[i];
                for (x, y) in v.iter_mut().zip(&basis[i]) {
                    *x = *x - proj * y;
                }
                for (ci, bi) in c.iter_mut().zip(&coeffs[i]) {
                    *ci = *ci - proj * bi;
                }
            }
        }
        let nv = dot(&v, &v).re;
        if !(nv > T::lit(PIVOT_FLOOR) * start) {
            return Err(Error::IllConditioned(format!("pivot {} at degree {k}", (nv / start).f64())));
        }
        basis.push(v);
        norms.push(nv);
        coeffs.push(c);
    }
    let log_norms = norms
        .iter()
        .enumerate()
        .map(|(j, &h)| h.ln() - nn * qmin + T::lit(2.0) * T::of(j) * scale.ln())
        .collect();
    Ok(Gram2d {
        n,
        scale,
        log_norms,
        coeffs,
    })
}

/// Result of comparing the exact wavefunction with its quasi-polynomial
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionGap<T> {
    /// `max |w_{j,n} − F_{j,n}| e^{n(Q − Q̌_τ)/2}` over the sample points.
    pub max_weighted_error: T,
    /// `|γ_{j,n} c_{j,n}^{1/2} − 1|`.
    pub coefficient_gap: T,
}

/// Radial comparison: `Φ = z^j` and the difference of the wavefunctions is
/// `(γ − c^{-1/2}) z^j e^{-nQ̃/2}` with `γ = h_exact^{-1/2}` and `c` the
/// asymptotic norm.
pub fn wavefunction_compare<T: Real>(
    w: &PerturbedWeight<T>,
    g: &QuasiPolyData<T>,
    j: usize,
    n: usize,
    radii: &[T],
) -> Result<WavefunctionGap<T>> {
    let log_c = log_norm_asymptotic(g, j, n, w.s)?;
    let log_h = log_norm_exact(w, j, n)?;
    let half = T::lit(0.5);
    let gap_log = log_h * -half;
    let diff = ((log_c - log_h) * half).exp_m1();
    let log_coef = gap_log + diff.abs().ln();
    let tau = T::of(j) / T::of(n);
    let nn = T::of(n);
    let mut best = T::neg_infinity();
    for &r in radii {
        if w.pot.q(r).is_err() {
            continue;
        }
        let check = crate::potential::obstacle_eval(&w.pot, tau.min(T::one()), r)?.value;
        let v = log_coef + T::of(j) * r.ln() + w.s * w.omega.eval(r) * half - nn * check * half;
        best = best.max(v);
    }
    Ok(WavefunctionGap {
        max_weighted_error: best.exp(),
        coefficient_gap: diff.abs(),
    })
}

/// Planar comparison using the Gram–Schmidt oracle for `w_{j,n}` and the
/// conformal quasi-polynomial (outer branch where it applies) for `F_{j,n}`.
pub fn wavefunction_compare_planar<T: Real>(
    pot: &dyn PlanarPotential<T>,
    qp: &ConformalQuasiPoly<T>,
    gram: &Gram2d<T>,
    j: usize,
    points: &[Complex<T>],
) -> Result<WavefunctionGap<T>> {
    let n = gram.n;
    let g = qp.data();
    let log_c = log_norm_asymptotic(&g, j, n, T::zero())?;
    let log_h = gram.log_norms[j];
    let half = T::lit(0.5);
    let nn = T::of(n);
    let tau = (T::of(j) / nn).min(T::one());
    let mut best = T::neg_infinity();
    for &z in points {
        if pot.q(z).is_none() {
            continue;
        }
        let check = pot.obstacle(tau, z)?;
        let branch = match qp.map.invert(z) {
            Ok(w) if w.norm() >= qp.rho => Branch::Outer,
            Ok(_) => Branch::Inner,
            Err(_) => continue,
        };
        let lw = gram.eval(j, z).ln() - Complex::new(log_h * half, T::zero());
        let lf = qp.log_eval(branch, j, n, z)? - Complex::new(log_c * half, T::zero());
        let diff = (lw.exp() - lf.exp()).norm();
        let v = diff.ln() - nn * check * half;
        best = best.max(v);
    }
    Ok(WavefunctionGap {
        max_weighted_error: best.exp(),
        coefficient_gap: ((log_c - log_h) * half).exp_m1().abs(),
    })
}
