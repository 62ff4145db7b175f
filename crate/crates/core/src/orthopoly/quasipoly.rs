//! Quasi-polynomials built from the exterior conformal maps of the two
//! curves bounding an outpost gap.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::QuasiPolyData;
use crate::conformal::{annulus_dirichlet, exterior_dirichlet, ExteriorHarmonic, ExteriorMap};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which of the two equivalent formulas to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Built from the inner curve; valid outside it.
    Inner,
    /// Built from the outer curve; valid outside it.
    Outer,
}

/// Holomorphic data on the exteriors of the inner curve `ψ(|w| = 1)` and the
/// outer curve `ψ(|w| = ρ)`, all expressed in the coordinate `w = φ1(z)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConformalQuasiPoly<T> {
    pub map: ExteriorMap<T>,
    pub rho: T,
    pub q1: ExteriorHarmonic<T>,
    pub q2: ExteriorHarmonic<T>,
    pub h1: ExteriorHarmonic<T>,
    pub h2: ExteriorHarmonic<T>,
    /// Coefficient of the harmonic measure in the gap solution for `½ log ΔQ`.
    pub c: T,
    /// Compatibility residual of that gap solution.
    pub compat_residual: T,
}

impl<T: Real> ConformalQuasiPoly<T> {
    /// Solves the four exterior Dirichlet problems (`Re q_k = Q`,
    /// `Re h_k = ½ log ΔQ` on curve `k`) and the gap problem for `c`.
    pub fn solve(
        map: &ExteriorMap<T>,
        rho: T,
        q: &dyn Fn(Complex<T>) -> Option<T>,
        half_log_laplacian: &dyn Fn(Complex<T>) -> T,
        modes: Option<usize>,
    ) -> Result<Self> {
        if !(rho > T::one()) {
            return Err(Error::BadGeometry(format!("outer level {rho} must exceed 1")));
        }
        let missing = std::cell::Cell::new(false);
        let qd = |z: Complex<T>| {
            q(z).unwrap_or_else(|| {
                missing.set(true);
                T::zero()
            })
        };
        let q1 = exterior_dirichlet(map, T::one(), &qd, modes)?;
        let q2 = exterior_dirichlet(map, rho, &qd, modes)?;
        if missing.get() {
            return Err(Error::BadGeometry("potential is infinite on a gap boundary".into()));
        }
        let h1 = exterior_dirichlet(map, T::one(), half_log_laplacian, modes)?;
        let h2 = exterior_dirichlet(map, rho, half_log_laplacian, modes)?;
        let gap = annulus_dirichlet(map, rho, half_log_laplacian, modes)?;
        Ok(Self {
            map: map.clone(),
            rho,
            q1,
            q2,
            h1,
            h2,
            c: gap.c,
            compat_residual: gap.compat_residual,
        })
    }

    pub fn data(&self) -> QuasiPolyData<T> {
        QuasiPolyData {
            r1: self.map.capacity,
            r2: self.map.capacity * self.rho,
            tau_star: T::one(),
            q1_inf: self.q1.at_infinity(),
            q2_inf: self.q2.at_infinity(),
            h1_inf: self.h1.at_infinity(),
            h2_inf: self.h2.at_infinity(),
        }
    }

    /// `log Φ_{j,n}(z)` on the exterior of the chosen curve.
    pub fn log_eval(&self, branch: Branch, j: usize, n: usize, z: Complex<T>) -> Result<Complex<T>> {
        let w = self.map.invert(z)?;
        let (radius, q, h) = match branch {
            Branch::Inner => (T::one(), &self.q1, &self.h1),
            Branch::Outer => (self.rho, &self.q2, &self.h2),
        };
        if w.norm() < radius * (T::one() - T::attainable(1e-12)) {
            return Err(Error::DomainError(format!("z = {z} is inside the {branch:?} curve")));
        }
        let half = T::lit(0.5);
        let (jj, nn) = (T::of(j), T::of(n));
        let r = self.map.capacity * radius;
        let lr = radius.ln();
        let dpsi = self.map.log_deriv(w)?;
        let constant = (jj + half) * r.ln() - nn * q.at_infinity() * half - h.at_infinity() * half;
        let varying = -(dpsi + lr) * half + (w.ln() - lr) * jj + q.eval(w) * (nn * half) + h.eval(w) * half;
        Ok(varying + constant)
    }
}

/// Evaluates the quasi-polynomial `Φ_{j,n}(z)`: `z^j` for radial data, or
/// the conformal construction when `ctx` is given.
pub fn quasipoly_eval<T: Real>(
    _g: &QuasiPolyData<T>,
    ctx: Option<&ConformalQuasiPoly<T>>,
    branch: Branch,
    j: usize,
    n: usize,
    z: Complex<T>,
) -> Result<Complex<T>> {
    match ctx {
        None => Ok(z.powi(j as i32)),
        Some(c) => Ok(c.log_eval(branch, j, n, z)?.exp()),
    }
}
