//! Potentials on the plane that need not be radial.

use num_complex::Complex;

use crate::conformal::ExteriorMap;
use crate::error::{Error, Result};
use crate::potential::{obstacle_eval, RadialPotential};
use crate::scalar::Real;

/// External potential on ℂ, `+∞` where [`PlanarPotential::q`] returns `None`.
pub trait PlanarPotential<T: Real>: Sync {
    fn q(&self, z: Complex<T>) -> Option<T>;

    /// Obstacle function `Q̌_τ(z)` for mass `tau`.
    fn obstacle(&self, tau: T, z: Complex<T>) -> Result<T>;

    /// Radial bands `[lo, hi]` (in `|z|`) that contain the support.
    fn radial_bands(&self) -> Vec<(T, T)>;
}

impl<T: Real> PlanarPotential<T> for RadialPotential<T> {
    fn q(&self, z: Complex<T>) -> Option<T> {
        RadialPotential::q(self, z.norm()).ok()
    }

    fn obstacle(&self, tau: T, z: Complex<T>) -> Result<T> {
        Ok(obstacle_eval(self, tau, z.norm())?.value)
    }

    fn radial_bands(&self) -> Vec<(T, T)> {
        self.intervals()
    }
}

/// `Q(z) = (|z|² − t Re z²)/(1 − t²)`, whose droplet is the ellipse with
/// semi-axes `1 + t` and `1 − t`.
#[derive(Debug, Clone)]
pub struct EllipticGinibre<T: Real> {
    pub t: T,
    map: ExteriorMap<T>,
    rmax: T,
}

impl<T: Real> EllipticGinibre<T> {
    pub fn new(t: T, rmax: T) -> Result<Self> {
        if !(t >= T::zero() && t < T::one()) {
            return Err(Error::InvalidParameter(format!("t must lie in [0, 1), got {t}")));
        }
        Ok(Self {
            t,
            map: ExteriorMap::ellipse(T::one() + t, T::one() - t)?,
            rmax,
        })
    }

    /// Exterior map of the droplet, `ψ(w) = w + t/w`.
    pub fn map(&self) -> &ExteriorMap<T> {
        &self.map
    }

    pub fn laplacian(&self) -> T {
        (T::one() - self.t * self.t).recip()
    }

    fn q_all(&self, z: Complex<T>) -> T {
        ((z.norm_sqr() - self.t * (z * z).re) / (T::one() - self.t * self.t)).max(T::zero())
    }

    fn inside(&self, z: Complex<T>, scale: T) -> bool {
        let a = (T::one() + self.t) * scale;
        let b = (T::one() - self.t) * scale;
        (z.re / a).powi(2) + (z.im / b).powi(2) <= T::one()
    }

    /// Obstacle of unit mass outside the droplet: `2 log|w| + 1 + t Re w^{-2}`.
    pub fn exterior_obstacle(&self, z: Complex<T>) -> Result<T> {
        if self.inside(z, T::one()) {
            return Ok(self.q_all(z));
        }
        let w = self.map.invert(z)?;
        Ok(T::lit(2.0) * w.norm().ln() + T::one() + self.t * (w * w).inv().re)
    }

    fn scaled_obstacle(&self, tau: T, z: Complex<T>) -> Result<T> {
        if !(tau > T::zero() && tau <= T::one()) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1], got {tau}")));
        }
        let s = tau.sqrt();
        Ok(tau * self.exterior_obstacle(z / s)?)
    }
}

impl<T: Real> PlanarPotential<T> for EllipticGinibre<T> {
    fn q(&self, z: Complex<T>) -> Option<T> {
        if z.norm() <= self.rmax {
            Some(self.q_all(z))
        } else {
            None
        }
    }

    fn obstacle(&self, tau: T, z: Complex<T>) -> Result<T> {
        self.scaled_obstacle(tau, z)
    }

    fn radial_bands(&self) -> Vec<(T, T)> {
        vec![(T::zero(), self.rmax)]
    }
}

/// Elliptic droplet with an outpost on the level curve `|φ1| = ρ`:
/// `Q` equals the elliptic Ginibre potential for `|φ1| <= inner`, equals
/// `Q̌1 + (Δ2 / (2|φ1 φ1'|²))(|φ1|² − ρ²)²` for `| |φ1| − ρ | <= halfwidth`,
/// and is `+∞` elsewhere.
#[derive(Debug, Clone)]
pub struct EllipticOutpost<T: Real> {
    pub base: EllipticGinibre<T>,
    pub rho: T,
    pub delta2: T,
    pub inner: T,
    pub halfwidth: T,
}

impl<T: Real> EllipticOutpost<T> {
    pub fn new(t: T, rho: T, delta2: T) -> Result<Self> {
        let base = EllipticGinibre::new(t, T::infinity())?;
        if !(rho > T::lit(1.3)) {
            return Err(Error::InvalidParameter("outpost level must exceed 1.3".into()));
        }
        Ok(Self {
            base,
            rho,
            delta2,
            inner: T::lit(1.2),
            halfwidth: (rho - T::lit(1.3)).min(T::lit(0.2)),
        })
    }

    pub fn map(&self) -> &ExteriorMap<T> {
        self.base.map()
    }

    /// `ΔQ` on the droplet boundary.
    pub fn delta1(&self) -> T {
        self.base.laplacian()
    }
}

impl<T: Real> PlanarPotential<T> for EllipticOutpost<T> {
    fn q(&self, z: Complex<T>) -> Option<T> {
        if self.base.inside(z, T::one()) {
            return Some(self.base.q_all(z));
        }
        let w = self.map().invert(z).ok()?;
        let r = w.norm();
        if r <= self.inner {
            return Some(self.base.q_all(z));
        }
        if (r - self.rho).abs() <= self.halfwidth {
            let check = T::lit(2.0) * r.ln() + T::one() + self.base.t * (w * w).inv().re;
            let dpsi = self.map().deriv(w).norm_sqr();
            let well = self.delta2 * dpsi / (T::lit(2.0) * r * r) * (r * r - self.rho * self.rho).powi(2);
            return Some(check + well);
        }
        None
    }

    fn obstacle(&self, tau: T, z: Complex<T>) -> Result<T> {
        self.base.scaled_obstacle(tau, z)
    }

    fn radial_bands(&self) -> Vec<(T, T)> {
        let t = self.base.t;
        let outer = (self.rho + self.halfwidth) + t / (self.rho + self.halfwidth);
        vec![(T::zero(), outer)]
    }
}
