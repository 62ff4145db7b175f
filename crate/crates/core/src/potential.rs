//! Radially symmetric external potentials restricted to annular windows,
//! together with the obstacle problem data they determine.
//!
//! The Laplacian is normalised as `ΔQ = ¼(Q'' + Q'/r)`, so that `Q = r²`
//! has `ΔQ = 1`. The enclosed mass of the disc of radius `r` is
//! `M(r) = r Q'(r) / 2`, which equals `2∫ ΔQ(u) u du` where `Q` is smooth.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{golden_max, integrate, QuadConfig};
use crate::scalar::Real;

/// Radial profile of a potential on one window.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Real")]
pub enum Profile<T> {
    /// `coeff · r²`.
    Quadratic { coeff: T },
    /// `coeff · r^exponent`.
    Power { coeff: T, exponent: T },
    /// `Σ coeffs[k] r^k`.
    Polynomial { coeffs: Vec<T> },
    /// `base + 2 log r + (delta2 / (2 r²)) (r² − rho2²)²`: the exterior
    /// obstacle of the unit disc plus a quartic well touching it at `rho2`.
    LogQuarticRing {
        rho2: T,
        delta2: T,
        #[serde(default = "one")]
        base: T,
    },
    /// `inner / tau`.
    Scaled { tau: T, inner: Box<Profile<T>> },
    /// Arbitrary function; derivatives by central differences.
    #[serde(skip)]
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

fn one<T: Real>() -> T {
    T::one()
}

impl<T: fmt::Debug> fmt::Debug for Profile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic { coeff } => write!(f, "Quadratic({coeff:?})"),
            Self::Power { coeff, exponent } => write!(f, "Power({coeff:?}, {exponent:?})"),
            Self::Polynomial { coeffs } => write!(f, "Polynomial({coeffs:?})"),
            Self::LogQuarticRing { rho2, delta2, base } => write!(f, "LogQuarticRing({rho2:?}, {delta2:?}, {base:?})"),
            Self::Scaled { tau, inner } => write!(f, "Scaled({tau:?}, {inner:?})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Value and first four derivatives.
pub type Jet<T> = [T; 5];

fn falling<T: Real>(p: T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, i| acc * (p - T::of(i)))
}

fn power_jet<T: Real>(coeff: T, p: T, r: T) -> Jet<T> {
    let mut out = [T::zero(); 5];
    for (k, o) in out.iter_mut().enumerate() {
        let f = falling(p, k);
        *o = if f == T::zero() { T::zero() } else { coeff * f * r.powf(p - T::of(k)) };
    }
    out
}

fn fd_jet<T: Real>(f: &(dyn Fn(T) -> T + Send + Sync), r: T) -> Jet<T> {
    let scale = r.abs().max(T::lit(1e-3));
    let h1 = scale * T::lit(1e-6);
    let h2 = scale * T::lit(1e-4);
    let h3 = scale * T::lit(2e-3);
    let d1 = (f(r + h1) - f(r - h1)) / (h1 + h1);
    let d2 = (-f(r + h2 + h2) + T::lit(16.0) * f(r + h2) - T::lit(30.0) * f(r) + T::lit(16.0) * f(r - h2) - f(r - h2 - h2))
        / (T::lit(12.0) * h2 * h2);
    let d3 = (f(r + h3 + h3) - T::lit(2.0) * f(r + h3) + T::lit(2.0) * f(r - h3) - f(r - h3 - h3)) / (T::lit(2.0) * h3 * h3 * h3);
    let d4 = (f(r + h3 + h3) - T::lit(4.0) * f(r + h3) + T::lit(6.0) * f(r) - T::lit(4.0) * f(r - h3) + f(r - h3 - h3))
        / (h3 * h3 * h3 * h3);
    [f(r), d1, d2, d3, d4]
}

impl<T: Real> Profile<T> {
    /// `Q` and its first four radial derivatives at `r`.
    pub fn jet(&self, r: T) -> Jet<T> {
        match self {
            Self::Quadratic { coeff } => [*coeff * r * r, T::lit(2.0) * *coeff * r, T::lit(2.0) * *coeff, T::zero(), T::zero()],
            Self::Power { coeff, exponent } => power_jet(*coeff, *exponent, r),
            Self::Polynomial { coeffs } => {
                let mut out = [T::zero(); 5];
                for (k, &c) in coeffs.iter().enumerate() {
                    let pj = power_jet(c, T::of(k), r);
                    for i in 0..5 {
                        out[i] += pj[i];
                    }
                }
                out
            }
            Self::LogQuarticRing { rho2, delta2, base } => {
                let two = T::lit(2.0);
                let half = *delta2 * T::lit(0.5);
                let r4 = rho2.powi(4);
                let ri = r.recip();
                [
                    *base + two * r.ln() + half * (r * r - two * *rho2 * *rho2 + r4 * ri * ri),
                    two * ri + half * (two * r - two * r4 * ri.powi(3)),
                    -two * ri * ri + half * (two + T::lit(6.0) * r4 * ri.powi(4)),
                    T::lit(4.0) * ri.powi(3) - half * T::lit(24.0) * r4 * ri.powi(5),
                    -T::lit(12.0) * ri.powi(4) + half * T::lit(120.0) * r4 * ri.powi(6),
                ]
            }
            Self::Scaled { tau, inner } => inner.jet(r).map(|v| v / *tau),
            Self::Custom(f) => fd_jet(f.as_ref(), r),
        }
    }

    pub fn value(&self, r: T) -> T {
        match self {
            Self::Custom(f) => f(r),
            _ => self.jet(r)[0],
        }
    }
}

/// A profile on the closed annulus `lo <= r <= hi`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Window<T> {
    pub lo: T,
    pub hi: T,
    pub profile: Profile<T>,
}

/// JSON form of a radial potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PotentialSpec<T> {
    pub schema_version: u32,
    pub windows: Vec<Window<T>>,
}

/// Radial potential, equal to `+∞` outside its windows.
#[derive(Debug, Clone)]
pub struct RadialPotential<T> {
    windows: Vec<Window<T>>,
}

impl<T: Real> RadialPotential<T> {
    /// Validates ordering, positivity of the Laplacian and that the windows
    /// can hold unit mass.
    pub fn new(windows: Vec<Window<T>>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidParameter("at least one window required".into()));
        }
        for (i, w) in windows.iter().enumerate() {
            if !(w.lo >= T::zero() && w.hi > w.lo && w.hi.is_finite()) {
                return Err(Error::InvalidParameter(format!("window {i} has invalid bounds [{}, {}]", w.lo, w.hi)));
            }
            if i > 0 && !(w.lo > windows[i - 1].hi) {
                return Err(Error::InvalidParameter(format!("windows {} and {i} overlap or touch", i - 1)));
            }
        }
        let pot = Self { windows };
        for (i, w) in pot.windows.iter().enumerate() {
            for k in 0..=64 {
                let r = w.lo + (w.hi - w.lo) * T::of(k) / T::lit(64.0);
                let r = if r == T::zero() { (w.hi - w.lo) * T::lit(1e-6) } else { r };
                let lap = laplacian_of(&w.profile.jet(r), r);
                if !(lap > T::zero()) {
                    return Err(Error::InvalidParameter(format!("Laplacian not positive in window {i} at r = {r}")));
                }
            }
        }
        let last = pot.windows.last().unwrap();
        let m = pot.mass_fn(last.hi)?;
        if !(m > T::one()) {
            return Err(Error::InvalidParameter(format!(
                "outer window cannot hold unit mass: r Q'(r)/2 = {m} at r = {}",
                last.hi
            )));
        }
        Ok(pot)
    }

    pub fn from_spec(spec: PotentialSpec<T>) -> Result<Self> {
        if spec.schema_version != 1 {
            return Err(Error::InvalidParameter(format!("unsupported schema_version {}", spec.schema_version)));
        }
        Self::new(spec.windows)
    }

    pub fn to_spec(&self) -> PotentialSpec<T> {
        PotentialSpec {
            schema_version: 1,
            windows: self.windows.clone(),
        }
    }

    /// `Q = r²` on `[0, rmax]`.
    pub fn ginibre(rmax: T) -> Self {
        Self::new(vec![Window {
            lo: T::zero(),
            hi: rmax,
            profile: Profile::Quadratic { coeff: T::one() },
        }])
        .expect("valid builtin")
    }

    /// Unit-disc droplet with an outpost on the circle of radius 1.5 where
    /// the Laplacian is 4.
    pub fn ginibre_outpost() -> Self {
        Self::new(vec![
            Window {
                lo: T::zero(),
                hi: T::lit(1.25),
                profile: Profile::Quadratic { coeff: T::one() },
            },
            Window {
                lo: T::lit(1.27),
                hi: T::lit(1.75),
                profile: Profile::LogQuarticRing {
                    rho2: T::lit(1.5),
                    delta2: T::lit(4.0),
                    base: T::one(),
                },
            },
        ])
        .expect("valid builtin")
    }

    /// `Q / tau` with the same windows.
    pub fn scaled(&self, tau: T) -> Result<Self> {
        if !(tau > T::zero()) {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        Self::new(
            self.windows
                .iter()
                .map(|w| Window {
                    lo: w.lo,
                    hi: w.hi,
                    profile: Profile::Scaled {
                        tau,
                        inner: Box::new(w.profile.clone()),
                    },
                })
                .collect(),
        )
    }

    pub fn windows(&self) -> &[Window<T>] {
        &self.windows
    }

    /// Window bounds as pairs.
    pub fn intervals(&self) -> Vec<(T, T)> {
        self.windows.iter().map(|w| (w.lo, w.hi)).collect()
    }

    pub fn window_index(&self, r: T) -> Option<usize> {
        self.windows.iter().position(|w| r >= w.lo && r <= w.hi)
    }

    fn window(&self, r: T) -> Result<&Window<T>> {
        self.window_index(r)
            .map(|i| &self.windows[i])
            .ok_or(Error::OutsideDomain { r: r.f64() })
    }

    pub fn q(&self, r: T) -> Result<T> {
        Ok(self.window(r)?.profile.value(r))
    }

    /// `Q(r)`, or `+∞` outside the windows.
    pub fn q_or_inf(&self, r: T) -> T {
        self.q(r).unwrap_or(T::infinity())
    }

    pub fn jet(&self, r: T) -> Result<Jet<T>> {
        Ok(self.window(r)?.profile.jet(r))
    }

    pub fn dq(&self, r: T) -> Result<T> {
        Ok(self.jet(r)?[1])
    }

    pub fn laplacian(&self, r: T) -> Result<T> {
        Ok(laplacian_of(&self.jet(r)?, r))
    }

    /// Enclosed mass function `r Q'(r) / 2`.
    pub fn mass_fn(&self, r: T) -> Result<T> {
        Ok(r * self.dq(r)? * T::lit(0.5))
    }

    /// `L = log ΔQ` with its first two derivatives.
    pub fn log_laplacian_jet(&self, r: T) -> Result<[T; 3]> {
        let j = self.jet(r)?;
        let rr = r.max(T::epsilon());
        let quarter = T::lit(0.25);
        let lap = quarter * (j[2] + j[1] / rr);
        let lap1 = quarter * (j[3] + j[2] / rr - j[1] / (rr * rr));
        let lap2 = quarter * (j[4] + j[3] / rr - T::lit(2.0) * j[2] / (rr * rr) + T::lit(2.0) * j[1] / (rr * rr * rr));
        let u1 = lap1 / lap;
        Ok([lap.ln(), u1, lap2 / lap - u1 * u1])
    }

    /// `Δ log ΔQ` in the same normalisation.
    pub fn laplacian_of_log_laplacian(&self, r: T) -> Result<T> {
        let u = self.log_laplacian_jet(r)?;
        Ok(T::lit(0.25) * (u[2] + u[1] / r.max(T::epsilon())))
    }

    /// Solves `M(r) = m` inside window `k`, if the window's mass range covers `m`.
    pub fn solve_mass_in_window(&self, k: usize, m: T) -> Option<T> {
        let w = &self.windows[k];
        let f = |r: T| r * w.profile.jet(r)[1] * T::lit(0.5) - m;
        let (mut a, mut b) = (w.lo, w.hi);
        let (fa, fb) = (f(a), f(b));
        if fa > T::zero() || fb < T::zero() {
            return None;
        }
        if fa == T::zero() {
            return Some(a);
        }
        let mut r = (a + b) * T::lit(0.5);
        for _ in 0..200 {
            let jet = w.profile.jet(r);
            let fr = r * jet[1] * T::lit(0.5) - m;
            if fr == T::zero() {
                return Some(r);
            }
            if fr < T::zero() {
                a = r;
            } else {
                b = r;
            }
            let slope = T::lit(2.0) * r * laplacian_of(&jet, r);
            let newton = r - fr / slope;
            let next = if newton > a && newton < b && slope > T::zero() {
                newton
            } else {
                (a + b) * T::lit(0.5)
            };
            if (next - r).abs() <= T::epsilon() * T::lit(4.0) * r.abs().max(T::one()) || b - a <= T::epsilon() * r {
                return Some(next);
            }
            r = next;
        }
        Some(r)
    }
}

fn laplacian_of<T: Real>(jet: &Jet<T>, r: T) -> T {
    if r == T::zero() {
        T::lit(0.5) * jet[2]
    } else {
        T::lit(0.25) * (jet[2] + jet[1] / r)
    }
}

/// Edge radii of a spectral gap and the residuals of the smooth-fit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRadii<T> {
    pub b0: T,
    pub a1: T,
    /// `[M(b0) − τ*, M(a1) − τ*, Q(a1) − Q(b0) − 2τ* log(a1/b0)]`.
    pub residuals: [T; 3],
}

/// Solves for the inner edge `b0` and outer edge `a1` of the gap that
/// separates mass `tau_star` from the rest.
///
/// Each edge solves `M(r) = τ*` by safeguarded Newton within its window;
/// the tangency equation is then checked and a failure reported as
/// [`Error::NoGap`].
pub fn solve_gap_radii<T: Real>(pot: &RadialPotential<T>, tau_star: T) -> Result<GapRadii<T>> {
    if !(tau_star > T::zero() && tau_star <= T::one()) {
        return Err(Error::InvalidParameter(format!("tau_star must lie in (0, 1], got {tau_star}")));
    }
    let roots: Vec<T> = (0..pot.windows.len()).filter_map(|k| pot.solve_mass_in_window(k, tau_star)).collect();
    if roots.len() < 2 {
        return Err(Error::NoGap(format!("mass level {tau_star} is reached in {} window(s)", roots.len())));
    }
    let (b0, a1) = (roots[0], roots[1]);
    let two = T::lit(2.0);
    let residuals = [
        pot.mass_fn(b0)? - tau_star,
        pot.mass_fn(a1)? - tau_star,
        pot.q(a1)? - pot.q(b0)? - two * tau_star * (a1 / b0).ln(),
    ];
    let scale = T::one() + pot.q(a1)?.abs();
    if residuals[2].abs() > T::attainable(1e-9) * scale {
        return Err(Error::NoGap(format!(
            "obstacle line from r = {b0} misses the outer window: tangency residual {}",
            residuals[2]
        )));
    }
    Ok(GapRadii { b0, a1, residuals })
}

/// Connected components of the droplet and their masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropletStructure<T> {
    pub components: Vec<(T, T)>,
    pub masses: Vec<T>,
}

/// Droplet components given the gap edges: `[e0, b0]` and, when the mass
/// inside `b0` is below one, `[a1, b1]` with `M(b1) = 1`.
pub fn droplet_structure<T: Real>(pot: &RadialPotential<T>, b0: T, a1: T) -> Result<DropletStructure<T>> {
    if !(b0 < a1) {
        return Err(Error::InvalidParameter(format!("inner edge {b0} must lie below outer edge {a1}")));
    }
    let k0 = pot.window_index(b0).ok_or(Error::OutsideDomain { r: b0.f64() })?;
    let k1 = pot.window_index(a1).ok_or(Error::OutsideDomain { r: a1.f64() })?;
    let e0 = pot
        .solve_mass_in_window(k0, T::zero())
        .ok_or_else(|| Error::MassMismatch("no inner edge with zero enclosed mass".into()))?;
    let tau_star = pot.mass_fn(b0)?;
    let mut components = vec![(e0, b0)];
    if tau_star < T::one() - T::attainable(1e-12) {
        let b1 = pot
            .solve_mass_in_window(k1, T::one())
            .ok_or_else(|| Error::MassMismatch("outer component cannot reach unit mass".into()))?;
        components.push((a1, b1));
    }
    let cfg = QuadConfig::default();
    let mut masses = Vec::with_capacity(components.len());
    for &(a, b) in &components {
        let m = integrate(|u: T| T::lit(2.0) * pot.laplacian(u).unwrap_or(T::nan()) * u, a, b, &cfg)?;
        let closed = pot.mass_fn(b)? - pot.mass_fn(a)?;
        if (m - closed).abs() > T::attainable(1e-8) {
            return Err(Error::MassMismatch(format!("quadrature mass {m} differs from {closed} on [{a}, {b}]")));
        }
        masses.push(m);
    }
    let total: T = masses.iter().copied().sum();
    if (total - T::one()).abs() > T::attainable(1e-8) {
        return Err(Error::MassMismatch(format!("component masses sum to {total}")));
    }
    Ok(DropletStructure { components, masses })
}

/// Constants attached to a gap: radii, boundary Laplacians and
/// `c = ½ log(Δ2/Δ1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConstants<T> {
    pub r1: T,
    pub r2: T,
    pub delta1: T,
    pub delta2: T,
    pub c: T,
}

pub fn gap_constants<T: Real>(pot: &RadialPotential<T>, b0: T, a1: T) -> Result<GapConstants<T>> {
    let delta1 = pot.laplacian(b0)?;
    let delta2 = pot.laplacian(a1)?;
    Ok(GapConstants {
        r1: b0,
        r2: a1,
        delta1,
        delta2,
        c: T::lit(0.5) * (delta2 / delta1).ln(),
    })
}

/// Value of the obstacle function for total mass `tau` at a radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleValue<T> {
    pub value: T,
    pub coincides: bool,
}

/// Evaluates the obstacle `Q̌_τ(r)`: the largest subharmonic function below
/// `Q` growing like `2τ log r`.
///
/// In the variable `t = log r` radial subharmonic functions are convex, so
/// the obstacle is the supremum of supporting lines `b t − Q*(b)` over slopes
/// `b ∈ [0, 2τ]`, where `Q*` is the convex conjugate of `t ↦ Q(e^t)`.
pub fn obstacle_eval<T: Real>(pot: &RadialPotential<T>, tau: T, r: T) -> Result<ObstacleValue<T>> {
    if !(tau > T::zero() && tau <= T::one()) {
        return Err(Error::InvalidParameter(format!("tau must lie in (0, 1], got {tau}")));
    }
    if !(r > T::zero()) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let t = r.ln();
    let conj = |b: T| -> T {
        let mut best = T::neg_infinity();
        for (k, w) in pot.windows.iter().enumerate() {
            let half = b * T::lit(0.5);
            let rk = match pot.solve_mass_in_window(k, half) {
                Some(x) => x,
                None => {
                    let lo_mass = w.lo * w.profile.jet(w.lo)[1] * T::lit(0.5);
                    if half < lo_mass {
                        w.lo
                    } else {
                        w.hi
                    }
                }
            };
            let v = if rk == T::zero() {
                if b == T::zero() {
                    -w.profile.value(rk)
                } else {
                    T::neg_infinity()
                }
            } else {
                b * rk.ln() - w.profile.value(rk)
            };
            best = best.max(v);
        }
        best
    };
    let (_, value) = golden_max(|b| b * t - conj(b), T::zero(), T::lit(2.0) * tau, T::epsilon() * T::lit(4.0));
    let endpoint = (T::lit(2.0) * tau) * t - conj(T::lit(2.0) * tau);
    let start = -conj(T::zero());
    let value = value.max(endpoint).max(start);
    let coincides = match pot.q(r) {
        Ok(q) => (q - value).abs() <= T::attainable(1e-9) * (T::one() + q.abs()),
        Err(_) => false,
    };
    Ok(ObstacleValue { value, coincides })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_profile_laplacian_at_centre() {
        let pot = RadialPotential::<f64>::ginibre_outpost();
        assert!((pot.laplacian(1.5).unwrap() - 4.0).abs() < 1e-13);
        assert!((pot.laplacian(0.7).unwrap() - 1.0).abs() < 1e-15);
        assert!((pot.laplacian(0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_windows_rejected() {
        let w = |lo, hi| Window {
            lo,
            hi,
            profile: Profile::Quadratic { coeff: 1.0f64 },
        };
        assert!(RadialPotential::new(vec![w(0.0, 1.0), w(1.0, 2.0)]).is_err());
        assert!(RadialPotential::new(vec![w(0.0, 0.5)]).is_err());
    }

    #[test]
    fn outside_domain_is_an_error() {
        let pot = RadialPotential::<f64>::ginibre_outpost();
        assert!(matches!(pot.q(1.26), Err(Error::OutsideDomain { .. })));
        assert!(pot.q_or_inf(1.26).is_infinite());
    }
}
