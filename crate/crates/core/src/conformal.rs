//! Exterior conformal maps, level curves, harmonic measure of a doubly
//! connected gap and the annulus Dirichlet problem solved by FFT.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inverse exterior map `ψ(w) = capacity·w + Σ_k coeffs[k] w^{-k}` from
/// `|w| > 1` onto the exterior of a Jordan curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExteriorMap<T> {
    pub capacity: T,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> ExteriorMap<T> {
    pub fn new(capacity: T, coeffs: Vec<Complex<T>>) -> Result<Self> {
        let m = Self { capacity, coeffs };
        m.validate()?;
        Ok(m)
    }

    /// Circle of radius `r` centred at the origin.
    pub fn circle(r: T) -> Result<Self> {
        Self::new(r, vec![Complex::new(T::zero(), T::zero())])
    }

    /// Ellipse with semi-axes `a` (real) and `b` (imaginary).
    pub fn ellipse(a: T, b: T) -> Result<Self> {
        let half = T::lit(0.5);
        Self::new(
            (a + b) * half,
            vec![Complex::new(T::zero(), T::zero()), Complex::new((a - b) * half, T::zero())],
        )
    }

    pub fn eval(&self, w: Complex<T>) -> Complex<T> {
        let inv = w.inv();
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc * inv + c;
        }
        w * self.capacity + acc
    }

    pub fn deriv(&self, w: Complex<T>) -> Complex<T> {
        let inv = w.inv();
        let mut acc = Complex::new(T::zero(), T::zero());
        for (k, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * inv + c * T::of(k);
        }
        Complex::new(self.capacity, T::zero()) - acc * inv * inv
    }

    /// Map of the level curve `|w| = rho`, normalised to the unit circle.
    pub fn level_map(&self, rho: T) -> Result<Self> {
        if !(rho > T::zero()) {
            return Err(Error::InvalidParameter("level must be positive".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * rho.powi(-(k as i32)))
            .collect();
        Ok(Self {
            capacity: self.capacity * rho,
            coeffs,
        })
    }

    /// Checks `capacity > 0`, `ψ' ≠ 0` on `|w| >= 1` and that the boundary
    /// polygon does not self-intersect.
    ///
    /// `ψ'` is holomorphic on `|w| > 1` with `ψ'(∞) = capacity`, so its zeros
    /// there are counted by minus the winding number of `ψ'` along `|w| = 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > T::zero()) {
            return Err(Error::BadGeometry("capacity must be positive".into()));
        }
        let k = 256;
        let samples = 4096;
        let mut winding = T::zero();
        let mut prev = self.deriv(Complex::new(T::one(), T::zero()));
        for it in 1..=samples {
            let w = Complex::from_polar(T::one(), T::TAU() * T::of(it) / T::of(samples));
            let d = self.deriv(w);
            if d.norm() < T::attainable(1e-10) * self.capacity {
                return Err(Error::BadGeometry(format!("derivative vanishes near w = {w}")));
            }
            winding += (d / prev).arg();
            prev = d;
        }
        let zeros = -(winding / T::TAU()).round();
        if zeros != T::zero() {
            return Err(Error::BadGeometry(format!("derivative has {zeros} zero(s) outside the unit circle")));
        }
        let pts = self.level_curve(T::one(), k);
        for i in 0..k {
            let (p1, p2) = (pts[i], pts[(i + 1) % k]);
            for j in (i + 2)..k {
                if i == 0 && j == k - 1 {
                    continue;
                }
                let (p3, p4) = (pts[j], pts[(j + 1) % k]);
                if segments_cross(p1, p2, p3, p4) {
                    return Err(Error::BadGeometry("boundary curve self-intersects".into()));
                }
            }
        }
        Ok(())
    }

    /// Points `ψ(rho e^{iθ})` at `count` equally spaced angles.
    pub fn level_curve(&self, rho: T, count: usize) -> Vec<Complex<T>> {
        (0..count)
            .map(|i| self.eval(Complex::from_polar(rho, T::TAU() * T::of(i) / T::of(count))))
            .collect()
    }

    /// Solves `ψ(w) = z` for `|w| >= 1` by Newton's method started at
    /// `w = (z − a0)/capacity`, with a second start pushed outward.
    pub fn invert(&self, z: Complex<T>) -> Result<Complex<T>> {
        let a0 = self.coeffs.first().copied().unwrap_or_default();
        let w0 = (z - a0) / self.capacity;
        let r0 = w0.norm().max(T::epsilon());
        let starts = [w0, w0 / r0 * (r0.max(T::one()) + T::lit(0.5))];
        let mut inside = false;
        for start in starts {
            let mut w = start;
            for _ in 0..50 {
                let step = (self.eval(w) - z) / self.deriv(w);
                w = w - step;
                if !w.re.is_finite() || !w.im.is_finite() {
                    break;
                }
                if step.norm() <= T::attainable(1e-15) * w.norm() {
                    if w.norm() >= T::one() - T::attainable(1e-10) {
                        return Ok(w);
                    }
                    inside = true;
                    break;
                }
            }
        }
        if inside {
            Err(Error::DomainError(format!("z = {z} lies inside the curve")))
        } else {
            Err(Error::DomainError(format!("inversion did not converge at z = {z}")))
        }
    }

    /// Continuous branch of `log ψ'(w)` normalised by `log capacity → 0`
    /// at infinity, tracked along the ray from `w` outwards.
    pub fn log_deriv(&self, w: Complex<T>) -> Result<Complex<T>> {
        let f = |u: T| (self.deriv(w / u) / self.capacity).ln();
        let steps = 256;
        let mut prev = f(T::one() / T::lit(1e6));
        if prev.im.abs() > T::lit(0.1) {
            return Err(Error::BranchError("derivative not close to capacity far out".into()));
        }
        let mut arg = prev.im;
        for k in 1..=steps {
            let u = T::of(k) / T::of(steps);
            let cur = f(u);
            let mut d = cur.im - prev.im;
            while d > T::PI() {
                d -= T::TAU();
            }
            while d < -T::PI() {
                d += T::TAU();
            }
            if d.abs() > T::FRAC_PI_4() {
                return Err(Error::BranchError(format!("argument jumps by {d} along the ray")));
            }
            arg += d;
            prev = cur;
        }
        Ok(Complex::new(prev.re + self.capacity.ln(), arg))
    }
}

fn segments_cross<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> bool {
    let cross = |o: Complex<T>, p: Complex<T>, q: Complex<T>| (p.re - o.re) * (q.im - o.im) - (p.im - o.im) * (q.re - o.re);
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > T::zero()) != (d2 > T::zero())) && ((d3 > T::zero()) != (d4 > T::zero()))
}

/// Logarithmic capacity of the curve.
pub fn capacity_of<T: Real>(m: &ExteriorMap<T>) -> T {
    m.capacity
}

/// `ϖ(z) = log|φ1(z)| / log ρ`: harmonic in the gap, `0` on the inner
/// curve and `1` on the level curve `|w| = ρ`.
pub fn harmonic_measure<T: Real>(m: &ExteriorMap<T>, rho: T, z: Complex<T>) -> Result<T> {
    if !(rho > T::one()) {
        return Err(Error::BadGeometry(format!("outer level {rho} must exceed 1")));
    }
    let w = m.invert(z)?;
    let v = w.norm().ln() / rho.ln();
    let slack = T::attainable(1e-10);
    if v < -slack || v > T::one() + slack {
        return Err(Error::OutsideGap { value: v.f64() });
    }
    Ok(v.max(T::zero()).min(T::one()))
}

/// Bounded holomorphic function on `|w| > radius`,
/// `g(w) = Σ_k coeffs[k] (radius/w)^k` with `coeffs[0]` real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExteriorHarmonic<T> {
    pub radius: T,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> ExteriorHarmonic<T> {
    pub fn eval(&self, w: Complex<T>) -> Complex<T> {
        let x = Complex::new(self.radius, T::zero()) / w;
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn at_infinity(&self) -> T {
        self.coeffs.first().map(|c| c.re).unwrap_or_default()
    }
}

struct Sampler<T: Real> {
    fft: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Real> Sampler<T> {
    fn new(modes: usize) -> Self {
        let len = 2 * modes + 1;
        Self {
            fft: FftPlanner::new().plan_fft_forward(len),
            len,
        }
    }

    /// Fourier coefficients `F_m`, `m ∈ [-modes, modes]`, stored at index `m mod len`.
    fn coefficients(&self, m: &ExteriorMap<T>, radius: T, data: &dyn Fn(Complex<T>) -> T) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = (0..self.len)
            .map(|k| {
                let w = Complex::from_polar(radius, T::TAU() * T::of(k) / T::of(self.len));
                Complex::new(data(m.eval(w)), T::zero())
            })
            .collect();
        self.fft.process(&mut buf);
        let scale = T::of(self.len).recip();
        buf.iter_mut().for_each(|c| *c = *c * scale);
        buf
    }
}

fn coeff<T: Real>(f: &[Complex<T>], m: i64) -> Complex<T> {
    let n = f.len() as i64;
    f[m.rem_euclid(n) as usize]
}

fn tail_fraction<T: Real>(f: &[Complex<T>], modes: usize) -> T {
    let mut total = T::zero();
    let mut tail = T::zero();
    for m in -(modes as i64)..=(modes as i64) {
        let e = coeff(f, m).norm_sqr();
        total += e;
        if m.unsigned_abs() as usize > modes / 2 {
            tail += e;
        }
    }
    if total > T::zero() {
        tail / total
    } else {
        T::zero()
    }
}

const MAX_MODES: usize = 1 << 14;

/// Solves the exterior Dirichlet problem on the level curve `|w| = radius`:
/// the bounded holomorphic `g` on `|w| > radius` with `Re g = data` there
/// and `Im g(∞) = 0`.
pub fn exterior_dirichlet<T: Real>(
    m: &ExteriorMap<T>,
    radius: T,
    data: &dyn Fn(Complex<T>) -> T,
    modes: Option<usize>,
) -> Result<ExteriorHarmonic<T>> {
    let mut modes = modes.unwrap_or(256).max(4);
    loop {
        let s = Sampler::new(modes);
        let f = s.coefficients(m, radius, data);
        if tail_fraction(&f, modes) < T::attainable(1e-24) || modes >= MAX_MODES {
            let mut coeffs = vec![Complex::new(coeff(&f, 0).re, T::zero())];
            for k in 1..=modes as i64 {
                coeffs.push(coeff(&f, -k) * T::lit(2.0));
            }
            return Ok(ExteriorHarmonic { radius, coeffs });
        }
        modes *= 2;
    }
}

/// Solution of the Dirichlet problem in the gap `1 < |w| < ρ`, split as
/// `H = c·ϖ + Re h1 + (positive powers)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AnnulusSolution<T> {
    pub rho: T,
    pub modes: usize,
    /// Coefficient of the harmonic measure.
    pub c: T,
    /// Part extending boundedly to `|w| > 1`.
    pub h1: ExteriorHarmonic<T>,
    /// Coefficients `a_m` of `|w|^{|m|} e^{imθ}`, `m = -modes..=modes`.
    pub growing: Vec<Complex<T>>,
    /// Coefficients `b_m` of `|w|^{-|m|} e^{imθ}`.
    pub decaying: Vec<Complex<T>>,
    /// `L²` norm on `|w| = 1` of the part with positive powers of `w`.
    pub compat_residual: T,
    /// `L²` norm of the boundary data on both circles.
    pub total_norm: T,
}

impl<T: Real> AnnulusSolution<T> {
    /// Harmonic extension evaluated at `w` in the closed annulus.
    pub fn eval(&self, w: Complex<T>) -> T {
        let r = w.norm();
        let th = w.arg();
        let mut v = self.h1.at_infinity() + self.c * r.ln() / self.rho.ln();
        let modes = self.modes as i64;
        for (i, m) in (-modes..=modes).enumerate() {
            if m == 0 {
                continue;
            }
            let k = m.unsigned_abs() as i32;
            let e = Complex::from_polar(T::one(), th * T::from_i64(m).unwrap());
            v += ((self.growing[i] * r.powi(k) + self.decaying[i] * r.powi(-k)) * e).re;
        }
        v
    }

    /// Whether the compatibility condition holds relative to the solution size.
    pub fn satisfies_compatibility(&self, rel_tol: T) -> bool {
        self.compat_residual <= rel_tol * self.total_norm.max(T::epsilon())
    }
}

/// Solves `ΔH = 0` in the gap between the curve `ψ(|w| = 1)` and the level
/// curve `ψ(|w| = ρ)` with `H = data` on both, after pulling back to the
/// round annulus.
pub fn annulus_dirichlet<T: Real>(
    m: &ExteriorMap<T>,
    rho: T,
    data: &dyn Fn(Complex<T>) -> T,
    modes: Option<usize>,
) -> Result<AnnulusSolution<T>> {
    if !(rho > T::one()) {
        return Err(Error::BadGeometry(format!("outer level {rho} must exceed 1")));
    }
    let mut modes = modes.unwrap_or(256).max(4);
    let (f1, f2) = loop {
        let s = Sampler::new(modes);
        let f1 = s.coefficients(m, T::one(), data);
        let f2 = s.coefficients(m, rho, data);
        let tail = tail_fraction(&f1, modes).max(tail_fraction(&f2, modes));
        if tail < T::attainable(1e-24) || modes >= MAX_MODES {
            break (f1, f2);
        }
        modes *= 2;
    };
    let zero = Complex::new(T::zero(), T::zero());
    let mut growing = Vec::with_capacity(2 * modes + 1);
    let mut decaying = Vec::with_capacity(2 * modes + 1);
    let mut compat = T::zero();
    let mut total = coeff(&f1, 0).norm_sqr() + coeff(&f2, 0).norm_sqr();
    for mm in -(modes as i64)..=(modes as i64) {
        if mm == 0 {
            growing.push(zero);
            decaying.push(zero);
            continue;
        }
        let e = rho.powi(-(mm.unsigned_abs() as i32));
        let (c1, c2) = (coeff(&f1, mm), coeff(&f2, mm));
        let a = (c2 * e - c1 * (e * e)) / (T::one() - e * e);
        let b = c1 - a;
        compat += a.norm_sqr();
        total += c1.norm_sqr() + c2.norm_sqr();
        growing.push(a);
        decaying.push(b);
    }
    let a0 = coeff(&f1, 0).re;
    let c = coeff(&f2, 0).re - a0;
    let mut h = vec![Complex::new(a0, T::zero())];
    for k in 1..=modes {
        h.push(decaying[modes - k] * T::lit(2.0));
    }
    Ok(AnnulusSolution {
        rho,
        modes,
        c,
        h1: ExteriorHarmonic {
            radius: T::one(),
            coeffs: h,
        },
        growing,
        decaying,
        compat_residual: compat.sqrt(),
        total_norm: total.sqrt(),
    })
}

/// Heine parameters `(θ, q)` of an outpost whose curves have capacities
/// `r1 < r2` and Laplacian constant `c`.
pub fn heine_from_geometry<T: Real>(r1: T, r2: T, c: T) -> Result<crate::qdist::HeineParams<T>> {
    if !(r1 > T::zero() && r2 > r1) {
        return Err(Error::BadGeometry(format!("need 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
    }
    let rho = r1 / r2;
    crate::qdist::HeineParams::new(rho * (-c).exp(), rho * rho)
}
