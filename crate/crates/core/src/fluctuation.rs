//! Gaussian fluctuations of linear statistics for radial droplets.
//!
//! All integrals use `dA = dxdy/π`, so for radial data `dA = 2r dr` and a
//! circle of radius `r` carries `(1/8π)∮ ds = r/4`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::{PerturbedWeight, QuasiPolyData, SmoothStep};
use crate::potential::{droplet_structure, solve_gap_radii, DropletStructure, RadialPotential};
use crate::qdist::{heine_cgf, HeineParams, SeriesTolerance};
use crate::quad::{integrate, integrate_layout, peak_layout, QuadConfig};
use crate::scalar::{pairwise_sum, Real};

type JetFn<T> = dyn Fn(T) -> [T; 3] + Send + Sync;

/// Radial test function given by `[f, f', f'']`.
#[derive(Clone)]
pub struct RadialTestFunction<T> {
    jet: Arc<JetFn<T>>,
}

impl<T> fmt::Debug for RadialTestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RadialTestFunction")
    }
}

impl<T: Real> RadialTestFunction<T> {
    pub fn new(jet: impl Fn(T) -> [T; 3] + Send + Sync + 'static) -> Self {
        Self { jet: Arc::new(jet) }
    }

    pub fn constant(c: T) -> Self {
        Self::new(move |_| [c, T::zero(), T::zero()])
    }

    /// `r^p`.
    pub fn power(p: T) -> Self {
        Self::new(move |r: T| {
            [
                r.powf(p),
                p * r.powf(p - T::one()),
                p * (p - T::one()) * r.powf(p - T::lit(2.0)),
            ]
        })
    }

    pub fn log() -> Self {
        Self::new(|r: T| [r.ln(), r.recip(), -(r * r).recip()])
    }

    pub fn step(omega: SmoothStep<T>) -> Self {
        Self::new(move |r| omega.jet(r))
    }

    /// `a f + b g`.
    pub fn combine(a: T, f: &Self, b: T, g: &Self) -> Self {
        let (f, g) = (f.jet.clone(), g.jet.clone());
        Self::new(move |r| {
            let (x, y) = (f(r), g(r));
            [a * x[0] + b * y[0], a * x[1] + b * y[1], a * x[2] + b * y[2]]
        })
    }

    pub fn jet(&self, r: T) -> [T; 3] {
        (self.jet)(r)
    }

    pub fn eval(&self, r: T) -> T {
        self.jet(r)[0]
    }
}

/// Bounded harmonic extension of `f` off the droplet: `f` on each
/// component, `a + b log r` on the gap, constants on the central hole and
/// the exterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonModification<T> {
    /// `(b0, a1, a, b)` for the gap.
    pub gap: Option<(T, T, T, T)>,
    /// `(e0, f(e0))` when the droplet has a central hole.
    pub hole: Option<(T, T)>,
    /// `(b_N, f(b_N))`.
    pub exterior: (T, T),
}

impl<T: Real> PoissonModification<T> {
    pub fn eval(&self, f: &RadialTestFunction<T>, r: T) -> T {
        if let Some((e0, v)) = self.hole {
            if r < e0 {
                return v;
            }
        }
        if let Some((b0, a1, a, b)) = self.gap {
            if r > b0 && r < a1 {
                return a + b * r.ln();
            }
        }
        if r > self.exterior.0 {
            return self.exterior.1;
        }
        f.eval(r)
    }

    /// Log coefficient on the gap, zero without one.
    pub fn log_coefficient(&self) -> T {
        self.gap.map_or(T::zero(), |g| g.3)
    }
}

pub fn poisson_modify<T: Real>(f: &RadialTestFunction<T>, d: &DropletStructure<T>) -> PoissonModification<T> {
    let (e0, _) = d.components[0];
    let (_, bn) = *d.components.last().unwrap();
    let gap = (d.components.len() > 1).then(|| {
        let (b0, a1) = (d.components[0].1, d.components[1].0);
        let (f0, f1) = (f.eval(b0), f.eval(a1));
        let b = (f1 - f0) / (a1 / b0).ln();
        (b0, a1, f0 - b * b0.ln(), b)
    });
    PoissonModification {
        gap,
        hole: (e0 > T::zero()).then(|| (e0, f.eval(e0))),
        exterior: (bn, f.eval(bn)),
    }
}

/// `f = f1 + λω`; without a gap `f1 = f`, `λ = 0` and there is no step.
#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    pub f1: RadialTestFunction<T>,
    pub lambda: T,
    pub omega: Option<SmoothStep<T>>,
}

/// Splits off `λω` with `λ = f(a1) − f(b0)`, so that the gap extension of
/// `f1` has no log term.
pub fn decompose_radial<T: Real>(f: &RadialTestFunction<T>, d: &DropletStructure<T>) -> Decomposition<T> {
    if d.components.len() < 2 {
        return Decomposition {
            f1: f.clone(),
            lambda: T::zero(),
            omega: None,
        };
    }
    let (b0, a1) = (d.components[0].1, d.components[1].0);
    let omega = SmoothStep::for_gap(b0, a1);
    let lambda = f.eval(a1) - f.eval(b0);
    let step = RadialTestFunction::step(omega);
    Decomposition {
        f1: RadialTestFunction::combine(T::one(), f, -lambda, &step),
        lambda,
        omega: Some(omega),
    }
}

/// A boundary circle of the droplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    /// Inner edge of the first component, facing the central hole.
    Hole,
    /// Inner edge of the gap.
    GapInner,
    /// Outer edge of the gap.
    GapOuter,
    /// Outer edge of the last component.
    Exterior,
}

impl EdgeKind {
    /// `+1` if the outward normal of the droplet points to larger `r`.
    pub fn orientation<T: Real>(self) -> T {
        match self {
            EdgeKind::Hole | EdgeKind::GapOuter => -T::one(),
            EdgeKind::GapInner | EdgeKind::Exterior => T::one(),
        }
    }
}

pub fn edges<T: Real>(d: &DropletStructure<T>) -> Vec<(EdgeKind, T)> {
    let mut out = Vec::new();
    let (e0, b0) = d.components[0];
    if e0 > T::zero() {
        out.push((EdgeKind::Hole, e0));
    }
    if d.components.len() > 1 {
        out.push((EdgeKind::GapInner, b0));
        out.push((EdgeKind::GapOuter, d.components[1].0));
    }
    out.push((EdgeKind::Exterior, d.components.last().unwrap().1));
    out
}

fn gap_log_slope<T: Real>(pot: &RadialPotential<T>, d: &DropletStructure<T>) -> Result<T> {
    if d.components.len() < 2 {
        return Ok(T::zero());
    }
    let (b0, a1) = (d.components[0].1, d.components[1].0);
    Ok((pot.log_laplacian_jet(a1)?[0] - pot.log_laplacian_jet(b0)?[0]) / (a1 / b0).ln())
}

/// Neumann jump `−∂_N(L − L^S)` of `L = log ΔQ` at an edge, `N` the outward
/// normal of the droplet.
pub fn neumann_jump_l<T: Real>(pot: &RadialPotential<T>, d: &DropletStructure<T>, edge: EdgeKind) -> Result<T> {
    let r = edges(d)
        .into_iter()
        .find(|e| e.0 == edge)
        .map(|e| e.1)
        .ok_or_else(|| Error::InvalidParameter(format!("droplet has no {edge:?} edge")))?;
    let du = pot.log_laplacian_jet(r)?[1];
    let ext = match edge {
        EdgeKind::GapInner | EdgeKind::GapOuter => gap_log_slope(pot, d)? / r,
        _ => T::zero(),
    };
    Ok(-edge.orientation::<T>() * (du - ext))
}

/// The same jump from one-sided differences of `L` inside the droplet and
/// of the explicit extension outside it.
pub fn neumann_jump_fd<T: Real>(pot: &RadialPotential<T>, d: &DropletStructure<T>, edge: EdgeKind, h: T) -> Result<T> {
    let r = edges(d)
        .into_iter()
        .find(|e| e.0 == edge)
        .map(|e| e.1)
        .ok_or_else(|| Error::InvalidParameter(format!("droplet has no {edge:?} edge")))?;
    let l = |x: T| pot.laplacian(x).map(|v| v.ln());
    let inward = -edge.orientation::<T>();
    // second-order one-sided difference towards the droplet interior
    let (x1, x2) = (r + inward * h, r + inward * h * T::lit(2.0));
    let d_in = (T::lit(-3.0) * l(r)? + T::lit(4.0) * l(x1)? - l(x2)?) / (T::lit(2.0) * h) * inward;
    let ext = match edge {
        EdgeKind::GapInner | EdgeKind::GapOuter => {
            let (b0, a1) = (d.components[0].1, d.components[1].0);
            let (l0, l1) = (l(b0)?, l(a1)?);
            let b = (l1 - l0) / (a1 / b0).ln();
            let lin = |x: T| l0 + b * (x / b0).ln();
            let outward = edge.orientation::<T>();
            let (y1, y2) = (r + outward * h, r + outward * h * T::lit(2.0));
            (T::lit(-3.0) * lin(r) + T::lit(4.0) * lin(y1) - lin(y2)) / (T::lit(2.0) * h) * outward
        }
        _ => T::zero(),
    };
    Ok(-edge.orientation::<T>() * (d_in - ext))
}

/// Mean and variance of the limiting normal law, with the three terms of
/// the mean kept apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVariance<T> {
    pub e_f: T,
    pub v_f: T,
    /// `½∫_S f Δ log ΔQ dA`.
    pub bulk: T,
    /// `(1/8π)∮ ∂_n f ds`.
    pub normal: T,
    /// `(1/8π)∮ f 𝒩(L) ds`.
    pub jump: T,
}

fn quad_cfg<T: Real>() -> QuadConfig<T> {
    QuadConfig {
        rel_tol: T::attainable(1e-12),
        abs_tol: T::attainable(1e-14),
        ..QuadConfig::default()
    }
}

pub fn ef_vf<T: Real>(f1: &RadialTestFunction<T>, pot: &RadialPotential<T>, d: &DropletStructure<T>) -> Result<MeanVariance<T>> {
    let cfg = quad_cfg();
    let quarter = T::lit(0.25);
    let mut bulk = T::zero();
    let mut energy = T::zero();
    for &(a, b) in &d.components {
        bulk += integrate(
            |r: T| f1.eval(r) * pot.laplacian_of_log_laplacian(r).unwrap_or(T::nan()) * r,
            a,
            b,
            &cfg,
        )?;
        energy += integrate(
            |r: T| {
                let d1 = f1.jet(r)[1];
                d1 * d1 * r
            },
            a,
            b,
            &cfg,
        )?;
    }
    let mut normal = T::zero();
    let mut jump = T::zero();
    for (kind, r) in edges(d) {
        let [v, d1, _] = f1.jet(r);
        normal += quarter * r * kind.orientation::<T>() * d1;
        jump += quarter * r * v * neumann_jump_l(pot, d, kind)?;
    }
    let half = T::lit(0.5);
    let pm = poisson_modify(f1, d);
    let gap_energy = match pm.gap {
        Some((b0, a1, _, b)) => half * b * b * (a1 / b0).ln(),
        None => T::zero(),
    };
    Ok(MeanVariance {
        e_f: bulk + normal + jump,
        v_f: half * energy + gap_energy,
        bulk,
        normal,
        jump,
    })
}

/// `σ(f) = ∫ f dσ` for the equilibrium measure `ΔQ 1_S dA`.
pub fn sigma_f<T: Real>(f: &RadialTestFunction<T>, pot: &RadialPotential<T>, d: &DropletStructure<T>) -> Result<T> {
    let cfg = quad_cfg();
    let mut total = T::zero();
    for &(a, b) in &d.components {
        total += integrate(
            |r: T| T::lit(2.0) * r * f.eval(r) * pot.laplacian(r).unwrap_or(T::nan()),
            a,
            b,
            &cfg,
        )?;
    }
    Ok(total)
}

/// Exact finite-`n` mean and variance of `Σ f(R_j) − nσ` from the
/// independent moduli.
pub fn finite_n_moments<T: Real>(w: &PerturbedWeight<T>, f: &RadialTestFunction<T>, n: usize, sigma: T) -> Result<(T, T)> {
    let cfg = quad_cfg();
    let intervals = w.pot.intervals();
    let rows = (0..n)
        .into_par_iter()
        .map(|j| {
            let g = |r: T| w.log_density(j, n, r);
            let layout = peak_layout(&g, &intervals, &[w.omega.m1, w.omega.m2])
                .ok_or_else(|| Error::QuadratureFailure(format!("weight vanishes for j = {j}")))?;
            let m = layout.log_max;
            let z = integrate_layout(&|r| (g(r) - m).exp(), &layout, &cfg)?;
            let mean = integrate_layout(&|r| f.eval(r) * (g(r) - m).exp(), &layout, &cfg)? / z;
            let var = integrate_layout(
                &|r| {
                    let d = f.eval(r) - mean;
                    d * d * (g(r) - m).exp()
                },
                &layout,
                &cfg,
            )? / z;
            Ok((mean, var))
        })
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<T> = rows.iter().map(|r| r.0).collect();
    let vars: Vec<T> = rows.iter().map(|r| r.1).collect();
    Ok((pairwise_sum(&means) - T::of(n) * sigma, pairwise_sum(&vars)))
}

/// Potential, gap geometry and derived data for predictions.
#[derive(Debug, Clone)]
pub struct GapContext<T> {
    pub pot: RadialPotential<T>,
    pub tau_star: T,
    pub droplet: DropletStructure<T>,
    pub geometry: QuasiPolyData<T>,
    pub omega: SmoothStep<T>,
}

impl<T: Real> GapContext<T> {
    pub fn new(pot: RadialPotential<T>, tau_star: T) -> Result<Self> {
        let radii = solve_gap_radii(&pot, tau_star)?;
        let droplet = droplet_structure(&pot, radii.b0, radii.a1)?;
        if droplet.components.len() < 2 {
            return Err(Error::NoGap("droplet has a single component".into()));
        }
        let geometry = QuasiPolyData::from_radial(&pot, tau_star)?;
        Ok(Self {
            omega: SmoothStep::for_gap(radii.b0, radii.a1),
            pot,
            tau_star,
            droplet,
            geometry,
        })
    }

    pub fn weight(&self) -> PerturbedWeight<T> {
        PerturbedWeight::new(self.pot.clone(), T::zero(), self.omega)
    }
}

/// Combined prediction for `fluct_n f` across a gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FluctPrediction<T> {
    pub n: usize,
    pub x_n: T,
    pub e_f: T,
    pub v_f: T,
    pub lambda: T,
    pub sigma_f: T,
    pub heine_plus: HeineParams<T>,
    pub heine_minus: HeineParams<T>,
}

impl<T: Real> FluctPrediction<T> {
    /// `F(t) = F⁺(λt) + F⁻(−λt) + λt x_n + t e_f + t² v_f/2`.
    pub fn cgf(&self, t: T) -> Result<T> {
        let tol = SeriesTolerance::default();
        let lt = self.lambda * t;
        Ok(heine_cgf(lt, &self.heine_plus, &tol)?
            + heine_cgf(-lt, &self.heine_minus, &tol)?
            + lt * self.x_n
            + t * self.e_f
            + t * t * self.v_f * T::lit(0.5))
    }
}

pub fn predict_total<T: Real>(f: &RadialTestFunction<T>, ctx: &GapContext<T>, n: usize) -> Result<FluctPrediction<T>> {
    let dec = decompose_radial(f, &ctx.droplet);
    let mv = ef_vf(&dec.f1, &ctx.pot, &ctx.droplet)?;
    let laws = ctx.geometry.gap_laws(n)?;
    Ok(FluctPrediction {
        n,
        x_n: ctx.geometry.x_n(n),
        e_f: mv.e_f,
        v_f: mv.v_f,
        lambda: dec.lambda,
        sigma_f: sigma_f(f, &ctx.pot, &ctx.droplet)?,
        heine_plus: laws.plus,
        heine_minus: laws.minus,
    })
}
