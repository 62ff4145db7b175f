//! One-dimensional quadrature: adaptive Gauss–Kronrod, Gauss–Legendre rules
//! and log-scale integrals of sharply peaked integrands.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::attainable(1e-13),
            abs_tol: T::zero(),
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let c = (a + b) * T::lit(0.5);
    let h = (b - a) * T::lit(0.5);
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = h * T::lit(XGK[i]);
        let s = f(c - dx) + f(c + dx);
        k += s * T::lit(WGK[i]);
        if i % 2 == 1 {
            g += s * T::lit(WG[i / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration over the union of the
/// consecutive subintervals defined by `points` (sorted, at least two).
pub fn integrate_on<T: Real, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>> {
    if points.len() < 2 {
        return Err(Error::QuadratureFailure("need at least two points".into()));
    }
    let mut segs: Vec<(T, T, T, T)> = Vec::with_capacity(64);
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&f, w[0], w[1]);
            segs.push((w[0], w[1], v, e));
        }
    }
    loop {
        let total: T = segs.iter().map(|s| s.2).sum();
        let err: T = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureFailure("non-finite integrand".into()));
        }
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= tol {
            return Ok(QuadResult {
                value: total,
                error: err,
                intervals: segs.len(),
            });
        }
        if segs.len() >= cfg.max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "error {} above tolerance {} after {} intervals",
                err.f64(),
                tol.f64(),
                segs.len()
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (a, b, _, _) = segs[idx];
        let m = (a + b) * T::lit(0.5);
        if !(m > a && m < b) {
            return Err(Error::QuadratureFailure("interval underflow".into()));
        }
        let (v1, e1) = gk15(&f, a, m);
        let (v2, e2) = gk15(&f, m, b);
        segs[idx] = (a, m, v1, e1);
        segs.push((m, b, v2, e2));
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<T> {
    integrate_on(f, &[a, b], cfg).map(|r| r.value)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = vec![T::zero(); m];
    let mut ws = vec![T::zero(); m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = T::lit(-x);
        xs[m - 1 - i] = T::lit(x);
        ws[i] = T::lit(w);
        ws[m - 1 - i] = T::lit(w);
    }
    (xs, ws)
}

/// Maximises a unimodal function on `[a, b]` by golden-section search.
pub fn golden_max<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let x = (a + b) * T::lit(0.5);
    let fx = f(x);
    if fx >= fc && fx >= fd {
        (x, fx)
    } else if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Local peak of a log-integrand inside one interval.
#[derive(Debug, Clone, Copy)]
pub struct Peak<T> {
    pub at: T,
    pub value: T,
    pub width: T,
}

/// Locates the local maxima of `g` on `[a, b]` that lie within `depth` of the
/// interval maximum.
pub fn find_peaks<T: Real, F: Fn(T) -> T>(g: &F, a: T, b: T, samples: usize, depth: T) -> Vec<Peak<T>> {
    let k = samples.max(8);
    let h = (b - a) / T::of(k);
    let xs: Vec<T> = (0..=k).map(|i| if i == k { b } else { a + h * T::of(i) }).collect();
    let vs: Vec<T> = xs.iter().map(|&x| g(x)).collect();
    let top = vs.iter().copied().fold(T::neg_infinity(), T::max);
    if !top.is_finite() {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for i in 0..=k {
        let left = if i == 0 { T::neg_infinity() } else { vs[i - 1] };
        let right = if i == k { T::neg_infinity() } else { vs[i + 1] };
        if vs[i] >= left && vs[i] >= right && vs[i] > top - depth && vs[i].is_finite() {
            let lo = if i == 0 { a } else { xs[i - 1] };
            let hi = if i == k { b } else { xs[i + 1] };
            let (at, value) = golden_max(g, lo, hi, (b - a) * T::attainable(1e-13));
            let (at, value) = if vs[i] > value { (xs[i], vs[i]) } else { (at, value) };
            let e = h * T::lit(0.05);
            let curv = (g((at + e).min(b)) - T::lit(2.0) * value + g((at - e).max(a))) / (e * e);
            let width = if curv < T::zero() && curv.is_finite() {
                (-curv).sqrt().recip().min(b - a)
            } else {
                h
            };
            peaks.push(Peak { at, value, width });
        }
    }
    peaks
}

/// Peak-aware subdivision of a set of intervals for a log-integrand.
#[derive(Debug, Clone)]
pub struct PeakLayout<T> {
    pub log_max: T,
    pub points: Vec<Vec<T>>,
}

/// Builds the subdivision used by [`log_integral`].
pub fn peak_layout<T: Real, F: Fn(T) -> T>(g: &F, intervals: &[(T, T)], extra: &[T]) -> Option<PeakLayout<T>> {
    let mut log_max = T::neg_infinity();
    let mut points = Vec::with_capacity(intervals.len());
    for &(a, b) in intervals {
        let peaks = find_peaks(g, a, b, 256, T::lit(80.0));
        let mut pts = vec![a, b];
        for p in &peaks {
            log_max = log_max.max(p.value);
            pts.push(p.at);
            for m in [1.0, 3.0, 8.0, 20.0] {
                for sgn in [-1.0, 1.0] {
                    pts.push(p.at + p.width * T::lit(m * sgn));
                }
            }
        }
        pts.extend(extra.iter().copied());
        pts.retain(|&x| x >= a && x <= b && x.is_finite());
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() <= (b - a) * T::epsilon() * T::lit(16.0));
        points.push(pts);
    }
    if log_max.is_finite() {
        Some(PeakLayout { log_max, points })
    } else {
        None
    }
}

/// Integral of `exp(g - shift)` over a precomputed layout.
pub fn integrate_layout<T: Real, F: Fn(T) -> T>(f: &F, layout: &PeakLayout<T>, cfg: &QuadConfig<T>) -> Result<T> {
    let mut parts = Vec::with_capacity(layout.points.len());
    let mut scale = T::zero();
    for pts in &layout.points {
        let r = integrate_on(f, pts, &QuadConfig { abs_tol: T::zero(), ..*cfg })?;
        scale += r.value.abs();
        parts.push(r);
    }
    let total: T = parts.iter().map(|r| r.value).sum();
    let err: T = parts.iter().map(|r| r.error).sum();
    if err > cfg.rel_tol * scale * T::lit(10.0) + cfg.abs_tol {
        return Err(Error::QuadratureFailure("combined error too large".into()));
    }
    Ok(total)
}

/// Returns `log ∫ exp(g)` over the union of `intervals`, where `g` may be
/// sharply peaked; `extra` lists additional breakpoints.
pub fn log_integral<T: Real, F: Fn(T) -> T>(g: F, intervals: &[(T, T)], extra: &[T], cfg: &QuadConfig<T>) -> Result<T> {
    let layout = peak_layout(&g, intervals, extra)
        .ok_or_else(|| Error::QuadratureFailure("integrand vanishes on every interval".into()))?;
    let m = layout.log_max;
    let v = integrate_layout(&|x| (g(x) - m).exp(), &layout, cfg)?;
    if v > T::zero() {
        Ok(m + v.ln())
    } else {
        Err(Error::QuadratureFailure("non-positive integral".into()))
    }
}
