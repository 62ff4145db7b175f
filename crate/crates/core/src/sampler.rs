//! Exact sampling of radial ensembles.
//!
//! For a radial weight the moduli `|z_1|, …, |z_n|` are, after a random
//! relabelling, independent with densities `∝ r^{2j+1} e^{-nQ(r) + sω(r)}`,
//! `j = 0, …, n − 1`. Each density is tabulated once as a piecewise cubic
//! inverse CDF; replicas draw one uniform per index.
//!
//! Replica `k` uses `ChaCha8Rng::seed_from_u64(seed)` with stream `k`, so any
//! replica can be regenerated on its own.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::PerturbedWeight;
use crate::quad::gauss_legendre;
use crate::scalar::Real;

/// Default number of table nodes per index.
pub const TABLE_POINTS: usize = 4096;

const MAX_TABLE_POINTS: usize = 1 << 18;
/// Densities below `e^{-CUTOFF}` times the peak are treated as zero.
const CUTOFF: f64 = 46.0;
const SCAN: usize = 8192;
const CELL_ORDER: usize = 8;
/// Allowed inverse-CDF error in `r`.
const R_TOL: f64 = 1e-9;
const BLOCK: u64 = 512;

#[derive(Debug, Clone)]
struct Segment<T> {
    x: Vec<T>,
    cdf: Vec<T>,
    pdf: Vec<T>,
}

impl<T: Real> Segment<T> {
    fn hermite(&self, i: usize, x: T) -> (T, T) {
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.pdf[i] * h, self.pdf[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let v = (two * t3 - three * t2 + T::one()) * f0
            + (t3 - two * t2 + t) * d0
            + (three * t2 - two * t3) * f1
            + (t3 - t2) * d1;
        let dv = (T::lit(6.0) * t2 - T::lit(6.0) * t) * (f0 - f1)
            + (three * t2 - T::lit(4.0) * t + T::one()) * d0
            + (three * t2 - two * t) * d1;
        (v, dv / h)
    }

    fn invert(&self, u: T) -> T {
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, self.x.len() - 1) - 1;
        let (mut lo, mut hi) = (self.x[k], self.x[k + 1]);
        let span = self.cdf[k + 1] - self.cdf[k];
        if !(span > T::zero()) {
            return lo;
        }
        let mut x = lo + (hi - lo) * ((u - self.cdf[k]) / span).min(T::one()).max(T::zero());
        for _ in 0..60 {
            let (v, dv) = self.hermite(k, x);
            let g = v - u;
            if g > T::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - g / dv;
            if !(next > lo && next < hi) || !dv.is_finite() || dv <= T::zero() {
                next = (lo + hi) * T::lit(0.5);
            }
            if (next - x).abs() <= T::lit(1e-13) * (T::one() + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Inverse CDF of one index, stored as segments of significant density.
#[derive(Debug, Clone)]
pub struct InverseCdf<T> {
    segments: Vec<Segment<T>>,
    /// Cumulative probability at the start of each segment.
    offsets: Vec<T>,
}

impl<T: Real> InverseCdf<T> {
    pub fn quantile(&self, u: T) -> T {
        let k = self.offsets.partition_point(|&o| o <= u).max(1) - 1;
        self.segments[k].invert(u)
    }

    /// Tabulated CDF at `r`.
    pub fn cdf(&self, r: T) -> T {
        for seg in &self.segments {
            if r < seg.x[0] {
                return seg.cdf[0];
            }
            if r <= *seg.x.last().unwrap() {
                let i = seg.x.partition_point(|&x| x <= r).clamp(1, seg.x.len() - 1) - 1;
                return seg.hermite(i, r).0;
            }
        }
        T::one()
    }

    pub fn nodes(&self) -> usize {
        self.segments.iter().map(|s| s.x.len()).sum()
    }

    /// Support `[min, max]` of the tabulated density.
    pub fn support(&self) -> (T, T) {
        (self.segments[0].x[0], *self.segments.last().unwrap().x.last().unwrap())
    }
}

fn significant_ranges<T: Real>(g: &dyn Fn(T) -> T, intervals: &[(T, T)]) -> Option<(T, Vec<(T, T)>)> {
    let mut samples = Vec::new();
    for &(a, b) in intervals {
        let h = (b - a) / T::of(SCAN);
        let xs: Vec<T> = (0..=SCAN).map(|i| a + h * T::of(i)).collect();
        let vs: Vec<T> = xs.iter().map(|&x| g(x)).collect();
        samples.push((xs, vs));
    }
    let peak = samples
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .filter(|v| v.is_finite())
        .fold(T::neg_infinity(), T::max);
    if !peak.is_finite() {
        return None;
    }
    let floor = peak - T::lit(CUTOFF);
    let mut ranges = Vec::new();
    for (xs, vs) in &samples {
        let mut i = 0;
        while i < xs.len() {
            if vs[i] > floor {
                let start = i.saturating_sub(1);
                let mut end = i;
                while end + 1 < xs.len() && vs[end + 1] > floor {
                    end += 1;
                }
                let stop = (end + 1).min(xs.len() - 1);
                ranges.push((xs[start], xs[stop]));
                i = stop + 1;
            } else {
                i += 1;
            }
        }
    }
    Some((peak, ranges))
}

fn tabulate<T: Real>(g: &dyn Fn(T) -> T, intervals: &[(T, T)], points: usize) -> Result<InverseCdf<T>> {
    let (peak, ranges) =
        significant_ranges(g, intervals).ok_or_else(|| Error::QuadratureFailure("density vanishes on every window".into()))?;
    let (gx, gw) = gauss_legendre::<T>(CELL_ORDER);
    let dens = |r: T| (g(r) - peak).exp();
    let cell_mass = |a: T, b: T| -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        gx.iter().zip(&gw).map(|(x, w)| *w * dens(mid + half * *x)).sum::<T>() * half
    };
    let total_len: T = ranges.iter().map(|(a, b)| *b - *a).sum();
    let mut raw = Vec::with_capacity(ranges.len());
    let mut acc = T::zero();
    for &(a, b) in &ranges {
        let m = (T::of(points) * (b - a) / total_len).to_usize().unwrap_or(0).max(32);
        let h = (b - a) / T::of(m);
        let x: Vec<T> = (0..=m).map(|i| if i == m { b } else { a + h * T::of(i) }).collect();
        let mut cdf = Vec::with_capacity(m + 1);
        cdf.push(acc);
        for i in 0..m {
            acc += cell_mass(x[i], x[i + 1]);
            cdf.push(acc);
        }
        let pdf = x.iter().map(|&r| dens(r)).collect();
        raw.push(Segment { x, cdf, pdf });
    }
    if !(acc > T::zero()) || !acc.is_finite() {
        return Err(Error::QuadratureFailure(format!("density integrates to {acc}")));
    }
    let mut offsets = Vec::with_capacity(raw.len());
    for seg in &mut raw {
        for c in seg.cdf.iter_mut() {
            *c /= acc;
        }
        for p in seg.pdf.iter_mut() {
            *p /= acc;
        }
        offsets.push(seg.cdf[0]);
    }
    let table = InverseCdf { segments: raw, offsets };
    check_table(&table, &dens, acc, &cell_mass)?;
    Ok(table)
}

/// Monotonicity (Fritsch–Carlson) and midpoint accuracy of every cell.
fn check_table<T: Real>(
    t: &InverseCdf<T>,
    dens: &dyn Fn(T) -> T,
    total: T,
    cell_mass: &dyn Fn(T, T) -> T,
) -> Result<()> {
    let nine = T::lit(9.0);
    let tiny = T::lit(1e-15);
    for seg in &t.segments {
        for i in 0..seg.x.len() - 1 {
            let h = seg.x[i + 1] - seg.x[i];
            let delta = (seg.cdf[i + 1] - seg.cdf[i]) / h;
            if delta * h <= tiny {
                continue;
            }
            let a = seg.pdf[i] / delta;
            let b = seg.pdf[i + 1] / delta;
            if a * a + b * b > nine {
                return Err(Error::TableError(format!("non-monotone cell at r = {}", seg.x[i])));
            }
            let mid = (seg.x[i] + seg.x[i + 1]) * T::lit(0.5);
            let exact = seg.cdf[i] + cell_mass(seg.x[i], mid) / total;
            let (approx, _) = seg.hermite(i, mid);
            let p = dens(mid) / total;
            if (approx - exact).abs() > T::lit(R_TOL) * p + tiny {
                return Err(Error::TableError(format!("interpolation error at r = {mid}")));
            }
        }
    }
    Ok(())
}

/// Builds an inverse-CDF table for `log_density`, doubling the node count
/// until the table passes its checks.
pub fn build_inverse_cdf<T: Real>(
    log_density: &dyn Fn(T) -> T,
    intervals: &[(T, T)],
    table_points: usize,
) -> Result<InverseCdf<T>> {
    let mut points = table_points.max(64);
    loop {
        match tabulate(log_density, intervals, points) {
            Err(Error::TableError(msg)) => {
                points *= 2;
                if points > MAX_TABLE_POINTS {
                    return Err(Error::TableError(msg));
                }
            }
            other => return other,
        }
    }
}

/// Per-index inverse CDFs of the moduli.
#[derive(Clone)]
pub struct ModuliSampler<T> {
    pub n: usize,
    pub seed: u64,
    pub weight: Arc<PerturbedWeight<T>>,
    tables: Vec<InverseCdf<T>>,
}

impl<T: Real> std::fmt::Debug for ModuliSampler<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModuliSampler")
            .field("n", &self.n)
            .field("seed", &self.seed)
            .field("nodes", &self.tables.iter().map(|t| t.nodes()).sum::<usize>())
            .finish()
    }
}

pub fn build_sampler<T: Real>(w: &PerturbedWeight<T>, n: usize, table_points: usize, seed: u64) -> Result<ModuliSampler<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("ensemble size must be positive".into()));
    }
    let intervals = w.pot.intervals();
    let tables = (0..n)
        .into_par_iter()
        .map(|j| build_inverse_cdf(&|r: T| w.log_density(j, n, r), &intervals, table_points))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModuliSampler {
        n,
        seed,
        weight: Arc::new(w.clone()),
        tables,
    })
}

impl<T: Real> ModuliSampler<T> {
    pub fn table(&self, j: usize) -> &InverseCdf<T> {
        &self.tables[j]
    }

    pub fn rng(&self, replica: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica);
        rng
    }

    /// Moduli of replica `replica`, entry `j` drawn from the index-`j` law.
    pub fn draw(&self, replica: u64) -> Vec<T> {
        let mut rng = self.rng(replica);
        self.tables
            .iter()
            .map(|t| t.quantile(T::lit(rng.random::<f64>())))
            .collect()
    }

    /// Draws of a single index, used for marginal checks.
    pub fn draw_index(&self, j: usize, count: usize, stream: u64) -> Vec<T> {
        let mut rng = self.rng(stream);
        (0..count).map(|_| self.tables[j].quantile(T::lit(rng.random::<f64>()))).collect()
    }

    /// Moduli of replicas `start..end`; identical to calling [`Self::draw`]
    /// on each, but walks the tables index by index to stay in cache.
    pub fn draw_block(&self, start: u64, end: u64) -> Vec<Vec<T>> {
        let mut rngs: Vec<ChaCha8Rng> = (start..end).map(|k| self.rng(k)).collect();
        let mut out: Vec<Vec<T>> = (start..end).map(|_| Vec::with_capacity(self.n)).collect();
        for t in &self.tables {
            for (rng, row) in rngs.iter_mut().zip(out.iter_mut()) {
                row.push(t.quantile(T::lit(rng.random::<f64>())));
            }
        }
        out
    }

    fn per_replica<R: Send>(&self, replicas: usize, stat: impl Fn(&[T]) -> R + Sync) -> Vec<R> {
        let total = replicas as u64;
        let blocks: Vec<u64> = (0..total.div_ceil(BLOCK)).collect();
        blocks
            .into_par_iter()
            .flat_map_iter(|b| {
                let rows = self.draw_block(b * BLOCK, ((b + 1) * BLOCK).min(total));
                rows.iter().map(|r| stat(r)).collect::<Vec<_>>()
            })
            .collect()
    }

    /// Number of moduli `>= threshold` in each replica.
    pub fn sample_counts(&self, threshold: T, replicas: usize) -> SampleBatch<T> {
        let counts = self.per_replica(replicas, |r| r.iter().filter(|&&x| x >= threshold).count() as i64);
        SampleBatch {
            seed: self.seed,
            counts,
            lin_stats: Vec::new(),
            seed_chain: (0..replicas as u64).collect(),
        }
    }

    /// `Σ f(R_j) − n σ_f` in each replica, together with the count beyond
    /// `threshold` when one is given.
    pub fn sample_linear_stat(
        &self,
        f: &(dyn Fn(T) -> T + Sync),
        sigma_f: T,
        threshold: Option<T>,
        replicas: usize,
    ) -> SampleBatch<T> {
        let centre = T::of(self.n) * sigma_f;
        let rows = self.per_replica(replicas, |r| {
            let count = threshold.map_or(0, |t| r.iter().filter(|&&x| x >= t).count() as i64);
            let vals: Vec<T> = r.iter().map(|&x| f(x)).collect();
            (count, crate::scalar::pairwise_sum(&vals) - centre)
        });
        SampleBatch {
            seed: self.seed,
            counts: if threshold.is_some() { rows.iter().map(|r| r.0).collect() } else { Vec::new() },
            lin_stats: rows.iter().map(|r| r.1).collect(),
            seed_chain: (0..replicas as u64).collect(),
        }
    }
}

/// Replica statistics. Replica `k` used stream `seed_chain[k]` of the
/// generator seeded with `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SampleBatch<T> {
    pub seed: u64,
    pub counts: Vec<i64>,
    pub lin_stats: Vec<T>,
    pub seed_chain: Vec<u64>,
}

impl<T: Real> SampleBatch<T> {
    pub fn replicas(&self) -> usize {
        self.seed_chain.len()
    }

    /// The same batch with every count shifted by `-offset`.
    pub fn shifted(&self, offset: i64) -> Self {
        Self {
            counts: self.counts.iter().map(|c| c - offset).collect(),
            ..self.clone()
        }
    }
}

/// Relative frequencies of the observed values.
pub fn empirical_pmf(counts: &[i64]) -> BTreeMap<i64, f64> {
    let mut m = BTreeMap::new();
    for &c in counts {
        *m.entry(c).or_insert(0.0) += 1.0;
    }
    let total = counts.len() as f64;
    for v in m.values_mut() {
        *v /= total;
    }
    m
}

/// `½ Σ_obs |p̂(j) − p(j)| + ½ (1 − Σ_obs p(j))`.
pub fn empirical_tv(counts: &[i64], model_pmf: &dyn Fn(i64) -> f64) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    let pmf = empirical_pmf(counts);
    let mut diff = 0.0;
    let mut covered = 0.0;
    for (&j, &p) in &pmf {
        let m = model_pmf(j);
        diff += (p - m).abs();
        covered += m;
    }
    (0.5 * (diff + (1.0 - covered).max(0.0))).min(1.0)
}

/// Bootstrap standard error of `stat` over `resamples` resamples.
pub fn bootstrap_se(values: &[f64], stat: &(dyn Fn(&[f64]) -> f64 + Sync), resamples: usize, seed: u64) -> f64 {
    if values.is_empty() || resamples < 2 {
        return f64::NAN;
    }
    let reps: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let sample: Vec<f64> = (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).collect();
            stat(&sample)
        })
        .collect();
    mean_var(&reps).1.sqrt()
}

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Scalar summary written next to a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub replicas: usize,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub pmf: BTreeMap<i64, f64>,
    pub tv: Option<f64>,
}

impl BatchSummary {
    pub fn of_counts(counts: &[i64], seed: u64, model_pmf: Option<&dyn Fn(i64) -> f64>) -> Self {
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let (mean, variance) = mean_var(&xs);
        Self {
            replicas: counts.len(),
            seed,
            mean,
            variance,
            pmf: empirical_pmf(counts),
            tv: model_pmf.map(|p| empirical_tv(counts, p)),
        }
    }
}
