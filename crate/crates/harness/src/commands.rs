use std::path::PathBuf;

use heine_core::conformal::{annulus_dirichlet, heine_from_geometry, ExteriorMap};
use heine_core::fluctuation::{
    decompose_radial, ef_vf, finite_n_moments, predict_total, sigma_f, FluctPrediction, GapContext, MeanVariance,
};
use heine_core::orthopoly::{bifurcation_halfwidth, LogNormRow, LogNormTable, PerturbedWeight, QuasiPolyData, Regime, SmoothStep};
use heine_core::potential::{droplet_structure, solve_gap_radii, DropletStructure, RadialPotential};
use heine_core::qdist::{dnorm_pmf, heine_cgf, heine_mean, heine_pmf, heine_variance, HeineParams, SeriesTolerance};
use heine_core::sampler::{build_sampler, BatchSummary};
use num_complex::Complex;
use serde::Serialize;

use crate::config::{LoadedConfig, Mode};
use crate::error::HarnessError;
use crate::free_energy::{fit_smooth, log_partition, pearson, SmoothFit};
use crate::gn::{gn_direct, gn_evaluate, GapSpec, GnTerm};
use crate::output::{Outputs, Stamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Predict,
    Norms,
    Simulate,
    Fluct,
    Conformal,
    FreeEnergy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Predict => "predict",
            Command::Norms => "norms",
            Command::Simulate => "simulate",
            Command::Fluct => "fluct",
            Command::Conformal => "conformal",
            Command::FreeEnergy => "free-energy",
        }
    }
}

/// Everything a command needs besides the config itself.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn run(cmd: Command, cfg: &LoadedConfig, opts: &RunOptions) -> Result<Vec<PathBuf>, HarnessError> {
    let seed = opts.seed.unwrap_or(cfg.config.seed);
    let stamp = Stamp::new(cmd.name(), cfg.hash(), seed);
    let outputs = match cmd {
        Command::Predict => predict(cfg, &stamp)?,
        Command::Norms => norms(cfg, &stamp)?,
        Command::Simulate => simulate(cfg, &stamp, seed)?,
        Command::Fluct => fluct(cfg, &stamp)?,
        Command::Conformal => conformal(cfg, &stamp)?,
        Command::FreeEnergy => free_energy(cfg, &stamp)?,
    };
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("heine-out"));
    outputs.write_all(&dir)
}

/// Geometry of the configured potential.
struct Setup {
    pot: RadialPotential<f64>,
    tau_star: f64,
    geometry: Option<QuasiPolyData<f64>>,
    droplet: DropletStructure<f64>,
    omega: Option<SmoothStep<f64>>,
    gap: Option<GapContext<f64>>,
}

impl Setup {
    fn new(cfg: &LoadedConfig) -> Result<Self, HarnessError> {
        let pot = cfg.potential()?;
        let tau_star = cfg.tau_star();
        match cfg.config.mode {
            Mode::Disk => {
                let k = pot.windows().len() - 1;
                let e0 = pot
                    .solve_mass_in_window(0, 0.0)
                    .ok_or_else(|| heine_core::Error::MassMismatch("no inner edge".into()))?;
                let b = pot
                    .solve_mass_in_window(k, 1.0)
                    .ok_or_else(|| heine_core::Error::MassMismatch("unit mass is not reached".into()))?;
                let droplet = DropletStructure {
                    components: vec![(e0, b)],
                    masses: vec![1.0],
                };
                Ok(Self {
                    pot,
                    tau_star,
                    geometry: None,
                    droplet,
                    omega: None,
                    gap: None,
                })
            }
            Mode::Outpost => {
                let radii = solve_gap_radii(&pot, 1.0)?;
                let droplet = droplet_structure(&pot, radii.b0, radii.a1)?;
                Ok(Self {
                    geometry: Some(QuasiPolyData::from_radial(&pot, 1.0)?),
                    omega: Some(SmoothStep::for_gap(radii.b0, radii.a1)),
                    pot,
                    tau_star,
                    droplet,
                    gap: None,
                })
            }
            Mode::Gap => {
                let ctx = GapContext::new(pot.clone(), tau_star)?;
                Ok(Self {
                    pot,
                    tau_star,
                    geometry: Some(ctx.geometry),
                    droplet: ctx.droplet.clone(),
                    omega: Some(ctx.omega),
                    gap: Some(ctx),
                })
            }
        }
    }

    fn weight(&self, s: f64) -> PerturbedWeight<f64> {
        let omega = self.omega.unwrap_or(SmoothStep { m1: 0.0, m2: 1.0 });
        PerturbedWeight::new(self.pot.clone(), s, omega)
    }

    fn geometry(&self) -> Result<&QuasiPolyData<f64>, HarnessError> {
        self.geometry
            .as_ref()
            .ok_or_else(|| HarnessError::Config("this command needs outpost or gap mode".into()))
    }

    /// Gap data for the oscillation term, one entry per gap.
    fn gap_specs(&self) -> Vec<GapSpec> {
        match &self.gap {
            Some(ctx) => {
                let g = &ctx.geometry;
                let (b0, a1) = (ctx.droplet.components[0].1, ctx.droplet.components[1].0);
                vec![GapSpec {
                    rho: g.ratio(),
                    delta_inner: self.pot.laplacian(b0).unwrap_or(f64::NAN),
                    delta_outer: self.pot.laplacian(a1).unwrap_or(f64::NAN),
                    tau: self.tau_star,
                }]
            }
            None => Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct GeometryOut {
    r1: f64,
    r2: f64,
    c: f64,
    tau_star: f64,
    kappa: f64,
}

impl From<&QuasiPolyData<f64>> for GeometryOut {
    fn from(g: &QuasiPolyData<f64>) -> Self {
        Self {
            r1: g.r1,
            r2: g.r2,
            c: g.c(),
            tau_star: g.tau_star,
            kappa: g.kappa(),
        }
    }
}

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    value: f64,
}

#[derive(Serialize)]
struct FluctOut {
    function: String,
    prediction: FluctPrediction<f64>,
    cgf: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct DiskFluctOut {
    function: String,
    sigma_f: f64,
    moments: MeanVariance<f64>,
}

#[derive(Serialize)]
struct PredictEntry {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    heine: Option<HeineParams<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heine_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heine_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    count_cgf: Vec<CurvePoint>,
    fluct: Vec<FluctOut>,
}

#[derive(Serialize)]
struct PredictOut {
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    geometry: Option<GeometryOut>,
    entries: Vec<PredictEntry>,
    disk: Vec<DiskFluctOut>,
}

fn predict(cfg: &LoadedConfig, stamp: &Stamp) -> Result<Outputs, HarnessError> {
    let setup = Setup::new(cfg)?;
    let c = &cfg.config;
    let tol = SeriesTolerance::default();
    let mut entries = Vec::new();
    let mut disk = Vec::new();
    match c.mode {
        Mode::Disk => {
            for tf in &c.test_functions {
                let f = tf.build(None)?;
                disk.push(DiskFluctOut {
                    function: tf.label(),
                    sigma_f: sigma_f(&f, &setup.pot, &setup.droplet)?,
                    moments: ef_vf(&f, &setup.pot, &setup.droplet)?,
                });
            }
        }
        Mode::Outpost => {
            let hp = setup.geometry()?.outpost_heine()?;
            for &n in &c.n {
                let count_cgf = c
                    .s_grid
                    .iter()
                    .map(|&s| Ok(CurvePoint { x: s, value: heine_cgf(s, &hp, &tol)? }))
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                entries.push(PredictEntry {
                    n,
                    heine: Some(hp),
                    heine_mean: Some(heine_mean(&hp, &tol)?),
                    heine_variance: Some(heine_variance(&hp, &tol)?),
                    x_n: None,
                    theta_plus: None,
                    theta_minus: None,
                    q: Some(hp.q),
                    count_cgf,
                    fluct: Vec::new(),
                });
            }
        }
        Mode::Gap => {
            let ctx = setup.gap.as_ref().expect("gap mode");
            for &n in &c.n {
                let laws = ctx.geometry.gap_laws(n)?;
                let x = ctx.geometry.x_n(n);
                let count_cgf = c
                    .s_grid
                    .iter()
                    .map(|&s| Ok(CurvePoint { x: s, value: laws.difference_cgf(s, &tol)? + s * x }))
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                let mut fluct = Vec::new();
                for tf in &c.test_functions {
                    let f = tf.build(Some(ctx.omega))?;
                    let prediction = predict_total(&f, ctx, n)?;
                    let cgf = c
                        .t_grid
                        .iter()
                        .map(|&t| Ok(CurvePoint { x: t, value: prediction.cgf(t)? }))
                        .collect::<Result<Vec<_>, HarnessError>>()?;
                    fluct.push(FluctOut {
                        function: tf.label(),
                        prediction,
                        cgf,
                    });
                }
                entries.push(PredictEntry {
                    n,
                    heine: None,
                    heine_mean: None,
                    heine_variance: None,
                    x_n: Some(x),
                    theta_plus: Some(laws.plus.theta),
                    theta_minus: Some(laws.minus.theta),
                    q: Some(laws.plus.q),
                    count_cgf,
                    fluct,
                });
            }
        }
    }
    let mut out = Outputs::default();
    out.json(
        "predict.json",
        stamp,
        &PredictOut {
            mode: c.mode,
            geometry: setup.geometry.as_ref().map(GeometryOut::from),
            entries,
            disk,
        },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct NormRowOut {
    j: usize,
    regime: Regime,
    log_h_exact: f64,
    log_h_asym: Option<f64>,
    abs_err: Option<f64>,
}

impl From<&LogNormRow<f64>> for NormRowOut {
    fn from(r: &LogNormRow<f64>) -> Self {
        Self {
            j: r.j,
            regime: r.regime,
            log_h_exact: r.log_h_exact,
            log_h_asym: r.log_h_asym,
            abs_err: r.abs_err,
        }
    }
}

#[derive(Serialize)]
struct NormSummaryEntry {
    n: usize,
    window_halfwidth: usize,
    max_window_error: f64,
}

#[derive(Serialize)]
struct NormsOut {
    s: f64,
    geometry: GeometryOut,
    tables: Vec<NormSummaryEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay_ratios: Option<Vec<f64>>,
}

fn norms(cfg: &LoadedConfig, stamp: &Stamp) -> Result<Outputs, HarnessError> {
    let setup = Setup::new(cfg)?;
    let g = *setup.geometry()?;
    let c = &cfg.config;
    let w = setup.weight(c.s);
    let mut out = Outputs::default();
    let mut tables = Vec::new();
    let mut ns = c.n.clone();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        let table = LogNormTable::build(&w, &g, n)?;
        let rows: Vec<NormRowOut> = table.rows.iter().map(NormRowOut::from).collect();
        out.csv(&format!("norms_n{n}.csv"), stamp, &rows)?;
        tables.push(NormSummaryEntry {
            n,
            window_halfwidth: bifurcation_halfwidth(n),
            max_window_error: table.max_window_error(),
        });
    }
    let decay_ratios = (tables.len() > 1).then(|| {
        tables
            .windows(2)
            .map(|p| p[1].max_window_error / p[0].max_window_error)
            .collect()
    });
    out.json(
        "norms.json",
        stamp,
        &NormsOut {
            s: c.s,
            geometry: GeometryOut::from(&g),
            tables,
            decay_ratios,
        },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct BatchRow {
    replica: usize,
    count: Option<i64>,
    lin_stat: Option<f64>,
}

#[derive(Serialize)]
struct LinSummary {
    function: String,
    sigma_f: f64,
    mean: f64,
    variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_variance: Option<f64>,
}

#[derive(Serialize)]
struct SimulateEntry {
    n: usize,
    threshold: Option<f64>,
    /// Subtracted from the counts before comparing with the model.
    count_offset: i64,
    model: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    counts: Option<BatchSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    linear: Option<LinSummary>,
}

fn simulate(cfg: &LoadedConfig, stamp: &Stamp, seed: u64) -> Result<Outputs, HarnessError> {
    let setup = Setup::new(cfg)?;
    let c = &cfg.config;
    if c.mode == Mode::Disk && c.test_functions.is_empty() {
        return Err(HarnessError::Config("disk mode simulation needs a test function".into()));
    }
    let tol = SeriesTolerance::default();
    let w = setup.weight(0.0);
    let mut out = Outputs::default();
    let mut entries = Vec::new();
    for &n in &c.n {
        let ms = build_sampler(&w, n, c.table_points, seed)?;
        let threshold = setup.omega.map(|o| o.midpoint());
        let (offset, model): (i64, &'static str) = match c.mode {
            Mode::Outpost => (0, "heine"),
            Mode::Gap => (n as i64 - (n as f64 * setup.tau_star).floor() as i64, "discrete-normal"),
            Mode::Disk => (0, "none"),
        };
        let lin = match c.test_functions.first() {
            Some(tf) => {
                let f = tf.build(setup.omega)?;
                let f1 = decompose_radial(&f, &setup.droplet).f1;
                let sigma = sigma_f(&f1, &setup.pot, &setup.droplet)?;
                let pred = match (&setup.gap, c.mode) {
                    (Some(ctx), _) => {
                        let p = predict_total(&f, ctx, n)?;
                        Some((p.e_f, p.v_f))
                    }
                    (None, Mode::Disk) => {
                        let m = ef_vf(&f1, &setup.pot, &setup.droplet)?;
                        Some((m.e_f, m.v_f))
                    }
                    _ => None,
                };
                Some((tf.label(), f1, sigma, pred))
            }
            None => None,
        };
        let batch = match &lin {
            Some((_, f1, sigma, _)) => ms.sample_linear_stat(&|r| f1.eval(r), *sigma, threshold, c.replicas),
            None => ms.sample_counts(threshold.expect("outpost or gap mode"), c.replicas),
        };
        let rows: Vec<BatchRow> = (0..batch.replicas())
            .map(|k| BatchRow {
                replica: k,
                count: batch.counts.get(k).copied(),
                lin_stat: batch.lin_stats.get(k).copied(),
            })
            .collect();
        out.csv(&format!("simulate_n{n}.csv"), stamp, &rows)?;
        let counts = if batch.counts.is_empty() {
            None
        } else {
            let shifted = batch.shifted(offset);
            let summary = match c.mode {
                Mode::Outpost => {
                    let hp = setup.geometry()?.outpost_heine()?;
                    let model = |j: i64| if j < 0 { 0.0 } else { heine_pmf(j as usize, &hp, &tol).unwrap_or(f64::NAN) };
                    BatchSummary::of_counts(&shifted.counts, seed, Some(&model))
                }
                Mode::Gap => {
                    let laws = setup.geometry()?.gap_laws(n)?;
                    let model = |k: i64| dnorm_pmf(k, &laws.dnorm, &tol).unwrap_or(f64::NAN);
                    BatchSummary::of_counts(&shifted.counts, seed, Some(&model))
                }
                Mode::Disk => BatchSummary::of_counts(&shifted.counts, seed, None),
            };
            if summary.tv.is_some_and(|t| t.is_nan()) {
                return Err(heine_core::Error::NonConvergence { terms: 0 }.into());
            }
            Some(summary)
        };
        let linear = lin.map(|(label, _, sigma, pred)| {
            let (mean, variance) = heine_core::sampler::mean_var(&batch.lin_stats);
            LinSummary {
                function: label,
                sigma_f: sigma,
                mean,
                variance,
                predicted_mean: pred.map(|p| p.0),
                predicted_variance: pred.map(|p| p.1),
            }
        });
        entries.push(SimulateEntry {
            n,
            threshold,
            count_offset: offset,
            model,
            counts,
            linear,
        });
    }
    out.json("simulate.json", stamp, &entries)?;
    Ok(out)
}

#[derive(Serialize)]
struct FluctEntry {
    n: usize,
    function: String,
    lambda: f64,
    e_f: f64,
    v_f: f64,
    /// Exact mean and variance of the Gaussian part at this `n`.
    exact_mean: f64,
    exact_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<FluctPrediction<f64>>,
}

fn fluct(cfg: &LoadedConfig, stamp: &Stamp) -> Result<Outputs, HarnessError> {
    let setup = Setup::new(cfg)?;
    let c = &cfg.config;
    if c.mode == Mode::Outpost {
        return Err(HarnessError::Config("fluct needs gap or disk mode".into()));
    }
    if c.test_functions.is_empty() {
        return Err(HarnessError::Config("fluct needs at least one test function".into()));
    }
    let w = setup.weight(0.0);
    let mut entries = Vec::new();
    for &n in &c.n {
        for tf in &c.test_functions {
            let f = tf.build(setup.omega)?;
            let dec = decompose_radial(&f, &setup.droplet);
            let mv = ef_vf(&dec.f1, &setup.pot, &setup.droplet)?;
            let sigma = sigma_f(&dec.f1, &setup.pot, &setup.droplet)?;
            let (exact_mean, exact_variance) = finite_n_moments(&w, &dec.f1, n, sigma)?;
            let prediction = match &setup.gap {
                Some(ctx) => Some(predict_total(&f, ctx, n)?),
                None => None,
            };
            entries.push(FluctEntry {
                n,
                function: tf.label(),
                lambda: dec.lambda,
                e_f: mv.e_f,
                v_f: mv.v_f,
                exact_mean,
                exact_variance,
                prediction,
            });
        }
    }
    let mut out = Outputs::default();
    out.json("fluct.json", stamp, &entries)?;
    Ok(out)
}

#[derive(Serialize)]
struct ConformalOut {
    semi_axes: [f64; 2],
    capacity: f64,
    rho: f64,
    modes: usize,
    /// Gap solution for constant `½ log ΔQ` data on each curve.
    c: f64,
    c_expected: f64,
    compat_residual: f64,
    /// Gap solution for the trace of `Re(1/z)`.
    c_holomorphic: f64,
    compat_residual_holomorphic: f64,
    heine: HeineParams<f64>,
}

fn conformal(cfg: &LoadedConfig, stamp: &Stamp) -> Result<Outputs, HarnessError> {
    let cs = cfg
        .config
        .conformal
        .as_ref()
        .ok_or_else(|| HarnessError::Config("conformal section is missing".into()))?;
    let [a, b] = cs.semi_axes;
    let map = ExteriorMap::ellipse(a, b)?;
    let split = cs.rho.sqrt();
    let (l1, l2) = (0.5 * cs.delta_inner.ln(), 0.5 * cs.delta_outer.ln());
    let data = |z: Complex<f64>| match map.invert(z) {
        Ok(w) if w.norm() < split => l1,
        _ => l2,
    };
    let sol = annulus_dirichlet(&map, cs.rho, &data, cs.modes)?;
    let holo = annulus_dirichlet(&map, cs.rho, &|z: Complex<f64>| z.inv().re, cs.modes)?;
    let cap = map.capacity;
    let heine = heine_from_geometry(cap, cap * cs.rho, sol.c)?;
    let mut out = Outputs::default();
    out.json(
        "conformal.json",
        stamp,
        &ConformalOut {
            semi_axes: cs.semi_axes,
            capacity: cap,
            rho: cs.rho,
            modes: sol.modes,
            c: sol.c,
            c_expected: l2 - l1,
            compat_residual: sol.compat_residual,
            c_holomorphic: holo.c,
            compat_residual_holomorphic: holo.compat_residual,
            heine,
        },
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct FreeEnergyRow {
    n: usize,
    log_z: f64,
    residual: f64,
    gn: f64,
    gn_direct: f64,
}

#[derive(Serialize)]
struct FreeEnergyOut {
    /// The expansion being fitted is conjectural; nothing here is a pass/fail check.
    exploratory: bool,
    fit: SmoothFit,
    gaps: Vec<GapSpec>,
    gn: Vec<GnTerm>,
    correlation: Option<f64>,
}

fn free_energy(cfg: &LoadedConfig, stamp: &Stamp) -> Result<Outputs, HarnessError> {
    let c = &cfg.config;
    let mut ns = c.n.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 6 {
        return Err(HarnessError::Config(format!("free-energy needs at least 6 distinct sizes, got {}", ns.len())));
    }
    let setup = Setup::new(cfg)?;
    let gaps = match &c.gaps {
        Some(g) => g.clone(),
        None => setup.gap_specs(),
    };
    let w = setup.weight(0.0);
    let log_z = ns.iter().map(|&n| log_partition(&w, n)).collect::<Result<Vec<_>, _>>()?;
    let fit = fit_smooth(&ns, &log_z)?;
    let gn = ns.iter().map(|&n| gn_evaluate(&gaps, n)).collect::<Result<Vec<_>, _>>()?;
    let direct = ns.iter().map(|&n| gn_direct(&gaps, n)).collect::<Result<Vec<_>, _>>()?;
    let values: Vec<f64> = gn.iter().map(|g| g.value).collect();
    let correlation = pearson(&fit.residuals, &values);
    let rows: Vec<FreeEnergyRow> = (0..ns.len())
        .map(|i| FreeEnergyRow {
            n: ns[i],
            log_z: log_z[i],
            residual: fit.residuals[i],
            gn: values[i],
            gn_direct: direct[i],
        })
        .collect();
    let mut out = Outputs::default();
    out.csv("free_energy.csv", stamp, &rows)?;
    out.json(
        "free_energy.json",
        stamp,
        &FreeEnergyOut {
            exploratory: true,
            fit,
            gaps,
            gn,
            correlation,
        },
    )?;
    Ok(out)
}
