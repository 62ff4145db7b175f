//! Exact partition functions of radial ensembles and a least-squares fit of
//! their smooth large-`n` expansion.

use heine_core::orthopoly::{log_norm_exact, PerturbedWeight};
use heine_core::scalar::pairwise_sum;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// `log Z_n = log n! + Σ_{j<n} log h_j`.
pub fn log_partition(w: &PerturbedWeight<f64>, n: usize) -> Result<f64, HarnessError> {
    let logs = (0..n)
        .into_par_iter()
        .map(|j| log_norm_exact(w, j, n))
        .collect::<heine_core::Result<Vec<_>>>()?;
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    Ok(log_fact + pairwise_sum(&logs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothFit {
    /// Coefficients of `n², n log n, n, log n, 1`.
    pub coefficients: [f64; 5],
    pub residuals: Vec<f64>,
    pub rms: f64,
}

fn basis(n: f64) -> [f64; 5] {
    [n * n, n * n.ln(), n, n.ln(), 1.0]
}

/// Least squares by SVD on column-scaled data.
pub fn fit_smooth(ns: &[usize], log_z: &[f64]) -> Result<SmoothFit, HarnessError> {
    if ns.len() < 6 {
        return Err(HarnessError::Config(format!("the fit needs at least 6 sizes, got {}", ns.len())));
    }
    let rows: Vec<[f64; 5]> = ns.iter().map(|&n| basis(n as f64)).collect();
    let mut scale = [0.0f64; 5];
    for r in &rows {
        for (s, v) in scale.iter_mut().zip(r) {
            *s = s.max(v.abs());
        }
    }
    let a = DMatrix::from_fn(ns.len(), 5, |i, k| rows[i][k] / scale[k]);
    let b = DVector::from_column_slice(log_z);
    let svd = a.clone().svd(true, true);
    let cutoff = 1e-13 * svd.singular_values.max();
    let x = svd
        .solve(&b, cutoff)
        .map_err(|e| HarnessError::Numeric(heine_core::Error::IllConditioned(e.into())))?;
    let fitted = &a * &x;
    let residuals: Vec<f64> = (0..ns.len()).map(|i| log_z[i] - fitted[i]).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let mut coefficients = [0.0; 5];
    for k in 0..5 {
        coefficients[k] = x[k] / scale[k];
    }
    Ok(SmoothFit {
        coefficients,
        residuals,
        rms,
    })
}

/// Pearson correlation; `None` when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}
