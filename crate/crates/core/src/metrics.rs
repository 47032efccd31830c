//! Goodness-of-fit measures and coefficient-field diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::weights_from_d2;
use crate::model::{BandwidthField, CoefficientField, DistanceMatrix, SpatialDataset, SubsetMask};
use crate::wls::factor_with_fallback;

/// Fit statistics for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    /// Parameters per local model, intercept included.
    pub n_params_nominal: usize,
    pub rss: f64,
    pub tss: f64,
    pub r2: f64,
    /// Adjusted with the nominal parameter count.
    pub r2_adj: Option<f64>,
    /// Adjusted with the hat-matrix trace as parameter count.
    pub r2_adj_effective: Option<f64>,
    pub hat_trace: Option<f64>,
    pub aicc: Option<f64>,
}

fn adjusted(r2: f64, n: usize, k: f64) -> Option<f64> {
    let n = n as f64;
    (n - k > 0.0).then(|| 1.0 - (1.0 - r2) * (n - 1.0) / (n - k))
}

/// `2n ln(sigma) + n ln(2 pi) + n (n + trH) / (n - 2 - trH)` with
/// `sigma = sqrt(rss / n)`. `None` when the correction term is undefined or
/// the fit is exact.
pub fn aicc(rss: f64, n: usize, hat_trace: f64) -> Option<f64> {
    let nf = n as f64;
    let denom = nf - 2.0 - hat_trace;
    if denom <= 0.0 || rss <= 0.0 {
        return None;
    }
    let sigma = (rss / nf).sqrt();
    Some(
        2.0 * nf * sigma.ln()
            + nf * (2.0 * std::f64::consts::PI).ln()
            + nf * (nf + hat_trace) / denom,
    )
}

/// RSS, R², both adjusted R² variants and AICc for fitted values `fitted`.
pub fn compute_metrics(
    ds: &SpatialDataset,
    fitted: &[f64],
    n_params_nominal: usize,
    hat_trace: Option<f64>,
) -> Result<Metrics> {
    let y = ds.y();
    if fitted.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} fitted values for {} observations",
            fitted.len(),
            y.len()
        )));
    }
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if tss == 0.0 {
        return Err(Error::ConstantResponse);
    }
    let rss: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let r2 = 1.0 - rss / tss;
    Ok(Metrics {
        n,
        n_params_nominal,
        rss,
        tss,
        r2,
        r2_adj: adjusted(r2, n, n_params_nominal as f64),
        r2_adj_effective: hat_trace.and_then(|t| adjusted(r2, n, t)),
        hat_trace,
        aicc: hat_trace.and_then(|t| aicc(rss, n, t)),
    })
}

/// Fitted value of every observation from its nearest focal model, plus the
/// trace of the matching hat matrix `sum_i H_ii`.
pub fn fitted_and_hat_trace(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    bw: &BandwidthField,
    subset: &SubsetMask,
    beta: &CoefficientField,
    base_ridge: f64,
) -> Result<(Vec<f64>, f64)> {
    use rayon::prelude::*;
    let cols = subset.columns();
    let k = cols.len();
    let x = ds.x();
    let nearest = dm.nearest_focal();
    let per_obs: Vec<Result<(f64, f64)>> = (0..ds.n())
        .into_par_iter()
        .map(|i| {
            let o = nearest[i];
            let w = weights_from_d2(dm.d2().row(o).iter().copied(), bw.gamma(o));
            let mut g = vec![0.0; k * k];
            for (r, row) in x.rows().into_iter().enumerate() {
                for a in 0..k {
                    let xa = w[r] * row[cols[a]];
                    for b in 0..k {
                        g[a * k + b] += xa * row[cols[b]];
                    }
                }
            }
            let (factor, _) = factor_with_fallback(&g, k, base_ridge, o)?;
            let xi: Vec<f64> = cols.iter().map(|&j| x[[i, j]]).collect();
            let a = factor.solve(&xi);
            let h_ii = w[i] * xi.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>();
            Ok((beta.predict(o, ds.row(i)), h_ii))
        })
        .collect();
    let mut fitted = Vec::with_capacity(ds.n());
    let mut trace = 0.0;
    for r in per_obs {
        let (f, h) = r?;
        fitted.push(f);
        trace += h;
    }
    Ok((fitted, trace))
}

/// `(max_o beta_oj - min_o beta_oj) / mean_o beta_oj`.
pub fn range_to_mean(beta: &CoefficientField, j: usize) -> Result<f64> {
    if j >= beta.m() {
        return Err(Error::ShapeMismatch(format!(
            "column {j} out of range for m={}",
            beta.m()
        )));
    }
    let col = beta.column(j);
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    if mean.abs() < 1e-12 {
        return Err(Error::ZeroMean);
    }
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((max - min) / mean)
}

/// Mean size of the pairwise symmetric difference between local subsets.
pub fn avg_symmetric_difference(subsets: &[SubsetMask]) -> Result<f64> {
    let c = subsets.len();
    if c < 2 {
        return Err(Error::TooFewSubsets(c));
    }
    let mut total = 0usize;
    for a in 0..c {
        for b in a + 1..c {
            let (za, zb) = (subsets[a].z(), subsets[b].z());
            let len = za.len().max(zb.len());
            total += (0..len)
                .filter(|&j| {
                    za.get(j).copied().unwrap_or(false) != zb.get(j).copied().unwrap_or(false)
                })
                .count();
        }
    }
    Ok(total as f64 / (c * (c - 1) / 2) as f64)
}
