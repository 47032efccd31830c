//! Weighted least squares on a column subset, one focal point at a time.
//!
//! The normal equations `X_S' W X_S b = X_S' W y` are solved with a Cholesky
//! factorization of the Jacobi-equilibrated Gram matrix. Subsets are small
//! (a handful of columns), so the Gram matrix is cheap to form and can be
//! shared across every subset evaluated at the same weights, see
//! [`LocalGram`].

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kernel::WeightRow;
use crate::model::{SpatialDataset, SubsetMask};

/// Jitter levels tried, in order, after the configured base ridge fails.
pub const RIDGE_FALLBACKS: [f64; 2] = [1e-10, 1e-6];

/// Pivots below this (on the unit-diagonal equilibrated matrix) count as
/// singular.
const PIVOT_FLOOR: f64 = 1e-13;

/// Cholesky factor of `S G S + jitter I` with `S = diag(G)^(-1/2)`.
#[derive(Debug, Clone)]
pub(crate) struct SpdFactor {
    l: Vec<f64>,
    scale: Vec<f64>,
    k: usize,
}

impl SpdFactor {
    fn new(gram: &[f64], k: usize, jitter: f64) -> Option<Self> {
        if (0..k).any(|j| !(gram[j * k + j] > 0.0)) {
            return None;
        }
        let scale: Vec<f64> = (0..k).map(|j| 1.0 / gram[j * k + j].sqrt()).collect();
        let mut l = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = gram[i * k + j] * scale[i] * scale[j];
                if i == j {
                    s += jitter;
                }
                for p in 0..j {
                    s -= l[i * k + p] * l[j * k + p];
                }
                if i == j {
                    if !(s > PIVOT_FLOOR) {
                        return None;
                    }
                    l[i * k + i] = s.sqrt();
                } else {
                    l[i * k + j] = s / l[j * k + j];
                }
            }
        }
        Some(SpdFactor { l, scale, k })
    }

    /// Smallest squared pivot of the equilibrated factor; a cheap reciprocal
    /// condition estimate.
    pub(crate) fn min_pivot_sq(&self) -> f64 {
        (0..self.k)
            .map(|i| self.l[i * self.k + i].powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `G b = rhs`.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut v: Vec<f64> = rhs.iter().zip(&self.scale).map(|(r, s)| r * s).collect();
        for i in 0..k {
            let mut s = v[i];
            for p in 0..i {
                s -= self.l[i * k + p] * v[p];
            }
            v[i] = s / self.l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = v[i];
            for p in i + 1..k {
                s -= self.l[p * k + i] * v[p];
            }
            v[i] = s / self.l[i * k + i];
        }
        v.iter_mut().zip(&self.scale).for_each(|(b, s)| *b *= s);
        v
    }
}

/// Factors `gram`, escalating the diagonal jitter on failure. Returns the
/// factor and the jitter that was needed beyond `base_ridge`, if any.
pub(crate) fn factor_with_fallback(
    gram: &[f64],
    k: usize,
    base_ridge: f64,
    focal: usize,
) -> Result<(SpdFactor, Option<f64>)> {
    if let Some(f) = SpdFactor::new(gram, k, base_ridge) {
        return Ok((f, None));
    }
    for jitter in RIDGE_FALLBACKS {
        if jitter <= base_ridge {
            continue;
        }
        if let Some(f) = SpdFactor::new(gram, k, jitter) {
            return Ok((f, Some(jitter)));
        }
    }
    Err(Error::SingularNormalMatrix { focal })
}

/// Result of one weighted fit on a column subset.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsSolution {
    /// Selected columns, ascending; `beta_sub[k]` belongs to `cols[k]`.
    pub cols: Vec<usize>,
    pub beta_sub: Vec<f64>,
    /// `sum_i w_i (y_i - x_i . b)^2`
    pub wsse: f64,
    pub sse_unweighted: f64,
    pub fitted_at_focal: f64,
    /// Ridge jitter the fallback had to apply, if any.
    pub jitter: Option<f64>,
}

fn gram_on(x: &Array2<f64>, w: &[f64], cols: &[usize]) -> Vec<f64> {
    let k = cols.len();
    let mut g = vec![0.0; k * k];
    for (i, row) in x.rows().into_iter().enumerate() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        for a in 0..k {
            let xa = wi * row[cols[a]];
            for b in 0..=a {
                g[a * k + b] += xa * row[cols[b]];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            g[b * k + a] = g[a * k + b];
        }
    }
    g
}

fn rhs_on(x: &Array2<f64>, y: &[f64], w: &[f64], cols: &[usize]) -> Vec<f64> {
    let mut r = vec![0.0; cols.len()];
    for (i, row) in x.rows().into_iter().enumerate() {
        let wy = w[i] * y[i];
        for (a, &j) in cols.iter().enumerate() {
            r[a] += wy * row[j];
        }
    }
    r
}

pub(crate) fn fit_columns(
    ds: &SpatialDataset,
    cols: &[usize],
    w: &[f64],
    focal_row: &[f64],
    base_ridge: f64,
    focal: usize,
) -> Result<WlsSolution> {
    let x = ds.x();
    let y = ds.y();
    let k = cols.len();
    let g = gram_on(x, w, cols);
    let r = rhs_on(x, y, w, cols);
    let (factor, jitter) = factor_with_fallback(&g, k, base_ridge, focal)?;
    let beta_sub = factor.solve(&r);
    let mut wsse = 0.0;
    let mut sse = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let pred: f64 = cols.iter().zip(&beta_sub).map(|(&j, b)| row[j] * b).sum();
        let e = y[i] - pred;
        wsse += w[i] * e * e;
        sse += e * e;
    }
    let fitted_at_focal = cols
        .iter()
        .zip(&beta_sub)
        .map(|(&j, b)| focal_row[j] * b)
        .sum();
    Ok(WlsSolution {
        cols: cols.to_vec(),
        beta_sub,
        wsse,
        sse_unweighted: sse,
        fitted_at_focal,
        jitter,
    })
}

/// Weighted least squares of `y` on the columns selected by `subset`.
///
/// `focal_row` is the design row (length `m`) at which the local model is
/// evaluated for `fitted_at_focal`.
pub fn wls_fit(
    ds: &SpatialDataset,
    subset: &SubsetMask,
    w: &WeightRow,
    focal_row: &[f64],
) -> Result<WlsSolution> {
    check_lengths(ds, w, focal_row)?;
    fit_columns(ds, &subset.columns(), &w.w, focal_row, 0.0, 0)
}

/// Row of the GWR hat matrix for a focal point: `x_o (X' W X)^-1 X' W`,
/// restricted to the subset's columns. `hat_row . y` equals the local fit
/// at `focal_row`.
pub fn hat_row(
    ds: &SpatialDataset,
    subset: &SubsetMask,
    w: &WeightRow,
    focal_row: &[f64],
) -> Result<Vec<f64>> {
    check_lengths(ds, w, focal_row)?;
    let cols = subset.columns();
    let g = gram_on(ds.x(), &w.w, &cols);
    let (factor, _) = factor_with_fallback(&g, cols.len(), 0.0, 0)?;
    let xo: Vec<f64> = cols.iter().map(|&j| focal_row[j]).collect();
    let a = factor.solve(&xo);
    Ok(ds
        .x()
        .rows()
        .into_iter()
        .zip(&w.w)
        .map(|(row, wi)| wi * cols.iter().zip(&a).map(|(&j, aj)| row[j] * aj).sum::<f64>())
        .collect())
}

/// Leave-one-out prediction at observation `focal_index`: the weight of that
/// observation is zeroed before fitting.
pub fn loo_predict(
    ds: &SpatialDataset,
    subset: &SubsetMask,
    w: &WeightRow,
    focal_index: usize,
) -> Result<f64> {
    if focal_index >= ds.n() {
        return Err(Error::ShapeMismatch(format!(
            "observation {focal_index} out of range for n={}",
            ds.n()
        )));
    }
    let mut held_out = w.w.clone();
    held_out[focal_index] = 0.0;
    let row = ds.row(focal_index).to_vec();
    let sol = fit_columns(ds, &subset.columns(), &held_out, &row, 0.0, focal_index)?;
    Ok(sol.fitted_at_focal)
}

fn check_lengths(ds: &SpatialDataset, w: &WeightRow, focal_row: &[f64]) -> Result<()> {
    if w.w.len() != ds.n() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} observations",
            w.w.len(),
            ds.n()
        )));
    }
    if focal_row.len() != ds.m() {
        return Err(Error::ShapeMismatch(format!(
            "focal row has {} entries, m={}",
            focal_row.len(),
            ds.m()
        )));
    }
    Ok(())
}

/// Full weighted Gram matrix of one focal point, reused for every subset.
///
/// `wsse(S) = q - 2 b'r_S + b'G_SS b` where `b` solves `G_SS b = r_S`.
#[derive(Debug, Clone)]
pub(crate) struct LocalGram {
    m: usize,
    g: Vec<f64>,
    r: Vec<f64>,
    q: f64,
}

impl LocalGram {
    pub(crate) fn new(x: &Array2<f64>, y: &[f64], w: &[f64]) -> Self {
        let m = x.ncols();
        let all: Vec<usize> = (0..m).collect();
        let g = gram_on(x, w, &all);
        let r = rhs_on(x, y, w, &all);
        let q = y.iter().zip(w).map(|(yi, wi)| wi * yi * yi).sum();
        LocalGram { m, g, r, q }
    }

    fn sub(&self, cols: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let k = cols.len();
        let mut g = vec![0.0; k * k];
        for (a, &ja) in cols.iter().enumerate() {
            for (b, &jb) in cols.iter().enumerate() {
                g[a * k + b] = self.g[ja * self.m + jb];
            }
        }
        let r = cols.iter().map(|&j| self.r[j]).collect();
        (g, r)
    }

    /// Coefficients and weighted SSE of the fit on `cols`.
    pub(crate) fn solve(
        &self,
        cols: &[usize],
        base_ridge: f64,
        focal: usize,
    ) -> Result<(Vec<f64>, f64, Option<f64>)> {
        let k = cols.len();
        let (g, r) = self.sub(cols);
        let (factor, jitter) = factor_with_fallback(&g, k, base_ridge, focal)?;
        let b = factor.solve(&r);
        let mut quad = 0.0;
        for a in 0..k {
            let gb: f64 = (0..k).map(|c| g[a * k + c] * b[c]).sum();
            quad += b[a] * gb;
        }
        let br: f64 = b.iter().zip(&r).map(|(u, v)| u * v).sum();
        let wsse = (self.q - 2.0 * br + quad).max(0.0);
        Ok((b, wsse, jitter))
    }
}
