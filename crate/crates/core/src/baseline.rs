//! Reference estimators: basic GWR with a single bandwidth chosen by
//! cross-validation or AICc, and forward selection that re-tunes the
//! bandwidth for every candidate variable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::weights_from_d2;
use crate::metrics::{aicc, compute_metrics, fitted_and_hat_trace, Metrics};
use crate::model::{
    build_forbidden_pairs, BandwidthField, CoefficientField, DistanceMatrix, SpatialDataset,
    SubsetMask,
};
use crate::wls::{factor_with_fallback, fit_columns};

/// Bandwidth search interval (scaled-distance units).
pub const GAMMA_BRACKET: (f64, f64) = (1e-4, 1e4);
const COARSE_POINTS_PER_DECADE: usize = 5;
const WIDEN_FACTOR: f64 = 100.0;
const FLAT_EDGE: f64 = 1e-6;
/// Local fits whose equilibrated normal matrix has a squared pivot below
/// this are too ill-conditioned to score.
const MIN_PIVOT_SQ: f64 = 1e-10;
/// Flatness tolerance of the CV scan, relative to the total sum of squares.
const FLAT_CV: f64 = 1e-9;
const FLAT_AICC: f64 = 1e-9;

fn total_sum_of_squares(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Cv,
    Aicc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    BgwrCv,
    BgwrAicc,
    ForwardSelection,
}

impl std::fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaselineMethod::BgwrCv => "bgwr_cv",
            BaselineMethod::BgwrAicc => "bgwr_aicc",
            BaselineMethod::ForwardSelection => "forward_selection",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub method: BaselineMethod,
    /// Global bandwidth.
    pub bandwidth: f64,
    pub subset: SubsetMask,
    pub beta: CoefficientField,
    pub metrics: Metrics,
    /// Criterion value at `bandwidth`.
    pub criterion_value: f64,
    pub fitted: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Distances between observations on the same scale as `dm`.
pub fn observation_distances(ds: &SpatialDataset, dm: &DistanceMatrix) -> Result<DistanceMatrix> {
    DistanceMatrix::with_scale(ds.coords(), ds.coords(), dm.d_raw_max())
}

/// CV score or AICc of basic GWR at bandwidth `gamma`, with one local model
/// per observation. `obs_dm` must be observation-by-observation.
/// Bandwidths at which some local normal matrix is singular or badly
/// conditioned score `+inf`.
pub fn bandwidth_criterion(
    ds: &SpatialDataset,
    obs_dm: &DistanceMatrix,
    subset: &SubsetMask,
    gamma: f64,
    criterion: Criterion,
) -> Result<f64> {
    if obs_dm.c() != ds.n() || obs_dm.n() != ds.n() {
        return Err(Error::ShapeMismatch(
            "criterion needs an observation-by-observation distance matrix".into(),
        ));
    }
    let cols = subset.columns();
    let k = cols.len();
    let x = ds.x();
    let per: Vec<Option<(f64, f64)>> = (0..ds.n())
        .into_par_iter()
        .map(|i| {
            let mut w = weights_from_d2(obs_dm.d2().row(i).iter().copied(), gamma);
            if criterion == Criterion::Cv {
                w[i] = 0.0;
            }
            let mut g = vec![0.0; k * k];
            let mut r = vec![0.0; k];
            for (t, xr) in x.rows().into_iter().enumerate() {
                if w[t] == 0.0 {
                    continue;
                }
                for a in 0..k {
                    let xa = w[t] * xr[cols[a]];
                    r[a] += xa * ds.y()[t];
                    for b in 0..k {
                        g[a * k + b] += xa * xr[cols[b]];
                    }
                }
            }
            let (factor, jitter) = factor_with_fallback(&g, k, 0.0, i).ok()?;
            if jitter.is_some() || factor.min_pivot_sq() < MIN_PIVOT_SQ {
                return None;
            }
            let b = factor.solve(&r);
            let xi: Vec<f64> = cols.iter().map(|&j| x[[i, j]]).collect();
            let e = ds.y()[i] - xi.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>();
            let h = match criterion {
                Criterion::Cv => 0.0,
                Criterion::Aicc => {
                    w[i] * xi
                        .iter()
                        .zip(factor.solve(&xi))
                        .map(|(u, v)| u * v)
                        .sum::<f64>()
                }
            };
            Some((e * e, h))
        })
        .collect();
    let mut rss = 0.0;
    let mut trace = 0.0;
    for v in per {
        match v {
            Some((e2, h)) if e2.is_finite() => {
                rss += e2;
                trace += h;
            }
            _ => return Ok(f64::INFINITY),
        }
    }
    Ok(match criterion {
        Criterion::Cv => rss,
        Criterion::Aicc => aicc(rss, ds.n(), trace).unwrap_or(f64::INFINITY),
    })
}

/// Outcome of a one-dimensional bandwidth search.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSearch {
    pub gamma: f64,
    pub value: f64,
    pub warnings: Vec<String>,
}

/// Minimizes `f` over `gamma` in log space: a coarse scan of the bracket,
/// then golden-section on the cells around the best scan point. A scan
/// whose finite values span at most `flat_tol` counts as flat.
pub fn search_bandwidth(
    mut f: impl FnMut(f64) -> Result<f64>,
    flat_tol: f64,
) -> Result<BandwidthSearch> {
    let (lo, hi) = GAMMA_BRACKET;
    match scan(&mut f, lo.log10(), hi.log10(), flat_tol)? {
        Scan::Interior(a, b) => refine(&mut f, a, b, Vec::new()),
        Scan::Flat => Ok(BandwidthSearch {
            gamma: 10f64.powf(0.5 * (lo.log10() + hi.log10())),
            value: f(1.0)?,
            warnings: vec!["bandwidth criterion is flat; bracket midpoint used".into()],
        }),
        Scan::FlatEdge(g, v) => Ok(BandwidthSearch {
            gamma: g,
            value: v,
            warnings: vec![format!(
                "bandwidth criterion is flat at the bracket edge; gamma = {g:e}"
            )],
        }),
        Scan::Edge => {
            let (wlo, whi) = (lo / WIDEN_FACTOR, hi * WIDEN_FACTOR);
            match scan(&mut f, wlo.log10(), whi.log10(), flat_tol)? {
                Scan::Interior(a, b) => {
                    refine(&mut f, a, b, vec!["bandwidth bracket widened".into()])
                }
                Scan::FlatEdge(g, v) => Ok(BandwidthSearch {
                    gamma: g,
                    value: v,
                    warnings: vec![format!(
                        "bandwidth criterion is flat at the widened bracket edge; gamma = {g:e}"
                    )],
                }),
                Scan::Flat => Ok(BandwidthSearch {
                    gamma: 1.0,
                    value: f(1.0)?,
                    warnings: vec!["bandwidth criterion is flat; bracket midpoint used".into()],
                }),
                Scan::Edge => Err(Error::SearchBracketFailure { lo: wlo, hi: whi }),
            }
        }
    }
}

enum Scan {
    /// Minimum strictly inside; golden-section interval in log10 units.
    Interior(f64, f64),
    Edge,
    FlatEdge(f64, f64),
    Flat,
}

fn scan(f: &mut impl FnMut(f64) -> Result<f64>, a: f64, b: f64, flat_tol: f64) -> Result<Scan> {
    let steps = ((b - a) * COARSE_POINTS_PER_DECADE as f64).round() as usize;
    let xs: Vec<f64> = (0..=steps)
        .map(|k| a + (b - a) * k as f64 / steps as f64)
        .collect();
    let mut vals = Vec::with_capacity(xs.len());
    for &x in &xs {
        vals.push(f(10f64.powf(x))?);
    }
    let finite: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Ok(Scan::Edge);
    }
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= flat_tol {
        return Ok(Scan::Flat);
    }
    let k = vals.iter().position(|&v| v == min).unwrap_or(0);
    let last = xs.len() - 1;
    if k == 0 || k == last {
        let nb = if k == 0 { vals[1] } else { vals[last - 1] };
        if (nb - min).abs() <= FLAT_EDGE * min.abs().max(1e-300) {
            return Ok(Scan::FlatEdge(10f64.powf(xs[k]), min));
        }
        return Ok(Scan::Edge);
    }
    Ok(Scan::Interior(xs[k - 1], xs[k + 1]))
}

fn refine(
    f: &mut impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    warnings: Vec<String>,
) -> Result<BandwidthSearch> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(10f64.powf(x1))?;
    let mut f2 = f(10f64.powf(x2))?;
    while b - a > 1e-7 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(10f64.powf(x1))?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(10f64.powf(x2))?;
        }
    }
    let (x, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok(BandwidthSearch {
        gamma: 10f64.powf(x),
        value: v,
        warnings,
    })
}

/// Basic GWR on `subset` with the global bandwidth that minimizes
/// `criterion`.
pub fn bgwr_fit(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    subset: &SubsetMask,
    criterion: Criterion,
) -> Result<BaselineFit> {
    let obs_dm = observation_distances(ds, dm)?;
    bgwr_fit_with(ds, dm, &obs_dm, subset, criterion)
}

fn bgwr_fit_with(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    obs_dm: &DistanceMatrix,
    subset: &SubsetMask,
    criterion: Criterion,
) -> Result<BaselineFit> {
    let flat_tol = match criterion {
        Criterion::Cv => FLAT_CV * total_sum_of_squares(ds.y()),
        Criterion::Aicc => FLAT_AICC,
    };
    let search = search_bandwidth(
        |g| bandwidth_criterion(ds, obs_dm, subset, g, criterion),
        flat_tol,
    )?;
    let gamma = search.gamma;
    let cols = subset.columns();
    let rows: Vec<Result<Vec<f64>>> = (0..dm.c())
        .into_par_iter()
        .map(|o| {
            let w = weights_from_d2(dm.d2().row(o).iter().copied(), gamma);
            fit_columns(ds, &cols, &w, &vec![0.0; ds.m()], 0.0, o).map(|s| s.beta_sub)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let beta = CoefficientField::from_subset_rows(ds.m(), &cols, &rows);
    let bw = BandwidthField::global(gamma)?;
    let (fitted, trace) = fitted_and_hat_trace(ds, dm, &bw, subset, &beta, 0.0)?;
    let metrics = compute_metrics(ds, &fitted, cols.len(), Some(trace))?;
    Ok(BaselineFit {
        method: match criterion {
            Criterion::Cv => BaselineMethod::BgwrCv,
            Criterion::Aicc => BaselineMethod::BgwrAicc,
        },
        bandwidth: gamma,
        subset: subset.clone(),
        beta,
        metrics,
        criterion_value: search.value,
        fitted,
        warnings: search.warnings,
    })
}

/// Greedy forward selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSelection {
    /// Best fit after each step; `steps[k]` has `k + 1` free variables.
    pub steps: Vec<BaselineFit>,
    /// Design columns in the order they were added.
    pub order: Vec<usize>,
    /// Last `p` before AICc first increases (`p_max` if it never does).
    pub stop_p: usize,
}

impl ForwardSelection {
    pub fn order_names<'a>(&self, ds: &'a SpatialDataset) -> Vec<&'a str> {
        self.order
            .iter()
            .map(|&j| ds.var_names()[j].as_str())
            .collect()
    }
}

/// Adds, one at a time, the variable whose basic GWR fit (with its own
/// re-tuned bandwidth) scores best on `criterion`. Pairs with absolute
/// correlation at least `rho` are never selected together.
pub fn forward_selection(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    p_max: usize,
    criterion: Criterion,
    rho: f64,
) -> Result<ForwardSelection> {
    let m_free = ds.m_free();
    if p_max > m_free || p_max == 0 {
        return Err(Error::InfeasibleCardinality { p: p_max, m_free });
    }
    let obs_dm = observation_distances(ds, dm)?;
    let pairs = build_forbidden_pairs(ds, rho);
    let mut chosen: Vec<usize> = Vec::new();
    let mut steps: Vec<BaselineFit> = Vec::new();
    let mut aiccs: Vec<f64> = Vec::new();
    for _ in 0..p_max {
        let candidates: Vec<usize> = ds
            .free_columns()
            .into_iter()
            .filter(|j| !chosen.contains(j))
            .filter(|&j| chosen.iter().all(|&k| !pairs.contains(j, k)))
            .collect();
        if candidates.is_empty() {
            return Err(Error::InfeasibleCardinality { p: p_max, m_free });
        }
        let fits: Vec<Result<(usize, BaselineFit)>> = candidates
            .par_iter()
            .map(|&j| {
                let mut cols = chosen.clone();
                cols.push(j);
                let mask =
                    SubsetMask::from_columns(ds.m(), &cols, pairs.clone(), ds.has_intercept())?;
                bgwr_fit_with(ds, dm, &obs_dm, &mask, criterion).map(|f| (j, f))
            })
            .collect();
        let mut best: Option<(usize, BaselineFit)> = None;
        for r in fits {
            let (j, fit) = r?;
            if best
                .as_ref()
                .is_none_or(|(_, b)| fit.criterion_value < b.criterion_value)
            {
                best = Some((j, fit));
            }
        }
        let (j, mut fit) = best.expect("non-empty candidate list");
        fit.method = BaselineMethod::ForwardSelection;
        let a = match criterion {
            Criterion::Aicc => fit.criterion_value,
            Criterion::Cv => {
                bandwidth_criterion(ds, &obs_dm, &fit.subset, fit.bandwidth, Criterion::Aicc)?
            }
        };
        aiccs.push(a);
        chosen.push(j);
        steps.push(fit);
    }
    let stop_p = (0..aiccs.len() - 1)
        .find(|&k| aiccs[k + 1] > aiccs[k])
        .map_or(p_max, |k| k + 1);
    Ok(ForwardSelection {
        steps,
        order: chosen,
        stop_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point;
    use approx::assert_relative_eq;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(noise: f64, seed: u64) -> SpatialDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 40;
        let coords: Vec<Point> = (0..n)
            .map(|_| [rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)])
            .collect();
        let x = Array2::from_shape_fn((n, 4), |_| rng.gen_range(-1.0..1.0));
        let y = (0..n)
            .map(|i| {
                1.0 + 5.0 * x[[i, 2]]
                    + coords[i][0] * x[[i, 0]] * 0.3
                    + noise * rng.gen_range(-1.0..1.0)
            })
            .collect();
        let names = (0..4).map(|j| format!("x{j}")).collect();
        SpatialDataset::with_intercept(y, x, coords, None, names).unwrap()
    }

    #[test]
    fn exact_linear_response_gives_flat_cv() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20;
        let coords: Vec<Point> = (0..n)
            .map(|_| [rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)])
            .collect();
        let x = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-1.0..1.0));
        let y = (0..n).map(|i| 2.0 + x[[i, 0]] - 3.0 * x[[i, 1]]).collect();
        let ds = SpatialDataset::with_intercept(y, x, coords, None, vec!["a".into(), "b".into()])
            .unwrap();
        let dm = DistanceMatrix::build(&ds).unwrap();
        let fit = bgwr_fit(&ds, &dm, &SubsetMask::all(3, true), Criterion::Cv).unwrap();
        assert_eq!(fit.bandwidth, 1.0);
        assert_eq!(fit.warnings.len(), 1);
        assert!(fit.metrics.rss < 1e-18);
    }

    #[test]
    fn aicc_matches_scalar_formula() {
        let ds = instance(0.2, 1);
        let dm = DistanceMatrix::build(&ds).unwrap();
        let obs = observation_distances(&ds, &dm).unwrap();
        let subset = SubsetMask::all(5, true);
        let g = 3.0;
        // independent evaluation through the public hat-row API
        let mut rss = 0.0;
        let mut tr = 0.0;
        for i in 0..ds.n() {
            let w = crate::kernel::weight_row(&obs.d().row(i).to_vec(), g).unwrap();
            let row = ds.row(i).to_vec();
            let h = crate::wls::hat_row(&ds, &subset, &w, &row).unwrap();
            let fit: f64 = h.iter().zip(ds.y()).map(|(a, b)| a * b).sum();
            rss += (ds.y()[i] - fit).powi(2);
            tr += h[i];
        }
        let n = ds.n() as f64;
        let sigma = (rss / n).sqrt();
        let expected = 2.0 * n * sigma.ln()
            + n * (2.0 * std::f64::consts::PI).ln()
            + n * (n + tr) / (n - 2.0 - tr);
        let got = bandwidth_criterion(&ds, &obs, &subset, g, Criterion::Aicc).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-10);
    }

    #[test]
    fn cv_matches_loo_predictions() {
        let ds = instance(0.2, 2);
        let dm = DistanceMatrix::build(&ds).unwrap();
        let obs = observation_distances(&ds, &dm).unwrap();
        let subset = SubsetMask::from_columns(5, &[1, 3], Default::default(), true).unwrap();
        let g = 2.0;
        let expected: f64 = (0..ds.n())
            .map(|i| {
                let w = crate::kernel::weight_row(&obs.d().row(i).to_vec(), g).unwrap();
                let p = crate::wls::loo_predict(&ds, &subset, &w, i).unwrap();
                (ds.y()[i] - p).powi(2)
            })
            .sum();
        let got = bandwidth_criterion(&ds, &obs, &subset, g, Criterion::Cv).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn golden_section_finds_a_parabola_minimum() {
        let s = search_bandwidth(|g| Ok((g.log10() - 1.3).powi(2) + 2.0), 1e-12).unwrap();
        assert_relative_eq!(s.gamma.log10(), 1.3, epsilon = 1e-6);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn constant_criterion_returns_midpoint() {
        let s = search_bandwidth(|_| Ok(3.0), 1e-12).unwrap();
        assert_eq!(s.gamma, 1.0);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn boundary_minimum_is_widened_then_fails() {
        let s = search_bandwidth(|g| Ok((g.log10() - 5.0).powi(2)), 1e-12).unwrap();
        assert_relative_eq!(s.gamma.log10(), 5.0, epsilon = 1e-6);
        assert!(matches!(
            search_bandwidth(|g| Ok(-g.log10()), 1e-12),
            Err(Error::SearchBracketFailure { .. })
        ));
    }

    #[test]
    fn dominant_variable_is_selected_first() {
        let ds = instance(0.1, 3);
        let dm = DistanceMatrix::build(&ds).unwrap();
        let fs = forward_selection(&ds, &dm, 2, Criterion::Aicc, 0.9).unwrap();
        assert_eq!(fs.order[0], 3);
        assert!(fs.steps[0].subset.columns() == vec![0, 3]);
        let one = forward_selection(&ds, &dm, 1, Criterion::Cv, 0.9).unwrap();
        assert_eq!(one.steps.len(), 1);
        assert_eq!(one.stop_p, 1);
    }
}
