//! Alternating minimization: subset/coefficient step at fixed bandwidths,
//! then bandwidth step at fixed coefficients, until the relative change of
//! the objective drops below `theta`.

use std::ops::RangeInclusive;

use crate::bandwidth::{gamma_init, solve_mp_gamma_with_tol};
use crate::error::{Error, Result};
use crate::kernel::integrated_objective;
use crate::metrics::{compute_metrics, fitted_and_hat_trace};
use crate::model::{
    build_forbidden_pairs, BandwidthField, BandwidthMode, DistanceMatrix, FitReport, HalfStep,
    SolverConfig, SpatialDataset, SubsetMask, TraceEntry,
};
use crate::subset::{solve_mp_beta, MpBetaOptions, SubsetSolution};

/// Relative tolerance of the monotonicity assertion.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Objectives below this fraction of `c * sum y^2` count as an exact fit.
const ZERO_OBJECTIVE: f64 = 1e-24;

/// Starting point for a warm re-run.
#[derive(Debug, Clone, PartialEq)]
pub struct IgwrSeed {
    pub gamma: BandwidthField,
    pub mask: SubsetMask,
    pub objective: f64,
}

impl IgwrSeed {
    pub fn from_report(report: &FitReport) -> Self {
        IgwrSeed {
            gamma: report.gamma.clone(),
            mask: report.selected.clone(),
            objective: report.objective,
        }
    }
}

/// Fits the integrated model with `p` free variables, starting from the
/// intercept-only bandwidths.
pub fn igwr_fit(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    p: usize,
    mode: BandwidthMode,
    cfg: &SolverConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let ds = prepare(ds, cfg)?;
    let init = gamma_init(&ds, dm, mode, cfg.gamma_tol)?;
    run(&ds, dm, p, init.field, None, 0.0, init.warnings, cfg)
}

/// Same as [`igwr_fit`] with caller-supplied starting bandwidths.
pub fn igwr_fit_from_gamma(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    p: usize,
    gamma0: BandwidthField,
    cfg: &SolverConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let ds = prepare(ds, cfg)?;
    run(&ds, dm, p, gamma0, None, 0.0, Vec::new(), cfg)
}

/// Restarts from a previous solution: its bandwidths, its subset as the
/// warm start and its objective as the reference for the first gap test.
pub fn igwr_fit_seeded(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    p: usize,
    seed: &IgwrSeed,
    cfg: &SolverConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let ds = prepare(ds, cfg)?;
    run(
        &ds,
        dm,
        p,
        seed.gamma.clone(),
        Some(seed.mask.clone()),
        seed.objective,
        Vec::new(),
        cfg,
    )
}

fn prepare(ds: &SpatialDataset, cfg: &SolverConfig) -> Result<SpatialDataset> {
    if cfg.standardize_x || cfg.standardize_y {
        ds.standardized(cfg.standardize_x, cfg.standardize_y)
    } else {
        Ok(ds.clone())
    }
}

fn push_unique(warnings: &mut Vec<String>, new: impl IntoIterator<Item = String>) {
    for w in new {
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    p: usize,
    gamma0: BandwidthField,
    warm: Option<SubsetMask>,
    objective0: f64,
    mut warnings: Vec<String>,
    cfg: &SolverConfig,
) -> Result<FitReport> {
    push_unique(&mut warnings, ds.warnings().iter().cloned());
    let mode = gamma0.mode();
    let forbidden = build_forbidden_pairs(ds, cfg.rho);
    let opts = MpBetaOptions {
        strategy: cfg.subset_strategy,
        wls_ridge: cfg.wls_ridge,
    };
    let scale = dm.c() as f64 * ds.y().iter().map(|v| v * v).sum::<f64>();
    let floor = ZERO_OBJECTIVE * scale;
    let check = |iteration: usize, step: &'static str, previous: f64, current: f64| -> Result<()> {
        if current > previous + MONOTONE_TOL * previous.abs() + floor {
            Err(Error::NonMonotoneObjective {
                iteration,
                step,
                previous,
                current,
            })
        } else {
            Ok(())
        }
    };

    let mut gamma = gamma0;
    let mut mask = warm;
    let mut prev = objective0;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut last: Option<SubsetSolution> = None;
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=cfg.max_adm_iters {
        iterations = t;
        let sol = solve_mp_beta(ds, dm, &gamma, p, &forbidden, mask.as_ref(), &opts)?;
        if let Some(e) = trace.last() {
            check(t, "beta", e.objective, sol.objective)?;
        }
        trace.push(TraceEntry {
            iteration: t,
            step: HalfStep::Beta,
            objective: sol.objective,
        });
        push_unique(&mut warnings, sol.warnings.iter().cloned());

        let g = solve_mp_gamma_with_tol(&sol.errors, dm, mode, cfg.gamma_tol)?;
        push_unique(&mut warnings, g.warnings);
        let obj = integrated_objective(&sol.errors, dm, &g.field);
        check(t, "gamma", sol.objective, obj)?;
        trace.push(TraceEntry {
            iteration: t,
            step: HalfStep::Gamma,
            objective: obj,
        });
        gamma = g.field;
        mask = Some(sol.mask.clone());
        last = Some(sol);

        let gap = if prev > 0.0 {
            (obj - prev).abs() / prev
        } else {
            f64::INFINITY
        };
        prev = obj;
        if obj <= floor || gap <= cfg.theta {
            converged = true;
            break;
        }
    }
    let sol =
        last.ok_or_else(|| Error::InvalidConfig("max_adm_iters must be at least 1".into()))?;
    let (fitted, hat_trace) =
        fitted_and_hat_trace(ds, dm, &gamma, &sol.mask, &sol.beta, cfg.wls_ridge)?;
    let metrics = compute_metrics(ds, &fitted, sol.mask.columns().len(), Some(hat_trace))?;
    if !converged {
        warnings.push(format!(
            "no convergence within {} iterations",
            cfg.max_adm_iters
        ));
    }
    Ok(FitReport {
        selected: sol.mask,
        beta: sol.beta,
        gamma,
        objective: prev,
        objective_trace: trace,
        metrics,
        fitted,
        iterations,
        converged,
        warnings,
    })
}

/// Fits for every `p` in a range plus the recommended cardinality.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub reports: Vec<(usize, FitReport)>,
    pub recommended: usize,
}

impl Sweep {
    pub fn rss(&self) -> Vec<f64> {
        self.reports.iter().map(|(_, r)| r.rss()).collect()
    }

    pub fn report(&self, p: usize) -> Option<&FitReport> {
        self.reports.iter().find(|(q, _)| *q == p).map(|(_, r)| r)
    }
}

/// Runs [`igwr_fit`] for each `p` in `p_range` and applies [`recommend_p`]
/// with `epsilon = 0`.
pub fn sweep_p(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    p_range: RangeInclusive<usize>,
    mode: BandwidthMode,
    cfg: &SolverConfig,
) -> Result<Sweep> {
    if p_range.is_empty() {
        return Err(Error::InvalidConfig("empty p range".into()));
    }
    let mut reports = Vec::new();
    for p in p_range {
        reports.push((p, igwr_fit(ds, dm, p, mode, cfg)?));
    }
    let ps: Vec<usize> = reports.iter().map(|(p, _)| *p).collect();
    let rss: Vec<f64> = reports.iter().map(|(_, r)| r.rss()).collect();
    let recommended = recommend_p(&ps, &rss, 0.0);
    Ok(Sweep {
        reports,
        recommended,
    })
}

/// Cardinality rule on an RSS curve.
///
/// Returns the first `p` whose successor fails to lower RSS by more than
/// `epsilon`. If RSS keeps falling, returns the elbow: the point farthest
/// from the chord joining the two ends of the curve, with both axes
/// rescaled to `[0, 1]`.
pub fn recommend_p(ps: &[usize], rss: &[f64], epsilon: f64) -> usize {
    assert_eq!(ps.len(), rss.len());
    assert!(!ps.is_empty());
    for k in 0..ps.len() - 1 {
        if rss[k + 1] >= rss[k] - epsilon {
            return ps[k];
        }
    }
    let n = ps.len();
    if n < 3 {
        return ps[n - 1];
    }
    let (x0, x1) = (ps[0] as f64, ps[n - 1] as f64);
    let (y0, y1) = (rss[0], rss[n - 1]);
    let (dx, dy) = (x1 - x0, y0 - y1);
    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 0..n {
        let u = (ps[k] as f64 - x0) / dx;
        let v = if dy > 0.0 { (rss[k] - y1) / dy } else { 0.0 };
        // chord runs from (0, 1) to (1, 0): distance |u + v - 1| / sqrt(2)
        let dist = (u + v - 1.0).abs() / std::f64::consts::SQRT_2;
        if dist > best.1 {
            best = (k, dist);
        }
    }
    ps[best.0]
}
