//! Bandwidth step: minimize the integrated objective over `gamma` with the
//! coefficients held fixed.
//!
//! For fixed residuals the problem separates into one scalar problem per
//! focal point (local mode) or collapses into a single scalar problem
//! (global mode):
//!
//! ```text
//! f(g)   = g S + sum e^2 exp(-g d^2)
//! f'(g)  = S - sum d^2 e^2 exp(-g d^2)
//! f''(g) = sum d^4 e^2 exp(-g d^2) >= 0
//! ```
//!
//! `f'` is increasing, so the minimizer over `g >= 0` is either `0` (when
//! `f'(0) >= 0`) or the unique root of `f'`. No upper bound on `g` is needed.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BandwidthField, BandwidthMode, DistanceMatrix, SpatialDataset};

/// Default stationarity tolerance.
pub const DEFAULT_GAMMA_TOL: f64 = 1e-10;

/// One scalar bandwidth problem: `min_{g >= 0} g S + sum e2 exp(-g d2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGammaProblem {
    pub s: f64,
    pub d2: Vec<f64>,
    pub e2: Vec<f64>,
}

impl ScalarGammaProblem {
    pub fn value(&self, g: f64) -> f64 {
        g * self.s
            + self
                .d2
                .iter()
                .zip(&self.e2)
                .map(|(d2, e2)| e2 * (-g * d2).exp())
                .sum::<f64>()
    }

    pub fn derivative(&self, g: f64) -> f64 {
        self.s
            - self
                .d2
                .iter()
                .zip(&self.e2)
                .map(|(d2, e2)| d2 * e2 * (-g * d2).exp())
                .sum::<f64>()
    }

    pub fn second_derivative(&self, g: f64) -> f64 {
        self.d2
            .iter()
            .zip(&self.e2)
            .map(|(d2, e2)| d2 * d2 * e2 * (-g * d2).exp())
            .sum()
    }

    /// True when the objective is only weakly monotone in `g`: every
    /// residual or every distance is zero.
    pub fn is_degenerate(&self) -> bool {
        self.e2.iter().all(|&e| e == 0.0) || self.d2.iter().all(|&d| d == 0.0)
    }

    /// Safeguarded Newton on the increasing derivative, after bracketing the
    /// root by doubling.
    pub fn solve(&self, tol: f64) -> f64 {
        let scale = tol * (1.0 + self.s);
        if self.derivative(0.0) >= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.derivative(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return lo;
            }
        }
        let mut g = 0.5 * (lo + hi);
        for _ in 0..500 {
            let fp = self.derivative(g);
            if fp.abs() <= scale {
                return g;
            }
            if fp < 0.0 {
                lo = g;
            } else {
                hi = g;
            }
            let fpp = self.second_derivative(g);
            let newton = g - fp / fpp;
            g = if fpp > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSolution {
    pub field: BandwidthField,
    pub warnings: Vec<String>,
}

fn focal_problem(errors: &Array2<f64>, dm: &DistanceMatrix, o: usize) -> ScalarGammaProblem {
    ScalarGammaProblem {
        s: dm.squared_row_sums()[o],
        d2: dm.d2().row(o).to_vec(),
        e2: errors.row(o).iter().map(|e| e * e).collect(),
    }
}

/// Minimizes the integrated objective over the bandwidths for fixed
/// residuals `errors` (`c x n`).
pub fn solve_mp_gamma(
    errors: &Array2<f64>,
    dm: &DistanceMatrix,
    mode: BandwidthMode,
) -> Result<GammaSolution> {
    solve_mp_gamma_with_tol(errors, dm, mode, DEFAULT_GAMMA_TOL)
}

pub fn solve_mp_gamma_with_tol(
    errors: &Array2<f64>,
    dm: &DistanceMatrix,
    mode: BandwidthMode,
    tol: f64,
) -> Result<GammaSolution> {
    if errors.dim() != (dm.c(), dm.n()) {
        return Err(Error::ShapeMismatch(format!(
            "residuals are {:?}, distances are {}x{}",
            errors.dim(),
            dm.c(),
            dm.n()
        )));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFiniteErrors);
    }
    let mut warnings = Vec::new();
    let field = match mode {
        BandwidthMode::Local => {
            let solved: Vec<(f64, bool)> = (0..dm.c())
                .into_par_iter()
                .map(|o| {
                    let prob = focal_problem(errors, dm, o);
                    if prob.is_degenerate() {
                        (0.0, true)
                    } else {
                        (prob.solve(tol), false)
                    }
                })
                .collect();
            for (o, &(_, degenerate)) in solved.iter().enumerate() {
                if degenerate {
                    warnings.push(format!(
                        "focal point {o}: degenerate bandwidth problem, gamma set to 0"
                    ));
                }
            }
            BandwidthField::local(solved.into_iter().map(|(g, _)| g).collect())?
        }
        BandwidthMode::Global => {
            let prob = ScalarGammaProblem {
                s: dm.squared_row_sums().iter().sum(),
                d2: dm.d2().iter().copied().collect(),
                e2: errors.iter().map(|e| e * e).collect(),
            };
            if prob.is_degenerate() {
                warnings.push("degenerate global bandwidth problem, gamma set to 0".to_string());
                BandwidthField::global(0.0)?
            } else {
                BandwidthField::global(prob.solve(tol))?
            }
        }
    };
    Ok(GammaSolution { field, warnings })
}

/// Starting bandwidths: solve the bandwidth step for the intercept-only
/// model whose intercept is the unweighted mean of `y` at every focal point.
pub fn gamma_init(
    ds: &SpatialDataset,
    dm: &DistanceMatrix,
    mode: BandwidthMode,
    tol: f64,
) -> Result<GammaSolution> {
    if !ds.has_intercept() {
        return Err(Error::InvalidConfig(
            "bandwidth initialization needs an intercept".into(),
        ));
    }
    let mean = ds.y().iter().sum::<f64>() / ds.n() as f64;
    let errors = Array2::from_shape_fn((dm.c(), dm.n()), |(_, i)| ds.y()[i] - mean);
    solve_mp_gamma_with_tol(&errors, dm, mode, tol)
}
