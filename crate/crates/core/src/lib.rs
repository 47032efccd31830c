//! Geographically weighted regression with one global best subset.
//!
//! Local coefficients, kernel bandwidths and a single variable subset shared
//! by every focal point are fitted jointly by minimizing one integrated
//! negative log-likelihood. The fit alternates between an exact best-subset
//! step at fixed bandwidths ([`subset`]) and a closed-form-per-point
//! bandwidth step at fixed coefficients ([`bandwidth`]), see [`adm`].
//!
//! ```
//! use igwr::{igwr_fit, BandwidthMode, DistanceMatrix, SolverConfig, SpatialDataset};
//! use ndarray::Array2;
//!
//! let coords: Vec<[f64; 2]> = (0..12).map(|i| [(i % 4) as f64, (i / 4) as f64]).collect();
//! let x = Array2::from_shape_fn((12, 2), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
//! let y: Vec<f64> = (0..12).map(|i| 1.0 + 2.0 * x[[i, 0]] + 0.1 * (i % 3) as f64).collect();
//! let ds = SpatialDataset::with_intercept(y, x, coords, None, vec!["a".into(), "b".into()])?;
//! let dm = DistanceMatrix::build(&ds)?;
//! let fit = igwr_fit(&ds, &dm, 1, BandwidthMode::Global, &SolverConfig::default())?;
//! assert_eq!(fit.selected_names(&ds), ["a"]);
//! # Ok::<(), igwr::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adm;
pub mod bandwidth;
pub mod baseline;
pub mod error;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod subset;
pub mod wls;

pub use adm::{
    igwr_fit, igwr_fit_from_gamma, igwr_fit_seeded, recommend_p, sweep_p, IgwrSeed, Sweep,
};
pub use bandwidth::{
    gamma_init, solve_mp_gamma, solve_mp_gamma_with_tol, GammaSolution, ScalarGammaProblem,
};
pub use baseline::{
    bgwr_fit, forward_selection, BaselineFit, BaselineMethod, Criterion, ForwardSelection,
};
pub use error::{Error, Result};
pub use io::{emit_report, load_csv, XColumns};
pub use kernel::{integrated_objective, per_focal_objective, weight_row, WeightRow};
pub use metrics::{avg_symmetric_difference, compute_metrics, range_to_mean, Metrics};
pub use model::{
    build_distance_matrix, build_forbidden_pairs, validate_dataset, BandwidthField, BandwidthMode,
    CoefficientField, DistanceMatrix, FitReport, ForbiddenPairs, HalfStep, Point, SolverConfig,
    SpatialDataset, SubsetMask, SubsetStrategy, TraceEntry,
};
pub use subset::{
    branch_and_bound, enumerate_feasible_masks, exhaustive_search, solve_mp_beta, SubsetSolution,
};
pub use wls::{hat_row, loo_predict, wls_fit, WlsSolution};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/subset.md")]
    mod subset {}
    #[doc = include_str!("../../../book/src/bandwidth.md")]
    mod bandwidth {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
