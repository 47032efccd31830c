//! Exponential kernel and the integrated negative log-likelihood.
//!
//! Modelling the error variance of observation `i` in focal model `o` as
//! `exp(gamma_o * d_oi^2)` turns the per-focal log-likelihood into
//!
//! ```text
//! f_o(beta_o, gamma_o) = gamma_o * S_o + sum_i e_oi^2 * exp(-gamma_o * d_oi^2)
//! ```
//!
//! with `S_o = sum_i d_oi^2` (constant factors of one half dropped). The
//! integrated objective is the sum of `f_o` over focal points. The kernel
//! weight `W_oi = exp(-gamma_o * d_oi^2)` is the reciprocal of the variance.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{BandwidthField, DistanceMatrix};

/// Kernel weights of one focal point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub w: Vec<f64>,
    pub gamma_used: f64,
}

impl WeightRow {
    /// Unit weights: ordinary least squares.
    pub fn ones(n: usize) -> Self {
        WeightRow {
            w: vec![1.0; n],
            gamma_used: 0.0,
        }
    }
}

/// `w_i = exp(-gamma * d_i^2)` for one row of scaled distances.
pub fn weight_row(d_row: &[f64], gamma: f64) -> Result<WeightRow> {
    if gamma < 0.0 {
        return Err(Error::NegativeBandwidth(gamma));
    }
    if !gamma.is_finite() || d_row.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("kernel input".into()));
    }
    Ok(WeightRow {
        w: d_row.iter().map(|d| (-gamma * d * d).exp()).collect(),
        gamma_used: gamma,
    })
}

/// Same as [`weight_row`] but from pre-squared distances; skips validation.
pub(crate) fn weights_from_d2(d2_row: impl Iterator<Item = f64>, gamma: f64) -> Vec<f64> {
    d2_row.map(|d2| (-gamma * d2).exp()).collect()
}

/// `gamma * S + sum_i e_i^2 exp(-gamma d_i^2)` for one focal point.
pub fn per_focal_objective(errors_o: &[f64], d_row: &[f64], gamma_o: f64) -> f64 {
    let s: f64 = d_row.iter().map(|d| d * d).sum();
    let weighted: f64 = errors_o
        .iter()
        .zip(d_row)
        .map(|(e, d)| e * e * (-gamma_o * d * d).exp())
        .sum();
    gamma_o * s + weighted
}

/// Integrated objective over all focal points. `errors` is `c x n` with
/// `errors[[o, i]] = y_i - x_i . beta_o`.
///
/// Summation runs focal-major, observation-minor, so the value is
/// bit-reproducible.
pub fn integrated_objective(errors: &Array2<f64>, dm: &DistanceMatrix, bw: &BandwidthField) -> f64 {
    let d2 = dm.d2();
    let s = dm.squared_row_sums();
    let mut total = 0.0;
    for (o, e_row) in errors.rows().into_iter().enumerate() {
        let g = bw.gamma(o);
        let weighted: f64 = e_row
            .iter()
            .zip(d2.row(o))
            .map(|(e, d2)| e * e * (-g * d2).exp())
            .sum();
        total += g * s[o] + weighted;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Point, SpatialDataset};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_bandwidth_gives_unit_weights() {
        let w = weight_row(&[0.0, 0.3, 1.0], 0.0).unwrap();
        assert_eq!(w.w, vec![1.0; 3]);
    }

    #[test]
    fn zero_distance_gives_unit_weight() {
        let w = weight_row(&[0.0, 0.5], 123.0).unwrap();
        assert_eq!(w.w[0], 1.0);
        assert!(w.w[1] < 1.0);
    }

    #[test]
    fn unit_bandwidth_unit_distance() {
        let w = weight_row(&[1.0], 1.0).unwrap();
        assert_relative_eq!(w.w[0], 0.367_879_441_171_442_33, epsilon = 1e-15);
    }

    #[test]
    fn negative_bandwidth_is_an_error() {
        assert!(matches!(
            weight_row(&[1.0], -0.1),
            Err(Error::NegativeBandwidth(_))
        ));
    }

    #[test]
    fn huge_bandwidth_underflows_to_zero_weight() {
        let w = weight_row(&[1.0], 1e6).unwrap();
        assert_eq!(w.w[0], 0.0);
    }

    #[test]
    fn per_focal_special_cases() {
        let d = [0.2, 0.5, 1.0];
        let e = [1.0, -2.0, 0.5];
        assert_relative_eq!(per_focal_objective(&e, &d, 0.0), 1.0 + 4.0 + 0.25);
        assert_relative_eq!(
            per_focal_objective(&[0.0; 3], &d, 3.0),
            3.0 * (0.04 + 0.25 + 1.0)
        );
    }

    fn line_dataset(points: Vec<Point>, focal: Vec<Point>) -> (SpatialDataset, DistanceMatrix) {
        let n = points.len();
        let y = (0..n).map(|i| i as f64 + 0.5 * (i % 2) as f64).collect();
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let ds =
            SpatialDataset::with_intercept(y, x, points, Some(focal), vec!["a".into()]).unwrap();
        let dm = DistanceMatrix::build(&ds).unwrap();
        (ds, dm)
    }

    #[test]
    fn closed_form_two_observation_case() {
        // c=1, n=2, both observations at scaled distance 1.
        let (_, dm) = line_dataset(vec![[1.0, 0.0], [-1.0, 0.0]], vec![[0.0, 0.0]]);
        let errors = Array2::from_shape_vec((1, 2), vec![2.0, -2.0]).unwrap();
        let g = 4f64.ln();
        let bw = BandwidthField::global(g).unwrap();
        let got = integrated_objective(&errors, &dm, &bw);
        // scalar oracle: 2 ln 4 + 8 / 4
        let oracle = 2.0 * g + 8.0 * (-g).exp();
        assert_relative_eq!(got, oracle, max_relative = 1e-15);
        assert_relative_eq!(got, 4.772_588_722_239_781, max_relative = 1e-12);
    }

    #[test]
    fn zero_bandwidth_is_pooled_sse() {
        let (_, dm) = line_dataset(
            vec![[0.0, 0.0], [1.0, 0.0], [3.0, 1.0]],
            vec![[0.0, 0.0], [2.0, 2.0]],
        );
        let errors = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0]).unwrap();
        let bw = BandwidthField::local(vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(integrated_objective(&errors, &dm, &bw), 14.0 + 1.25);
    }

    proptest! {
        #[test]
        fn objective_is_additive_over_focal_points(
            seed in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..12),
            errs in proptest::collection::vec(-3.0f64..3.0, 36),
            gammas in proptest::collection::vec(0.0f64..20.0, 3),
        ) {
            let n = seed.len();
            let pts: Vec<Point> = seed.iter().map(|&(a, b)| [a, b]).collect();
            let focal = pts[..3].to_vec();
            prop_assume!(pts.iter().any(|p| p != &pts[0]));
            let (_, dm) = line_dataset(pts, focal);
            let errors = Array2::from_shape_fn((3, n), |(o, i)| errs[(o * 12 + i) % errs.len()]);
            let bw = BandwidthField::local(gammas.clone()).unwrap();
            let total = integrated_objective(&errors, &dm, &bw);
            let summed: f64 = (0..3)
                .map(|o| per_focal_objective(&errors.row(o).to_vec(), &dm.d().row(o).to_vec(), gammas[o]))
                .sum();
            prop_assert!((total - summed).abs() <= 1e-10 * total.abs().max(1e-300));
        }

        #[test]
        fn weights_strictly_decrease_in_bandwidth(d in 0.01f64..1.0, g in 0.0f64..50.0, dg in 0.01f64..5.0) {
            let a = weight_row(&[d], g).unwrap().w[0];
            let b = weight_row(&[d], g + dg).unwrap().w[0];
            prop_assert!(b < a);
            prop_assert!(a > 0.0 && a <= 1.0);
        }

        #[test]
        fn objective_is_strictly_convex_in_bandwidth(
            e in proptest::collection::vec(0.1f64..3.0, 5),
            d in proptest::collection::vec(0.05f64..1.0, 5),
            g in 0.0f64..10.0,
        ) {
            // second derivative sum d^4 e^2 exp(-g d^2) > 0
            let f2: f64 = e.iter().zip(&d).map(|(e, d)| d.powi(4) * e * e * (-g * d * d).exp()).sum();
            prop_assert!(f2 > 0.0);
            let h = 1e-3;
            let f = |g| per_focal_objective(&e, &d, g);
            if g > h {
                let fd = (f(g + h) - 2.0 * f(g) + f(g - h)) / (h * h);
                prop_assert!(fd > 0.0);
            }
        }
    }
}
