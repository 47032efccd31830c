#![allow(dead_code)]

use std::path::PathBuf;

use igwr::{load_csv, Point, SpatialDataset, XColumns};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GEORGIA_X: [&str; 6] = [
    "TotPop90", "PctRural", "PctEld", "PctFB", "PctPov", "PctBlack",
];

pub fn georgia_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join("georgia.csv")
}

pub fn georgia() -> SpatialDataset {
    let x = XColumns::Names(GEORGIA_X.iter().map(|s| s.to_string()).collect());
    load_csv(&georgia_path(), "PctBach", &x, ("X", "Y"), None).expect("bundled Georgia data")
}

/// Column index of a Georgia variable in the design matrix.
pub fn col(ds: &SpatialDataset, name: &str) -> usize {
    ds.column_index(name).unwrap()
}

/// Spatially varying linear model with `k` predictors, a few active ones and
/// uniform noise. Focal points are the observations.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> SpatialDataset {
    let coords: Vec<Point> = (0..n)
        .map(|_| [rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)])
        .collect();
    let x = Array2::from_shape_fn((n, k), |_| rng.gen_range(-1.0..1.0));
    let coef: Vec<f64> = (0..k)
        .map(|_| {
            if rng.gen_bool(0.5) {
                rng.gen_range(-3.0..3.0)
            } else {
                0.0
            }
        })
        .collect();
    let noise = rng.gen_range(0.05..1.0);
    let y = (0..n)
        .map(|i| {
            let drift = 1.0 + coords[i][0] / 100.0;
            let lin: f64 = (0..k).map(|j| coef[j] * x[[i, j]]).sum();
            2.0 + drift * lin + noise * rng.gen_range(-1.0..1.0)
        })
        .collect();
    let names = (0..k).map(|j| format!("x{j}")).collect();
    SpatialDataset::with_intercept(y, x, coords, None, names).unwrap()
}
