//! Shared domain types: the dataset, scaled distances, subset masks,
//! coefficient and bandwidth fields, solver configuration and fit reports.
//!
//! Index conventions used throughout the crate:
//!
//! * observations are indexed `i in 0..n`, focal points `o in 0..c`,
//!   design columns `j in 0..m`;
//! * when an intercept is present it is column `0`, it is always selected,
//!   and it never counts toward the subset cardinality `p`;
//! * every other column is a *free* column.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Metrics;

/// Planar coordinate pair in projected units.
pub type Point = [f64; 2];

/// Responses, design matrix and locations for one study area.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDataset {
    y: Vec<f64>,
    x: Array2<f64>,
    coords: Vec<Point>,
    focal_coords: Vec<Point>,
    var_names: Vec<String>,
    intercept: bool,
    warnings: Vec<String>,
}

impl SpatialDataset {
    /// Builds and validates a dataset. `focal_coords = None` places one focal
    /// point at every observation.
    ///
    /// When `intercept` is true, column 0 of `x` must be all ones.
    pub fn new(
        y: Vec<f64>,
        x: Array2<f64>,
        coords: Vec<Point>,
        focal_coords: Option<Vec<Point>>,
        var_names: Vec<String>,
        intercept: bool,
    ) -> Result<Self> {
        let focal_coords = focal_coords.unwrap_or_else(|| coords.clone());
        let mut ds = SpatialDataset {
            y,
            x,
            coords,
            focal_coords,
            var_names,
            intercept,
            warnings: Vec::new(),
        };
        ds.warnings = validate_dataset(&ds)?;
        Ok(ds)
    }

    /// Prepends an all-ones `Intercept` column to `x` and builds the dataset.
    pub fn with_intercept(
        y: Vec<f64>,
        x: Array2<f64>,
        coords: Vec<Point>,
        focal_coords: Option<Vec<Point>>,
        var_names: Vec<String>,
    ) -> Result<Self> {
        let (n, k) = x.dim();
        let mut full = Array2::<f64>::ones((n, k + 1));
        full.slice_mut(ndarray::s![.., 1..]).assign(&x);
        let mut names = Vec::with_capacity(k + 1);
        names.push("Intercept".to_string());
        names.extend(var_names);
        Self::new(y, full, coords, focal_coords, names, true)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn focal_coords(&self) -> &[Point] {
        &self.focal_coords
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// Validation warnings (currently: duplicated observation coordinates).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn c(&self) -> usize {
        self.focal_coords.len()
    }

    /// Columns eligible for selection, i.e. everything except the intercept.
    pub fn free_columns(&self) -> Vec<usize> {
        let start = usize::from(self.intercept);
        (start..self.m()).collect()
    }

    pub fn m_free(&self) -> usize {
        self.m() - usize::from(self.intercept)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    /// Returns a copy with z-scored free columns and/or a z-scored response.
    /// Zero-variance columns are only centred.
    pub fn standardized(&self, standardize_x: bool, standardize_y: bool) -> Result<Self> {
        let mut x = self.x.clone();
        if standardize_x {
            for j in self.free_columns() {
                let mut col = x.column_mut(j);
                let (mean, sd) = mean_sd(col.iter().copied());
                col.mapv_inplace(|v| if sd > 0.0 { (v - mean) / sd } else { v - mean });
            }
        }
        let mut y = self.y.clone();
        if standardize_y {
            let (mean, sd) = mean_sd(y.iter().copied());
            for v in &mut y {
                *v = (*v - mean) / sd;
            }
        }
        Self::new(
            y,
            x,
            self.coords.clone(),
            Some(self.focal_coords.clone()),
            self.var_names.clone(),
            self.intercept,
        )
    }
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    let sd = if n > 1.0 {
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Checks every dataset invariant; returns warnings for legal oddities.
pub fn validate_dataset(ds: &SpatialDataset) -> Result<Vec<String>> {
    let n = ds.y.len();
    let (rows, m) = ds.x.dim();
    if n < 2 {
        return Err(Error::ShapeMismatch(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    if m < 1 {
        return Err(Error::ShapeMismatch("design matrix has no columns".into()));
    }
    if rows != n {
        return Err(Error::ShapeMismatch(format!(
            "y has {n} rows but X has {rows}"
        )));
    }
    if ds.coords.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} coordinate pairs for {n} observations",
            ds.coords.len()
        )));
    }
    if ds.focal_coords.is_empty() {
        return Err(Error::ShapeMismatch("no focal points".into()));
    }
    if ds.var_names.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "{} variable names for {m} columns",
            ds.var_names.len()
        )));
    }
    let unique: BTreeSet<&String> = ds.var_names.iter().collect();
    if unique.len() != m {
        return Err(Error::ShapeMismatch("variable names are not unique".into()));
    }
    if ds.y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y".into()));
    }
    if let Some(((i, j), _)) = ds.x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite(format!("X[{i}, {j}]")));
    }
    let all_coords = ds.coords.iter().chain(ds.focal_coords.iter());
    if all_coords.flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coordinates".into()));
    }
    if ds.intercept && ds.x.column(0).iter().any(|&v| v != 1.0) {
        return Err(Error::ShapeMismatch(
            "intercept column is not all ones".into(),
        ));
    }
    let (_, sd) = mean_sd(ds.y.iter().copied());
    if sd == 0.0 {
        return Err(Error::ConstantResponse);
    }

    let mut warnings = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for (i, p) in ds.coords.iter().enumerate() {
        let key = (p[0].to_bits(), p[1].to_bits());
        if let Some(first) = seen.insert(key, i) {
            warnings.push(format!(
                "observations {first} and {i} share coordinates ({}, {})",
                p[0], p[1]
            ));
        }
    }
    Ok(warnings)
}

/// Focal-to-observation distances divided by their global maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: Array2<f64>,
    d2: Array2<f64>,
    d_raw_max: f64,
    squared_row_sums: Vec<f64>,
    nearest_focal: Vec<usize>,
}

impl DistanceMatrix {
    /// Euclidean distances from every focal point to every observation,
    /// scaled so that the largest entry is exactly 1.
    pub fn build(ds: &SpatialDataset) -> Result<Self> {
        let raw = raw_distances(ds.focal_coords(), ds.coords());
        let max = raw.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::DegenerateGeometry);
        }
        Ok(Self::from_raw(raw, max))
    }

    /// Distances between arbitrary point sets, divided by a caller-supplied
    /// scale (used to put observation-to-observation distances on the same
    /// scale as an existing matrix).
    pub fn with_scale(focal: &[Point], obs: &[Point], scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::DegenerateGeometry);
        }
        Ok(Self::from_raw(raw_distances(focal, obs), scale))
    }

    fn from_raw(raw: Array2<f64>, scale: f64) -> Self {
        let d = raw.mapv(|v| v / scale);
        let d2 = d.mapv(|v| v * v);
        let squared_row_sums = d2.rows().into_iter().map(|r| r.sum()).collect();
        let (c, n) = d.dim();
        let nearest_focal = (0..n)
            .map(|i| {
                let mut best = 0;
                for o in 1..c {
                    if d[[o, i]] < d[[best, i]] {
                        best = o;
                    }
                }
                best
            })
            .collect();
        DistanceMatrix {
            d,
            d2,
            d_raw_max: scale,
            squared_row_sums,
            nearest_focal,
        }
    }

    /// Scaled distances, `c x n`.
    pub fn d(&self) -> &Array2<f64> {
        &self.d
    }

    /// Squared scaled distances, `c x n`.
    pub fn d2(&self) -> &Array2<f64> {
        &self.d2
    }

    /// The divisor applied to raw distances, in original units.
    pub fn d_raw_max(&self) -> f64 {
        self.d_raw_max
    }

    /// `S_o`, the sum of squared scaled distances for each focal point.
    pub fn squared_row_sums(&self) -> &[f64] {
        &self.squared_row_sums
    }

    pub fn c(&self) -> usize {
        self.d.nrows()
    }

    pub fn n(&self) -> usize {
        self.d.ncols()
    }

    /// For each observation, the closest focal point (lowest index on ties).
    /// With focal points at the observations this is the identity map.
    pub fn nearest_focal(&self) -> &[usize] {
        &self.nearest_focal
    }
}

fn raw_distances(focal: &[Point], obs: &[Point]) -> Array2<f64> {
    Array2::from_shape_fn((focal.len(), obs.len()), |(o, i)| {
        let dx = focal[o][0] - obs[i][0];
        let dy = focal[o][1] - obs[i][1];
        dx.hypot(dy)
    })
}

/// Euclidean distances, max-scaled. See [`DistanceMatrix::build`].
pub fn build_distance_matrix(ds: &SpatialDataset) -> Result<DistanceMatrix> {
    DistanceMatrix::build(ds)
}

/// Unordered pairs of design columns that may not be selected together.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForbiddenPairs(BTreeSet<(usize, usize)>);

impl ForbiddenPairs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the pair in canonical `(min, max)` order. Self-pairs are ignored.
    pub fn insert(&mut self, j: usize, k: usize) {
        if j != k {
            self.0.insert((j.min(k), j.max(k)));
        }
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.0.contains(&(j.min(k), j.max(k)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when no pair lies entirely inside `cols`.
    pub fn allows(&self, cols: &[usize]) -> bool {
        self.0
            .iter()
            .all(|&(j, k)| !(cols.contains(&j) && cols.contains(&k)))
    }
}

impl FromIterator<(usize, usize)> for ForbiddenPairs {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        let mut pairs = ForbiddenPairs::new();
        for (j, k) in iter {
            pairs.insert(j, k);
        }
        pairs
    }
}

/// Every pair of free columns whose absolute Pearson correlation is at
/// least `rho`. Zero-variance columns and the intercept pair with nothing.
pub fn build_forbidden_pairs(ds: &SpatialDataset, rho: f64) -> ForbiddenPairs {
    let cols = ds.free_columns();
    let n = ds.n() as f64;
    let centred: Vec<Option<(Vec<f64>, f64)>> = cols
        .iter()
        .map(|&j| {
            let col = ds.x().column(j);
            let mean = col.sum() / n;
            let dev: Vec<f64> = col.iter().map(|v| v - mean).collect();
            let ss: f64 = dev.iter().map(|v| v * v).sum();
            (ss > 0.0).then_some((dev, ss.sqrt()))
        })
        .collect();

    let mut pairs = ForbiddenPairs::new();
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            let (Some((da, na)), Some((db, nb))) = (&centred[a], &centred[b]) else {
                continue;
            };
            let cov: f64 = da.iter().zip(db).map(|(u, v)| u * v).sum();
            let r = (cov / (na * nb)).clamp(-1.0, 1.0);
            // Rounding can leave an exact duplicate a hair under 1.
            if r.abs() >= rho || r.abs() >= 1.0 - 1e-12 {
                pairs.insert(cols[a], cols[b]);
            }
        }
    }
    pairs
}

/// Binary selection vector over design columns with cardinality `p`
/// (the intercept, when locked, is selected but not counted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetMask {
    z: Vec<bool>,
    p: usize,
    forbidden_pairs: ForbiddenPairs,
    intercept_locked: bool,
}

impl SubsetMask {
    pub fn new(
        z: Vec<bool>,
        forbidden_pairs: ForbiddenPairs,
        intercept_locked: bool,
    ) -> Result<Self> {
        if intercept_locked && !z.first().copied().unwrap_or(false) {
            return Err(Error::InvalidConfig(
                "locked intercept must be selected".into(),
            ));
        }
        let selected: Vec<usize> = z
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(j, _)| j)
            .collect();
        if let Some((j, k)) = forbidden_pairs
            .iter()
            .find(|&(j, k)| selected.contains(&j) && selected.contains(&k))
        {
            return Err(Error::InvalidConfig(format!(
                "columns {j} and {k} form a forbidden pair"
            )));
        }
        let p = selected.len() - usize::from(intercept_locked);
        Ok(SubsetMask {
            z,
            p,
            forbidden_pairs,
            intercept_locked,
        })
    }

    /// Mask over `m` columns with the given free columns selected (plus the
    /// intercept when `intercept_locked`).
    pub fn from_columns(
        m: usize,
        free_selected: &[usize],
        forbidden_pairs: ForbiddenPairs,
        intercept_locked: bool,
    ) -> Result<Self> {
        let mut z = vec![false; m];
        if intercept_locked && m > 0 {
            z[0] = true;
        }
        for &j in free_selected {
            if j >= m {
                return Err(Error::ShapeMismatch(format!(
                    "column {j} out of range for m={m}"
                )));
            }
            z[j] = true;
        }
        Self::new(z, forbidden_pairs, intercept_locked)
    }

    /// Every column selected: the full model.
    pub fn all(m: usize, intercept_locked: bool) -> Self {
        SubsetMask {
            z: vec![true; m],
            p: m - usize::from(intercept_locked),
            forbidden_pairs: ForbiddenPairs::new(),
            intercept_locked,
        }
    }

    pub fn z(&self) -> &[bool] {
        &self.z
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn forbidden_pairs(&self) -> &ForbiddenPairs {
        &self.forbidden_pairs
    }

    pub fn intercept_locked(&self) -> bool {
        self.intercept_locked
    }

    pub fn is_selected(&self, j: usize) -> bool {
        self.z.get(j).copied().unwrap_or(false)
    }

    /// Selected columns in ascending order, intercept included.
    pub fn columns(&self) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(j, _)| j)
            .collect()
    }

    /// Selected free columns (intercept excluded).
    pub fn free_columns(&self) -> Vec<usize> {
        let skip = usize::from(self.intercept_locked);
        self.columns().into_iter().filter(|&j| j >= skip).collect()
    }

    /// Sum of selected column indices; the tie-break key.
    pub fn index_sum(&self) -> usize {
        self.columns().iter().sum()
    }
}

/// `beta[o][j]` for every focal point and design column.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    beta: Array2<f64>,
}

impl CoefficientField {
    pub fn new(beta: Array2<f64>) -> Self {
        CoefficientField { beta }
    }

    /// Scatters per-focal coefficient vectors on `cols` into a `c x m` field.
    pub fn from_subset_rows(m: usize, cols: &[usize], rows: &[Vec<f64>]) -> Self {
        let mut beta = Array2::zeros((rows.len(), m));
        for (o, row) in rows.iter().enumerate() {
            for (&j, &b) in cols.iter().zip(row) {
                beta[[o, j]] = b;
            }
        }
        CoefficientField { beta }
    }

    pub fn beta(&self) -> &Array2<f64> {
        &self.beta
    }

    pub fn c(&self) -> usize {
        self.beta.nrows()
    }

    pub fn m(&self) -> usize {
        self.beta.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.beta.column(j).to_vec()
    }

    /// Local prediction of focal model `o` for a design row.
    pub fn predict(&self, o: usize, x_row: ArrayView1<'_, f64>) -> f64 {
        self.beta.row(o).dot(&x_row)
    }
}

/// One bandwidth shared by every focal point, or one per focal point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthMode {
    Global,
    Local,
}

impl fmt::Display for BandwidthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandwidthMode::Global => "global",
            BandwidthMode::Local => "local",
        })
    }
}

impl FromStr for BandwidthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Ok(BandwidthMode::Global),
            "local" => Ok(BandwidthMode::Local),
            other => Err(Error::InvalidConfig(format!(
                "unknown bandwidth mode `{other}`"
            ))),
        }
    }
}

/// Kernel decay rates `gamma` in inverse squared scaled distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthField {
    mode: BandwidthMode,
    gamma: Vec<f64>,
}

impl BandwidthField {
    pub fn global(gamma: f64) -> Result<Self> {
        Self::checked(BandwidthMode::Global, vec![gamma])
    }

    pub fn local(gamma: Vec<f64>) -> Result<Self> {
        Self::checked(BandwidthMode::Local, gamma)
    }

    fn checked(mode: BandwidthMode, gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::ShapeMismatch("empty bandwidth field".into()));
        }
        for &g in &gamma {
            if !g.is_finite() {
                return Err(Error::NonFinite("bandwidth".into()));
            }
            if g < 0.0 {
                return Err(Error::NegativeBandwidth(g));
            }
        }
        Ok(BandwidthField { mode, gamma })
    }

    pub fn mode(&self) -> BandwidthMode {
        self.mode
    }

    /// Bandwidth at focal point `o` (the shared value in global mode).
    pub fn gamma(&self, o: usize) -> f64 {
        match self.mode {
            BandwidthMode::Global => self.gamma[0],
            BandwidthMode::Local => self.gamma[o],
        }
    }

    /// Stored values: one entry in global mode, `c` in local mode.
    pub fn values(&self) -> &[f64] {
        &self.gamma
    }

    pub fn broadcast(&self, c: usize) -> Vec<f64> {
        (0..c).map(|o| self.gamma(o)).collect()
    }
}

/// How `MP_beta` searches the feasible masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetStrategy {
    Exhaustive,
    BranchAndBound,
    /// Exhaustive up to [`AUTO_EXHAUSTIVE_LIMIT`] masks, branch-and-bound above.
    Auto,
}

/// Largest `C(m_free, p)` the `auto` strategy still enumerates.
pub const AUTO_EXHAUSTIVE_LIMIT: u128 = 20_000;

impl FromStr for SubsetStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exhaustive" => Ok(SubsetStrategy::Exhaustive),
            "branch_and_bound" | "bnb" => Ok(SubsetStrategy::BranchAndBound),
            "auto" => Ok(SubsetStrategy::Auto),
            other => Err(Error::InvalidConfig(format!(
                "unknown subset strategy `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative objective gap that stops the alternating loop.
    pub theta: f64,
    pub max_adm_iters: usize,
    /// Absolute correlation at which two columns become a forbidden pair.
    pub rho: f64,
    /// Stationarity tolerance of the one-dimensional bandwidth solver.
    pub gamma_tol: f64,
    /// Diagonal jitter applied up front; the solver still falls back to
    /// 1e-10 and then 1e-6 on a singular normal matrix.
    pub wls_ridge: f64,
    pub subset_strategy: SubsetStrategy,
    pub standardize_x: bool,
    pub standardize_y: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta: 1e-6,
            max_adm_iters: 50,
            rho: 0.9,
            gamma_tol: 1e-10,
            wls_ridge: 0.0,
            subset_strategy: SubsetStrategy::Auto,
            standardize_x: false,
            standardize_y: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if self.max_adm_iters < 1 {
            return Err(Error::InvalidConfig(
                "max_adm_iters must be at least 1".into(),
            ));
        }
        if !(self.gamma_tol > 0.0) {
            return Err(Error::InvalidConfig("gamma_tol must be positive".into()));
        }
        if !(self.wls_ridge >= 0.0) {
            return Err(Error::InvalidConfig(
                "wls_ridge must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Which half of an alternating iteration produced a trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfStep {
    Beta,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub step: HalfStep,
    pub objective: f64,
}

/// Outcome of one integrated fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub selected: SubsetMask,
    pub beta: CoefficientField,
    pub gamma: BandwidthField,
    pub objective_trace: Vec<TraceEntry>,
    /// Final objective value.
    pub objective: f64,
    pub metrics: Metrics,
    /// Prediction for every observation from its nearest focal model.
    pub fitted: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn rss(&self) -> f64 {
        self.metrics.rss
    }

    pub fn r2(&self) -> f64 {
        self.metrics.r2
    }

    pub fn r2_adj(&self) -> Option<f64> {
        self.metrics.r2_adj
    }

    pub fn aicc(&self) -> Option<f64> {
        self.metrics.aicc
    }

    /// Names of the selected free columns.
    pub fn selected_names<'a>(&self, ds: &'a SpatialDataset) -> Vec<&'a str> {
        self.selected
            .free_columns()
            .into_iter()
            .map(|j| ds.var_names()[j].as_str())
            .collect()
    }
}
