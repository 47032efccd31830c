//! CSV ingestion and report emission.
//!
//! Output floats are written with 17 significant digits so every value
//! reads back bit-identical.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use serde::Serialize;
use serde_json::json;

use crate::adm::Sweep;
use crate::error::{Error, Result};
use crate::metrics::{avg_symmetric_difference, range_to_mean, Metrics};
use crate::model::{
    CoefficientField, DistanceMatrix, FitReport, ForbiddenPairs, Point, SolverConfig,
    SpatialDataset, SubsetMask,
};

pub const REPORT_SCHEMA: &str = "igwr-report/1";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Which columns become independent variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XColumns {
    /// Every column except the response and the coordinates.
    All,
    Names(Vec<String>),
}

impl XColumns {
    /// Parses `all` or a comma-separated list.
    pub fn parse(spec: &str) -> Self {
        if spec.trim().eq_ignore_ascii_case("all") {
            XColumns::All
        } else {
            XColumns::Names(
                spec.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
            )
        }
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            return Err(Error::EmptyFile(path.to_path_buf()));
        }
        Ok(Table { headers, rows })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let cell = row.get(j).map(String::as_str).unwrap_or("");
                cell.parse::<f64>().map_err(|_| Error::UnparseableCell {
                    row: r + 1,
                    column: name.to_string(),
                    value: cell.to_string(),
                })
            })
            .collect()
    }

    fn points(&self, coord_cols: (&str, &str)) -> Result<Vec<Point>> {
        let xs = self.column(coord_cols.0)?;
        let ys = self.column(coord_cols.1)?;
        Ok(xs.into_iter().zip(ys).map(|(a, b)| [a, b]).collect())
    }
}

/// Reads a dataset: response `y_col`, predictors `x_cols` (an intercept is
/// prepended), planar coordinates `coord_cols`. `focal_path`, when given,
/// holds focal-point coordinates under the same coordinate column names.
pub fn load_csv(
    path: &Path,
    y_col: &str,
    x_cols: &XColumns,
    coord_cols: (&str, &str),
    focal_path: Option<&Path>,
) -> Result<SpatialDataset> {
    let table = Table::read(path)?;
    let y = table.column(y_col)?;
    let names: Vec<String> = match x_cols {
        XColumns::All => table
            .headers
            .iter()
            .filter(|h| *h != y_col && *h != coord_cols.0 && *h != coord_cols.1)
            .cloned()
            .collect(),
        XColumns::Names(v) => v.clone(),
    };
    let n = y.len();
    let mut x = Array2::zeros((n, names.len()));
    for (j, name) in names.iter().enumerate() {
        for (i, v) in table.column(name)?.into_iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    let coords = table.points(coord_cols)?;
    let focal = match focal_path {
        Some(p) => Some(Table::read(p)?.points(coord_cols)?),
        None => None,
    };
    SpatialDataset::with_intercept(y, x, coords, focal, names)
}

/// Writes a dataset in the layout [`load_csv`] reads: response, free
/// predictors, then the two coordinate columns.
pub fn write_dataset_csv(
    ds: &SpatialDataset,
    path: &Path,
    y_col: &str,
    coord_cols: (&str, &str),
) -> Result<()> {
    let mut w = writer(path)?;
    let free = ds.free_columns();
    let mut header = vec![y_col.to_string()];
    header.extend(free.iter().map(|&j| ds.var_names()[j].clone()));
    header.push(coord_cols.0.to_string());
    header.push(coord_cols.1.to_string());
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec = vec![fmt_f64(ds.y()[i])];
        rec.extend(free.iter().map(|&j| fmt_f64(ds.x()[[i, j]])));
        rec.push(fmt_f64(ds.coords()[i][0]));
        rec.push(fmt_f64(ds.coords()[i][1]));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub report_json: PathBuf,
    pub coefficients_csv: PathBuf,
    pub bandwidths_csv: PathBuf,
}

/// Writes `report.json`, `coefficients.csv` and `bandwidths.csv` into
/// `out_dir`. `source` is echoed into the JSON (input path, column choices).
pub fn emit_report(
    out_dir: &Path,
    ds: &SpatialDataset,
    report: &FitReport,
    cfg: &SolverConfig,
    source: serde_json::Value,
) -> Result<EmittedFiles> {
    ensure_dir(out_dir)?;
    let files = EmittedFiles {
        report_json: out_dir.join("report.json"),
        coefficients_csv: out_dir.join("coefficients.csv"),
        bandwidths_csv: out_dir.join("bandwidths.csv"),
    };
    let body = report_json(ds, report, cfg, source);
    write_json(&files.report_json, &body)?;
    write_coefficients(&files.coefficients_csv, ds, &report.beta, &report.selected)?;
    write_bandwidths(&files.bandwidths_csv, ds, &report.gamma.broadcast(ds.c()))?;
    Ok(files)
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// JSON body of a report, `generated_at` in seconds since the Unix epoch.
pub fn report_json(
    ds: &SpatialDataset,
    report: &FitReport,
    cfg: &SolverConfig,
    source: serde_json::Value,
) -> serde_json::Value {
    let gammas = report.gamma.values();
    let gmin = gammas.iter().copied().fold(f64::INFINITY, f64::min);
    let gmax = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gmean = gammas.iter().sum::<f64>() / gammas.len() as f64;
    json!({
        "schema": REPORT_SCHEMA,
        "generated_at": timestamp(),
        "source": source,
        "config": cfg,
        "data": {
            "n": ds.n(),
            "m": ds.m(),
            "c": ds.c(),
            "variables": ds.var_names(),
        },
        "p": report.selected.p(),
        "selected": report.selected_names(ds),
        "gamma": {
            "mode": report.gamma.mode(),
            "min": gmin,
            "max": gmax,
            "mean": gmean,
        },
        "metrics": report.metrics,
        "objective": report.objective,
        "iterations": report.iterations,
        "converged": report.converged,
        "objective_trace": report.objective_trace,
        "warnings": report.warnings,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `focal_id, x, y` plus one column per selected design column.
pub fn write_coefficients(
    path: &Path,
    ds: &SpatialDataset,
    beta: &CoefficientField,
    mask: &SubsetMask,
) -> Result<()> {
    let mut w = writer(path)?;
    let cols = mask.columns();
    let mut header = vec!["focal_id".to_string(), "x".into(), "y".into()];
    header.extend(cols.iter().map(|&j| ds.var_names()[j].clone()));
    w.write_record(&header)?;
    for (o, pt) in ds.focal_coords().iter().enumerate() {
        let mut rec = vec![o.to_string(), fmt_f64(pt[0]), fmt_f64(pt[1])];
        rec.extend(cols.iter().map(|&j| fmt_f64(beta.beta()[[o, j]])));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `focal_id, x, y, gamma`.
pub fn write_bandwidths(path: &Path, ds: &SpatialDataset, gamma: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["focal_id", "x", "y", "gamma"])?;
    for (o, pt) in ds.focal_coords().iter().enumerate() {
        w.write_record([
            o.to_string(),
            fmt_f64(pt[0]),
            fmt_f64(pt[1]),
            fmt_f64(gamma[o]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per `p`: fit statistics and the selected variables.
pub fn write_rss_vs_p(path: &Path, ds: &SpatialDataset, sweep: &Sweep) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "p",
        "rss",
        "r2",
        "r2_adj",
        "aicc",
        "objective",
        "iterations",
        "converged",
        "recommended",
        "selected",
    ])?;
    for (p, r) in &sweep.reports {
        w.write_record([
            p.to_string(),
            fmt_f64(r.rss()),
            fmt_f64(r.r2()),
            fmt_opt(r.r2_adj()),
            fmt_opt(r.aicc()),
            fmt_f64(r.objective),
            r.iterations.to_string(),
            r.converged.to_string(),
            (*p == sweep.recommended).to_string(),
            r.selected_names(ds).join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One method in a side-by-side comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: String,
    pub p: Option<usize>,
    /// Mean bandwidth.
    pub gamma: Option<f64>,
    pub metrics: Option<Metrics>,
    pub avg_symmetric_difference: Option<f64>,
    /// Range-to-mean ratio per variable name; `None` when undefined.
    pub range_to_mean: BTreeMap<String, Option<f64>>,
}

impl ComparisonRow {
    /// Row for a model with one subset shared by every focal point.
    pub fn from_field(
        method: &str,
        ds: &SpatialDataset,
        mask: &SubsetMask,
        beta: &CoefficientField,
        gamma: Option<f64>,
        metrics: Option<Metrics>,
    ) -> Self {
        let range = mask
            .columns()
            .into_iter()
            .map(|j| (ds.var_names()[j].clone(), range_to_mean(beta, j).ok()))
            .collect();
        let local = vec![mask.clone(); beta.c()];
        ComparisonRow {
            method: method.to_string(),
            p: Some(mask.p()),
            gamma,
            metrics,
            avg_symmetric_difference: avg_symmetric_difference(&local).ok(),
            range_to_mean: range,
        }
    }
}

/// Writes comparison rows with one `rtm_<var>` column per variable in `vars`.
pub fn write_comparison(path: &Path, rows: &[ComparisonRow], vars: &[String]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = [
        "method",
        "p",
        "gamma",
        "rss",
        "r2",
        "r2_adj",
        "r2_adj_effective",
        "aicc",
        "avg_symmetric_difference",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(vars.iter().map(|v| format!("rtm_{v}")));
    w.write_record(&header)?;
    for r in rows {
        let m = r.metrics.as_ref();
        let mut rec = vec![
            r.method.clone(),
            r.p.map(|p| p.to_string()).unwrap_or_default(),
            fmt_opt(r.gamma),
            fmt_opt(m.map(|m| m.rss)),
            fmt_opt(m.map(|m| m.r2)),
            fmt_opt(m.and_then(|m| m.r2_adj)),
            fmt_opt(m.and_then(|m| m.r2_adj_effective)),
            fmt_opt(m.and_then(|m| m.aicc)),
            fmt_opt(r.avg_symmetric_difference),
        ];
        rec.extend(
            vars.iter()
                .map(|v| fmt_opt(r.range_to_mean.get(v).copied().flatten())),
        );
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Coefficients of an externally fitted model, read from a CSV with
/// columns `method, focal_id, var, beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalBaseline {
    pub method: String,
    pub vars: Vec<String>,
    /// `focal x var`; missing entries are zero.
    pub beta: Array2<f64>,
}

impl ExternalBaseline {
    /// Comparison row: range-to-mean per variable and the symmetric
    /// difference of the non-zero patterns across focal points.
    pub fn comparison_row(&self) -> ComparisonRow {
        let field = CoefficientField::new(self.beta.clone());
        let range = self
            .vars
            .iter()
            .enumerate()
            .map(|(j, v)| (v.clone(), range_to_mean(&field, j).ok()))
            .collect();
        let masks: Vec<SubsetMask> = self
            .beta
            .rows()
            .into_iter()
            .filter_map(|row| {
                SubsetMask::new(
                    row.iter().map(|&b| b != 0.0).collect(),
                    ForbiddenPairs::new(),
                    false,
                )
                .ok()
            })
            .collect();
        ComparisonRow {
            method: self.method.clone(),
            p: None,
            gamma: None,
            metrics: None,
            avg_symmetric_difference: avg_symmetric_difference(&masks).ok(),
            range_to_mean: range,
        }
    }
}

pub fn load_external_baseline(path: &Path) -> Result<Vec<ExternalBaseline>> {
    let table = Table::read(path)?;
    let (im, io, iv) = (
        table.index("method")?,
        table.index("focal_id")?,
        table.index("var")?,
    );
    let betas = table.column("beta")?;
    let mut grouped: BTreeMap<String, BTreeMap<(usize, String), f64>> = BTreeMap::new();
    for (r, row) in table.rows.iter().enumerate() {
        let focal: usize = row[io].parse().map_err(|_| Error::UnparseableCell {
            row: r + 1,
            column: "focal_id".into(),
            value: row[io].clone(),
        })?;
        grouped
            .entry(row[im].clone())
            .or_default()
            .insert((focal, row[iv].clone()), betas[r]);
    }
    Ok(grouped
        .into_iter()
        .map(|(method, entries)| {
            let mut vars: Vec<String> = entries.keys().map(|(_, v)| v.clone()).collect();
            vars.sort();
            vars.dedup();
            let c = entries.keys().map(|(o, _)| o + 1).max().unwrap_or(0);
            let mut beta = Array2::zeros((c, vars.len()));
            for ((o, v), b) in entries {
                let j = vars.iter().position(|x| *x == v).expect("collected above");
                beta[[o, j]] = b;
            }
            ExternalBaseline { method, vars, beta }
        })
        .collect())
}

/// Distance scale echo for reports.
pub fn distance_summary(dm: &DistanceMatrix) -> serde_json::Value {
    json!({ "d_raw_max": dm.d_raw_max(), "c": dm.c(), "n": dm.n() })
}
