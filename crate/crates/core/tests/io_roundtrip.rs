mod common;

use std::fs;

use common::{georgia, georgia_path, random_dataset};
use igwr::io::{write_dataset_csv, write_rss_vs_p, REPORT_SCHEMA};
use igwr::{
    build_distance_matrix, emit_report, igwr_fit, load_csv, sweep_p, BandwidthMode, SolverConfig,
    XColumns,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn read_rows(path: &std::path::Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn written_dataset_reads_back_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ds = random_dataset(&mut rng, 25, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_dataset_csv(&ds, &path, "resp", ("E", "N")).unwrap();
    let back = load_csv(&path, "resp", &XColumns::All, ("E", "N"), None).unwrap();
    assert_eq!(back.var_names(), ds.var_names());
    assert_eq!(back.y(), ds.y());
    assert_eq!(back.x(), ds.x());
    assert_eq!(back.coords(), ds.coords());
}

#[test]
fn focal_file_sets_the_focal_grid() {
    let dir = tempfile::tempdir().unwrap();
    let focal = dir.path().join("focal.csv");
    fs::write(&focal, "X,Y\n1000000,1000000\n1200000,1300000\n").unwrap();
    let x = XColumns::parse("PctFB, PctRural");
    let ds = load_csv(&georgia_path(), "PctBach", &x, ("X", "Y"), Some(&focal)).unwrap();
    assert_eq!((ds.n(), ds.m(), ds.c()), (159, 3, 2));
}

#[test]
fn missing_column_is_an_input_error() {
    let err = load_csv(&georgia_path(), "Nope", &XColumns::All, ("X", "Y"), None).unwrap_err();
    assert!(!err.is_numerical());
    assert!(err.to_string().contains("Nope"));
}

#[test]
fn report_files_match_the_fit() {
    let ds = georgia();
    let dm = build_distance_matrix(&ds).unwrap();
    let cfg = SolverConfig::default();
    let fit = igwr_fit(&ds, &dm, 3, BandwidthMode::Global, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(dir.path(), &ds, &fit, &cfg, json!({"data": "georgia"})).unwrap();

    let report: Value =
        serde_json::from_str(&fs::read_to_string(&files.report_json).unwrap()).unwrap();
    assert_eq!(report["schema"], REPORT_SCHEMA);
    assert_eq!(report["p"], 3);
    assert_eq!(report["selected"].as_array().unwrap().len(), 3);
    assert_eq!(report["metrics"]["rss"].as_f64().unwrap(), fit.rss());

    let (header, rows) = read_rows(&files.coefficients_csv);
    assert_eq!(rows.len(), ds.c());
    assert_eq!(header.len(), 3 + 4);
    assert_eq!(header[3], "Intercept");

    // RSS recomputed from the written coefficients (focal points are the observations)
    let cols: Vec<usize> = header[3..]
        .iter()
        .map(|h| ds.column_index(h).unwrap())
        .collect();
    let rss: f64 = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let pred: f64 = cols
                .iter()
                .zip(&row[3..])
                .map(|(&j, b)| ds.x()[[i, j]] * b.parse::<f64>().unwrap())
                .sum();
            (ds.y()[i] - pred).powi(2)
        })
        .sum();
    assert!((rss - fit.rss()).abs() <= 1e-9 * rss);

    let (header, rows) = read_rows(&files.bandwidths_csv);
    assert_eq!(header, ["focal_id", "x", "y", "gamma"]);
    assert_eq!(rows.len(), ds.c());
    assert!(rows
        .iter()
        .all(|r| r[3].parse::<f64>().unwrap() == fit.gamma.values()[0]));
}

#[test]
fn report_is_deterministic_apart_from_timestamp() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ds = random_dataset(&mut rng, 30, 4);
    let dm = build_distance_matrix(&ds).unwrap();
    let cfg = SolverConfig::default();
    let mut bodies = Vec::new();
    for _ in 0..2 {
        let fit = igwr_fit(&ds, &dm, 2, BandwidthMode::Local, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(dir.path(), &ds, &fit, &cfg, Value::Null).unwrap();
        let mut v: Value =
            serde_json::from_str(&fs::read_to_string(&files.report_json).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("generated_at");
        let coef = fs::read_to_string(&files.coefficients_csv).unwrap();
        bodies.push((v, coef));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn rss_table_has_one_row_per_p() {
    let ds = georgia();
    let dm = build_distance_matrix(&ds).unwrap();
    let sweep = sweep_p(
        &ds,
        &dm,
        1..=6,
        BandwidthMode::Global,
        &SolverConfig::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rss_vs_p.csv");
    write_rss_vs_p(&path, &ds, &sweep).unwrap();
    let (header, rows) = read_rows(&path);
    assert_eq!(header[0], "p");
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| r[8] == "true").count(), 1);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (k + 1).to_string());
        assert_eq!(r[9].split(';').count(), k + 1);
    }
}
