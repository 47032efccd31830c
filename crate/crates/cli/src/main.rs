use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use igwr::io::{
    distance_summary, load_external_baseline, write_comparison, write_rss_vs_p, ComparisonRow,
};
use igwr::model::SubsetStrategy;
use igwr::{
    bgwr_fit, build_distance_matrix, emit_report, forward_selection, igwr_fit, load_csv, sweep_p,
    BandwidthMode, Criterion, Error, SolverConfig, SpatialDataset, SubsetMask, XColumns,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "igwr",
    version,
    about = "Integrated subset and bandwidth selection for GWR"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model with `p` free variables.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: usize,
    },
    /// Fit every `p` in a range and recommend one.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        p_min: usize,
        /// Defaults to the number of free predictors.
        #[arg(long)]
        p_max: Option<usize>,
        /// Smallest RSS decrease that still justifies another variable.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Compare the integrated fit with basic GWR and forward selection.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: usize,
        /// Coefficients of external models (`method,focal_id,var,beta`).
        #[arg(long)]
        external: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    y: String,
    /// Comma-separated predictor names, or `all`.
    #[arg(long, default_value = "all")]
    x: String,
    /// Coordinate columns as `X,Y`.
    #[arg(long, default_value = "X,Y")]
    coords: String,
    /// CSV of focal points with the same coordinate columns.
    #[arg(long)]
    focal: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Global)]
    mode: Mode,
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    #[arg(long, default_value_t = 1e-6)]
    theta: f64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = Strategy::Auto)]
    subset_strategy: Strategy,
    #[arg(long)]
    standardize_x: bool,
    #[arg(long)]
    standardize_y: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Global,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Exhaustive,
    BranchAndBound,
    Auto,
}

impl Common {
    fn mode(&self) -> BandwidthMode {
        match self.mode {
            Mode::Global => BandwidthMode::Global,
            Mode::Local => BandwidthMode::Local,
        }
    }

    fn config(&self) -> SolverConfig {
        SolverConfig {
            theta: self.theta,
            max_adm_iters: self.max_iters,
            rho: self.rho,
            subset_strategy: match self.subset_strategy {
                Strategy::Exhaustive => SubsetStrategy::Exhaustive,
                Strategy::BranchAndBound => SubsetStrategy::BranchAndBound,
                Strategy::Auto => SubsetStrategy::Auto,
            },
            standardize_x: self.standardize_x,
            standardize_y: self.standardize_y,
            ..SolverConfig::default()
        }
    }

    fn coord_cols(&self) -> Result<(&str, &str), Error> {
        match self.coords.split_once(',') {
            Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                Ok((a.trim(), b.trim()))
            }
            _ => Err(Error::InvalidConfig(format!(
                "--coords expects two names, got {:?}",
                self.coords
            ))),
        }
    }

    fn load(&self) -> Result<SpatialDataset, Error> {
        load_csv(
            &self.data,
            &self.y,
            &XColumns::parse(&self.x),
            self.coord_cols()?,
            self.focal.as_deref(),
        )
    }

    fn source(&self) -> serde_json::Value {
        json!({
            "data": self.data,
            "y": self.y,
            "x": self.x,
            "coords": self.coords,
            "focal": self.focal,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fit { common, p } => fit(&common, p),
        Command::Sweep {
            common,
            p_min,
            p_max,
            epsilon,
        } => sweep(&common, p_min, p_max, epsilon),
        Command::Bench {
            common,
            p,
            external,
        } => bench(&common, p, external.as_deref()),
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn fit(common: &Common, p: usize) -> Result<(), Error> {
    let ds = common.load()?;
    let dm = build_distance_matrix(&ds)?;
    let cfg = common.config();
    let report = igwr_fit(&ds, &dm, p, common.mode(), &cfg)?;
    warn_all(&report.warnings);
    let mut source = common.source();
    source["distances"] = distance_summary(&dm);
    let files = emit_report(&common.out, &ds, &report, &cfg, source)?;
    println!(
        "p={} selected=[{}] rss={:.6} r2={:.4} iterations={} converged={}",
        p,
        report.selected_names(&ds).join(", "),
        report.rss(),
        report.r2(),
        report.iterations,
        report.converged
    );
    println!("wrote {}", files.report_json.display());
    Ok(())
}

fn sweep(common: &Common, p_min: usize, p_max: Option<usize>, epsilon: f64) -> Result<(), Error> {
    let ds = common.load()?;
    let dm = build_distance_matrix(&ds)?;
    let cfg = common.config();
    let p_max = p_max.unwrap_or(ds.m_free());
    let mut sw = sweep_p(&ds, &dm, p_min..=p_max, common.mode(), &cfg)?;
    if epsilon > 0.0 {
        let ps: Vec<usize> = sw.reports.iter().map(|(p, _)| *p).collect();
        sw.recommended = igwr::recommend_p(&ps, &sw.rss(), epsilon);
    }
    for (p, report) in &sw.reports {
        warn_all(&report.warnings);
        emit_report(
            &common.out.join(format!("p{p}")),
            &ds,
            report,
            &cfg,
            common.source(),
        )?;
        println!(
            "p={p} rss={:.6} selected=[{}]",
            report.rss(),
            report.selected_names(&ds).join(", ")
        );
    }
    let path = common.out.join("rss_vs_p.csv");
    write_rss_vs_p(&path, &ds, &sw)?;
    println!("recommended p={}", sw.recommended);
    println!("wrote {}", path.display());
    Ok(())
}

fn bench(common: &Common, p: usize, external: Option<&Path>) -> Result<(), Error> {
    let raw = common.load()?;
    let dm = build_distance_matrix(&raw)?;
    let cfg = common.config();
    let ds = raw.standardized(cfg.standardize_x, cfg.standardize_y)?;
    let mut rows = Vec::new();

    for mode in [BandwidthMode::Global, BandwidthMode::Local] {
        let r = igwr_fit(&raw, &dm, p, mode, &cfg)?;
        warn_all(&r.warnings);
        let gamma = r.gamma.values().iter().sum::<f64>() / r.gamma.values().len() as f64;
        rows.push(ComparisonRow::from_field(
            &format!("igwr_{mode}"),
            &ds,
            &r.selected,
            &r.beta,
            Some(gamma),
            Some(r.metrics.clone()),
        ));
    }

    let all = SubsetMask::all(ds.m(), true);
    for criterion in [Criterion::Cv, Criterion::Aicc] {
        let b = bgwr_fit(&ds, &dm, &all, criterion)?;
        warn_all(&b.warnings);
        rows.push(ComparisonRow::from_field(
            &b.method.to_string(),
            &ds,
            &b.subset,
            &b.beta,
            Some(b.bandwidth),
            Some(b.metrics.clone()),
        ));
    }

    let fs = forward_selection(&ds, &dm, ds.m_free(), Criterion::Aicc, cfg.rho)?;
    let step = &fs.steps[fs.stop_p - 1];
    warn_all(&step.warnings);
    rows.push(ComparisonRow::from_field(
        &step.method.to_string(),
        &ds,
        &step.subset,
        &step.beta,
        Some(step.bandwidth),
        Some(step.metrics.clone()),
    ));
    println!(
        "forward selection order: {}",
        fs.order_names(&ds).join(", ")
    );

    if let Some(path) = external {
        rows.extend(
            load_external_baseline(path)?
                .iter()
                .map(|e| e.comparison_row()),
        );
    }

    std::fs::create_dir_all(&common.out).map_err(|source| Error::Io {
        path: common.out.clone(),
        source,
    })?;
    let path = common.out.join("comparison.csv");
    write_comparison(&path, &rows, ds.var_names())?;
    for r in &rows {
        let m = r.metrics.as_ref();
        println!(
            "{:<20} rss={} r2_adj={}",
            r.method,
            m.map(|m| format!("{:.4}", m.rss))
                .unwrap_or_else(|| "-".into()),
            m.and_then(|m| m.r2_adj)
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
