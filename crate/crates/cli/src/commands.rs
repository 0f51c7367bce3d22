use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadmargin::frontier::{sweep_with, FrontierError, FrontierSet, RecordKind, SweepOptions};
use quadmargin::linalg::Matrix;
use quadmargin::market_data::{compute_returns, estimate_stats, load_prices, AssetStats, CsvLayout, DataError};
use quadmargin::orthant::{enumerate_orthants, multiplicity_scan, MultiplicityReport, MultiplicityRow, OrthantError, MAX_ORTHANT_ASSETS};
use quadmargin::solver::{SolverConfig, SolverError};
use quadmargin::synthetic::synthetic_prices;
use thiserror::Error;

use crate::artifacts::{self, StatsFile, Summary};
use crate::svg::{self, Figure, Point, Series};

#[derive(Debug, Parser)]
#[command(name = "quadmargin", version, about = "Mean-variance portfolios under a quadratic margin constraint")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate mean returns and covariance from a price CSV into stats.json.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Sweep λ and write frontier.csv, summary.json and optional figures.
    Frontier(SweepArgs),
    /// Count local optima under the absolute-value margin constraint.
    Baseline(BaselineArgs),
    /// Run estimate and frontier with figures, then print a summary.
    Report(SweepArgs),
    /// Write a seeded synthetic price history to prices.csv.
    Synth {
        #[arg(long, default_value_t = 12)]
        assets: usize,
        #[arg(long, default_value_t = 301)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Price CSV, or a stats.json written by `estimate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub lambda_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub wealth: f64,
    /// Residual tolerance for accepting a stationary portfolio.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write fig3.svg and fig4.svg.
    #[arg(long)]
    pub svg: bool,
    /// Let real and imaginary parts of complex solutions compete for max Sharpe.
    #[arg(long)]
    pub include_complex_sharpe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Instance {
    /// Seeded random covariance and returns.
    Random,
    /// `S = I`, `r = 0`.
    Identity,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    /// Inclusive asset-count range such as `2-10`, `2..10` or `5`.
    #[arg(long, default_value = "2-10", value_parser = parse_range)]
    pub n_range: (usize, usize),
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub wealth: f64,
    #[arg(long, value_enum, default_value_t = Instance::Random)]
    pub instance: Instance,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let s = s.trim();
    let (a, b) = if let Some((a, b)) = s.split_once("..=") {
        (a, b)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b)
    } else if let Some((a, b)) = s.split_once('-') {
        (a, b)
    } else {
        (s, s)
    };
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("bad range bound `{x}`"));
    let (lo, hi) = (num(a)?, num(b)?);
    if lo == 0 || lo > hi {
        return Err(format!("range `{s}` must satisfy 1 <= lo <= hi"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Data { path: PathBuf, source: DataError },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
    #[error(transparent)]
    Orthant(#[from] OrthantError),
    #[error("artifact check failed for {path}: {message}")]
    Validation { path: PathBuf, message: String },
}

impl CliError {
    /// 2 for bad input or arguments, 1 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Data { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Frontier(FrontierError::Solver {
                source: SolverError::InvalidConfig(_),
                ..
            }) => 2,
            CliError::Orthant(
                OrthantError::TooManyAssets { .. }
                | OrthantError::LambdaOutOfRange(_)
                | OrthantError::InvalidBudget { .. },
            ) => 2,
            _ => 1,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Estimate { input, output_dir } => {
            let stats = load_input(input)?;
            write_stats(&stats, output_dir)?;
            Ok(())
        }
        Command::Frontier(args) => {
            let stats = load_input(&args.input)?;
            frontier(&stats, args)?;
            Ok(())
        }
        Command::Report(args) => {
            let stats = load_input(&args.input)?;
            write_stats(&stats, &args.output_dir)?;
            let args = SweepArgs { svg: true, ..args.clone() };
            let (fs, summary) = frontier(&stats, &args)?;
            print_report(&stats, &fs, &summary);
            Ok(())
        }
        Command::Baseline(args) => baseline(args),
        Command::Synth {
            assets,
            days,
            seed,
            output_dir,
        } => synth(*assets, *days, *seed, output_dir),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn check(path: &Path, ok: bool, message: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation {
            path: path.to_path_buf(),
            message: message(),
        })
    }
}

fn reread(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads stats.json when the extension is `.json`, otherwise a price CSV.
pub fn load_input(path: &Path) -> Result<AssetStats<f64>, CliError> {
    let bytes = read(path)?;
    let data_err = |source| CliError::Data {
        path: path.to_path_buf(),
        source,
    };
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let file: StatsFile = serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        file.into_stats().map_err(data_err)
    } else {
        let prices = load_prices::<f64, _>(bytes.as_slice(), &CsvLayout::default()).map_err(data_err)?;
        estimate_stats(&compute_returns(&prices)).map_err(data_err)
    }
}

fn write_stats(stats: &AssetStats<f64>, dir: &Path) -> Result<(), CliError> {
    let path = write(dir, artifacts::STATS_FILE, &artifacts::stats_json(stats))?;
    let back: StatsFile = serde_json::from_str(&reread(&path)?).map_err(|e| CliError::Validation {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let same = back.into_stats().is_ok_and(|s| &s == stats);
    check(&path, same, || "stats do not re-load bit-identically".into())
}

fn solver_config(args: &SweepArgs) -> Result<SolverConfig<f64>, CliError> {
    let mut cfg = SolverConfig {
        gamma: args.gamma,
        wealth: args.wealth,
        lambda_steps: args.lambda_steps,
        ..SolverConfig::default()
    };
    if let Some(t) = args.tol {
        cfg.residual_tol = t;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn frontier(stats: &AssetStats<f64>, args: &SweepArgs) -> Result<(FrontierSet<f64>, Summary), CliError> {
    let cfg = solver_config(args)?;
    let opts = SweepOptions {
        sharpe_includes_complex: args.include_complex_sharpe,
    };
    let fs = sweep_with(stats, &cfg, opts)?;
    let n = stats.n_assets();
    let dir = &args.output_dir;

    let csv_path = write(dir, artifacts::FRONTIER_FILE, &artifacts::frontier_csv(&fs, n))?;
    let text = reread(&csv_path)?;
    let parsed = artifacts::parse_frontier_csv(&text).map_err(|message| CliError::Validation {
        path: csv_path.clone(),
        message,
    })?;
    check(&csv_path, parsed.0 == n && parsed.1.len() == fs.records.len(), || {
        format!("{} rows for {} records", parsed.1.len(), fs.records.len())
    })?;

    let summary = Summary::new(&fs, &cfg, n);
    let sum_path = write(dir, artifacts::SUMMARY_FILE, &summary.to_json())?;
    let back: Result<Summary, _> = serde_json::from_str(&reread(&sum_path)?);
    check(&sum_path, back.is_ok_and(|b| b == summary), || "summary does not re-load".into())?;

    if args.svg {
        let (fig3, fig4) = figures(stats, &fs, &cfg);
        for (name, body) in [(artifacts::FIG3_FILE, fig3), (artifacts::FIG4_FILE, fig4)] {
            let path = write(dir, name, &body)?;
            let text = reread(&path)?;
            check(&path, text.starts_with("<svg") && text.trim_end().ends_with("</svg>"), || {
                "truncated svg".into()
            })?;
        }
    }
    Ok((fs, summary))
}

fn point(i: usize, fs: &FrontierSet<f64>) -> Point {
    let r = &fs.records[i];
    Point {
        row: Some(i),
        s: r.risk,
        rho: r.ret,
    }
}

/// Complex-part cloud and real-solution cloud with the max-Sharpe marker.
pub fn figures(stats: &AssetStats<f64>, fs: &FrontierSet<f64>, cfg: &SolverConfig<f64>) -> (String, String) {
    let pick = |kind: RecordKind| -> Vec<Point> {
        fs.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.accepted && r.kind == kind)
            .map(|(i, _)| point(i, fs))
            .collect()
    };
    let fig3 = Figure {
        title: "Complex solutions: real parts (blue) and imaginary parts (red)",
        series: vec![
            Series {
                id: "real-part",
                color: svg::BLUE,
                radius: 1.2,
                points: pick(RecordKind::RealPart),
            },
            Series {
                id: "imag-part",
                color: svg::RED,
                radius: 1.2,
                points: pick(RecordKind::ImagPart),
            },
        ],
        marker: None,
    };
    // each asset alone, scaled to the norm budget
    let root_k = cfg.norm_budget().sqrt();
    let assets = (0..stats.n_assets())
        .map(|i| Point {
            row: None,
            s: root_k * stats.covariance()[(i, i)].sqrt(),
            rho: root_k * stats.mean()[i].abs(),
        })
        .collect();
    let fig4 = Figure {
        title: "Real solutions with the maximum-Sharpe portfolio SP",
        series: vec![
            Series {
                id: "real",
                color: svg::BLUE,
                radius: 1.5,
                points: pick(RecordKind::Real),
            },
            Series {
                id: "assets",
                color: svg::GRAY,
                radius: 3.0,
                points: assets,
            },
        ],
        marker: fs.max_sharpe_index.map(|i| point(i, fs)),
    };
    (svg::render(&fig3), svg::render(&fig4))
}

fn print_report(stats: &AssetStats<f64>, fs: &FrontierSet<f64>, s: &Summary) {
    println!("assets               {}", s.n_assets);
    println!("lambda steps         {}", s.lambda_steps);
    println!("eigenvalues examined {}", s.eigenvalues_examined);
    println!("real roots           {}", s.real_roots);
    println!("complex roots        {}", s.complex_roots);
    println!("spurious roots       {}", s.spurious_roots);
    println!("rejected roots       {}", s.rejected_roots);
    println!("records              {}", s.records);
    match fs.max_sharpe_index.map(|i| &fs.records[i]) {
        Some(r) => {
            println!(
                "max Sharpe           {} at lambda {} (s = {}, rho = {})",
                r.sharpe.unwrap_or(f64::NAN),
                r.lambda,
                r.risk,
                r.ret
            );
            for (t, w) in stats.tickers().iter().zip(&r.weights) {
                println!("  {t:<10} {w:>12.6}");
            }
        }
        None => println!("max Sharpe           none (no record with positive risk)"),
    }
}

fn baseline(args: &BaselineArgs) -> Result<(), CliError> {
    let (lo, hi) = args.n_range;
    if hi > MAX_ORTHANT_ASSETS {
        return Err(OrthantError::TooManyAssets {
            n: hi,
            cap: MAX_ORTHANT_ASSETS,
        }
        .into());
    }
    let report = match args.instance {
        Instance::Random => multiplicity_scan(lo..=hi, args.seed, args.lambda, args.gamma, args.wealth)?,
        Instance::Identity => {
            let mut rows = Vec::new();
            for n in lo..=hi {
                let st = AssetStats::unnamed(vec![0.0; n], Matrix::identity(n), 0)
                    .expect("identity covariance is valid");
                let e = enumerate_orthants(&st, args.lambda, args.gamma, args.wealth)?;
                rows.push(MultiplicityRow {
                    n,
                    count: e.count(),
                    distinct_objectives: e.distinct_objectives(),
                    log_count: (e.count() as f64).ln(),
                });
            }
            MultiplicityReport { rows, seed: args.seed }
        }
    };
    let path = write(&args.output_dir, artifacts::MULTIPLICITY_FILE, &artifacts::multiplicity_csv(&report))?;
    let lines = reread(&path)?.lines().count();
    check(&path, lines == report.rows.len() + 1, || format!("{lines} lines"))
}

fn synth(assets: usize, days: usize, seed: u64, dir: &Path) -> Result<(), CliError> {
    if assets == 0 {
        return Err(CliError::Usage("--assets must be at least 1".into()));
    }
    let pt = synthetic_prices::<f64>(assets, days, seed).map_err(|source| CliError::Data {
        path: dir.join("prices.csv"),
        source,
    })?;
    let mut out = String::from("date");
    for t in pt.tickers() {
        out.push(',');
        out.push_str(t);
    }
    out.push('\n');
    for (j, d) in pt.dates().iter().enumerate() {
        out.push_str(d);
        for i in 0..pt.n_assets() {
            out.push(',');
            out.push_str(&pt.prices()[(i, j)].to_string());
        }
        out.push('\n');
    }
    write(dir, "prices.csv", &out)?;
    Ok(())
}
