//! On-disk formats. Floats are written in Rust's shortest round-trip decimal
//! form, so every file re-reads to the exact bits that produced it.

use std::fmt::Write as _;

use quadmargin::frontier::{FrontierSet, PortfolioRecord, SweepDiagnostics};
use quadmargin::linalg::Matrix;
use quadmargin::market_data::{AssetStats, DataError};
use quadmargin::orthant::MultiplicityReport;
use quadmargin::solver::SolverConfig;
use serde::{Deserialize, Serialize};

pub const STATS_FILE: &str = "stats.json";
pub const FRONTIER_FILE: &str = "frontier.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MULTIPLICITY_FILE: &str = "multiplicity.csv";
pub const FIG3_FILE: &str = "fig3.svg";
pub const FIG4_FILE: &str = "fig4.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub tickers: Vec<String>,
    pub mean: Vec<f64>,
    /// Row-major `N × N`.
    pub covariance: Vec<f64>,
    pub sample_count: usize,
}

impl StatsFile {
    pub fn from_stats(st: &AssetStats<f64>) -> Self {
        Self {
            tickers: st.tickers().to_vec(),
            mean: st.mean().to_vec(),
            covariance: st.covariance().as_slice().to_vec(),
            sample_count: st.sample_count(),
        }
    }

    pub fn into_stats(self) -> Result<AssetStats<f64>, DataError> {
        let n = self.mean.len();
        if self.covariance.len() != n * n {
            return Err(DataError::Shape(format!(
                "covariance has {} entries, expected {} for {} assets",
                self.covariance.len(),
                n * n,
                n
            )));
        }
        let cov = Matrix::new(n, n, self.covariance)?;
        AssetStats::new(self.tickers, self.mean, cov, self.sample_count)
    }
}

pub fn stats_json(st: &AssetStats<f64>) -> String {
    let mut s = serde_json::to_string_pretty(&StatsFile::from_stats(st)).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn frontier_header(n: usize) -> String {
    let mut h = String::from("lambda,mu_re,mu_im,kind,s,rho,sharpe,accepted");
    for i in 1..=n {
        let _ = write!(h, ",weight_{i}");
    }
    h
}

pub fn frontier_row(r: &PortfolioRecord<f64>) -> String {
    let mut line = format!(
        "{},{},{},{},{},{},{},{}",
        r.lambda,
        r.mu.re,
        r.mu.im,
        r.kind.as_str(),
        r.risk,
        r.ret,
        r.sharpe.map(|x| x.to_string()).unwrap_or_default(),
        r.accepted
    );
    for w in &r.weights {
        let _ = write!(line, ",{w}");
    }
    line
}

pub fn frontier_csv(fs: &FrontierSet<f64>, n_assets: usize) -> String {
    let mut out = frontier_header(n_assets);
    out.push('\n');
    for r in &fs.records {
        out.push_str(&frontier_row(r));
        out.push('\n');
    }
    out
}

/// One parsed `frontier.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    pub lambda: f64,
    pub mu_re: f64,
    pub mu_im: f64,
    pub kind: String,
    pub s: f64,
    pub rho: f64,
    pub sharpe: Option<f64>,
    pub accepted: bool,
    pub weights: Vec<f64>,
}

pub fn parse_frontier_csv(text: &str) -> Result<(usize, Vec<FrontierRow>), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty frontier file")?;
    let n = header.split(',').count().checked_sub(8).ok_or("short header")?;
    if header != frontier_header(n) {
        return Err(format!("unexpected header `{header}`"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + 8 {
            return Err(format!("row {}: {} cells, expected {}", i + 1, cells.len(), n + 8));
        }
        let num = |j: usize| -> Result<f64, String> {
            cells[j]
                .parse::<f64>()
                .map_err(|_| format!("row {}: bad number `{}`", i + 1, cells[j]))
        };
        rows.push(FrontierRow {
            lambda: num(0)?,
            mu_re: num(1)?,
            mu_im: num(2)?,
            kind: cells[3].to_string(),
            s: num(4)?,
            rho: num(5)?,
            sharpe: if cells[6].is_empty() { None } else { Some(num(6)?) },
            accepted: cells[7]
                .parse()
                .map_err(|_| format!("row {}: bad flag `{}`", i + 1, cells[7]))?,
            weights: (8..n + 8).map(num).collect::<Result<_, _>>()?,
        });
    }
    Ok((n, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    /// Zero-based data row in `frontier.csv`.
    pub row: usize,
    pub lambda: f64,
    pub mu_re: f64,
    pub mu_im: f64,
    pub kind: String,
    pub s: f64,
    pub rho: f64,
    pub sharpe: Option<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_assets: usize,
    pub lambda_steps: usize,
    pub gamma: f64,
    pub wealth: f64,
    pub norm_budget: f64,
    pub residual_tol: f64,
    pub stats_fingerprint: String,
    pub eigenvalues_examined: usize,
    pub interior_eigenvalues: usize,
    pub endpoint_eigenvalues: usize,
    pub real_roots: usize,
    pub complex_roots: usize,
    pub spurious_roots: usize,
    pub rejected_roots: usize,
    pub empty_lambdas: Vec<f64>,
    pub records: usize,
    pub max_sharpe: Option<RecordSummary>,
}

impl Summary {
    pub fn new(fs: &FrontierSet<f64>, cfg: &SolverConfig<f64>, n_assets: usize) -> Self {
        let d: &SweepDiagnostics<f64> = &fs.diagnostics;
        Self {
            n_assets,
            lambda_steps: cfg.lambda_steps,
            gamma: cfg.gamma,
            wealth: cfg.wealth,
            norm_budget: cfg.norm_budget(),
            residual_tol: cfg.residual_tol,
            stats_fingerprint: fs.stats_fingerprint.clone(),
            eigenvalues_examined: d.eigenvalues_examined(),
            interior_eigenvalues: d.interior_eigenvalues,
            endpoint_eigenvalues: d.endpoint_eigenvalues,
            real_roots: d.real_roots,
            complex_roots: d.complex_roots,
            spurious_roots: d.spurious_roots,
            rejected_roots: d.rejected_roots,
            empty_lambdas: d.empty_lambdas.clone(),
            records: fs.records.len(),
            max_sharpe: fs.max_sharpe_index.map(|i| {
                let r = &fs.records[i];
                RecordSummary {
                    row: i,
                    lambda: r.lambda,
                    mu_re: r.mu.re,
                    mu_im: r.mu.im,
                    kind: r.kind.as_str().to_string(),
                    s: r.risk,
                    rho: r.ret,
                    sharpe: r.sharpe,
                    weights: r.weights.clone(),
                }
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}

pub fn multiplicity_csv(rep: &MultiplicityReport) -> String {
    let mut out = String::from("N,count,log_count,seed\n");
    for row in &rep.rows {
        let _ = writeln!(out, "{},{},{},{}", row.n, row.count, row.log_count, rep.seed);
    }
    out
}
