//! One test per acceptance criterion. Each prints a `PASS`/`FAIL` line with
//! the measured numbers before asserting.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use quadmargin::frontier::{sweep, FrontierSet, RecordKind};
use quadmargin::linalg::{sym_eig, Matrix};
use quadmargin::market_data::{compute_returns, estimate_stats, AssetStats};
use quadmargin::orthant::{enumerate_orthants, median_counts};
use quadmargin::solver::{CandidateKind, MarginSolver, SolverConfig};
use quadmargin::synthetic::{random_instance, rng_from_seed, synthetic_prices};
use quadmargin_cli::artifacts::{parse_frontier_csv, FrontierRow, StatsFile, Summary};
use rand::Rng;
use rand_distr::StandardNormal;

const SYNTH_SEED: u64 = 2024;

fn verdict(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn twelve_assets() -> &'static AssetStats<f64> {
    static STATS: OnceLock<AssetStats<f64>> = OnceLock::new();
    STATS.get_or_init(|| {
        let p = synthetic_prices::<f64>(12, 301, SYNTH_SEED).unwrap();
        estimate_stats(&compute_returns(&p)).unwrap()
    })
}

fn rows(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Residuals of a real portfolio recomputed from scratch. Sign normalization
/// may have flipped `w`, so the better of `±w` is reported.
fn residuals(st: &AssetStats<f64>, lambda: f64, mu: f64, w: &[f64], k: f64) -> (f64, f64) {
    let sw = st.covariance().mul_vec(w);
    let stat = |sign: f64| {
        let v: Vec<f64> = (0..w.len())
            .map(|i| sign * (2.0 * lambda * sw[i] - 2.0 * mu * w[i]) - (1.0 - lambda) * st.mean()[i])
            .collect();
        norm(&v)
    };
    let nrm = (w.iter().map(|x| x * x).sum::<f64>() - k).abs();
    (stat(1.0).min(stat(-1.0)), nrm)
}

fn run_cli(args: &[&str]) {
    let code = quadmargin_cli::run(std::iter::once("quadmargin").chain(args.iter().copied()));
    assert_eq!(code, 0, "quadmargin {args:?}");
}

fn write_prices(dir: &Path) -> String {
    let prices = dir.join("prices.csv");
    if !prices.exists() {
        run_cli(&["synth", "--assets", "12", "--days", "301", "--seed", &SYNTH_SEED.to_string(), "--output-dir", dir.to_str().unwrap()]);
    }
    prices.to_str().unwrap().to_string()
}

#[test]
fn eigenvalue_census() {
    let st = twelve_assets();
    let cfg = SolverConfig::new(1.0, 1.0, 1000).unwrap();
    let t = Instant::now();
    let fs = sweep(st, &cfg).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let d = &fs.diagnostics;
    let examined = d.eigenvalues_examined();
    let ok = d.interior_eigenvalues == 2 * 12 * 999
        && (examined as f64 - 24_000.0).abs() <= 0.01 * 24_000.0
        && secs < 60.0;
    verdict(
        "eigenvalue-census",
        ok,
        format!(
            "interior {} (2N(T-1) = {}), examined with endpoints {examined}, {secs:.2} s on {} thread(s)",
            d.interior_eigenvalues,
            2 * 12 * 999,
            cores()
        ),
    );
}

fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[test]
fn one_asset_closed_form() {
    let st = AssetStats::<f64>::unnamed(vec![0.1], Matrix::from_rows(&[[0.04]]), 300).unwrap();
    let solver = MarginSolver::new(&st, SolverConfig::with_norm_budget(1.0).unwrap()).unwrap();
    let sol = solver.solve_lambda(0.5).unwrap();
    let real: Vec<_> = sol.accepted.iter().filter(|c| c.kind == CandidateKind::Real).collect();
    let mut err: f64 = 0.0;
    let expect = [(-0.005, 1.0), (0.045, -1.0)];
    let ok_count = real.len() == 2 && sol.accepted.len() == 2;
    if ok_count {
        for (c, (mu, w)) in real.iter().zip(expect) {
            err = err.max((c.pair.mu.re - mu).abs()).max(c.pair.mu.im.abs());
            err = err.max((c.pair.w[0].re - w).abs()).max(c.pair.w[0].im.abs());
        }
    }
    verdict(
        "n1-closed-form",
        ok_count && err <= 1e-10,
        format!("{} real candidates, max deviation from (mu, w) = (-0.005, +1), (0.045, -1): {err:.2e}", real.len()),
    );
}

#[test]
fn secular_oracle_equivalence() {
    let mut checked = 0;
    let mut roots = 0;
    let mut inner = 0;
    let mut failures = Vec::new();
    for i in 0..100u64 {
        let n = 2 + (i % 2) as usize;
        let mut rng = rng_from_seed(9000 + i);
        let base: AssetStats<f64> = random_instance(n, &mut rng);
        // odd instances use unit-scale returns so roots also fall between poles
        let st = if i % 2 == 1 {
            AssetStats::unnamed(base.mean().iter().map(|x| 100.0 * x).collect(), base.covariance().clone(), 0).unwrap()
        } else {
            base
        };
        let solver = MarginSolver::new(&st, SolverConfig::default()).unwrap();
        for lambda in [0.25, 0.5, 0.75] {
            let oracle = common::secular_roots(&rows(st.covariance()), st.mean(), lambda, 1.0);
            let found: Vec<f64> = solver
                .solve_lambda(lambda)
                .unwrap()
                .accepted
                .iter()
                .filter(|c| c.kind == CandidateKind::Real)
                .map(|c| c.pair.mu.re)
                .collect();
            let (missed, unmatched) = common::match_roots(&oracle, &found, 1e-6);
            if missed + unmatched > 0 {
                failures.push(format!("instance {i} lambda {lambda}: missed {missed}, unmatched {unmatched}"));
            }
            checked += 1;
            roots += oracle.len();
            inner += oracle.len().saturating_sub(2);
        }
    }
    verdict(
        "secular-oracle",
        failures.is_empty(),
        format!(
            "{checked} solves, {roots} bracketed roots ({inner} between poles), {} mismatched {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

fn shared_sweep() -> &'static FrontierSet<f64> {
    static FS: OnceLock<FrontierSet<f64>> = OnceLock::new();
    FS.get_or_init(|| sweep(twelve_assets(), &SolverConfig::new(1.0, 1.0, 1000).unwrap()).unwrap())
}

#[test]
fn constraint_and_stationarity_residuals() {
    let st = twelve_assets();
    let fs = shared_sweep();
    let k = 1.0;
    let rn = norm(st.mean());
    let (mut worst_stat, mut worst_norm, mut count) = (0.0f64, 0.0f64, 0);
    for r in fs.records.iter().filter(|r| r.accepted && r.kind == RecordKind::Real) {
        let (s, n) = residuals(st, r.lambda, r.mu.re, &r.weights, k);
        worst_stat = worst_stat.max(s);
        worst_norm = worst_norm.max(n);
        count += 1;
    }
    verdict(
        "residuals",
        count > 0 && worst_norm <= 1e-6 * k && worst_stat <= 1e-6 * (1.0 + rn),
        format!(
            "{count} real portfolios, max |w'w - k| = {worst_norm:.2e} (bound {:.1e}), max stationarity = {worst_stat:.2e} (bound {:.3e})",
            1e-6 * k,
            1e-6 * (1.0 + rn)
        ),
    );
}

#[test]
fn minimum_risk_endpoint() {
    let mut worst_vec: f64 = 0.0;
    let mut worst_risk: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    let mut rng = rng_from_seed(31);
    let mut cases: Vec<(AssetStats<f64>, f64)> = vec![(twelve_assets().clone(), 1.0), (twelve_assets().clone(), 4.0)];
    for n in 1..=8 {
        cases.push((random_instance(n, &mut rng), 0.5 + n as f64));
    }
    for (st, k) in &cases {
        let solver = MarginSolver::new(st, SolverConfig::with_norm_budget(*k).unwrap()).unwrap();
        let eig = sym_eig(st.covariance(), 1e-10).unwrap();
        let jac = common::jacobi_eigenvalues(&rows(st.covariance()));
        for (i, c) in solver.solve_lambda_one().iter().enumerate() {
            let w = c.pair.real_weights();
            let q = eig.vector(i);
            for (a, b) in w.iter().zip(&q) {
                worst_vec = worst_vec.max((a - k.sqrt() * b).abs());
            }
            let risk2 = st.covariance().quad_form(&w);
            worst_risk = worst_risk.max((risk2 - c.pair.mu.re * k).abs());
            worst_eig = worst_eig.max((c.pair.mu.re - jac[i]).abs() / (1.0 + jac[i].abs()));
        }
    }
    verdict(
        "lambda-one",
        worst_vec <= 1e-12 && worst_risk <= 1e-10 && worst_eig <= 1e-10,
        format!(
            "{} instances, max |w - sqrt(k) q| = {worst_vec:.1e}, max |s^2 - mu k| = {worst_risk:.1e}, eigenvalue gap to Jacobi = {worst_eig:.1e}",
            cases.len()
        ),
    );
}

#[test]
fn maximum_return_endpoint() {
    let st = twelve_assets();
    let mut worst_gap = f64::NEG_INFINITY;
    for k in [1.0, 0.25, 9.0] {
        let solver = MarginSolver::new(st, SolverConfig::with_norm_budget(k).unwrap()).unwrap();
        let w0 = solver.solve_lambda_zero().unwrap().pair.real_weights();
        let rho0: f64 = w0.iter().zip(st.mean()).map(|(a, b)| a * b).sum();
        let mut rng = rng_from_seed(77);
        for _ in 0..10_000 {
            let v: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
            let scale = k.sqrt() / norm(&v);
            let rho: f64 = v.iter().zip(st.mean()).map(|(a, b)| a * b * scale).sum();
            worst_gap = worst_gap.max(rho - rho0);
        }
    }
    verdict(
        "lambda-zero",
        worst_gap <= 1e-12,
        format!("3 budgets x 10^4 samples, largest sample return minus optimum = {worst_gap:.3e}"),
    );
}

#[test]
fn multiplicity_trend() {
    let lambda = 0.5;
    let mut monotone = 0;
    let mut medians = Vec::new();
    for seed in 0..10u64 {
        let m = median_counts::<f64>(2..=10, seed, 5, lambda, 1.0, 1.0).unwrap();
        let meds: Vec<f64> = m.iter().map(|x| x.1).collect();
        if meds.windows(2).all(|w| w[1] >= w[0]) {
            monotone += 1;
        }
        medians.push(meds);
    }
    verdict(
        "multiplicity-trend",
        monotone >= 8,
        format!(
            "lambda {lambda}, 5 instances per N, median counts nondecreasing over N = 2..10 in {monotone}/10 seeds (need 8); seed 0 medians {:?}",
            medians[0]
        ),
    );
}

#[test]
fn two_asset_orthant_oracle() {
    let mut worst: f64 = 0.0;
    let mut below = 0;
    for i in 0..20u64 {
        let mut rng = rng_from_seed(4000 + i);
        let st: AssetStats<f64> = random_instance(2, &mut rng);
        let lambda = [0.005, 0.01, 0.05, 0.25, 0.5][(i % 5) as usize];
        let best = enumerate_orthants(&st, lambda, 1.0, 1.0).unwrap().best().unwrap().objective;
        let grid = common::diamond_grid_min(&rows(st.covariance()), st.mean(), lambda, 1.0, 1_000_000);
        worst = worst.max((grid - best).abs());
        if grid < best - 1e-12 {
            below += 1;
        }
    }
    verdict(
        "n2-orthant-oracle",
        worst <= 1e-6 && below == 0,
        format!("20 instances, 4e6 grid points each, max |grid - enumerator| = {worst:.2e}, grid below enumerator in {below}"),
    );
}

fn svg_points(svg: &str, group: &str) -> Vec<(usize, f64, f64)> {
    let start = match svg.find(&format!(r#"<g id="{group}""#)) {
        Some(s) => s,
        None => return Vec::new(),
    };
    let body = &svg[start..start + svg[start..].find("</g>").unwrap()];
    body.lines().filter(|l| l.starts_with("<circle")).map(|l| {
        (
            attr(l, "data-row").parse().unwrap(),
            attr(l, "data-s").parse().unwrap(),
            attr(l, "data-rho").parse().unwrap(),
        )
    }).collect()
}

fn attr<'a>(tag: &'a str, name: &str) -> &'a str {
    let key = format!(r#" {name}=""#);
    let s = tag.find(&key).unwrap() + key.len();
    &tag[s..s + tag[s..].find('"').unwrap()]
}

#[test]
fn figures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let prices = write_prices(dir.path());
    run_cli(&["report", "--input", &prices, "--output-dir", out]);
    let stats = StatsFile::into_stats(serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap()).unwrap();
    let (_, csv) = parse_frontier_csv(&fs::read_to_string(dir.path().join("frontier.csv")).unwrap()).unwrap();
    let summary: Summary = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let fig3 = fs::read_to_string(dir.path().join("fig3.svg")).unwrap();
    let fig4 = fs::read_to_string(dir.path().join("fig4.svg")).unwrap();

    let re = svg_points(&fig3, "real-part");
    let im = svg_points(&fig3, "imag-part");
    let real = svg_points(&fig4, "real");
    let kinds_ok = re.iter().all(|p| csv[p.0].kind == "real-part")
        && im.iter().all(|p| csv[p.0].kind == "imag-part")
        && real.iter().all(|p| csv[p.0].kind == "real" && csv[p.0].accepted);
    let colors_ok = fig3.contains(r##"fill="#1f4fd6" data-s"##) && fig3.contains(r##"fill="#d62728" data-s"##);

    let sp = fig4.lines().find(|l| l.contains(r#"id="sp""#));
    let best = summary.max_sharpe.as_ref().unwrap();
    let best_csv: Option<&FrontierRow> = csv
        .iter()
        .filter(|r| r.accepted && r.kind == "real" && r.sharpe.is_some())
        .max_by(|a, b| a.sharpe.unwrap().total_cmp(&b.sharpe.unwrap()));
    let sp_ok = sp.is_some_and(|l| {
        attr(l, "data-row").parse::<usize>().ok() == Some(best.row)
            && attr(l, "data-s").parse::<f64>().ok() == Some(best.s)
            && attr(l, "data-rho").parse::<f64>().ok() == Some(best.rho)
    }) && best_csv.is_some_and(|r| r.sharpe == best.sharpe);

    let k = summary.norm_budget;
    let rn = norm(stats.mean());
    let mut worst_stat: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for p in &real {
        let row = &csv[p.0];
        let (s, n) = residuals(&stats, row.lambda, row.mu_re, &row.weights, k);
        worst_stat = worst_stat.max(s);
        worst_norm = worst_norm.max(n);
    }
    let resid_ok = worst_norm <= 1e-6 * k && worst_stat <= 1e-6 * (1.0 + rn);
    verdict(
        "figures",
        !re.is_empty() && !im.is_empty() && !real.is_empty() && kinds_ok && colors_ok && sp_ok && resid_ok,
        format!(
            "fig3 {} real-part + {} imag-part points, fig4 {} real points, SP at row {} (xi = {:?}), plotted residuals norm {worst_norm:.1e} stationarity {worst_stat:.1e}",
            re.len(),
            im.len(),
            real.len(),
            best.row,
            best.sharpe
        ),
    );
}

#[test]
fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    let prices = write_prices(dir.path());
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = out.to_str().unwrap();
        run_cli(&["frontier", "--input", &prices, "--output-dir", o]);
        run_cli(&["baseline", "--n-range", "2-8", "--seed", "3", "--output-dir", o]);
        files.push(["frontier.csv", "summary.json", "multiplicity.csv"].map(|f| fs::read(out.join(f)).unwrap()));
    }
    let same = files[0] == files[1];
    verdict(
        "determinism",
        same,
        format!(
            "frontier.csv {} bytes, summary.json {} bytes, multiplicity.csv {} bytes, identical across runs: {same}",
            files[0][0].len(),
            files[0][1].len(),
            files[0][2].len()
        ),
    );
}
