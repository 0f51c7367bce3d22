//! λ sweep over the margin-constrained problem, risk/return evaluation of
//! every stationary portfolio, maximum-Sharpe selection and the classical
//! fully-invested frontier for comparison.

use num_complex::Complex;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::{solve_real, sym_eig, LinalgError, DEFAULT_SYM_TOL};
use crate::market_data::AssetStats;
use crate::scalar::{cnorm2, dot, norm2};
use crate::solver::{CandidateKind, CandidateSolution, MarginSolver, SolverConfig, SolverError};
use crate::Real;

/// Conjugate partners are matched within `1e-8·(1+|μ|)`.
const CONJUGATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontierError {
    #[error("solver failed at lambda = {lambda}: {source}")]
    Solver {
        lambda: f64,
        #[source]
        source: SolverError,
    },
    #[error("no record with positive risk to rank")]
    NoRanking,
    #[error("covariance is not positive definite (smallest eigenvalue {min_eig:e})")]
    IndefiniteCovariance { min_eig: f64 },
    #[error("at least one frontier point is required")]
    NoPoints,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How a record was derived from its candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecordKind {
    /// A real stationary portfolio.
    Real,
    /// Real part `x` of a complex solution `w = x + iy`.
    RealPart,
    /// Imaginary part `y` of a complex solution.
    ImagPart,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Real => "real",
            RecordKind::RealPart => "real-part",
            RecordKind::ImagPart => "imag-part",
        }
    }
}

/// Risk and return of a real weight vector, sign-normalized so `wᵀr ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub weights: Vec<T>,
    pub risk: T,
    pub ret: T,
}

impl<T: Real> Evaluation<T> {
    /// `ρ/s`, undefined for zero risk.
    pub fn sharpe(&self) -> Option<T> {
        (self.risk > T::zero()).then(|| self.ret / self.risk)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioRecord<T> {
    pub weights: Vec<T>,
    pub risk: T,
    pub ret: T,
    pub sharpe: Option<T>,
    pub lambda: T,
    pub mu: Complex<T>,
    pub kind: RecordKind,
    /// False for roots that produced weights but failed a residual bound.
    pub accepted: bool,
    pub stationarity_residual: T,
    pub norm_residual: T,
}

/// Root counts gathered over a sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepDiagnostics<T> {
    pub interior_points: usize,
    /// Eigenvalues of the linearization over all interior λ.
    pub interior_eigenvalues: usize,
    /// Eigenvalues of `S` examined at λ = 1.
    pub endpoint_eigenvalues: usize,
    pub real_roots: usize,
    /// Complex roots accepted, counting both members of each conjugate pair.
    pub complex_roots: usize,
    /// Roots at which the resolvent is singular.
    pub spurious_roots: usize,
    /// Roots whose recovered portfolio failed a residual bound.
    pub rejected_roots: usize,
    /// Grid points that produced no accepted candidate.
    pub empty_lambdas: Vec<T>,
}

impl<T> SweepDiagnostics<T> {
    pub fn eigenvalues_examined(&self) -> usize {
        self.interior_eigenvalues + self.endpoint_eigenvalues
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierSet<T> {
    pub records: Vec<PortfolioRecord<T>>,
    pub lambda_grid: Vec<T>,
    pub max_sharpe_index: Option<usize>,
    pub stats_fingerprint: String,
    pub diagnostics: SweepDiagnostics<T>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Admit real/imaginary parts of complex solutions to the Sharpe ranking.
    pub sharpe_includes_complex: bool,
}

/// Risk `√(wᵀSw)` and return `|wᵀr|`; flips `w` when `wᵀr < 0`.
pub fn evaluate_real<T: Real>(w: &[T], stats: &AssetStats<T>) -> Evaluation<T> {
    let raw = dot(w, stats.mean());
    let weights: Vec<T> = if raw < T::zero() {
        w.iter().map(|&x| -x).collect()
    } else {
        w.to_vec()
    };
    let var = stats.covariance().quad_form(&weights).max(T::zero());
    Evaluation {
        risk: var.sqrt(),
        ret: raw.abs(),
        weights,
    }
}

/// Evaluates `Re w` and `Im w` separately, skipping a part that vanishes.
pub fn decompose_complex<T: Real>(w: &[Complex<T>], stats: &AssetStats<T>) -> Vec<(RecordKind, Evaluation<T>)> {
    let scale = cnorm2(w);
    let negligible = |v: &[T]| norm2(v) <= T::epsilon() * scale;
    let x: Vec<T> = w.iter().map(|z| z.re).collect();
    let y: Vec<T> = w.iter().map(|z| z.im).collect();
    let mut out = Vec::with_capacity(2);
    if !negligible(&x) {
        out.push((RecordKind::RealPart, evaluate_real(&x, stats)));
    }
    if !negligible(&y) {
        out.push((RecordKind::ImagPart, evaluate_real(&y, stats)));
    }
    out
}

/// Index of the record with the largest Sharpe ratio among accepted records
/// with positive risk. Ties go to the smaller λ, then the smaller risk.
pub fn max_sharpe_index<T: Real>(records: &[PortfolioRecord<T>], include_complex: bool) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, rec) in records.iter().enumerate() {
        if !rec.accepted || !(include_complex || rec.kind == RecordKind::Real) {
            continue;
        }
        let Some(xi) = rec.sharpe else { continue };
        let better = match best {
            None => true,
            Some((j, b)) => {
                let cur = &records[j];
                xi > b
                    || (xi == b
                        && (rec.lambda < cur.lambda || (rec.lambda == cur.lambda && rec.risk < cur.risk)))
            }
        };
        if better {
            best = Some((i, xi));
        }
    }
    best.map(|(i, _)| i)
}

/// The maximum-Sharpe record of a sweep.
pub fn max_sharpe<T: Real>(fs: &FrontierSet<T>) -> Result<&PortfolioRecord<T>, FrontierError> {
    fs.max_sharpe_index
        .map(|i| &fs.records[i])
        .ok_or(FrontierError::NoRanking)
}

/// Sweeps `λ_t = t/T` for `t = 0..=T` with default options.
pub fn sweep<T: Real>(stats: &AssetStats<T>, cfg: &SolverConfig<T>) -> Result<FrontierSet<T>, FrontierError> {
    sweep_with(stats, cfg, SweepOptions::default())
}

pub fn sweep_with<T: Real>(
    stats: &AssetStats<T>,
    cfg: &SolverConfig<T>,
    opts: SweepOptions,
) -> Result<FrontierSet<T>, FrontierError> {
    let solver = MarginSolver::new(stats, cfg.clone()).map_err(|source| FrontierError::Solver {
        lambda: f64::NAN,
        source,
    })?;
    let grid = cfg.lambda_grid();
    let steps = cfg.lambda_steps;

    let interior: Vec<_> = (1..steps)
        .into_par_iter()
        .map(|t| solver.solve_lambda(grid[t]))
        .collect::<Result<_, _>>()
        .map_err(|source| FrontierError::Solver {
            lambda: lambda_of(&source).unwrap_or(f64::NAN),
            source,
        })?;

    let mut diag = SweepDiagnostics {
        interior_points: steps - 1,
        ..SweepDiagnostics::default()
    };
    let mut records = Vec::new();

    match solver.solve_lambda_zero() {
        Ok(c) => push_candidates(&mut records, &mut diag, stats, &[c], true),
        Err(SolverError::DegenerateObjective) => diag.empty_lambdas.push(T::zero()),
        Err(source) => {
            return Err(FrontierError::Solver {
                lambda: 0.0,
                source,
            })
        }
    }

    for sol in &interior {
        diag.interior_eigenvalues += sol.eigenvalues.len();
        for sp in &sol.spurious {
            if sp.candidate.is_some() {
                diag.rejected_roots += 1;
            } else {
                diag.spurious_roots += 1;
            }
        }
        if sol.accepted.is_empty() {
            diag.empty_lambdas.push(sol.lambda);
        }
        push_candidates(&mut records, &mut diag, stats, &sol.accepted, true);
        let rejected: Vec<_> = sol.spurious.iter().filter_map(|s| s.candidate.clone()).collect();
        push_candidates(&mut records, &mut diag, stats, &rejected, false);
    }

    let at_one = solver.solve_lambda_one();
    diag.endpoint_eigenvalues = at_one.len();
    push_candidates(&mut records, &mut diag, stats, &at_one, true);

    records.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.mu.re.total_cmp(&b.mu.re))
            .then(a.kind.cmp(&b.kind))
            .then(a.mu.im.total_cmp(&b.mu.im))
            .then(b.accepted.cmp(&a.accepted))
    });
    let max_sharpe_index = max_sharpe_index(&records, opts.sharpe_includes_complex);
    Ok(FrontierSet {
        records,
        lambda_grid: grid,
        max_sharpe_index,
        stats_fingerprint: fingerprint(stats, cfg),
        diagnostics: diag,
    })
}

fn lambda_of(e: &SolverError) -> Option<f64> {
    match e {
        SolverError::Linalg { lambda, .. } => Some(*lambda),
        SolverError::LambdaOutOfRange { lambda, .. } => Some(*lambda),
        _ => None,
    }
}

/// Keeps one member of each conjugate pair (the one with `Im μ ≥ 0`).
fn dedup_conjugates<T: Real>(cands: &[CandidateSolution<T>]) -> Vec<&CandidateSolution<T>> {
    let tol = T::lit(CONJUGATE_TOL);
    let mut keep = Vec::with_capacity(cands.len());
    for c in cands {
        if c.kind == CandidateKind::Complex && c.pair.mu.im < T::zero() {
            let mu_bar = c.pair.mu.conj();
            let partner = cands.iter().any(|o| {
                o.kind == CandidateKind::Complex
                    && o.pair.mu.im >= T::zero()
                    && (o.pair.mu - mu_bar).norm() <= tol * (T::one() + mu_bar.norm())
            });
            if partner {
                continue;
            }
        }
        keep.push(c);
    }
    keep
}

fn push_candidates<T: Real>(
    records: &mut Vec<PortfolioRecord<T>>,
    diag: &mut SweepDiagnostics<T>,
    stats: &AssetStats<T>,
    cands: &[CandidateSolution<T>],
    accepted: bool,
) {
    if accepted {
        for c in cands {
            match c.kind {
                CandidateKind::Real => diag.real_roots += 1,
                CandidateKind::Complex => diag.complex_roots += 1,
            }
        }
    }
    for c in dedup_conjugates(cands) {
        let frags = match c.kind {
            CandidateKind::Real => vec![(RecordKind::Real, evaluate_real(&c.pair.real_weights(), stats))],
            CandidateKind::Complex => decompose_complex(&c.pair.w, stats),
        };
        for (kind, ev) in frags {
            records.push(PortfolioRecord {
                sharpe: ev.sharpe(),
                weights: ev.weights,
                risk: ev.risk,
                ret: ev.ret,
                lambda: c.lambda,
                mu: c.pair.mu,
                kind,
                accepted,
                stationarity_residual: c.stationarity_residual,
                norm_residual: c.norm_residual,
            });
        }
    }
}

/// SHA-256 over the inputs that determine a sweep.
pub fn fingerprint<T: Real>(stats: &AssetStats<T>, cfg: &SolverConfig<T>) -> String {
    let mut h = Sha256::new();
    let mut put = |x: T| h.update(x.to_f64().unwrap_or(f64::NAN).to_le_bytes());
    for &x in stats.mean() {
        put(x);
    }
    for &x in stats.covariance().as_slice() {
        put(x);
    }
    for x in [
        cfg.gamma,
        cfg.wealth,
        cfg.residual_tol,
        cfg.imag_tol,
        cfg.resolvent_condition_cap,
        cfg.eig_tol,
        cfg.sym_tol,
    ] {
        put(x);
    }
    h.update((stats.n_assets() as u64).to_le_bytes());
    h.update((cfg.lambda_steps as u64).to_le_bytes());
    h.update([cfg.polish as u8]);
    hex::encode(h.finalize())
}

/// One point on the fully-invested (`Σw = 1`) minimum-variance frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint<T> {
    pub risk: T,
    pub ret: T,
    pub weights: Vec<T>,
}

struct ClassicalScalars<T> {
    inv_ones: Vec<T>,
    inv_r: Vec<T>,
    a: T,
    b: T,
    c: T,
}

fn classical_scalars<T: Real>(stats: &AssetStats<T>) -> Result<ClassicalScalars<T>, FrontierError> {
    let s = stats.covariance();
    let eig = sym_eig(s, T::lit(DEFAULT_SYM_TOL))?;
    if !(eig.min() > T::lit(1e-10) * s.frobenius_norm()) {
        return Err(FrontierError::IndefiniteCovariance {
            min_eig: eig.min().to_f64().unwrap_or(f64::NAN),
        });
    }
    let ones = vec![T::one(); stats.n_assets()];
    let inv_ones = solve_real(s, &ones)?;
    let inv_r = solve_real(s, stats.mean())?;
    let a = dot(&ones, &inv_ones);
    let b = dot(&ones, &inv_r);
    let c = dot(stats.mean(), &inv_r);
    Ok(ClassicalScalars {
        inv_ones,
        inv_r,
        a,
        b,
        c,
    })
}

/// Global minimum-variance portfolio `S⁻¹1 / (1ᵀS⁻¹1)`.
pub fn global_minimum_variance<T: Real>(stats: &AssetStats<T>) -> Result<FrontierPoint<T>, FrontierError> {
    let k = classical_scalars(stats)?;
    let w: Vec<T> = k.inv_ones.iter().map(|&x| x / k.a).collect();
    Ok(point(stats, w))
}

fn point<T: Real>(stats: &AssetStats<T>, weights: Vec<T>) -> FrontierPoint<T> {
    FrontierPoint {
        risk: stats.covariance().quad_form(&weights).max(T::zero()).sqrt(),
        ret: dot(&weights, stats.mean()),
        weights,
    }
}

/// Minimum-variance portfolios with `Σw = 1` for `n_points` target returns
/// evenly spaced over `[min r, max r]`.
pub fn classical_frontier<T: Real>(stats: &AssetStats<T>, n_points: usize) -> Result<Vec<FrontierPoint<T>>, FrontierError> {
    if n_points == 0 {
        return Err(FrontierError::NoPoints);
    }
    let k = classical_scalars(stats)?;
    let r = stats.mean();
    let lo = r.iter().copied().fold(T::infinity(), T::min);
    let hi = r.iter().copied().fold(T::neg_infinity(), T::max);
    let det = k.a * k.c - k.b * k.b;
    if hi == lo || !(det > T::epsilon() * k.a * k.c) {
        // every fully-invested portfolio earns the same return
        return Ok(vec![global_minimum_variance(stats)?]);
    }
    let denom = T::from_count(n_points.saturating_sub(1).max(1));
    Ok((0..n_points)
        .map(|i| {
            let rho = if n_points == 1 {
                lo
            } else {
                lo + (hi - lo) * T::from_count(i) / denom
            };
            let alpha = (k.c - k.b * rho) / det;
            let beta = (k.a * rho - k.b) / det;
            let w: Vec<T> = k
                .inv_ones
                .iter()
                .zip(&k.inv_r)
                .map(|(&u, &v)| alpha * u + beta * v)
                .collect();
            point(stats, w)
        })
        .collect())
}
