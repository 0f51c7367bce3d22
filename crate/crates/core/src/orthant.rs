//! Sign-pattern enumeration for the absolute-value margin constraint
//! `γ Σ|w_n| = W`. Inside one orthant the constraint is linear and the
//! objective `λwᵀSw − (1−λ)wᵀr` is a convex quadratic, so every orthant has a
//! single minimizer. A portfolio is a local optimum of the whole problem when
//! it minimizes every closed orthant that contains it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{solve_real, LinalgError, Matrix};
use crate::market_data::AssetStats;
use crate::scalar::{dot, norm2};
use crate::synthetic::random_instance;
use crate::Real;

/// Enumeration visits `2^N` orthants.
pub const MAX_ORTHANT_ASSETS: usize = 16;
/// Orthant membership slack: `s_n·w_n ≥ −1e-12`.
const SIGN_SLACK: f64 = 1e-12;
/// Two solutions are the same portfolio when their ∞-distance is below this.
const DEDUP_TOL: f64 = 1e-9;
const MAX_ACTIVE_SET_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrthantError {
    #[error("{n} assets exceeds the enumeration cap of {cap}")]
    TooManyAssets { n: usize, cap: usize },
    #[error("lambda = {0} outside (0, 1]")]
    LambdaOutOfRange(f64),
    #[error("gamma and wealth must be positive and finite (gamma = {gamma}, wealth = {wealth})")]
    InvalidBudget { gamma: f64, wealth: f64 },
    #[error("sign pattern has {got} entries, expected {expected}")]
    SignLength { expected: usize, got: usize },
    #[error("sign pattern entries must be +1 or -1")]
    BadSign,
    #[error("KKT system singular for sign pattern {signs:?}")]
    DegenerateOrthant { signs: Vec<i8> },
    #[error("active-set iteration did not settle for sign pattern {signs:?}")]
    NoConvergence { signs: Vec<i8> },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthantSolution<T> {
    pub signs: Vec<i8>,
    pub weights: Vec<T>,
    pub risk: T,
    pub ret: T,
    /// `λwᵀSw − (1−λ)wᵀr`.
    pub objective: T,
    /// Multiplier `η` of the budget constraint.
    pub multiplier: T,
    /// `‖2λSw − (1−λ)r − ηγs‖` over the coordinates not pinned at zero.
    pub kkt_residual: T,
    pub feasible: bool,
}

/// A distinct local optimum together with how many orthants produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptimum<T> {
    pub solution: OrthantSolution<T>,
    pub orthants: usize,
    pub zero_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration<T> {
    pub optima: Vec<LocalOptimum<T>>,
    /// Orthants whose KKT system was singular.
    pub degenerate: usize,
    pub orthants_visited: usize,
}

impl<T: Real> Enumeration<T> {
    pub fn count(&self) -> usize {
        self.optima.len()
    }

    /// Optima with pairwise different objective values (relative gap 1e-9).
    pub fn distinct_objectives(&self) -> usize {
        let mut objs: Vec<T> = self.optima.iter().map(|o| o.solution.objective).collect();
        objs.sort_by(|a, b| a.total_cmp(b));
        let tol = T::lit(1e-9);
        let mut count = 0;
        let mut last: Option<T> = None;
        for v in objs {
            if last.is_none_or(|l| (v - l).abs() > tol * (T::one() + l.abs())) {
                count += 1;
                last = Some(v);
            }
        }
        count
    }

    pub fn best(&self) -> Option<&OrthantSolution<T>> {
        self.optima
            .iter()
            .map(|o| &o.solution)
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityRow {
    pub n: usize,
    pub count: usize,
    pub distinct_objectives: usize,
    pub log_count: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityReport {
    pub rows: Vec<MultiplicityRow>,
    pub seed: u64,
}

fn check_params<T: Real>(n: usize, lambda: T, gamma: T, wealth: T) -> Result<(), OrthantError> {
    if n > MAX_ORTHANT_ASSETS {
        return Err(OrthantError::TooManyAssets {
            n,
            cap: MAX_ORTHANT_ASSETS,
        });
    }
    if !(lambda > T::zero() && lambda <= T::one()) {
        return Err(OrthantError::LambdaOutOfRange(lambda.to_f64().unwrap_or(f64::NAN)));
    }
    let ok = |x: T| x.is_finite() && x > T::zero();
    if !ok(gamma) || !ok(wealth) {
        return Err(OrthantError::InvalidBudget {
            gamma: gamma.to_f64().unwrap_or(f64::NAN),
            wealth: wealth.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Sign pattern number `code`: bit `n` set means `s_n = −1`.
pub fn signs_from_code(n: usize, code: u64) -> Vec<i8> {
    (0..n).map(|i| if code >> i & 1 == 1 { -1 } else { 1 }).collect()
}

fn objective<T: Real>(stats: &AssetStats<T>, lambda: T, w: &[T]) -> T {
    lambda * stats.covariance().quad_form(w) - (T::one() - lambda) * dot(w, stats.mean())
}

/// Residual `2λSw − (1−λ)r − ηγs`, computed on `free` coordinates only.
fn kkt_residual<T: Real>(stats: &AssetStats<T>, lambda: T, gamma: T, signs: &[i8], w: &[T], eta: T, free: &[bool]) -> T {
    let sw = stats.covariance().mul_vec(w);
    let two = T::lit(2.0);
    let res: Vec<T> = (0..w.len())
        .filter(|&i| free[i])
        .map(|i| two * lambda * sw[i] - (T::one() - lambda) * stats.mean()[i] - eta * gamma * T::lit(signs[i] as f64))
        .collect();
    norm2(&res)
}

fn finish<T: Real>(
    stats: &AssetStats<T>,
    lambda: T,
    gamma: T,
    signs: Vec<i8>,
    weights: Vec<T>,
    multiplier: T,
    free: &[bool],
) -> OrthantSolution<T> {
    let slack = T::lit(SIGN_SLACK);
    let feasible = weights
        .iter()
        .zip(&signs)
        .all(|(&w, &s)| T::lit(s as f64) * w >= -slack);
    OrthantSolution {
        risk: stats.covariance().quad_form(&weights).max(T::zero()).sqrt(),
        ret: dot(&weights, stats.mean()),
        objective: objective(stats, lambda, &weights),
        kkt_residual: kkt_residual(stats, lambda, gamma, &signs, &weights, multiplier, free),
        multiplier,
        feasible,
        signs,
        weights,
    }
}

fn check_signs(n: usize, signs: &[i8]) -> Result<(), OrthantError> {
    if signs.len() != n {
        return Err(OrthantError::SignLength {
            expected: n,
            got: signs.len(),
        });
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(OrthantError::BadSign);
    }
    Ok(())
}

/// Stationary point of the objective on the hyperplane `γ·sᵀw = W` from the
/// bordered system `[2λS, −γs; γsᵀ, 0]·[w; η] = [(1−λ)r; W]`. Marked feasible
/// only when it lies in the closed orthant of `signs`.
pub fn solve_orthant<T: Real>(
    stats: &AssetStats<T>,
    lambda: T,
    signs: &[i8],
    gamma: T,
    wealth: T,
) -> Result<OrthantSolution<T>, OrthantError> {
    let n = stats.n_assets();
    check_params(n, lambda, gamma, wealth)?;
    check_signs(n, signs)?;
    let free = vec![true; n];
    let (w, eta) = bordered_solve(stats, lambda, signs, gamma, wealth, &free)?;
    Ok(finish(stats, lambda, gamma, signs.to_vec(), w, eta, &free))
}

/// Bordered solve restricted to the `free` coordinates; pinned ones are zero.
fn bordered_solve<T: Real>(
    stats: &AssetStats<T>,
    lambda: T,
    signs: &[i8],
    gamma: T,
    wealth: T,
    free: &[bool],
) -> Result<(Vec<T>, T), OrthantError> {
    let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
    let m = idx.len();
    let s = stats.covariance();
    let two_l = T::lit(2.0) * lambda;
    let sign = |i: usize| T::lit(signs[idx[i]] as f64);
    let k = Matrix::from_fn(m + 1, m + 1, |i, j| match (i < m, j < m) {
        (true, true) => two_l * s[(idx[i], idx[j])],
        (true, false) => -gamma * sign(i),
        (false, true) => gamma * sign(j),
        (false, false) => T::zero(),
    });
    let mut rhs: Vec<T> = idx.iter().map(|&i| (T::one() - lambda) * stats.mean()[i]).collect();
    rhs.push(wealth);
    let x = solve_real(&k, &rhs).map_err(|e| match e {
        LinalgError::Singular { .. } => OrthantError::DegenerateOrthant { signs: signs.to_vec() },
        other => other.into(),
    })?;
    let mut w = vec![T::zero(); free.len()];
    for (p, &i) in idx.iter().enumerate() {
        w[i] = x[p];
    }
    Ok((w, x[m]))
}

/// Minimizer of the objective over the closed orthant face
/// `{w : s_n·w_n ≥ 0, γ·sᵀw = W}` by a primal active-set iteration.
pub fn orthant_minimizer<T: Real>(
    stats: &AssetStats<T>,
    lambda: T,
    signs: &[i8],
    gamma: T,
    wealth: T,
) -> Result<OrthantSolution<T>, OrthantError> {
    let n = stats.n_assets();
    check_params(n, lambda, gamma, wealth)?;
    check_signs(n, signs)?;
    let budget = wealth / gamma;
    let sgn = |i: usize| T::lit(signs[i] as f64);

    // start from the best vertex of the face
    let start = (0..n)
        .min_by(|&a, &b| {
            let va = vertex_objective(stats, lambda, signs, budget, a);
            let vb = vertex_objective(stats, lambda, signs, budget, b);
            va.total_cmp(&vb)
        })
        .expect("at least one asset");
    let mut free = vec![false; n];
    free[start] = true;
    let mut w = vec![T::zero(); n];
    w[start] = sgn(start) * budget;
    let mut eta;

    for _ in 0..MAX_ACTIVE_SET_ITER {
        let (target, e) = bordered_solve(stats, lambda, signs, gamma, wealth, &free)?;
        eta = e;
        // u = s∘w, the nonnegative coordinates of the face
        let blocking = (0..n)
            .filter(|&i| free[i] && sgn(i) * target[i] < T::zero())
            .map(|i| {
                let u0 = sgn(i) * w[i];
                let u1 = sgn(i) * target[i];
                (u0 / (u0 - u1), i)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((step, hit)) = blocking {
            let step = step.max(T::zero()).min(T::one());
            for (wi, &ti) in w.iter_mut().zip(&target) {
                *wi += step * (ti - *wi);
            }
            w[hit] = T::zero();
            free[hit] = false;
            if !free.iter().any(|&f| f) {
                return Err(OrthantError::NoConvergence { signs: signs.to_vec() });
            }
            continue;
        }
        w = target;
        // dual check on pinned coordinates: s_n·(∂f/∂w_n − ηγs_n) ≥ 0
        let sw = stats.covariance().mul_vec(&w);
        let tol = T::lit(1e-12) * (T::one() + eta.abs() * gamma);
        let entering = (0..n)
            .filter(|&i| !free[i])
            .map(|i| {
                let grad = T::lit(2.0) * lambda * sw[i] - (T::one() - lambda) * stats.mean()[i];
                (sgn(i) * grad - eta * gamma, i)
            })
            .filter(|(d, _)| *d < -tol)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match entering {
            Some((_, i)) => free[i] = true,
            None => {
                let mut sol = finish(stats, lambda, gamma, signs.to_vec(), w, eta, &free);
                sol.feasible = true;
                return Ok(sol);
            }
        }
    }
    Err(OrthantError::NoConvergence { signs: signs.to_vec() })
}

fn vertex_objective<T: Real>(stats: &AssetStats<T>, lambda: T, signs: &[i8], budget: T, i: usize) -> T {
    let s = T::lit(signs[i] as f64);
    lambda * stats.covariance()[(i, i)] * budget * budget - (T::one() - lambda) * s * budget * stats.mean()[i]
}

/// Every distinct local optimum of `λwᵀSw − (1−λ)wᵀr` on `γΣ|w_n| = W`.
/// Each of the `2^N` orthants contributes its minimizer; a point survives
/// when all `2^z` orthants around it (`z` zero coordinates) agree on it.
/// Results are ordered by the first sign pattern that produced them.
pub fn enumerate_orthants<T: Real>(
    stats: &AssetStats<T>,
    lambda: T,
    gamma: T,
    wealth: T,
) -> Result<Enumeration<T>, OrthantError> {
    let n = stats.n_assets();
    check_params(n, lambda, gamma, wealth)?;
    let total = 1u64 << n;
    let per_orthant: Vec<Result<OrthantSolution<T>, OrthantError>> = (0..total)
        .into_par_iter()
        .map(|code| orthant_minimizer(stats, lambda, &signs_from_code(n, code), gamma, wealth))
        .collect();

    let tol = T::lit(DEDUP_TOL);
    let mut degenerate = 0;
    let mut groups: Vec<LocalOptimum<T>> = Vec::new();
    for res in per_orthant {
        let sol = match res {
            Ok(s) => s,
            Err(OrthantError::DegenerateOrthant { .. }) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let found = groups.iter_mut().find(|g| {
            g.solution
                .weights
                .iter()
                .zip(&sol.weights)
                .all(|(&a, &b)| (a - b).abs() <= tol)
        });
        match found {
            Some(g) => g.orthants += 1,
            None => {
                let zero_count = sol.weights.iter().filter(|&&w| w.abs() <= tol).count();
                groups.push(LocalOptimum {
                    solution: sol,
                    orthants: 1,
                    zero_count,
                });
            }
        }
    }
    let optima = groups
        .into_iter()
        .filter(|g| g.orthants == 1usize << g.zero_count)
        .collect();
    Ok(Enumeration {
        optima,
        degenerate,
        orthants_visited: total as usize,
    })
}

/// RNG for the instance of size `n` under `seed`.
fn instance_rng(seed: u64, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng
}

/// The random instance that `multiplicity_scan` uses for size `n`. It is
/// also the first replica drawn by `median_counts`.
pub fn scan_instance<T: Real>(seed: u64, n: usize) -> AssetStats<T> {
    random_instance(n, &mut instance_rng(seed, n))
}

/// Local-optimum counts for one random instance per size in `n_range`.
pub fn multiplicity_scan<T: Real>(
    n_range: impl IntoIterator<Item = usize>,
    seed: u64,
    lambda: T,
    gamma: T,
    wealth: T,
) -> Result<MultiplicityReport, OrthantError> {
    let mut rows = Vec::new();
    for n in n_range {
        check_params(n, lambda, gamma, wealth)?;
        let stats: AssetStats<T> = scan_instance(seed, n);
        let e = enumerate_orthants(&stats, lambda, gamma, wealth)?;
        rows.push(MultiplicityRow {
            n,
            count: e.count(),
            distinct_objectives: e.distinct_objectives(),
            log_count: (e.count() as f64).ln(),
        });
    }
    Ok(MultiplicityReport { rows, seed })
}

/// Median local-optimum count over `replicas` instances for each size.
pub fn median_counts<T: Real>(
    n_range: impl IntoIterator<Item = usize>,
    seed: u64,
    replicas: usize,
    lambda: T,
    gamma: T,
    wealth: T,
) -> Result<Vec<(usize, f64)>, OrthantError> {
    let mut out = Vec::new();
    for n in n_range {
        check_params(n, lambda, gamma, wealth)?;
        let mut rng = instance_rng(seed, n);
        let mut counts = Vec::with_capacity(replicas);
        for _ in 0..replicas {
            let stats: AssetStats<T> = random_instance(n, &mut rng);
            counts.push(enumerate_orthants(&stats, lambda, gamma, wealth)?.count());
        }
        counts.sort_unstable();
        let m = counts.len();
        let median = if m == 0 {
            0.0
        } else if m % 2 == 1 {
            counts[m / 2] as f64
        } else {
            (counts[m / 2 - 1] + counts[m / 2]) as f64 / 2.0
        };
        out.push((n, median));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isotropic2() -> AssetStats<f64> {
        AssetStats::unnamed(vec![0.0, 0.0], Matrix::identity(2), 10).unwrap()
    }

    #[test]
    fn one_asset_pinned() {
        let st = AssetStats::<f64>::unnamed(vec![0.3], Matrix::from_rows(&[[0.5]]), 10).unwrap();
        for lambda in [0.1, 0.5, 1.0] {
            let s = solve_orthant(&st, lambda, &[1], 1.0, 1.0).unwrap();
            assert!((s.weights[0] - 1.0).abs() < 1e-15);
            assert!(s.feasible);
        }
        let e = enumerate_orthants(&st, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(e.count(), 2);
    }

    #[test]
    fn isotropic_hand_solutions() {
        let st = isotropic2();
        let a = solve_orthant(&st, 1.0, &[1, 1], 1.0, 1.0).unwrap();
        assert!((a.weights[0] - 0.5).abs() < 1e-15 && (a.weights[1] - 0.5).abs() < 1e-15);
        assert!((a.objective - 0.5).abs() < 1e-15);
        let b = solve_orthant(&st, 1.0, &[1, -1], 1.0, 1.0).unwrap();
        assert!((b.weights[0] - 0.5).abs() < 1e-15 && (b.weights[1] + 0.5).abs() < 1e-15);
        assert!((b.objective - 0.5).abs() < 1e-15);
        assert!(a.kkt_residual < 1e-14 && b.kkt_residual < 1e-14);

        let e = enumerate_orthants(&st, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(e.count(), 4);
        assert_eq!(e.distinct_objectives(), 1);
    }

    #[test]
    fn infeasible_orthant_flagged() {
        // on −w₁ + w₂ = 1 the hyperplane minimizer has w₂ = −1.5/101 when
        // asset 2 carries a strongly negative return
        let st = AssetStats::<f64>::unnamed(vec![0.0, -5.0], Matrix::from_diag(&[1.0, 100.0]), 10).unwrap();
        let s = solve_orthant(&st, 0.5, &[-1, 1], 1.0, 1.0).unwrap();
        assert!(!s.feasible);
        assert!((s.weights[1] + 1.5 / 101.0).abs() < 1e-14);
        let m = orthant_minimizer(&st, 0.5, &[-1, 1], 1.0, 1.0).unwrap();
        assert!(m.feasible);
        assert_eq!(m.weights, vec![-1.0, 0.0]);
    }

    #[test]
    fn minimizer_matches_interior_solution() {
        let st = isotropic2();
        let a = solve_orthant(&st, 1.0, &[-1, 1], 1.0, 2.0).unwrap();
        let b = orthant_minimizer(&st, 1.0, &[-1, 1], 1.0, 2.0).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn parameter_errors() {
        let st = isotropic2();
        assert!(matches!(solve_orthant(&st, 0.0, &[1, 1], 1.0, 1.0), Err(OrthantError::LambdaOutOfRange(_))));
        assert!(matches!(solve_orthant(&st, 0.5, &[1], 1.0, 1.0), Err(OrthantError::SignLength { .. })));
        assert!(matches!(solve_orthant(&st, 0.5, &[1, 0], 1.0, 1.0), Err(OrthantError::BadSign)));
        assert!(matches!(solve_orthant(&st, 0.5, &[1, 1], 0.0, 1.0), Err(OrthantError::InvalidBudget { .. })));
        let big = AssetStats::<f64>::unnamed(vec![0.0; 17], Matrix::identity(17), 10).unwrap();
        assert!(matches!(
            enumerate_orthants(&big, 0.5, 1.0, 1.0),
            Err(OrthantError::TooManyAssets { n: 17, cap: 16 })
        ));
    }

    #[test]
    fn singular_kkt_is_degenerate() {
        // λ = 1 with a zero covariance leaves the bordered system rank deficient
        let st = AssetStats::<f64>::unnamed(vec![0.0, 0.0], Matrix::zeros(2, 2), 10).unwrap();
        assert!(matches!(
            solve_orthant(&st, 1.0, &[1, 1], 1.0, 1.0),
            Err(OrthantError::DegenerateOrthant { .. })
        ));
    }

    #[test]
    fn scan_single_asset_and_repeatable() {
        let rep = multiplicity_scan::<f64>([1], 3, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(rep.rows[0].count, 2);
        let a = multiplicity_scan::<f64>(2..=5, 11, 0.5, 1.0, 1.0).unwrap();
        let b = multiplicity_scan::<f64>(2..=5, 11, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(a, b);
        for row in &a.rows {
            assert!(row.count >= 1 && row.count <= 1 << row.n);
        }
    }
}
