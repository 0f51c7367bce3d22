//! Stationary portfolios under the quadratic margin constraint `‖w‖² = k`.
//!
//! For a risk aversion `λ ∈ (0, 1)` the critical points of
//! `λ wᵀSw − (1−λ) wᵀr − μ (wᵀw − k)` satisfy
//!
//! ```text
//! 2λ S w − (1−λ) r − 2μ w = 0,      wᵀw = k.
//! ```
//!
//! Eliminating `w = ½(1−λ)(λS − μI)⁻¹ r` leaves the secular equation
//! `¼(1−λ)² rᵀ(λS − μI)⁻² r = k`, whose `2N` roots are the eigenvalues of
//! the block matrix `[[0, I], [A, B]]` with
//! `A = (1−λ)²/(4k) r rᵀ − λ² S²` and `B = 2λ S`. The eigenvalues only
//! locate `μ`; each portfolio is rebuilt from the resolvent and then checked
//! against both stationarity conditions.

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::{
    general_eig, solve_complex, sym_eig, CMatrix, LinalgError, Matrix, SymEigen, DEFAULT_EIG_TOL,
    DEFAULT_SYM_TOL,
};
use crate::market_data::AssetStats;
use crate::scalar::{cdot, cnorm2, norm2};
use crate::Real;

/// Newton steps spent refining each located root.
const POLISH_STEPS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("risk aversion {lambda} outside {range}")]
    LambdaOutOfRange { lambda: f64, range: &'static str },
    #[error("expected returns are identically zero; the return-only objective is degenerate")]
    DegenerateObjective,
    #[error("resolvent is numerically singular at mu = {mu_re:e}{mu_im:+e}i (condition {condition:e})")]
    SingularResolvent {
        mu_re: f64,
        mu_im: f64,
        condition: f64,
    },
    #[error("linear algebra failure at lambda = {lambda}: {source}")]
    Linalg {
        lambda: f64,
        #[source]
        source: LinalgError,
    },
}

/// Tolerances and market parameters for the margin-constrained solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Margin fraction `γ > 0`.
    pub gamma: T,
    /// Invested wealth `W > 0`.
    pub wealth: T,
    /// Number of λ intervals; the grid is `t / lambda_steps`, `t = 0..=lambda_steps`.
    pub lambda_steps: usize,
    pub residual_tol: T,
    /// Relative threshold on imaginary parts: `|Im μ| ≤ imag_tol·(1+|μ|)` is real.
    pub imag_tol: T,
    pub resolvent_condition_cap: T,
    pub eig_tol: T,
    pub sym_tol: T,
    /// Refine located roots by Newton steps on the secular function.
    pub polish: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::one(),
            wealth: T::one(),
            lambda_steps: 1000,
            residual_tol: T::lit(1e-6),
            imag_tol: T::lit(1e-9),
            resolvent_condition_cap: T::lit(1e12),
            eig_tol: T::lit(DEFAULT_EIG_TOL),
            sym_tol: T::lit(DEFAULT_SYM_TOL),
            polish: true,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn new(gamma: T, wealth: T, lambda_steps: usize) -> Result<Self, SolverError> {
        let cfg = Self {
            gamma,
            wealth,
            lambda_steps,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration whose norm budget is exactly `k` (γ = 1, W = k).
    pub fn with_norm_budget(k: T) -> Result<Self, SolverError> {
        Self::new(T::one(), k, 1000)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.gamma) {
            return Err(SolverError::InvalidConfig(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !positive(self.wealth) {
            return Err(SolverError::InvalidConfig(format!("wealth must be > 0, got {}", self.wealth)));
        }
        if !positive(self.norm_budget()) {
            return Err(SolverError::InvalidConfig("norm budget W/gamma must be > 0".into()));
        }
        if self.lambda_steps < 2 {
            return Err(SolverError::InvalidConfig(format!(
                "lambda_steps must be >= 2, got {}",
                self.lambda_steps
            )));
        }
        for (name, v) in [
            ("residual_tol", self.residual_tol),
            ("imag_tol", self.imag_tol),
            ("resolvent_condition_cap", self.resolvent_condition_cap),
            ("eig_tol", self.eig_tol),
            ("sym_tol", self.sym_tol),
        ] {
            if !positive(v) {
                return Err(SolverError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// `k = W / γ`.
    pub fn norm_budget(&self) -> T {
        self.wealth / self.gamma
    }

    /// Absolute imaginary-part threshold at `mu`.
    pub fn imag_threshold(&self, mu: Complex<T>) -> T {
        self.imag_tol * (T::one() + mu.norm())
    }

    pub fn lambda_grid(&self) -> Vec<T> {
        let steps = T::from_count(self.lambda_steps);
        (0..=self.lambda_steps)
            .map(|t| T::from_count(t) / steps)
            .collect()
    }
}

/// Lagrange multiplier with its (possibly complex) weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub mu: Complex<T>,
    pub w: Vec<Complex<T>>,
}

impl<T: Real> EigenPair<T> {
    pub fn real_weights(&self) -> Vec<T> {
        self.w.iter().map(|z| z.re).collect()
    }

    pub fn imag_weights(&self) -> Vec<T> {
        self.w.iter().map(|z| z.im).collect()
    }

    pub fn conj(&self) -> Self {
        Self {
            mu: self.mu.conj(),
            w: self.w.iter().map(|z| z.conj()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CandidateKind {
    Real,
    Complex,
}

/// A stationary point of the Lagrangian at one λ, with its residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution<T> {
    pub lambda: T,
    pub pair: EigenPair<T>,
    pub stationarity_residual: T,
    /// `|wᵀw − k|` (bilinear for complex `w`).
    pub norm_residual: T,
    /// Secular-equation residual; `None` at the λ = 1 endpoint.
    pub secular_residual: Option<T>,
    /// Condition number of `λS − μI`; `None` at the endpoints.
    pub resolvent_condition: Option<T>,
    pub kind: CandidateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpuriousReason<T> {
    /// `λS − μI` is numerically singular at this root.
    SingularResolvent { condition: T },
    /// A portfolio was recovered but violates a residual bound.
    Residual,
}

/// An eigenvalue of the linearization that does not yield a valid portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousRoot<T> {
    pub lambda: T,
    pub mu: Complex<T>,
    pub reason: SpuriousReason<T>,
    /// The rejected candidate when one could be formed.
    pub candidate: Option<CandidateSolution<T>>,
}

/// Everything found at one interior λ.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSolution<T> {
    pub lambda: T,
    /// All `2N` eigenvalues of the linearization, as returned by the eigensolver.
    pub eigenvalues: Vec<Complex<T>>,
    pub accepted: Vec<CandidateSolution<T>>,
    pub spurious: Vec<SpuriousRoot<T>>,
}

/// `[[0, I], [A, B]]` with `A = (1−λ)²/(4k) r rᵀ − λ² S²`, `B = 2λ S`.
pub fn build_companion<T: Real>(stats: &AssetStats<T>, lambda: T, k: T) -> Matrix<T> {
    let n = stats.n_assets();
    let s = stats.covariance();
    let r = stats.mean();
    let s2 = s.matmul(s).expect("covariance is square");
    let one = T::one();
    let rank_one = (one - lambda) * (one - lambda) / (T::lit(4.0) * k);
    let lam2 = lambda * lambda;
    let two_lam = T::lit(2.0) * lambda;
    Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => T::zero(),
        (true, false) => {
            if j - n == i {
                one
            } else {
                T::zero()
            }
        }
        (false, true) => rank_one * r[i - n] * r[j] - lam2 * s2[(i - n, j)],
        (false, false) => two_lam * s[(i - n, j - n)],
    })
}

/// `‖2λSw − (1−λ)r − 2μw‖₂`.
pub fn stationarity_residual<T: Real>(
    stats: &AssetStats<T>,
    lambda: T,
    mu: Complex<T>,
    w: &[Complex<T>],
) -> T {
    let s = stats.covariance();
    let r = stats.mean();
    let two = T::lit(2.0);
    let sw = s.to_complex().mul_vec(w);
    let res: Vec<Complex<T>> = (0..w.len())
        .map(|i| sw[i] * (two * lambda) - Complex::new((T::one() - lambda) * r[i], T::zero()) - mu * w[i] * two)
        .collect();
    cnorm2(&res)
}

/// Per-problem solver: caches the spectrum of `S` used for conditioning and
/// for the λ = 1 endpoint.
#[derive(Debug, Clone)]
pub struct MarginSolver<'a, T> {
    stats: &'a AssetStats<T>,
    cfg: SolverConfig<T>,
    spectrum: SymEigen<T>,
    r_norm: T,
}

impl<'a, T: Real> MarginSolver<'a, T> {
    pub fn new(stats: &'a AssetStats<T>, cfg: SolverConfig<T>) -> Result<Self, SolverError> {
        cfg.validate()?;
        let spectrum = sym_eig(stats.covariance(), cfg.sym_tol).map_err(|source| SolverError::Linalg {
            lambda: f64::NAN,
            source,
        })?;
        Ok(Self {
            stats,
            r_norm: norm2(stats.mean()),
            cfg,
            spectrum,
        })
    }

    pub fn stats(&self) -> &AssetStats<T> {
        self.stats
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.cfg
    }

    /// Eigen-decomposition of the covariance matrix.
    pub fn covariance_spectrum(&self) -> &SymEigen<T> {
        &self.spectrum
    }

    pub fn norm_budget(&self) -> T {
        self.cfg.norm_budget()
    }

    pub fn build_companion(&self, lambda: T) -> Matrix<T> {
        build_companion(self.stats, lambda, self.norm_budget())
    }

    /// 2-norm condition number of the normal matrix `λS − μI`.
    pub fn resolvent_condition(&self, lambda: T, mu: Complex<T>) -> T {
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for &d in &self.spectrum.values {
            let gap = (Complex::new(lambda * d, T::zero()) - mu).norm();
            lo = lo.min(gap);
            hi = hi.max(gap);
        }
        if lo == T::zero() {
            T::infinity()
        } else {
            hi / lo
        }
    }

    fn check_resolvent(&self, lambda: T, mu: Complex<T>) -> Result<T, SolverError> {
        let cond = self.resolvent_condition(lambda, mu);
        if !(cond <= self.cfg.resolvent_condition_cap) {
            return Err(singular(mu, cond));
        }
        Ok(cond)
    }

    fn resolvent(&self, lambda: T) -> impl Fn(Complex<T>) -> CMatrix<T> + '_ {
        move |mu| CMatrix::shifted(self.stats.covariance(), lambda, mu)
    }

    /// `w = ½(1−λ)(λS − μI)⁻¹ r`.
    pub fn recover_portfolio(&self, lambda: T, mu: Complex<T>) -> Result<Vec<Complex<T>>, SolverError> {
        check_interior_or_zero(lambda)?;
        self.check_resolvent(lambda, mu)?;
        self.solve_resolvent(lambda, mu)
    }

    fn solve_resolvent(&self, lambda: T, mu: Complex<T>) -> Result<Vec<Complex<T>>, SolverError> {
        let half = T::lit(0.5) * (T::one() - lambda);
        let rhs: Vec<Complex<T>> = self
            .stats
            .mean()
            .iter()
            .map(|&x| Complex::new(half * x, T::zero()))
            .collect();
        solve_complex(&(self.resolvent(lambda))(mu), &rhs).map_err(|e| match e {
            LinalgError::Singular { .. } => singular(mu, self.resolvent_condition(lambda, mu)),
            source => SolverError::Linalg {
                lambda: lambda.to_f64().unwrap_or(f64::NAN),
                source,
            },
        })
    }

    /// `|¼(1−λ)² rᵀ(λS − μI)⁻² r − k|`.
    pub fn secular_residual(&self, lambda: T, mu: Complex<T>) -> Result<T, SolverError> {
        check_interior_or_zero(lambda)?;
        self.check_resolvent(lambda, mu)?;
        let w = self.solve_resolvent(lambda, mu)?;
        Ok(self.secular_value(&w).norm())
    }

    fn secular_value(&self, w: &[Complex<T>]) -> Complex<T> {
        cdot(w, w) - Complex::new(self.norm_budget(), T::zero())
    }

    /// Newton refinement of a located root of `f(μ) = wᵀw − k`, using
    /// `f'(μ) = 2 wᵀ(λS − μI)⁻¹ w`. Steps are taken only while `|f|` decreases.
    fn polish(&self, lambda: T, mu0: Complex<T>) -> Complex<T> {
        let nearest_pole = self
            .spectrum
            .values
            .iter()
            .map(|&d| (Complex::new(lambda * d, T::zero()) - mu0).norm())
            .fold(T::infinity(), T::min);
        let resolvent = self.resolvent(lambda);
        let mut mu = mu0;
        let Ok(mut w) = self.solve_resolvent(lambda, mu) else {
            return mu0;
        };
        let mut f = self.secular_value(&w);
        for step in 0..POLISH_STEPS {
            if f.norm() == T::zero() {
                break;
            }
            let Ok(z) = solve_complex(&resolvent(mu), &w) else {
                break;
            };
            let df = cdot(&w, &z) * T::lit(2.0);
            if df.norm() == T::zero() {
                break;
            }
            let delta = f / df;
            if step == 0 && delta.norm() > T::lit(1e-3) * nearest_pole {
                // the eigenvalue is not close enough for a safe local refinement
                break;
            }
            let next = mu - delta;
            let Ok(w_next) = self.solve_resolvent(lambda, next) else {
                break;
            };
            let f_next = self.secular_value(&w_next);
            if !(f_next.norm() < f.norm()) {
                break;
            }
            mu = next;
            w = w_next;
            f = f_next;
        }
        mu
    }

    fn evaluate_candidate(&self, lambda: T, pair: EigenPair<T>, condition: Option<T>) -> CandidateSolution<T> {
        let stationarity_residual = stationarity_residual(self.stats, lambda, pair.mu, &pair.w);
        let norm_residual = self.secular_value(&pair.w).norm();
        let tau = self.cfg.imag_threshold(pair.mu);
        let is_real = pair.mu.im.abs() <= tau && pair.w.iter().all(|z| z.im.abs() <= tau);
        CandidateSolution {
            lambda,
            secular_residual: condition.map(|_| norm_residual),
            resolvent_condition: condition,
            stationarity_residual,
            norm_residual,
            pair,
            kind: if is_real {
                CandidateKind::Real
            } else {
                CandidateKind::Complex
            },
        }
    }

    /// Whether a candidate meets the stationarity and norm bounds.
    pub fn meets_tolerances(&self, c: &CandidateSolution<T>) -> bool {
        let tol = self.cfg.residual_tol;
        let k = self.norm_budget();
        c.stationarity_residual <= tol * (T::one() + self.r_norm)
            && c.norm_residual <= tol * k
            && c.secular_residual.is_none_or(|s| s <= tol * k)
            && c.pair.w.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// All stationary portfolios at an interior λ.
    pub fn solve_lambda(&self, lambda: T) -> Result<LambdaSolution<T>, SolverError> {
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(SolverError::LambdaOutOfRange {
                lambda: lambda.to_f64().unwrap_or(f64::NAN),
                range: "(0, 1)",
            });
        }
        let lambda_f64 = lambda.to_f64().unwrap_or(f64::NAN);
        let companion = self.build_companion(lambda);
        let spectrum = general_eig(&companion, false, self.cfg.eig_tol).map_err(|source| SolverError::Linalg {
            lambda: lambda_f64,
            source,
        })?;

        let mut accepted = Vec::new();
        let mut spurious = Vec::new();

        if self.r_norm == T::zero() {
            // every eigenvalue sits on a pole; the stationary points are the
            // scaled eigenvectors of S with μ = λ·d
            for &mu in &spectrum.eigenvalues {
                spurious.push(SpuriousRoot {
                    lambda,
                    mu,
                    reason: SpuriousReason::SingularResolvent {
                        condition: self.resolvent_condition(lambda, mu),
                    },
                    candidate: None,
                });
            }
            accepted = self.scaled_eigenvectors(lambda, |d| lambda * d);
        } else {
            for &raw in &spectrum.eigenvalues {
                let mut mu = raw;
                if raw.im.abs() <= self.cfg.imag_threshold(raw) {
                    mu = Complex::new(raw.re, T::zero());
                }
                let condition = self.resolvent_condition(lambda, mu);
                if !(condition <= self.cfg.resolvent_condition_cap) {
                    spurious.push(SpuriousRoot {
                        lambda,
                        mu: raw,
                        reason: SpuriousReason::SingularResolvent { condition },
                        candidate: None,
                    });
                    continue;
                }
                if self.cfg.polish {
                    mu = self.polish(lambda, mu);
                }
                let w = match self.solve_resolvent(lambda, mu) {
                    Ok(w) => w,
                    Err(SolverError::SingularResolvent { condition, .. }) => {
                        spurious.push(SpuriousRoot {
                            lambda,
                            mu: raw,
                            reason: SpuriousReason::SingularResolvent {
                                condition: T::lit(condition),
                            },
                            candidate: None,
                        });
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let condition = self.resolvent_condition(lambda, mu);
                let cand = self.evaluate_candidate(lambda, EigenPair { mu, w }, Some(condition));
                if self.meets_tolerances(&cand) {
                    accepted.push(cand);
                } else {
                    spurious.push(SpuriousRoot {
                        lambda,
                        mu: raw,
                        reason: SpuriousReason::Residual,
                        candidate: Some(cand),
                    });
                }
            }
        }
        accepted.sort_by(|a, b| {
            a.pair
                .mu
                .re
                .total_cmp(&b.pair.mu.re)
                .then(a.pair.mu.im.total_cmp(&b.pair.mu.im))
        });
        Ok(LambdaSolution {
            lambda,
            eigenvalues: spectrum.eigenvalues,
            accepted,
            spurious,
        })
    }

    fn scaled_eigenvectors(&self, lambda: T, mu_of: impl Fn(T) -> T) -> Vec<CandidateSolution<T>> {
        let root_k = self.norm_budget().sqrt();
        (0..self.spectrum.dim())
            .map(|j| {
                let mu = Complex::new(mu_of(self.spectrum.values[j]), T::zero());
                let w = self
                    .spectrum
                    .vector(j)
                    .into_iter()
                    .map(|x| Complex::new(root_k * x, T::zero()))
                    .collect();
                self.evaluate_candidate(lambda, EigenPair { mu, w }, None)
            })
            .collect()
    }

    /// Minimum-risk endpoint: `w = √k·q_i`, `μ = d_i` for each eigenpair of `S`.
    pub fn solve_lambda_one(&self) -> Vec<CandidateSolution<T>> {
        self.scaled_eigenvectors(T::one(), |d| d)
    }

    /// Maximum-return endpoint: `w = √k·r/‖r‖`, `μ = −½‖r‖/√k`.
    pub fn solve_lambda_zero(&self) -> Result<CandidateSolution<T>, SolverError> {
        if self.r_norm == T::zero() {
            return Err(SolverError::DegenerateObjective);
        }
        let root_k = self.norm_budget().sqrt();
        let mu = Complex::new(-T::lit(0.5) * self.r_norm / root_k, T::zero());
        let w = self
            .stats
            .mean()
            .iter()
            .map(|&x| Complex::new(root_k * x / self.r_norm, T::zero()))
            .collect();
        Ok(self.evaluate_candidate(T::zero(), EigenPair { mu, w }, None))
    }
}

fn singular<T: Real>(mu: Complex<T>, condition: T) -> SolverError {
    SolverError::SingularResolvent {
        mu_re: mu.re.to_f64().unwrap_or(f64::NAN),
        mu_im: mu.im.to_f64().unwrap_or(f64::NAN),
        condition: condition.to_f64().unwrap_or(f64::INFINITY),
    }
}

fn check_interior_or_zero<T: Real>(lambda: T) -> Result<(), SolverError> {
    if lambda >= T::zero() && lambda < T::one() {
        Ok(())
    } else {
        Err(SolverError::LambdaOutOfRange {
            lambda: lambda.to_f64().unwrap_or(f64::NAN),
            range: "[0, 1)",
        })
    }
}
