//! Mean-variance portfolio selection under a quadratic margin constraint
//! `‖w‖² = W/γ`, solved through a linearized `2N × 2N` eigenproblem swept
//! over the risk-aversion parameter λ.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod frontier;
pub mod linalg;
pub mod market_data;
pub mod orthant;
pub mod scalar;
pub mod solver;
pub mod synthetic;

pub use scalar::Real;

pub type RealMatrix = linalg::Matrix<f64>;
pub type ComplexMatrix = linalg::CMatrix<f64>;
pub type PriceTable64 = market_data::PriceTable<f64>;
pub type ReturnTable64 = market_data::ReturnTable<f64>;
pub type AssetStats64 = market_data::AssetStats<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type MarginSolver64<'a> = solver::MarginSolver<'a, f64>;
pub type CandidateSolution64 = solver::CandidateSolution<f64>;
pub type LambdaSolution64 = solver::LambdaSolution<f64>;
pub type PortfolioRecord64 = frontier::PortfolioRecord<f64>;
pub type FrontierSet64 = frontier::FrontierSet<f64>;
pub type OrthantSolution64 = orthant::OrthantSolution<f64>;
