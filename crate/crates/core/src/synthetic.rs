//! Seeded synthetic inputs: one-factor price histories and random
//! covariance/return instances for the orthant enumerator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::linalg::Matrix;
use crate::market_data::{AssetStats, DataError, PriceTable};
use crate::Real;

/// Deterministic RNG used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Daily closing prices for `n_assets` driven by one common market factor
/// plus idiosyncratic noise. Dates are zero-padded labels `d00000, d00001, …`.
pub fn synthetic_prices<T: Real>(n_assets: usize, n_days: usize, seed: u64) -> Result<PriceTable<T>, DataError> {
    let mut rng = rng_from_seed(seed);
    let market = Normal::new(0.0003, 0.012).expect("valid normal");
    let drift = Normal::new(0.0004, 0.0006).expect("valid normal");
    let betas: Vec<f64> = (0..n_assets).map(|_| rng.random_range(0.5..1.5)).collect();
    let drifts: Vec<f64> = (0..n_assets).map(|_| drift.sample(&mut rng)).collect();
    let idio: Vec<f64> = (0..n_assets).map(|_| rng.random_range(0.008..0.025)).collect();
    let mut last: Vec<f64> = (0..n_assets).map(|_| rng.random_range(20.0..300.0)).collect();

    let mut data = vec![0.0f64; n_assets * n_days];
    for t in 0..n_days {
        if t > 0 {
            let f = market.sample(&mut rng);
            for n in 0..n_assets {
                let eps: f64 = StandardNormal.sample(&mut rng);
                let ret = (drifts[n] + betas[n] * f + idio[n] * eps).max(-0.5);
                last[n] *= 1.0 + ret;
            }
        }
        for n in 0..n_assets {
            data[n * n_days + t] = last[n];
        }
    }
    let tickers = (1..=n_assets).map(|i| format!("SYN{i:02}")).collect();
    let dates = (0..n_days).map(|t| format!("d{t:05}")).collect();
    let prices = Matrix::new(n_assets, n_days, data.into_iter().map(T::lit).collect())?;
    PriceTable::new(tickers, dates, prices)
}

/// Random instance with `S = GᵀG/N + 1e-6·I` for standard normal `G` and
/// returns `0.01·z`, `z` standard normal.
pub fn random_instance<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> AssetStats<T> {
    let g: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
    let nf = n as f64;
    let cov = Matrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            s += g[k * n + i] * g[k * n + j];
        }
        let s = s / nf + if i == j { 1e-6 } else { 0.0 };
        T::lit(s)
    });
    let mean = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(0.01 * z)
        })
        .collect();
    AssetStats::unnamed(mean, cov, 0).expect("Gram matrix plus ridge is positive definite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prices_are_reproducible_and_positive() {
        let a = synthetic_prices::<f64>(3, 50, 9).unwrap();
        let b = synthetic_prices::<f64>(3, 50, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.prices().as_slice().iter().all(|&p| p > 0.0));
        assert_ne!(a, synthetic_prices::<f64>(3, 50, 10).unwrap());
    }

    #[test]
    fn instance_is_positive_definite() {
        let mut rng = rng_from_seed(1);
        let st: AssetStats<f64> = random_instance(6, &mut rng);
        let eig = crate::linalg::sym_eig(st.covariance(), 1e-10).unwrap();
        assert!(eig.min() > 0.0);
    }
}
