//! Price ingestion, daily simple returns and sample moment estimation.
//!
//! Prices come in a wide CSV layout: a `date` column followed by one column
//! per ticker, rows in ascending date order. A record of `P` closing prices
//! yields `M = P − 1` returns, and both the mean vector and the covariance
//! matrix are normalized by `M` (population estimator).

use std::io::Read;

use thiserror::Error;

use crate::linalg::{sym_eig, LinalgError, Matrix, DEFAULT_SYM_TOL};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("header must start with `{expected}` followed by at least one ticker")]
    Header { expected: String },
    #[error("row {row}, column {column}: missing value")]
    MissingCell { row: usize, column: String },
    #[error("row {row}, column {column}: cannot parse `{value}` as a price")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column}: price {value} is not strictly positive")]
    NonPositivePrice {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("row {row}: date `{date}` does not follow `{previous}`")]
    DateOrder {
        row: usize,
        date: String,
        previous: String,
    },
    #[error("need at least {needed} price rows, got {got}")]
    TooFewPrices { needed: usize, got: usize },
    #[error("need at least 2 returns per asset, got {got}")]
    InsufficientData { got: usize },
    #[error("inconsistent shapes: {0}")]
    Shape(String),
    #[error("covariance is not positive semidefinite: smallest eigenvalue {min_eig:e}")]
    NotPsd { min_eig: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Column layout of a wide price CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLayout {
    pub delimiter: u8,
    pub date_column: String,
}

impl Default for CsvLayout {
    fn default() -> Self {
        Self {
            delimiter: b',',
            date_column: "date".to_owned(),
        }
    }
}

/// Closing prices, one row per ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable<T> {
    tickers: Vec<String>,
    dates: Vec<String>,
    /// N×P, row `n` is the price history of `tickers[n]`.
    prices: Matrix<T>,
}

impl<T: Real> PriceTable<T> {
    pub fn new(tickers: Vec<String>, dates: Vec<String>, prices: Matrix<T>) -> Result<Self, DataError> {
        if prices.rows() != tickers.len() || prices.cols() != dates.len() {
            return Err(DataError::Shape(format!(
                "{} tickers x {} dates vs {}x{} prices",
                tickers.len(),
                dates.len(),
                prices.rows(),
                prices.cols()
            )));
        }
        if dates.len() < 3 {
            return Err(DataError::TooFewPrices {
                needed: 3,
                got: dates.len(),
            });
        }
        for t in 1..dates.len() {
            if dates[t] <= dates[t - 1] {
                return Err(DataError::DateOrder {
                    row: t + 1,
                    date: dates[t].clone(),
                    previous: dates[t - 1].clone(),
                });
            }
        }
        for (n, ticker) in tickers.iter().enumerate() {
            for (t, &p) in prices.row(n).iter().enumerate() {
                if !(p > T::zero()) {
                    return Err(DataError::NonPositivePrice {
                        row: t + 1,
                        column: ticker.clone(),
                        value: p.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(Self {
            tickers,
            dates,
            prices,
        })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn prices(&self) -> &Matrix<T> {
        &self.prices
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }
}

/// Simple daily returns, one row per ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTable<T> {
    pub tickers: Vec<String>,
    /// N×M.
    pub returns: Matrix<T>,
}

/// Mean-return vector and covariance matrix of N assets.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetStats<T> {
    tickers: Vec<String>,
    mean: Vec<T>,
    covariance: Matrix<T>,
    sample_count: usize,
}

impl<T: Real> AssetStats<T> {
    /// Validates shapes, symmetrizes the covariance (upper triangle wins) and
    /// checks positive semidefiniteness.
    pub fn new(
        tickers: Vec<String>,
        mean: Vec<T>,
        covariance: Matrix<T>,
        sample_count: usize,
    ) -> Result<Self, DataError> {
        let n = mean.len();
        if tickers.len() != n || covariance.rows() != n || covariance.cols() != n {
            return Err(DataError::Shape(format!(
                "{} tickers, {} means, {}x{} covariance",
                tickers.len(),
                n,
                covariance.rows(),
                covariance.cols()
            )));
        }
        if let Some(i) = mean.iter().position(|x| !x.is_finite()) {
            return Err(DataError::Shape(format!("non-finite mean return at index {i}")));
        }
        let covariance = Matrix::new(
            n,
            n,
            Matrix::from_fn(n, n, |i, j| {
                if i <= j {
                    covariance[(i, j)]
                } else {
                    covariance[(j, i)]
                }
            })
            .into_vec(),
        )?;
        let eig = sym_eig(&covariance, T::lit(DEFAULT_SYM_TOL))?;
        let floor = -T::lit(1e-12) * covariance.frobenius_norm();
        if eig.min() < floor {
            return Err(DataError::NotPsd {
                min_eig: eig.min().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            tickers,
            mean,
            covariance,
            sample_count,
        })
    }

    /// Stats with generated tickers `A1..AN`.
    pub fn unnamed(mean: Vec<T>, covariance: Matrix<T>, sample_count: usize) -> Result<Self, DataError> {
        let tickers = (1..=mean.len()).map(|i| format!("A{i}")).collect();
        Self::new(tickers, mean, covariance, sample_count)
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    /// Expected returns `r`.
    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Covariance `S`.
    pub fn covariance(&self) -> &Matrix<T> {
        &self.covariance
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn n_assets(&self) -> usize {
        self.mean.len()
    }
}

/// Parses a wide price CSV.
pub fn load_prices<T: Real, R: Read>(source: R, layout: &CsvLayout) -> Result<PriceTable<T>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(layout.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let csv_err = |e: csv::Error| DataError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || header.get(0).map(str::trim) != Some(layout.date_column.as_str()) {
        return Err(DataError::Header {
            expected: layout.date_column.clone(),
        });
    }
    let tickers: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_owned()).collect();
    let n = tickers.len();

    let mut dates = Vec::new();
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); n];
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // header is row 0
        let row = idx + 1;
        let date = record.get(0).map(str::trim).unwrap_or("");
        if date.is_empty() {
            return Err(DataError::MissingCell {
                row,
                column: layout.date_column.clone(),
            });
        }
        for (k, ticker) in tickers.iter().enumerate() {
            let cell = record.get(k + 1).map(str::trim).unwrap_or("");
            if cell.is_empty() {
                return Err(DataError::MissingCell {
                    row,
                    column: ticker.clone(),
                });
            }
            let value: f64 = cell.parse().map_err(|_| DataError::BadCell {
                row,
                column: ticker.clone(),
                value: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(DataError::BadCell {
                    row,
                    column: ticker.clone(),
                    value: cell.to_owned(),
                });
            }
            columns[k].push(T::lit(value));
        }
        if record.len() > n + 1 {
            return Err(DataError::Csv {
                line: record.position().map_or(0, |p| p.line()),
                message: format!("expected {} fields, found {}", n + 1, record.len()),
            });
        }
        dates.push(date.to_owned());
    }
    let p = dates.len();
    let prices = Matrix::new(n, p, columns.into_iter().flatten().collect())?;
    PriceTable::new(tickers, dates, prices)
}

/// `R(n,t) = (P(n,t+1) − P(n,t)) / P(n,t)`.
pub fn compute_returns<T: Real>(prices: &PriceTable<T>) -> ReturnTable<T> {
    let n = prices.n_assets();
    let m = prices.n_days() - 1;
    let p = prices.prices();
    let returns = Matrix::from_fn(n, m, |i, t| (p[(i, t + 1)] - p[(i, t)]) / p[(i, t)]);
    ReturnTable {
        tickers: prices.tickers().to_vec(),
        returns,
    }
}

/// Sample mean and population covariance over the `M` available returns.
pub fn estimate_stats<T: Real>(rt: &ReturnTable<T>) -> Result<AssetStats<T>, DataError> {
    let n = rt.returns.rows();
    let m = rt.returns.cols();
    if m < 2 {
        return Err(DataError::InsufficientData { got: m });
    }
    let inv_m = T::one() / T::from_count(m);
    let mean: Vec<T> = (0..n)
        .map(|i| rt.returns.row(i).iter().copied().sum::<T>() * inv_m)
        .collect();
    let centered = Matrix::from_fn(n, m, |i, t| rt.returns[(i, t)] - mean[i]);
    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s = centered
                .row(i)
                .iter()
                .zip(centered.row(j))
                .map(|(&a, &b)| a * b)
                .sum::<T>()
                * inv_m;
            cov[(i, j)] = s;
            cov[(j, i)] = s;
        }
    }
    AssetStats::new(rt.tickers.clone(), mean, cov, m)
}
