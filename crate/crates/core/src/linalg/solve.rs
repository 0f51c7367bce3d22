use num_complex::Complex;

use super::{CMatrix, LinalgError, Matrix};
use crate::Real;

/// Relative pivot magnitude below which a system is declared singular.
const SINGULAR_PIVOT: f64 = 1e-14;

/// Solves `A x = b` for complex `A` by LU with row pivoting.
///
/// Fails with [`LinalgError::Singular`] when a pivot falls below
/// `1e-14 * max|a_ij|`.
pub fn solve_complex<T: Real>(
    a: &CMatrix<T>,
    b: &[Complex<T>],
) -> Result<Vec<Complex<T>>, LinalgError> {
    check_dims(a.rows(), a.cols(), b.len())?;
    let threshold = T::lit(SINGULAR_PIVOT) * a.max_abs();
    lu_solve(a.rows(), a.as_slice().to_vec(), b.to_vec(), PivotPolicy::Fail(threshold))
}

/// Solves `A x = b` for real `A` by LU with row pivoting.
pub fn solve_real<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    check_dims(a.rows(), a.cols(), b.len())?;
    let n = a.rows();
    let threshold = T::lit(SINGULAR_PIVOT) * a.max_abs();
    let mut m = a.as_slice().to_vec();
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))
            .unwrap_or(k);
        let mag = m[p * n + k].abs();
        if mag <= threshold || mag == T::zero() {
            return Err(LinalgError::Singular {
                pivot: k,
                magnitude: mag.to_f64().unwrap_or(f64::NAN),
            });
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
            perm.swap(k, p);
        }
        let pivot = m[k * n + k];
        for i in (k + 1)..n {
            let f = m[i * n + k] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in (k + 1)..n {
                let mkj = m[k * n + j];
                m[i * n + j] -= f * mkj;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Ok(x)
}

fn check_dims(rows: usize, cols: usize, len: usize) -> Result<(), LinalgError> {
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    if len != rows {
        return Err(LinalgError::DimensionMismatch {
            expected: rows,
            got: len,
        });
    }
    Ok(())
}

#[derive(Clone, Copy)]
pub(crate) enum PivotPolicy<T> {
    /// Error out on pivots at or below the threshold.
    Fail(T),
    /// Replace tiny pivots by the given floor (inverse iteration).
    Floor(T),
}

pub(crate) fn lu_solve<T: Real>(
    n: usize,
    mut m: Vec<Complex<T>>,
    mut x: Vec<Complex<T>>,
    policy: PivotPolicy<T>,
) -> Result<Vec<Complex<T>>, LinalgError> {
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i * n + k].norm().total_cmp(&m[j * n + k].norm()))
            .unwrap_or(k);
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let mag = m[k * n + k].norm();
        match policy {
            PivotPolicy::Fail(th) => {
                if mag <= th || mag == T::zero() {
                    return Err(LinalgError::Singular {
                        pivot: k,
                        magnitude: mag.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
            PivotPolicy::Floor(floor) => {
                if mag < floor {
                    m[k * n + k] = Complex::new(floor, T::zero());
                }
            }
        }
        let pivot = m[k * n + k];
        for i in (k + 1)..n {
            let f = m[i * n + k] / pivot;
            if f.re == T::zero() && f.im == T::zero() {
                continue;
            }
            for j in (k + 1)..n {
                let mkj = m[k * n + j];
                m[i * n + j] -= f * mkj;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Ok(x)
}
