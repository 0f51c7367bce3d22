//! Symmetric eigensolver: Householder tridiagonalization and implicit QL with
//! Wilkinson-style shifts (the EISPACK `tred2`/`tql2` pair).

use num_complex::Complex;

use super::{LinalgError, Matrix, Spectrum};
use crate::Real;

/// Default relative reconstruction tolerance for [`sym_eig`].
pub const DEFAULT_SYM_TOL: f64 = 1e-10;

/// Relative asymmetry accepted on input.
const SYMMETRY_TOL: f64 = 1e-12;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_ITER: usize = 60;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: Matrix<T>,
}

impl<T: Real> SymEigen<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> Vec<T> {
        self.vectors.column(j)
    }

    pub fn min(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// View as a general (complex) spectrum.
    pub fn to_spectrum(&self) -> Spectrum<T> {
        Spectrum {
            eigenvalues: self
                .values
                .iter()
                .map(|&v| Complex::new(v, T::zero()))
                .collect(),
            eigenvectors: Some(
                (0..self.dim())
                    .map(|j| {
                        self.vector(j)
                            .into_iter()
                            .map(|x| Complex::new(x, T::zero()))
                            .collect()
                    })
                    .collect(),
            ),
        }
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
///
/// The result is checked against `‖QΛQᵀ − S‖_F ≤ tol·‖S‖_F`. Each
/// eigenvector is oriented so that its first non-negligible component is
/// positive.
pub fn sym_eig<T: Real>(s: &Matrix<T>, tol: T) -> Result<SymEigen<T>, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let (gap, i, j) = s.asymmetry();
    if gap > T::lit(SYMMETRY_TOL) * s.max_abs() {
        return Err(LinalgError::NotSymmetric {
            row: i,
            col: j,
            gap: gap.to_f64().unwrap_or(f64::NAN),
        });
    }
    let n = s.rows();
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }

    let mut v: Vec<Vec<T>> = (0..n).map(|i| s.row(i).to_vec()).collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<T> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, j| v[i][order[j]]);
    orient_columns(&mut vectors);

    let out = SymEigen { values, vectors };
    let err = reconstruction_error(s, &out);
    let bound = tol * s.frobenius_norm();
    if err > bound && err > T::zero() {
        return Err(LinalgError::Accuracy {
            what: "symmetric reconstruction error",
            value: err.to_f64().unwrap_or(f64::NAN),
            bound: bound.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

/// `‖Q diag(values) Qᵀ − S‖_F`.
pub(crate) fn reconstruction_error<T: Real>(s: &Matrix<T>, eig: &SymEigen<T>) -> T {
    let n = eig.dim();
    let q = &eig.vectors;
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            let mut r = T::zero();
            for k in 0..n {
                r += q[(i, k)] * eig.values[k] * q[(j, k)];
            }
            let diff = r - s[(i, j)];
            acc += diff * diff;
        }
    }
    acc.sqrt()
}

fn orient_columns<T: Real>(q: &mut Matrix<T>) {
    let n = q.rows();
    let thresh = T::epsilon().sqrt();
    for j in 0..q.cols() {
        if let Some(i) = (0..n).find(|&i| q[(i, j)].abs() > thresh) {
            if q[(i, j)] < T::zero() {
                for k in 0..n {
                    q[(k, j)] = -q[(k, j)];
                }
            }
        }
    }
}

/// Householder reduction to tridiagonal form, accumulating the transform in `v`.
fn tridiagonalize<T: Real>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

/// Implicit QL on the tridiagonal (d, e), rotating the columns of `v`.
fn ql_implicit<T: Real>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) -> Result<(), LinalgError> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITER {
                    return Err(LinalgError::NoConvergence {
                        iterations: iter - 1,
                        lo: l,
                        hi: m,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}
