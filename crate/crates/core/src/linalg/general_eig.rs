//! General real eigensolver.
//!
//! The pipeline is diagonal balancing, Householder reduction to upper
//! Hessenberg form, and the Francis implicit double-shift QR iteration with
//! small-subdiagonal deflation. Eigenvectors, when requested, come from
//! inverse iteration against the original matrix and are validated by their
//! residual.

use num_complex::Complex;

use super::solve::{lu_solve, PivotPolicy};
use super::{LinalgError, Matrix};
use crate::scalar::cnorm2;
use crate::Real;

/// Default eigenpair residual tolerance, relative to `‖M‖_F`.
pub const DEFAULT_EIG_TOL: f64 = 1e-8;

/// QR sweeps allowed per unit of dimension.
const SWEEPS_PER_DIM: usize = 40;

const INVERSE_ITERATIONS: usize = 3;

/// Eigenvalues of a square matrix with optional unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<Complex<T>>,
    pub eigenvectors: Option<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// True when every eigenvalue with `|Im μ| > imag_tol·(1+|μ|)` has a
    /// partner within `1e-8·(1+|μ|)` of its conjugate.
    pub fn is_conjugate_closed(&self, imag_tol: T) -> bool {
        let pair_tol = T::lit(1e-8);
        self.eigenvalues.iter().all(|mu| {
            let scale = T::one() + mu.norm();
            mu.im.abs() <= imag_tol * scale
                || self
                    .eigenvalues
                    .iter()
                    .any(|nu| (nu - mu.conj()).norm() <= pair_tol * scale)
        })
    }
}

/// All eigenvalues of `m`, sorted by real then imaginary part.
pub fn general_eig<T: Real>(
    m: &Matrix<T>,
    want_vectors: bool,
    tol: T,
) -> Result<Spectrum<T>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    if let Some(pos) = m.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite {
            row: pos / n,
            col: pos % n,
        });
    }
    let mut h: Vec<Vec<T>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    balance(&mut h);
    hessenberg(&mut h);
    let mut eigenvalues = hqr(&mut h)?;
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let eigenvectors = if want_vectors {
        let mut vs = Vec::with_capacity(n);
        for mu in &eigenvalues {
            vs.push(inverse_iteration(m, *mu, tol)?);
        }
        Some(vs)
    } else {
        None
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Parlett–Reinsch diagonal scaling by powers of two.
fn balance<T: Real>(a: &mut [Vec<T>]) {
    let n = a.len();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for j in 0..n {
                        a[i][j] *= g;
                    }
                    for row in a.iter_mut() {
                        row[i] *= f;
                    }
                }
            }
        }
    }
}

/// Orthogonal similarity reduction to upper Hessenberg form.
fn hessenberg<T: Real>(h: &mut [Vec<T>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![T::zero(); n];
    for m in 1..high {
        let scale: T = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[i][j];
            }
            f /= hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for row in h.iter_mut() {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * row[j];
            }
            f /= hh;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
    }
    for i in 2..n {
        for j in 0..i - 1 {
            h[i][j] = T::zero();
        }
    }
}

#[inline]
fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hqr<T: Real>(a: &mut [Vec<T>]) -> Result<Vec<Complex<T>>, LinalgError> {
    let n = a.len();
    let zero = T::zero();
    let eps = T::epsilon();
    let mut out = vec![Complex::new(zero, zero); n];
    if n == 0 {
        return Ok(out);
    }
    let mut anorm = zero;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let max_sweeps = SWEEPS_PER_DIM * n;
    let mut sweeps = 0usize;
    let mut its = 0usize;
    let mut t = zero;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let nu = nn as usize;
        // look for a single small subdiagonal element
        let mut l = 0usize;
        for ll in (1..=nu).rev() {
            let mut s = a[ll - 1][ll - 1].abs() + a[ll][ll].abs();
            if s == zero {
                s = anorm;
            }
            if a[ll][ll - 1].abs() <= eps * s {
                a[ll][ll - 1] = zero;
                l = ll;
                break;
            }
        }
        let mut x = a[nu][nu];
        if l == nu {
            out[nu] = Complex::new(x + t, zero);
            nn -= 1;
            its = 0;
            continue;
        }
        let mut y = a[nu - 1][nu - 1];
        let mut w = a[nu][nu - 1] * a[nu - 1][nu];
        if l == nu - 1 {
            let p = T::lit(0.5) * (y - x);
            let q = p * p + w;
            let mut z = q.abs().sqrt();
            x += t;
            if q >= zero {
                z = p + sign(z, p);
                out[nu - 1] = Complex::new(x + z, zero);
                out[nu] = if z != zero {
                    Complex::new(x - w / z, zero)
                } else {
                    Complex::new(x + z, zero)
                };
            } else {
                out[nu - 1] = Complex::new(x + p, -z);
                out[nu] = Complex::new(x + p, z);
            }
            nn -= 2;
            its = 0;
            continue;
        }

        if sweeps >= max_sweeps {
            return Err(LinalgError::NoConvergence {
                iterations: sweeps,
                lo: l,
                hi: nu,
            });
        }
        if its == 10 || its == 20 {
            // exceptional shift
            t += x;
            for i in 0..=nu {
                a[i][i] -= x;
            }
            let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
            x = T::lit(0.75) * s;
            y = x;
            w = T::lit(-0.4375) * s * s;
        }
        its += 1;
        sweeps += 1;

        // look for two consecutive small subdiagonal elements
        let mut m = nu - 2;
        let (mut p, mut q, mut r);
        loop {
            let z = a[m][m];
            let rr = x - z;
            let ss = y - z;
            p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - rr - ss;
            r = a[m + 2][m + 1];
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let u = a[m][m - 1].abs() * (q.abs() + r.abs());
            let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
            if u <= eps * v {
                break;
            }
            m -= 1;
        }
        for i in (m + 2)..=nu {
            a[i][i - 2] = zero;
            if i != m + 2 {
                a[i][i - 3] = zero;
            }
        }
        // double QR step on rows l..=nu and columns m..=nu
        let mut xk = zero;
        for k in m..nu {
            if k != m {
                p = a[k][k - 1];
                q = a[k + 1][k - 1];
                r = if k != nu - 1 { a[k + 2][k - 1] } else { zero };
                xk = p.abs() + q.abs() + r.abs();
                if xk != zero {
                    p /= xk;
                    q /= xk;
                    r /= xk;
                }
            }
            let s = sign((p * p + q * q + r * r).sqrt(), p);
            if s == zero {
                continue;
            }
            if k == m {
                if l != m {
                    a[k][k - 1] = -a[k][k - 1];
                }
            } else {
                a[k][k - 1] = -s * xk;
            }
            p += s;
            let xx = p / s;
            let yy = q / s;
            let zz = r / s;
            q /= p;
            r /= p;
            for j in k..=nu {
                let mut pp = a[k][j] + q * a[k + 1][j];
                if k != nu - 1 {
                    pp += r * a[k + 2][j];
                    a[k + 2][j] -= pp * zz;
                }
                a[k + 1][j] -= pp * yy;
                a[k][j] -= pp * xx;
            }
            let mmin = if nu < k + 3 { nu } else { k + 3 };
            for row in a.iter_mut().take(mmin + 1).skip(l) {
                let mut pp = xx * row[k] + yy * row[k + 1];
                if k != nu - 1 {
                    pp += zz * row[k + 2];
                    row[k + 2] -= pp * r;
                }
                row[k + 1] -= pp * q;
                row[k] -= pp;
            }
        }
    }
    Ok(out)
}

/// Unit eigenvector for `mu` by shifted inverse iteration on `m`.
fn inverse_iteration<T: Real>(
    m: &Matrix<T>,
    mu: Complex<T>,
    tol: T,
) -> Result<Vec<Complex<T>>, LinalgError> {
    let n = m.rows();
    let norm = m.frobenius_norm().max(T::min_positive_value());
    let floor = T::epsilon() * norm;
    // nudge the shift off the eigenvalue so the factorization stays usable
    let shift = mu + Complex::new(floor, floor);
    let shifted: Vec<Complex<T>> = (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| {
                let v = Complex::new(m[(i, j)], T::zero());
                if i == j {
                    v - shift
                } else {
                    v
                }
            })
        })
        .collect();
    let mut x: Vec<Complex<T>> = (0..n)
        .map(|i| Complex::new(T::one() + T::from_count(i) * T::lit(0.1), T::zero()))
        .collect();
    let bound = tol * norm;
    let mut residual = T::infinity();
    for _ in 0..INVERSE_ITERATIONS * 3 {
        x = lu_solve(n, shifted.clone(), x, PivotPolicy::Floor(floor))?;
        normalize(&mut x);
        residual = eigen_residual(m, mu, &x);
        if residual <= bound {
            return Ok(x);
        }
    }
    Err(LinalgError::Accuracy {
        what: "eigenvector residual",
        value: residual.to_f64().unwrap_or(f64::NAN),
        bound: bound.to_f64().unwrap_or(f64::NAN),
    })
}

/// Scales to unit norm and rotates the largest component onto the positive real axis.
fn normalize<T: Real>(x: &mut [Complex<T>]) {
    let big = x
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex::new(T::one(), T::zero()));
    let phase = if big.norm() > T::zero() {
        big.conj() / big.norm()
    } else {
        Complex::new(T::one(), T::zero())
    };
    let nrm = cnorm2(x);
    for z in x.iter_mut() {
        *z = *z * phase / nrm;
    }
}

/// `‖M v − μ v‖₂`.
pub(crate) fn eigen_residual<T: Real>(m: &Matrix<T>, mu: Complex<T>, v: &[Complex<T>]) -> T {
    let mv = m.to_complex().mul_vec(v);
    let r: Vec<Complex<T>> = mv.iter().zip(v).map(|(a, b)| a - mu * b).collect();
    cnorm2(&r)
}
