//! Reference computations that share no code with the library: cyclic
//! Jacobi eigenvalues, naive Gaussian elimination, a bracketing root scan
//! of the secular function and a brute-force grid over the L1 sphere.
#![allow(dead_code)]

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(s: &[Vec<f64>]) -> Vec<f64> {
    let n = s.len();
    let mut a: Vec<Vec<f64>> = s.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs())).unwrap();
        m.swap(k, p);
        for i in (k + 1)..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = m[i][n];
        for j in (i + 1)..n {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    x
}

/// `¼(1−λ)²‖(λS − μI)⁻¹r‖² − k`.
pub fn secular(s: &[Vec<f64>], r: &[f64], lambda: f64, k: f64, mu: f64) -> f64 {
    let n = r.len();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| lambda * s[i][j] - if i == j { mu } else { 0.0 }).collect())
        .collect();
    let x = gauss_solve(&a, r);
    0.25 * (1.0 - lambda).powi(2) * x.iter().map(|v| v * v).sum::<f64>() - k
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of the secular function in
/// `[λ·min d − 2‖r‖ − 1, λ·max d + 2‖r‖ + 1]`. The function is convex between
/// consecutive poles `λ·d_i`, so each gap is scanned on a dense grid, its
/// minimum is located by golden section and each sign change is bisected.
pub fn secular_roots(s: &[Vec<f64>], r: &[f64], lambda: f64, k: f64) -> Vec<f64> {
    let d = jacobi_eigenvalues(s);
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let lo = lambda * d[0] - 2.0 * rn - 1.0;
    let hi = lambda * d[d.len() - 1] + 2.0 * rn + 1.0;
    let mut cuts = vec![lo];
    for &di in &d {
        let p = lambda * di;
        if p - cuts[cuts.len() - 1] > 1e-12 * (1.0 + p.abs()) {
            cuts.push(p);
        }
    }
    cuts.push(hi);
    let f = |mu: f64| secular(s, r, lambda, k, mu);
    let mut roots = Vec::new();
    for win in cuts.windows(2) {
        let (a0, b0) = (win[0], win[1]);
        let pad = 1e-13 * (1.0 + a0.abs().max(b0.abs()));
        let a = if a0 == lo { a0 } else { a0 + pad };
        let b = if b0 == hi { b0 } else { b0 - pad };
        if b <= a {
            continue;
        }
        // dense scan first, then refine the minimum
        const GRID: usize = 4000;
        let xs: Vec<f64> = (0..=GRID).map(|i| a + (b - a) * i as f64 / GRID as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let imin = (0..=GRID).min_by(|&i, &j| fs[i].total_cmp(&fs[j])).unwrap();
        let (mut ga, mut gb) = (xs[imin.saturating_sub(1)], xs[(imin + 1).min(GRID)]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = gb - phi * (gb - ga);
            let x2 = ga + phi * (gb - ga);
            if f(x1) < f(x2) {
                gb = x2;
            } else {
                ga = x1;
            }
        }
        let m = 0.5 * (ga + gb);
        let fm = f(m).min(fs[imin]);
        let m = if f(m) <= fs[imin] { m } else { xs[imin] };
        if fm >= 0.0 {
            continue;
        }
        if f(a) > 0.0 {
            roots.push(bisect(&f, a, m));
        }
        if f(b) > 0.0 {
            roots.push(bisect(&f, m, b));
        }
    }
    roots
}

/// Pairs each oracle root with an accepted one within `tol`; returns the
/// counts of unpaired oracle roots and unpaired accepted roots.
pub fn match_roots(oracle: &[f64], accepted: &[f64], tol: f64) -> (usize, usize) {
    let mut used = vec![false; accepted.len()];
    let mut missed = 0;
    for &o in oracle {
        let hit = (0..accepted.len())
            .filter(|&j| !used[j] && (accepted[j] - o).abs() <= tol)
            .min_by(|&i, &j| (accepted[i] - o).abs().total_cmp(&(accepted[j] - o).abs()));
        match hit {
            Some(j) => used[j] = true,
            None => missed += 1,
        }
    }
    (missed, used.iter().filter(|&&u| !u).count())
}

/// Smallest `λwᵀSw − (1−λ)wᵀr` over `|w₁| + |w₂| = c` sampled at
/// `4·per_edge` evenly spaced points of the diamond perimeter (vertices
/// included).
pub fn diamond_grid_min(s: &[Vec<f64>], r: &[f64], lambda: f64, c: f64, per_edge: usize) -> f64 {
    let corners = [(c, 0.0), (0.0, c), (-c, 0.0), (0.0, -c), (c, 0.0)];
    let mut best = f64::INFINITY;
    for e in 0..4 {
        let (x0, y0) = corners[e];
        let (x1, y1) = corners[e + 1];
        for i in 0..per_edge {
            let t = i as f64 / per_edge as f64;
            let w1 = x0 + t * (x1 - x0);
            let w2 = y0 + t * (y1 - y0);
            let q = s[0][0] * w1 * w1 + 2.0 * s[0][1] * w1 * w2 + s[1][1] * w2 * w2;
            let v = lambda * q - (1.0 - lambda) * (r[0] * w1 + r[1] * w2);
            if v < best {
                best = v;
            }
        }
    }
    best
}
