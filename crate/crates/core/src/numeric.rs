//! Small dense numerics: root bracketing, least squares, robust slopes.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Knuth's error-free sum: returns `(s, e)` with `s + e == a + b` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailed { lo: a.min(b), hi: a.max(b) });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence("brent"))
}

/// Secant iteration for `f(x) = 0` from two starting abscissae.
pub fn secant<F>(mut f: F, mut x0: f64, mut x1: f64, ftol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f0 = f(x0)?;
    let mut f1 = f(x1)?;
    for _ in 0..max_iter {
        if f1.abs() <= ftol {
            return Ok(x1);
        }
        let den = f1 - f0;
        if den == 0.0 || !den.is_finite() {
            return Err(Error::NoConvergence("secant"));
        }
        let x2 = x1 - f1 * (x1 - x0) / den;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x1)?;
    }
    if f1.abs() <= ftol {
        Ok(x1)
    } else {
        Err(Error::NoConvergence("secant"))
    }
}

/// Solves the square system `a x = b` (row-major, `n x n`) by Gaussian
/// elimination with partial pivoting.
pub fn solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap_or(col);
        if m[piv * n + col].abs() <= 1e-14 * scale || !m[piv * n + col].is_finite() {
            return Err(Error::SingularJacobian);
        }
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
            }
            x.swap(piv, col);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            if f != 0.0 {
                for j in col..n {
                    m[row * n + j] -= f * m[col * n + j];
                }
                x[row] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    Ok(x)
}

/// Least-squares solution of the overdetermined system `a x ≈ b` with `a`
/// row-major `rows x cols`, by Householder QR.
pub fn lstsq(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Result<Vec<f64>> {
    if rows < cols || a.len() != rows * cols || b.len() != rows {
        return Err(Error::InvalidParameter("least squares shape"));
    }
    let mut r = a.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![0.0; rows];
    for j in 0..cols {
        let mut norm = 0.0;
        for i in j..rows {
            norm += r[i * cols + j] * r[i * cols + j];
        }
        let norm = crate::math::sqrt(norm);
        if norm == 0.0 {
            return Err(Error::SingularJacobian);
        }
        let alpha = if r[j * cols + j] > 0.0 { -norm } else { norm };
        for i in 0..rows {
            v[i] = if i < j { 0.0 } else { r[i * cols + j] };
        }
        v[j] -= alpha;
        let vnorm2: f64 = v[j..].iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..cols {
            let mut dot = 0.0;
            for i in j..rows {
                dot += v[i] * r[i * cols + c];
            }
            let f = 2.0 * dot / vnorm2;
            for i in j..rows {
                r[i * cols + c] -= f * v[i];
            }
        }
        let mut dot = 0.0;
        for i in j..rows {
            dot += v[i] * y[i];
        }
        let f = 2.0 * dot / vnorm2;
        for i in j..rows {
            y[i] -= f * v[i];
        }
    }
    let diag_max = (0..cols).fold(0.0f64, |s, j| s.max(r[j * cols + j].abs()));
    let mut x = vec![0.0; cols];
    for j in (0..cols).rev() {
        let d = r[j * cols + j];
        if d.abs() <= 1e-13 * diag_max {
            return Err(Error::SingularJacobian);
        }
        let mut s = y[j];
        for c in j + 1..cols {
            s -= r[j * cols + c] * x[c];
        }
        x[j] = s / d;
    }
    Ok(x)
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidParameter("linear fit needs two or more points"));
    }
    let mut a = Vec::with_capacity(2 * n);
    for &x in xs {
        a.push(1.0);
        a.push(x);
    }
    let c = lstsq(&a, n, 2, ys)?;
    Ok((c[0], c[1]))
}

/// Median of all pairwise slopes.
pub fn theil_sen(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let mut slopes = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[j] != xs[i] {
                slopes.push((ys[j] - ys[i]) / (xs[j] - xs[i]));
            }
        }
    }
    if slopes.is_empty() {
        return Err(Error::InvalidParameter("Theil-Sen needs two distinct abscissae"));
    }
    Ok(median(&mut slopes))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Element `index` (from 1) of the van der Corput sequence in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Deterministic low-discrepancy points in the unit square.
pub fn halton2(n: usize) -> Vec<(f64, f64)> {
    (1..=n as u64).map(|i| (radical_inverse(i, 2), radical_inverse(i, 3))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_same_sign() {
        assert!(matches!(
            brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 50),
            Err(Error::BracketFailed { .. })
        ));
    }

    #[test]
    fn lstsq_recovers_exact_quadratic() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 - 1.0).collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &x in &xs {
            a.extend_from_slice(&[1.0, x, x * x]);
            b.push(0.5 - 2.0 * x + 3.0 * x * x);
        }
        let c = lstsq(&a, xs.len(), 3, &b).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-13);
        assert!((c[1] + 2.0).abs() < 1e-13);
        assert!((c[2] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn two_sum_is_exact() {
        let (s, e) = two_sum(1.0, 1e-17);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-17);
    }

    #[test]
    fn theil_sen_ignores_one_outlier() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 2.0, 4.0, 100.0, 8.0];
        assert_eq!(theil_sen(&xs, &ys).unwrap(), 2.0);
    }
}
