//! Dense nonsymmetric eigenvalues and singular values.
//!
//! Eigenvalues: balancing, Householder reduction to upper Hessenberg form,
//! then Francis double-shift QR with deflation. Singular values: one-sided
//! Jacobi rotations.

use alloc::vec::Vec;
use core::cmp::Ordering as CmpOrdering;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::math::{abs, copysign, hypot, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ONE: Complex = Complex { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn real(re: f64) -> Self {
        Complex { re, im: 0.0 }
    }

    pub fn modulus(&self) -> f64 {
        hypot(self.re, self.im)
    }

    pub fn conj(&self) -> Self {
        Complex::new(self.re, -self.im)
    }

    /// `1 − self`.
    pub fn one_minus(&self) -> Self {
        Complex::new(1.0 - self.re, -self.im)
    }

    pub fn distance(&self, other: &Complex) -> f64 {
        hypot(self.re - other.re, self.im - other.im)
    }
}

/// Row-major square work array.
struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }
}

/// Similarity scaling by powers of two so rows and columns have comparable
/// norms.
fn balance(w: &mut Work) {
    const RADIX: f64 = 2.0;
    let n = w.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs(w.at(j, i));
                    r += abs(w.at(i, j));
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / RADIX;
            let mut f = 1.0;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    *w.at_mut(i, j) *= g;
                }
                for j in 0..n {
                    *w.at_mut(j, i) *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form.
fn hessenberg(w: &mut Work) {
    let n = w.n;
    if n < 3 {
        return;
    }
    let mut v = alloc::vec![0.0; n];
    let mut tmp = alloc::vec![0.0; n];
    for k in 0..n - 2 {
        let mut scale = 0.0;
        for i in k + 1..n {
            scale += abs(w.at(i, k));
        }
        if scale == 0.0 {
            continue;
        }
        let mut sigma = 0.0;
        for i in k + 1..n {
            v[i] = w.at(i, k) / scale;
            sigma += v[i] * v[i];
        }
        let alpha = -copysign(sqrt(sigma), v[k + 1]);
        v[k + 1] -= alpha;
        let vnorm2 = sigma - 2.0 * alpha * (v[k + 1] + alpha) + alpha * alpha;
        // vnorm2 = ‖v‖² after the shift: σ − x₀² + (x₀ − α)²
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // rows k+1.., from the left: A ← (I − β v vᵀ) A
        for t in tmp.iter_mut() {
            *t = 0.0;
        }
        for i in k + 1..n {
            let vi = v[i];
            let row = &w.a[i * n..(i + 1) * n];
            for j in k..n {
                tmp[j] += vi * row[j];
            }
        }
        for i in k + 1..n {
            let f = beta * v[i];
            let row = &mut w.a[i * n..(i + 1) * n];
            for j in k..n {
                row[j] -= f * tmp[j];
            }
        }
        // columns k+1.., from the right: A ← A (I − β v vᵀ)
        for i in 0..n {
            let row = &mut w.a[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in k + 1..n {
                s += row[j] * v[j];
            }
            let f = beta * s;
            for j in k + 1..n {
                row[j] -= f * v[j];
            }
        }
        *w.at_mut(k + 1, k) = alpha * scale;
        for i in k + 2..n {
            *w.at_mut(i, k) = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hessenberg_qr(w: &mut Work) -> Result<Vec<Complex>> {
    const MAX_ITS: usize = 60;
    let n = w.n;
    let eps = f64::EPSILON;
    let mut wr = alloc::vec![Complex::default(); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += abs(w.at(i, j));
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // look for a negligible subdiagonal element
            let mut l = nu;
            while l > 0 {
                let mut s = abs(w.at(l - 1, l - 1)) + abs(w.at(l, l));
                if s == 0.0 {
                    s = anorm;
                }
                if abs(w.at(l, l - 1)) <= eps * s {
                    *w.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = w.at(nu, nu);
            if l == nu {
                wr[nu] = Complex::real(x + t);
                nn -= 1;
                break;
            }
            let mut y = w.at(nu - 1, nu - 1);
            let mut ww = w.at(nu, nu - 1) * w.at(nu - 1, nu);
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + ww;
                let mut z = sqrt(abs(q));
                x += t;
                if q >= 0.0 {
                    z = p + copysign(z, p);
                    wr[nu - 1] = Complex::real(x + z);
                    wr[nu] = Complex::real(if z != 0.0 { x - ww / z } else { x + z });
                } else {
                    wr[nu] = Complex::new(x + p, -z);
                    wr[nu - 1] = Complex::new(x + p, z);
                }
                nn -= 2;
                break;
            }
            if its == MAX_ITS {
                return Err(Error::EigenNoConvergence {
                    index: nu,
                    iterations: its,
                });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    *w.at_mut(i, i) -= x;
                }
                let s = abs(w.at(nu, nu - 1)) + abs(w.at(nu - 1, nu - 2));
                x = 0.75 * s;
                y = x;
                ww = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = w.at(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - ww) / w.at(m + 1, m) + w.at(m, m + 1);
                q = w.at(m + 1, m + 1) - z - rr - ss;
                r = w.at(m + 2, m + 1);
                let s = abs(p) + abs(q) + abs(r);
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = abs(w.at(m, m - 1)) * (abs(q) + abs(r));
                let v = abs(p) * (abs(w.at(m - 1, m - 1)) + abs(z) + abs(w.at(m + 1, m + 1)));
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                *w.at_mut(i + 2, i) = 0.0;
                if i != m {
                    *w.at_mut(i + 2, i - 1) = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                let mut xk = 0.0;
                if k != m {
                    p = w.at(k, k - 1);
                    q = w.at(k + 1, k - 1);
                    r = if k + 1 != nu { w.at(k + 2, k - 1) } else { 0.0 };
                    xk = abs(p) + abs(q) + abs(r);
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = copysign(sqrt(p * p + q * q + r * r), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            *w.at_mut(k, k - 1) = -w.at(k, k - 1);
                        }
                    } else {
                        *w.at_mut(k, k - 1) = -s * xk;
                    }
                    p += s;
                    let xx = p / s;
                    let yy = q / s;
                    let zz = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = w.at(k, j) + q * w.at(k + 1, j);
                        if k + 1 != nu {
                            pp += r * w.at(k + 2, j);
                            *w.at_mut(k + 2, j) -= pp * zz;
                        }
                        *w.at_mut(k + 1, j) -= pp * yy;
                        *w.at_mut(k, j) -= pp * xx;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = xx * w.at(i, k) + yy * w.at(i, k + 1);
                        if k + 1 != nu {
                            pp += zz * w.at(i, k + 2);
                            *w.at_mut(i, k + 2) -= pp * r;
                        }
                        *w.at_mut(i, k + 1) -= pp * q;
                        *w.at_mut(i, k) -= pp;
                    }
                }
                k += 1;
            }
            if l + 1 >= nu {
                break;
            }
        }
    }
    Ok(wr)
}

/// All eigenvalues of a square matrix, with multiplicity. Complex values
/// come in exact conjugate pairs.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Complex>> {
    let n = m.rows();
    Error::check_len(n, m.cols())?;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(alloc::vec![Complex::real(m[(0, 0)])]);
    }
    let mut w = Work {
        n,
        a: m.as_slice().to_vec(),
    };
    balance(&mut w);
    hessenberg(&mut w);
    hessenberg_qr(&mut w)
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    // work on the rows of the thinner orientation so the column count is small
    let (rows, cols) = (m.rows(), m.cols());
    let (mut u, len, count) = if rows >= cols {
        (m.transpose().as_slice().to_vec(), rows, cols)
    } else {
        (m.as_slice().to_vec(), cols, rows)
    };
    // u holds `count` vectors of length `len`; orthogonalize them pairwise
    let tol = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..count {
            for q in p + 1..count {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..len {
                    let a = u[p * len + i];
                    let b = u[q * len + i];
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if abs(gamma) <= tol * sqrt(alpha * beta) || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = copysign(1.0, zeta) / (abs(zeta) + sqrt(1.0 + zeta * zeta));
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..len {
                    let a = u[p * len + i];
                    let b = u[q * len + i];
                    u[p * len + i] = c * a - s * b;
                    u[q * len + i] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u
        .chunks_exact(len.max(1))
        .take(count)
        .map(|c| sqrt(c.iter().map(|v| v * v).sum()))
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(CmpOrdering::Equal));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex>) -> Vec<Complex> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    #[test]
    fn triangular_eigenvalues() {
        let m = DenseMatrix::from_row_major(3, 3, alloc::vec![1.0, 5.0, 7.0, 0.0, 2.0, 3.0, 0.0, 0.0, 4.0])
            .unwrap();
        let ev = sorted(eigenvalues(&m).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 4.0]) {
            assert!((e.re - want).abs() < 1e-13 && e.im == 0.0);
        }
    }

    #[test]
    fn rotation_has_complex_pair() {
        let m = DenseMatrix::from_row_major(2, 2, alloc::vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        let ev = sorted(eigenvalues(&m).unwrap());
        assert!((ev[0].im + 1.0).abs() < 1e-14 && ev[0].re.abs() < 1e-14);
        assert_eq!(ev[0], ev[1].conj());
    }

    #[test]
    fn companion_matrix_roots() {
        // x⁴ − 10x³ + 35x² − 50x + 24 = (x−1)(x−2)(x−3)(x−4)
        let m = DenseMatrix::from_row_major(
            4,
            4,
            alloc::vec![
                10.0, -35.0, 50.0, -24.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0
            ],
        )
        .unwrap();
        let ev = sorted(eigenvalues(&m).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((e.re - want).abs() < 1e-10 && e.im.abs() < 1e-10);
        }
    }

    #[test]
    fn trace_and_count_preserved() {
        let n = 40;
        let mut data = Vec::with_capacity(n * n);
        let mut s = 12345u64;
        for _ in 0..n * n {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            data.push(((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        }
        let m = DenseMatrix::from_row_major(n, n, data).unwrap();
        let ev = eigenvalues(&m).unwrap();
        assert_eq!(ev.len(), n);
        let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let sum_re: f64 = ev.iter().map(|e| e.re).sum();
        let sum_im: f64 = ev.iter().map(|e| e.im).sum();
        assert!((trace - sum_re).abs() < 1e-10);
        assert!(sum_im.abs() < 1e-10);
    }

    #[test]
    fn singular_values_of_diagonal_and_rank_one() {
        let mut m = DenseMatrix::zeros(3, 3);
        m[(0, 0)] = -3.0;
        m[(1, 1)] = 1.0;
        m[(2, 2)] = 2.0;
        let sv = singular_values(&m);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
        let r1 = DenseMatrix::from_row_major(2, 3, alloc::vec![1.0, 2.0, 2.0, 2.0, 4.0, 4.0]).unwrap();
        let sv = singular_values(&r1);
        assert_eq!(sv.len(), 2);
        assert!((sv[0] - 45f64.sqrt()).abs() < 1e-13);
        assert!(sv[1] < 1e-14);
    }
}
