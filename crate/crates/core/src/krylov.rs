//! Unpreconditioned GMRES and BiCGStab on an abstract linear map.
//!
//! Both solvers start from `x₀ = 0`, stop on the relative residual
//! `‖b − A x‖ / ‖b‖`, and confirm convergence with an explicitly computed
//! residual, which has to be within `10 · rel_tol`.

use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::math::{abs, dot, hypot, norm2};

/// Square linear map `y = A x` on `f64` slices.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearMap for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(self.as_slice().chunks_exact(self.cols())) {
            *yi = dot(row, x);
        }
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// A closure as a linear map.
pub struct FnMap<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnMap<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnMap { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearMap for FnMap<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gmres,
    BiCgStab,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gmres => "gmres",
            Method::BiCgStab => "bicgstab",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// GMRES restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
    /// Second Gram–Schmidt pass in Arnoldi.
    pub reorthogonalize: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            method: Method::Gmres,
            rel_tol: 1e-12,
            max_iter: 500,
            restart: None,
            reorthogonalize: false,
        }
    }
}

impl SolveConfig {
    pub fn gmres(rel_tol: f64) -> Self {
        SolveConfig {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn bicgstab(rel_tol: f64) -> Self {
        SolveConfig {
            method: Method::BiCgStab,
            rel_tol,
            ..Self::default()
        }
    }

    /// Settings of the large 3D runs: tolerance `1e-6`, restart after 30.
    pub fn large_scale() -> Self {
        SolveConfig {
            rel_tol: 1e-6,
            restart: Some(30),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol must be positive"));
        }
        if self.restart == Some(0) {
            return Err(Error::invalid("restart length must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// What the entries of `residual_history` are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryKind {
    /// Residual norms from the solver recurrence (Givens for GMRES, updated
    /// `r` for BiCGStab).
    Recurrence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
    pub history_kind: HistoryKind,
    /// Explicit `‖b − A x‖ / ‖b‖` of the returned solution.
    pub true_residual: f64,
    pub converged: bool,
    /// GMRES: the Krylov space became invariant. BiCGStab: `ρ` or `ω`
    /// vanished.
    pub breakdown: bool,
}

/// Dispatch on `cfg.method`.
pub fn solve(a: &impl LinearMap, b: &[f64], cfg: &SolveConfig) -> Result<SolveReport> {
    match cfg.method {
        Method::Gmres => gmres(a, b, cfg),
        Method::BiCgStab => bicgstab(a, b, cfg),
    }
}

fn true_residual(a: &impl LinearMap, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

fn trivial_report(method: Method, n: usize) -> SolveReport {
    SolveReport {
        method,
        solution: alloc::vec![0.0; n],
        iterations: 0,
        residual_history: alloc::vec![0.0],
        history_kind: HistoryKind::Recurrence,
        true_residual: 0.0,
        converged: true,
        breakdown: false,
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// GMRES with modified Gram–Schmidt Arnoldi and Givens rotations.
pub fn gmres(a: &impl LinearMap, b: &[f64], cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let n = a.dim();
    Error::check_len(n, b.len())?;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(trivial_report(Method::Gmres, n));
    }
    let m_max = cfg.restart.unwrap_or(cfg.max_iter).min(cfg.max_iter).max(1);
    let tol = cfg.rel_tol;

    let mut x = alloc::vec![0.0; n];
    let mut r = b.to_vec();
    let mut beta = bnorm;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut w = alloc::vec![0.0; n];

    loop {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        basis.push(r.iter().map(|v| v / beta).collect());
        // column j of the rotated Hessenberg matrix, entries 0..=j+1
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = alloc::vec![0.0; m_max + 1];
        g[0] = beta;
        let mut cycle_done = false;
        let mut breakdown = false;
        let mut k = 0;
        while k < m_max && iterations < cfg.max_iter {
            a.apply(&basis[k], &mut w);
            let mut col = alloc::vec![0.0; k + 2];
            let passes = if cfg.reorthogonalize { 2 } else { 1 };
            for _ in 0..passes {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    col[i] += hij;
                    axpy(-hij, v, &mut w);
                }
            }
            let wn = norm2(&w);
            col[k + 1] = wn;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let rho = hypot(col[k], col[k + 1]);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / rho, col[k + 1] / rho)
            };
            col[k] = rho;
            col[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            iterations += 1;
            k += 1;
            let res = abs(g[k]) / bnorm;
            history.push(res);
            if wn < 1e-14 * bnorm {
                breakdown = true;
                cycle_done = true;
                break;
            }
            if res <= tol {
                cycle_done = true;
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the k×k triangle
        let mut y = alloc::vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= h[j][i] * yj;
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut x);
        }
        beta = true_residual(a, b, &x, &mut r);
        let rel = beta / bnorm;
        let ok = rel <= 10.0 * tol;
        if (cycle_done && ok) || iterations >= cfg.max_iter || beta == 0.0 {
            return Ok(SolveReport {
                method: Method::Gmres,
                solution: x,
                iterations,
                residual_history: history,
                history_kind: HistoryKind::Recurrence,
                true_residual: rel,
                converged: ok,
                breakdown,
            });
        }
        // restart from the current iterate, also when the recurrence
        // drifted away from the true residual
    }
}

/// BiCGStab with shadow residual `r̂₀ = r₀`.
pub fn bicgstab(a: &impl LinearMap, b: &[f64], cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let n = a.dim();
    Error::check_len(n, b.len())?;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(trivial_report(Method::BiCgStab, n));
    }
    let tol = cfg.rel_tol;
    const TINY: f64 = 1e-30;

    let mut x = alloc::vec![0.0; n];
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut p = alloc::vec![0.0; n];
    let mut v = alloc::vec![0.0; n];
    let mut s = alloc::vec![0.0; n];
    let mut t = alloc::vec![0.0; n];
    let mut scratch = alloc::vec![0.0; n];
    let (mut rho_old, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut history = Vec::new();
    let mut iterations = 0;

    let finish = |x: Vec<f64>, iterations, history, converged, breakdown, rel| SolveReport {
        method: Method::BiCgStab,
        solution: x,
        iterations,
        residual_history: history,
        history_kind: HistoryKind::Recurrence,
        true_residual: rel,
        converged,
        breakdown,
    };

    while iterations < cfg.max_iter {
        iterations += 1;
        let rho = dot(&r_hat, &r);
        if abs(rho) < TINY {
            let rel = true_residual(a, b, &x, &mut scratch) / bnorm;
            history.push(rel);
            return Ok(finish(x, iterations, history, false, true, rel));
        }
        let beta = (rho / rho_old) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.apply(&p, &mut v);
        let rv = dot(&r_hat, &v);
        if abs(rv) < TINY {
            let rel = true_residual(a, b, &x, &mut scratch) / bnorm;
            history.push(rel);
            return Ok(finish(x, iterations, history, false, true, rel));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let s_rel = norm2(&s) / bnorm;
        let stop;
        if s_rel <= tol {
            axpy(alpha, &p, &mut x);
            history.push(s_rel);
            stop = true;
        } else {
            a.apply(&s, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            if abs(omega) < TINY {
                axpy(alpha, &p, &mut x);
                let rel = true_residual(a, b, &x, &mut scratch) / bnorm;
                history.push(rel);
                let ok = rel <= 10.0 * tol;
                return Ok(finish(x, iterations, history, ok, !ok, rel));
            }
            for i in 0..n {
                x[i] += alpha * p[i] + omega * s[i];
                r[i] = s[i] - omega * t[i];
            }
            let rel = norm2(&r) / bnorm;
            history.push(rel);
            stop = rel <= tol;
        }
        rho_old = rho;
        if stop {
            let rel = true_residual(a, b, &x, &mut r) / bnorm;
            if rel <= 10.0 * tol {
                return Ok(finish(x, iterations, history, true, false, rel));
            }
            // recurrence drifted: restart from the true residual
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho_old = 1.0;
            alpha = 1.0;
            omega = 1.0;
        }
    }
    let rel = true_residual(a, b, &x, &mut scratch) / bnorm;
    Ok(finish(x, iterations, history, rel <= 10.0 * tol, false, rel))
}
