//! Scattering operator `Σ = Γ Ψ W`.
//!
//! `Σ` is block diagonal in space-major ordering: at each spatial node the
//! source is `S_i = Γ_[i] Ψ W I_i`, with `Γ_[i]` the diagonal of sampled
//! `γ` values, `Ψ` the symmetric kernel matrix over ray pairs and `W` the
//! diagonal of combined quadrature weights `w̃ = w_μ w_ν`.
//!
//! Every kernel used here has low rank, `Ψ W = U₀ V₀ᵀ` with a handful of
//! columns, and application goes through those moments instead of the full
//! `N_r × N_r` product.

use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::grid::{FieldVector, Grid, Layout, Ordering, Ray};
use crate::math;
use crate::quadrature::legendre_all;

/// Redistribution function `Φ(r, r')`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScatteringKernel {
    /// `Φ(μ, μ') = ∑_ℓ d_ℓ P_ℓ(μ) P_ℓ(μ')`, frequency independent.
    Legendre { coefficients: Vec<f64> },
    /// `Φ(ν, ν') = φ(ν') δ(ν − ν')`, no redistribution in frequency.
    IsotropicCoherent,
    /// `Φ(ν, ν') = φ(ν) φ(ν')`, complete redistribution.
    IsotropicCrd,
}

/// Kind tag without parameters, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Legendre,
    IsotropicCoherent,
    IsotropicCrd,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Legendre => "legendre",
            KernelKind::IsotropicCoherent => "coherent",
            KernelKind::IsotropicCrd => "crd",
        }
    }
}

impl ScatteringKernel {
    /// Dipole-like phase function with `L = 7`.
    pub fn legendre_l7() -> Self {
        ScatteringKernel::Legendre {
            coefficients: alloc::vec![
                1.0, 1.98398, 1.50823, 0.70075, 0.23489, 0.05133, 0.00760, 0.00048
            ],
        }
    }

    pub fn isotropic() -> Self {
        ScatteringKernel::Legendre {
            coefficients: alloc::vec![1.0],
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            ScatteringKernel::Legendre { .. } => KernelKind::Legendre,
            ScatteringKernel::IsotropicCoherent => KernelKind::IsotropicCoherent,
            ScatteringKernel::IsotropicCrd => KernelKind::IsotropicCrd,
        }
    }

    /// `Φ(r, r')`. The coherent delta is discretized as `δ_{νν'} / w_ν`.
    pub fn eval(&self, r: &Ray, rp: &Ray) -> f64 {
        match self {
            ScatteringKernel::Legendre { coefficients } => {
                let l = coefficients.len() - 1;
                let p = legendre_all(l, r.mu);
                let q = legendre_all(l, rp.mu);
                coefficients
                    .iter()
                    .zip(p.iter().zip(&q))
                    .map(|(d, (a, b))| d * a * b)
                    .sum()
            }
            ScatteringKernel::IsotropicCoherent => {
                if r.nu_index == rp.nu_index {
                    r.profile / r.frequency_weight
                } else {
                    0.0
                }
            }
            ScatteringKernel::IsotropicCrd => r.profile * rp.profile,
        }
    }

    fn validate(&self) -> Result<()> {
        if let ScatteringKernel::Legendre { coefficients } = self {
            if coefficients.is_empty() {
                return Err(Error::invalid("Legendre kernel needs at least d_0"));
            }
        }
        Ok(())
    }
}

/// Per-node low-rank factors: `Ψ W = U₀ V₀ᵀ`, so `Σ_[i] = diag(γ_i) U₀ V₀ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFactor {
    /// `N_r × r`.
    pub u: DenseMatrix,
    /// `N_r × r`.
    pub v: DenseMatrix,
}

impl LocalFactor {
    pub fn rank(&self) -> usize {
        self.u.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringOperator {
    layout: Layout,
    rays: Vec<Ray>,
    kernel: ScatteringKernel,
    /// `γ` sampled at every (space node, ray), space-major.
    gamma: Vec<f64>,
    factor: LocalFactor,
}

impl ScatteringOperator {
    /// Operator from explicit `γ` samples (`n_space × n_rays`, space-major).
    pub fn from_gamma_table(
        n_space: usize,
        rays: Vec<Ray>,
        kernel: ScatteringKernel,
        gamma: Vec<f64>,
    ) -> Result<Self> {
        kernel.validate()?;
        let layout = Layout::new(n_space, rays.len());
        Error::check_len(layout.len(), gamma.len())?;
        let factor = local_factor(&kernel, &rays);
        Ok(ScatteringOperator {
            layout,
            rays,
            kernel,
            gamma,
            factor,
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.len()
    }

    pub fn kernel(&self) -> &ScatteringKernel {
        &self.kernel
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn local_factor(&self) -> &LocalFactor {
        &self.factor
    }

    /// Same kernel and rays with every `γ` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.gamma.iter_mut().for_each(|g| *g *= factor);
        out
    }

    /// `Σ I` for a space-major input.
    pub fn apply_space_major(&self, src: &[f64], dst: &mut [f64]) {
        let nr = self.layout.n_rays;
        let rank = self.factor.rank();
        let mut moments = alloc::vec![0.0; rank];
        for ((x, y), g) in src
            .chunks_exact(nr)
            .zip(dst.chunks_exact_mut(nr))
            .zip(self.gamma.chunks_exact(nr))
        {
            if g.iter().all(|&v| v == 0.0) {
                y.iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            match &self.kernel {
                ScatteringKernel::IsotropicCoherent => {
                    // one angular moment per frequency
                    moments.iter_mut().for_each(|m| *m = 0.0);
                    for (r, &xi) in self.rays.iter().zip(x) {
                        moments[r.nu_index] += r.angular_weight * xi;
                    }
                    for ((r, yi), &gi) in self.rays.iter().zip(y.iter_mut()).zip(g) {
                        *yi = gi * r.profile * moments[r.nu_index];
                    }
                }
                _ => {
                    let v = &self.factor.v;
                    let u = &self.factor.u;
                    for (c, m) in moments.iter_mut().enumerate() {
                        *m = (0..nr).map(|k| v[(k, c)] * x[k]).sum();
                    }
                    for (k, (yi, &gi)) in y.iter_mut().zip(g).enumerate() {
                        let s: f64 = u.row(k).iter().zip(&moments).map(|(a, b)| a * b).sum();
                        *yi = gi * s;
                    }
                }
            }
        }
    }

    /// `Σ I`, result in the ordering of the input.
    pub fn apply(&self, i: &FieldVector) -> Result<FieldVector> {
        apply_scattering(self, i)
    }

    /// Symmetric kernel block `Ψ` (the same at every spatial node).
    pub fn psi_block(&self) -> DenseMatrix {
        let nr = self.rays.len();
        let mut psi = DenseMatrix::zeros(nr, nr);
        for a in 0..nr {
            for b in a..nr {
                let v = self.kernel.eval(&self.rays[a], &self.rays[b]);
                psi[(a, b)] = v;
                psi[(b, a)] = v;
            }
        }
        psi
    }

    /// `Γ_[i] Ψ W` for space node `i`.
    pub fn block(&self, i: usize) -> DenseMatrix {
        let nr = self.rays.len();
        let mut m = self.psi_block();
        for a in 0..nr {
            let g = self.gamma[i * nr + a];
            for (b, r) in self.rays.iter().enumerate() {
                m[(a, b)] *= g * r.weight();
            }
        }
        m
    }

    /// Dense `Σ = Γ Ψ W` in space-major ordering.
    pub fn materialize(&self, cap: usize) -> Result<DenseMatrix> {
        materialize_scattering(self, cap)
    }

    /// `‖Σ‖_∞`, the largest source produced by a unit intensity field.
    pub fn max_row_sum(&self) -> f64 {
        let psi_w = self.factor.u.matmul(&self.factor.v.transpose());
        let row_sums: Vec<f64> = (0..psi_w.rows())
            .map(|k| psi_w.row(k).iter().map(|v| math::abs(*v)).sum())
            .collect();
        self.gamma
            .chunks_exact(self.layout.n_rays)
            .flat_map(|g| g.iter().zip(&row_sums).map(|(a, b)| math::abs(*a) * b))
            .fold(0.0, f64::max)
    }

    /// `Some(‖Σ‖_∞)` when it reaches 1: source iteration is then not a
    /// contraction, though Krylov methods still apply.
    pub fn contraction_warning(&self) -> Option<f64> {
        let m = self.max_row_sum();
        (m >= 1.0).then_some(m)
    }
}

fn local_factor(kernel: &ScatteringKernel, rays: &[Ray]) -> LocalFactor {
    let nr = rays.len();
    match kernel {
        ScatteringKernel::Legendre { coefficients } => {
            let l = coefficients.len() - 1;
            let mut u = DenseMatrix::zeros(nr, l + 1);
            let mut v = DenseMatrix::zeros(nr, l + 1);
            for (k, r) in rays.iter().enumerate() {
                for (ell, p) in legendre_all(l, r.mu).into_iter().enumerate() {
                    u[(k, ell)] = coefficients[ell] * p;
                    v[(k, ell)] = r.weight() * p;
                }
            }
            LocalFactor { u, v }
        }
        ScatteringKernel::IsotropicCoherent => {
            let n_nu = rays.iter().map(|r| r.nu_index + 1).max().unwrap_or(0);
            let mut u = DenseMatrix::zeros(nr, n_nu);
            let mut v = DenseMatrix::zeros(nr, n_nu);
            for (k, r) in rays.iter().enumerate() {
                u[(k, r.nu_index)] = r.profile;
                v[(k, r.nu_index)] = r.angular_weight;
            }
            LocalFactor { u, v }
        }
        ScatteringKernel::IsotropicCrd => {
            let mut u = DenseMatrix::zeros(nr, 1);
            let mut v = DenseMatrix::zeros(nr, 1);
            for (k, r) in rays.iter().enumerate() {
                u[(k, 0)] = r.profile;
                v[(k, 0)] = r.weight() * r.profile;
            }
            LocalFactor { u, v }
        }
    }
}

/// Scattering operator on a plane-parallel grid with `γ(t, ray)` sampled at
/// the collocation points.
pub fn build_scattering(
    grid: &Grid,
    kernel: ScatteringKernel,
    gamma: impl Fn(f64, &Ray) -> f64,
) -> Result<ScatteringOperator> {
    let mut table = Vec::with_capacity(grid.n());
    for &t in &grid.t_nodes {
        for r in &grid.rays {
            table.push(gamma(t, r));
        }
    }
    ScatteringOperator::from_gamma_table(grid.n_space(), grid.rays.clone(), kernel, table)
}

/// `Σ I` (homogeneous part only), in the ordering of `i`.
pub fn apply_scattering(op: &ScatteringOperator, i: &FieldVector) -> Result<FieldVector> {
    Error::check_len(op.n(), i.values.len())?;
    if i.layout != op.layout {
        return Err(Error::invalid("field layout does not match the operator"));
    }
    let mut out = alloc::vec![0.0; op.n()];
    match i.ordering {
        Ordering::SpaceMajor => op.apply_space_major(&i.values, &mut out),
        Ordering::RayMajor => {
            let mut sm = alloc::vec![0.0; op.n()];
            let mut res = alloc::vec![0.0; op.n()];
            op.layout.reorder(Ordering::RayMajor, &i.values, &mut sm);
            op.apply_space_major(&sm, &mut res);
            op.layout.reorder(Ordering::SpaceMajor, &res, &mut out);
        }
    }
    FieldVector::new(out, i.ordering, i.layout)
}

/// Dense `Γ Ψ W` in space-major ordering, assembled from kernel evaluations.
pub fn materialize_scattering(op: &ScatteringOperator, cap: usize) -> Result<DenseMatrix> {
    let n = op.n();
    Error::check_cap(n, cap)?;
    let nr = op.layout.n_rays;
    let psi = op.psi_block();
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..op.layout.n_space {
        for a in 0..nr {
            let g = op.gamma[i * nr + a];
            if g == 0.0 {
                continue;
            }
            for (b, r) in op.rays.iter().enumerate() {
                m[(i * nr + a, i * nr + b)] = g * psi[(a, b)] * r.weight();
            }
        }
    }
    Ok(m)
}

/// Discrete photon-conservation integral `(1/s²) ∑∑ w̃ w̃' Φ`, with `s` the
/// total angular weight of one frequency (2 on `[-1, 1]`). Equals `d₀` for
/// the Legendre kernel and the squared profile mass for CRD.
pub fn kernel_normalization(kernel: &ScatteringKernel, rays: &[Ray]) -> f64 {
    let s: f64 = rays
        .iter()
        .filter(|r| r.nu_index == 0)
        .map(|r| r.angular_weight)
        .sum();
    let mut total = 0.0;
    for r in rays {
        for rp in rays {
            total += r.weight() * rp.weight() * kernel.eval(r, rp);
        }
    }
    total / (s * s)
}
