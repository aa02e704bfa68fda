//! The problem families of the numerical experiments.
//!
//! All presets use `t ∈ [0, 1]`, a scattering fraction `σ / (κ + σ) = 1 − t`,
//! no thermal source, and boundary values `I_in(t_deep) = 1`,
//! `I_in(t_surf) = 0`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpec, Ray};
use crate::multidim::{build_grid_2d, build_transfer_2d, default_inflow_2d, Grid2dSpec, Transfer2D};
use crate::operator::{ProblemDescriptor, RhsMode, RtProblem};
use crate::scattering::{build_scattering, ScatteringKernel, ScatteringOperator};
use crate::transfer::{build_transfer, Inflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Monochromatic, Legendre phase function with `L = 7`.
    Mono,
    /// Lorentzian line, isotropic coherent scattering.
    Coherent,
    /// Lorentzian line, isotropic complete redistribution.
    Crd,
    /// 2D long characteristics, monochromatic, Legendre phase function.
    Aniso2d,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Mono, Preset::Coherent, Preset::Crd, Preset::Aniso2d];

    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::Mono => "mono",
            Preset::Coherent => "coherent",
            Preset::Crd => "crd",
            Preset::Aniso2d => "aniso2d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Preset::ALL.into_iter().find(|p| p.as_str() == s)
    }

    pub fn is_2d(&self) -> bool {
        matches!(self, Preset::Aniso2d)
    }
}

/// `γ` of the monochromatic family. The angular integral is taken as a
/// mean intensity, hence `(1 − t)/4` with weights summing to 2.
pub fn mono_gamma(t: f64) -> f64 {
    0.25 * (1.0 - t)
}

/// `γ` of the coherent family: `(1 − t) / (2 φ(0))`, the same at every
/// frequency.
pub fn coherent_gamma(t: f64) -> f64 {
    0.5 * PI * (1.0 - t)
}

/// `γ` of the CRD family: `γ φ(ν) = (1 − t)/2`.
pub fn crd_gamma(t: f64, ray: &Ray) -> f64 {
    0.5 * (1.0 - t) / ray.profile
}

fn problem_1d(
    spec: GridSpec,
    kernel: ScatteringKernel,
    gamma: impl Fn(f64, &Ray) -> f64,
    rhs: RhsMode,
) -> Result<RtProblem> {
    let grid = build_grid(&spec)?;
    let transfer = build_transfer(&grid, Inflow::deep_unit(spec.n_nu))?;
    let descriptor = ProblemDescriptor {
        n_space: spec.n_space,
        n_omega: spec.n_omega,
        n_nu: spec.n_nu,
        kernel: kernel.kind(),
    };
    let scattering = build_scattering(&grid, kernel, gamma)?;
    RtProblem::new(descriptor, transfer, scattering, alloc::vec![0.0; grid.n()], rhs)
}

pub fn mono(n_space: usize, n_omega: usize, rhs: RhsMode) -> Result<RtProblem> {
    problem_1d(
        GridSpec::monochromatic(n_space, n_omega),
        ScatteringKernel::legendre_l7(),
        |t, _| mono_gamma(t),
        rhs,
    )
}

pub fn coherent(n_space: usize, n_mu: usize, n_nu: usize, rhs: RhsMode) -> Result<RtProblem> {
    problem_1d(
        GridSpec::lorentzian_line(n_space, n_mu, n_nu),
        ScatteringKernel::IsotropicCoherent,
        |t, _| coherent_gamma(t),
        rhs,
    )
}

pub fn crd(n_space: usize, n_mu: usize, n_nu: usize, rhs: RhsMode) -> Result<RtProblem> {
    problem_1d(
        GridSpec::lorentzian_line(n_space, n_mu, n_nu),
        ScatteringKernel::IsotropicCrd,
        crd_gamma,
        rhs,
    )
}

/// 2D problem on `N_x × N_y` nodes with `n_mu` inclinations and two
/// azimuths (the directions lying in the plane).
pub fn aniso2d(nx: usize, ny: usize, n_mu: usize, rhs: RhsMode) -> Result<RtProblem<Transfer2D>> {
    aniso2d_with(Grid2dSpec::new(nx, ny, n_mu, 2), ScatteringKernel::legendre_l7(), rhs)
}

/// 2D problem with explicit grid parameters and kernel; `γ = (1 − t)/4`.
pub fn aniso2d_with(
    spec: Grid2dSpec,
    kernel: ScatteringKernel,
    rhs: RhsMode,
) -> Result<RtProblem<Transfer2D>> {
    if matches!(kernel, ScatteringKernel::IsotropicCoherent | ScatteringKernel::IsotropicCrd) {
        return Err(Error::invalid("2D problems are monochromatic"));
    }
    let grid = build_grid_2d(&spec)?;
    let transfer = build_transfer_2d(&grid, default_inflow_2d)?;
    let nr = grid.rays.len();
    let mut gamma = Vec::with_capacity(grid.n());
    for i in 0..grid.cartesian.len() {
        let t = grid.cartesian.node(i)[1];
        gamma.extend(core::iter::repeat(mono_gamma(t)).take(nr));
    }
    let descriptor = ProblemDescriptor {
        n_space: grid.cartesian.len(),
        n_omega: spec.n_omega(),
        n_nu: 1,
        kernel: kernel.kind(),
    };
    let scattering =
        ScatteringOperator::from_gamma_table(grid.cartesian.len(), grid.rays.clone(), kernel, gamma)?;
    RtProblem::new(descriptor, transfer, scattering, alloc::vec![0.0; grid.n()], rhs)
}
