//! Global operator `A = Id − ΛΣ` and the linear system `A I = b`.

use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::grid::{FieldVector, Layout, Ordering};
use crate::krylov::{self, LinearMap, SolveConfig, SolveReport};
use crate::math::{norm2, sqrt};
use crate::scattering::{KernelKind, ScatteringOperator};
use crate::transfer::TransferOperator;

/// A transfer operator acting on space-major vectors over
/// `n_space × n_rays` unknowns.
pub trait Transfer {
    fn layout(&self) -> Layout;

    /// `Λ S`, both space-major.
    fn apply_space_major(&self, src: &[f64], dst: &mut [f64]);

    /// Intensity produced by the boundary values alone, space-major.
    fn boundary_space_major(&self) -> Vec<f64>;

    fn n(&self) -> usize {
        self.layout().len()
    }

    /// Dense `Λ` in space-major ordering.
    fn materialize(&self, cap: usize) -> Result<DenseMatrix> {
        Error::check_cap(self.n(), cap)?;
        Ok(DenseMatrix::from_columns(self.n(), |x, y| {
            self.apply_space_major(x, y)
        }))
    }
}

impl Transfer for TransferOperator {
    fn layout(&self) -> Layout {
        TransferOperator::layout(self)
    }

    fn apply_space_major(&self, src: &[f64], dst: &mut [f64]) {
        TransferOperator::apply_space_major(self, src, dst)
    }

    fn boundary_space_major(&self) -> Vec<f64> {
        TransferOperator::boundary_space_major(self)
    }

    fn materialize(&self, cap: usize) -> Result<DenseMatrix> {
        TransferOperator::materialize(self, cap)
    }
}

/// Right-hand side choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsMode {
    /// `b = Λ t + I_in`.
    #[default]
    Physical,
    /// `b = 1`, the benchmark setting of the solver experiments.
    Ones,
}

/// Discretization sizes and kernel, carried into reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemDescriptor {
    pub n_space: usize,
    pub n_omega: usize,
    pub n_nu: usize,
    pub kernel: KernelKind,
}

/// `(Id − Λ Σ) I = Λ t + I_in`, everything space-major.
#[derive(Debug, Clone)]
pub struct RtProblem<T = TransferOperator> {
    pub descriptor: ProblemDescriptor,
    transfer: T,
    scattering: ScatteringOperator,
    thermal: Vec<f64>,
    rhs_mode: RhsMode,
    rhs: Vec<f64>,
}

impl<T: Transfer> RtProblem<T> {
    /// `thermal` is the space-major thermal source `t`.
    pub fn new(
        descriptor: ProblemDescriptor,
        transfer: T,
        scattering: ScatteringOperator,
        thermal: Vec<f64>,
        rhs_mode: RhsMode,
    ) -> Result<Self> {
        if transfer.layout() != scattering.layout() {
            return Err(Error::invalid(
                "transfer and scattering operators live on different grids",
            ));
        }
        Error::check_len(transfer.n(), thermal.len())?;
        let mut p = RtProblem {
            descriptor,
            transfer,
            scattering,
            thermal,
            rhs_mode,
            rhs: Vec::new(),
        };
        p.rhs = p.compute_rhs();
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.transfer.n()
    }

    pub fn layout(&self) -> Layout {
        self.transfer.layout()
    }

    pub fn transfer(&self) -> &T {
        &self.transfer
    }

    pub fn scattering(&self) -> &ScatteringOperator {
        &self.scattering
    }

    pub fn thermal(&self) -> &[f64] {
        &self.thermal
    }

    pub fn rhs_mode(&self) -> RhsMode {
        self.rhs_mode
    }

    /// The current right-hand side, space-major.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn set_thermal(&mut self, thermal: Vec<f64>) -> Result<()> {
        Error::check_len(self.n(), thermal.len())?;
        self.thermal = thermal;
        self.rhs = self.compute_rhs();
        Ok(())
    }

    pub fn set_rhs_mode(&mut self, mode: RhsMode) {
        self.rhs_mode = mode;
        self.rhs = self.compute_rhs();
    }

    /// Swap the transfer operator (new boundary values), keeping `Σ` and `t`.
    pub fn set_transfer(&mut self, transfer: T) -> Result<()> {
        if transfer.layout() != self.layout() {
            return Err(Error::invalid("transfer operator on a different grid"));
        }
        self.transfer = transfer;
        self.rhs = self.compute_rhs();
        Ok(())
    }

    /// Same problem with `γ` scaled by `factor`.
    pub fn with_scaled_gamma(&self, factor: f64) -> Self
    where
        T: Clone,
    {
        let mut p = self.clone();
        p.scattering = self.scattering.scaled(factor);
        p
    }

    fn compute_rhs(&self) -> Vec<f64> {
        match self.rhs_mode {
            RhsMode::Ones => alloc::vec![1.0; self.n()],
            RhsMode::Physical => {
                let mut b = alloc::vec![0.0; self.n()];
                self.transfer.apply_space_major(&self.thermal, &mut b);
                for (bi, ii) in b.iter_mut().zip(self.transfer.boundary_space_major()) {
                    *bi += ii;
                }
                b
            }
        }
    }

    /// `v − Λ Σ v` on space-major slices.
    pub fn apply_space_major(&self, v: &[f64], out: &mut [f64]) {
        let mut s = alloc::vec![0.0; v.len()];
        self.scattering.apply_space_major(v, &mut s);
        self.transfer.apply_space_major(&s, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi - *o;
        }
    }

    /// `Λ Σ v` on space-major slices.
    pub fn apply_lambda_sigma(&self, v: &[f64], out: &mut [f64]) {
        let mut s = alloc::vec![0.0; v.len()];
        self.scattering.apply_space_major(v, &mut s);
        self.transfer.apply_space_major(&s, out);
    }

    /// `A v` in the ordering of `v`.
    pub fn apply(&self, v: &FieldVector) -> Result<FieldVector> {
        apply_a(self, v)
    }

    /// Solve `A I = b` with the configured Krylov method.
    pub fn solve(&self, cfg: &SolveConfig) -> Result<(FieldVector, SolveReport)> {
        let rep = krylov::solve(self, &self.rhs, cfg)?;
        let field = FieldVector::new(rep.solution.clone(), Ordering::SpaceMajor, self.layout())?;
        Ok((field, rep))
    }
}

impl<T: Transfer> LinearMap for RtProblem<T> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_space_major(x, y)
    }
}

/// `A v = v − Λ(Σ v)`, result in the ordering of `v`.
pub fn apply_a<T: Transfer>(p: &RtProblem<T>, v: &FieldVector) -> Result<FieldVector> {
    Error::check_len(p.n(), v.values.len())?;
    if v.layout != p.layout() {
        return Err(Error::invalid("field layout does not match the problem"));
    }
    let sm = v.permute(Ordering::SpaceMajor)?;
    let mut out = alloc::vec![0.0; p.n()];
    p.apply_space_major(&sm.values, &mut out);
    FieldVector::new(out, Ordering::SpaceMajor, p.layout())?.permute(v.ordering)
}

/// The right-hand side as a space-major field.
pub fn build_rhs<T: Transfer>(p: &RtProblem<T>) -> FieldVector {
    FieldVector {
        values: p.rhs.clone(),
        ordering: Ordering::SpaceMajor,
        layout: p.layout(),
    }
}

/// Dense `Id − Λ Σ` in space-major ordering.
pub fn materialize_a<T: Transfer>(p: &RtProblem<T>, cap: usize) -> Result<DenseMatrix> {
    let lambda = p.transfer.materialize(cap)?;
    let sigma = p.scattering.materialize(cap)?;
    let mut a = lambda.matmul(&sigma);
    let n = p.n();
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            a[(i, j)] = if i == j { 1.0 - v } else { -v };
        }
    }
    Ok(a)
}

/// Power-iteration estimate of `ρ(Λ Σ)` started from the constant vector.
pub fn spectral_radius_estimate<T: Transfer>(p: &RtProblem<T>, iters: usize) -> Result<f64> {
    if iters == 0 {
        return Err(Error::invalid("power iteration needs at least one step"));
    }
    let n = p.n();
    let mut x = alloc::vec![1.0 / sqrt(n as f64); n];
    let mut y = alloc::vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..iters {
        p.apply_lambda_sigma(&x, &mut y);
        let ny = norm2(&y);
        estimate = ny;
        if ny == 0.0 {
            return Ok(0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    Ok(estimate)
}

/// `‖A − Id‖_F = ‖Λ Σ‖_F`, accumulated column by column without storing
/// the matrix.
pub fn perturbation_frobenius<T: Transfer>(p: &RtProblem<T>) -> f64 {
    let n = p.n();
    let mut e = alloc::vec![0.0; n];
    let mut col = alloc::vec![0.0; n];
    let mut total = 0.0;
    for j in 0..n {
        e[j] = 1.0;
        p.apply_lambda_sigma(&e, &mut col);
        total += col.iter().map(|v| v * v).sum::<f64>();
        e[j] = 0.0;
    }
    sqrt(total)
}
