//! Transfer operator `Λ` from the implicit-Euler formal solution.
//!
//! In ray-major ordering `Λ` is block diagonal with one `N_s × N_s` block per
//! ray. Downward rays (`μ < 0`) are fed from `t_surf` and give a lower
//! triangular block with a zero first row; emerging rays (`μ > 0`) are fed from
//! `t_deep` and give an upper triangular block with a zero last row.
//!
//! Application marches the recursion
//!
//! ```text
//! μ < 0:  I_{i+1} = (I_i + Δτ_i S_{i+1}) / (1 + Δτ_i)
//! μ > 0:  I_{i-1} = (I_i + Δτ_{i-1} S_{i-1}) / (1 + Δτ_{i-1})
//! ```
//!
//! in `O(N_s)` per ray. The explicit coefficient tables `f_{i,j}`, `h_{i,j}`
//! are only built for dense materialization.

use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::grid::{FieldVector, Grid, Layout, Ordering};

/// Incoming intensity per frequency index at the two boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Inflow {
    /// `I_in(t_surf, ν)`, used by `μ < 0` rays.
    pub surf: Vec<f64>,
    /// `I_in(t_deep, ν)`, used by `μ > 0` rays.
    pub deep: Vec<f64>,
}

impl Inflow {
    pub fn uniform(n_nu: usize, surf: f64, deep: f64) -> Self {
        Inflow {
            surf: alloc::vec![surf; n_nu],
            deep: alloc::vec![deep; n_nu],
        }
    }

    /// The boundary setting of the experiments: `I_in(t_deep) = 1`, `I_in(t_surf) = 0`.
    pub fn deep_unit(n_nu: usize) -> Self {
        Self::uniform(n_nu, 0.0, 1.0)
    }
}

/// One 1D characteristic: optical-depth steps in travel order plus the
/// inflow at its first node.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LineBlock {
    pub dtau: Vec<f64>,
}

/// Implicit-Euler march along a line whose nodes are listed in travel order.
/// `out[0] = inflow`, `out[m+1] = (out[m] + Δτ_m src[m+1]) / (1 + Δτ_m)`.
#[inline]
pub(crate) fn march(dtau: &[f64], src: &[f64], inflow: f64, out: &mut [f64]) {
    debug_assert_eq!(dtau.len() + 1, src.len());
    let mut prev = inflow;
    out[0] = inflow;
    for (m, &d) in dtau.iter().enumerate() {
        prev = (prev + d * src[m + 1]) / (1.0 + d);
        out[m + 1] = prev;
    }
}

/// Same march with the node order reversed (`μ > 0`): the line runs from the
/// last index to the first.
#[inline]
fn march_reversed(dtau: &[f64], src: &[f64], inflow: f64, out: &mut [f64]) {
    let n = src.len();
    let mut prev = inflow;
    out[n - 1] = inflow;
    for i in (0..n - 1).rev() {
        let d = dtau[i];
        prev = (prev + d * src[i]) / (1.0 + d);
        out[i] = prev;
    }
}

/// Explicit coefficients of one ray block.
#[derive(Debug, Clone, PartialEq)]
pub struct RayCoefficients {
    /// `Λ_[k]` (`N_s × N_s`).
    pub block: DenseMatrix,
    /// `f_i` or `h_i`, the weight of the boundary value at node `i`.
    pub inflow_factors: Vec<f64>,
}

/// The discrete transfer operator `Λ` on a plane-parallel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    layout: Layout,
    downward: Vec<bool>,
    nu_index: Vec<usize>,
    dtau: Vec<LineBlock>,
    inflow: Inflow,
}

impl TransferOperator {
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.len()
    }

    pub fn inflow(&self) -> &Inflow {
        &self.inflow
    }

    /// Replace the boundary values without touching the coefficients.
    pub fn set_inflow(&mut self, inflow: Inflow) -> Result<()> {
        let n_nu = self.inflow.surf.len();
        Error::check_len(n_nu, inflow.surf.len())?;
        Error::check_len(n_nu, inflow.deep.len())?;
        self.inflow = inflow;
        Ok(())
    }

    /// Optical-depth steps of ray `k`.
    pub fn delta_taus(&self, k: usize) -> &[f64] {
        &self.dtau[k].dtau
    }

    pub fn is_downward(&self, k: usize) -> bool {
        self.downward[k]
    }

    /// `Λ̃ S̃` for a ray-major input, written into `dst`.
    pub fn apply_ray_major(&self, src: &[f64], dst: &mut [f64]) {
        self.march_all(src, dst, None);
    }

    /// `Λ S` for a space-major input.
    pub fn apply_space_major(&self, src: &[f64], dst: &mut [f64]) {
        let n = self.n();
        let mut rm_src = alloc::vec![0.0; n];
        let mut rm_dst = alloc::vec![0.0; n];
        self.layout.reorder(Ordering::SpaceMajor, src, &mut rm_src);
        self.apply_ray_major(&rm_src, &mut rm_dst);
        self.layout.reorder(Ordering::RayMajor, &rm_dst, dst);
    }

    fn march_all(&self, src: &[f64], dst: &mut [f64], inflow: Option<&Inflow>) {
        let ns = self.layout.n_space;
        for (k, (s, d)) in src.chunks_exact(ns).zip(dst.chunks_exact_mut(ns)).enumerate() {
            let dtau = &self.dtau[k].dtau;
            let nu = self.nu_index[k];
            if self.downward[k] {
                let i_in = inflow.map_or(0.0, |f| f.surf[nu]);
                march(dtau, s, i_in, d);
                // the boundary node carries no source contribution
            } else {
                let i_in = inflow.map_or(0.0, |f| f.deep[nu]);
                march_reversed(dtau, s, i_in, d);
            }
        }
    }

    /// Homogeneous part `Λ S` of the formal solution, in the input's ordering.
    pub fn apply(&self, s: &FieldVector) -> Result<FieldVector> {
        apply_transfer(self, s)
    }

    /// Boundary vector `I_in` in ray-major order.
    pub fn boundary_ray_major(&self) -> Vec<f64> {
        let n = self.n();
        let zeros = alloc::vec![0.0; n];
        let mut out = alloc::vec![0.0; n];
        self.march_all(&zeros, &mut out, Some(&self.inflow));
        out
    }

    /// Boundary vector `I_in` in space-major order.
    pub fn boundary_space_major(&self) -> Vec<f64> {
        let rm = self.boundary_ray_major();
        let mut out = alloc::vec![0.0; rm.len()];
        self.layout.reorder(Ordering::RayMajor, &rm, &mut out);
        out
    }

    /// Closed-form coefficient tables of ray `k`:
    /// `f_{i,j} = Δτ_{j−1} / ∏_{l=j}^{i} (1 + Δτ_{l−1})`, `f_i = 1 / ∏_{l<i} (1 + Δτ_l)`
    /// for `μ < 0`, and `h_{i,j} = Δτ_j / ∏_{l=i}^{j} (1 + Δτ_l)`,
    /// `h_i = 1 / ∏_{l≥i} (1 + Δτ_l)` for `μ > 0`.
    pub fn coefficients(&self, k: usize) -> RayCoefficients {
        let ns = self.layout.n_space;
        let dt = &self.dtau[k].dtau;
        let mut block = DenseMatrix::zeros(ns, ns);
        let mut inflow_factors = alloc::vec![0.0; ns];
        if self.downward[k] {
            for j in 1..ns {
                for i in j..ns {
                    let denom: f64 = (j..=i).map(|l| 1.0 + dt[l - 1]).product();
                    block[(i, j)] = dt[j - 1] / denom;
                }
            }
            for (i, f) in inflow_factors.iter_mut().enumerate() {
                let denom: f64 = (0..i).map(|l| 1.0 + dt[l]).product();
                *f = 1.0 / denom;
            }
        } else {
            for i in 0..ns - 1 {
                for j in i..ns - 1 {
                    let denom: f64 = (i..=j).map(|l| 1.0 + dt[l]).product();
                    block[(i, j)] = dt[j] / denom;
                }
            }
            for (i, h) in inflow_factors.iter_mut().enumerate() {
                let denom: f64 = (i..ns - 1).map(|l| 1.0 + dt[l]).product();
                *h = 1.0 / denom;
            }
        }
        RayCoefficients {
            block,
            inflow_factors,
        }
    }

    /// `P^T Λ̃ P` as a dense space-major matrix, assembled from the
    /// coefficient tables.
    pub fn materialize(&self, cap: usize) -> Result<DenseMatrix> {
        materialize_transfer(self, cap)
    }
}

/// Precompute optical-depth steps and directions for every ray.
pub fn build_transfer(grid: &Grid, inflow: Inflow) -> Result<TransferOperator> {
    Error::check_len(grid.n_nu, inflow.surf.len())?;
    Error::check_len(grid.n_nu, inflow.deep.len())?;
    let dtau = grid
        .rays
        .iter()
        .map(|r| LineBlock {
            dtau: grid.delta_taus(r),
        })
        .collect();
    Ok(TransferOperator {
        layout: grid.layout(),
        downward: grid.rays.iter().map(|r| r.is_downward()).collect(),
        nu_index: grid.rays.iter().map(|r| r.nu_index).collect(),
        dtau,
        inflow,
    })
}

/// `Λ S` (homogeneous part only), returned in the ordering of `s`.
pub fn apply_transfer(op: &TransferOperator, s: &FieldVector) -> Result<FieldVector> {
    Error::check_len(op.n(), s.values.len())?;
    if s.layout != op.layout {
        return Err(Error::invalid("field layout does not match the operator"));
    }
    let mut out = alloc::vec![0.0; op.n()];
    match s.ordering {
        Ordering::RayMajor => op.apply_ray_major(&s.values, &mut out),
        Ordering::SpaceMajor => op.apply_space_major(&s.values, &mut out),
    }
    FieldVector::new(out, s.ordering, s.layout)
}

/// Boundary term `I_in` in space-major ordering.
pub fn boundary_term(op: &TransferOperator) -> FieldVector {
    FieldVector {
        values: op.boundary_space_major(),
        ordering: Ordering::SpaceMajor,
        layout: op.layout,
    }
}

/// Dense `Λ` in space-major ordering.
pub fn materialize_transfer(op: &TransferOperator, cap: usize) -> Result<DenseMatrix> {
    let n = op.n();
    Error::check_cap(n, cap)?;
    let layout = op.layout;
    let mut m = DenseMatrix::zeros(n, n);
    for k in 0..layout.n_rays {
        let block = op.coefficients(k).block;
        for i in 0..layout.n_space {
            for j in 0..layout.n_space {
                let v = block[(i, j)];
                if v != 0.0 {
                    m[(layout.space_major(i, k), layout.space_major(j, k))] = v;
                }
            }
        }
    }
    Ok(m)
}
