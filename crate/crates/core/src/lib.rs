//! Discrete-ordinates radiative transfer as linear algebra.
//!
//! The crate assembles and applies the transfer operator `Λ`, the scattering
//! operator `Σ = ΓΨW` and the global operator `A = Id − ΛΣ` without ever
//! forming them densely, solves `A I = b` with GMRES or BiCGStab, and
//! computes the spectral diagnostics used to check that the eigenvalues of
//! `A` cluster at one.
//!
//! Everything here is `no_std` + `alloc`; file formats, threads and the
//! experiment CLI live in the companion `dort` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod math;

pub mod dense;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod multidim;
pub mod operator;
pub mod presets;
pub mod quadrature;
pub mod scattering;
pub mod spectrum;
pub mod transfer;

pub use error::{Error, Result};
pub use grid::{FieldVector, Grid, GridSpec, Ordering, Profile, Ray};
pub use krylov::{LinearMap, Method, SolveConfig, SolveReport};
pub use multidim::Transfer2D;
pub use presets::Preset;
pub use operator::{ProblemDescriptor, RhsMode, RtProblem, Transfer};
pub use scattering::{KernelKind, ScatteringKernel, ScatteringOperator};
pub use spectrum::{SpectrumOptions, SpectrumReport, TrendSummary};
pub use transfer::TransferOperator;

/// Default ceiling on `N` for dense materialization.
pub const DEFAULT_DENSE_CAP: usize = 20_000;
