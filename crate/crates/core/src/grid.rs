//! Space × ray product grid, the two collocation orderings and optical depths.
//!
//! A field on the grid is a vector of `N = N_s · N_r` values. In
//! [`Ordering::SpaceMajor`] the spatial index is outermost (entry `(i, k)` at
//! `i · N_r + k`), which makes scattering block diagonal. In
//! [`Ordering::RayMajor`] the ray index is outermost (entry `(i, k)` at
//! `k · N_s + i`), which makes transfer block diagonal. Indices are 0-based
//! throughout.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;
use crate::quadrature::{gauss_legendre, trapezoid};

/// Absorption profile `φ(ν)`, assumed constant in space and direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `φ ≡ 1`.
    Flat,
    /// `φ(ν) = 1 / (π (ν² + 1))` in reduced-frequency units.
    Lorentzian,
}

impl Profile {
    pub fn eval(&self, nu: f64) -> f64 {
        match self {
            Profile::Flat => 1.0,
            Profile::Lorentzian => 1.0 / (PI * (nu * nu + 1.0)),
        }
    }

    /// Largest value of the profile (at line centre).
    pub fn peak(&self) -> f64 {
        self.eval(0.0)
    }
}

/// A `(direction, frequency)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    /// Direction cosine; `μ > 0` is emerging (travels towards `t_surf`).
    pub mu: f64,
    pub nu: f64,
    pub angular_weight: f64,
    pub frequency_weight: f64,
    /// Position `k` in the ray ordering, `k = mu_index · N_ν + nu_index`.
    pub index: usize,
    pub mu_index: usize,
    pub nu_index: usize,
    /// `φ(ν)` sampled once.
    pub profile: f64,
}

impl Ray {
    /// Combined quadrature weight `w̃ = w_μ · w_ν`.
    pub fn weight(&self) -> f64 {
        self.angular_weight * self.frequency_weight
    }

    pub fn is_downward(&self) -> bool {
        self.mu < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ordering {
    SpaceMajor,
    RayMajor,
}

/// Dimensions of a space × ray field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_space: usize,
    pub n_rays: usize,
}

impl Layout {
    pub fn new(n_space: usize, n_rays: usize) -> Self {
        Layout { n_space, n_rays }
    }

    pub fn len(&self) -> usize {
        self.n_space * self.n_rays
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn space_major(&self, i: usize, k: usize) -> usize {
        i * self.n_rays + k
    }

    #[inline]
    pub fn ray_major(&self, i: usize, k: usize) -> usize {
        k * self.n_space + i
    }

    /// Reorder `src` (in `from` ordering) into `dst`.
    pub fn reorder(&self, from: Ordering, src: &[f64], dst: &mut [f64]) {
        debug_assert_eq!(src.len(), self.len());
        debug_assert_eq!(dst.len(), self.len());
        match from {
            Ordering::SpaceMajor => {
                for (i, row) in src.chunks_exact(self.n_rays).enumerate() {
                    for (k, &v) in row.iter().enumerate() {
                        dst[k * self.n_space + i] = v;
                    }
                }
            }
            Ordering::RayMajor => {
                for (k, col) in src.chunks_exact(self.n_space).enumerate() {
                    for (i, &v) in col.iter().enumerate() {
                        dst[i * self.n_rays + k] = v;
                    }
                }
            }
        }
    }
}

/// A collocation vector tagged with its ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub values: Vec<f64>,
    pub ordering: Ordering,
    pub layout: Layout,
}

impl FieldVector {
    pub fn new(values: Vec<f64>, ordering: Ordering, layout: Layout) -> Result<Self> {
        Error::check_len(layout.len(), values.len())?;
        Ok(FieldVector {
            values,
            ordering,
            layout,
        })
    }

    pub fn zeros(ordering: Ordering, layout: Layout) -> Self {
        FieldVector {
            values: alloc::vec![0.0; layout.len()],
            ordering,
            layout,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at space node `i`, ray `k`, whatever the ordering.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        match self.ordering {
            Ordering::SpaceMajor => self.values[self.layout.space_major(i, k)],
            Ordering::RayMajor => self.values[self.layout.ray_major(i, k)],
        }
    }

    pub fn permute(&self, target: Ordering) -> Result<FieldVector> {
        permute(self, target)
    }
}

/// Reindex `v` into `target` ordering. A pure reordering, so the round trip is
/// bit-exact.
pub fn permute(v: &FieldVector, target: Ordering) -> Result<FieldVector> {
    Error::check_len(v.layout.len(), v.values.len())?;
    if v.ordering == target {
        return Ok(v.clone());
    }
    let mut out = alloc::vec![0.0; v.values.len()];
    v.layout.reorder(v.ordering, &v.values, &mut out);
    Ok(FieldVector {
        values: out,
        ordering: target,
        layout: v.layout,
    })
}

/// Parameters of a plane-parallel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_space: usize,
    pub n_omega: usize,
    pub n_nu: usize,
    pub t_surf: f64,
    pub t_deep: f64,
    pub freq_lo: f64,
    pub freq_hi: f64,
    pub profile: Profile,
}

impl GridSpec {
    /// Single frequency, flat profile, `t ∈ [0, 1]`.
    pub fn monochromatic(n_space: usize, n_omega: usize) -> Self {
        GridSpec {
            n_space,
            n_omega,
            n_nu: 1,
            t_surf: 0.0,
            t_deep: 1.0,
            freq_lo: 0.0,
            freq_hi: 0.0,
            profile: Profile::Flat,
        }
    }

    /// Lorentzian line on `F = [-10, 10]`, `t ∈ [0, 1]`.
    pub fn lorentzian_line(n_space: usize, n_omega: usize, n_nu: usize) -> Self {
        GridSpec {
            n_space,
            n_omega,
            n_nu,
            t_surf: 0.0,
            t_deep: 1.0,
            freq_lo: -10.0,
            freq_hi: 10.0,
            profile: Profile::Lorentzian,
        }
    }
}

/// Spatial nodes, rays and profile of a plane-parallel problem. Immutable once
/// built.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub t_nodes: Vec<f64>,
    pub rays: Vec<Ray>,
    pub profile: Profile,
    pub n_omega: usize,
    pub n_nu: usize,
}

impl Grid {
    pub fn n_space(&self) -> usize {
        self.t_nodes.len()
    }

    pub fn n_rays(&self) -> usize {
        self.rays.len()
    }

    pub fn n(&self) -> usize {
        self.n_space() * self.n_rays()
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.n_space(), self.n_rays())
    }

    /// `Δτ_i(r) = φ(ν) (t_{i+1} − t_i) / |μ|` for the interval `[t_i, t_{i+1}]`.
    pub fn delta_tau(&self, ray: &Ray, i: usize) -> f64 {
        delta_tau(self, ray, i)
    }

    /// All `N_s − 1` optical-depth increments of one ray.
    pub fn delta_taus(&self, ray: &Ray) -> Vec<f64> {
        (0..self.n_space().saturating_sub(1))
            .map(|i| delta_tau(self, ray, i))
            .collect()
    }
}

/// `Δτ_i(r) = φ(ν) (t_{i+1} − t_i) / |μ|`, `0 ≤ i < N_s − 1`.
pub fn delta_tau(grid: &Grid, ray: &Ray, i: usize) -> f64 {
    ray.profile * (grid.t_nodes[i + 1] - grid.t_nodes[i]) / math::abs(ray.mu)
}

/// Equidistant `t` grid, Gauss–Legendre half-range angles and a trapezoidal
/// frequency rule, with rays ordered `μ`-outer, `ν`-inner.
pub fn build_grid(spec: &GridSpec) -> Result<Grid> {
    if spec.n_space < 2 {
        return Err(Error::invalid("need at least two spatial nodes"));
    }
    if spec.n_omega < 2 || spec.n_omega % 2 != 0 {
        return Err(Error::invalid("number of directions must be even and at least 2"));
    }
    if spec.n_nu == 0 {
        return Err(Error::invalid("need at least one frequency"));
    }
    if !(spec.t_surf < spec.t_deep) {
        return Err(Error::invalid("t_surf must be below t_deep"));
    }
    let ns = spec.n_space;
    let dt = (spec.t_deep - spec.t_surf) / (ns - 1) as f64;
    let t_nodes = (0..ns)
        .map(|i| {
            if i == ns - 1 {
                spec.t_deep
            } else {
                spec.t_surf + dt * i as f64
            }
        })
        .collect();

    let half = spec.n_omega / 2;
    let down = gauss_legendre(half, -1.0, 0.0)?;
    let up = gauss_legendre(half, 0.0, 1.0)?;
    let mus: Vec<(f64, f64)> = down
        .nodes
        .iter()
        .zip(&down.weights)
        .chain(up.nodes.iter().zip(&up.weights))
        .map(|(&m, &w)| (m, w))
        .collect();

    let freqs: Vec<(f64, f64)> = if spec.n_nu == 1 {
        alloc::vec![(0.5 * (spec.freq_lo + spec.freq_hi), 1.0)]
    } else {
        if !(spec.freq_lo < spec.freq_hi) {
            return Err(Error::invalid("frequency interval must satisfy lo < hi"));
        }
        let rule = trapezoid(spec.n_nu, spec.freq_lo, spec.freq_hi)?;
        rule.nodes.into_iter().zip(rule.weights).collect()
    };

    let mut rays = Vec::with_capacity(spec.n_omega * spec.n_nu);
    for (mu_index, &(mu, wm)) in mus.iter().enumerate() {
        for (nu_index, &(nu, wn)) in freqs.iter().enumerate() {
            rays.push(Ray {
                mu,
                nu,
                angular_weight: wm,
                frequency_weight: wn,
                index: rays.len(),
                mu_index,
                nu_index,
                profile: spec.profile.eval(nu),
            });
        }
    }
    Ok(Grid {
        t_nodes,
        rays,
        profile: spec.profile,
        n_omega: spec.n_omega,
        n_nu: spec.n_nu,
    })
}
