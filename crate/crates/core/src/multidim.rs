//! Two-dimensional long characteristics.
//!
//! The domain is `x ∈ [0, 1]` (horizontal) × `t ∈ [0, 1]` (depth, `t = 0` at
//! the surface) with an `N_x × N_y` Cartesian grid; node `(a, b)` sits at
//! `(a h_x, b h_y)` and has space index `b N_x + a`. A 3D direction with
//! cosine `μ` and azimuth `χ` moves in the plane along
//! `(sin θ cos χ, −μ)`, so `μ > 0` still travels towards the surface.
//!
//! For every direction `k` a family of parallel lines covers the domain.
//! The transfer block is `Λ_[k] = T_RC,k Λ_R,k T_CR,k`: bilinear
//! interpolation of the Cartesian source onto the line nodes, an implicit
//! Euler march along each line, and inverse-distance interpolation of the
//! line intensities back to the Cartesian nodes.

use alloc::vec::Vec;
use core::cmp::Ordering as CmpOrdering;
use core::f64::consts::PI;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpec, Layout, Ray};
use crate::math::{abs, ceil, cos, floor, hypot, sqrt};
use crate::operator::Transfer;
use crate::transfer::march;

/// Axis-aligned rectangle `[x0, x1] × [t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        x1: 1.0,
        t0: 0.0,
        t1: 1.0,
    };

    fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.t0 - tol && p[1] <= self.t1 + tol
    }
}

/// Structured `N_x × N_y` grid on a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGrid {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl CartesianGrid {
    pub fn new(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid("2D grid needs at least 2 nodes per axis"));
        }
        if !(domain.x0 < domain.x1 && domain.t0 < domain.t1) {
            return Err(Error::invalid("empty domain"));
        }
        Ok(CartesianGrid { domain, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        (self.domain.x1 - self.domain.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.domain.t1 - self.domain.t0) / (self.ny - 1) as f64
    }

    pub fn x(&self, a: usize) -> f64 {
        if a == self.nx - 1 {
            self.domain.x1
        } else {
            self.domain.x0 + a as f64 * self.hx()
        }
    }

    pub fn t(&self, b: usize) -> f64 {
        if b == self.ny - 1 {
            self.domain.t1
        } else {
            self.domain.t0 + b as f64 * self.hy()
        }
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        b * self.nx + a
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        [self.x(i % self.nx), self.t(i / self.nx)]
    }

    /// Cell index and local coordinate in `[0, 1]` along one axis, with
    /// coordinates within `1e-12` of a node snapped onto it.
    fn locate(u: f64, lo: f64, h: f64, n: usize) -> (usize, f64) {
        let s = (u - lo) / h;
        let mut c = floor(s);
        let mut f = s - c;
        if f > 1.0 - 1e-12 {
            c += 1.0;
            f = 0.0;
        } else if f < 1e-12 {
            f = 0.0;
        }
        let mut c = if c < 0.0 { 0 } else { c as usize };
        if c >= n - 1 {
            // on the last node line
            c = n - 2;
            f = 1.0;
        }
        (c, f)
    }
}

/// One characteristic: equidistant nodes from the entry to the exit point.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub nodes: Vec<[f64; 2]>,
    /// Position of the first node in the family's node numbering.
    pub offset: usize,
    /// Distance between consecutive nodes in the plane.
    pub step: f64,
}

impl Line {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entry(&self) -> [f64; 2] {
        self.nodes[0]
    }

    pub fn exit(&self) -> [f64; 2] {
        self.nodes[self.nodes.len() - 1]
    }
}

/// Parallel lines for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RayFamily {
    pub k: usize,
    /// Unit direction of travel in the `(x, t)` plane.
    pub direction: [f64; 2],
    pub lines: Vec<Line>,
    /// Total node count `∑_ℓ M(k, ℓ)`.
    pub n_nodes: usize,
}

impl RayFamily {
    pub fn nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.lines.iter().flat_map(|l| l.nodes.iter().copied())
    }
}

/// Lines of direction `direction` through every grid node on the upstream
/// edges, sampled with a step of at most `min(h_x, h_y, step_cap)`.
/// Lines that leave the domain immediately are dropped.
pub fn trace_rays(
    grid: &CartesianGrid,
    direction: [f64; 2],
    step_cap: f64,
) -> Result<RayFamily> {
    let norm = hypot(direction[0], direction[1]);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::invalid("direction must be a nonzero vector"));
    }
    if !(step_cap > 0.0) {
        return Err(Error::invalid("node step must be positive"));
    }
    let mut d = [direction[0] / norm, direction[1] / norm];
    for c in d.iter_mut() {
        if abs(*c) < 1e-12 {
            *c = 0.0;
        }
    }
    let step_max = grid.hx().min(grid.hy()).min(step_cap);
    let dom = grid.domain;

    // seeds on the upstream edges, corners once
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    let push = |s: (usize, usize), seeds: &mut Vec<(usize, usize)>| {
        if !seeds.contains(&s) {
            seeds.push(s);
        }
    };
    if d[0] != 0.0 {
        let a = if d[0] > 0.0 { 0 } else { grid.nx - 1 };
        for b in 0..grid.ny {
            push((a, b), &mut seeds);
        }
    }
    if d[1] != 0.0 {
        let b = if d[1] > 0.0 { 0 } else { grid.ny - 1 };
        for a in 0..grid.nx {
            push((a, b), &mut seeds);
        }
    }

    let mut lines = Vec::new();
    let mut offset = 0;
    for (a, b) in seeds {
        let p0 = [grid.x(a), grid.t(b)];
        let mut s_max = f64::INFINITY;
        if d[0] > 0.0 {
            s_max = s_max.min((dom.x1 - p0[0]) / d[0]);
        } else if d[0] < 0.0 {
            s_max = s_max.min((dom.x0 - p0[0]) / d[0]);
        }
        if d[1] > 0.0 {
            s_max = s_max.min((dom.t1 - p0[1]) / d[1]);
        } else if d[1] < 0.0 {
            s_max = s_max.min((dom.t0 - p0[1]) / d[1]);
        }
        if !(s_max > 1e-12 * step_max) {
            continue;
        }
        let segments = ceil(s_max / step_max - 1e-9).max(1.0) as usize;
        let step = s_max / segments as f64;
        let nodes: Vec<[f64; 2]> = (0..=segments)
            .map(|m| {
                let s = if m == segments { s_max } else { m as f64 * step };
                let mut p = [p0[0] + s * d[0], p0[1] + s * d[1]];
                // keep the exit node on the boundary
                p[0] = p[0].clamp(dom.x0, dom.x1);
                p[1] = p[1].clamp(dom.t0, dom.t1);
                p
            })
            .collect();
        let m = nodes.len();
        lines.push(Line {
            nodes,
            offset,
            step,
        });
        offset += m;
    }
    Ok(RayFamily {
        k: 0,
        direction: d,
        lines,
        n_nodes: offset,
    })
}

/// Sparse map stored by rows, each row a short list of `(column, weight)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolator {
    pub n_cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Interpolator {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, src: &[f64], dst: &mut [f64]) {
        for (d, row) in dst.iter_mut().zip(&self.rows) {
            *d = row.iter().map(|&(j, w)| w * src[j]).sum();
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|(_, w)| w).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, w)| abs(*w)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows(), self.n_cols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] += w;
            }
        }
        m
    }
}

/// `T_CR` (Cartesian → line nodes, bilinear) and `T_RC` (line nodes →
/// Cartesian, normalized inverse squared distance over the four nearest
/// line nodes).
pub fn build_interpolators(
    family: &RayFamily,
    grid: &CartesianGrid,
) -> Result<(Interpolator, Interpolator)> {
    let (hx, hy) = (grid.hx(), grid.hy());
    let dom = grid.domain;
    let mut t_cr = Vec::with_capacity(family.n_nodes);
    for p in family.nodes() {
        if !dom.contains(p, 1e-12) {
            return Err(Error::invalid("line node outside the domain"));
        }
        let (a, fx) = CartesianGrid::locate(p[0], dom.x0, hx, grid.nx);
        let (b, fy) = CartesianGrid::locate(p[1], dom.t0, hy, grid.ny);
        let mut row = Vec::with_capacity(4);
        for (da, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (db, wy) in [(0, 1.0 - fy), (1, fy)] {
                let w = wx * wy;
                if w != 0.0 {
                    row.push((grid.index(a + da, b + db), w));
                }
            }
        }
        t_cr.push(row);
    }

    // bucket line nodes by Cartesian cell
    let cells_x = grid.nx - 1;
    let cells_y = grid.ny - 1;
    let mut buckets: Vec<Vec<(usize, [f64; 2])>> = alloc::vec![Vec::new(); cells_x * cells_y];
    for (j, p) in family.nodes().enumerate() {
        let (a, _) = CartesianGrid::locate(p[0], dom.x0, hx, grid.nx);
        let (b, _) = CartesianGrid::locate(p[1], dom.t0, hy, grid.ny);
        buckets[b * cells_x + a].push((j, p));
    }
    let h = hx.max(hy);
    let radius = 2.0 * h;
    let reach_x = ceil(radius / hx) as isize + 1;
    let reach_y = ceil(radius / hy) as isize + 1;
    let mut t_rc = Vec::with_capacity(grid.len());
    let mut cand: Vec<(f64, usize)> = Vec::new();
    for i in 0..grid.len() {
        let q = grid.node(i);
        let (a0, b0) = ((i % grid.nx) as isize, (i / grid.nx) as isize);
        cand.clear();
        for cb in b0 - reach_y..=b0 + reach_y {
            if cb < 0 || cb >= cells_y as isize {
                continue;
            }
            for ca in a0 - reach_x..=a0 + reach_x {
                if ca < 0 || ca >= cells_x as isize {
                    continue;
                }
                for &(j, p) in &buckets[cb as usize * cells_x + ca as usize] {
                    let dist = hypot(p[0] - q[0], p[1] - q[1]);
                    if dist <= radius {
                        cand.push((dist, j));
                    }
                }
            }
        }
        if cand.is_empty() {
            let nearest = family
                .nodes()
                .map(|p| hypot(p[0] - q[0], p[1] - q[1]))
                .fold(f64::INFINITY, f64::min);
            return Err(Error::Coverage {
                node: i,
                distance: nearest,
            });
        }
        cand.sort_by(|x, y| {
            x.0.partial_cmp(&y.0)
                .unwrap_or(CmpOrdering::Equal)
                .then(x.1.cmp(&y.1))
        });
        let row = if cand[0].0 < 1e-12 {
            alloc::vec![(cand[0].1, 1.0)]
        } else {
            let near = &cand[..cand.len().min(4)];
            let total: f64 = near.iter().map(|(d, _)| 1.0 / (d * d)).sum();
            near.iter().map(|&(d, j)| (j, 1.0 / (d * d) / total)).collect()
        };
        t_rc.push(row);
    }
    Ok((
        Interpolator {
            n_cols: grid.len(),
            rows: t_cr,
        },
        Interpolator {
            n_cols: family.n_nodes,
            rows: t_rc,
        },
    ))
}

/// Parameters of a 2D problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2dSpec {
    pub nx: usize,
    pub ny: usize,
    /// Gauss–Legendre inclination nodes (even).
    pub n_mu: usize,
    /// Equidistant azimuths on `[0, 2π)`.
    pub n_az: usize,
    /// Upper bound on the node step along lines.
    pub step_cap: f64,
    /// Opacity `χ`, constant.
    pub opacity: f64,
}

impl Grid2dSpec {
    pub fn new(nx: usize, ny: usize, n_mu: usize, n_az: usize) -> Self {
        Grid2dSpec {
            nx,
            ny,
            n_mu,
            n_az,
            step_cap: f64::INFINITY,
            opacity: 1.0,
        }
    }

    pub fn n_omega(&self) -> usize {
        self.n_mu * self.n_az
    }
}

/// Cartesian grid plus the direction set of a 2D problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2d {
    pub cartesian: CartesianGrid,
    /// Rays `k = mu_index · n_az + az_index`, monochromatic.
    pub rays: Vec<Ray>,
    /// Unit travel directions in the plane.
    pub directions: Vec<[f64; 2]>,
    /// 3D path length per unit plane length, `1 / |(sin θ cos χ, μ)|`.
    pub path_factor: Vec<f64>,
    pub spec: Grid2dSpec,
}

impl Grid2d {
    pub fn layout(&self) -> Layout {
        Layout::new(self.cartesian.len(), self.rays.len())
    }

    pub fn n(&self) -> usize {
        self.layout().len()
    }
}

pub fn build_grid_2d(spec: &Grid2dSpec) -> Result<Grid2d> {
    if spec.n_az == 0 {
        return Err(Error::invalid("need at least one azimuth"));
    }
    if !(spec.opacity > 0.0) {
        return Err(Error::invalid("opacity must be positive"));
    }
    let cartesian = CartesianGrid::new(Rect::UNIT, spec.nx, spec.ny)?;
    let angles = build_grid(&GridSpec::monochromatic(2, spec.n_mu))?;
    let mut rays = Vec::new();
    let mut directions = Vec::new();
    let mut path_factor = Vec::new();
    for (im, r) in angles.rays.iter().enumerate() {
        let sin_theta = sqrt((1.0 - r.mu * r.mu).max(0.0));
        for ia in 0..spec.n_az {
            let chi = 2.0 * PI * ia as f64 / spec.n_az as f64;
            let mut dx = sin_theta * cos(chi);
            if abs(dx) < 1e-12 {
                dx = 0.0;
            }
            let dt = -r.mu;
            let rho = hypot(dx, dt);
            let k = rays.len();
            rays.push(Ray {
                mu: r.mu,
                nu: 0.0,
                angular_weight: r.angular_weight / spec.n_az as f64,
                frequency_weight: 1.0,
                index: k,
                mu_index: im,
                nu_index: 0,
                profile: 1.0,
            });
            directions.push([dx / rho, dt / rho]);
            path_factor.push(1.0 / rho);
        }
    }
    Ok(Grid2d {
        cartesian,
        rays,
        directions,
        path_factor,
        spec: *spec,
    })
}

/// Per-direction data of the 2D transfer operator.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTransfer {
    pub family: RayFamily,
    pub t_cr: Interpolator,
    pub t_rc: Interpolator,
    /// Optical-depth step of each line.
    pub dtau: Vec<f64>,
    /// Incoming intensity at each line's entry point.
    pub inflow: Vec<f64>,
}

impl RayTransfer {
    /// `Λ_R` on line-node values, with or without the entry intensities.
    fn march_lines(&self, src: &[f64], dst: &mut [f64], with_inflow: bool) {
        let mut dtau = Vec::new();
        for (l, line) in self.family.lines.iter().enumerate() {
            let m = line.len();
            dtau.clear();
            dtau.resize(m - 1, self.dtau[l]);
            let range = line.offset..line.offset + m;
            let i_in = if with_inflow { self.inflow[l] } else { 0.0 };
            march(&dtau, &src[range.clone()], i_in, &mut dst[range]);
        }
    }

    /// Dense `Λ_R` (block diagonal over lines).
    pub fn lambda_r(&self) -> DenseMatrix {
        let n = self.family.n_nodes;
        DenseMatrix::from_columns(n, |x, y| self.march_lines(x, y, false))
    }
}

/// `I_in(x, t)`: 1 on the deep edge, 0 at the surface, linear in `t` on
/// the side walls.
pub fn default_inflow_2d(_x: f64, t: f64) -> f64 {
    t
}

/// Transfer operator of a 2D problem, space-major over
/// `(Cartesian node, ray)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer2D {
    layout: Layout,
    pub rays: Vec<RayTransfer>,
}

/// Ray families, interpolators and line coefficients for every direction.
pub fn build_transfer_2d(grid: &Grid2d, inflow: impl Fn(f64, f64) -> f64) -> Result<Transfer2D> {
    let mut out = Vec::with_capacity(grid.rays.len());
    for (k, ray) in grid.rays.iter().enumerate() {
        let mut family = trace_rays(&grid.cartesian, grid.directions[k], grid.spec.step_cap)?;
        family.k = k;
        let (t_cr, t_rc) = build_interpolators(&family, &grid.cartesian)?;
        let factor = grid.spec.opacity * ray.profile * grid.path_factor[k];
        let dtau = family.lines.iter().map(|l| factor * l.step).collect();
        let inflow_values = family
            .lines
            .iter()
            .map(|l| {
                let p = l.entry();
                inflow(p[0], p[1])
            })
            .collect();
        out.push(RayTransfer {
            family,
            t_cr,
            t_rc,
            dtau,
            inflow: inflow_values,
        });
    }
    Ok(Transfer2D {
        layout: grid.layout(),
        rays: out,
    })
}

impl Transfer2D {
    fn apply_impl(&self, src: Option<&[f64]>, dst: &mut [f64]) {
        let (ns, nr) = (self.layout.n_space, self.layout.n_rays);
        let mut cart = alloc::vec![0.0; ns];
        let mut out = alloc::vec![0.0; ns];
        for (k, rt) in self.rays.iter().enumerate() {
            let n_nodes = rt.family.n_nodes;
            let mut on_lines = alloc::vec![0.0; n_nodes];
            let mut marched = alloc::vec![0.0; n_nodes];
            if let Some(src) = src {
                for (i, c) in cart.iter_mut().enumerate() {
                    *c = src[i * nr + k];
                }
                rt.t_cr.apply(&cart, &mut on_lines);
            }
            rt.march_lines(&on_lines, &mut marched, src.is_none());
            rt.t_rc.apply(&marched, &mut out);
            for (i, o) in out.iter().enumerate() {
                dst[i * nr + k] = *o;
            }
        }
    }

    /// Dense `T_RC Λ_R T_CR` for direction `k` (`N_x N_y` square).
    pub fn dense_block(&self, k: usize) -> DenseMatrix {
        let rt = &self.rays[k];
        rt.t_rc
            .to_dense()
            .matmul(&rt.lambda_r())
            .matmul(&rt.t_cr.to_dense())
    }
}

impl Transfer for Transfer2D {
    fn layout(&self) -> Layout {
        self.layout
    }

    fn apply_space_major(&self, src: &[f64], dst: &mut [f64]) {
        self.apply_impl(Some(src), dst)
    }

    fn boundary_space_major(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.layout.len()];
        self.apply_impl(None, &mut out);
        out
    }
}
