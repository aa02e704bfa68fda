//! Eigenvalues of `A = Id − ΛΣ` and clustering diagnostics.
//!
//! Two routes give the same spectrum. The dense route materializes `A`
//! and runs the QR eigensolver on it. The low-rank route uses the per-node
//! factorization `Σ = U Vᵀ` of rank `r`: the nonzero eigenvalues of `ΛΣ`
//! are those of the `r × r` matrix `Vᵀ Λ U`, so `A` has `N − r` eigenvalues
//! exactly equal to one and the remaining ones are `1 − eig(Vᵀ Λ U)`. The
//! small matrix is further split into its decoupled blocks (one per
//! frequency for coherent scattering).

use alloc::vec::Vec;
use core::cmp::Ordering as CmpOrdering;

use crate::dense::DenseMatrix;
use crate::eigen::{eigenvalues, singular_values, Complex};
use crate::error::{Error, Result};
use crate::operator::{materialize_a, ProblemDescriptor, RtProblem, Transfer};
use crate::scattering::KernelKind;

/// Default `ε` values for outlier counts `#{|λ − 1| > ε}`.
pub const DEFAULT_EPSILONS: [f64; 6] = [0.01, 0.05, 0.1, 0.15, 0.2, 0.5];

/// Upper end of the one-sided cluster interval `[0.999, 1]`, widened by a
/// roundoff margin so eigenvalues equal to one in exact arithmetic count.
pub const ONE_SIDED_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumMethod {
    /// Low-rank whenever the scattering rank is below `N`.
    #[default]
    Auto,
    Dense,
    LowRank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub method: SpectrumMethod,
    pub dense_cap: usize,
    /// Also compute singular values of `A` (dense, expensive).
    pub singular_values: bool,
    pub epsilons: Vec<f64>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            method: SpectrumMethod::Auto,
            dense_cap: crate::DEFAULT_DENSE_CAP,
            singular_values: false,
            epsilons: DEFAULT_EPSILONS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub descriptor: ProblemDescriptor,
    pub n: usize,
    pub method: SpectrumMethod,
    pub eigenvalues: Vec<Complex>,
    pub singular_values: Option<Vec<f64>>,
    /// `#{|λ| ∈ [0.999, 1.001]} / N`.
    pub cluster_fraction: f64,
    /// `#{|λ| ∈ [0.999, 1]} / N`, upper end widened by [`ONE_SIDED_SLACK`].
    pub cluster_fraction_one_sided: f64,
    pub min_modulus: f64,
    /// `(ε, #{|λ − 1| > ε})`.
    pub outlier_counts: Vec<(f64, usize)>,
}

impl SpectrumReport {
    pub fn from_eigenvalues(
        descriptor: ProblemDescriptor,
        method: SpectrumMethod,
        eigenvalues: Vec<Complex>,
        epsilons: &[f64],
    ) -> Self {
        let n = eigenvalues.len();
        let moduli: Vec<f64> = eigenvalues.iter().map(|e| e.modulus()).collect();
        let frac = |lo: f64, hi: f64| {
            if n == 0 {
                return 0.0;
            }
            moduli.iter().filter(|&&m| m >= lo && m <= hi).count() as f64 / n as f64
        };
        let outlier_counts = epsilons
            .iter()
            .map(|&eps| {
                let c = eigenvalues
                    .iter()
                    .filter(|e| e.distance(&Complex::ONE) > eps)
                    .count();
                (eps, c)
            })
            .collect();
        SpectrumReport {
            descriptor,
            n,
            method,
            cluster_fraction: frac(0.999, 1.001),
            cluster_fraction_one_sided: frac(0.999, 1.0 + ONE_SIDED_SLACK),
            min_modulus: moduli.iter().copied().fold(f64::INFINITY, f64::min),
            outlier_counts,
            eigenvalues,
            singular_values: None,
        }
    }

    /// `#{|λ − 1| > ε}` for one of the recorded `ε`.
    pub fn outliers(&self, eps: f64) -> Option<usize> {
        self.outlier_counts
            .iter()
            .find(|(e, _)| *e == eps)
            .map(|(_, c)| *c)
    }

    /// Eigenvalues sorted by modulus, then argument.
    pub fn sorted_eigenvalues(&self) -> Vec<Complex> {
        let mut v = self.eigenvalues.clone();
        sort_by_modulus(&mut v);
        v
    }
}

pub fn sort_by_modulus(v: &mut [Complex]) {
    v.sort_by(|a, b| {
        a.modulus()
            .partial_cmp(&b.modulus())
            .unwrap_or(CmpOrdering::Equal)
            .then(a.re.partial_cmp(&b.re).unwrap_or(CmpOrdering::Equal))
            .then(a.im.partial_cmp(&b.im).unwrap_or(CmpOrdering::Equal))
    });
}

/// Every eigenvalue with nonzero imaginary part has its conjugate in the
/// list, matched within `tol`.
pub fn conjugate_pairs_ok(eigs: &[Complex], tol: f64) -> bool {
    let mut used = alloc::vec![false; eigs.len()];
    for (i, e) in eigs.iter().enumerate() {
        if used[i] || e.im == 0.0 {
            continue;
        }
        let c = e.conj();
        let partner = (0..eigs.len())
            .filter(|&j| j != i && !used[j])
            .min_by(|&a, &b| {
                eigs[a]
                    .distance(&c)
                    .partial_cmp(&eigs[b].distance(&c))
                    .unwrap_or(CmpOrdering::Equal)
            });
        match partner {
            Some(j) if eigs[j].distance(&c) <= tol => {
                used[i] = true;
                used[j] = true;
            }
            _ => return false,
        }
    }
    true
}

/// Spectrum of `A` with clustering diagnostics.
pub fn compute_spectrum<T: Transfer>(
    p: &RtProblem<T>,
    opts: &SpectrumOptions,
) -> Result<SpectrumReport> {
    let n = p.n();
    Error::check_cap(n, opts.dense_cap)?;
    let rank = p.scattering().local_factor().rank() * p.layout().n_space;
    let method = match opts.method {
        SpectrumMethod::Auto if rank < n && !opts.singular_values => SpectrumMethod::LowRank,
        SpectrumMethod::Auto => SpectrumMethod::Dense,
        m => m,
    };
    let (eigs, sv) = match method {
        SpectrumMethod::LowRank => (low_rank_eigenvalues(p, opts.dense_cap)?, None),
        _ => {
            let a = materialize_a(p, opts.dense_cap)?;
            let sv = opts.singular_values.then(|| singular_values(&a));
            (eigenvalues(&a)?, sv)
        }
    };
    let mut rep = SpectrumReport::from_eigenvalues(p.descriptor, method, eigs, &opts.epsilons);
    rep.singular_values = sv;
    Ok(rep)
}

/// The `r × r` matrix `Vᵀ Λ U` of the factorization `Σ = U Vᵀ`. Columns
/// and rows are indexed by `(space node, local column)`.
pub fn reduced_matrix<T: Transfer>(p: &RtProblem<T>) -> DenseMatrix {
    let layout = p.layout();
    let (ns, nr) = (layout.n_space, layout.n_rays);
    let f = p.scattering().local_factor();
    let gamma = p.scattering().gamma();
    let rl = f.rank();
    let r = ns * rl;
    let n = layout.len();
    let mut m = DenseMatrix::zeros(r, r);
    let mut col = alloc::vec![0.0; n];
    let mut out = alloc::vec![0.0; n];
    for i in 0..ns {
        for c in 0..rl {
            col.iter_mut().for_each(|v| *v = 0.0);
            let mut any = false;
            for k in 0..nr {
                let v = gamma[i * nr + k] * f.u[(k, c)];
                col[i * nr + k] = v;
                any |= v != 0.0;
            }
            if !any {
                continue;
            }
            p.transfer().apply_space_major(&col, &mut out);
            let j = i * rl + c;
            for ip in 0..ns {
                let y = &out[ip * nr..(ip + 1) * nr];
                for cp in 0..rl {
                    let mut s = 0.0;
                    for (k, yk) in y.iter().enumerate() {
                        s += f.v[(k, cp)] * yk;
                    }
                    m[(ip * rl + cp, j)] = s;
                }
            }
        }
    }
    m
}

/// Connected components of the sparsity graph of a square matrix.
fn components(m: &DenseMatrix) -> Vec<Vec<usize>> {
    let n = m.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = alloc::vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// Eigenvalues of `A` through the reduced matrix.
pub fn low_rank_eigenvalues<T: Transfer>(p: &RtProblem<T>, cap: usize) -> Result<Vec<Complex>> {
    let n = p.n();
    let m = reduced_matrix(p);
    let r = m.rows();
    if r > n {
        return Err(Error::invalid(
            "scattering rank exceeds the problem size; use the dense route",
        ));
    }
    let mut eigs = Vec::with_capacity(n);
    for group in components(&m) {
        Error::check_cap(group.len(), cap)?;
        let block = m.select(&group);
        for mu in eigenvalues(&block)? {
            eigs.push(mu.one_minus());
        }
    }
    eigs.resize(n, Complex::ONE);
    Ok(eigs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSummary {
    pub kernel: KernelKind,
    pub sizes: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// `counts[j][e]`: outliers of report `j` at `epsilons[e]`.
    pub counts: Vec<Vec<usize>>,
    pub cluster_fractions: Vec<f64>,
    /// Along the sequence no outlier count exceeds an earlier one by more
    /// than [`TREND_TOLERANCE`].
    pub strong_cluster_consistent: bool,
}

/// Allowed growth of outlier counts along a refinement sequence.
pub const TREND_TOLERANCE: usize = 2;

/// Outlier counts across reports ordered by refinement.
pub fn clustering_trend(reports: &[SpectrumReport]) -> Result<TrendSummary> {
    if reports.len() < 2 {
        return Err(Error::invalid("a trend needs at least two reports"));
    }
    let kernel = reports[0].descriptor.kernel;
    if reports.iter().any(|r| r.descriptor.kernel != kernel) {
        return Err(Error::invalid("reports mix kernel kinds"));
    }
    let epsilons: Vec<f64> = reports[0].outlier_counts.iter().map(|(e, _)| *e).collect();
    let mut counts = Vec::with_capacity(reports.len());
    for r in reports {
        let row: Option<Vec<usize>> = epsilons.iter().map(|&e| r.outliers(e)).collect();
        counts.push(row.ok_or_else(|| Error::invalid("reports use different ε lists"))?);
    }
    let mut consistent = true;
    for e in 0..epsilons.len() {
        let mut lowest = counts[0][e];
        for row in &counts[1..] {
            if row[e] > lowest + TREND_TOLERANCE {
                consistent = false;
            }
            lowest = lowest.min(row[e]);
        }
    }
    Ok(TrendSummary {
        kernel,
        sizes: reports.iter().map(|r| r.n).collect(),
        epsilons,
        counts,
        cluster_fractions: reports.iter().map(|r| r.cluster_fraction_one_sided).collect(),
        strong_cluster_consistent: consistent,
    })
}
