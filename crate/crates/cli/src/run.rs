//! The four run modes.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dort_core::spectrum::SpectrumOptions;
use dort_core::{Error, Method, ProblemDescriptor, SolveReport, SpectrumReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::format::{g17, write_json, Table};
use crate::problem::{build, ladder_cells, single_cell, table_cells, Cell, Problem};
use crate::{CliError, SCHEMA_VERSION};

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    match cfg.mode {
        Mode::Solve => run_solve(cfg),
        Mode::Spectrum => run_spectrum(cfg),
        Mode::Table => with_pool(cfg, || run_table(cfg))?,
        Mode::Convergence => with_pool(cfg, || run_convergence(cfg))?,
    }
}

fn with_pool<R: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Serialize)]
struct ProblemInfo {
    kernel: &'static str,
    n_space: usize,
    n_omega: usize,
    n_nu: usize,
    n: usize,
    cell: Cell,
}

impl ProblemInfo {
    fn new(d: ProblemDescriptor, cell: Cell) -> Self {
        ProblemInfo {
            kernel: d.kernel.as_str(),
            n_space: d.n_space,
            n_omega: d.n_omega,
            n_nu: d.n_nu,
            n: d.n_space * d.n_omega * d.n_nu,
            cell,
        }
    }
}

#[derive(Serialize)]
struct SolverInfo {
    method: &'static str,
    iterations: usize,
    converged: bool,
    breakdown: bool,
    true_residual: f64,
    residual_history: Vec<f64>,
}

impl From<&SolveReport> for SolverInfo {
    fn from(r: &SolveReport) -> Self {
        SolverInfo {
            method: r.method.as_str(),
            iterations: r.iterations,
            converged: r.converged,
            breakdown: r.breakdown,
            true_residual: r.true_residual,
            residual_history: r.residual_history.clone(),
        }
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    schema_version: u32,
    kind: &'static str,
    config: &'a ExperimentConfig,
    problem: ProblemInfo,
    solver: SolverInfo,
    files: Vec<PathBuf>,
}

fn file_name(p: &Path) -> PathBuf {
    PathBuf::from(p.file_name().unwrap())
}

fn run_solve(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let cell = single_cell(cfg)?;
    let problem = build(cfg.preset, cell, cfg)?;
    let method = cfg.solver.unwrap_or(Method::Gmres);
    let report = problem.solve(&cfg.solve_config(method))?;
    let mut files = vec![cfg.out.join("solution.csv")];
    write_solution(&problem, &report.solution, &files[0])?;
    if let Problem::TwoD { problem: p, .. } = &problem {
        let path = cfg.out.join("rays.csv");
        let mut t = Table::create(&path, &["ray", "line", "x", "y"])?;
        for (k, rt) in p.transfer().rays.iter().enumerate() {
            for (l, line) in rt.family.lines.iter().enumerate() {
                for node in &line.nodes {
                    t.row([k.to_string(), l.to_string(), g17(node[0]), g17(node[1])])?;
                }
            }
        }
        t.finish()?;
        files.push(path);
    }
    let out = SolveOutput {
        schema_version: SCHEMA_VERSION,
        kind: "solve",
        config: cfg,
        problem: ProblemInfo::new(problem.descriptor(), cell),
        solver: (&report).into(),
        files: files.iter().map(|p| file_name(p)).collect(),
    };
    write_json(&cfg.out.join("solve_report.json"), &out)?;
    if report.converged {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} stopped after {} iterations at relative residual {:.3e}",
            method.as_str(),
            report.iterations,
            report.true_residual
        )))
    }
}

fn write_solution(problem: &Problem, x: &[f64], path: &Path) -> Result<(), CliError> {
    match problem {
        Problem::OneD { grid, .. } => {
            let mut t = Table::create(path, &["t", "mu", "nu", "I"])?;
            let nr = grid.rays.len();
            for (i, &tn) in grid.t_nodes.iter().enumerate() {
                for (k, r) in grid.rays.iter().enumerate() {
                    t.row([g17(tn), g17(r.mu), g17(r.nu), g17(x[i * nr + k])])?;
                }
            }
            t.finish()
        }
        Problem::TwoD { grid, .. } => {
            let mut t = Table::create(path, &["x", "t", "mu", "chi", "I"])?;
            let nr = grid.rays.len();
            let n_az = grid.spec.n_az;
            for i in 0..grid.cartesian.len() {
                let p = grid.cartesian.node(i);
                for (k, r) in grid.rays.iter().enumerate() {
                    let chi = 2.0 * PI * (k % n_az) as f64 / n_az as f64;
                    t.row([g17(p[0]), g17(p[1]), g17(r.mu), g17(chi), g17(x[i * nr + k])])?;
                }
            }
            t.finish()
        }
    }
}

#[derive(Serialize)]
struct Outliers {
    eps: f64,
    count: usize,
}

#[derive(Serialize)]
struct SpectrumStats {
    method: &'static str,
    /// `|λ| ∈ [0.999, 1]`.
    #[serde(rename = "cluster_fraction_paper_interval")]
    cluster_fraction_one_sided: f64,
    cluster_fraction_symmetric: f64,
    min_modulus: f64,
    outliers: Vec<Outliers>,
}

impl From<&SpectrumReport> for SpectrumStats {
    fn from(r: &SpectrumReport) -> Self {
        use dort_core::spectrum::SpectrumMethod as M;
        SpectrumStats {
            method: match r.method {
                M::Auto => "auto",
                M::Dense => "dense",
                M::LowRank => "low-rank",
            },
            cluster_fraction_one_sided: r.cluster_fraction_one_sided,
            cluster_fraction_symmetric: r.cluster_fraction,
            min_modulus: r.min_modulus,
            outliers: r
                .outlier_counts
                .iter()
                .map(|&(eps, count)| Outliers { eps, count })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct SpectrumOutput<'a> {
    schema_version: u32,
    kind: &'static str,
    config: &'a ExperimentConfig,
    problem: ProblemInfo,
    spectrum: SpectrumStats,
    files: Vec<PathBuf>,
}

/// Spectrum of one cell; eigensolver failures dump the matrix.
fn cell_spectrum(
    problem: &Problem,
    cell: Cell,
    cfg: &ExperimentConfig,
) -> Result<SpectrumReport, CliError> {
    let opts = SpectrumOptions {
        dense_cap: cfg.dense_cap,
        ..Default::default()
    };
    match problem.spectrum(&opts) {
        Ok(r) => Ok(r),
        Err(e @ Error::EigenNoConvergence { .. }) => {
            let path = cfg.out.join(format!("failed_matrix_{}.csv", cell.label()));
            let dumped = problem
                .matrix(cfg.dense_cap)
                .map_err(|e| CliError::Config(e.to_string()))
                .and_then(|a| {
                    let mut t = Table::create(&path, &["row", "col", "value"])?;
                    for i in 0..a.rows() {
                        for (j, v) in a.row(i).iter().enumerate() {
                            if *v != 0.0 {
                                t.row([i.to_string(), j.to_string(), g17(*v)])?;
                            }
                        }
                    }
                    t.finish()
                });
            let note = match dumped {
                Ok(()) => format!("matrix written to {}", path.display()),
                Err(d) => format!("matrix dump failed: {d}"),
            };
            Err(CliError::Numerical(format!("{} ({}): {e}; {note}", cell.label(), cell.n())))
        }
        Err(e) => Err(CliError::Config(e.to_string())),
    }
}

fn over_cap(cell: Cell, cfg: &ExperimentConfig) -> Option<String> {
    (cell.n() > cfg.dense_cap).then(|| {
        format!(
            "{}: N = {} exceeds the dense cap {}",
            cell.label(),
            cell.n(),
            cfg.dense_cap
        )
    })
}

fn run_spectrum(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let cell = single_cell(cfg)?;
    if let Some(msg) = over_cap(cell, cfg) {
        return Err(CliError::Config(msg));
    }
    let problem = build(cfg.preset, cell, cfg)?;
    let report = cell_spectrum(&problem, cell, cfg)?;
    let path = cfg.out.join("eigenvalues.csv");
    let mut t = Table::create(&path, &["re", "im", "modulus"])?;
    for e in report.sorted_eigenvalues() {
        t.row([g17(e.re), g17(e.im), g17(e.modulus())])?;
    }
    t.finish()?;
    let out = SpectrumOutput {
        schema_version: SCHEMA_VERSION,
        kind: "spectrum",
        config: cfg,
        problem: ProblemInfo::new(problem.descriptor(), cell),
        spectrum: (&report).into(),
        files: vec![file_name(&path)],
    };
    write_json(&cfg.out.join("spectrum_report.json"), &out)
}

#[derive(Serialize)]
struct TableRow {
    cell: Cell,
    n: usize,
    #[serde(flatten)]
    stats: SpectrumStats,
}

#[derive(Serialize)]
struct TableOutput<'a> {
    schema_version: u32,
    kind: &'static str,
    config: &'a ExperimentConfig,
    rows: Vec<TableRow>,
    skipped: Vec<String>,
    failed: Vec<String>,
    files: Vec<PathBuf>,
}

enum CellOutcome {
    Row(TableRow),
    Skipped(String),
    Failed(String),
}

fn run_table(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let cells = table_cells(cfg);
    let outcomes: Vec<Result<CellOutcome, CliError>> = cells
        .par_iter()
        .map(|&cell| {
            if let Some(msg) = over_cap(cell, cfg) {
                return Ok(CellOutcome::Skipped(msg));
            }
            let problem = build(cfg.preset, cell, cfg)?;
            match cell_spectrum(&problem, cell, cfg) {
                Ok(r) => Ok(CellOutcome::Row(TableRow {
                    cell,
                    n: r.n,
                    stats: (&r).into(),
                })),
                Err(CliError::Numerical(m)) => Ok(CellOutcome::Failed(m)),
                Err(e) => Err(e),
            }
        })
        .collect();

    let path = cfg.out.join("table.csv");
    let mut t = Table::create(
        &path,
        &[
            "N_s",
            "N_Omega",
            "N_nu",
            "N",
            "cluster_fraction_paper_interval",
            "cluster_fraction_symmetric",
            "min_modulus",
        ],
    )?;
    let (mut rows, mut skipped, mut failed) = (Vec::new(), Vec::new(), Vec::new());
    for o in outcomes {
        match o? {
            CellOutcome::Row(r) => {
                t.row([
                    r.cell.ns.to_string(),
                    r.cell.nomega.to_string(),
                    r.cell.nnu.to_string(),
                    r.n.to_string(),
                    g17(r.stats.cluster_fraction_one_sided),
                    g17(r.stats.cluster_fraction_symmetric),
                    g17(r.stats.min_modulus),
                ])?;
                rows.push(r);
            }
            CellOutcome::Skipped(m) => {
                eprintln!("warning: skipped {m}");
                skipped.push(m);
            }
            CellOutcome::Failed(m) => {
                eprintln!("error: {m}");
                failed.push(m);
            }
        }
    }
    t.finish()?;
    let n_failed = failed.len();
    let out = TableOutput {
        schema_version: SCHEMA_VERSION,
        kind: "table",
        config: cfg,
        rows,
        skipped,
        failed,
        files: vec![file_name(&path)],
    };
    write_json(&cfg.out.join("table_report.json"), &out)?;
    if n_failed > 0 {
        return Err(CliError::Numerical(format!("{n_failed} cell(s) failed")));
    }
    Ok(())
}

#[derive(Serialize)]
struct LadderRun {
    size: String,
    cell: Cell,
    n: usize,
    #[serde(flatten)]
    solver: SolverInfo,
}

#[derive(Serialize)]
struct ConvergenceOutput<'a> {
    schema_version: u32,
    kind: &'static str,
    config: &'a ExperimentConfig,
    runs: Vec<LadderRun>,
    files: Vec<PathBuf>,
}

fn run_convergence(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let cells = ladder_cells(cfg)?;
    let methods = match cfg.solver {
        Some(m) => vec![m],
        None => vec![Method::Gmres, Method::BiCgStab],
    };
    let jobs: Vec<(Cell, Method)> = cells
        .iter()
        .flat_map(|&c| methods.iter().map(move |&m| (c, m)))
        .collect();
    let runs: Vec<Result<LadderRun, CliError>> = jobs
        .par_iter()
        .map(|&(cell, method)| {
            let problem = build(cfg.preset, cell, cfg)?;
            let r = problem.solve(&cfg.solve_config(method))?;
            Ok(LadderRun {
                size: cell.label(),
                cell,
                n: problem.n(),
                solver: (&r).into(),
            })
        })
        .collect();
    let runs: Vec<LadderRun> = runs.into_iter().collect::<Result<_, _>>()?;

    let path = cfg.out.join("convergence.csv");
    let mut t = Table::create(
        &path,
        &["size", "N", "method", "iteration", "relative_residual", "converged"],
    )?;
    for run in &runs {
        for (i, r) in run.solver.residual_history.iter().enumerate() {
            t.row([
                run.size.clone(),
                run.n.to_string(),
                run.solver.method.to_string(),
                (i + 1).to_string(),
                g17(*r),
                run.solver.converged.to_string(),
            ])?;
        }
    }
    t.finish()?;
    let stalled: Vec<String> = runs
        .iter()
        .filter(|r| !r.solver.converged)
        .map(|r| format!("{} {}", r.size, r.solver.method))
        .collect();
    let out = ConvergenceOutput {
        schema_version: SCHEMA_VERSION,
        kind: "convergence",
        config: cfg,
        runs,
        files: vec![file_name(&path)],
    };
    write_json(&cfg.out.join("convergence_report.json"), &out)?;
    if stalled.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("not converged: {}", stalled.join(", "))))
    }
}
