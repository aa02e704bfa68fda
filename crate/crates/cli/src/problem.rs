//! Parameter cells and the problems built from them.

use dort_core::grid::{build_grid, Grid, GridSpec};
use dort_core::multidim::{build_grid_2d, Grid2d, Grid2dSpec, Transfer2D};
use dort_core::operator::materialize_a;
use dort_core::spectrum::{compute_spectrum, SpectrumOptions};
use dort_core::{presets, Preset, RhsMode, RtProblem, SolveConfig, SolveReport, SpectrumReport};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// One point of the parameter space. For 2D presets `ns` is `nx · ny`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub ns: usize,
    pub nomega: usize,
    pub nnu: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
}

impl Cell {
    pub fn one_d(ns: usize, nomega: usize, nnu: usize) -> Self {
        Cell {
            ns,
            nomega,
            nnu,
            nx: None,
            ny: None,
        }
    }

    pub fn two_d(nx: usize, ny: usize, nomega: usize) -> Self {
        Cell {
            ns: nx * ny,
            nomega,
            nnu: 1,
            nx: Some(nx),
            ny: Some(ny),
        }
    }

    pub fn n(&self) -> usize {
        self.ns * self.nomega * self.nnu
    }

    /// `N_s x N_Ω x N_ν`, or `N_x x N_y x N_Ω` in 2D.
    pub fn label(&self) -> String {
        match (self.nx, self.ny) {
            (Some(x), Some(y)) => format!("{x}x{y}x{}", self.nomega),
            _ => format!("{}x{}x{}", self.ns, self.nomega, self.nnu),
        }
    }
}

/// Cartesian product, first list outermost.
pub fn table_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    if cfg.preset.is_2d() {
        for &x in &cfg.nx {
            for &y in &cfg.ny {
                for &o in &cfg.nomega {
                    out.push(Cell::two_d(x, y, o));
                }
            }
        }
    } else {
        for &s in &cfg.ns {
            for &o in &cfg.nomega {
                for &f in &cfg.nnu {
                    out.push(Cell::one_d(s, o, f));
                }
            }
        }
    }
    out
}

/// Lists zipped position by position; single values are broadcast.
pub fn ladder_cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>, CliError> {
    let lists: Vec<(&str, &Vec<usize>)> = if cfg.preset.is_2d() {
        vec![("nx", &cfg.nx), ("ny", &cfg.ny), ("nomega", &cfg.nomega)]
    } else {
        vec![("ns", &cfg.ns), ("nomega", &cfg.nomega), ("nnu", &cfg.nnu)]
    };
    let len = lists.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for (name, v) in &lists {
        if v.len() != 1 && v.len() != len {
            return Err(CliError::Config(format!(
                "ladder lists must have equal lengths or a single value; {name} has {}",
                v.len()
            )));
        }
    }
    let at = |v: &Vec<usize>, i: usize| if v.len() == 1 { v[0] } else { v[i] };
    Ok((0..len)
        .map(|i| {
            if cfg.preset.is_2d() {
                Cell::two_d(at(&cfg.nx, i), at(&cfg.ny, i), at(&cfg.nomega, i))
            } else {
                Cell::one_d(at(&cfg.ns, i), at(&cfg.nomega, i), at(&cfg.nnu, i))
            }
        })
        .collect())
}

/// The single cell of a solve or spectrum run.
pub fn single_cell(cfg: &ExperimentConfig) -> Result<Cell, CliError> {
    let cells = table_cells(cfg);
    match cells.as_slice() {
        [c] => Ok(*c),
        _ => Err(CliError::Config(format!(
            "this mode takes one parameter combination, got {}",
            cells.len()
        ))),
    }
}

pub enum Problem {
    OneD { problem: RtProblem, grid: Grid },
    TwoD { problem: RtProblem<Transfer2D>, grid: Grid2d },
}

fn core_err(e: dort_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn build(preset: Preset, cell: Cell, cfg: &ExperimentConfig) -> Result<Problem, CliError> {
    let rhs = if cfg.rhs_one { RhsMode::Ones } else { RhsMode::Physical };
    let scale = cfg.gamma_scale;
    let one_d = |problem: RtProblem, spec: GridSpec| -> Result<Problem, CliError> {
        let grid = build_grid(&spec).map_err(core_err)?;
        let problem = if scale == 1.0 { problem } else { problem.with_scaled_gamma(scale) };
        Ok(Problem::OneD { problem, grid })
    };
    let (s, o, f) = (cell.ns, cell.nomega, cell.nnu);
    match preset {
        Preset::Mono => one_d(
            presets::mono(s, o, rhs).map_err(core_err)?,
            GridSpec::monochromatic(s, o),
        ),
        Preset::Coherent => one_d(
            presets::coherent(s, o, f, rhs).map_err(core_err)?,
            GridSpec::lorentzian_line(s, o, f),
        ),
        Preset::Crd => one_d(
            presets::crd(s, o, f, rhs).map_err(core_err)?,
            GridSpec::lorentzian_line(s, o, f),
        ),
        Preset::Aniso2d => {
            let (nx, ny) = (cell.nx.unwrap(), cell.ny.unwrap());
            let problem = presets::aniso2d(nx, ny, o / 2, rhs).map_err(core_err)?;
            let problem = if scale == 1.0 { problem } else { problem.with_scaled_gamma(scale) };
            let grid = build_grid_2d(&Grid2dSpec::new(nx, ny, o / 2, 2)).map_err(core_err)?;
            Ok(Problem::TwoD { problem, grid })
        }
    }
}

impl Problem {
    pub fn n(&self) -> usize {
        match self {
            Problem::OneD { problem, .. } => problem.n(),
            Problem::TwoD { problem, .. } => problem.n(),
        }
    }

    pub fn solve(&self, cfg: &SolveConfig) -> Result<SolveReport, CliError> {
        let r = match self {
            Problem::OneD { problem, .. } => dort_core::krylov::solve(problem, problem.rhs(), cfg),
            Problem::TwoD { problem, .. } => dort_core::krylov::solve(problem, problem.rhs(), cfg),
        };
        r.map_err(core_err)
    }

    pub fn spectrum(&self, opts: &SpectrumOptions) -> dort_core::Result<SpectrumReport> {
        match self {
            Problem::OneD { problem, .. } => compute_spectrum(problem, opts),
            Problem::TwoD { problem, .. } => compute_spectrum(problem, opts),
        }
    }

    pub fn matrix(&self, cap: usize) -> dort_core::Result<dort_core::dense::DenseMatrix> {
        match self {
            Problem::OneD { problem, .. } => materialize_a(problem, cap),
            Problem::TwoD { problem, .. } => materialize_a(problem, cap),
        }
    }

    pub fn descriptor(&self) -> dort_core::ProblemDescriptor {
        match self {
            Problem::OneD { problem, .. } => problem.descriptor,
            Problem::TwoD { problem, .. } => problem.descriptor,
        }
    }
}
