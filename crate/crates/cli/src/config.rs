//! Command line, config file and the merged experiment configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dort_core::{Method, Preset, DEFAULT_DENSE_CAP};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "dort", version, about = "Discrete-ordinates radiative transfer experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write the intensity field.
    Solve(Flags),
    /// Eigenvalues of one problem matrix.
    Spectrum(Flags),
    /// Cluster statistics over every parameter combination.
    Table(Flags),
    /// Residual histories along a refinement ladder.
    Convergence(Flags),
}

impl Command {
    pub fn split(self) -> (Mode, Flags) {
        match self {
            Command::Solve(f) => (Mode::Solve, f),
            Command::Spectrum(f) => (Mode::Spectrum, f),
            Command::Table(f) => (Mode::Table, f),
            Command::Convergence(f) => (Mode::Convergence, f),
        }
    }
}

/// Flags shared by every subcommand. List-valued sizes take comma
/// separated values.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// mono, coherent, crd or aniso2d.
    #[arg(long)]
    pub preset: Option<String>,
    /// Spatial nodes (1D).
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Angular nodes; in 2D, inclinations times two azimuths.
    #[arg(long, value_delimiter = ',')]
    pub nomega: Option<Vec<usize>>,
    /// Frequency nodes (line presets).
    #[arg(long, value_delimiter = ',')]
    pub nnu: Option<Vec<usize>>,
    /// Cartesian nodes along x (2D).
    #[arg(long, value_delimiter = ',')]
    pub nx: Option<Vec<usize>>,
    /// Cartesian nodes along t (2D).
    #[arg(long, value_delimiter = ',')]
    pub ny: Option<Vec<usize>>,
    /// gmres or bicgstab. The convergence ladder runs both when unset.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// GMRES restart length.
    #[arg(long)]
    pub restart: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Replace the right-hand side by the all-ones vector.
    #[arg(long)]
    pub rhs_one: bool,
    /// Multiply every scattering coefficient by this factor.
    #[arg(long)]
    pub gamma_scale: Option<f64>,
    /// Largest N for dense materialization.
    #[arg(long)]
    pub dense_cap: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for table and convergence runs.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Spectrum,
    Table,
    Convergence,
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl From<OneOrMany> for Vec<usize> {
    fn from(v: OneOrMany) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    preset: Option<String>,
    ns: Option<OneOrMany>,
    nomega: Option<OneOrMany>,
    nnu: Option<OneOrMany>,
    nx: Option<OneOrMany>,
    ny: Option<OneOrMany>,
    solver: Option<String>,
    tol: Option<f64>,
    restart: Option<usize>,
    max_iter: Option<usize>,
    rhs_one: Option<bool>,
    gamma_scale: Option<f64>,
    dense_cap: Option<usize>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(serialize_with = "ser_preset")]
    pub preset: Preset,
    pub ns: Vec<usize>,
    pub nomega: Vec<usize>,
    pub nnu: Vec<usize>,
    pub nx: Vec<usize>,
    pub ny: Vec<usize>,
    #[serde(serialize_with = "ser_method")]
    pub solver: Option<Method>,
    pub tol: f64,
    pub restart: Option<usize>,
    pub max_iter: usize,
    pub rhs_one: bool,
    pub gamma_scale: f64,
    pub dense_cap: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

fn ser_preset<S: serde::Serializer>(p: &Preset, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(p.as_str())
}

fn ser_method<S: serde::Serializer>(m: &Option<Method>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => s.serialize_str(m.as_str()),
        None => s.serialize_none(),
    }
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    match s {
        "gmres" => Ok(Method::Gmres),
        "bicgstab" => Ok(Method::BiCgStab),
        _ => Err(CliError::Config(format!("unknown solver {s:?} (gmres, bicgstab)"))),
    }
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Merge flags over the config file over the preset defaults and
    /// validate.
    pub fn resolve(mode: Mode, flags: Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let list = |flag: Option<Vec<usize>>, file: Option<OneOrMany>| {
            flag.or_else(|| file.map(Vec::from))
        };
        let preset_name = flags.preset.or(file.preset).unwrap_or_else(|| "mono".into());
        let preset = Preset::parse(&preset_name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset {preset_name:?} (mono, coherent, crd, aniso2d)"
            ))
        })?;
        let ns = list(flags.ns, file.ns);
        let nomega = list(flags.nomega, file.nomega);
        let nnu = list(flags.nnu, file.nnu);
        let nx = list(flags.nx, file.nx);
        let ny = list(flags.ny, file.ny);
        let solver = match flags.solver.or(file.solver) {
            Some(s) => Some(parse_method(&s)?),
            None if mode == Mode::Convergence => None,
            None => Some(Method::Gmres),
        };

        let is_line = matches!(preset, Preset::Coherent | Preset::Crd);
        let mut misplaced = Vec::new();
        if preset.is_2d() {
            if ns.is_some() {
                misplaced.push("ns");
            }
        } else {
            if nx.is_some() {
                misplaced.push("nx");
            }
            if ny.is_some() {
                misplaced.push("ny");
            }
        }
        if !is_line && nnu.as_ref().is_some_and(|v| v.iter().any(|&n| n != 1)) {
            misplaced.push("nnu");
        }
        if !misplaced.is_empty() {
            return Err(CliError::Config(format!(
                "preset {} does not take {}",
                preset.as_str(),
                misplaced.join(", ")
            )));
        }

        let cfg = ExperimentConfig {
            mode,
            preset,
            ns: if preset.is_2d() { vec![] } else { ns.unwrap_or_else(|| vec![10]) },
            nomega: nomega.unwrap_or_else(|| vec![if preset.is_2d() { 8 } else { 12 }]),
            nnu: if is_line { nnu.unwrap_or_else(|| vec![10]) } else { vec![1] },
            nx: if preset.is_2d() { nx.unwrap_or_else(|| vec![8]) } else { vec![] },
            ny: if preset.is_2d() { ny.unwrap_or_else(|| vec![8]) } else { vec![] },
            solver,
            tol: flags.tol.or(file.tol).unwrap_or(1e-12),
            restart: flags.restart.or(file.restart),
            max_iter: flags.max_iter.or(file.max_iter).unwrap_or(500),
            rhs_one: flags.rhs_one || file.rhs_one.unwrap_or(false),
            gamma_scale: flags.gamma_scale.or(file.gamma_scale).unwrap_or(1.0),
            dense_cap: flags.dense_cap.or(file.dense_cap).unwrap_or(DEFAULT_DENSE_CAP),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            threads: flags.threads.or(file.threads),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        for (name, v) in [
            ("ns", &self.ns),
            ("nomega", &self.nomega),
            ("nnu", &self.nnu),
            ("nx", &self.nx),
            ("ny", &self.ny),
        ] {
            if v.iter().any(|&x| x == 0) {
                return bad(format!("{name} values must be positive"));
            }
        }
        if self.nomega.iter().any(|&n| n % 2 != 0) {
            return bad("nomega must be even".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max-iter must be at least 1".into());
        }
        if self.restart == Some(0) {
            return bad("restart must be at least 1".into());
        }
        if !(self.gamma_scale.is_finite() && self.gamma_scale >= 0.0) {
            return bad("gamma-scale must be finite and non-negative".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn solve_config(&self, method: Method) -> dort_core::SolveConfig {
        dort_core::SolveConfig {
            method,
            rel_tol: self.tol,
            max_iter: self.max_iter,
            restart: self.restart,
            reorthogonalize: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags::default()
    }

    #[test]
    fn defaults_per_preset() {
        let c = ExperimentConfig::resolve(Mode::Solve, flags()).unwrap();
        assert_eq!((c.ns.clone(), c.nomega.clone(), c.nnu.clone()), (vec![10], vec![12], vec![1]));
        assert_eq!(c.solver, Some(Method::Gmres));
        let f = Flags {
            preset: Some("aniso2d".into()),
            ..flags()
        };
        let c = ExperimentConfig::resolve(Mode::Convergence, f).unwrap();
        assert_eq!((c.nx.clone(), c.ny.clone(), c.nomega.clone()), (vec![8], vec![8], vec![8]));
        assert_eq!(c.solver, None);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "preset = \"coherent\"\nns = [10, 20]\nnnu = 5\ntol = 1e-8\n").unwrap();
        let f = Flags {
            ns: Some(vec![7]),
            config: Some(path),
            ..flags()
        };
        let c = ExperimentConfig::resolve(Mode::Table, f).unwrap();
        assert_eq!(c.preset, Preset::Coherent);
        assert_eq!(c.ns, vec![7]);
        assert_eq!(c.nnu, vec![5]);
        assert_eq!(c.tol, 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            Flags { preset: Some("nope".into()), ..flags() },
            Flags { nomega: Some(vec![5]), ..flags() },
            Flags { nnu: Some(vec![4]), ..flags() },
            Flags { nx: Some(vec![4]), ..flags() },
            Flags { solver: Some("cg".into()), ..flags() },
            Flags { tol: Some(0.0), ..flags() },
            Flags { ns: Some(vec![0]), ..flags() },
            Flags { threads: Some(0), ..flags() },
        ];
        for f in cases {
            let e = ExperimentConfig::resolve(Mode::Solve, f.clone()).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{f:?}");
        }
    }

    #[test]
    fn unknown_file_keys_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "presett = \"mono\"\n").unwrap();
        let f = Flags {
            config: Some(path),
            ..flags()
        };
        assert!(matches!(ExperimentConfig::resolve(Mode::Solve, f), Err(CliError::Config(_))));
    }
}
