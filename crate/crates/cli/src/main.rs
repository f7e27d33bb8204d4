//! `slosh`: solve, verify and sweep axisymmetric sloshing eigenproblems.

mod commands;
mod config;
mod error;
mod svg;

use clap::{Args, Parser, Subcommand};
use commands::Axis;
use config::ConfigFile;
use error::{CliError, CliResult};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "slosh",
    version,
    about = "Axisymmetric sloshing eigenvalue laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue table and field dumps for the requested modes.
    Solve(Common),
    /// Run named checks and write a JSON report; exit 1 if any fails.
    Verify(Common),
    /// Tabulate eigenvalues along a parameter axis.
    Sweep(SweepArgs),
    /// Write the mesh as node, triangle and boundary-edge tables.
    MeshDump(Common),
    /// Print closed-form reference values for a domain.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// Domain spec, e.g. `cylinder:h=1`, `troesch:lambda=1`, `profile:file=p.csv`.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// `uniform`, `graded` or `graded:<corner ratio>`.
    #[arg(long)]
    grading: Option<String>,
    /// Azimuthal modes, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u32>>,
    /// Eigenpairs per mode.
    #[arg(long)]
    k: Option<usize>,
    /// Checks for `verify`, comma separated.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write SVG pictures.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// `h` (cylinder depth), `lambda` (Troesch family) or `s` (deformation of --domain).
    #[arg(long)]
    axis: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
}

impl Common {
    fn file_config(&self) -> CliResult<ConfigFile> {
        let flags = ConfigFile {
            domain: self.domain.clone(),
            nr: self.nr,
            ny: self.ny,
            grading: self.grading.clone(),
            m: self.m.clone(),
            k: self.k,
            checks: self.checks.clone(),
            out: self.out.clone(),
            svg: self.svg.then_some(true),
            ..Default::default()
        };
        let base = match &self.config {
            Some(path) => config::load(path)?,
            None => ConfigFile::default(),
        };
        Ok(base.merged(flags))
    }
}

const DEFAULT_DOMAIN: &str = "hemisphere";

fn set_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("SLOSH_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Invalid(format!(
                "SLOSH_THREADS must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    set_threads()?;
    match cli.command {
        Command::Solve(c) => {
            let cfg = c.file_config()?.resolve(DEFAULT_DOMAIN, &[0, 1, 2], &[])?;
            commands::cmd_solve(&cfg)
        }
        Command::Verify(c) => {
            let cfg =
                c.file_config()?
                    .resolve(DEFAULT_DOMAIN, &[1], &["ordering", "monotonicity"])?;
            commands::cmd_verify(&cfg)
        }
        Command::Sweep(s) => {
            let file = s.common.file_config()?;
            let over = ConfigFile {
                axis: s.axis.clone(),
                values: s.values.clone(),
                ..Default::default()
            };
            let file = file.merged(over);
            let axis: Axis = file
                .axis
                .as_deref()
                .ok_or_else(|| CliError::Invalid("sweep needs --axis".into()))?
                .parse()?;
            let values = file.values.clone().unwrap_or_default();
            let cfg = file.resolve("troesch:lambda=1", &[1], &[])?;
            commands::cmd_sweep(&cfg, axis, &values)
        }
        Command::MeshDump(c) => {
            let cfg = c.file_config()?.resolve(DEFAULT_DOMAIN, &[1], &[])?;
            commands::cmd_mesh_dump(&cfg)
        }
        Command::Oracle(c) => {
            let file = c.file_config()?;
            let write = file.out.is_some();
            let cfg = file.resolve(DEFAULT_DOMAIN, &[1], &[])?;
            commands::cmd_oracle(&cfg, write)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slosh: {e}");
            e.exit_code()
        }
    }
}
