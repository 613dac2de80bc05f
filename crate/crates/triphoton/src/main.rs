//! Command-line front end for the `triphoton` library.
//!
//! Thin by design: argument parsing and printing only. All simulation and
//! file-format logic lives in the library (`run` module), so everything the
//! binary can do is equally reachable from tests and examples.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numerical abort.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use triphoton::config::SimConfig;
use triphoton::run::{cmd_converge, cmd_evolve, cmd_validate, cmd_wigner, coupling_ratios};
use triphoton::{Error, Result};

#[derive(Parser)]
#[command(
    name = "triphoton",
    version,
    about = "Dissipative cavity-QED simulator for cascaded three-photon generation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config sources shared by the subcommands: an optional key-value file,
/// then any number of `--set key=value` overrides applied in order (later
/// wins).
#[derive(Args)]
struct ConfigArgs {
    /// Key-value config file (one `key = value` per line, `#` comments)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set kappa_mev=0.2`; repeatable
    #[arg(long, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_file(path)?,
            None => SimConfig::default(),
        };
        for assignment in &self.set {
            let (key, value) = assignment.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "--set expects KEY=VALUE, got '{assignment}'"
                ))
            })?;
            cfg.set(key.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the master equation and write observables, reduced-state
    /// snapshots, photon distributions and a run manifest
    Evolve {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (created if missing)
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Compute the Wigner function of a stored snapshot on a square
    /// phase-space grid
    Wigner {
        /// Snapshot file written by `evolve` (row col re im quadruples)
        snapshot: PathBuf,
        /// Half-width of the grid in both x and p
        #[arg(long, value_name = "X", default_value_t = 6.0)]
        grid_max: f64,
        /// Points per axis
        #[arg(long, value_name = "N", default_value_t = 201)]
        grid_n: u32,
        /// Output directory (created if missing)
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Run the built-in correctness checks (generator equivalence,
    /// step-size guard, frame independence); nonzero exit on any failure
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Rerun the configured evolution at raised truncations and halved
    /// step, reporting the change in the mode-1 photon distribution
    Converge {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { config, out } => {
            let cfg = config.resolve()?;
            for (name, value) in coupling_ratios(&cfg) {
                println!("ratio {name} = {value}");
            }
            let result = cmd_evolve(&cfg, &out)?;
            println!("run_id = {}", result.run_id);
            println!("dt = {} ({} steps)", result.dt, result.steps);
            for (tk, file) in &result.snapshot_files {
                println!("snapshot t*kappa = {tk}: {file}");
            }
            println!("wrote {} + manifest to {}", result.observables_file, out.display());
            Ok(())
        }
        Command::Wigner { snapshot, grid_max, grid_n, out } => {
            let (path, integral) = cmd_wigner(&snapshot, grid_max, grid_n, &out)?;
            println!("integral = {integral}");
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = config.resolve()?;
            let checks = cmd_validate(&cfg)?;
            let mut failed = 0usize;
            for check in &checks {
                println!("{}", check.line());
                if !check.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                Err(Error::Validation(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )))
            } else {
                Ok(())
            }
        }
        Command::Converge { config } => {
            let cfg = config.resolve()?;
            let rows = cmd_converge(&cfg)?;
            let mut flagged = 0usize;
            for row in &rows {
                println!("{}", row.line());
                if !row.converged {
                    flagged += 1;
                }
            }
            if flagged > 0 {
                println!("not converged: {flagged} of {} comparisons above 1e-6", rows.len());
            } else {
                println!("converged: all {} comparisons below 1e-6", rows.len());
            }
            Ok(())
        }
    }
}
