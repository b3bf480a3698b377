//! Command-line front end: `discflux <subcommand> --config <path> [--output-dir <path>]`.
//!
//! Exit codes: 0 success, 1 I/O error, 2 configuration or argument error
//! (a JSON object on stderr), 3 numerical failure (partial artifacts and a
//! failure manifest are kept), 4 failed criteria in `report`.

pub mod config;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::admissibility::{InterfaceShock, DEFAULT_N_XI};
use crate::error::{Error, Result};
use crate::flux::{presets, FluxPair};
pub use config::{FluxBlock, RunConfig};
pub use report::{report_bundle, Summary};
pub use run::{execute, Command, Manifest, Outcome};
use run::{EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "discflux", version, about = "Scalar conservation laws with a flux discontinuous at x = 0")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// One viscous (epsilon > 0) or finite-volume (epsilon = 0) run.
    Solve(RunArgs),
    /// Vanishing-viscosity sweep over `epsilons`.
    Sweep(RunArgs),
    /// Riemann run with interface traces and their admissibility.
    Riemann(RunArgs),
    /// L1 contraction between pairs of runs.
    Contract(RunArgs),
    /// Weak-form entropy residual.
    Residual(RunArgs),
    /// Admissibility of one stationary interface shock.
    Admissible {
        /// Preset name (flux-a, flux-b, flux-c) or a TOML file with a [flux] block.
        #[arg(long)]
        flux: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `u-,u+,p`
        #[arg(long, allow_hyphen_values = true)]
        shock: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// All stationary shocks on a state lattice, as CSV.
    Enumerate {
        #[arg(long)]
        flux: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_states: Option<usize>,
        #[arg(long)]
        n_xi: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Summarize the manifests under a directory.
    Report {
        #[arg(long)]
        output_dir: PathBuf,
    },
}

/// Preset name, or a TOML file holding either a `[flux]` table or a bare flux block.
pub fn resolve_flux(spec: &str) -> Result<FluxPair> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let value: toml::Table =
            toml::from_str(&text).map_err(|e| Error::config("--flux", format!("{}: {}", spec, e.message())))?;
        let block = match value.get("flux") {
            Some(inner) => inner.clone(),
            None => toml::Value::Table(value),
        };
        let block: FluxBlock = block
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("--flux", e.message().to_string()))?;
        return block.build();
    }
    presets::by_name(spec).ok_or_else(|| Error::config("--flux", format!("no preset or file named `{spec}`")))
}

pub fn parse_shock(flux: &FluxPair, text: &str) -> Result<InterfaceShock> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::argument(format!("--shock expects `u-,u+,p`, got `{text}`")));
    }
    let mut v = [0.0; 3];
    for (slot, s) in v.iter_mut().zip(&parts) {
        *slot = s
            .parse()
            .map_err(|_| Error::argument(format!("--shock: `{s}` is not a number")))?;
    }
    InterfaceShock::new(flux, v[0], v[1], v[2])
}

fn load_optional(config: &Option<PathBuf>) -> Result<Option<RunConfig>> {
    config.as_deref().map(RunConfig::load).transpose()
}

fn flux_from(flux: &Option<String>, cfg: &Option<RunConfig>) -> Result<FluxPair> {
    match (flux, cfg) {
        (Some(spec), _) => resolve_flux(spec),
        (None, Some(cfg)) => cfg.validate(config::Needs::FluxOnly),
        (None, None) => Err(Error::argument("need --flux or --config")),
    }
}

fn output_dir(cli: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    cli.or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::config("output_dir", "set output_dir in the config or pass --output-dir"))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mut run = |cmd: Command, args: RunArgs| -> Result<i32> {
        let cfg = RunConfig::load(&args.config)?;
        let dir = output_dir(args.output_dir, &cfg)?;
        let outcome = execute(cmd, &cfg, &dir)?;
        if let Some(f) = outcome.failure {
            let obj = serde_json::json!({"error": "numerical", "time": f.time, "message": f.message, "output_dir": dir});
            writeln!(stderr, "{obj}")?;
        }
        Ok(outcome.code)
    };
    match cli.command {
        Cmd::Solve(a) => run(Command::Solve, a),
        Cmd::Sweep(a) => run(Command::Sweep, a),
        Cmd::Riemann(a) => run(Command::Riemann, a),
        Cmd::Contract(a) => run(Command::Contract, a),
        Cmd::Residual(a) => run(Command::Residual, a),
        Cmd::Admissible {
            flux,
            config,
            shock,
            output_dir,
        } => {
            let cfg = load_optional(&config)?;
            let flux = flux_from(&flux, &cfg)?;
            let shock = parse_shock(&flux, &shock)?;
            let dir = output_dir.or_else(|| cfg.as_ref().and_then(|c| c.output_dir.clone()));
            let q = run::run_admissible(&flux, shock, cfg.as_ref(), dir.as_deref())?;
            serde_json::to_writer_pretty(&mut *stdout, &q).map_err(|e| Error::argument(e.to_string()))?;
            writeln!(stdout)?;
            Ok(EXIT_OK)
        }
        Cmd::Enumerate {
            flux,
            config,
            n_states,
            n_xi,
            output_dir,
        } => {
            let cfg = load_optional(&config)?;
            let flux = flux_from(&flux, &cfg)?;
            let n_states = n_states.or(cfg.as_ref().map(|c| c.analysis.n_states)).unwrap_or(64);
            let n_xi = n_xi.or(cfg.as_ref().map(|c| c.analysis.n_xi)).unwrap_or(DEFAULT_N_XI);
            let dir = output_dir.or_else(|| cfg.as_ref().and_then(|c| c.output_dir.clone()));
            let rows = run::run_enumerate(&flux, n_states, n_xi, cfg.as_ref(), dir.as_deref())?;
            if dir.is_none() {
                run::write_enumeration_csv(stdout, &rows)?;
            }
            Ok(EXIT_OK)
        }
        Cmd::Report { output_dir } => {
            let summary = report_bundle(&output_dir)?;
            let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::argument(e.to_string()))? + "\n";
            std::fs::write(output_dir.join(report::SUMMARY), &text)?;
            stdout.write_all(text.as_bytes())?;
            Ok(if summary.pass { EXIT_OK } else { EXIT_ACCEPTANCE })
        }
    }
}

/// Machine-readable error object and exit code for a failed invocation.
pub fn error_report(err: &Error) -> (i32, serde_json::Value) {
    use serde_json::json;
    match err {
        Error::Config { field, message } => (EXIT_CONFIG, json!({"error": "config", "field": field, "message": message})),
        Error::Argument(message) => (EXIT_CONFIG, json!({"error": "argument", "message": message})),
        Error::Numerical { time, message, .. } => {
            (EXIT_NUMERICAL, json!({"error": "numerical", "time": time, "message": message}))
        }
        Error::Io(e) => (EXIT_IO, json!({"error": "io", "message": e.to_string()})),
    }
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let obj = serde_json::json!({"error": "argument", "message": e.to_string()});
            let _ = writeln!(stderr, "{obj}");
            return EXIT_CONFIG;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(err) => {
            let (code, obj) = error_report(&err);
            let _ = writeln!(stderr, "{obj}");
            code
        }
    }
}
