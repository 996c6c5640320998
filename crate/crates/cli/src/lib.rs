//! Command-line front end: `classify`, `transform`, `generators`, `verify`
//! and `catalogue` over `.pde` spec files, with JSON reports.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod report;
pub mod specfile;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use specfile::PdeSpec;

/// Exit status of a run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<diffusym::Error> for CliError {
    fn from(e: diffusym::Error) -> Self {
        use diffusym::Error as E;
        match e {
            E::QuadratureDivergence { .. }
            | E::NonFiniteIntegrand(_)
            | E::StepUnderflow(_)
            | E::NonFiniteRhs(_)
            | E::RankDeficient(_)
            | E::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "diffusym",
    version,
    about = "Symmetry analysis of 1-D linear diffusion PDEs"
)]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit wall-clock timings, making reports byte-reproducible.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide the symmetry class of the PDE.
    Classify {
        /// PDE spec file (`.pde`).
        spec: PathBuf,
        /// Exit with status 1 unless the class is this one.
        #[arg(long, value_parser = ["six", "four", "none"])]
        expect: Option<String>,
    },
    /// Build the map to a canonical form and pull back a canonical solution.
    Transform {
        /// PDE spec file (`.pde`).
        spec: PathBuf,
        /// Canonical target form; defaults to the one the class admits.
        #[arg(long, value_parser = ["first", "second"])]
        target: Option<String>,
        /// Möbius parameters `a,b,c,d`.
        #[arg(long, allow_hyphen_values = true)]
        mobius: Option<String>,
    },
    /// Emit the symmetry generators and check their commutator table.
    Generators {
        /// PDE spec file (`.pde`).
        spec: PathBuf,
    },
    /// Check a closed-form solution against the PDE.
    Verify {
        /// PDE spec file (`.pde`).
        spec: PathBuf,
        /// Catalogue entry providing the solution.
        #[arg(long, conflicts_with = "solution")]
        entry: Option<String>,
        /// Solution as an expression in x, t and the spec's parameters.
        #[arg(long)]
        solution: Option<String>,
        /// Relative residual bound.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Browse the catalogue of closed-form solutions.
    Catalogue {
        #[command(subcommand)]
        action: CatalogueAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogueAction {
    /// List the entries with their PDEs and windows.
    List,
    /// Show one entry and its residual at h = 1/128.
    Show { name: String },
}

/// A finished report and the exit code it implies.
pub struct Outcome {
    pub json: serde_json::Value,
    pub code: i32,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DIFFUSYM_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Input(format!("DIFFUSYM_THREADS=`{v}` is not a positive integer"))
    })?;
    // a pool configured earlier in this process stays in place
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    let start = Instant::now();
    let mut outcome = match &cli.command {
        Command::Classify { spec, expect } => {
            commands::classify(&PdeSpec::load(spec)?, expect.as_deref())?
        }
        Command::Transform {
            spec,
            target,
            mobius,
        } => commands::transform(&PdeSpec::load(spec)?, target.as_deref(), mobius.as_deref())?,
        Command::Generators { spec } => commands::generators(&PdeSpec::load(spec)?)?,
        Command::Verify {
            spec,
            entry,
            solution,
            tol,
        } => commands::verify(
            &PdeSpec::load(spec)?,
            entry.as_deref(),
            solution.as_deref(),
            *tol,
        )?,
        Command::Catalogue { action } => match action {
            CatalogueAction::List => commands::catalogue_list()?,
            CatalogueAction::Show { name } => commands::catalogue_show(name)?,
        },
    };
    if !cli.no_timing {
        if let serde_json::Value::Object(m) = &mut outcome.json {
            m.insert(
                "timing_ms".into(),
                serde_json::json!(start.elapsed().as_secs_f64() * 1e3),
            );
        }
    }
    Ok(outcome)
}

/// Runs the CLI on `argv` (program name first), writing the report to
/// `stdout` (or `--out`) and diagnostics to `stderr`. Returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let text =
                serde_json::to_string_pretty(&outcome.json).expect("reports serialize") + "\n";
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_INPUT;
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
