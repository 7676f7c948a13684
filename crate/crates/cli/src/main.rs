//! `qlm`: scene-driven front end for the quasilocal mass laboratory.
//!
//! Verbs: `run` executes a TOML scene and writes one report per task,
//! `validate` schema-checks a scene without running it, and `describe`
//! prints the registry entry for a functional, catalog entry, or
//! convention.

mod artifact;
mod describe;
mod run;
mod scene;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use scene::TableFormat;

#[derive(Parser)]
#[command(
    name = "qlm",
    version = qlm_core::VERSION,
    about = "Quasilocal masses, energy conditions, extension flows, and fill-in obstructions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a scene file and write its report artifacts.
    Run {
        scene: PathBuf,
        /// Output directory (default: scene [output] dir, then $QLM_OUT,
        /// then ./qlm-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Table format; nested reports are always JSON.
        #[arg(long, value_enum)]
        format: Option<TableFormat>,
        /// Override the embedding convergence tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Recorded in artifact headers; reserved for stochastic tasks
        /// (current tasks are deterministic).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for interior sampling (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the registry entry for a topic (`describe scene` for the schema).
    Describe { topic: String },
    /// Parse and schema-check a scene file without running anything.
    Validate { scene: PathBuf },
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Run { scene, out, format, tol, seed, threads } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .context("configuring the thread pool")?;
            }
            run::run(&scene, &run::Overrides { out, format, tol, seed })
        }
        Cmd::Describe { topic } => {
            println!("{}", describe::describe(&topic)?);
            Ok(0)
        }
        Cmd::Validate { scene: path } => {
            let (scene, hash) = scene::load(&path)?;
            let s = scene::validate(&scene)?;
            println!(
                "{}: OK (scene {hash}; {} surface(s), {} region(s), {} task(s))",
                path.display(),
                s.surfaces,
                s.regions,
                s.tasks
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
