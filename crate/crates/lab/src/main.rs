use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dcl_lab::artifact::{table_csv, write_atomic};
use dcl_lab::converge::{converge, Mode};
use dcl_lab::manifest::RunManifest;
use dcl_lab::simulate::simulate;
use dcl_lab::verify::{run_suite, Suite, CHECK_COLUMNS};
use dcl_lab::{thread_count, LabError, Result, THREADS_ENV};

#[derive(Parser)]
#[command(name = "dcl", version, about = "Dispersive curve-flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its artifacts to the manifest's output directory.
    Simulate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run a property suite at each grid size and print the checks as CSV.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        grids: Vec<usize>,
        /// Also write the table to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Refinement study in ε, grid size or time step.
    Converge {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Epsilon => "epsilon",
        Mode::Grid => "grid",
        Mode::Dt => "dt",
    }
}

fn run(cli: Cli) -> Result<i32> {
    let threads = thread_count(std::env::var(THREADS_ENV).ok().as_deref())?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(LabError::config)?;

    match cli.command {
        Command::Simulate { manifest } => {
            let artifact = simulate(&RunManifest::load(&manifest)?)?;
            let dir = artifact.manifest.output_dir.display();
            match &artifact.failure {
                None => eprintln!("{} rows written to {dir}", artifact.rows.len()),
                Some(f) => eprintln!("run stopped after {} rows ({dir}): {f}", artifact.rows.len()),
            }
            Ok(artifact.exit_code())
        }
        Command::Verify { suite, grids, output } => {
            let checks = run_suite(suite, &grids)?;
            let rows: Vec<Vec<String>> = checks.iter().map(|c| c.cells(suite)).collect();
            let csv = table_csv(&CHECK_COLUMNS, &rows)?;
            std::io::stdout().write_all(&csv)?;
            if let Some(path) = output {
                write_atomic(&path, &csv)?;
            }
            let total = checks.iter().filter(|c| c.passed().is_some()).count();
            let failed = checks.iter().filter(|c| c.passed() == Some(false)).count();
            if failed > 0 {
                return Err(LabError::VerifyFailed { failed, total });
            }
            Ok(0)
        }
        Command::Converge { manifest, mode, levels } => {
            let manifest = RunManifest::load(&manifest)?;
            let table = converge(&manifest, mode, levels)?;
            let csv = table_csv(&table.header, &table.rows)?;
            std::fs::create_dir_all(&manifest.output_dir)?;
            write_atomic(&manifest.output_dir.join(format!("converge_{}.csv", mode_name(mode))), &csv)?;
            std::io::stdout().write_all(&csv)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
