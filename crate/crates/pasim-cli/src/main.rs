//! `pasim run <scene.json> -o <dir>`: execute a scene and write its
//! artifacts. Exit codes: 0 success, 1 input/config errors, 2 numerical
//! failures.

use clap::{Parser, Subcommand};
use pasim_core::{parse_scene, run_scene, Error};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pasim", version, about = "Pinching-antenna radiation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in a scene config
    Run {
        /// Scene config (JSON)
        scene: PathBuf,
        /// Output directory (created if missing)
        #[arg(short, long)]
        output: PathBuf,
        /// Overwrite existing output files
        #[arg(long)]
        force: bool,
        /// Worker thread count (defaults to all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn exit_code_for(err: &Error) -> ExitCode {
    if err.is_numerical() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scene, output, force, threads } => {
            if let Some(n) = threads {
                if n == 0 {
                    eprintln!("error: --threads must be at least 1");
                    return ExitCode::from(1);
                }
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(1);
                }
            }
            let json = match fs::read_to_string(&scene) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {}: {e}", scene.display());
                    return ExitCode::from(1);
                }
            };
            let cfg = match parse_scene(&json) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", scene.display());
                    return ExitCode::from(1);
                }
            };
            match run_scene(cfg, &output, force) {
                Ok(manifest) => {
                    for task in &manifest.tasks {
                        println!("{}: {:.1} ms", task.task, task.wall_ms);
                        for out in &task.outputs {
                            println!("  {out}");
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
    }
}
