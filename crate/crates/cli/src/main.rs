use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use grating_cli::{load_run_spec, run, Overrides};

/// Multiple scattering by an infinite grating of dielectric cylinders at
/// oblique incidence.
#[derive(Debug, Parser)]
#[command(name = "grating", version)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Task to run; repeatable, replaces the task list of the file.
    #[arg(long = "task")]
    tasks: Vec<String>,
    /// Truncation tolerance; enables adaptive doubling of the truncation order.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest truncation order.
    #[arg(long)]
    max_order: Option<usize>,
    /// Suppress the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        tasks: args.tasks,
        out_dir: args.out,
        tol: args.tol,
        max_order: args.max_order,
    };
    let result = load_run_spec(&args.config, &overrides).and_then(|spec| run(&spec));
    match result {
        Ok((output, written)) => {
            if !args.quiet {
                eprintln!(
                    "{} sweep point(s), {} file(s) written",
                    output.report.points.len(),
                    written.len()
                );
                for p in &written {
                    eprintln!("  {}", p.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
