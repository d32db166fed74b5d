use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use etcon::scenario::Scenario;
use etcon::Error;

/// Event-triggered consensus simulator.
#[derive(Parser)]
#[command(name = "etcon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and emit events/segments/lyapunov/metrics CSVs.
    Run {
        scenario: PathBuf,
        /// Output directory (default: $ETCON_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sigma/lambda sweep with Monte-Carlo drifts; emits sweep.csv.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep cells.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Validate a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn outdir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ETCON_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SafetyCap { .. } => 3,
        Error::InvalidGraph(_)
        | Error::InvalidLaw(_)
        | Error::Scenario(_)
        | Error::Json(_)
        | Error::Degenerate(_)
        | Error::NotApplicable(_) => 2,
        Error::Io(_) => 1,
    }
}

fn run(cli: Cli) -> etcon::Result<()> {
    match cli.command {
        Command::Run { scenario, out } => {
            let s = Scenario::load(&scenario)?;
            let dir = outdir(out);
            let summary = etcon::scenario::run_to_dir(&s, &dir)?;
            println!("{summary}");
        }
        Command::Sweep {
            scenario,
            out,
            jobs,
        } => {
            let s = Scenario::load(&scenario)?;
            let dir = outdir(out);
            if let Some(jobs) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .ok();
            }
            let cells = etcon::sweep::run_to_dir(&s, &dir)?;
            println!(
                "sweep complete: {} cells written to {}",
                cells.len(),
                dir.join("sweep.csv").display()
            );
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            let g = s.build_graph()?;
            s.build_law(&g, None, None)?;
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
