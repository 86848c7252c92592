use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mqm_core::Execution;
use mqm_experiments::{run, selftest, ExperimentConfig, Format, RunError, SelftestOptions};

#[derive(Parser)]
#[command(
    name = "mqm",
    version,
    about = "Direction estimation with macroscopic pointer measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run a figure preset or sweep described by a JSON config.
    Run(RunArgs),
    /// Run the fast invariant suite.
    Selftest {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `output`; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the output file extension, then csv.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads(threads: usize) -> Result<(), RunError> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| RunError::Config(format!("threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run_command(args: RunArgs) -> Result<(), RunError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| RunError::Config(format!("{}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let start = Instant::now();
    let table = run(&config, Execution::default())?;
    match args.out.or(config.output.clone()) {
        Some(path) => {
            let format = args.format.unwrap_or_else(|| Format::from_path(&path));
            table.emit(format, &path)?;
            eprintln!(
                "wrote {} rows to {} in {:.1} s",
                table.rows.len(),
                path.display(),
                start.elapsed().as_secs_f64()
            );
        }
        None => {
            print!("{}", table.to_string(args.format.unwrap_or(Format::Csv))?);
            eprintln!(
                "{} rows in {:.1} s",
                table.rows.len(),
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("{e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match cli.command {
        Command::Run(args) => match run_command(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Selftest { seed } => {
            let start = Instant::now();
            let report = selftest(SelftestOptions {
                seed,
                ..SelftestOptions::default()
            });
            print!("{report}");
            eprintln!(
                "selftest finished in {:.1} s",
                start.elapsed().as_secs_f64()
            );
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
