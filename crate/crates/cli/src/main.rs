//! `sepax`: check ordinal mechanisms for strategyproofness, enumerate the
//! preference domain, trace utility paths, and design mechanisms by LP.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{MechanismSource, Mode, ObjectiveSource, What};
use report::{CliError, RunReport, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "sepax", version, about = "Strategyproofness verification via separation axioms")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "SEPAX_WORKERS")]
    workers: Option<usize>,

    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    /// Print a one-line summary instead of the JSON report.
    #[arg(long, global = true)]
    summary: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a mechanism against the axioms or brute-force strategyproofness.
    Check {
        /// Mechanism JSON file.
        #[arg(long, conflicts_with = "zoo", required_unless_present = "zoo")]
        mechanism: Option<PathBuf>,
        /// Built-in mechanism name (requires --m).
        #[arg(long, requires = "m")]
        zoo: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Report every violating separation rather than the first per axiom.
        #[arg(long)]
        emit_all_certificates: bool,
    },
    /// List orders or separations, or count constraints.
    Enumerate {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        what: What,
    },
    /// Orders crossed by the utility segment between two orders.
    Path {
        order_a: String,
        order_b: String,
        /// JSON array of rationals for the first order.
        #[arg(long)]
        utility_a: Option<PathBuf>,
        #[arg(long)]
        utility_b: Option<PathBuf>,
        /// Jitter the default canonical utilities with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the strategyproofness LP for an objective.
    Amd {
        #[arg(long)]
        m: usize,
        /// Objective file, or `top-class`.
        #[arg(long)]
        objective: String,
        /// Mechanism file to write.
        #[arg(long)]
        out: PathBuf,
        /// Solution file; defaults to `<out stem>.solution.json`.
        #[arg(long)]
        solution_out: Option<PathBuf>,
        /// Export the LP (`.json` for JSON, anything else for text).
        #[arg(long)]
        lp_out: Option<PathBuf>,
        /// Also emit the lower-part responsiveness inequalities.
        #[arg(long)]
        lower_responsiveness: bool,
    },
    /// Built-in mechanisms.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
}

#[derive(Subcommand)]
enum ZooAction {
    List,
    Emit { name: String, m: usize, out: PathBuf },
}

fn run(command: Command) -> Result<RunReport, CliError> {
    match command {
        Command::Check {
            mechanism,
            zoo,
            m,
            mode,
            emit_all_certificates,
        } => {
            let source = match (mechanism, zoo, m) {
                (Some(p), _, _) => MechanismSource::File(p),
                (None, Some(name), Some(m)) => MechanismSource::Zoo { name, m },
                _ => return Err(CliError::Usage("give --mechanism or --zoo with --m".into())),
            };
            commands::check(&source, mode, emit_all_certificates)
        }
        Command::Enumerate { m, what } => commands::enumerate(m, what),
        Command::Path {
            order_a,
            order_b,
            utility_a,
            utility_b,
            seed,
        } => commands::path(&order_a, &order_b, utility_a.as_deref(), utility_b.as_deref(), seed),
        Command::Amd {
            m,
            objective,
            out,
            solution_out,
            lp_out,
            lower_responsiveness,
        } => commands::amd(commands::AmdArgs {
            m,
            objective: &ObjectiveSource::parse(&objective),
            out: &out,
            solution_out: solution_out.as_deref(),
            lp_out: lp_out.as_deref(),
            lower_responsiveness,
        }),
        Command::Zoo { action } => match action {
            ZooAction::List => Ok(commands::zoo_list()),
            ZooAction::Emit { name, m, out } => commands::zoo_emit(&name, m, &out),
        },
    }
}

fn summary_line(r: &RunReport) -> String {
    format!("{} exit={} counts={}", r.command, r.exit, r.counts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_ERROR as u8),
            };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(EXIT_ERROR as u8);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };

    let start = Instant::now();
    let outcome = pool.install(|| run(cli.command)).and_then(|mut r| {
        r.elapsed_ms = start.elapsed().as_millis();
        let text = serde_json::to_string_pretty(&r).expect("report serializes") + "\n";
        if let Some(p) = &cli.report {
            report::write_atomic(p, &text)?;
        }
        Ok((r, text))
    });
    match outcome {
        Ok((r, text)) => {
            if cli.summary {
                println!("{}", summary_line(&r));
            } else {
                print!("{text}");
            }
            ExitCode::from(r.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
