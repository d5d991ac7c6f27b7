use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hamlearn::hierarchy::Route;
use hamlearn::PauliString;
use harness::run::{read_report, run_coeff, run_structure};
use harness::{oracle_audit, run_experiment, scaling_sweep, ExperimentConfig, HarnessError, Overrides};

#[derive(Parser)]
#[command(name = "hamlearn", version, about = "Learn a sparse Pauli Hamiltonian from simulated black-box evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// two-copy or single-copy.
    #[arg(long)]
    route: Option<Route>,
    /// Total SPAM error rate.
    #[arg(long)]
    spam: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full hierarchy and write the report and coefficient table.
    Learn(Common),
    /// One structure-learning pass with nothing cancelled.
    Structure {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        level: u32,
    },
    /// One robust frequency estimation run on a single Pauli string.
    Coeff {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pauli: PauliString,
    },
    /// Total evolution time against accuracy, with the fitted log-log slope.
    Sweep(Common),
    /// Replay a report's per-call time log and check its totals.
    OracleAudit {
        /// Report written by `learn`.
        #[arg(long)]
        report: PathBuf,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    cfg.apply(&Overrides { seed: c.seed, out_dir: c.out_dir.clone(), route: c.route, spam: c.spam })?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("outputs serialize"));
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Learn(c) => {
            let out = run_experiment(&load(&c)?)?;
            for (p, coeff) in out.report.learned.iter() {
                println!("{p}\t{coeff}");
            }
            println!("total_time\t{}", out.report.total_time);
            eprintln!("wrote {} and {}", out.report_path.display(), out.table_path.display());
        }
        Command::Structure { common, level } => print_json(&run_structure(&load(&common)?, level)?),
        Command::Coeff { common, pauli } => print_json(&run_coeff(&load(&common)?, &pauli)?),
        Command::Sweep(c) => {
            let out = scaling_sweep(&load(&c)?)?;
            for r in &out.rows {
                println!("{}\t{}\t{}", r.eps, r.total_time, r.error);
            }
            match out.slope {
                Some(s) => println!("slope\t{s}"),
                None => println!("slope\tundetermined (needs 4 points over 2 decades)"),
            }
            eprintln!("wrote {}", out.csv_path.display());
        }
        Command::OracleAudit { report } => {
            let audit = oracle_audit(&read_report(&report)?);
            print_json(&audit);
            if !audit.consistent {
                return Err(HarnessError::Contract(hamlearn::Error::Degenerate(
                    "ledger replay does not match the reported totals".into(),
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("HAMLEARN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
