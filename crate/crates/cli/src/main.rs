use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use betacoal::harness::{
    emit, emit_to, format_real, run_experiment, run_oracle, simulate_one, write_records_csv,
    ExperimentConfig, ExperimentId, OutputFormat, StoragePolicy,
};
use betacoal::rates::{lambda_bk, MergerRateTable};
use betacoal::rng::substream;
use betacoal::stable::{limit_constants, sample_stable, StableSpec};
use betacoal::AlphaParam;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "betacoal",
    version,
    about = "Beta(2-α, α)-coalescent simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merger rate tables.
    Rates {
        #[command(subcommand)]
        command: RatesCommand,
    },
    /// Simulate one coalescent and print its summary as JSON.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_alpha)]
        alpha: AlphaParam,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the x, u, dt and y arrays.
        #[arg(long)]
        store_trajectory: bool,
    },
    /// Run the partition-valued reference simulator.
    Oracle {
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = parse_alpha)]
        alpha: AlphaParam,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the full partition histories as JSON.
        #[arg(long)]
        store_history: bool,
        /// Destination of the history JSON.
        #[arg(
            long,
            default_value = "oracle_history.json",
            requires = "store_history"
        )]
        history_out: PathBuf,
        /// Destination of the per-replicate CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// α-stable variates.
    Stable {
        #[command(subcommand)]
        command: StableCommand,
    },
    /// Print the limit constants as JSON.
    Constants {
        #[arg(long, value_parser = parse_alpha)]
        alpha: AlphaParam,
    },
    /// Run a replicate experiment.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum RatesCommand {
    /// CSV of k, lambda_bk, binom_weight, pmf for 2 ≤ k ≤ b.
    Table {
        #[arg(long, value_parser = parse_alpha)]
        alpha: AlphaParam,
        #[arg(long)]
        b: u64,
    },
}

#[derive(Subcommand)]
enum StableCommand {
    /// Draws of ς, one per line.
    Sample {
        #[arg(long, value_parser = parse_alpha)]
        alpha: AlphaParam,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_parser = parse_experiment)]
    id: ExperimentId,
    #[arg(long, value_parser = parse_alpha)]
    alpha: AlphaParam,
    /// Single sample size; ignored when --n-grid is given.
    #[arg(long, required_unless_present = "n_grid")]
    n: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "BETACOAL_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Keep full trajectories for every replicate.
    #[arg(long)]
    full: bool,
    /// Size of the stable reference sample for KS comparisons.
    #[arg(long)]
    reference_size: Option<usize>,
}

fn parse_alpha(s: &str) -> Result<AlphaParam, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    AlphaParam::new(a).map_err(|e| e.to_string())
}

fn parse_experiment(s: &str) -> Result<ExperimentId, String> {
    s.parse().map_err(|e: betacoal::Error| e.to_string())
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn rates_table(alpha: AlphaParam, b: u64) -> Result<()> {
    let table = MergerRateTable::new(b, alpha)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["k", "lambda_bk", "binom_weight", "pmf"])?;
    for k in 2..=b {
        let i = (k - 2) as usize;
        w.write_record([
            k.to_string(),
            format_real(lambda_bk(b, k, alpha)?),
            format_real(table.binom_weights[i]),
            format_real(table.size_pmf[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_experiment_command(args: ExperimentArgs) -> Result<()> {
    let grid = match (args.n_grid, args.n) {
        (Some(g), _) => g,
        (None, Some(n)) => vec![n],
        (None, None) => unreachable!("clap requires --n or --n-grid"),
    };
    let mut config = ExperimentConfig::new(args.id, args.alpha, grid[0], args.reps, args.seed)
        .with_n_grid(grid)
        .with_workers(args.workers);
    if args.full {
        config = config.with_storage(StoragePolicy::Full);
    }
    if let Some(size) = args.reference_size {
        config = config.with_reference_size(size);
    }
    let batch = run_experiment(&config)?;
    let format = match args.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    match args.out {
        Some(path) => emit(&batch, format, &path)?,
        None => emit_to(&batch, format, io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rates {
            command: RatesCommand::Table { alpha, b },
        } => rates_table(alpha, b),
        Command::Simulate {
            n,
            alpha,
            seed,
            store_trajectory,
        } => {
            let record = simulate_one(n, alpha, seed, store_trajectory)?;
            let mut out = io::stdout().lock();
            serde_json::to_writer(&mut out, &record)?;
            writeln!(out)?;
            Ok(())
        }
        Command::Oracle {
            n,
            alpha,
            reps,
            seed,
            store_history,
            history_out,
            out,
        } => {
            let (records, runs) = run_oracle(n, alpha, reps, seed, store_history)?;
            let mut w = output(out.as_ref())?;
            write_records_csv(&records, &mut w)?;
            w.flush()?;
            if store_history {
                let file = File::create(&history_out)
                    .with_context(|| format!("cannot create {}", history_out.display()))?;
                serde_json::to_writer(BufWriter::new(file), &runs)?;
            }
            Ok(())
        }
        Command::Stable {
            command: StableCommand::Sample { alpha, count, seed },
        } => {
            let spec = StableSpec::new(alpha);
            let mut rng = substream(seed, 0);
            let mut out = BufWriter::new(io::stdout().lock());
            for _ in 0..count {
                writeln!(out, "{}", format_real(sample_stable(&spec, &mut rng)))?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Constants { alpha } => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &limit_constants(alpha))?;
            writeln!(out)?;
            Ok(())
        }
        Command::Experiment(args) => run_experiment_command(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
