use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use shor_mps::bench::{
    bench_sweep, entropy_report, histogram_report, write_entropy_csv, write_histogram_csv, write_jsonl,
    write_records_csv, write_records_jsonl,
};
use shor_mps::circuit::{shor_order_circuit, RegisterOrdering};
use shor_mps::mps::{MpsState, TruncationPolicy};
use shor_mps::numthy::{breakable_bits, generate_semiprimes, multiplicative_order, preselect_base, SemiprimeSpec};
use shor_mps::shor::{factor, write_outcomes_jsonl, Backend, Mode, RunConfig, Status};
use shor_mps::Error;

#[derive(Parser)]
#[command(name = "shor-mps", version, about = "Shor factoring on a matrix product state simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Measurement shots per attempt.
    #[arg(long, global = true, default_value_t = 8)]
    shots: usize,
    /// Wall-clock budget per factorization.
    #[arg(long, global = true, default_value_t = 10_000)]
    timeout_seconds: u64,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Preselected)]
    mode: ModeArg,
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Mps)]
    backend: BackendArg,
    /// Bond-dimension cap for the MPS backend.
    #[arg(long, global = true, default_value_t = 64)]
    chi_max: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Attempts before a factorization gives up.
    #[arg(long, global = true, default_value_t = 16)]
    max_attempts: usize,
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Write records here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Preselected,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mps,
    Dense,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Factor an odd square-free semiprime.
    Factor { n: u64 },
    /// Print the pre-selected base for N.
    Preselect { n: u64 },
    /// Print the multiplicative order of A modulo N.
    Order { a: u64, n: u64 },
    /// Sample the counting register for base A modulo N.
    Histogram { n: u64, a: u64 },
    /// Bond entropy at the register boundaries for each register ordering.
    Entropy {
        n: u64,
        a: u64,
        /// Orderings such as Upper-Lower-Ancilla; all six when omitted.
        #[arg(long, value_delimiter = ',')]
        orderings: Vec<String>,
        /// Dump the final Schmidt spectra of the first ordering here.
        #[arg(long)]
        spectra: Option<PathBuf>,
    },
    /// Factor a list of semiprimes and emit one record per run.
    Bench {
        /// Explicit targets; overrides the bit range.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<u64>,
        #[arg(long, default_value_t = 4)]
        min_bits: u32,
        #[arg(long, default_value_t = 8)]
        max_bits: u32,
        #[arg(long, default_value_t = 3)]
        per_bit: usize,
        /// Run both base-selection modes instead of --mode only.
        #[arg(long)]
        both_modes: bool,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Largest breakable modulus bit length for a qubit budget.
    Capacity { qubits: u64 },
}

enum Failure {
    Usage(String),
    Factoring(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::PreselectionBreach { .. } | Error::Timeout | Error::EmptyTruncation => {
                Failure::Factoring(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl Opts {
    fn config(&self) -> Result<RunConfig, Failure> {
        let truncation = TruncationPolicy::new(self.chi_max, TruncationPolicy::default().discard_threshold)?;
        Ok(RunConfig {
            mode: match self.mode {
                ModeArg::Preselected => Mode::Preselected,
                ModeArg::Random => Mode::Random,
            },
            shots: self.shots,
            max_attempts: self.max_attempts,
            backend: match self.backend {
                BackendArg::Mps => Backend::Mps,
                BackendArg::Dense => Backend::Dense,
            },
            truncation,
            seed: self.seed,
            timeout: Duration::from_secs(self.timeout_seconds),
        })
    }

    fn sink(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let opts = &cli.opts;
    match cli.command {
        Command::Factor { n } => {
            let config = opts.config()?;
            let outcome = factor(n, &config)?;
            if opts.output.is_some() || opts.out.is_some() {
                write_outcomes_jsonl(opts.sink()?, [&outcome])?;
            }
            match (outcome.status, outcome.factors) {
                (Status::Success, Some((p, q))) => {
                    if opts.out.is_some() || opts.output.is_none() {
                        println!("{n} = {p} × {q}");
                    }
                    Ok(())
                }
                (status, _) => {
                    Err(Failure::Factoring(format!("{n}: {status} after {} attempt(s)", outcome.attempts.len())))
                }
            }
        }
        Command::Preselect { n } => {
            println!("{}", preselect_base(&SemiprimeSpec::new(n)?));
            Ok(())
        }
        Command::Order { a, n } => {
            println!("{}", multiplicative_order(a, n)?);
            Ok(())
        }
        Command::Capacity { qubits } => {
            println!("{}", breakable_bits(qubits)?);
            Ok(())
        }
        Command::Histogram { n, a } => {
            let config = opts.config()?;
            let report = histogram_report(n, a, opts.shots, config.backend, config.truncation, opts.seed)?;
            match opts.output {
                Some(OutputFormat::Csv) => write_histogram_csv(opts.sink()?, &report)?,
                Some(OutputFormat::Jsonl) => write_jsonl(opts.sink()?, [&report])?,
                None => write!(opts.sink()?, "{}", report.table())?,
            }
            Ok(())
        }
        Command::Entropy { n, a, orderings, spectra } => {
            let orderings = if orderings.is_empty() {
                RegisterOrdering::ALL.to_vec()
            } else {
                orderings.iter().map(|s| s.parse()).collect::<Result<Vec<RegisterOrdering>, _>>()?
            };
            let policy = opts.config()?.truncation;
            let reports = entropy_report(n, a, &orderings, policy)?;
            match opts.output {
                Some(OutputFormat::Jsonl) => write_jsonl(opts.sink()?, &reports)?,
                Some(OutputFormat::Csv) => write_entropy_csv(opts.sink()?, &reports)?,
                None => {
                    let mut w = opts.sink()?;
                    for rep in &reports {
                        writeln!(w, "{} (peak chi {})", rep.ordering, rep.peak_chi)?;
                        for (boundary, mean) in &rep.averages {
                            writeln!(w, "  {boundary:<24} mean {mean:.4} bits")?;
                        }
                    }
                }
            }
            if let Some(path) = spectra {
                let circuit = shor_mps::circuit::reorder_registers(&shor_order_circuit(n, a)?, orderings[0]);
                let mut state = MpsState::new(circuit.width, policy);
                state.run_circuit(&circuit)?;
                state.write_spectra(BufWriter::new(File::create(path)?))?;
            }
            Ok(())
        }
        Command::Bench { targets, min_bits, max_bits, per_bit, both_modes, workers } => {
            let config = opts.config()?;
            let targets = if targets.is_empty() {
                generate_semiprimes(min_bits, max_bits, per_bit, opts.seed)?.into_iter().map(|s| s.value).collect()
            } else {
                targets
            };
            let modes = if both_modes { vec![Mode::Preselected, Mode::Random] } else { vec![config.mode] };
            let records = bench_sweep(&targets, &modes, &config, workers)?;
            match opts.output.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Csv => write_records_csv(opts.sink()?, &records)?,
                OutputFormat::Jsonl => write_records_jsonl(opts.sink()?, &records)?,
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Factoring(msg)) => {
            eprintln!("factorization failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
