use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trialbias::cli::{
    bias_curve_table, ingest, m_pmf_table, precision_table, run, synth, write_tables, Design,
    RunConfig, SynthConfig,
};
use trialbias::{Error, Result, TieBreak};

#[derive(Parser)]
#[command(
    name = "trialbias",
    version,
    about = "Compare randomized and survey field-trial designs for two targeting methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Population file (unit_id,outcome,score_s|rank_s,score_t|rank_t)
    #[arg(long)]
    input: PathBuf,
    /// Tie-break for score columns: `id` or `seeded:<u64>`
    #[arg(long, default_value = "id")]
    tie_break: TieBreak,
    /// Directory for report tables
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for replicate fan-out (results do not depend on it)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Precision curves of both methods
    PrecisionCurve {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Law of the deepest population rank in a half's top k/2
    MDist {
        /// Population size; taken from --input when omitted
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized split-half design: expected bias and Monte Carlo draws
    Rct {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Survey design: exact sampling law of the estimator
    Survey {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
    },
    /// Both designs with curves, law of M and a summary table
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Expected RCT precision against truth over a range of k
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long)]
        k_max: usize,
    },
    /// Write a synthetic population file
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        positive_rate: f64,
        /// Association between S scores and outcomes, 0 (random) to 1
        #[arg(long, default_value_t = 0.5)]
        correlation: f64,
        /// Association between T scores and outcomes
        #[arg(long, default_value_t = 0.0)]
        t_correlation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn report(out: &Path, tables: &[trialbias::cli::Table]) -> Result<()> {
    for path in write_tables(out, tables)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run_design(input: &InputArgs, sim: Option<&SimArgs>, k: usize, design: Design) -> Result<()> {
    let inputs = ingest(&input.input, input.tie_break)?;
    let config = RunConfig {
        k,
        design,
        replicates: sim.map_or(1, |s| s.replicates),
        seed: sim.map_or(0, |s| s.seed),
        workers: sim.and_then(|s| s.workers),
        tie_break: input.tie_break,
        out: input.out.clone(),
    };
    report(&config.out, &run(&config, &inputs)?)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PrecisionCurve { input } => {
            let inputs = ingest(&input.input, input.tie_break)?;
            report(&input.out, &[precision_table(&inputs)?])
        }
        Command::MDist { n, input, k, out } => {
            let n = match (n, input) {
                (Some(n), _) => n,
                (None, Some(path)) => ingest(&path, TieBreak::Id)?.population.len(),
                (None, None) => {
                    return Err(Error::Invalid("m-dist needs --n or --input".into()));
                }
            };
            report(&out, &[m_pmf_table(n, k)?])
        }
        Command::Rct { input, sim } => run_design(&input, Some(&sim), sim.k, Design::Rct),
        Command::Survey { input, k } => run_design(&input, None, k, Design::Survey),
        Command::Compare { input, sim } => run_design(&input, Some(&sim), sim.k, Design::Both),
        Command::Sweep {
            input,
            k_min,
            k_max,
        } => {
            let inputs = ingest(&input.input, input.tie_break)?;
            report(&input.out, &[bias_curve_table(&inputs, k_min, k_max)?])
        }
        Command::Synth {
            n,
            positive_rate,
            correlation,
            t_correlation,
            seed,
            out,
        } => {
            let file = synth(&SynthConfig {
                n,
                positive_rate,
                correlation,
                t_correlation,
                seed,
            })?;
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, file.render()) {
                        let _ = std::fs::remove_file(&path);
                        return Err(e.into());
                    }
                    Ok(())
                }
                None => {
                    std::io::stdout().write_all(file.render().as_bytes())?;
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
