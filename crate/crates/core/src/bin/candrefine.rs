use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use candrefine::harness::synthetic::{self, DEFAULT_SEED, DEFAULT_SIZE};
use candrefine::harness::{metric_table, oracle_table, robustness_table, swap_table, ExperimentConfig, Harness};
use candrefine::rerank::Method;

#[derive(Parser)]
#[command(name = "candrefine", version, about = "Generate, rerank, combine and evaluate LLM candidates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Use the deterministic mock LLM instead of the completion endpoint.
    #[arg(long)]
    mock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample candidate pools for every input.
    Generate(Common),
    /// Select one output per pool.
    Rerank {
        #[command(flatten)]
        common: Common,
        /// greedy, mbrd, oracle-rank, oracle-combine or corrector.
        #[arg(long)]
        method: Option<Method>,
    },
    /// Report greedy, reranking and combination headroom.
    Oracle(Common),
    /// Write corrector training data from the pools.
    BuildDataset(Common),
    /// Score an output file against the gold data.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Rerank JSONL or plain text, one output per line.
        #[arg(long)]
        outputs: Option<PathBuf>,
    },
    /// Score every method under each prompt set.
    Robustness(Common),
    /// Score every method with candidates from each configured model.
    SwapLlm(Common),
    /// Write the synthetic GEC benchmark.
    SynthBench {
        #[arg(long, default_value = "data/synthetic_gec")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIZE)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn harness(common: &Common) -> anyhow::Result<Harness> {
    let config = ExperimentConfig::load(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    Ok(Harness::new(config, common.mock))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let report = harness(&common)?.generate()?;
            println!(
                "{} pools written ({} reused, {} failed), coverage {:.3}",
                report.pools_written, report.reused, report.failed, report.coverage
            );
        }
        Command::Rerank { common, method } => {
            let report = harness(&common)?.rerank(method)?;
            println!(
                "{}: {} items, coverage {:.3}",
                report.method, report.n, report.coverage
            );
        }
        Command::Oracle(common) => print!("{}", oracle_table(&harness(&common)?.oracle()?)),
        Command::BuildDataset(common) => {
            let report = harness(&common)?.build_dataset()?;
            println!(
                "{} records ({} train, {} validation, {} truncated, {} failed)",
                report.records,
                report.train,
                report.validation,
                report.truncated,
                report.failures.len()
            );
        }
        Command::Evaluate { common, outputs } => {
            print!("{}", metric_table(&harness(&common)?.evaluate(outputs.as_deref())?))
        }
        Command::Robustness(common) => print!("{}", robustness_table(&harness(&common)?.robustness()?)),
        Command::SwapLlm(common) => print!("{}", swap_table(&harness(&common)?.swap_llm()?)),
        Command::SynthBench { out, n, seed } => {
            let sentences = synthetic::write_benchmark(&out, n, seed)?;
            println!("{} sentences written to {}", sentences.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
