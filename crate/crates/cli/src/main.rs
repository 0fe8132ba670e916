//! `sokr`: generate data, fit, evaluate, benchmark and diagnose sketched
//! output kernel regression models.

mod commands;
mod evaluate;
mod problem;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use problem::SplitName;

#[derive(Parser)]
#[command(name = "sokr", version, about = "Sketched input/output kernel ridge regression")]
struct Cli {
    /// Worker threads for Gram construction and sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured sketch seeds.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic least-squares dataset.
    Synth {
        /// Synthetic spec JSON, or a run configuration with synthetic data.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        n_val: usize,
        #[arg(long, default_value_t = 200)]
        n_te: usize,
        #[arg(long, default_value_t = 20)]
        d: usize,
    },
    /// Select hyperparameters, fit the configured variant and save the model.
    Train {
        #[command(flatten)]
        common: Common,
        /// Timed fits after one warm-up fit.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
    /// Evaluate a saved model on a split.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "test")]
        split: SplitName,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time fits and inference over a grid of sketch sizes.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Overrides the configured repetitions.
        #[arg(long)]
        repeat: Option<usize>,
    },
    /// Reconstruction error of sketches against sketch size.
    SketchDiag {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Synth {
            config,
            out,
            seed,
            n,
            n_val,
            n_te,
            d,
        } => commands::synth(
            &commands::SynthArgs {
                config,
                n,
                n_val,
                n_te,
                d,
                seed,
            },
            &out,
        ),
        Command::Train { common, repeat } => {
            commands::train(&common.config, &common.out, common.seed, repeat)
        }
        Command::Eval {
            config,
            model,
            split,
            out,
        } => commands::eval(&config, &model, split, &out),
        Command::Benchmark { common, repeat } => {
            commands::benchmark(&common.config, &common.out, common.seed, repeat)
        }
        Command::SketchDiag { common } => {
            commands::sketch_diag(&common.config, &common.out, common.seed)
        }
    }
}
