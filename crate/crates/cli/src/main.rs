mod config;
mod manifest;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ethcast_core::synth::SynthConfig;
use ethcast_core::FeatureConfig;

use config::ExperimentConfig;
use stages::{stage, Pipeline};

/// Transformer-encoder forecasting of the next-day ETH close.
#[derive(Parser)]
#[command(name = "ethcast", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML, schema_version = 1).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Directory for stage artifacts.
    #[arg(long, global = true, env = "ETHCAST_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Feature configuration for single-configuration stages.
    #[arg(long = "configuration", global = true)]
    configuration: Option<FeatureConfig>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_epochs: Option<usize>,
    /// Lookback window in days.
    #[arg(long, global = true)]
    window: Option<usize>,
    #[arg(long, global = true)]
    eth: Option<PathBuf>,
    #[arg(long, global = true)]
    btc: Option<PathBuf>,
    #[arg(long, global = true)]
    ada: Option<PathBuf>,
    #[arg(long, global = true)]
    dot: Option<PathBuf>,
    /// Sentiment triplet file (one JSON object per line).
    #[arg(long, global = true)]
    sentiment: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and clean the coin CSVs and the sentiment file.
    Ingest,
    /// Pearson correlation matrices across the configured coins.
    Correlate,
    /// Build the windowed dataset for one configuration.
    Featurize,
    /// Train a model for one configuration.
    Train {
        /// Use this dataset snapshot instead of featurizing.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score a trained model on the test split.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Render the comparison table from evaluated runs.
    Report,
    /// Run every stage for every configured feature set.
    RunAll,
    /// Write a synthetic market and sentiment fixture.
    Synth {
        /// Destination directory.
        #[arg(long)]
        dest: PathBuf,
        #[arg(long, default_value_t = 734)]
        days: usize,
        #[arg(long = "synth-seed", default_value_t = 15)]
        synth_seed: u64,
    },
}

fn resolve(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let data = &mut cfg.data;
    for (slot, flag) in [
        (&mut data.eth, &common.eth),
        (&mut data.btc, &common.btc),
        (&mut data.ada, &common.ada),
        (&mut data.dot, &common.dot),
        (&mut data.sentiment, &common.sentiment),
    ] {
        if let Some(p) = flag {
            *slot = Some(p.clone());
        }
    }
    if let Some(c) = common.configuration {
        cfg.configuration = c;
    }
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    if let Some(n) = common.max_epochs {
        cfg.train.max_epochs = n;
    }
    if let Some(w) = common.window {
        cfg.features.window = w;
    }
    cfg.model.window_len = cfg.features.window;
    let out = common.out_dir.clone().unwrap_or_else(|| cfg.output_dir());
    cfg.output_dir = Some(out.clone());
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Synth {
        dest,
        days,
        synth_seed,
    } = &cli.command
    {
        let cfg = SynthConfig {
            seed: *synth_seed,
            days: *days,
            ..SynthConfig::default()
        };
        return stage("synth", || {
            for p in stages::synth(dest, &cfg)? {
                println!("synth: wrote {}", p.display());
            }
            Ok(())
        });
    }
    let (cfg, out) = stage("config", || resolve(&cli.common))?;
    let c = cfg.configuration;
    let pipeline = Pipeline::new(cfg, out);
    match &cli.command {
        Command::Ingest => stage("ingest", || pipeline.ingest()),
        Command::Correlate => stage("correlate", || pipeline.correlate()),
        Command::Featurize => stage("featurize", || pipeline.featurize(c).map(drop)),
        Command::Train { dataset } => stage("train", || {
            if dataset.is_none() {
                pipeline.cfg.preflight(c)?;
            }
            pipeline.train(c, dataset.as_deref()).map(drop)
        }),
        Command::Evaluate {
            checkpoint,
            dataset,
        } => stage("evaluate", || {
            pipeline
                .evaluate(c, checkpoint.as_deref(), dataset.as_deref())
                .map(drop)
        }),
        Command::Report => stage("report", || {
            print!("{}", pipeline.report()?);
            Ok(())
        }),
        Command::RunAll => {
            let table = pipeline.run_all()?;
            print!("{table}");
            println!("artifacts in {}", display(&pipeline.out)?);
            Ok(())
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn display(path: &Path) -> Result<String> {
    let abs = std::path::absolute(path).context("resolving output directory")?;
    Ok(abs.display().to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
