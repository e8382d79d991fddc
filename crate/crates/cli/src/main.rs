use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gazeid_core::harness::{ExperimentConfig, SweepAxis};
use gazeid_core::Error;

mod commands;
mod record;

#[derive(Parser, Debug)]
#[command(name = "gazeid", version, about = "Eye-movement biometrics: synthesize, train, embed and evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset (recordings and manifest) into --out.
    Synth {
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        duration: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Window the dataset and fit normalization statistics on the training split.
    Preprocess {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train one model per fold; checkpoints go to <out>/checkpoints.
    Train {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Downsample recordings to this rate before training.
        #[arg(long)]
        target_rate: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Export ensemble embeddings of every valid test window.
    Embed {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score the configured enrollment/authentication protocol.
    Evaluate {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Also run the bootstrap.
        #[arg(long)]
        bootstrap: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate once per value along one axis and write sweep.csv.
    Sweep {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
        #[arg(long)]
        bootstrap: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the EER threshold on a score file, optionally applying it to another.
    FitThreshold {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        apply: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Rank-1 identification for the configured protocol.
    Identify {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Preprocess { .. } => "preprocess",
            Command::Train { .. } => "train",
            Command::Embed { .. } => "embed",
            Command::Evaluate { .. } => "evaluate",
            Command::Sweep { .. } => "sweep",
            Command::FitThreshold { .. } => "fit-threshold",
            Command::Identify { .. } => "identify",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Synth { common, .. }
            | Command::Preprocess { common, .. }
            | Command::Train { common, .. }
            | Command::Embed { common, .. }
            | Command::Evaluate { common, .. }
            | Command::Sweep { common, .. }
            | Command::FitThreshold { common, .. }
            | Command::Identify { common, .. } => common,
        }
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Unsupported(_) => 2,
        Error::Numerical(_) => 4,
        Error::InvalidInput(_) | Error::MetricUnavailable(_) | Error::Data(_) | Error::Parse { .. } | Error::Io { .. } => 3,
    }
}

/// Configuration file plus flag overrides, finalized.
fn resolve_config(cmd: &Command) -> Result<ExperimentConfig, Error> {
    let common = cmd.common();
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    match cmd {
        Command::Synth { subjects, duration, .. } => {
            if let Some(n) = subjects {
                cfg.synthetic.subjects = *n;
            }
            if let Some(d) = duration {
                cfg.synthetic.duration_s = *d;
            }
        }
        Command::Train {
            manifest,
            epochs,
            target_rate,
            ..
        } => {
            if let Some(e) = epochs {
                cfg.train.epochs = *e;
            }
            if target_rate.is_some() {
                cfg.preprocess.target_sampling_rate_hz = *target_rate;
            }
            if manifest.is_some() {
                cfg.manifest = manifest.clone();
            }
        }
        Command::Preprocess { manifest, .. } | Command::Embed { manifest, .. } | Command::Identify { manifest, .. } => {
            if manifest.is_some() {
                cfg.manifest = manifest.clone();
            }
        }
        Command::Evaluate { manifest, bootstrap, .. } => {
            if manifest.is_some() {
                cfg.manifest = manifest.clone();
            }
            cfg.evaluation.bootstrap |= *bootstrap;
        }
        Command::Sweep {
            manifest,
            axis,
            values,
            bootstrap,
            ..
        } => {
            if manifest.is_some() {
                cfg.manifest = manifest.clone();
            }
            if let Some(a) = axis {
                cfg.sweep.axis = a.parse::<SweepAxis>()?;
            }
            if let Some(v) = values {
                cfg.sweep.values = v.clone();
            }
            cfg.evaluation.bootstrap |= *bootstrap;
        }
        Command::FitThreshold { .. } => {}
    }
    cfg.finalize()
}

fn checkpoints_dir(explicit: &Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    explicit.clone().unwrap_or_else(|| cfg.checkpoint_dir())
}

fn dispatch(cmd: &Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, Error> {
    match cmd {
        Command::Synth { .. } => commands::synth(cfg),
        Command::Preprocess { .. } => commands::preprocess(cfg),
        Command::Train { .. } => commands::train(cfg),
        Command::Embed { checkpoints, .. } => commands::embed(cfg, &checkpoints_dir(checkpoints, cfg)),
        Command::Evaluate { checkpoints, .. } => commands::evaluate(cfg, &checkpoints_dir(checkpoints, cfg)),
        Command::Sweep { checkpoints, .. } => {
            let mut cfg = cfg.clone();
            cfg.evaluation.checkpoint_dir = Some(checkpoints_dir(checkpoints, &cfg));
            commands::sweep(&cfg)
        }
        Command::FitThreshold { scores, apply, .. } => commands::fit_threshold(cfg, scores, apply.as_deref()),
        Command::Identify { checkpoints, .. } => commands::identify(cfg, &checkpoints_dir(checkpoints, cfg)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let started = chrono::Utc::now();
    let cfg = match resolve_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let outcome = dispatch(&cli.command, &cfg);
    let code = match &outcome {
        Ok(_) => 0,
        Err(e) => exit_code(e),
    };
    let artifacts = outcome.as_ref().map(|a| a.as_slice()).unwrap_or(&[]);
    let error = outcome.as_ref().err().map(|e| e.to_string());
    if let Err(e) = record::write_run_record(cli.command.name(), &cfg, started, artifacts, code, error.as_deref()) {
        eprintln!("warning: could not write run record: {e}");
    }
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
