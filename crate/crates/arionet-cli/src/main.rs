use arionet_cli::{commands, init_thread_pool, CliError, RunConfig};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "arionet",
    about = "Self-supervised birdsong representation toolkit",
    version
)]
struct Cli {
    /// Config file with `key = value` lines (flags override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a single config key, repeatable: --set tau=0.5
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Random seed (shorthand for --set seed=N).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the built-in synthetic corpus with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        species: usize,
        #[arg(long, default_value_t = 20)]
        recordings: usize,
    },
    /// Run the preprocessing + feature extraction pipeline on a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Contrastive pretraining of the chromagram encoder.
    Pretrain {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss trace CSV (epoch,mean_loss).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train the future-frame prediction transformer.
    TrainTemporal {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Trace CSV (epoch,train_mse,val_mse,val_cosine).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fit the random-forest species classifier on frozen embeddings.
    Classify {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a fitted classifier on its held-out split.
    Evaluate {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Export frozen embeddings as CSV.
    Embed {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict future frames for every record and report statistics.
    PredictFrames {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        temporal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for pair in &cli.set {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(CliError::Validation(format!(
                "--set expects KEY=VALUE, got \"{pair}\""
            )));
        };
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli)?;
    match &cli.command {
        Command::Synth {
            out,
            species,
            recordings,
        } => commands::cmd_synth(out, *species, *recordings, &cfg),
        Command::Extract { manifest, out } => commands::cmd_extract(manifest, &cfg, out),
        Command::Pretrain { store, out, trace } => {
            commands::cmd_pretrain(store, &cfg, out, trace.as_deref())
        }
        Command::TrainTemporal { store, out, trace } => {
            commands::cmd_train_temporal(store, &cfg, out, trace.as_deref())
        }
        Command::Classify {
            store,
            encoder,
            out,
        } => commands::cmd_classify(store, encoder, &cfg, out),
        Command::Evaluate {
            store,
            encoder,
            model,
            report,
        } => commands::cmd_evaluate(store, encoder, model, &cfg, report),
        Command::Embed {
            store,
            encoder,
            out,
        } => commands::cmd_embed(store, encoder, &cfg, out),
        Command::PredictFrames {
            store,
            temporal,
            out,
        } => commands::cmd_predict_frames(store, temporal, &cfg, out),
    }
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
