mod cache;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use yezema::ingest::CorpusSpec;
use yezema::par::{configure_jobs, ExecMode};
use yezema::Result;

use commands::Status;
use config::{InitMethod, Overrides, PipelineConfig, CACHE_ENV};

/// Chanting-mode classification and pitch-set analysis.
#[derive(Parser)]
#[command(name = "yezema", version)]
struct Cli {
    /// Worker threads for file-level parallelism; 0 uses every core.
    #[arg(long, short, global = true, default_value_t = 0)]
    jobs: usize,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML). Relative paths inside it resolve against its directory.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Feature cache directory; overrides the config and the environment.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus: WAVs, ground-truth contours and a manifest.
    Synth {
        /// Corpus spec files (TOML). Without any, the three published pitch sets are used.
        #[arg(long)]
        spec: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "synth")]
        dataset: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        per_mode: usize,
    },
    /// Track, stabilize and calibrate every recording and fill the feature cache.
    Extract {
        #[command(flatten)]
        common: Common,
        /// Recompute entries that are already cached.
        #[arg(long)]
        force: bool,
    },
    /// Train one classifier per feature setting and save checkpoints.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validate, score saved models on the held-out dataset and write the results grid.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Align, average and fit the pitch sets of each mode.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        init: Option<InitMethod>,
    },
    /// Rebuild the results grid and pitch-set tables from saved outputs.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common, init: Option<InitMethod>) -> Result<PipelineConfig> {
    let (cfg, base) = PipelineConfig::load(common.config.as_deref())?;
    let ov = Overrides {
        cache_dir: common.cache_dir.clone(),
        output_dir: common.out.clone(),
        init,
    };
    cfg.resolve(&base, &ov, std::env::var_os(CACHE_ENV).map(PathBuf::from))
}

fn run(cli: Cli) -> Result<Status> {
    let exec: ExecMode = configure_jobs(cli.jobs);
    match cli.command {
        Command::Synth {
            spec,
            out,
            dataset,
            seed,
            per_mode,
        } => {
            let specs = if spec.is_empty() {
                vec![CorpusSpec::published(dataset, seed, per_mode)]
            } else {
                spec.iter().map(CorpusSpec::load).collect::<Result<Vec<_>>>()?
            };
            commands::synth(&specs, &out, exec)
        }
        Command::Extract { common, force } => commands::extract(&resolve(&common, None)?, force, exec),
        Command::Train { common } => commands::train_models(&resolve(&common, None)?, exec),
        Command::Eval { common } => commands::eval(&resolve(&common, None)?, exec),
        Command::Analyze { common, init } => commands::analyze(&resolve(&common, init)?, exec),
        Command::Report { common } => commands::report(&resolve(&common, None)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => {
            eprintln!("finished with failures; see the log above");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
