//! Thin CLI over the library: `gen`, `train`, `eval`, `inspect-trace`.

use clap::{Args, Parser, Subcommand};
use lstm_jump::commands::{cmd_eval, cmd_gen, cmd_inspect_trace, cmd_train};
use lstm_jump::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lstm-jump", about = "Skim-reading LSTM training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default 1 for bit-reproducible runs)
    #[arg(long)]
    threads: Option<usize>,
    /// Repeatable config override, e.g. `--override read_len=9`
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> lstm_jump::Result<RunConfig> {
        let mut cfg = RunConfig::from_file(&self.config)?;
        for kv in &self.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                lstm_jump::Error::Config(format!("--override expects KEY=VALUE, got {kv:?}"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads.max(1);
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic train/valid/test files
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Train a model; writes the best-validation checkpoint
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from the configured checkpoint if it exists
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a checkpoint; `--override` can change read_len/n_jumps
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint path (defaults to the config's `checkpoint`)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Dataset path (defaults to the config's `test_path`)
        #[arg(long)]
        data: Option<PathBuf>,
        /// Earlier eval record file; adds a speedup ratio to the report
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Use greedy jump decisions instead of sampling
        #[arg(long)]
        greedy: bool,
    },
    /// Print reading traces for the first N test examples
    InspectTrace {
        #[command(flatten)]
        common: Common,
        #[arg(short, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn run() -> lstm_jump::Result<()> {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Gen { common } => {
            let cfg = common.load()?;
            cmd_gen(&cfg, &mut stdout)
        }
        Command::Train { common, resume } => {
            let cfg = common.load()?;
            cmd_train(&cfg, resume, &mut stdout).map(|_| ())
        }
        Command::Eval {
            common,
            checkpoint,
            data,
            baseline,
            greedy,
        } => {
            let mut cfg = common.load()?;
            if greedy {
                cfg.set("eval_mode", "greedy")?;
            }
            cmd_eval(
                &cfg,
                checkpoint.as_deref(),
                data.as_deref(),
                baseline.as_deref(),
                &mut stdout,
            )
            .map(|_| ())
        }
        Command::InspectTrace {
            common,
            n,
            checkpoint,
            data,
        } => {
            let cfg = common.load()?;
            cmd_inspect_trace(&cfg, checkpoint.as_deref(), data.as_deref(), n, &mut stdout)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
