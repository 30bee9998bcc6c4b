use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oodfdd::experiment::{cmd_compare, cmd_evaluate, cmd_report, cmd_score, cmd_train, sidecar, ExperimentConfig};
use oodfdd::Error;

/// MC dropout fault detection with an autoencoding pathway.
#[derive(Parser)]
#[command(name = "oodfdd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write its weights, thresholds and training log.
    Train(Common),
    /// Evaluate trained weights on the configured test split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Score the rows of a CSV file with trained weights.
    Score {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Latent LDA scatter, score matrix and MC histograms for trained weights.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Train the augmented model and both baselines and compare them.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Data root; falls back to $OODFDD_DATA_DIR, then ./data.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other configuration key, e.g. `--set epochs=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    /// Config file (or the config saved next to `weights`), then flags.
    fn config(&self, weights: Option<&Path>) -> oodfdd::Result<ExperimentConfig> {
        let saved = weights.map(|w| sidecar(w, "config.txt")).filter(|p| p.is_file());
        let text = match self.config.as_ref().or(saved.as_ref()) {
            Some(p) => Some(
                std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?,
            ),
            None => None,
        };
        let mut o: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        put("dataset", self.dataset.clone());
        put("model", self.model.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("mc_samples", self.mc_samples.map(|v| v.to_string()));
        put("data_dir", self.data_dir.as_ref().map(|p| p.display().to_string()));
        put("output_dir", self.out.as_ref().map(|p| p.display().to_string()));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            o.push((k.trim().to_string(), v.trim().to_string()));
        }
        let cfg = ExperimentConfig::with_overrides(text.as_deref(), &o)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> oodfdd::Result<()> {
    match cli.command {
        Command::Train(c) => {
            let path = cmd_train(&c.config(None)?)?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate { common, weights } => {
            for p in cmd_evaluate(&common.config(Some(&weights))?, &weights)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Score { common, weights, input } => {
            let path = cmd_score(&common.config(Some(&weights))?, &weights, &input)?;
            println!("wrote {}", path.display());
        }
        Command::Report { common, weights } => {
            for p in cmd_report(&common.config(Some(&weights))?, &weights)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Compare(c) => {
            let cfg = c.config(None)?;
            cmd_compare(&cfg)?;
            print!("{}", std::fs::read_to_string(cfg.output_dir.join("table1.csv"))?);
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DataNotFound(_) => 2,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
        Error::Config(_) | Error::InvalidArgument(_) => 3,
        Error::NonFinite(_) | Error::Degenerate(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
