//! `biobench`: batch enhancement, metric reports and synthetic corpora.
//!
//! The binary is a thin wrapper around [`run`]; every subcommand is also
//! callable as a library function from [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::error;

use crate::commands::{cmd_enhance, cmd_metrics, cmd_report, cmd_synth, MetricsOptions};
use crate::config::{parse_metrics, resolve_seed, ConfigFile, MethodSelection, MetricId, RunConfig};
use crate::error::{exit, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "biobench", version, about = "Bird-call enhancement and evaluation toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (falls back to BIOBENCH_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enhance every WAV in a directory.
    Enhance {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// mabe, specsub, mmse-stsa, mmse-lsa or all.
        #[arg(long)]
        method: Option<String>,
    },
    /// Compare a real and a generated directory.
    Metrics {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        gen: PathBuf,
        /// Comma-separated subset of isd, jsd, ndb, frechet.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long, requires = "embeddings_gen")]
        embeddings_real: Option<PathBuf>,
        #[arg(long, requires = "embeddings_real")]
        embeddings_gen: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        ndb_k: usize,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic clean/noise/mix corpus.
    Synth {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        output: PathBuf,
        /// Target SegSNR values in dB, cycled over clips.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-5")]
        snr: Vec<f64>,
    },
    /// Merge enhancement reports into a comparison table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Path prefix for `<prefix>.md` and `<prefix>.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
        }
    };
    let level = if cli.common.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    path.map(ConfigFile::load).transpose().map(Option::unwrap_or_default)
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serialises") + "\n";
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = load_config(cli.common.config.as_deref())?;
    let seed = resolve_seed(cli.common.seed, file.seed)?;
    let jobs = cli.common.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Error::usage("jobs must be at least 1"));
    }

    match cli.command {
        Command::Enhance { input, output, method } => {
            let input = input
                .or(file.input_dir)
                .ok_or_else(|| Error::usage("--input is required"))?;
            let output = output
                .or(file.output_dir)
                .ok_or_else(|| Error::usage("--output is required"))?;
            let mut cfg = RunConfig::new(input, output);
            if let Some(m) = method.or(file.method) {
                cfg.method = m.parse::<MethodSelection>()?;
            }
            if let Some(s) = &file.mabe {
                cfg.mabe = s.apply(cfg.mabe);
            }
            if let Some(m) = &file.metrics {
                cfg.metrics = parse_metrics(m)?;
            }
            cfg.seed = seed;
            cfg.jobs = jobs;
            let outcome = cmd_enhance(&cfg)?;
            print!("{}", outcome.value.markdown_table());
            Ok(outcome.exit_code)
        }
        Command::Metrics {
            real,
            gen,
            metrics,
            embeddings_real,
            embeddings_gen,
            ndb_k,
            output,
        } => {
            let mut ids = if metrics.is_empty() {
                match &file.metrics {
                    Some(m) => parse_metrics(m)?,
                    None => MetricsOptions::default().metrics,
                }
            } else {
                parse_metrics(&metrics)?
            };
            ids.retain(|m| *m != MetricId::SnrImprovement);
            let embeddings = embeddings_real.zip(embeddings_gen);
            if metrics.is_empty() && embeddings.is_some() && !ids.contains(&MetricId::Frechet) {
                ids.push(MetricId::Frechet);
            }
            let opts = MetricsOptions {
                metrics: ids,
                embeddings,
                ndb_k,
                seed,
                jobs,
            };
            let summary = cmd_metrics(&real, &gen, &opts)?;
            write_json(&summary, output.as_deref())?;
            Ok(exit::SUCCESS)
        }
        Command::Synth { count, output, snr } => {
            let rows = cmd_synth(count, &output, seed, &snr, jobs)?;
            log::info!("wrote {} clips to {}", rows.len(), output.display());
            Ok(exit::SUCCESS)
        }
        Command::Report { reports, output } => {
            let merged = cmd_report(&reports, output.as_deref())?;
            print!("{}", merged.markdown_table());
            Ok(exit::SUCCESS)
        }
    }
}
