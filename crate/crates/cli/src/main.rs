use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spikeinsert::io::{self, Archive, RunConfig, KIND_QUANTIZED};
use spikeinsert::pipeline;
use spikeinsert::quant::QuantizedActor;
use spikeinsert::snn::SpikingActor;

/// Exit status when a run completes but misses its configured threshold.
const THRESHOLD_MISSED: u8 = 3;

#[derive(Parser)]
#[command(name = "spikeinsert", version, about = "Train, evaluate, quantize and profile spiking peg-insertion policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent per seed and keep the best checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Comma-separated training seeds.
        #[arg(long, alias = "seed", value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
    },
    /// Run exploit episodes and report the success rate.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Actor, checkpoint or quantized model file.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        /// Seed of the first episode.
        #[arg(long)]
        seed: Option<u64>,
        /// Minimum success rate for a zero exit status.
        #[arg(long)]
        min_success: Option<f64>,
    },
    /// Quantize a trained actor and compare it with the float policy.
    Quantize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        bits: Option<u32>,
    },
    /// Energy-proxy and latency table for the float and quantized actor.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

enum Model {
    Float(SpikingActor),
    Quantized(QuantizedActor),
}

fn load_model(path: &Path) -> Result<Model> {
    let archive = Archive::load(path).with_context(|| format!("loading model {}", path.display()))?;
    if archive.kind == KIND_QUANTIZED {
        return Ok(Model::Quantized(io::quantized_from_archive(&archive)?));
    }
    Ok(Model::Float(io::load_actor(path).with_context(|| format!("loading actor from {}", path.display()))?))
}

fn load_float(path: &Path) -> Result<SpikingActor> {
    match load_model(path)? {
        Model::Float(a) => Ok(a),
        Model::Quantized(_) => bail!("{} holds a quantized model; a float actor or checkpoint is required", path.display()),
    }
}

fn fmt_opt(v: Option<f64>, unit: &str) -> String {
    v.map(|x| format!("{x:.3}{unit}")).unwrap_or_else(|| "n/a".into())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train { common, seeds } => {
            let cfg = load_config(common.config.as_deref())?;
            let summary = pipeline::run_train(&cfg, &seeds, &common.out, &mut |seed, r| {
                eprintln!(
                    "seed {seed} epoch {:>3}: success {:.2} return {:>8.3} interactions {}",
                    r.point.epoch, r.point.success_rate, r.point.mean_return, r.point.interactions
                );
            })?;
            for s in &summary.seeds {
                println!(
                    "seed {}: best epoch {:?}, selection success {:.2}, curve {}",
                    s.seed,
                    s.best_epoch,
                    s.best_score.0,
                    s.curve_path.display()
                );
            }
            println!("best seed {} -> {}", summary.best_seed, summary.best_checkpoint.display());
            Ok(true)
        }
        Command::Eval { common, checkpoint, episodes, seed, min_success } => {
            let cfg = load_config(common.config.as_deref())?;
            let episodes = episodes.unwrap_or(cfg.eval.episodes);
            let seed = seed.unwrap_or(cfg.eval.seed);
            let (report, _) = match load_model(&checkpoint)? {
                Model::Float(a) => pipeline::run_eval(&a, &cfg, episodes, seed, &common.out)?,
                Model::Quantized(q) => pipeline::run_eval(&q, &cfg, episodes, seed, &common.out)?,
            };
            println!(
                "episodes {} successes {} rate {} median time {} (min {}, max {})",
                report.episodes,
                report.successes,
                fmt_opt(report.success_rate, ""),
                fmt_opt(report.time_median, " s"),
                fmt_opt(report.time_min, " s"),
                fmt_opt(report.time_max, " s"),
            );
            if report.success_rate.is_none() {
                eprintln!("success rate undefined for zero episodes");
            }
            Ok(report.meets(min_success.unwrap_or(cfg.eval.min_success_rate)))
        }
        Command::Quantize { common, checkpoint, bits } => {
            let cfg = load_config(common.config.as_deref())?;
            let actor = load_float(&checkpoint)?;
            let bits = bits.unwrap_or(cfg.quant.bits);
            let out = pipeline::run_quantize(&actor, &cfg, bits, &common.out)?;
            let r = &out.report;
            println!(
                "{bits}-bit: max action deviation {:.3e}, mean raster hamming {:.2}, success {} -> {} (delta {})",
                r.overall_max_deviation(),
                r.mean_hamming,
                fmt_opt(r.reference_success_rate, ""),
                fmt_opt(r.candidate_success_rate, ""),
                fmt_opt(r.success_delta, ""),
            );
            Ok(r.success_delta.is_some_and(|d| d.abs() <= cfg.quant.max_success_delta))
        }
        Command::Profile { common, checkpoint } => {
            let cfg = load_config(common.config.as_deref())?;
            let actor = load_float(&checkpoint)?;
            let out = pipeline::run_profile(&actor, &cfg, &common.out)?;
            print!("{}", out.table);
            println!("mean SOPs per inference {:.0}", out.mean_sops);
            Ok(out.float_latency.mean * 1e3 < cfg.profile.max_latency_ms)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("threshold not met");
            ExitCode::from(THRESHOLD_MISSED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
