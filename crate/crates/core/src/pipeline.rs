//! End-to-end workflows: multi-seed training, evaluation, quantization and
//! profiling, each writing its reports under an output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::InsertionEnv;
use crate::io::{self, Checkpoint, RunConfig};
use crate::profile::{self, EnergyModel, LatencyStats, ProfileRow, SopCount};
use crate::quant::{self, EquivalenceReport, QuantizedActor};
use crate::rl::{self, EpisodeConfig, EpisodeRecord, EpochReport, EvalSummary};
use crate::snn::{Policy, SpikingActor};
use crate::types::StateVector;
use crate::{Error, Result};

/// Environment factory for the scene in `cfg`.
pub fn env_factory(cfg: &RunConfig) -> impl Fn() -> Result<InsertionEnv> + Sync + '_ {
    move || InsertionEnv::new(cfg.scene.clone())
}

fn eval_episode_config(cfg: &RunConfig) -> EpisodeConfig {
    EpisodeConfig { max_interactions: cfg.eval.max_interactions, reward: cfg.train.reward }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Outcome of training one seed.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub curve_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub best_epoch: Option<usize>,
    /// Selection success rate and return of the kept actor.
    pub best_score: (f64, f64),
    pub interactions: usize,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub seeds: Vec<SeedResult>,
    pub aggregate_path: PathBuf,
    /// Copy of the best seed's checkpoint.
    pub best_checkpoint: PathBuf,
    pub best_seed: u64,
}

/// Trains one agent per seed. Writes `curve_seed<k>.csv` and
/// `checkpoint_seed<k>.spk` per seed, `curve_aggregate.csv`, and
/// `checkpoint.spk` for the seed with the best selection score.
pub fn run_train(
    cfg: &RunConfig,
    seeds: &[u64],
    out: &Path,
    observer: &mut dyn FnMut(u64, &EpochReport),
) -> Result<TrainSummary> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("need at least one training seed".into()));
    }
    ensure_dir(out)?;
    let hash = cfg.hash()?;
    let make_env = env_factory(cfg);
    let mut results = Vec::with_capacity(seeds.len());
    let mut curves = Vec::with_capacity(seeds.len());
    let mut best: Option<(usize, (f64, f64))> = None;

    for &seed in seeds {
        let train_cfg = rl::TrainConfig { seed, ..cfg.train.clone() };
        let outcome = rl::train_with_observer(&make_env, &train_cfg, &mut |r| observer(seed, r))?;
        let score = outcome
            .best_epoch
            .map(|e| (outcome.curve[e].success_rate, outcome.curve[e].mean_return))
            .unwrap_or((0.0, f64::NEG_INFINITY));

        let curve_path = out.join(format!("curve_seed{seed}.csv"));
        io::write_learning_curve(&curve_path, &outcome.curve, &hash)?;
        let checkpoint_path = out.join(format!("checkpoint_seed{seed}.spk"));
        let checkpoint = Checkpoint {
            train: train_cfg,
            scene: cfg.scene.clone(),
            epochs_done: outcome.curve.len(),
            best_epoch: outcome.best_epoch,
            best_actor: outcome.actor,
            agent: outcome.agent,
        };
        io::save_checkpoint(&checkpoint_path, &checkpoint)?;

        let better = match best {
            None => true,
            Some((_, (rate, ret))) => score.0 > rate || (score.0 == rate && score.1 > ret),
        };
        if better {
            best = Some((results.len(), score));
        }
        curves.push(outcome.curve);
        results.push(SeedResult {
            seed,
            curve_path,
            checkpoint_path,
            best_epoch: outcome.best_epoch,
            best_score: score,
            interactions: outcome.interactions,
        });
    }

    let aggregate_path = out.join("curve_aggregate.csv");
    io::write_aggregate(&aggregate_path, &io::aggregate_curves(&curves), &hash)?;
    let (best_index, _) = best.expect("at least one seed");
    let best_checkpoint = out.join("checkpoint.spk");
    std::fs::copy(&results[best_index].checkpoint_path, &best_checkpoint)?;
    Ok(TrainSummary { best_seed: results[best_index].seed, seeds: results, aggregate_path, best_checkpoint })
}

/// Success statistics of a batch of exploit episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub successes: usize,
    /// Undefined for an empty batch.
    pub success_rate: Option<f64>,
    pub mean_return: Option<f64>,
    /// Over successful episodes, s.
    pub time_mean: Option<f64>,
    pub time_median: Option<f64>,
    pub time_min: Option<f64>,
    pub time_max: Option<f64>,
}

impl EvalReport {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let summary = EvalSummary::from_records(records);
        let times: Vec<f64> = records.iter().filter_map(|r| r.time_to_insertion).collect();
        let defined = !records.is_empty();
        Self {
            episodes: records.len(),
            successes: summary.successes,
            success_rate: defined.then_some(summary.success_rate),
            mean_return: defined.then_some(summary.mean_return),
            time_mean: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
            time_median: summary.median_time_to_insertion,
            time_min: times.iter().copied().reduce(f64::min),
            time_max: times.iter().copied().reduce(f64::max),
        }
    }

    /// False when the rate is undefined or below `min_rate`.
    pub fn meets(&self, min_rate: f64) -> bool {
        self.success_rate.is_some_and(|r| r >= min_rate)
    }
}

/// Runs `episodes` exploit episodes with seeds `seed, seed+1, …`.
pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &P,
    cfg: &RunConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeRecord>> {
    let seeds: Vec<u64> = (0..episodes as u64).map(|k| seed + k).collect();
    rl::evaluate(policy, &env_factory(cfg), &seeds, &eval_episode_config(cfg))
}

/// Evaluates and writes `eval.csv` plus `eval_summary.json` under `out`.
pub fn run_eval<P: Policy + ?Sized>(
    policy: &P,
    cfg: &RunConfig,
    episodes: usize,
    seed: u64,
    out: &Path,
) -> Result<(EvalReport, Vec<EpisodeRecord>)> {
    ensure_dir(out)?;
    let records = evaluate_policy(policy, cfg, episodes, seed)?;
    let report = EvalReport::from_records(&records);
    let hash = cfg.hash()?;
    io::write_eval(&out.join("eval.csv"), &records, &hash)?;
    write_json(&out.join("eval_summary.json"), &report)?;
    Ok((report, records))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Observations visited by the policy on the evaluation seeds, at most `limit`.
pub fn rollout_states<P: Policy + ?Sized>(policy: &P, cfg: &RunConfig, limit: usize) -> Result<Vec<StateVector>> {
    let records = evaluate_policy(policy, cfg, cfg.eval.episodes.max(1), cfg.eval.seed)?;
    Ok(records.iter().flat_map(|r| r.decisions.iter().map(|d| d.state)).take(limit).collect())
}

#[derive(Debug, Clone)]
pub struct QuantizeOutcome {
    pub quantized: QuantizedActor,
    pub report: EquivalenceReport,
}

/// Quantizes `actor` to `bits`, compares actions and rasters on rollout
/// states and success on the evaluation seeds, and writes `quantized_<bits>.spk`
/// and `quant_report_<bits>.json`.
pub fn run_quantize(actor: &SpikingActor, cfg: &RunConfig, bits: u32, out: &Path) -> Result<QuantizeOutcome> {
    ensure_dir(out)?;
    let quantized = QuantizedActor::from_actor(actor, bits)?;
    let states = rollout_states(actor, cfg, cfg.quant.compare_states)?;
    let reference = EvalSummary::from_records(&evaluate_policy(actor, cfg, cfg.eval.episodes, cfg.eval.seed)?);
    let candidate = EvalSummary::from_records(&evaluate_policy(&quantized, cfg, cfg.eval.episodes, cfg.eval.seed)?);
    let report = quant::compare(actor, &quantized, &states)?.with_success(&reference, &candidate);
    io::save_quantized(&out.join(format!("quantized_{bits}.spk")), &quantized)?;
    write_json(&out.join(format!("quant_report_{bits}.json")), &report)?;
    Ok(QuantizeOutcome { quantized, report })
}

/// SOP counts of one policy over a state set.
pub fn sop_counts<P: Policy + ?Sized>(policy: &P, states: &[StateVector]) -> Result<Vec<SopCount>> {
    let shape = policy.shape();
    crate::par::map_slice(states, |s| {
        let (_, raster) = policy.forward(s)?;
        profile::count_sops(&raster, &shape)
    })
    .into_iter()
    .collect()
}

/// Per-inference energy proxy (μJ) over a state set.
pub fn energies_uj(counts: &[SopCount], model: &EnergyModel) -> Vec<f64> {
    counts.iter().map(|c| profile::estimate_energy(c, model) * 1e6).collect()
}

#[derive(Debug, Clone)]
pub struct ProfileOutcome {
    pub rows: Vec<ProfileRow>,
    pub float_latency: LatencyStats,
    pub quantized_latency: LatencyStats,
    /// Mean SOPs per inference, float path.
    pub mean_sops: f64,
    pub table: String,
}

fn latency<P: Policy + ?Sized>(policy: &P, states: &[StateVector], cfg: &RunConfig) -> Result<LatencyStats> {
    profile::profile_latency(|s| policy.forward(s).map(|_| ()), states, cfg.profile.repetitions, cfg.profile.warmup)
}

/// Energy-proxy and latency table for the float actor and its quantized
/// counterpart; writes `profile.csv` and `profile.txt`.
pub fn run_profile(actor: &SpikingActor, cfg: &RunConfig, out: &Path) -> Result<ProfileOutcome> {
    ensure_dir(out)?;
    let quantized = QuantizedActor::from_actor(actor, cfg.quant.bits)?;
    let states = rollout_states(actor, cfg, cfg.quant.compare_states)?;
    let model = &cfg.profile.energy;

    let float_counts = sop_counts(actor, &states)?;
    let quant_counts = sop_counts(&quantized, &states)?;
    let (fe, fs) = profile::mean_std(&energies_uj(&float_counts, model));
    let (qe, qs) = profile::mean_std(&energies_uj(&quant_counts, model));
    let mean_sops = float_counts.iter().map(|c| c.total() as f64).sum::<f64>() / float_counts.len().max(1) as f64;

    let float_latency = latency(actor, &states, cfg)?;
    let quantized_latency = latency(&quantized, &states, cfg)?;
    let ms = |l: &LatencyStats| (l.mean * 1e3, l.std * 1e3);
    let row = |label: String, e: (f64, f64), l: &LatencyStats| ProfileRow {
        label,
        energy_uj_mean: Some(e.0),
        energy_uj_std: Some(e.1),
        latency_ms_mean: ms(l).0,
        latency_ms_std: ms(l).1,
    };
    let rows = vec![
        row(format!("float64 / {}", float_latency.host), (fe, fs), &float_latency),
        row(format!("{}-bit integer / {}", cfg.quant.bits, quantized_latency.host), (qe, qs), &quantized_latency),
    ];
    let table = profile::format_table(&rows);
    io::write_profile(&out.join("profile.csv"), &rows, &cfg.hash()?)?;
    std::fs::write(out.join("profile.txt"), &table)?;
    Ok(ProfileOutcome { rows, float_latency, quantized_latency, mean_sops, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Termination;

    fn record(time: Option<f64>) -> EpisodeRecord {
        EpisodeRecord {
            seed: 0,
            friction: 0.38,
            start_offset: 0.0,
            decisions: Vec::new(),
            final_state: StateVector([0.0; 13]),
            termination: if time.is_some() { Termination::Success } else { Termination::Timeout },
            time_to_insertion: time,
            total_return: -1.0,
        }
    }

    #[test]
    fn empty_report_has_undefined_rate() {
        let r = EvalReport::from_records(&[]);
        assert_eq!(r.episodes, 0);
        assert_eq!(r.success_rate, None);
        assert!(!r.meets(0.0));
    }

    #[test]
    fn report_orders_times() {
        let recs = [record(Some(4.0)), record(None), record(Some(2.0)), record(Some(9.0))];
        let r = EvalReport::from_records(&recs);
        assert_eq!(r.success_rate, Some(0.75));
        assert_eq!((r.time_min, r.time_median, r.time_max), (Some(2.0), Some(4.0), Some(9.0)));
        assert_eq!(r.time_mean, Some(5.0));
        assert!(r.meets(0.75) && !r.meets(0.8));
    }
}
