//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Criteria 4 to 6 share one default-budget
//! training run.

#[allow(dead_code)]
#[path = "oracles/quintic.rs"]
mod quintic;
#[allow(dead_code)]
#[path = "oracles/sops.rs"]
mod sops;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use spikeinsert::io::{self, RunConfig};
use spikeinsert::pipeline;
use spikeinsert::rl::{compute_reward, RewardParams};
use spikeinsert::snn::{ActorShape, SpikingActor};
use spikeinsert::types::{FTReading, Pose};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let t0 = Instant::now();
    let v = f();
    let elapsed = t0.elapsed();
    verdict(v.pass && elapsed < limit, format!("{} [{:.2} s, limit {} s]", v.detail, elapsed.as_secs_f64(), limit.as_secs()))
}

fn quintic_criterion() -> Verdict {
    timed(Duration::from_secs(1), || {
        let c = quintic::check_quintic(1000, 2024);
        let pass = c.boundary <= 1e-9 && c.oracle <= 1e-9 && c.splice <= 1e-9;
        verdict(pass, format!("boundary {:.1e}, oracle {:.1e}, splice {:.1e}", c.boundary, c.oracle, c.splice))
    })
}

fn gradient_criterion() -> Verdict {
    timed(Duration::from_secs(60), || {
        let critic = gradients::critic_gradcheck([256, 256], 20, 8, 41);
        let decoder = gradients::decoder_gradcheck(20, 43);
        verdict(critic < 1e-4 && decoder < 1e-6, format!("critic rel err {critic:.1e}, decoder rel err {decoder:.1e}"))
    })
}

fn contact_criterion() -> Verdict {
    timed(Duration::from_secs(60), || {
        let c = contact::check_contact(50, 1000, 77);
        let pass = c.area <= 1e-3 && c.centroid <= 1e-3 && c.contact_point <= 1e-3;
        verdict(
            pass,
            format!(
                "{} offsets: area/r_p² {:.1e}, centroid/r_p {:.1e}, contact point/r_p {:.1e}",
                c.offsets, c.area, c.centroid, c.contact_point
            ),
        )
    })
}

fn training_criterion(cfg: &RunConfig, out: &Path) -> (Verdict, Option<SpikingActor>) {
    let t0 = Instant::now();
    let run = || -> spikeinsert::Result<_> {
        let summary = pipeline::run_train(cfg, &[cfg.train.seed], out, &mut |_, r| {
            eprintln!(
                "  epoch {:>2}: selection success {:.2}, return {:.3}, {:.0} s",
                r.point.epoch,
                r.point.success_rate,
                r.point.mean_return,
                t0.elapsed().as_secs_f64()
            );
        })?;
        let actor = io::load_actor(&summary.best_checkpoint)?;
        let (report, _) = pipeline::run_eval(&actor, cfg, cfg.eval.episodes, cfg.eval.seed, out)?;
        Ok((summary, actor, report))
    };
    match run() {
        Ok((summary, actor, report)) => {
            let elapsed = t0.elapsed();
            let interactions: usize = summary.seeds.iter().map(|s| s.interactions).sum();
            let rate = report.success_rate.unwrap_or(0.0);
            let median = report.time_median.unwrap_or(f64::INFINITY);
            let pass = report.episodes == 50
                && rate >= 0.9
                && median <= 10.0
                && interactions <= 750_000
                && elapsed <= Duration::from_secs(3600);
            let detail = format!(
                "{} episodes, success {:.2}, median insertion {:.2} s, {} interactions [{:.0} s, limit 3600 s]",
                report.episodes,
                rate,
                median,
                interactions,
                elapsed.as_secs_f64()
            );
            (verdict(pass, detail), Some(actor))
        }
        Err(e) => (verdict(false, format!("training failed: {e}")), None),
    }
}

fn quantization_criterion(actor: &SpikingActor, cfg: &RunConfig, out: &Path) -> Verdict {
    let outcome = match pipeline::run_quantize(actor, cfg, 9, out) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("quantization failed: {e}")),
    };
    let r = &outcome.report;
    let delta = r.success_delta.unwrap_or(f64::INFINITY);
    let mut worst = 0.0f64;
    let mut bound_ok = true;
    for (layer, w) in outcome.quantized.layers.iter().zip(&actor.params.weights) {
        for (x, y) in w.iter().zip(layer.dequantize().iter()) {
            let err = (x - y).abs();
            bound_ok &= err <= layer.scale / 2.0;
            worst = worst.max(err / layer.scale);
        }
    }
    verdict(
        delta.abs() <= 0.05 && bound_ok,
        format!(
            "success {:.2} -> {:.2}, worst dequantization error {:.3} steps",
            r.reference_success_rate.unwrap_or(f64::NAN),
            r.candidate_success_rate.unwrap_or(f64::NAN),
            worst
        ),
    )
}

fn profile_criterion(actor: &SpikingActor, cfg: &RunConfig, out: &Path) -> Verdict {
    let mismatches = sops::check_sops(1000, 99);
    let outcome = match pipeline::run_profile(actor, cfg, out) {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("profiling failed: {e}")),
    };
    let energy = outcome.rows[0].energy_uj_mean.unwrap_or(f64::NAN);
    let latency_ms = outcome.float_latency.mean * 1e3;
    verdict(
        mismatches == 0 && (36.0..=70.0).contains(&energy) && latency_ms < 10.0,
        format!(
            "SOP recount mismatches {mismatches}/1000, energy {energy:.1} μJ, latency {latency_ms:.3} ms ({:.0} SOPs)",
            outcome.mean_sops
        ),
    )
}

fn determinism_criterion(root: &Path) -> Verdict {
    let mut cfg = RunConfig::default();
    cfg.train.epochs = 2;
    cfg.train.episodes_per_epoch = 3;
    cfg.train.max_interactions = 20;
    cfg.train.batch_size = 16;
    cfg.train.buffer_capacity = 4096;
    cfg.train.eval_episodes = 2;
    cfg.train.critic_hidden = [32, 32];
    cfg.train.actor.shape = ActorShape { hidden: [32, 32], ..ActorShape::default() };
    cfg.eval.episodes = 5;
    cfg.eval.max_interactions = 40;
    let files = ["curve_seed3.csv", "curve_seed4.csv", "curve_aggregate.csv", "eval.csv"];
    let run = |dir: &Path| -> spikeinsert::Result<Vec<Vec<u8>>> {
        let summary = pipeline::run_train(&cfg, &[3, 4], dir, &mut |_, _| {})?;
        let actor = io::load_actor(&summary.best_checkpoint)?;
        pipeline::run_eval(&actor, &cfg, cfg.eval.episodes, cfg.eval.seed, dir)?;
        files.iter().map(|f| Ok(std::fs::read(dir.join(f))?)).collect()
    };
    match (run(&root.join("a")), run(&root.join("b"))) {
        (Ok(a), Ok(b)) => {
            let same = files.iter().zip(a.iter().zip(&b)).filter(|(_, (x, y))| x == y).count();
            verdict(same == files.len(), format!("{same}/{} CSV files byte-identical across reruns", files.len()))
        }
        (Err(e), _) | (_, Err(e)) => verdict(false, format!("run failed: {e}")),
    }
}

fn reward_criterion() -> Verdict {
    let p = RewardParams::default();
    let ft = |f: [f64; 3]| FTReading { force: Vector3::from(f), torque: Vector3::zeros() };
    let cases = [
        (compute_reward(&ft([0.0; 3]), &Pose::at(0.0, 0.0, -0.07), &p), 0.0),
        (compute_reward(&ft([3.0, 4.0, 0.0]), &Pose::at(0.0, 0.0, -0.07), &p), -0.25),
        (compute_reward(&ft([0.0; 3]), &Pose::at(0.0, 0.0, 0.0), &p), -0.063),
    ];
    let worst = cases.iter().map(|(r, e)| (r - e).abs()).fold(0.0, f64::max);
    verdict(worst <= 1e-12, format!("3 examples, worst error {worst:.1e}"))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let cfg = RunConfig::default();
    let mut results: Vec<(&str, Verdict)> = Vec::new();

    results.push(("1 quintic correctness", quintic_criterion()));
    results.push(("2 gradient checks", gradient_criterion()));
    results.push(("3 contact oracle", contact_criterion()));
    let (train, actor) = training_criterion(&cfg, &tmp.path().join("train"));
    results.push(("4 desk-scale training", train));
    match &actor {
        Some(actor) => {
            results.push(("5 quantization fidelity", quantization_criterion(actor, &cfg, &tmp.path().join("train"))));
            results.push(("6 SOP, energy and latency", profile_criterion(actor, &cfg, &tmp.path().join("train"))));
        }
        None => {
            results.push(("5 quantization fidelity", verdict(false, "no trained actor".into())));
            results.push(("6 SOP, energy and latency", verdict(false, "no trained actor".into())));
        }
    }
    results.push(("7 determinism", determinism_criterion(&tmp.path().join("rerun"))));
    results.push(("8 reward examples", reward_criterion()));

    let mut failed = 0;
    for (name, v) in &results {
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}
