use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
version = 1

[train]
epochs = 1
episodes_per_epoch = 2
max_interactions = 4
batch_size = 4
buffer_capacity = 64
eval_episodes = 1
critic_hidden = [8, 8]

[train.actor.shape]
state_dim = 13
pop_in = 10
hidden = [16, 16]
action_dim = 6
pop_out = 10

[eval]
episodes = 3
max_interactions = 5

[quant]
compare_states = 10

[profile]
repetitions = 30
warmup = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spikeinsert"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cli")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

fn train(dir: &Path, seeds: &str) -> Output {
    let cfg = write_config(dir);
    let out = dir.join("train");
    run(&["train", "--config", &cfg, "--seeds", seeds, "--out", out.to_str().unwrap()])
}

#[test]
fn two_seeds_give_two_curves_and_an_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let o = train(dir.path(), "3,4");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("train");
    for f in ["curve_seed3.csv", "curve_seed4.csv", "curve_aggregate.csv", "checkpoint.spk"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let text = std::fs::read_to_string(out.join("curve_seed3.csv")).unwrap();
    assert!(text.starts_with("epoch,seed,mean_return,success_rate\n"));
    assert!(text.lines().last().unwrap().starts_with("# config-sha256: "));
}

#[test]
fn rerun_reproduces_the_curve_file() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(train(a.path(), "5").status.success());
    assert!(train(b.path(), "5").status.success());
    let read = |d: &Path| std::fs::read(d.join("train/curve_seed5.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn eval_gates_on_the_success_threshold() {
    let dir = tempfile::tempdir().unwrap();
    assert!(train(dir.path(), "1").status.success());
    let cfg = dir.path().join("run.toml");
    let ckpt = dir.path().join("train/checkpoint.spk");
    let out = dir.path().join("eval");
    let args = |min: &str| {
        run(&[
            "eval",
            "--config",
            cfg.to_str().unwrap(),
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--episodes",
            "3",
            "--out",
            out.to_str().unwrap(),
            "--min-success",
            min,
        ])
    };
    // Five decisions cannot finish an insertion.
    assert_eq!(args("0.5").status.code(), Some(3));
    assert_eq!(args("0.0").status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 + 1);
}

#[test]
fn zero_episodes_flag_an_undefined_rate() {
    let dir = tempfile::tempdir().unwrap();
    assert!(train(dir.path(), "1").status.success());
    let ckpt = dir.path().join("train/checkpoint.spk");
    let o = run(&[
        "eval",
        "--config",
        dir.path().join("run.toml").to_str().unwrap(),
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--episodes",
        "0",
        "--out",
        dir.path().join("eval").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("undefined"));
}

#[test]
fn quantize_and_profile_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert!(train(dir.path(), "2").status.success());
    let cfg = dir.path().join("run.toml");
    let ckpt = dir.path().join("train/checkpoint.spk");
    let out = dir.path().join("q");
    let q = run(&[
        "quantize",
        "--config",
        cfg.to_str().unwrap(),
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--bits",
        "24",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(q.status.code().is_some_and(|c| c == 0 || c == 3), "{}", String::from_utf8_lossy(&q.stderr));
    assert!(out.join("quantized_24.spk").exists());
    let report = std::fs::read_to_string(out.join("quant_report_24.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    let max_dev = v["max_abs_deviation"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).fold(0.0, f64::max);
    assert!(max_dev < 1e-4, "24-bit deviation {max_dev}");

    let p = run(&[
        "profile",
        "--config",
        cfg.to_str().unwrap(),
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    let table = std::fs::read_to_string(out.join("profile.txt")).unwrap();
    assert!(table.contains("float64") && table.contains("9-bit"));
}

#[test]
fn missing_checkpoint_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["quantize", "--checkpoint", dir.path().join("nope.spk").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.spk"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "version = 1\n[train]\nepocs = 3\n").unwrap();
    let o = run(&["train", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epocs"));
}
