//! CSV outputs. Every file ends with a `# config-sha256: <hex>` footer line
//! identifying the configuration that produced it.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::profile::{mean_std, ProfileRow};
use crate::rl::{CurvePoint, EpisodeRecord};
use crate::Result;

fn write_rows<T: Serialize, W: Write>(out: W, rows: &[T], headers: &[&str], config_hash: &str) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(headers).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let mut inner = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    writeln!(inner, "# config-sha256: {config_hash}")?;
    inner.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Format(format!("csv: {e}"))
}

fn write_file<T: Serialize>(path: &Path, rows: &[T], headers: &[&str], config_hash: &str) -> Result<()> {
    write_rows(std::io::BufWriter::new(std::fs::File::create(path)?), rows, headers, config_hash)
}

#[derive(Serialize)]
struct CurveRow {
    epoch: usize,
    seed: u64,
    mean_return: f64,
    success_rate: f64,
}

/// Learning curve: `epoch, seed, mean_return, success_rate`.
pub fn write_learning_curve(path: &Path, curve: &[CurvePoint], config_hash: &str) -> Result<()> {
    let rows: Vec<CurveRow> = curve
        .iter()
        .map(|p| CurveRow { epoch: p.epoch, seed: p.seed, mean_return: p.mean_return, success_rate: p.success_rate })
        .collect();
    write_file(path, &rows, &["epoch", "seed", "mean_return", "success_rate"], config_hash)
}

/// Per-epoch mean and standard deviation across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub epoch: usize,
    pub seeds: usize,
    pub mean_return_mean: f64,
    pub mean_return_std: f64,
    pub success_rate_mean: f64,
    pub success_rate_std: f64,
}

pub fn aggregate_curves(curves: &[Vec<CurvePoint>]) -> Vec<AggregateRow> {
    let epochs = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    (0..epochs)
        .map(|e| {
            let returns: Vec<f64> = curves.iter().map(|c| c[e].mean_return).collect();
            let rates: Vec<f64> = curves.iter().map(|c| c[e].success_rate).collect();
            let (rm, rs) = mean_std(&returns);
            let (sm, ss) = mean_std(&rates);
            AggregateRow {
                epoch: e,
                seeds: curves.len(),
                mean_return_mean: rm,
                mean_return_std: rs,
                success_rate_mean: sm,
                success_rate_std: ss,
            }
        })
        .collect()
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow], config_hash: &str) -> Result<()> {
    let headers = ["epoch", "seeds", "mean_return_mean", "mean_return_std", "success_rate_mean", "success_rate_std"];
    write_file(path, rows, &headers, config_hash)
}

#[derive(Serialize)]
struct EvalRow {
    seed: u64,
    success: u8,
    time_to_insertion: Option<f64>,
    total_return: f64,
    interactions: usize,
    friction: f64,
    start_offset: f64,
}

/// One row per evaluation episode.
pub fn write_eval(path: &Path, records: &[EpisodeRecord], config_hash: &str) -> Result<()> {
    let rows: Vec<EvalRow> = records
        .iter()
        .map(|r| EvalRow {
            seed: r.seed,
            success: r.success() as u8,
            time_to_insertion: r.time_to_insertion,
            total_return: r.total_return,
            interactions: r.interactions(),
            friction: r.friction,
            start_offset: r.start_offset,
        })
        .collect();
    let headers = ["seed", "success", "time_to_insertion", "total_return", "interactions", "friction", "start_offset"];
    write_file(path, &rows, &headers, config_hash)
}

/// Per-decision trace of one episode: time, resulting pose, sensed wrench, action.
pub fn write_trace<W: Write>(out: W, record: &EpisodeRecord, config_hash: &str) -> Result<()> {
    let headers = [
        "t", "x", "y", "z", "qw", "qx", "qy", "qz", "fx", "fy", "fz", "tx", "ty", "tz", "a0", "a1", "a2", "a3", "a4", "a5",
        "reward",
    ];
    let rows: Vec<Vec<f64>> = record
        .decisions
        .iter()
        .map(|d| {
            let q = d.pose.orientation.quaternion();
            let mut row = vec![d.time, d.pose.position.x, d.pose.position.y, d.pose.position.z, q.w, q.i, q.j, q.k];
            row.extend(d.ft.force.iter().chain(d.ft.torque.iter()));
            row.extend(d.action.0);
            row.push(d.reward);
            row
        })
        .collect();
    write_rows(out, &rows, &headers, config_hash)
}

/// Energy/latency table rows.
pub fn write_profile(path: &Path, rows: &[ProfileRow], config_hash: &str) -> Result<()> {
    let headers = ["hardware", "energy_uj_mean", "energy_uj_std", "latency_ms_mean", "latency_ms_std"];
    write_file(path, rows, &headers, config_hash)
}
