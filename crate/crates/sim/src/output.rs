//! CSV writers. Floats use Rust's shortest round-trip formatting, so the same
//! campaign always produces the same bytes.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use toaloc_core::scenario::{ErrorStats, MeasuredPoint, PointResult};

use crate::error::SimError;
use crate::sweep::SweepRow;

fn buffer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn bytes(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer cannot fail")
}

fn write_bytes(path: &Path, data: &[u8]) -> Result<(), SimError> {
    let mut f = File::create(path).map_err(|e| SimError::io(path, e))?;
    f.write_all(data).map_err(|e| SimError::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finite(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

pub fn points_csv(results: &[PointResult]) -> Result<Vec<u8>, SimError> {
    let mut w = buffer();
    w.write_record([
        "point_id",
        "true_x",
        "true_y",
        "est_x",
        "est_y",
        "error_m",
        "n_detected",
        "status",
        "chosen_subset",
        "residual",
    ])?;
    for r in results {
        let ok = r.fix.is_ok();
        let subset = r
            .chosen_stations()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.point_id.to_string(),
            r.true_pos.x.to_string(),
            r.true_pos.y.to_string(),
            opt(ok.then_some(r.fix.position.x)),
            opt(ok.then_some(r.fix.position.y)),
            opt(r.error_m),
            r.n_detected.to_string(),
            r.fix.status.as_str().to_string(),
            subset,
            opt(ok.then_some(r.fix.residual)),
        ])?;
    }
    Ok(bytes(w))
}

pub fn write_points(path: &Path, results: &[PointResult]) -> Result<(), SimError> {
    write_bytes(path, &points_csv(results)?)
}

const STATS_HEADER: [&str; 5] = ["mean_m", "std_m", "p95_m", "n_points", "n_unavailable"];

fn stats_fields(s: &ErrorStats) -> [String; 5] {
    [
        finite(s.mean_m),
        finite(s.std_m),
        finite(s.p95_m),
        s.n_points.to_string(),
        s.n_unavailable.to_string(),
    ]
}

pub fn summary_csv(stats: &ErrorStats) -> Result<Vec<u8>, SimError> {
    let mut w = buffer();
    w.write_record(STATS_HEADER)?;
    w.write_record(stats_fields(stats))?;
    Ok(bytes(w))
}

pub fn write_summary(path: &Path, stats: &ErrorStats) -> Result<(), SimError> {
    write_bytes(path, &summary_csv(stats)?)
}

/// One line per sweep cell: the swept parameter values, then the statistics.
pub fn sweep_csv(names: &[&str], rows: &[SweepRow]) -> Result<Vec<u8>, SimError> {
    let mut w = buffer();
    let header: Vec<&str> = names
        .iter()
        .copied()
        .chain(["mean_m", "std_m", "p95_m", "n_unavailable"])
        .collect();
    w.write_record(&header)?;
    for row in rows {
        let s = &row.stats;
        let rec: Vec<String> = row
            .values
            .iter()
            .map(f64::to_string)
            .chain([
                finite(s.mean_m),
                finite(s.std_m),
                finite(s.p95_m),
                s.n_unavailable.to_string(),
            ])
            .collect();
        w.write_record(&rec)?;
    }
    Ok(bytes(w))
}

pub fn write_sweep(path: &Path, names: &[&str], rows: &[SweepRow]) -> Result<(), SimError> {
    write_bytes(path, &sweep_csv(names, rows)?)
}

/// Long-format dump of every averaged profile: one row per tap.
pub fn write_pdp(path: &Path, measured: &[MeasuredPoint]) -> Result<(), SimError> {
    let file = File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["point_id", "station", "rank", "los", "tap", "z"])?;
    for m in measured {
        for s in &m.measurements {
            for (tap, z) in s.pdp.z.iter().enumerate() {
                w.write_record([
                    m.point_id.to_string(),
                    s.station.to_string(),
                    s.rank.to_string(),
                    u8::from(s.los).to_string(),
                    tap.to_string(),
                    z.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| SimError::io(path, e))
}

/// The one-line summary printed after a campaign.
pub fn summary_line(stats: &ErrorStats) -> String {
    format!(
        "mean_m={} std_m={} p95_m={} n_points={} n_unavailable={}",
        finite(stats.mean_m),
        finite(stats.std_m),
        finite(stats.p95_m),
        stats.n_points,
        stats.n_unavailable
    )
}
