//! Stable JSONL row schemas emitted by the simulators and consumed by
//! `fit-tail` and external tooling.

use crate::branching::BranchingRun;
use crate::diffusion::DiffusionResult;
use crate::walk::{StopReason, WalkRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

/// One walk rep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkRow {
    pub rep: u64,
    pub seed: u64,
    /// `reached_level`, `horizon`, or `returned_to_origin`.
    pub stop_reason: String,
    /// Target level of the stop rule, when there was one.
    pub n: Option<i64>,
    /// First-passage time of `n`, when reached.
    #[serde(rename = "T_n")]
    pub t_n: Option<u64>,
    #[serde(rename = "X_final")]
    pub x_final: i64,
    pub steps_below_zero: u64,
}

impl WalkRow {
    pub fn from_record(rep: u64, target: Option<i64>, record: &WalkRecord) -> Self {
        let stop_reason = match record.stop_reason {
            StopReason::ReachedLevel { .. } => "reached_level",
            StopReason::HorizonExhausted { .. } => "horizon",
            StopReason::ReturnedToOrigin { .. } => "returned_to_origin",
        };
        WalkRow {
            rep,
            seed: record.seed,
            stop_reason: stop_reason.to_string(),
            n: target,
            t_n: target.and_then(|n| record.passage_time(n)),
            x_final: record.final_position,
            steps_below_zero: record.steps_below_zero,
        }
    }
}

/// One branching rep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchingRow {
    pub rep: u64,
    pub seed: u64,
    pub v0: u64,
    pub sigma0: Option<u64>,
    pub progeny: u64,
    pub censored: bool,
}

impl BranchingRow {
    pub fn from_run(rep: u64, run: &BranchingRun) -> Self {
        BranchingRow {
            rep,
            seed: run.seed,
            v0: run.v0,
            sigma0: run.sigma0,
            progeny: run.progeny,
            censored: run.censored,
        }
    }
}

/// One diffusion rep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffusionRow {
    pub rep: u64,
    pub seed: u64,
    pub tau0: Option<f64>,
    pub censored: bool,
    pub area: f64,
    pub level_hits: BTreeMap<String, Option<f64>>,
}

impl DiffusionRow {
    pub fn from_result(rep: u64, result: &DiffusionResult) -> Self {
        DiffusionRow {
            rep,
            seed: result.seed,
            tau0: result.tau0,
            censored: result.censored,
            area: result.area,
            level_hits: result
                .level_hits
                .iter()
                .map(|(l, t)| (format!("{l}"), *t))
                .collect(),
        }
    }
}

/// Write serializable rows as JSON lines.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Read one numeric field from every row of a JSONL file. Rows where the
/// field is `null` or absent are skipped and counted.
pub fn read_field(path: &Path, field: &str) -> std::io::Result<(Vec<f64>, usize)> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut values = Vec::new();
    let mut skipped = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let value = match field {
            // Derived field: sqrt of the area, the natural scale for the
            // area tail.
            "sqrt_area" => row.get("area").and_then(|v| v.as_f64()).map(f64::sqrt),
            _ => row.get(field).and_then(|v| v.as_f64()),
        };
        match value {
            Some(v) => values.push(v),
            None => skipped += 1,
        }
    }
    Ok((values, skipped))
}

/// Plot-ready survival curve: `threshold,survival` over a geometric grid.
pub fn write_survival_csv(
    path: &Path,
    samples: &[f64],
    range: (f64, f64),
    points: usize,
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "threshold,survival")?;
    for j in 0..points {
        let frac = j as f64 / (points.saturating_sub(1)).max(1) as f64;
        let t = range.0 * (range.1 / range.0).powf(frac);
        let exceed = sorted.len() - sorted.partition_point(|x| *x <= t);
        writeln!(out, "{t},{}", exceed as f64 / n)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn rows_round_trip_through_jsonl() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        let rows = vec![
            BranchingRow {
                rep: 0,
                seed: 1,
                v0: 0,
                sigma0: Some(3),
                progeny: 7,
                censored: false,
            },
            BranchingRow {
                rep: 1,
                seed: 2,
                v0: 0,
                sigma0: None,
                progeny: 100,
                censored: true,
            },
        ];
        write_rows(&path, &rows).unwrap();
        let (values, skipped) = read_field(&path, "sigma0").unwrap();
        assert_eq!(values, vec![3.0]);
        assert_eq!(skipped, 1);
        let (progeny, skipped) = read_field(&path, "progeny").unwrap();
        assert_eq!(progeny, vec![7.0, 100.0]);
        assert_eq!(skipped, 0);
    }

    #[test]
    fn survival_csv_has_header_and_grid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("survival.csv");
        let samples: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        write_survival_csv(&path, &samples, (1.0, 100.0), 5).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "threshold,survival");
        assert_eq!(lines.len(), 6);
        // Survival at threshold 1 is 99/100.
        assert!(lines[1].starts_with("1,"));
        assert!(lines[1].ends_with("0.99"));
    }
}
