//! Experiment orchestration: the acceptance registry, report files, seed
//! plumbing, and worker fan-out. This is the layer the `erw` binary talks
//! to.

pub mod jsonl;
pub mod registry;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown experiment id `{0}`; run `erw verify --list` for the registry")]
    UnknownExperiment(String),
    #[error("law error: {0}")]
    Law(#[from] crate::env::EnvError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

/// One threshold comparison inside an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable requirement, e.g. `in [1.20, 1.80]` or `< 0.01`.
    pub requirement: String,
    pub passed: bool,
}

impl Check {
    pub fn window(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.to_string(),
            measured,
            requirement: format!("in [{lo}, {hi}]"),
            passed: measured >= lo && measured <= hi,
        }
    }

    pub fn below(name: &str, measured: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            measured,
            requirement: format!("< {limit}"),
            passed: measured < limit,
        }
    }

    pub fn at_least(name: &str, measured: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            measured,
            requirement: format!(">= {limit}"),
            passed: measured >= limit,
        }
    }

    pub fn boolean(name: &str, ok: bool) -> Self {
        Check {
            name: name.to_string(),
            measured: f64::from(u8::from(ok)),
            requirement: "true".to_string(),
            passed: ok,
        }
    }
}

/// Result of one experiment. Everything except `runtime_secs` is a pure
/// function of `(experiment, seed)`, independent of the worker count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub title: String,
    pub seed: u64,
    pub passed: bool,
    /// Diagnostic experiments report pass/fail but do not gate the suite.
    pub gating: bool,
    pub checks: Vec<Check>,
    pub censoring: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    pub runtime_secs: f64,
}

impl Report {
    fn from_checks(
        id: &str,
        title: &str,
        seed: u64,
        gating: bool,
        checks: Vec<Check>,
        censoring: BTreeMap<String, u64>,
        notes: Vec<String>,
    ) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Report {
            experiment: id.to_string(),
            title: title.to_string(),
            seed,
            passed,
            gating,
            checks,
            censoring,
            notes,
            runtime_secs: 0.0,
        }
    }

    /// One-line summary: `AC03 extinction-time tail ............ pass`.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "pass" } else { "FAIL" };
        let tag = if self.gating { "" } else { " [diagnostic]" };
        let detail = self
            .checks
            .iter()
            .map(|c| format!("{}={:.4} ({})", c.name, c.measured, c.requirement))
            .collect::<Vec<_>>()
            .join("; ");
        format!(
            "{:<5} {:<38} {}{} | {} | {:.1}s",
            self.experiment, self.title, verdict, tag, detail, self.runtime_secs
        )
    }

    /// The report with the timing removed: this is the part that is
    /// bit-identical across runs and worker counts.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value
            .as_object_mut()
            .expect("report is an object")
            .remove("runtime_secs");
        value
    }
}

/// Inputs handed to an experiment runner.
pub struct ExperimentEnv {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentEnv {
    /// Path for an artifact of this experiment, if output is enabled.
    pub fn artifact(&self, name: &str) -> Option<PathBuf> {
        self.out_dir.as_ref().map(|d| d.join(name))
    }
}

/// A registered experiment: stable id, fixed seed, and a runner that
/// interprets its own sample sizes and thresholds.
pub struct ExperimentDef {
    pub id: &'static str,
    pub title: &'static str,
    pub default_seed: u64,
    pub gating: bool,
    runner: fn(&ExperimentEnv) -> Report,
}

impl ExperimentDef {
    pub fn run(&self, env: &ExperimentEnv) -> Report {
        let start = std::time::Instant::now();
        let mut report = (self.runner)(env);
        report.runtime_secs = start.elapsed().as_secs_f64();
        report
    }
}

/// Options shared by `verify` and `run_experiment`.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub workers: Option<usize>,
    pub write_files: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("out"),
            seed_override: None,
            workers: None,
            write_files: true,
        }
    }
}

fn in_worker_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => job(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("worker pool")
            .install(job),
    }
}

/// Run one experiment by id, writing `out/<id>/report.json` and any sample
/// files the runner emits.
pub fn run_experiment(id: &str, options: &RunOptions) -> Result<Report, HarnessError> {
    let def = registry::registry()
        .into_iter()
        .find(|d| d.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| HarnessError::UnknownExperiment(id.to_string()))?;
    let env = ExperimentEnv {
        seed: options.seed_override.unwrap_or(def.default_seed),
        out_dir: options
            .write_files
            .then(|| options.out_dir.join(def.id.to_lowercase())),
    };
    let report = in_worker_pool(options.workers, || def.run(&env));
    if let Some(dir) = &env.out_dir {
        write_report(dir, &report)?;
    }
    Ok(report)
}

/// Run the whole registry (optionally filtered by an id substring) in
/// deterministic order; partial failures do not abort the suite.
pub fn verify_all(filter: Option<&str>, options: &RunOptions) -> Result<Vec<Report>, HarnessError> {
    let mut reports = Vec::new();
    for def in registry::registry() {
        if let Some(f) = filter {
            if !def.id.eq_ignore_ascii_case(f) && !def.title.contains(f) {
                continue;
            }
        }
        let env = ExperimentEnv {
            seed: options.seed_override.unwrap_or(def.default_seed),
            out_dir: options
                .write_files
                .then(|| options.out_dir.join(def.id.to_lowercase())),
        };
        let report = in_worker_pool(options.workers, || def.run(&env));
        if let Some(dir) = &env.out_dir {
            write_report(dir, &report)?;
        }
        reports.push(report);
    }
    Ok(reports)
}

fn write_report(dir: &Path, report: &Report) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = std::fs::File::create(dir.join("report.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), report)?;
    Ok(())
}

/// Load previously written reports under `out/`.
pub fn load_reports(out_dir: &Path) -> Result<Vec<Report>, HarnessError> {
    let mut reports = Vec::new();
    if !out_dir.exists() {
        return Ok(reports);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(out_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let path = dir.join("report.json");
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            if let Ok(report) = serde_json::from_str::<Report>(&text) {
                reports.push(report);
            }
        }
    }
    Ok(reports)
}

/// Tail-fit report written by the `fit-tail` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub experiment: String,
    pub exponent: f64,
    pub stderr: f64,
    pub range: (f64, f64),
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_are_unique_and_cover_all_criteria() {
        let defs = registry::registry();
        assert_eq!(defs.len(), 15);
        let mut ids: Vec<&str> = defs.iter().map(|d| d.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 15);
        for i in 1..=15 {
            assert!(
                defs.iter().any(|d| d.id == format!("AC{i}")),
                "missing AC{i}"
            );
        }
    }

    #[test]
    fn unknown_experiment_is_an_error() {
        let options = RunOptions {
            write_files: false,
            ..Default::default()
        };
        assert!(matches!(
            run_experiment("AC99", &options),
            Err(HarnessError::UnknownExperiment(_))
        ));
    }

    #[test]
    fn check_constructors() {
        assert!(Check::window("x", 1.5, 1.2, 1.8).passed);
        assert!(!Check::window("x", 2.0, 1.2, 1.8).passed);
        assert!(Check::below("x", 0.005, 0.01).passed);
        assert!(Check::at_least("x", 0.96, 0.95).passed);
        assert!(!Check::boolean("x", false).passed);
    }
}
