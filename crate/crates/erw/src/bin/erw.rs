//! Thin command-line front end over the library: run simulations to JSONL,
//! fit tails from JSONL, and drive the acceptance experiment registry.
//!
//! Exit codes: 0 success / all gating checks passed, 1 experiment failure,
//! 2 usage or configuration error.

use clap::{Args, Parser, Subcommand};
use erw::branching::{run_to_extinction, BranchingConfig};
use erw::diffusion::{simulate_y, DiffusionConfig};
use erw::env::EnvironmentLaw;
use erw::harness::jsonl::{self, BranchingRow, DiffusionRow, WalkRow};
use erw::harness::{self, FitReport, RunOptions};
use erw::rng::{context_id, stream_seed};
use erw::stats::{fit_tail_exponent, TailFitConfig, TailMethod};
use erw::walk::{simulate_walk, StopRule, WalkConfig};
use rayon::prelude::*;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "erw",
    about = "Excited random walk simulation and verification toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulator and write one JSONL row per rep.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Fit a tail exponent to a field of a JSONL sample file.
    FitTail(FitTailArgs),
    /// Run the acceptance experiment registry.
    Verify(VerifyArgs),
    /// Summarize previously written experiment reports.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Excited random walk trajectories.
    Walk(WalkArgs),
    /// Branching-process extinction runs.
    Bp(BpArgs),
    /// Diffusion paths.
    Sde(SdeArgs),
}

#[derive(Args)]
struct CommonSimArgs {
    /// Number of independent reps.
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    /// Master seed; rep r uses a stream derived from (seed, command, r).
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Output directory for samples.jsonl.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct WalkArgs {
    /// Law file (TOML with keys M and atoms).
    #[arg(long)]
    law: PathBuf,
    /// Stop at the first passage of this level.
    #[arg(long)]
    level: Option<i64>,
    /// Stop after this many steps.
    #[arg(long)]
    horizon: Option<u64>,
    #[command(flatten)]
    common: CommonSimArgs,
}

#[derive(Args)]
struct BpArgs {
    #[arg(long)]
    law: PathBuf,
    /// Starting population.
    #[arg(long, default_value_t = 0)]
    v0: u64,
    /// Generation cap (censoring).
    #[arg(long, default_value_t = 10_000_000)]
    cap_generations: u64,
    /// Progeny cap (censoring).
    #[arg(long, default_value_t = 10_000_000_000)]
    cap_progeny: u64,
    #[command(flatten)]
    common: CommonSimArgs,
}

#[derive(Args)]
struct SdeArgs {
    /// Drift parameter of the diffusion.
    #[arg(long)]
    delta: f64,
    /// Starting point.
    #[arg(long, default_value_t = 1.0)]
    y0: f64,
    /// Euler-Maruyama step (default 1e-4 * max(y0, 1)).
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon (default 1000 * y0).
    #[arg(long)]
    t_max: Option<f64>,
    /// Comma-separated monitored levels, e.g. "0.5,2".
    #[arg(long, value_delimiter = ',')]
    levels: Vec<f64>,
    /// Stop paths at the first monitored level hit.
    #[arg(long)]
    stop_on_levels: bool,
    #[command(flatten)]
    common: CommonSimArgs,
}

#[derive(Args)]
struct FitTailArgs {
    /// JSONL sample file (rows from `simulate`).
    #[arg(long)]
    input: PathBuf,
    /// Field to fit: sigma0, progeny, tau0, area, sqrt_area, T_n, ...
    #[arg(long)]
    field: String,
    /// hill or survival.
    #[arg(long, default_value = "survival")]
    method: String,
    /// Lower threshold of the fit range.
    #[arg(long)]
    lo: Option<f64>,
    /// Upper threshold of the fit range.
    #[arg(long)]
    hi: Option<f64>,
    /// Expected exponent window (sets the `pass` field).
    #[arg(long)]
    expect_lo: Option<f64>,
    #[arg(long)]
    expect_hi: Option<f64>,
    /// Label recorded in the fit report.
    #[arg(long, default_value = "fit-tail")]
    experiment: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run a single experiment id (e.g. AC3).
    #[arg(long)]
    only: Option<String>,
    /// Master seed override for every experiment.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// List registry entries and exit.
    #[arg(long)]
    list: bool,
    /// Skip writing report/sample files.
    #[arg(long)]
    no_files: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Simulate(sim) => simulate(sim),
        Command::FitTail(args) => fit_tail(args),
        Command::Verify(args) => verify(args),
        Command::Report(args) => report(args),
    }
}

fn install_pool(workers: Option<usize>) {
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn simulate(command: SimulateCommand) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match command {
        SimulateCommand::Walk(args) => {
            install_pool(args.common.workers);
            let law = EnvironmentLaw::from_path(&args.law)?;
            let stop = match (args.level, args.horizon) {
                (Some(level), horizon) => StopRule::FirstPassage { level, horizon },
                (None, Some(horizon)) => StopRule::Horizon(horizon),
                (None, None) => {
                    return Err("walk needs --level and/or --horizon".into());
                }
            };
            let config = WalkConfig {
                stop,
                ..Default::default()
            };
            let ctx = context_id("cli.simulate.walk");
            let rows: Vec<WalkRow> = (0..args.common.reps)
                .into_par_iter()
                .map(|rep| {
                    let record =
                        simulate_walk(&law, &config, stream_seed(args.common.seed, ctx, rep));
                    WalkRow::from_record(rep, args.level, &record)
                })
                .collect();
            let path = args.common.out.join("walk").join("samples.jsonl");
            jsonl::write_rows(&path, &rows)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        SimulateCommand::Bp(args) => {
            install_pool(args.common.workers);
            let law = EnvironmentLaw::from_path(&args.law)?;
            let config = BranchingConfig {
                max_generations: args.cap_generations,
                max_progeny: args.cap_progeny,
                ..Default::default()
            };
            let ctx = context_id("cli.simulate.bp");
            let rows: Vec<BranchingRow> = (0..args.common.reps)
                .into_par_iter()
                .map(|rep| {
                    let run = run_to_extinction(
                        &law,
                        args.v0,
                        &config,
                        stream_seed(args.common.seed, ctx, rep),
                    );
                    BranchingRow::from_run(rep, &run)
                })
                .collect();
            let censored = rows.iter().filter(|r| r.censored).count();
            let path = args.common.out.join("bp").join("samples.jsonl");
            jsonl::write_rows(&path, &rows)?;
            println!(
                "wrote {} rows to {} ({censored} censored)",
                rows.len(),
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        SimulateCommand::Sde(args) => {
            install_pool(args.common.workers);
            let mut config = DiffusionConfig::new(args.delta, args.y0);
            if let Some(dt) = args.dt {
                config.dt = dt;
            }
            if let Some(t_max) = args.t_max {
                config.t_max = t_max;
            }
            let mut levels = args.levels.clone();
            levels.sort_unstable_by(f64::total_cmp);
            config.levels = levels;
            config.stop_on_levels = args.stop_on_levels;
            config.validate()?;
            let ctx = context_id("cli.simulate.sde");
            let rows: Vec<DiffusionRow> = (0..args.common.reps)
                .into_par_iter()
                .map(|rep| {
                    let result = simulate_y(&config, stream_seed(args.common.seed, ctx, rep));
                    DiffusionRow::from_result(rep, &result)
                })
                .collect();
            let path = args.common.out.join("sde").join("samples.jsonl");
            jsonl::write_rows(&path, &rows)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn fit_tail(args: FitTailArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let method = match args.method.as_str() {
        "hill" => TailMethod::Hill,
        "survival" | "loglog_survival" => TailMethod::LoglogSurvival,
        other => return Err(format!("unknown method `{other}` (hill|survival)").into()),
    };
    let (values, skipped) = jsonl::read_field(&args.input, &args.field)?;
    if values.is_empty() {
        return Err(
            format!("no usable `{}` values in {}", args.field, args.input.display()).into(),
        );
    }
    let range = match (args.lo, args.hi) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => return Err("--lo and --hi must be given together".into()),
    };
    let fit = fit_tail_exponent(
        &values,
        method,
        &TailFitConfig {
            range,
            ..Default::default()
        },
    )?;
    let pass = args.expect_lo.map_or(true, |lo| fit.exponent >= lo)
        && args.expect_hi.map_or(true, |hi| fit.exponent <= hi);
    let report = FitReport {
        experiment: args.experiment.clone(),
        exponent: fit.exponent,
        stderr: fit.stderr,
        range: fit.range,
        pass,
    };
    let dir = args.out.join(&args.experiment);
    std::fs::create_dir_all(&dir)?;
    let report_path = dir.join("fit.json");
    serde_json::to_writer_pretty(std::fs::File::create(&report_path)?, &report)?;
    jsonl::write_survival_csv(&dir.join("survival.csv"), &values, fit.range, 40)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    for warning in &fit.warnings {
        eprintln!("warning ({skipped} rows skipped): {warning}");
    }
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn verify(args: VerifyArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if args.list {
        for def in harness::registry::registry() {
            let tag = if def.gating { "" } else { " [diagnostic]" };
            println!("{:<5} {}{tag}", def.id, def.title);
        }
        return Ok(ExitCode::SUCCESS);
    }
    let options = RunOptions {
        out_dir: args.out,
        seed_override: args.seed,
        workers: args.workers,
        write_files: !args.no_files,
    };
    let mut gating_failures = 0;
    let mut matched = 0;
    for def in harness::registry::registry() {
        if let Some(only) = &args.only {
            if !def.id.eq_ignore_ascii_case(only) {
                continue;
            }
        }
        matched += 1;
        let report = harness::run_experiment(def.id, &options)?;
        println!("{}", report.summary_line());
        if report.gating && !report.passed {
            gating_failures += 1;
        }
    }
    if matched == 0 {
        if let Some(only) = &args.only {
            eprintln!("error: unknown experiment id `{only}`; registry:");
            for def in harness::registry::registry() {
                eprintln!("  {:<5} {}", def.id, def.title);
            }
            return Ok(ExitCode::from(2));
        }
        println!("nothing to run");
    }
    Ok(if gating_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn report(args: ReportArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let reports = harness::load_reports(&args.out)?;
    if reports.is_empty() {
        println!("no reports under {}", args.out.display());
        return Ok(ExitCode::SUCCESS);
    }
    let mut gating_failures = 0;
    for report in &reports {
        println!("{}", report.summary_line());
        if report.gating && !report.passed {
            gating_failures += 1;
        }
    }
    println!(
        "{} experiments, {} gating failures",
        reports.len(),
        gating_failures
    );
    Ok(if gating_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
