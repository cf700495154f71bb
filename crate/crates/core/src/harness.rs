//! Multi-seed experiments, per-phase metrics and their file formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{run_pod, run_primitive_walk, ChoiceKind, PhaseTrace, PodConfig, PodOutcome};
use crate::error::{PodError, Result};
use crate::purpose::write_purposes_csv;
use crate::ring::Ring;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMetrics {
    pub phase: usize,
    /// Options discovered from the previous phase's data, i.e. newly
    /// available during this phase. `None` for phase 0.
    pub new_options: Option<usize>,
    pub option_executions: usize,
    /// `None` when no option ran during the phase.
    pub avg_option_length: Option<f64>,
    pub max_dist_from_start: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub phases: Vec<PhaseMetrics>,
    /// Options found from the final phase's data (never executed).
    pub trailing_new_options: usize,
    pub total_options: usize,
    /// Largest `min_s max_a q(s, a)` over every option built in the run.
    /// At most the initiation margin iff every termination set is nonempty.
    pub worst_min_best_q: Option<f64>,
}

pub fn run_metrics(seed: u64, ring: Ring, outcome: &PodOutcome) -> RunMetrics {
    let phases = outcome
        .traces
        .iter()
        .map(|t| PhaseMetrics {
            phase: t.phase,
            new_options: t.phase.checked_sub(1).map(|k| outcome.new_options[k]),
            option_executions: t.invocations.len(),
            avg_option_length: t.avg_option_length(),
            max_dist_from_start: t.max_dist_from_start(ring),
        })
        .collect();
    let worst_min_best_q = outcome
        .options
        .iter()
        .map(|o| o.qtable().min_best_primitive())
        .reduce(f64::max);
    RunMetrics {
        seed,
        phases,
        trailing_new_options: outcome.new_options.last().copied().unwrap_or(0),
        total_options: outcome.options.len(),
        worst_min_best_q,
    }
}

/// Mean and sample standard deviation; std is 0 for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Some(Stat { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAggregate {
    pub phase: usize,
    pub new_options: Option<Stat>,
    pub avg_option_length: Option<Stat>,
    /// Runs left out of the length average because no option ran.
    pub length_excluded_runs: usize,
    pub max_dist_from_start: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub config: PodConfig,
    pub runs: usize,
    pub base_seed: u64,
    pub phases: Vec<PhaseAggregate>,
    pub total_options: Stat,
    pub options_checked: usize,
    pub worst_min_best_q: Option<f64>,
    pub per_run: Vec<RunMetrics>,
}

impl AggregateReport {
    /// Every option of every run had a nonempty termination set.
    pub fn all_terminations_nonempty(&self) -> bool {
        self.worst_min_best_q.is_none_or(|q| q <= self.config.eps_q)
    }
}

/// Aggregates per-run metrics. Runs are reduced in seed order, so the
/// result does not depend on the order of `metrics`.
pub fn aggregate(config: &PodConfig, base_seed: u64, metrics: &[RunMetrics]) -> Result<AggregateReport> {
    if metrics.is_empty() {
        return Err(PodError::InvalidConfig("need at least one run".into()));
    }
    let mut sorted: Vec<RunMetrics> = metrics.to_vec();
    sorted.sort_by_key(|m| m.seed);
    let n_phases = sorted[0].phases.len();
    if sorted.iter().any(|m| m.phases.len() != n_phases) {
        return Err(PodError::contract("runs disagree on phase count"));
    }

    let phases = (0..n_phases)
        .map(|k| {
            let column = |f: &dyn Fn(&PhaseMetrics) -> Option<f64>| -> Vec<f64> {
                sorted.iter().filter_map(|m| f(&m.phases[k])).collect()
            };
            let lengths = column(&|p| p.avg_option_length);
            let dists = column(&|p| Some(p.max_dist_from_start as f64));
            PhaseAggregate {
                phase: k,
                new_options: Stat::of(&column(&|p| p.new_options.map(|c| c as f64))),
                length_excluded_runs: sorted.len() - lengths.len(),
                avg_option_length: Stat::of(&lengths),
                max_dist_from_start: Stat::of(&dists).expect("at least one run"),
            }
        })
        .collect();

    let totals: Vec<f64> = sorted.iter().map(|m| m.total_options as f64).collect();
    Ok(AggregateReport {
        config: config.clone(),
        runs: sorted.len(),
        base_seed,
        phases,
        total_options: Stat::of(&totals).expect("at least one run"),
        options_checked: sorted.iter().map(|m| m.total_options).sum(),
        worst_min_best_q: sorted.iter().filter_map(|m| m.worst_min_best_q).reduce(f64::max),
        per_run: sorted,
    })
}

/// Runs seeds `base_seed .. base_seed + runs` on up to `workers` threads.
pub fn run_experiment(cfg: &PodConfig, runs: usize, base_seed: u64, workers: usize) -> Result<AggregateReport> {
    if runs == 0 {
        return Err(PodError::InvalidConfig("runs must be >= 1".into()));
    }
    cfg.validate()?;
    let ring = cfg.ring()?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| base_seed + i).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PodError::InvalidConfig(format!("thread pool: {e}")))?;
    let metrics: Vec<RunMetrics> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| run_pod(&cfg.with_seed(seed)).map(|out| run_metrics(seed, ring, &out)))
            .collect::<Result<_>>()
    })?;
    aggregate(cfg, base_seed, &metrics)
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| PodError::io(path, e))
}

fn fmt_stat(s: Option<Stat>) -> [String; 2] {
    match s {
        Some(s) => [format!("{:.1}", s.mean), format!("{:.1}", s.std)],
        None => ["-".into(), "-".into()],
    }
}

/// Table-shaped CSV: one row per metric, a mean and std column per phase.
pub fn write_table1_csv(report: &AggregateReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PodError::csv(path, e))?;
    let mut header = vec!["observability".to_string(), "metric".to_string()];
    for p in &report.phases {
        header.push(format!("iter{}_mean", p.phase));
        header.push(format!("iter{}_std", p.phase));
    }
    w.write_record(&header).map_err(|e| PodError::csv(path, e))?;

    let rows: [(&str, Box<dyn Fn(&PhaseAggregate) -> Option<Stat>>); 3] = [
        ("num_options_discovered", Box::new(|p| p.new_options)),
        ("avg_option_length", Box::new(|p| p.avg_option_length)),
        ("max_dist_from_start", Box::new(|p| Some(p.max_dist_from_start))),
    ];
    for (name, get) in rows {
        let mut rec = vec![report.config.observability.to_string(), name.to_string()];
        for p in &report.phases {
            rec.extend(fmt_stat(get(p)));
        }
        w.write_record(&rec).map_err(|e| PodError::csv(path, e))?;
    }
    w.flush().map_err(|e| PodError::io(path, e))
}

pub fn write_report_json(report: &AggregateReport, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f).map_err(|e| PodError::io(path, e))
}

/// One row per primitive step: `run, phase, t, position, choice_kind,
/// option_id`. `t` counts steps from the start of the run.
pub fn emit_trajectory(run: u64, traces: &[PhaseTrace], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PodError::csv(path, e))?;
    w.write_record(["run", "phase", "t", "position", "choice_kind", "option_id"])
        .map_err(|e| PodError::csv(path, e))?;
    let mut t = 0usize;
    for trace in traces {
        for step in &trace.steps {
            t += 1;
            let kind = match step.kind {
                ChoiceKind::Primitive => "primitive",
                ChoiceKind::Option => "option",
            };
            w.write_record([
                run.to_string(),
                trace.phase.to_string(),
                t.to_string(),
                step.position.to_string(),
                kind.to_string(),
                step.option_id.map(|id| id.to_string()).unwrap_or_default(),
            ])
            .map_err(|e| PodError::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| PodError::io(path, e))
}

pub fn trajectory_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trajectory_{seed}.csv"))
}

pub fn control_trajectory_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trajectory_{seed}_control.csv"))
}

/// Files written for a single traced run.
#[derive(Debug, Clone, Default)]
pub struct TraceArtifacts {
    pub trajectory: PathBuf,
    pub control: PathBuf,
    pub purposes: Vec<PathBuf>,
    pub options: Vec<PathBuf>,
    pub datasets: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TraceDumps {
    pub options: bool,
    pub datasets: bool,
}

/// Runs one seed with and without discovery and writes its trajectories and
/// per-phase purposes into `dir`.
pub fn write_trace(cfg: &PodConfig, dir: &Path, dumps: TraceDumps) -> Result<(PodOutcome, TraceArtifacts)> {
    fs::create_dir_all(dir).map_err(|e| PodError::io(dir, e))?;
    let outcome = run_pod(cfg)?;
    let control = run_primitive_walk(cfg)?;
    let dim = cfg.codec()?.dim();

    let mut art = TraceArtifacts {
        trajectory: trajectory_path(dir, cfg.seed),
        control: control_trajectory_path(dir, cfg.seed),
        ..TraceArtifacts::default()
    };
    emit_trajectory(cfg.seed, &outcome.traces, &art.trajectory)?;
    emit_trajectory(cfg.seed, &control, &art.control)?;
    for (k, purposes) in outcome.purposes.iter().enumerate() {
        let path = dir.join(format!("purposes_phase{k}.csv"));
        write_purposes_csv(&path, purposes, dim)?;
        art.purposes.push(path);
    }
    if dumps.options {
        for o in outcome.options.iter() {
            let path = dir.join(format!("option_{}.csv", o.id));
            o.write_csv(&path)?;
            art.options.push(path);
        }
    }
    if dumps.datasets {
        for d in &outcome.datasets {
            let path = dir.join(format!("dataset_phase{}.csv", d.phase_index()));
            d.write_csv(&path)?;
            art.datasets.push(path);
        }
    }
    Ok((outcome, art))
}

/// Paths produced by [`write_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentArtifacts {
    pub table: PathBuf,
    pub report: PathBuf,
    pub trace: TraceArtifacts,
}

/// Full experiment: aggregate table and report, plus the trajectory and
/// purposes of the base-seed run.
pub fn write_experiment(
    cfg: &PodConfig,
    runs: usize,
    base_seed: u64,
    workers: usize,
    dir: &Path,
) -> Result<(AggregateReport, ExperimentArtifacts)> {
    fs::create_dir_all(dir).map_err(|e| PodError::io(dir, e))?;
    let report = run_experiment(cfg, runs, base_seed, workers)?;
    let table = dir.join("table1.csv");
    let json = dir.join("report.json");
    write_table1_csv(&report, &table)?;
    write_report_json(&report, &json)?;
    let (_, trace) = write_trace(&cfg.with_seed(base_seed), dir, TraceDumps::default())?;
    Ok((
        report,
        ExperimentArtifacts {
            table,
            report: json,
            trace,
        },
    ))
}
