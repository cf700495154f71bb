use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use pod_core::driver::PodConfig;
use pod_core::features::ObservabilityMode;
use pod_core::harness::{write_experiment, write_trace, TraceDumps};
use pod_core::theory::run_suite;

#[derive(Parser)]
#[command(name = "pod", about = "Purposeful option discovery on a ring world")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-seed experiment: writes table1.csv, report.json and the
    /// base-seed trajectory.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 30)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Single run: trajectory with and without options, per-phase purposes.
    Trace {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write option_<id>.csv for every discovered option.
        #[arg(long)]
        dump_options: bool,
        /// Also write dataset_phase<k>.csv difference logs.
        #[arg(long)]
        dump_datasets: bool,
    },
    /// Random-instance checks of the termination bounds.
    Verify {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ring_length: Option<u64>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    observability: Option<ObservabilityMode>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    vi_sweeps: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PodConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => PodConfig::default(),
        };
        if let Some(v) = self.ring_length {
            cfg.ring_length = v;
        }
        if let Some(v) = self.bits {
            cfg.bits = v;
        }
        if let Some(v) = self.observability {
            cfg.observability = v;
        }
        if let Some(v) = self.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.vi_sweeps {
            cfg.vi_sweeps = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"))
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            runs,
            workers,
            out,
        } => {
            let cfg = config.resolve()?;
            let (report, art) = write_experiment(&cfg, runs, cfg.seed, workers, &out)?;
            println!(
                "[run] {} runs, {} observability, seeds {}..{}",
                report.runs,
                cfg.observability,
                cfg.seed,
                cfg.seed + runs as u64 - 1
            );
            println!("phase  new_options      avg_length       max_dist");
            for p in &report.phases {
                println!(
                    "{:>5}  {:>6} ({:>5})  {:>6} ({:>5})  {:>6.1} ({:>5.1})",
                    p.phase,
                    fmt_opt(p.new_options.map(|s| s.mean)),
                    fmt_opt(p.new_options.map(|s| s.std)),
                    fmt_opt(p.avg_option_length.map(|s| s.mean)),
                    fmt_opt(p.avg_option_length.map(|s| s.std)),
                    p.max_dist_from_start.mean,
                    p.max_dist_from_start.std,
                );
            }
            println!(
                "[run] {} options checked, all termination sets nonempty: {}",
                report.options_checked,
                report.all_terminations_nonempty()
            );
            println!("[run] wrote {} and {}", art.table.display(), art.report.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace {
            config,
            out,
            dump_options,
            dump_datasets,
        } => {
            let cfg = config.resolve()?;
            let ring = cfg.ring()?;
            let dumps = TraceDumps {
                options: dump_options,
                datasets: dump_datasets,
            };
            let (outcome, art) = write_trace(&cfg, &out, dumps)?;
            for (t, added) in outcome.traces.iter().zip(&outcome.new_options) {
                println!(
                    "phase {}: start {:>6}  max_dist {:>5}  executions {:>4}  avg_length {:>6}  options_from_phase {}",
                    t.phase,
                    t.start,
                    t.max_dist_from_start(ring),
                    t.invocations.len(),
                    fmt_opt(t.avg_option_length()),
                    added
                );
            }
            println!("[trace] wrote {}", art.trajectory.display());
            println!("[trace] wrote {}", art.control.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { instances, seed } => {
            let results = run_suite(instances, seed)?;
            let mut ok = true;
            for r in &results {
                println!(
                    "{} {:<24} instances={} failures={} worst_slack={:.3e}",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.name,
                    r.instances,
                    r.failures,
                    r.worst_slack
                );
                ok &= r.passed();
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
