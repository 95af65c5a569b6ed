use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use lqg_lab::pipeline::{parse_float_list, parse_int_list};
use lqg_lab::{
    cmd_analyze, cmd_run_heat, cmd_sample_field, cmd_sample_fields, cmd_sweep, LabError,
    RunConfig, SweepAxes,
};

#[derive(Parser)]
#[command(name = "lqg", version, about = "Heat flow on discrete Liouville quantum gravity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a free field and write field.grid, field.json, highpoints.csv.
    SampleField {
        #[command(flatten)]
        common: Common,
        /// Seeds as `a..b`, `a..=b` or `s1,s2,...`; one seed_<s> directory each.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Evolve the heat equation from each configured start point.
    RunHeat {
        #[command(flatten)]
        common: Common,
    },
    /// Analyze a trajectory directory, or every start_* directory of a run.
    /// Without --config, the config.json echoed into that directory is used.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, alias = "trajectory_dir")]
        trajectory_dir: PathBuf,
    },
    /// Independent runs over seeds × gammas × ranks, aggregated into sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: String,
        /// Comma-separated gamma values; defaults to the config's gamma.
        #[arg(long)]
        gammas: Option<String>,
        /// Start ranks as `a..b`, `a..=b` or a list; defaults to 1.
        #[arg(long, default_value = "1")]
        ranks: String,
        /// Concurrent runs; defaults to the number of logical cores.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat JSON config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn parse_point(s: &str) -> Result<[usize; 2], String> {
    let v: Vec<usize> = parse_int_list(s)?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err("expected `a,b`".into()),
    }
}

/// One flag per config key.
#[derive(Args, Serialize)]
struct Overrides {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[arg(long, alias = "total_steps")]
    #[serde(skip_serializing_if = "Option::is_none")]
    total_steps: Option<usize>,
    #[arg(long, alias = "snapshot_stride")]
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_stride: Option<usize>,
    #[arg(long, alias = "log_snapshots")]
    #[serde(skip_serializing_if = "Option::is_none")]
    log_snapshots: Option<usize>,
    /// highest-k, explicit or random.
    #[arg(long, alias = "start_mode")]
    #[serde(skip_serializing_if = "Option::is_none")]
    start_mode: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    /// `a,b`.
    #[arg(long, alias = "start_point", value_parser = parse_point)]
    #[serde(skip_serializing_if = "Option::is_none")]
    start_point: Option<[usize; 2]>,
    #[arg(long, alias = "min_separation")]
    #[serde(skip_serializing_if = "Option::is_none")]
    min_separation: Option<usize>,
    #[arg(long, alias = "cg_tol")]
    #[serde(skip_serializing_if = "Option::is_none")]
    cg_tol: Option<f64>,
    #[arg(long, alias = "cg_max_iters")]
    #[serde(skip_serializing_if = "Option::is_none")]
    cg_max_iters: Option<usize>,
    #[arg(long, alias = "mass_tol")]
    #[serde(skip_serializing_if = "Option::is_none")]
    mass_tol: Option<f64>,
    #[arg(long, alias = "stop_radius")]
    #[serde(skip_serializing_if = "Option::is_none")]
    stop_radius: Option<f64>,
    #[arg(long, alias = "alpha_lo")]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_lo: Option<f64>,
    #[arg(long, alias = "alpha_hi")]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_hi: Option<f64>,
    #[arg(long, alias = "alpha_step")]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_step: Option<f64>,
    #[arg(long, alias = "s_max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    s_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bins: Option<usize>,
    #[arg(long, alias = "window_r_lo")]
    #[serde(skip_serializing_if = "Option::is_none")]
    window_r_lo: Option<f64>,
    #[arg(long, alias = "window_r_hi")]
    #[serde(skip_serializing_if = "Option::is_none")]
    window_r_hi: Option<f64>,
    /// horizontal or vertical.
    #[arg(long, alias = "cut_direction")]
    #[serde(skip_serializing_if = "Option::is_none")]
    cut_direction: Option<String>,
    #[arg(long, alias = "field_path")]
    #[serde(skip_serializing_if = "Option::is_none")]
    field_path: Option<PathBuf>,
    #[arg(long, alias = "output_dir")]
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, LabError> {
        self.load_or(None)
    }

    /// Like `load`, but falls back to `echo` when no `--config` is given.
    fn load_or(&self, echo: Option<PathBuf>) -> Result<RunConfig, LabError> {
        let Value::Object(map) = serde_json::to_value(&self.overrides).expect("flags serialize")
        else {
            unreachable!("overrides serialize to an object")
        };
        let base = self.config.clone().or(echo.filter(|p| p.is_file()));
        RunConfig::load(base.as_deref(), map)
    }
}

fn list<T>(key: &str, parsed: Result<Vec<T>, String>) -> Result<Vec<T>, LabError> {
    parsed.map_err(|e| LabError::config(key, e))
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::SampleField { common, seeds } => {
            let config = common.load()?;
            match seeds {
                None => cmd_sample_field(&config),
                Some(s) => cmd_sample_fields(&config, &list("seeds", parse_int_list(&s))?),
            }
        }
        Command::RunHeat { common } => {
            let config = common.load()?;
            for dir in cmd_run_heat(&config)? {
                println!("{}", dir.display());
            }
            Ok(())
        }
        Command::Analyze {
            common,
            trajectory_dir,
        } => {
            // the run's own config echo, unless told otherwise
            let config = common.load_or(Some(trajectory_dir.join("config.json")))?;
            for report in cmd_analyze(&config, &trajectory_dir)? {
                let d_s = report.d_s.map_or("n/a".to_string(), |d| format!("{d:.4}"));
                println!(
                    "rank {} start ({}, {}): d_s {d_s}, alpha_hat {:.2}, cost {:.3e} (alpha=2: {:.3e})",
                    report.rank,
                    report.start[0],
                    report.start[1],
                    report.alpha_hat,
                    report.cost_at_alpha_hat,
                    report.cost_at_2
                );
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
            }
            Ok(())
        }
        Command::Sweep {
            common,
            seeds,
            gammas,
            ranks,
            workers,
        } => {
            let config = common.load()?;
            let axes = SweepAxes {
                seeds: list("seeds", parse_int_list(&seeds))?,
                gammas: match gammas {
                    Some(g) => list("gammas", parse_float_list(&g))?,
                    None => vec![config.gamma],
                },
                ranks: list("ranks", parse_int_list(&ranks))?,
                workers,
            };
            let outcome = cmd_sweep(&config, &axes)?;
            for (seed, gamma, rank, e) in &outcome.failures {
                eprintln!("run seed={seed} gamma={gamma} rank={rank} failed: {e}");
            }
            if outcome.failures.is_empty() {
                Ok(())
            } else {
                Err(LabError::SweepFailures {
                    failed: outcome.failures.len(),
                    total: outcome.failures.len() + outcome.rows.len(),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
