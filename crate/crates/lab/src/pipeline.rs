//! The `sample-field`, `run-heat` and `analyze` stages and their files.

use std::fs;
use std::path::{Path, PathBuf};

use lqg_heat::analysis::{radius_window, ProfileSet};
use lqg_heat::{
    collapse_cost, evolve, field_variance, fit_alpha, high_points_separated, liouville_weights,
    on_diagonal_series, sample_gff, spectral_dimension, EvolveConfig, FieldSample,
    GeneratorContext, LatticePoint, ScalarGrid, TorusSize, Trajectory,
};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, StartMode};
use crate::error::LabError;
use crate::gridfile::{read_grid, write_grid};

/// Number of rows written to `highpoints.csv` at minimum.
const HIGHPOINTS_LISTED: usize = 10;

pub(crate) fn create_dir(dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Format(format!("{}: {e}", path.display())))
}

/// Writes `rows` under `header` as a UTF-8 CSV file.
pub(crate) fn write_csv<R: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<(), LabError> {
    let wrap = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::Format(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.serialize(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub n: usize,
    pub seed: u64,
    pub sigma2: f64,
}

/// Samples the configured field, or loads it from `field_path`.
pub fn obtain_field(config: &RunConfig) -> Result<FieldSample, LabError> {
    let n = TorusSize::new(config.n).map_err(|e| LabError::config("n", e.to_string()))?;
    match &config.field_path {
        None => Ok(sample_gff(n, config.seed)),
        Some(path) => {
            let grid = read_grid(path)?;
            if grid.side() != config.n {
                return Err(LabError::config(
                    "field_path",
                    format!("field has side {}, config says n = {}", grid.side(), config.n),
                ));
            }
            Ok(FieldSample {
                grid,
                seed: config.seed,
                sigma2: field_variance(n),
            })
        }
    }
}

/// Writes `field.grid`, `field.json` and `highpoints.csv` into `dir`.
pub fn write_field(dir: &Path, field: &FieldSample, config: &RunConfig) -> Result<(), LabError> {
    create_dir(dir)?;
    write_grid(&dir.join("field.grid"), &field.grid)?;
    let meta = FieldMeta {
        n: field.grid.side(),
        seed: field.seed,
        sigma2: field.sigma2,
    };
    write_json(&dir.join("field.json"), &meta)?;
    let count = config.k.max(HIGHPOINTS_LISTED).min(field.grid.values().len());
    let points = high_points_separated(field, count, config.min_separation)
        .or_else(|_| high_points_separated(field, config.k, config.min_separation))?;
    write_csv(
        &dir.join("highpoints.csv"),
        &["rank", "a", "b", "X"],
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1, p.a, p.b, field.grid[*p])),
    )
}

/// `sample-field` for one seed: writes into `config.output_dir`.
pub fn cmd_sample_field(config: &RunConfig) -> Result<(), LabError> {
    let field = obtain_field(config)?;
    write_field(&config.output_dir, &field, config)?;
    config.echo_into(&config.output_dir)
}

/// `sample-field` over many seeds, one `seed_<s>` directory each.
pub fn cmd_sample_fields(config: &RunConfig, seeds: &[u64]) -> Result<(), LabError> {
    create_dir(&config.output_dir)?;
    config.echo_into(&config.output_dir)?;
    for &seed in seeds {
        let mut c = config.clone();
        c.seed = seed;
        c.output_dir = config.output_dir.join(format!("seed_{seed}"));
        let field = obtain_field(&c)?;
        write_field(&c.output_dir, &field, &c)?;
    }
    Ok(())
}

/// The configured start points as `(rank, site)`, rank counting from 1.
pub fn start_points(
    config: &RunConfig,
    field: &FieldSample,
) -> Result<Vec<(usize, LatticePoint)>, LabError> {
    let n = field.size();
    let points = match config.start_mode {
        StartMode::HighestK => high_points_separated(field, config.k, config.min_separation)?,
        StartMode::Explicit => {
            let [a, b] = config.start_point.expect("validated");
            vec![LatticePoint { a, b }]
        }
        StartMode::Random => {
            // a stream separate from the field's, derived from the same seed
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0x5741_5254_5054_5321);
            index::sample(&mut rng, n.sites(), config.k)
                .into_iter()
                .map(|i| LatticePoint::from_index(n, i))
                .collect()
        }
    };
    Ok(points.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect())
}

pub fn start_dir_name(rank: usize) -> String {
    format!("start_{rank}")
}

/// Metadata stored beside the snapshots of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub rank: usize,
    pub start: [usize; 2],
    pub n: usize,
    pub gamma: f64,
    pub seed: u64,
    pub dt: f64,
    pub snapshots: Vec<usize>,
    pub steps_taken: usize,
    pub mass_drift: f64,
}

/// Evolves from one start point and persists the trajectory into `dir`.
/// Files are written before the conservation check so a failing run still
/// leaves its diagnostics behind.
pub fn run_trajectory(
    config: &RunConfig,
    ctx: &GeneratorContext,
    rank: usize,
    start: LatticePoint,
    dir: &Path,
) -> Result<(TrajectoryMeta, Trajectory), LabError> {
    create_dir(dir)?;
    let traj = evolve(ctx, start, &config.evolve_config())?;
    for (k, u) in &traj.snapshots {
        write_grid(&dir.join(format!("snap_{k}.grid")), u)?;
    }
    write_csv(
        &dir.join("mass.csv"),
        &["iter", "mass"],
        traj.mass_series.iter().copied(),
    )?;
    write_csv(
        &dir.join("cg.csv"),
        &["iter", "cg_iters", "residual"],
        traj.cg_records.iter().map(|r| (r.iter, r.cg_iters, r.residual)),
    )?;
    let drift = traj.relative_mass_drift();
    let meta = TrajectoryMeta {
        rank,
        start: [start.a, start.b],
        n: config.n,
        gamma: config.gamma,
        seed: config.seed,
        dt: config.dt,
        snapshots: traj.snapshots.iter().map(|(k, _)| *k).collect(),
        steps_taken: traj.cg_records.len(),
        mass_drift: drift,
    };
    write_json(&dir.join("trajectory.json"), &meta)?;
    config.echo_into(dir)?;
    if !(drift <= config.mass_tol) {
        return Err(LabError::Conservation {
            drift,
            tol: config.mass_tol,
        });
    }
    Ok((meta, traj))
}

/// Field files plus the weights for a run directory.
pub fn prepare_run(config: &RunConfig) -> Result<(FieldSample, GeneratorContext), LabError> {
    let field = obtain_field(config)?;
    create_dir(&config.output_dir)?;
    write_field(&config.output_dir, &field, config)?;
    config.echo_into(&config.output_dir)?;
    let weights = liouville_weights(&field, config.gamma)?;
    let ctx = GeneratorContext::new(weights)?;
    Ok((field, ctx))
}

/// `run-heat`: one `start_<rank>` directory per configured start point.
pub fn cmd_run_heat(config: &RunConfig) -> Result<Vec<PathBuf>, LabError> {
    let (field, ctx) = prepare_run(config)?;
    let mut dirs = Vec::new();
    for (rank, start) in start_points(config, &field)? {
        let dir = config.output_dir.join(start_dir_name(rank));
        run_trajectory(config, &ctx, rank, start, &dir)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Reads a trajectory directory written by [`run_trajectory`].
pub fn load_trajectory(dir: &Path) -> Result<(TrajectoryMeta, Trajectory), LabError> {
    let meta: TrajectoryMeta = read_json(&dir.join("trajectory.json"))?;
    let mut snapshots = Vec::with_capacity(meta.snapshots.len());
    for &k in &meta.snapshots {
        let grid: ScalarGrid = read_grid(&dir.join(format!("snap_{k}.grid")))?;
        if grid.side() != meta.n {
            return Err(LabError::Format(format!(
                "snap_{k}.grid has side {}, expected {}",
                grid.side(),
                meta.n
            )));
        }
        snapshots.push((k, grid));
    }
    let [a, b] = meta.start;
    if a >= meta.n || b >= meta.n {
        return Err(LabError::Format("trajectory start outside the lattice".into()));
    }
    let traj = Trajectory {
        start: LatticePoint { a, b },
        config: EvolveConfig {
            dt: meta.dt,
            ..EvolveConfig::default()
        },
        snapshots,
        mass_series: Vec::new(),
        cg_records: Vec::new(),
    };
    Ok((meta, traj))
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rank: usize,
    pub start: [usize; 2],
    pub n: usize,
    pub gamma: f64,
    pub seed: u64,
    pub radius_window: [f64; 2],
    pub time_window: [f64; 2],
    pub window_snapshots: usize,
    pub d_s: Option<f64>,
    pub alpha_hat: f64,
    pub cost_at_alpha_hat: f64,
    pub cost_at_2: f64,
    pub warnings: Vec<String>,
    pub config: RunConfig,
}

fn degenerate(e: lqg_heat::Error, hint: &'static str) -> LabError {
    LabError::Analysis {
        message: e.to_string(),
        hint,
    }
}

/// Runs every analysis on an in-memory trajectory and writes the CSV and
/// JSON outputs into `dir`.
pub fn analyze_trajectory(
    config: &RunConfig,
    meta: &TrajectoryMeta,
    traj: &Trajectory,
    dir: &Path,
) -> Result<Report, LabError> {
    let series = on_diagonal_series(traj).map_err(|e| {
        degenerate(e, "the trajectory needs snapshots beyond iteration 0; raise total_steps")
    })?;
    write_csv(&dir.join("ondiag.csv"), &["t", "p", "tp"], series.rows())?;

    let (r_lo, r_hi) = config.radius_window();
    let window = radius_window(traj, r_lo, r_hi).ok_or_else(|| LabError::Analysis {
        message: format!("no snapshot has a heat-ball radius in [{r_lo}, {r_hi}]"),
        hint: "raise total_steps or snapshot density, or widen window_r_lo/window_r_hi",
    })?;
    let window_snapshots = series
        .points
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .count();

    let mut warnings = Vec::new();
    let d_s = match spectral_dimension(&series, window) {
        Ok(d) => Some(d),
        Err(e) => {
            warnings.push(format!("d_s unavailable: {e}; add log_snapshots or lower snapshot_stride"));
            None
        }
    };

    let r_max = ((meta.n - 1) / 2).min(meta.n / 4).max(1);
    let profiles = ProfileSet::from_trajectory(traj, window, r_max, config.cut_direction.into())
        .map_err(|e| degenerate(e, "lattice too small for the profile cut"))?;
    write_csv(
        &dir.join("profiles.csv"),
        &["t", "r", "ratio"],
        profiles.entries.iter().flat_map(|e| {
            e.radii
                .iter()
                .zip(&e.ratios)
                .map(move |(&r, &rho)| (e.t, r, rho))
        }),
    )?;
    let params = config.collapse_params();
    let fit = fit_alpha(&profiles, &params).map_err(|e| {
        degenerate(e, "the collapse needs two or more snapshots inside the fit window")
    })?;
    let cost_at_2 = collapse_cost(&profiles, 2.0, params.s_max, params.bins)
        .map_err(|e| degenerate(e, "no overlap between times at alpha = 2"))?;
    write_csv(
        &dir.join("collapse.csv"),
        &["alpha", "cost"],
        fit.alpha_grid.iter().copied().zip(fit.costs.iter().copied()),
    )?;

    let report = Report {
        rank: meta.rank,
        start: meta.start,
        n: meta.n,
        gamma: meta.gamma,
        seed: meta.seed,
        radius_window: [r_lo, r_hi],
        time_window: [window.0, window.1],
        window_snapshots,
        d_s,
        alpha_hat: fit.alpha_hat,
        cost_at_alpha_hat: fit.cost_at_hat,
        cost_at_2,
        warnings,
        config: config.clone(),
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}

/// `analyze`: a single trajectory directory, or every `start_*` directory of
/// a run directory.
pub fn cmd_analyze(config: &RunConfig, dir: &Path) -> Result<Vec<Report>, LabError> {
    let mut targets = Vec::new();
    if dir.join("trajectory.json").is_file() {
        targets.push(dir.to_path_buf());
    } else {
        let entries = fs::read_dir(dir).map_err(|e| LabError::io(dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| LabError::io(dir, e))?.path();
            if path.join("trajectory.json").is_file() {
                targets.push(path);
            }
        }
        targets.sort();
        if targets.is_empty() {
            return Err(LabError::Format(format!(
                "{} holds no trajectory.json",
                dir.display()
            )));
        }
    }
    let mut reports = Vec::new();
    for target in targets {
        let (meta, traj) = load_trajectory(&target)?;
        reports.push(analyze_trajectory(config, &meta, &traj, &target)?);
    }
    Ok(reports)
}

/// Parses `a..b`, `a..=b` or a comma-separated list of integers.
pub fn parse_int_list<T>(text: &str) -> Result<Vec<T>, String>
where
    T: std::str::FromStr + TryFrom<u64>,
{
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let (hi, inclusive) = match hi.strip_prefix('=') {
            Some(h) => (h, true),
            None => (hi, false),
        };
        let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range start in `{text}`"))?;
        let hi: u64 = hi.trim().parse().map_err(|_| format!("bad range end in `{text}`"))?;
        let end = if inclusive { hi.saturating_add(1) } else { hi };
        if end <= lo {
            return Err(format!("empty range `{text}`"));
        }
        return (lo..end)
            .map(|v| T::try_from(v).map_err(|_| format!("value {v} out of range")))
            .collect();
    }
    parse_float_list_as(text)
}

/// Parses a comma-separated list of reals.
pub fn parse_float_list(text: &str) -> Result<Vec<f64>, String> {
    parse_float_list_as(text.trim())
}

fn parse_float_list_as<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("cannot parse `{}`", s.trim()))
        })
        .collect()
}
