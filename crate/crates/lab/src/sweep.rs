//! Independent runs over seeds × gammas × start ranks, aggregated into
//! `sweep.csv`.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::LabError;
use crate::pipeline::{
    analyze_trajectory, create_dir, prepare_run, run_trajectory, start_dir_name, start_points,
    write_csv, Report,
};

#[derive(Debug, Clone)]
pub struct SweepAxes {
    pub seeds: Vec<u64>,
    pub gammas: Vec<f64>,
    pub ranks: Vec<usize>,
    /// Concurrent runs; `None` uses every logical core.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub gamma: f64,
    pub rank: usize,
    pub d_s: Option<f64>,
    pub alpha_hat: f64,
    pub cost_at_alpha_hat: f64,
    pub cost_at_2: f64,
}

impl SweepRow {
    pub fn from_report(r: &Report) -> Self {
        SweepRow {
            seed: r.seed,
            gamma: r.gamma,
            rank: r.rank,
            d_s: r.d_s,
            alpha_hat: r.alpha_hat,
            cost_at_alpha_hat: r.cost_at_alpha_hat,
            cost_at_2: r.cost_at_2,
        }
    }
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// `(seed, gamma, rank, error)` of every failed run.
    pub failures: Vec<(u64, f64, usize, LabError)>,
}

pub fn run_dir(base: &std::path::Path, seed: u64, gamma: f64, rank: usize) -> PathBuf {
    base.join("runs")
        .join(format!("seed_{seed}_gamma_{gamma}_rank_{rank}"))
}

/// The configuration of one sweep cell.
pub fn cell_config(template: &RunConfig, seed: u64, gamma: f64, rank: usize) -> RunConfig {
    let mut c = template.clone();
    c.seed = seed;
    c.gamma = gamma;
    c.k = rank;
    c.output_dir = run_dir(&template.output_dir, seed, gamma, rank);
    c
}

/// One sweep cell: sample, evolve from the start point of the given rank, and
/// analyze. Shares nothing with other cells.
pub fn run_cell(template: &RunConfig, seed: u64, gamma: f64, rank: usize) -> Result<Report, LabError> {
    let config = cell_config(template, seed, gamma, rank);
    config.validate()?;
    let (field, ctx) = prepare_run(&config)?;
    let (rank, start) = *start_points(&config, &field)?
        .last()
        .expect("k >= 1 start points");
    let dir = config.output_dir.join(start_dir_name(rank));
    let (meta, traj) = run_trajectory(&config, &ctx, rank, start, &dir)?;
    analyze_trajectory(&config, &meta, &traj, &dir)
}

pub fn cmd_sweep(template: &RunConfig, axes: &SweepAxes) -> Result<SweepOutcome, LabError> {
    template.validate()?;
    if axes.ranks.contains(&0) {
        return Err(LabError::config("ranks", "ranks count from 1"));
    }
    if axes.workers == Some(0) {
        return Err(LabError::config("workers", "must be positive"));
    }
    let mut cells = Vec::new();
    for &seed in &axes.seeds {
        for &gamma in &axes.gammas {
            for &rank in &axes.ranks {
                cells.push((seed, gamma, rank));
            }
        }
    }
    create_dir(&template.output_dir)?;
    template.echo_into(&template.output_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(axes.workers.unwrap_or(0))
        .build()
        .map_err(|e| LabError::config("workers", e.to_string()))?;
    let results: Vec<Result<Report, LabError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(seed, gamma, rank)| run_cell(template, seed, gamma, rank))
            .collect()
    });

    let mut outcome = SweepOutcome {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (&(seed, gamma, rank), result) in cells.iter().zip(results) {
        match result {
            Ok(report) => outcome.rows.push(SweepRow::from_report(&report)),
            Err(e) => outcome.failures.push((seed, gamma, rank, e)),
        }
    }
    write_csv(
        &template.output_dir.join("sweep.csv"),
        &[
            "seed",
            "gamma",
            "rank",
            "d_s",
            "alpha_hat",
            "cost_at_alpha_hat",
            "cost_at_2",
        ],
        outcome.rows.iter(),
    )?;
    write_csv(
        &template.output_dir.join("failures.csv"),
        &["seed", "gamma", "rank", "exit_code", "error"],
        outcome
            .failures
            .iter()
            .map(|(s, g, r, e)| (s, g, r, e.exit_code(), e.to_string())),
    )?;
    Ok(outcome)
}
