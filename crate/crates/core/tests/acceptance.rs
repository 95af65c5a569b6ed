//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any fails. A substring argument restricts the run, e.g.
//! `cargo test --test acceptance -- collapse`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lqg_heat::analysis::{default_window, lattice_to_continuum_time};
use lqg_heat::evolve::SnapshotSchedule;
use lqg_heat::{
    apply_generator, collapse_cost, dense_heat_oracle, euclidean_reference, evolve, field_variance,
    fit_alpha, green_function, high_points, liouville_weights, on_diagonal_series, sample_gff,
    spectral_dimension, CollapseParams, CollapseReport, CutDirection, EvolveConfig,
    GeneratorContext, LatticePoint, ProfileEntry, ProfileSet, ScalarGrid, TorusSize, Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn size(n: usize) -> TorusSize {
    TorusSize::new(n).unwrap()
}

fn context(n: usize, gamma: f64, seed: u64) -> (GeneratorContext, Vec<LatticePoint>) {
    let f = sample_gff(size(n), seed);
    let top = high_points(&f, 2).unwrap();
    (GeneratorContext::new(liouville_weights(&f, gamma).unwrap()).unwrap(), top)
}

fn weighted_inner(m: &[f64], f: &ScalarGrid, g: &ScalarGrid) -> f64 {
    f.values().iter().zip(g.values()).zip(m).map(|((a, b), w)| a * b * w).sum()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn gff_covariance() -> Outcome {
    let n = 16;
    let seeds = 20_000usize;
    let sites = n * n;
    let mut sum0 = 0.0;
    let mut sums = vec![0.0; sites];
    let mut prods = vec![0.0; sites];
    let mut prods2 = vec![0.0; sites];
    for seed in 0..seeds {
        let x = sample_gff(size(n), seed as u64).grid.into_values();
        sum0 += x[0];
        for i in 0..sites {
            let p = x[0] * x[i];
            sums[i] += x[i];
            prods[i] += p;
            prods2[i] += p * p;
        }
    }
    let s = seeds as f64;
    let mut inside = 0;
    let mut worst: f64 = 0.0;
    for i in 0..sites {
        let cov = prods[i] / s - (sum0 / s) * (sums[i] / s);
        let var_p = (prods2[i] / s - (prods[i] / s).powi(2)) * s / (s - 1.0);
        let se = (var_p / s).sqrt();
        let p = LatticePoint::from_index(size(n), i);
        let want = 2.0 * PI * green_function(size(n), p.a as i64, p.b as i64);
        let z = (cov - want).abs() / se;
        worst = worst.max(z);
        if z <= 4.0 {
            inside += 1;
        }
    }
    let frac = inside as f64 / sites as f64;
    outcome(
        frac >= 0.99,
        format!("{inside}/{sites} offsets within 4 SE ({:.2}%), worst {worst:.2} SE", 100.0 * frac),
    )
}

fn exact_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [2, 4, 8, 16, 64] {
        let a = field_variance(size(n));
        let b = 2.0 * PI * green_function(size(n), 0, 0);
        worst = worst.max(rel(a, b));
    }
    let v2 = field_variance(size(2));
    let dev2 = rel(v2, 5.0 * PI / 16.0);
    outcome(
        worst <= 1e-12 && dev2 <= 1e-12,
        format!("max rel deviation {worst:.1e}; n=2 variance {v2:.15} vs 5π/16 (rel {dev2:.1e})"),
    )
}

/// `(1/2)·Σ_{x,y} [f(x)−f(y)][g(x)−g(y)]/4` over ordered nearest-neighbour pairs.
fn dirichlet_form(f: &ScalarGrid, g: &ScalarGrid) -> f64 {
    let n = f.side();
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            let x = LatticePoint { a, b };
            for (da, db) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                total += (f[x] - f.at_offset(x, da, db)) * (g[x] - g.at_offset(x, da, db)) * 0.25;
            }
        }
    }
    0.5 * total
}

fn dirichlet_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = if i % 2 == 0 { 4 } else { 8 };
        let gamma = rng.random_range(0.0..1.99);
        let (ctx, _) = context(n, gamma, rng.random());
        let mut draw = || ScalarGrid::from_fn(size(n), |_, _| rng.random_range(-1.0..1.0));
        let (f, g) = (draw(), draw());
        let lhs = -weighted_inner(ctx.m(), &f, &apply_generator(&ctx, &g).unwrap());
        worst = worst.max(rel(lhs, dirichlet_form(&f, &g)));
    }
    outcome(worst <= 1e-12, format!("100 tuples, max rel deviation {worst:.1e}"))
}

fn cn_vs_dense() -> Outcome {
    let (ctx, top) = context(8, 0.8, 0);
    let start = top[0];
    let exact = dense_heat_oracle(&ctx, start, 1.0).unwrap();
    let err = |dt: f64, steps: usize| {
        let cfg = EvolveConfig {
            dt,
            cg_tol: 1e-14,
            total_steps: steps,
            schedule: SnapshotSchedule::Explicit(vec![steps]),
            positivity_tol: f64::INFINITY,
            ..EvolveConfig::default()
        };
        let traj = evolve(&ctx, start, &cfg).unwrap();
        traj.snapshots.last().unwrap().1.max_abs_diff(&exact)
    };
    let (e1, e2) = (err(0.1, 10), err(0.05, 20));
    let ratio = e1 / e2;
    outcome(
        (3.5..=4.5).contains(&ratio),
        format!("e(0.1)={e1:.3e}, e(0.05)={e2:.3e}, ratio {ratio:.3}"),
    )
}

fn conservation() -> Outcome {
    let (ctx, top) = context(64, 1.2, 0);
    let cfg = EvolveConfig {
        cg_tol: 1e-12,
        total_steps: 2000,
        schedule: SnapshotSchedule::Stride(500),
        ..EvolveConfig::default()
    };
    match evolve(&ctx, top[0], &cfg) {
        Ok(traj) => {
            let drift = traj.relative_mass_drift();
            outcome(drift <= 1e-8, format!("relative mass drift {drift:.2e}"))
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn reversibility() -> Outcome {
    let (ctx, top) = context(32, 0.8, 0);
    let (x, y) = (top[0], top[1]);
    let cfg = EvolveConfig {
        total_steps: 500,
        schedule: SnapshotSchedule::Stride(100),
        positivity_tol: f64::INFINITY,
        ..EvolveConfig::default()
    };
    let tx = evolve(&ctx, x, &cfg).unwrap();
    let ty = evolve(&ctx, y, &cfg).unwrap();
    let n = ctx.size();
    let (mx, my) = (ctx.m()[x.index(n)], ctx.m()[y.index(n)]);
    let worst = tx
        .snapshots
        .iter()
        .zip(&ty.snapshots)
        .skip(1)
        .map(|((_, ux), (_, uy))| rel(my * ux[y], mx * uy[x]))
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-6,
        format!("starts {:?} and {:?}, max rel deviation {worst:.2e}", (x.a, x.b), (y.a, y.b)),
    )
}

/// The standard run: stride 1000 plus 40 geometric snapshots over 20000
/// steps, stopped once the heat ball passes `n/4`.
fn standard_run(n: usize, gamma: f64, seed: u64) -> lqg_heat::Result<Trajectory> {
    let (ctx, top) = context(n, gamma, seed);
    let cfg = EvolveConfig {
        schedule: SnapshotSchedule::stride_with_geometric(1000, 40, 20_000),
        total_steps: 20_000,
        stop_radius: Some(n as f64 / 4.0),
        ..EvolveConfig::default()
    };
    evolve(&ctx, top[0], &cfg)
}

struct Analysis {
    window: (f64, f64),
    d_s: f64,
    profiles: ProfileSet,
    fit: CollapseReport,
    cost_at_2: f64,
}

fn analyze(traj: &Trajectory) -> lqg_heat::Result<Analysis> {
    let n = traj.snapshots[0].1.side();
    let window = default_window(traj).ok_or(lqg_heat::Error::InsufficientData("empty window"))?;
    let d_s = spectral_dimension(&on_diagonal_series(traj)?, window)?;
    let profiles =
        ProfileSet::from_trajectory(traj, window, (n / 4).min((n - 1) / 2), CutDirection::Horizontal)?;
    let params = CollapseParams::default();
    let fit = fit_alpha(&profiles, &params)?;
    let cost_at_2 = collapse_cost(&profiles, 2.0, params.s_max, params.bins)?;
    Ok(Analysis {
        window,
        d_s,
        profiles,
        fit,
        cost_at_2,
    })
}

fn euclidean_baseline() -> Outcome {
    let a = match standard_run(256, 0.0, 0).and_then(|t| analyze(&t)) {
        Ok(a) => a,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    // middle third of the window in log time
    let (lo, hi) = (a.window.0.ln(), a.window.1.ln());
    let mid = (lo + (hi - lo) / 3.0, lo + 2.0 * (hi - lo) / 3.0);
    let mut worst: f64 = 0.0;
    let mut cut_times = 0;
    for ProfileEntry { t, radii, ratios } in &a.profiles.entries {
        if t.ln() < mid.0 || t.ln() > mid.1 {
            continue;
        }
        cut_times += 1;
        let tau = lattice_to_continuum_time(*t);
        let reference = euclidean_reference(tau, radii);
        for ((&r, rho), want) in radii.iter().zip(ratios).zip(&reference) {
            if (r * r) as f64 / tau <= 4.0 {
                worst = worst.max((rho / want - 1.0).abs());
            }
        }
    }
    let alpha = a.fit.alpha_hat;
    let pass = (1.9..=2.1).contains(&a.d_s)
        && (1.85..=2.15).contains(&alpha)
        && cut_times > 0
        && worst <= 0.05;
    outcome(
        pass,
        format!(
            "window t∈[{:.0},{:.0}], d_s {:.4}, α̂ {alpha:.2}, cut deviation {:.2}% over {cut_times} mid-times",
            a.window.0,
            a.window.1,
            a.d_s,
            100.0 * worst
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn spectral_dimension_positive_gamma() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for gamma in [0.4, 0.8, 1.2] {
        let mut ds = Vec::new();
        for seed in 1..=3 {
            match standard_run(256, gamma, seed).and_then(|t| analyze(&t)) {
                Ok(a) => ds.push(a.d_s),
                Err(e) => parts.push(format!("γ={gamma} seed {seed} failed: {e}")),
            }
        }
        if ds.len() < 3 {
            pass = false;
            continue;
        }
        let m = median(ds.clone());
        pass &= (1.8..=2.2).contains(&m);
        let list: Vec<String> = ds.iter().map(|d| format!("{d:.3}")).collect();
        parts.push(format!("γ={gamma}: median {m:.3} [{}]", list.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

fn superdiffusive_collapse() -> Outcome {
    let mut hits = 0;
    let mut parts = Vec::new();
    for seed in 1..=3 {
        match standard_run(128, 1.2, seed).and_then(|t| analyze(&t)) {
            Ok(a) => {
                let hit = a.fit.alpha_hat < 2.0 && a.fit.cost_at_hat < a.cost_at_2;
                hits += hit as usize;
                parts.push(format!(
                    "seed {seed}: α̂ {:.2}, cost {:.2e} vs {:.2e} at 2",
                    a.fit.alpha_hat, a.fit.cost_at_hat, a.cost_at_2
                ));
            }
            Err(e) => parts.push(format!("seed {seed} failed: {e}")),
        }
    }
    outcome(hits >= 2, format!("{hits}/3 superdiffusive; {}", parts.join("; ")))
}

fn synthetic_collapse() -> Outcome {
    let params = CollapseParams::default();
    let times = [20.0, 40.0, 80.0, 160.0, 320.0];
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [0.5, 1.0] {
        for alpha0 in [1.0, 1.5, 2.0] {
            let set = ProfileSet {
                start: LatticePoint { a: 0, b: 0 },
                entries: times
                    .iter()
                    .map(|&t| {
                        let radii: Vec<usize> = (0..=60).collect();
                        let ratios = radii
                            .iter()
                            .map(|&r| (-((r as f64).powf(alpha0) / t).powf(q)).exp())
                            .collect();
                        ProfileEntry { t, radii, ratios }
                    })
                    .collect(),
            };
            let got = fit_alpha(&set, &params).map(|f| f.alpha_hat).unwrap_or(f64::NAN);
            pass &= (got - alpha0).abs() <= params.alpha_step + 1e-9;
            parts.push(format!("q={q} α₀={alpha0}→{got:.2}"));
        }
    }
    outcome(pass, parts.join(", "))
}

type Criterion = (&'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    ("gff-covariance", 120, gff_covariance),
    ("exact-identities", 1, exact_identities),
    ("dirichlet-form", 5, dirichlet_identity),
    ("cn-vs-dense", 10, cn_vs_dense),
    ("conservation", 60, conservation),
    ("reversibility", 60, reversibility),
    ("euclidean-baseline", 600, euclidean_baseline),
    ("spectral-dimension", 1800, spectral_dimension_positive_gamma),
    ("superdiffusive-collapse", 1200, superdiffusive_collapse),
    ("synthetic-collapse", 10, synthetic_collapse),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, check) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let Outcome { pass, detail } = check();
        let elapsed = clock.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let ok = pass && in_time;
        failed += !ok as usize;
        println!(
            "{} {name}: {detail} ({:.1}s of {budget}s{})",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
