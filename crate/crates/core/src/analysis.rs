//! Heat-kernel post-processing: on-diagonal decay and spectral dimension,
//! profile cuts through snapshots, and the scaling-collapse fit of the
//! space-time exponent `α` in `p_t(x,y)/p_t(x,x) ≈ g(|x−y|^α / t)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::grid::{LatticePoint, ScalarGrid};

/// `p_t(x,x)` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct OnDiagSeries {
    pub start: LatticePoint,
    /// `(t, p)`, strictly increasing in `t`.
    pub points: Vec<(f64, f64)>,
}

impl OnDiagSeries {
    /// Rows `(t, p, t·p)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points.iter().map(|&(t, p)| (t, p, t * p))
    }
}

pub fn on_diagonal_series(traj: &Trajectory) -> Result<OnDiagSeries> {
    if traj.snapshots.len() < 2 {
        return Err(Error::InsufficientData(
            "on-diagonal series needs at least two snapshots",
        ));
    }
    let points = traj
        .snapshots
        .iter()
        .map(|(k, u)| (traj.time_of(*k), u[traj.start]))
        .collect();
    Ok(OnDiagSeries {
        start: traj.start,
        points,
    })
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Minimum number of series points inside a fit window.
pub const MIN_WINDOW_POINTS: usize = 5;

/// `d_s = −2·slope` of `log p` against `log t` over `t ∈ [t_lo, t_hi]`.
pub fn spectral_dimension(series: &OnDiagSeries, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter(|&&(t, p)| t > 0.0 && p > 0.0 && t >= lo && t <= hi)
        .map(|&(t, p)| (libm::log(t), libm::log(p)))
        .collect();
    if pts.len() < MIN_WINDOW_POINTS {
        return Err(Error::InsufficientData(
            "spectral dimension window holds fewer than 5 points",
        ));
    }
    Ok(-2.0 * linear_fit(&pts).0)
}

/// Direction of a one-sided profile cut starting at the source site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutDirection {
    /// Along the row of the source, increasing column index.
    #[default]
    Horizontal,
    /// Along the column of the source, increasing row index.
    Vertical,
    /// Any unit lattice step `(da, db)`.
    Step(i64, i64),
}

impl CutDirection {
    fn step(self) -> (i64, i64) {
        match self {
            CutDirection::Horizontal => (0, 1),
            CutDirection::Vertical => (1, 0),
            CutDirection::Step(da, db) => (da, db),
        }
    }
}

/// Ratios `u(start + r·step)/u(start)` for `r = 0..=r_max`; negative
/// undershoots are clamped to zero.
pub fn directional_cut(
    snapshot: &ScalarGrid,
    start: LatticePoint,
    r_max: usize,
    direction: CutDirection,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if 2 * r_max >= snapshot.side() {
        return Err(Error::InvalidParameter {
            name: "r_max",
            reason: "cut radius must be below n/2",
        });
    }
    let center = snapshot[start];
    if !(center > 0.0) {
        return Err(Error::InsufficientData("heat kernel vanishes at the source"));
    }
    let (da, db) = direction.step();
    let radii: Vec<usize> = (0..=r_max).collect();
    let ratios = radii
        .iter()
        .map(|&r| {
            let v = snapshot.at_offset(start, da * r as i64, db * r as i64);
            (v / center).max(0.0)
        })
        .collect();
    Ok((radii, ratios))
}

pub fn horizontal_cut(
    snapshot: &ScalarGrid,
    start: LatticePoint,
    r_max: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    directional_cut(snapshot, start, r_max, CutDirection::Horizontal)
}

pub fn vertical_cut(
    snapshot: &ScalarGrid,
    start: LatticePoint,
    r_max: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    directional_cut(snapshot, start, r_max, CutDirection::Vertical)
}

/// Distance at which the cut first falls to `e⁻¹`, linearly interpolated
/// between lattice sites. `None` if it never does within `n/2`.
pub fn heat_ball_radius(
    snapshot: &ScalarGrid,
    start: LatticePoint,
    direction: CutDirection,
) -> Option<f64> {
    let r_max = (snapshot.side() - 1) / 2;
    let (_, ratios) = directional_cut(snapshot, start, r_max, direction).ok()?;
    let level = libm::exp(-1.0);
    for r in 1..ratios.len() {
        if ratios[r] <= level {
            let (hi, lo) = (ratios[r - 1], ratios[r]);
            return Some((r - 1) as f64 + (hi - level) / (hi - lo));
        }
    }
    None
}

/// Time window covering the snapshots whose heat-ball radius lies in
/// `[r_lo, r_hi]`. `None` if no snapshot qualifies.
pub fn radius_window(traj: &Trajectory, r_lo: f64, r_hi: f64) -> Option<(f64, f64)> {
    let mut window: Option<(f64, f64)> = None;
    for (k, u) in traj.snapshots.iter().skip(1) {
        let Some(r) = heat_ball_radius(u, traj.start, CutDirection::Horizontal) else {
            continue;
        };
        if r >= r_lo && r <= r_hi {
            let t = traj.time_of(*k);
            window = Some(match window {
                None => (t, t),
                Some((lo, hi)) => (lo.min(t), hi.max(t)),
            });
        }
    }
    window
}

/// The default fit window: heat-ball radius between 5 sites and `n/4`.
pub fn default_window(traj: &Trajectory) -> Option<(f64, f64)> {
    let n = traj.snapshots.first()?.1.side() as f64;
    radius_window(traj, 5.0, n / 4.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEntry {
    pub t: f64,
    pub radii: Vec<usize>,
    pub ratios: Vec<f64>,
}

/// Cut profiles of one trajectory at several times.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    pub start: LatticePoint,
    pub entries: Vec<ProfileEntry>,
}

impl ProfileSet {
    /// Cuts every snapshot with `t ∈ [t_lo, t_hi]` (skipping iteration 0).
    pub fn from_trajectory(
        traj: &Trajectory,
        window: (f64, f64),
        r_max: usize,
        direction: CutDirection,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, u) in traj.snapshots.iter() {
            let t = traj.time_of(*k);
            if *k == 0 || t < window.0 || t > window.1 {
                continue;
            }
            let (radii, ratios) = directional_cut(u, traj.start, r_max, direction)?;
            entries.push(ProfileEntry { t, radii, ratios });
        }
        Ok(ProfileSet {
            start: traj.start,
            entries,
        })
    }

    pub fn distinct_times(&self) -> usize {
        let mut ts: Vec<f64> = self.entries.iter().map(|e| e.t).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.len()
    }
}

/// Ratios at or below this are excluded from collapse fits.
pub const RATIO_FLOOR: f64 = 1e-8;

/// Parameters of the collapse fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseParams {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha_step: f64,
    /// Points with `r^α/t` above this are ignored.
    pub s_max: f64,
    pub bins: usize,
}

impl Default for CollapseParams {
    fn default() -> Self {
        CollapseParams {
            alpha_lo: 0.5,
            alpha_hi: 3.0,
            alpha_step: 0.05,
            // exp(-s) = 1e-3 for Gaussian profiles in lattice time units
            s_max: 7.0,
            bins: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseReport {
    pub alpha_grid: Vec<f64>,
    pub costs: Vec<f64>,
    pub alpha_hat: f64,
    pub cost_at_hat: f64,
    pub s_max: f64,
    pub bins: usize,
}

struct Curve {
    // (log s, log ρ), increasing in log s
    points: Vec<(f64, f64)>,
}

impl Curve {
    fn range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    fn interpolate(&self, u: f64) -> f64 {
        let pts = &self.points;
        let i = pts.partition_point(|p| p.0 < u);
        if i == 0 {
            return pts[0].1;
        }
        if i == pts.len() {
            return pts[pts.len() - 1].1;
        }
        let (u0, v0) = pts[i - 1];
        let (u1, v1) = pts[i];
        if u1 == u0 {
            return v0;
        }
        v0 + (v1 - v0) * (u - u0) / (u1 - u0)
    }
}

/// Quality of the collapse of `log ρ` against `log(r^α/t)`; lower is better.
///
/// Each time's cut, restricted to `r ≥ 1`, `ρ > 1e-8` and `r^α/t ≤ s_max`,
/// becomes a piecewise-linear curve in `(log s, log ρ)`. Every point is
/// compared with the curves of all other times that cover its abscissa; the
/// squared residuals are pooled into `bins` equal-width bins over the observed
/// `log s` range, and the cost is the mean over populated bins of the
/// mean squared residual. A perfect collapse scores zero up to interpolation
/// error.
pub fn collapse_cost(profiles: &ProfileSet, alpha: f64, s_max: f64, bins: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "exponent must be positive",
        });
    }
    if bins < 4 {
        return Err(Error::InvalidParameter {
            name: "bins",
            reason: "need at least 4 bins",
        });
    }
    if !(s_max > 0.0) {
        return Err(Error::InvalidParameter {
            name: "s_max",
            reason: "cutoff must be positive",
        });
    }
    if profiles.distinct_times() < 2 {
        return Err(Error::InsufficientData(
            "collapse needs profiles at two or more distinct times",
        ));
    }

    let mut curves: Vec<Curve> = Vec::new();
    for e in &profiles.entries {
        if !(e.t > 0.0) {
            continue;
        }
        let log_t = libm::log(e.t);
        let mut points: Vec<(f64, f64)> = e
            .radii
            .iter()
            .zip(&e.ratios)
            .filter(|&(&r, &rho)| r >= 1 && rho > RATIO_FLOOR)
            .map(|(&r, &rho)| (alpha * libm::log(r as f64) - log_t, libm::log(rho)))
            .filter(|&(u, _)| libm::exp(u) <= s_max)
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if !points.is_empty() {
            curves.push(Curve { points });
        }
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &curves {
        let (a, b) = c.range();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let width = (hi - lo) / bins as f64;
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for (i, ci) in curves.iter().enumerate() {
        for (j, cj) in curves.iter().enumerate() {
            if i == j || cj.points.len() < 2 {
                continue;
            }
            let (a, b) = cj.range();
            for &(u, v) in &ci.points {
                if u < a || u > b {
                    continue;
                }
                let d = v - cj.interpolate(u);
                let bin = if width > 0.0 {
                    (((u - lo) / width) as usize).min(bins - 1)
                } else {
                    0
                };
                sums[bin] += d * d;
                counts[bin] += 1;
            }
        }
    }

    let populated: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .collect();
    if populated.is_empty() {
        return Err(Error::InsufficientData(
            "no bin holds overlapping points from two different times",
        ));
    }
    Ok(populated.iter().sum::<f64>() / populated.len() as f64)
}

/// The `α` grid `lo, lo + step, …` up to `hi` (inclusive within round-off).
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = libm::floor((hi - lo) / step + 1e-9) as usize;
    (0..=count).map(|i| lo + i as f64 * step).collect()
}

/// Grid search of [`collapse_cost`] over `α`; ties go to the smaller `α`.
pub fn fit_alpha(profiles: &ProfileSet, params: &CollapseParams) -> Result<CollapseReport> {
    let CollapseParams {
        alpha_lo,
        alpha_hi,
        alpha_step,
        s_max,
        bins,
    } = *params;
    if !(alpha_lo > 0.0 && alpha_hi > alpha_lo && alpha_step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha_range",
            reason: "need 0 < lo < hi and a positive step",
        });
    }
    let grid = alpha_grid(alpha_lo, alpha_hi, alpha_step);
    let mut costs = Vec::with_capacity(grid.len());
    for &alpha in &grid {
        costs.push(collapse_cost(profiles, alpha, s_max, bins)?);
    }
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    Ok(CollapseReport {
        alpha_hat: grid[best],
        cost_at_hat: costs[best],
        alpha_grid: grid,
        costs,
        s_max,
        bins,
    })
}

/// Continuum Euclidean profile `exp(−r²/(4t))`.
pub fn euclidean_reference(t: f64, radii: &[usize]) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| libm::exp(-((r * r) as f64) / (4.0 * t)))
        .collect()
}

/// Converts an iteration-clock time of the 1/4-weighted lattice Laplacian to
/// the time of `∂ₜu = ∇²u`, whose kernel [`euclidean_reference`] describes.
/// At `γ = 0` the lattice generator is `∇²_h / 4`.
pub fn lattice_to_continuum_time(t: f64) -> f64 {
    0.25 * t
}
