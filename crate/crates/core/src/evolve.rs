//! Crank–Nicolson time stepping of `∂ₜu = Δ_M u` from an indicator initial
//! condition.
//!
//! The scheme `(I − (dt/2)Δ_M)u' = (I + (dt/2)Δ_M)u` is multiplied through by
//! `D = diag(m)`, giving the symmetric positive definite system
//! `(D − (dt/2)Δ)u' = (D + (dt/2)Δ)u`, solved by Jacobi-preconditioned CG with
//! the previous step as the initial guess. Because `A𝟙 = B𝟙 = m`, the weighted
//! mass `Σ u·m` is conserved exactly in exact arithmetic, and `D(A⁻¹B)ᵏ` is
//! symmetric so `m(y)·p_k(x,y) = m(x)·p_k(y,x)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::analysis::{heat_ball_radius, CutDirection};
use crate::cg::PcgSolver;
use crate::error::{Error, Result};
use crate::grid::{LatticePoint, ScalarGrid};
use crate::operator::{cn_apply_into, cn_implicit_diagonal, laplacian_into, CnSide, GeneratorContext};

/// Iterations at which snapshots are stored. Iteration 0 is always stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SnapshotSchedule {
    /// Every `stride` iterations.
    Stride(usize),
    /// An explicit, strictly increasing list.
    Explicit(Vec<usize>),
}

impl SnapshotSchedule {
    /// Multiples of `stride` merged with `count` geometrically spaced
    /// iterations in `[1, total_steps]`. The geometric part resolves early
    /// times that a coarse linear stride would skip.
    pub fn stride_with_geometric(stride: usize, count: usize, total_steps: usize) -> Self {
        let mut iters = Vec::new();
        if stride > 0 {
            iters.extend((1..=total_steps / stride).map(|k| k * stride));
        }
        if count > 0 && total_steps > 0 {
            let top = libm::log(total_steps as f64);
            for i in 0..count {
                let frac = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
                let k = libm::round(libm::exp(top * frac)) as usize;
                iters.push(k.clamp(1, total_steps));
            }
        }
        iters.sort_unstable();
        iters.dedup();
        SnapshotSchedule::Explicit(iters)
    }

    /// The concrete snapshot iterations (including 0) up to `total_steps`.
    pub fn iterations(&self, total_steps: usize) -> Vec<usize> {
        let mut out = vec![0];
        match self {
            SnapshotSchedule::Stride(s) => {
                if *s > 0 {
                    out.extend((1..=total_steps / s).map(|k| k * s));
                }
            }
            SnapshotSchedule::Explicit(list) => {
                out.extend(list.iter().copied().filter(|&k| k > 0 && k <= total_steps));
            }
        }
        out
    }

    fn validate(&self, total_steps: usize) -> Result<()> {
        match self {
            SnapshotSchedule::Stride(0) => Err(Error::InvalidParameter {
                name: "snapshot_stride",
                reason: "stride must be positive",
            }),
            SnapshotSchedule::Stride(_) => Ok(()),
            SnapshotSchedule::Explicit(list) => {
                if list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter {
                        name: "snapshot_schedule",
                        reason: "snapshot iterations must be strictly increasing",
                    });
                }
                if list.last().is_some_and(|&k| k > total_steps) {
                    return Err(Error::InvalidParameter {
                        name: "snapshot_schedule",
                        reason: "snapshot iteration beyond total_steps",
                    });
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    /// Relative residual tolerance of each CG solve.
    pub cg_tol: f64,
    /// CG iteration cap; `None` means `10·n`.
    pub cg_max_iters: Option<usize>,
    pub schedule: SnapshotSchedule,
    pub total_steps: usize,
    /// Snapshots must satisfy `u ≥ −positivity_tol·max(u)`.
    pub positivity_tol: f64,
    /// Stop after the first snapshot whose heat-ball radius exceeds this many
    /// lattice units (or that has no radius within `n/2`).
    pub stop_radius: Option<f64>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            dt: 1.0,
            cg_tol: 1e-12,
            cg_max_iters: None,
            schedule: SnapshotSchedule::Stride(10_000),
            total_steps: 0,
            positivity_tol: 1e-9,
            stop_radius: None,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "time step must be positive and finite",
            });
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "cg_tol",
                reason: "tolerance must lie in (0, 1)",
            });
        }
        if self.cg_max_iters == Some(0) {
            return Err(Error::InvalidParameter {
                name: "cg_max_iters",
                reason: "iteration cap must be positive",
            });
        }
        if !(self.positivity_tol >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "positivity_tol",
                reason: "tolerance must be non-negative",
            });
        }
        if self.stop_radius.is_some_and(|r| !(r > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "stop_radius",
                reason: "stop radius must be positive",
            });
        }
        self.schedule.validate(self.total_steps)
    }

    pub fn max_iters_for(&self, n: usize) -> usize {
        self.cg_max_iters.unwrap_or(10 * n)
    }
}

/// CG diagnostics of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgRecord {
    /// The iteration whose state was produced by this solve.
    pub iter: usize,
    pub cg_iters: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: LatticePoint,
    pub config: EvolveConfig,
    /// `(iteration, u)`, iteration 0 first. Stored unclamped.
    pub snapshots: Vec<(usize, ScalarGrid)>,
    /// `(iteration, Σ u·m)` at 0, every 100 iterations, and the final one.
    pub mass_series: Vec<(usize, f64)>,
    pub cg_records: Vec<CgRecord>,
}

impl Trajectory {
    pub fn time_of(&self, iter: usize) -> f64 {
        iter as f64 * self.config.dt
    }

    /// Largest `|mass_k − mass_0| / |mass_0|` over the mass series.
    pub fn relative_mass_drift(&self) -> f64 {
        let Some(&(_, m0)) = self.mass_series.first() else {
            return 0.0;
        };
        self.mass_series
            .iter()
            .map(|&(_, m)| (m - m0).abs() / m0.abs())
            .fold(0.0, f64::max)
    }

    pub fn snapshot(&self, iter: usize) -> Option<&ScalarGrid> {
        self.snapshots
            .iter()
            .find(|(k, _)| *k == iter)
            .map(|(_, g)| g)
    }
}

/// Stateful Crank–Nicolson integrator holding the CG workspace.
pub struct CnStepper<'a> {
    ctx: &'a GeneratorContext,
    dt: f64,
    tol: f64,
    max_iters: usize,
    solver: PcgSolver,
    rhs: Vec<f64>,
}

impl<'a> CnStepper<'a> {
    pub fn new(ctx: &'a GeneratorContext, config: &EvolveConfig) -> Result<Self> {
        config.validate()?;
        let solver = PcgSolver::new(cn_implicit_diagonal(ctx, config.dt))?;
        Ok(CnStepper {
            ctx,
            dt: config.dt,
            tol: config.cg_tol,
            max_iters: config.max_iters_for(ctx.size().get()),
            solver,
            rhs: vec![0.0; ctx.size().sites()],
        })
    }

    /// Advances `u` in place by one step. Returns `(cg_iters, residual)`.
    pub fn step(&mut self, u: &mut [f64]) -> Result<(usize, f64)> {
        let ctx = self.ctx;
        let dt = self.dt;
        let _ = cn_apply_into(ctx, dt, CnSide::Explicit, u, &mut self.rhs);
        let out = self.solver.solve(
            |x, y| cn_apply_into(ctx, dt, CnSide::Implicit, x, y),
            &self.rhs,
            u,
            self.tol,
            self.max_iters,
        )?;
        Ok((out.iterations, out.residual))
    }
}

/// One Crank–Nicolson step from `u`, warm-started at `u`.
pub fn cn_step(
    ctx: &GeneratorContext,
    config: &EvolveConfig,
    u: &ScalarGrid,
) -> Result<(ScalarGrid, usize)> {
    if !u.is_finite() {
        return Err(Error::InvalidParameter {
            name: "u",
            reason: "state must be finite",
        });
    }
    if u.size() != ctx.size() {
        return Err(Error::SizeMismatch {
            expected: ctx.size().get(),
            found: u.side(),
        });
    }
    let mut stepper = CnStepper::new(ctx, config)?;
    let mut next = u.clone();
    let (iters, _) = stepper.step(next.values_mut())?;
    Ok((next, iters))
}

const MASS_EVERY: usize = 100;

/// Evolves `𝟙_start` for `config.total_steps` iterations, or until the
/// heat ball outgrows `config.stop_radius`.
pub fn evolve(
    ctx: &GeneratorContext,
    start: LatticePoint,
    config: &EvolveConfig,
) -> Result<Trajectory> {
    let n = ctx.size();
    if start.a >= n.get() || start.b >= n.get() {
        return Err(Error::InvalidParameter {
            name: "start",
            reason: "start point outside the lattice",
        });
    }
    let mut stepper = CnStepper::new(ctx, config)?;
    let schedule = config.schedule.iterations(config.total_steps);
    let mut next_snap = 1;

    let mut u = ScalarGrid::indicator(n, start);
    let mut traj = Trajectory {
        start,
        config: config.clone(),
        snapshots: vec![(0, u.clone())],
        mass_series: vec![(0, ctx.mass(&u))],
        cg_records: Vec::with_capacity(config.total_steps),
    };

    for k in 1..=config.total_steps {
        let (cg_iters, residual) = stepper
            .step(u.values_mut())
            .map_err(|e| Error::StepFailed {
                step: k,
                source: alloc::boxed::Box::new(e),
            })?;
        traj.cg_records.push(CgRecord {
            iter: k,
            cg_iters,
            residual,
        });
        if k % MASS_EVERY == 0 || k == config.total_steps {
            traj.mass_series.push((k, ctx.mass(&u)));
        }
        if next_snap < schedule.len() && schedule[next_snap] == k {
            let (min, max) = (u.min(), u.max());
            if min < -config.positivity_tol * max {
                return Err(Error::PositivityViolation { step: k, min, max });
            }
            traj.snapshots.push((k, u.clone()));
            next_snap += 1;
            if let Some(limit) = config.stop_radius {
                let r = heat_ball_radius(&u, start, CutDirection::Horizontal);
                if r.map_or(true, |r| r > limit) {
                    if k % MASS_EVERY != 0 && k != config.total_steps {
                        traj.mass_series.push((k, ctx.mass(&u)));
                    }
                    break;
                }
            }
        }
    }
    Ok(traj)
}

/// Largest lattice side accepted by [`dense_heat_oracle`].
pub const DENSE_ORACLE_MAX_SIDE: usize = 16;

/// Dense symmetric eigendecomposition of `D^{-1/2} Δ D^{-1/2}`, the generator
/// `Δ_M` in the `m`-weighted frame.
pub struct DenseHeatPropagator {
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    sqrt_m: Vec<f64>,
    side: usize,
}

impl DenseHeatPropagator {
    pub fn new(ctx: &GeneratorContext) -> Result<Self> {
        let n = ctx.size();
        if n.get() > DENSE_ORACLE_MAX_SIDE {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "dense heat oracle is limited to n <= 16",
            });
        }
        let sites = n.sites();
        let sqrt_m: Vec<f64> = ctx.m().iter().map(|&m| libm::sqrt(m)).collect();
        let mut sym = DMatrix::<f64>::zeros(sites, sites);
        let mut e = vec![0.0; sites];
        let mut col = vec![0.0; sites];
        for j in 0..sites {
            e[j] = 1.0;
            laplacian_into(n, &e, &mut col);
            e[j] = 0.0;
            for i in 0..sites {
                sym[(i, j)] = col[i] / (sqrt_m[i] * sqrt_m[j]);
            }
        }
        // remove round-off asymmetry before the symmetric solver
        let sym = (&sym + sym.transpose()) * 0.5;
        Ok(DenseHeatPropagator {
            eigen: SymmetricEigen::new(sym),
            sqrt_m,
            side: n.get(),
        })
    }

    /// `exp(t·Δ_M)·𝟙_start`.
    pub fn heat(&self, start: LatticePoint, t: f64) -> ScalarGrid {
        let sites = self.sqrt_m.len();
        let x = start.a * self.side + start.b;
        let q = &self.eigen.eigenvectors;
        // coefficients of D^{1/2}𝟙_x in the eigenbasis, decayed by e^{tλ}
        let coeff = DVector::from_iterator(
            sites,
            (0..sites).map(|k| {
                q[(x, k)] * self.sqrt_m[x] * libm::exp(t * self.eigen.eigenvalues[k])
            }),
        );
        let v = q * coeff;
        let n = crate::grid::TorusSize::new(self.side).expect("side >= 2");
        ScalarGrid::from_fn(n, |a, b| {
            let i = a * self.side + b;
            v[i] / self.sqrt_m[i]
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eigen.eigenvalues.as_slice()
    }
}

/// Exact `exp(t·Δ_M)·𝟙_start` by dense eigendecomposition; `n ≤ 16` only.
pub fn dense_heat_oracle(
    ctx: &GeneratorContext,
    start: LatticePoint,
    t: f64,
) -> Result<ScalarGrid> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "time must be non-negative and finite",
        });
    }
    Ok(DenseHeatPropagator::new(ctx)?.heat(start, t))
}
