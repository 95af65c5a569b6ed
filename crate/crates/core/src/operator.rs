//! Graph Laplacian with edge weights 1/4, the Liouville generator `m⁻¹Δ`, and
//! the symmetric Crank–Nicolson operators `D ∓ (dt/2)Δ` with `D = diag(m)`.
//!
//! Everything is applied matrix-free with a 5-point periodic stencil.

use crate::error::{Error, Result};
use crate::grid::{ScalarGrid, TorusSize};
use crate::measure::LiouvilleWeights;

/// Writes `coef·(N(f) − 4f) + diag ⊙ f` into `out`, where `N(f)` is the sum
/// over the four periodic neighbours, and returns `f·out`. Shared kernel for
/// every operator here; a missing `diag` means zero.
fn stencil_into(n: usize, f: &[f64], out: &mut [f64], coef: f64, diag: Option<&[f64]>) -> f64 {
    assert_eq!(f.len(), n * n);
    assert_eq!(out.len(), n * n);
    let mut acc = 0.0;
    for a in 0..n {
        let up = &f[((a + n - 1) % n) * n..][..n];
        let down = &f[((a + 1) % n) * n..][..n];
        let row = &f[a * n..][..n];
        let dst = &mut out[a * n..][..n];
        let d = |b: usize| diag.map_or(0.0, |m| m[a * n + b]);
        let cell = |b: usize, left: f64, right: f64| {
            coef * (up[b] + down[b] + left + right - 4.0 * row[b]) + d(b) * row[b]
        };
        if n == 2 {
            dst[0] = cell(0, row[1], row[1]);
            dst[1] = cell(1, row[0], row[0]);
        } else {
            dst[0] = cell(0, row[n - 1], row[1]);
            dst[n - 1] = cell(n - 1, row[n - 2], row[0]);
            // interior columns, sliced to a common length so bounds checks vanish
            let len = n - 2;
            let (up, down, west, mid, east) = (
                &up[1..][..len],
                &down[1..][..len],
                &row[..len],
                &row[1..][..len],
                &row[2..][..len],
            );
            let dst_in = &mut dst[1..][..len];
            match diag {
                Some(m) => {
                    let m = &m[a * n + 1..][..len];
                    for i in 0..len {
                        dst_in[i] = coef * (up[i] + down[i] + west[i] + east[i] - 4.0 * mid[i])
                            + m[i] * mid[i];
                    }
                }
                None => {
                    for i in 0..len {
                        dst_in[i] = coef * (up[i] + down[i] + west[i] + east[i] - 4.0 * mid[i]);
                    }
                }
            }
        }
        acc += crate::cg::dot(row, dst);
    }
    acc
}

/// `(Δf)(x) = (1/4)·Σ_{y~x} (f(y) − f(x))` into a caller-provided buffer.
pub fn laplacian_into(n: TorusSize, f: &[f64], out: &mut [f64]) {
    stencil_into(n.get(), f, out, 0.25, None);
}

pub fn apply_laplacian(f: &ScalarGrid) -> ScalarGrid {
    let mut out = ScalarGrid::zeros(f.size());
    laplacian_into(f.size(), f.values(), out.values_mut());
    out
}

/// Liouville weights paired with their lattice, validated once so the
/// operators below can divide by `m` without further checks.
#[derive(Debug, Clone)]
pub struct GeneratorContext {
    weights: LiouvilleWeights,
}

impl GeneratorContext {
    pub fn new(weights: LiouvilleWeights) -> Result<Self> {
        weights.validate()?;
        Ok(GeneratorContext { weights })
    }

    /// Flat weights `m ≡ 1`, i.e. the ordinary lattice walk.
    pub fn flat(n: TorusSize) -> Self {
        GeneratorContext {
            weights: LiouvilleWeights {
                grid: ScalarGrid::constant(n, 1.0),
                gamma: 0.0,
                total_mass: 1.0,
            },
        }
    }

    #[inline]
    pub fn size(&self) -> TorusSize {
        self.weights.size()
    }

    #[inline]
    pub fn weights(&self) -> &LiouvilleWeights {
        &self.weights
    }

    #[inline]
    pub fn m(&self) -> &[f64] {
        self.weights.grid.values()
    }

    /// Measure-weighted total `Σ_x u(x)·m(x)`.
    pub fn mass(&self, u: &ScalarGrid) -> f64 {
        u.dot(&self.weights.grid)
    }

    fn check(&self, f: &ScalarGrid) -> Result<()> {
        if f.size() != self.size() {
            return Err(Error::SizeMismatch {
                expected: self.size().get(),
                found: f.side(),
            });
        }
        Ok(())
    }
}

/// `Δ_M f = m⁻¹ ⊙ Δf`.
pub fn apply_generator(ctx: &GeneratorContext, f: &ScalarGrid) -> Result<ScalarGrid> {
    ctx.check(f)?;
    let mut out = apply_laplacian(f);
    for (v, m) in out.values_mut().iter_mut().zip(ctx.m()) {
        *v /= m;
    }
    Ok(out)
}

/// Which side of the Crank–Nicolson system to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnSide {
    /// `A = D − (dt/2)Δ`, symmetric positive definite.
    Implicit,
    /// `B = D + (dt/2)Δ`.
    Explicit,
}

impl CnSide {
    pub fn from_sign(sign: i32) -> Self {
        if sign >= 0 {
            CnSide::Implicit
        } else {
            CnSide::Explicit
        }
    }

    #[inline]
    fn laplacian_coef(self, dt: f64) -> f64 {
        match self {
            CnSide::Implicit => -0.125 * dt,
            CnSide::Explicit => 0.125 * dt,
        }
    }
}

/// `m ⊙ f ∓ (dt/2)·Δf` into a buffer, returning `f·out`; no size checks.
pub fn cn_apply_into(
    ctx: &GeneratorContext,
    dt: f64,
    side: CnSide,
    f: &[f64],
    out: &mut [f64],
) -> f64 {
    let m = ctx.m();
    stencil_into(ctx.size().get(), f, out, side.laplacian_coef(dt), Some(m))
}

/// Diagonal of the implicit operator, `m + dt/2`.
pub fn cn_implicit_diagonal(ctx: &GeneratorContext, dt: f64) -> impl Iterator<Item = f64> + '_ {
    ctx.m().iter().map(move |m| m + 0.5 * dt)
}

/// `m ⊙ f − sign·(dt/2)·Δf`: `sign = +1` gives the implicit side `A`,
/// `sign = −1` the explicit side `B`.
pub fn cn_system_apply(
    ctx: &GeneratorContext,
    dt: f64,
    sign: i32,
    f: &ScalarGrid,
) -> Result<ScalarGrid> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "time step must be positive and finite",
        });
    }
    ctx.check(f)?;
    let mut out = ScalarGrid::zeros(f.size());
    cn_apply_into(ctx, dt, CnSide::from_sign(sign), f.values(), out.values_mut());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LatticePoint;
    use core::f64::consts::PI;

    fn size(n: usize) -> TorusSize {
        TorusSize::new(n).unwrap()
    }

    #[test]
    fn constants_are_harmonic() {
        for n in [2, 3, 8] {
            let f = ScalarGrid::constant(size(n), 3.25);
            assert!(apply_laplacian(&f).values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn indicator_stencil() {
        let n = size(4);
        let x0 = LatticePoint { a: 1, b: 2 };
        let lf = apply_laplacian(&ScalarGrid::indicator(n, x0));
        assert_eq!(lf[x0], -1.0);
        for (da, db) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            assert_eq!(lf.at_offset(x0, da, db), 0.25);
        }
        assert_eq!(lf.values().iter().filter(|&&v| v != 0.0).count(), 5);
    }

    #[test]
    fn plane_wave_is_an_eigenfunction() {
        let n = size(8);
        let f = ScalarGrid::from_fn(n, |a, _| libm::cos(2.0 * PI * a as f64 / 8.0));
        let lf = apply_laplacian(&f);
        let eig = (libm::cos(PI / 4.0) - 1.0) / 2.0;
        for (x, y) in lf.values().iter().zip(f.values()) {
            assert!((x - eig * y).abs() < 1e-14);
        }
    }

    #[test]
    fn two_torus_counts_doubled_neighbours() {
        // on T_2 each neighbour appears twice in the stencil
        let n = size(2);
        let f = ScalarGrid::from_vec(n, alloc::vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let lf = apply_laplacian(&f);
        assert_eq!(lf.values(), &[-1.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn flat_generator_is_laplacian() {
        let n = size(6);
        let f = ScalarGrid::from_fn(n, |a, b| (a * a + 3 * b) as f64);
        let ctx = GeneratorContext::flat(n);
        assert_eq!(apply_generator(&ctx, &f).unwrap(), apply_laplacian(&f));
    }

    #[test]
    fn rejects_bad_weights() {
        let n = size(2);
        let w = LiouvilleWeights {
            grid: ScalarGrid::from_vec(n, alloc::vec![1.0, 0.0, 1.0, 1.0]).unwrap(),
            gamma: 1.0,
            total_mass: 0.75,
        };
        assert!(matches!(
            GeneratorContext::new(w),
            Err(Error::BadWeight { index: 1, .. })
        ));
    }

    #[test]
    fn cn_sides_on_constants() {
        let n = size(4);
        let w = LiouvilleWeights {
            grid: ScalarGrid::from_fn(n, |a, b| 1.0 + (a + b) as f64),
            gamma: 0.5,
            total_mass: 1.0,
        };
        let ctx = GeneratorContext::new(w).unwrap();
        let c = ScalarGrid::constant(n, 2.0);
        for sign in [1, -1] {
            let out = cn_system_apply(&ctx, 0.7, sign, &c).unwrap();
            for (o, m) in out.values().iter().zip(ctx.m()) {
                assert!((o - 2.0 * m).abs() < 1e-14);
            }
        }
        assert!(cn_system_apply(&ctx, 0.0, 1, &c).is_err());
        assert!(cn_system_apply(&ctx, 1.0, 1, &ScalarGrid::zeros(size(3))).is_err());
    }

    #[test]
    fn small_dt_reduces_to_mass_matrix() {
        let n = size(4);
        let ctx = GeneratorContext::flat(n);
        let f = ScalarGrid::from_fn(n, |a, b| (a as f64) - 0.5 * b as f64);
        let out = cn_system_apply(&ctx, 1e-300, 1, &f).unwrap();
        assert!(out.max_abs_diff(&f) < 1e-280);
    }
}
