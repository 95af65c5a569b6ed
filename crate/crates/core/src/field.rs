//! Discrete Gaussian free field on the torus by spectral synthesis, together
//! with the exact spectral quantities (Laplacian eigenvalues, Green's
//! function, pointwise variance) that the sampler must reproduce.
//!
//! The field has covariance `E[X(x)X(y)] = 2π·G(x − y)` where `G` inverts the
//! unnormalized graph Laplacian (eigenvalues `4sin²(πj/n) + 4sin²(πk/n)`) on
//! the mean-zero subspace.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::dft2d;
use crate::grid::{ScalarGrid, TorusSize};

/// A free field realization and the exact variance it was drawn with.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: ScalarGrid,
    pub seed: u64,
    pub sigma2: f64,
}

impl FieldSample {
    pub fn size(&self) -> TorusSize {
        self.grid.size()
    }
}

#[inline]
fn sin2(k: usize, n: usize) -> f64 {
    let s = libm::sin(PI * k as f64 / n as f64);
    s * s
}

/// Eigenvalues `λ_{j,k} = 4sin²(πj/n) + 4sin²(πk/n)` of the unnormalized
/// torus Laplacian, with zero-based `(j, k)` laid out as a grid.
pub fn torus_eigenvalues(n: TorusSize) -> ScalarGrid {
    let side = n.get();
    let s: Vec<f64> = (0..side).map(|k| sin2(k, side)).collect();
    ScalarGrid::from_fn(n, |j, k| 4.0 * s[j] + 4.0 * s[k])
}

/// `E[X(x)²] = (2π/n²)·Σ_{(j,k)≠0} 1/λ_{j,k}`, summed row-major over the
/// eigenvalue grid.
pub fn field_variance(n: TorusSize) -> f64 {
    let lambda = torus_eigenvalues(n);
    let sum: f64 = lambda.values()[1..].iter().map(|l| 1.0 / l).sum();
    2.0 * PI * sum / n.sites() as f64
}

/// Torus Green's function at offset `(dx, dy)`:
/// `(1/n²)·Σ_{(j,k)≠0} cos(2π(j·dx + k·dy)/n) / λ_{j,k}`.
pub fn green_function(n: TorusSize, dx: i64, dy: i64) -> f64 {
    let side = n.get();
    let dx = n.wrap(dx);
    let dy = n.wrap(dy);
    let s: Vec<f64> = (0..side).map(|k| sin2(k, side)).collect();
    // cos table indexed by (phase mod n)
    let cos: Vec<f64> = (0..side)
        .map(|p| libm::cos(2.0 * PI * p as f64 / side as f64))
        .collect();
    let mut total = 0.0;
    for j in 0..side {
        let mut row = 0.0;
        for k in 0..side {
            if j == 0 && k == 0 {
                continue;
            }
            let phase = (j * dx + k * dy) % side;
            row += cos[phase] / (4.0 * s[j] + 4.0 * s[k]);
        }
        total += row;
    }
    total / n.sites() as f64
}

/// Complex spectral coefficients `X̃(j,k) = √(2π)(Z¹ + iZ²)/√λ_{j,k}` with the
/// zero mode set to 0. The normals are drawn row-major, `Z¹` before `Z²`, from
/// a ChaCha20 stream seeded with `seed`.
pub fn gff_coefficients(n: TorusSize, seed: u64) -> Vec<Complex64> {
    let side = n.get();
    let s: Vec<f64> = (0..side).map(|k| sin2(k, side)).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let amp = libm::sqrt(2.0 * PI);
    let mut out = Vec::with_capacity(n.sites());
    for j in 0..side {
        for k in 0..side {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            if j == 0 && k == 0 {
                out.push(Complex64::new(0.0, 0.0));
            } else {
                let scale = amp / (2.0 * libm::sqrt(s[j] + s[k]));
                out.push(Complex64::new(z1 * scale, z2 * scale));
            }
        }
    }
    out
}

/// Draws a free field: `X(a,b) = Re[(1/n)·Σ_{j,k} X̃(j,k)·e^{2πi(ja + kb)/n}]`.
pub fn sample_gff(n: TorusSize, seed: u64) -> FieldSample {
    let side = n.get();
    let mut coeffs = gff_coefficients(n, seed);
    dft2d(&mut coeffs, side, 1);
    let inv = 1.0 / side as f64;
    let values: Vec<f64> = coeffs.iter().map(|c| c.re * inv).collect();
    let grid = ScalarGrid::from_vec(n, values).expect("finite spectral synthesis");
    FieldSample {
        grid,
        seed,
        sigma2: field_variance(n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(n: usize) -> TorusSize {
        TorusSize::new(n).unwrap()
    }

    #[test]
    fn eigenvalues_of_two_torus() {
        let mut l = torus_eigenvalues(size(2)).into_values();
        l.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [0.0, 4.0, 4.0, 8.0];
        for (a, b) in l.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalue_at_half_frequency() {
        let l = torus_eigenvalues(size(4));
        assert!((l.at(2, 2) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn exactly_one_zero_eigenvalue() {
        for n in [2, 3, 5, 8, 16] {
            let l = torus_eigenvalues(size(n));
            assert_eq!(l.at(0, 0), 0.0);
            assert_eq!(l.values().iter().filter(|&&v| v == 0.0).count(), 1);
        }
    }

    #[test]
    fn eigenvalues_reflect_about_nyquist() {
        let n = 12;
        let l = torus_eigenvalues(size(n));
        for j in 0..n {
            for k in 0..n {
                let jr = (n - j) % n;
                let kr = (n - k) % n;
                assert!((l.at(j, k) - l.at(jr, kr)).abs() < 1e-12);
                assert!((l.at(j, k) - l.at(jr, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variance_of_two_torus_is_five_pi_over_sixteen() {
        let v = field_variance(size(2));
        assert!((v - 5.0 * PI / 16.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn green_function_symmetries() {
        let n = size(4);
        let g10 = green_function(n, 1, 0);
        assert!((g10 - green_function(n, 0, 1)).abs() < 1e-14);
        assert!((g10 - green_function(n, 3, 0)).abs() < 1e-14);
        assert!((g10 - green_function(n, -1, 0)).abs() < 1e-14);
        let n = size(7);
        assert!((green_function(n, 2, 5) - green_function(n, 5, 2)).abs() < 1e-14);
        assert!((green_function(n, 2, 5) - green_function(n, -2, -5)).abs() < 1e-14);
    }

    #[test]
    fn green_function_has_zero_row_sum() {
        let n = size(8);
        let mut total = 0.0;
        for dx in 0..8 {
            for dy in 0..8 {
                total += green_function(n, dx, dy);
            }
        }
        assert!(total.abs() < 1e-12, "{total}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let n = size(16);
        assert_eq!(sample_gff(n, 42), sample_gff(n, 42));
        assert_ne!(sample_gff(n, 42).grid, sample_gff(n, 43).grid);
    }

    #[test]
    fn samples_have_zero_mean() {
        for n in [8, 16, 12, 64] {
            let f = sample_gff(size(n), 7);
            let tol = 1e-10 * n as f64 * libm::sqrt(f.sigma2);
            assert!(f.grid.mean().abs() < tol);
            assert_eq!(f.sigma2, field_variance(size(n)));
        }
    }
}
