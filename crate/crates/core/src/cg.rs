//! Jacobi-preconditioned conjugate gradients for matrix-free SPD operators.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖ / ‖b‖`.
    pub residual: f64,
}

/// Reusable buffers for repeated solves of the same size.
#[derive(Debug, Clone)]
pub struct PcgSolver {
    diag_inv: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

const LANES: usize = 8;

/// Dot product with independent partial sums, so the reduction is not one
/// serial chain of dependent additions.
#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; LANES];
    let xc = x.chunks_exact(LANES);
    let yc = y.chunks_exact(LANES);
    let tail: f64 = xc
        .remainder()
        .iter()
        .zip(yc.remainder())
        .map(|(a, b)| a * b)
        .sum();
    for (a, b) in xc.zip(yc) {
        for l in 0..LANES {
            acc[l] += a[l] * b[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

impl PcgSolver {
    /// `diagonal` is the diagonal of the operator; it must be positive.
    pub fn new(diagonal: impl IntoIterator<Item = f64>) -> Result<Self> {
        let diag_inv: Vec<f64> = diagonal.into_iter().map(|d| 1.0 / d).collect();
        if diag_inv.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "diagonal",
                reason: "jacobi preconditioner needs a positive finite diagonal",
            });
        }
        let len = diag_inv.len();
        Ok(PcgSolver {
            diag_inv,
            r: vec![0.0; len],
            p: vec![0.0; len],
            q: vec![0.0; len],
        })
    }

    pub fn len(&self) -> usize {
        self.diag_inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag_inv.is_empty()
    }

    /// Solves `A x = b` starting from the contents of `x`.
    ///
    /// `apply(x, y)` must write `A x` into `y` and return the dot product
    /// `x·y`; fusing the two keeps the inner loop at three sweeps.
    ///
    /// Converged when the true residual satisfies `‖b − Ax‖ ≤ tol·‖b‖`. The
    /// recurrence residual is used inside the loop and the true residual is
    /// recomputed before accepting, restarting if they have drifted apart.
    pub fn solve(
        &mut self,
        mut apply: impl FnMut(&[f64], &mut [f64]) -> f64,
        b: &[f64],
        x: &mut [f64],
        tol: f64,
        max_iters: usize,
    ) -> Result<CgOutcome> {
        let len = self.len();
        assert_eq!(b.len(), len);
        assert_eq!(x.len(), len);

        let b_norm = libm::sqrt(dot(b, b));
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(CgOutcome {
                iterations: 0,
                residual: 0.0,
            });
        }
        let target = tol * b_norm;
        let mut iterations = 0;

        loop {
            apply(x, &mut self.q);
            for i in 0..len {
                self.r[i] = b[i] - self.q[i];
            }
            let mut r_norm = libm::sqrt(dot(&self.r, &self.r));
            if r_norm <= target {
                return Ok(CgOutcome {
                    iterations,
                    residual: r_norm / b_norm,
                });
            }
            if iterations >= max_iters {
                return Err(Error::CgNotConverged {
                    iterations,
                    residual: r_norm / b_norm,
                });
            }

            for i in 0..len {
                self.p[i] = self.diag_inv[i] * self.r[i];
            }
            let mut rz = dot(&self.r, &self.p);

            while r_norm > target && iterations < max_iters {
                let pq = apply(&self.p, &mut self.q);
                if !(pq > 0.0) {
                    // lost positive definiteness to round-off; recheck from scratch
                    break;
                }
                let alpha = rz / pq;
                let (rr, rz_new) = update_solution(alpha, &self.p, &self.q, &self.diag_inv, x, &mut self.r);
                iterations += 1;
                r_norm = libm::sqrt(rr);
                if r_norm <= target {
                    break;
                }
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..len {
                    self.p[i] = self.diag_inv[i] * self.r[i] + beta * self.p[i];
                }
            }
        }
    }
}

/// `x += αp`, `r −= αq`; returns `(r·r, r·D⁻¹r)` for the new residual.
#[inline]
fn update_solution(
    alpha: f64,
    p: &[f64],
    q: &[f64],
    diag_inv: &[f64],
    x: &mut [f64],
    r: &mut [f64],
) -> (f64, f64) {
    let mut rr = [0.0; LANES];
    let mut rz = [0.0; LANES];
    let len = x.len();
    let body = len - len % LANES;
    for base in (0..body).step_by(LANES) {
        for l in 0..LANES {
            let i = base + l;
            x[i] += alpha * p[i];
            let ri = r[i] - alpha * q[i];
            r[i] = ri;
            rr[l] += ri * ri;
            rz[l] += ri * ri * diag_inv[i];
        }
    }
    let (mut rr_t, mut rz_t) = (0.0, 0.0);
    for i in body..len {
        x[i] += alpha * p[i];
        let ri = r[i] - alpha * q[i];
        r[i] = ri;
        rr_t += ri * ri;
        rz_t += ri * ri * diag_inv[i];
    }
    (
        rr.iter().sum::<f64>() + rr_t,
        rz.iter().sum::<f64>() + rz_t,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    // tridiagonal SPD test matrix: 4 on the diagonal, -1 off it, scaled rows
    fn tridiag(scale: &[f64]) -> impl Fn(&[f64], &mut [f64]) -> f64 + '_ {
        move |x: &[f64], y: &mut [f64]| {
            let n = x.len();
            for i in 0..n {
                let mut v = (4.0 + scale[i]) * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
            dot(x, y)
        }
    }

    #[test]
    fn solves_tridiagonal_system() {
        let n = 50;
        let scale: Vec<f64> = (0..n).map(|i| (i % 7) as f64 * 10.0).collect();
        let a = tridiag(&scale);
        let x_true: Vec<f64> = (0..n).map(|i| libm::sin(i as f64)).collect();
        let mut b = vec![0.0; n];
        a(&x_true, &mut b);
        let mut solver = PcgSolver::new(scale.iter().map(|s| 4.0 + s)).unwrap();
        let mut x = vec![0.0; n];
        let out = solver.solve(&a, &b, &mut x, 1e-13, 500).unwrap();
        assert!(out.residual <= 1e-13);
        assert!(out.iterations <= n);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn exact_initial_guess_takes_no_iterations() {
        let scale = vec![1.0; 10];
        let a = tridiag(&scale);
        let x_true = vec![1.0; 10];
        let mut b = vec![0.0; 10];
        a(&x_true, &mut b);
        let mut x = x_true.clone();
        let mut solver = PcgSolver::new(vec![5.0; 10]).unwrap();
        let out = solver.solve(&a, &b, &mut x, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let scale = vec![0.0; 4];
        let mut x = vec![3.0; 4];
        let mut solver = PcgSolver::new(vec![4.0; 4]).unwrap();
        solver
            .solve(tridiag(&scale), &[0.0; 4], &mut x, 1e-10, 10)
            .unwrap();
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn reports_non_convergence() {
        let n = 200;
        let scale = vec![0.0; n];
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut x = vec![0.0; n];
        let mut solver = PcgSolver::new(vec![4.0; n]).unwrap();
        let err = solver
            .solve(tridiag(&scale), &b, &mut x, 1e-14, 2)
            .unwrap_err();
        match err {
            Error::CgNotConverged { iterations, residual } => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_diagonal() {
        assert!(PcgSolver::new([1.0, 0.0]).is_err());
        assert!(PcgSolver::new([1.0, -2.0]).is_err());
    }
}
