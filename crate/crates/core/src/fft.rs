//! Discrete Fourier transforms on square complex arrays.
//!
//! Power-of-two lengths go through an iterative radix-2 transform; any other
//! length falls back to a direct `O(n²)` sum per line. Transforms are
//! unnormalized: `sign = +1` computes `Σ_j x_j e^{+2πi jk/n}`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Plan for 1-d transforms of a fixed length and direction.
#[derive(Debug, Clone)]
pub struct Dft1d {
    n: usize,
    sign: f64,
    // e^{sign·2πi k/n} for k in 0..n
    twiddles: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Dft1d {
    pub fn new(n: usize, sign: i32) -> Self {
        assert!(n > 0, "transform length must be positive");
        let sign = if sign >= 0 { 1.0 } else { -1.0 };
        let twiddles = (0..n)
            .map(|k| {
                let theta = sign * 2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(theta), libm::sin(theta))
            })
            .collect();
        Dft1d {
            n,
            sign,
            twiddles,
            scratch: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn process(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n);
        if self.n.is_power_of_two() {
            self.radix2(data);
        } else {
            self.direct(data);
        }
    }

    fn direct(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        for (k, out) in self.scratch.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in data.iter().enumerate() {
                acc += x * self.twiddles[(j * k) % n];
            }
            *out = acc;
        }
        data.copy_from_slice(&self.scratch);
    }

    fn radix2(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        if n == 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let u = data[start + k];
                    let v = data[start + k + half] * w;
                    data[start + k] = u + v;
                    data[start + k + half] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

/// In-place 2-d transform of a row-major `n × n` array: rows, then columns.
pub fn dft2d(data: &mut [Complex64], n: usize, sign: i32) {
    assert_eq!(data.len(), n * n);
    let mut plan = Dft1d::new(n, sign);
    for row in data.chunks_exact_mut(n) {
        plan.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for b in 0..n {
        for a in 0..n {
            column[a] = data[a * n + b];
        }
        plan.process(&mut column);
        for a in 0..n {
            data[a * n + b] = column[a];
        }
    }
}
