//! Lattice geometry of the square torus `(Z/nZ)²` and the scalar grids that
//! live on it.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Side length of the torus. Powers of two are fastest, any `n >= 2` works.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusSize(usize);

impl TorusSize {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "torus side must be at least 2",
            });
        }
        Ok(TorusSize(n))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Number of lattice sites, `n²`.
    #[inline]
    pub fn sites(self) -> usize {
        self.0 * self.0
    }

    #[inline]
    pub fn index(self, a: usize, b: usize) -> usize {
        a * self.0 + b
    }

    /// Reduces a signed offset into `[0, n)`.
    #[inline]
    pub fn wrap(self, k: i64) -> usize {
        k.rem_euclid(self.0 as i64) as usize
    }
}

/// A lattice site `(a, b)` with `a` the row and `b` the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub a: usize,
    pub b: usize,
}

impl LatticePoint {
    /// Builds a point with both coordinates reduced mod `n`.
    pub fn new(n: TorusSize, a: i64, b: i64) -> Self {
        LatticePoint {
            a: n.wrap(a),
            b: n.wrap(b),
        }
    }

    pub fn from_index(n: TorusSize, index: usize) -> Self {
        LatticePoint {
            a: index / n.get(),
            b: index % n.get(),
        }
    }

    #[inline]
    pub fn index(self, n: TorusSize) -> usize {
        n.index(self.a, self.b)
    }

    /// Sup-norm distance on the torus.
    pub fn linf_distance(self, other: LatticePoint, n: TorusSize) -> usize {
        let d = |x: usize, y: usize| {
            let d = x.abs_diff(y);
            d.min(n.get() - d)
        };
        d(self.a, other.a).max(d(self.b, other.b))
    }
}

/// An `n × n` array of reals on the torus, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    n: TorusSize,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(n: TorusSize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: TorusSize, c: f64) -> Self {
        ScalarGrid {
            n,
            values: vec![c; n.sites()],
        }
    }

    /// The indicator function of a single site.
    pub fn indicator(n: TorusSize, at: LatticePoint) -> Self {
        let mut g = Self::zeros(n);
        g[at] = 1.0;
        g
    }

    /// Wraps row-major values; rejects a length other than `n²` or any
    /// non-finite entry.
    pub fn from_vec(n: TorusSize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n.sites() {
            return Err(Error::SizeMismatch {
                expected: n.sites(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "grid values must be finite",
            });
        }
        Ok(ScalarGrid { n, values })
    }

    pub fn from_fn(n: TorusSize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n.sites());
        for a in 0..n.get() {
            for b in 0..n.get() {
                values.push(f(a, b));
            }
        }
        ScalarGrid { n, values }
    }

    #[inline]
    pub fn size(&self) -> TorusSize {
        self.n
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.n.get()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[self.n.index(a, b)]
    }

    /// Value at a signed offset from `p`, wrapping periodically.
    #[inline]
    pub fn at_offset(&self, p: LatticePoint, da: i64, db: i64) -> f64 {
        let a = self.n.wrap(p.a as i64 + da);
        let b = self.n.wrap(p.b as i64 + db);
        self.at(a, b)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Row-major index of the largest value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Euclidean inner product `Σ f(x) g(x)`.
    pub fn dot(&self, other: &ScalarGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &ScalarGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// A copy with entries below zero replaced by zero.
    pub fn clamped_nonnegative(&self) -> ScalarGrid {
        ScalarGrid {
            n: self.n,
            values: self.values.iter().map(|&v| v.max(0.0)).collect(),
        }
    }
}

impl Index<usize> for ScalarGrid {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl IndexMut<usize> for ScalarGrid {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

impl Index<LatticePoint> for ScalarGrid {
    type Output = f64;
    #[inline]
    fn index(&self, p: LatticePoint) -> &f64 {
        &self.values[p.index(self.n)]
    }
}

impl IndexMut<LatticePoint> for ScalarGrid {
    #[inline]
    fn index_mut(&mut self, p: LatticePoint) -> &mut f64 {
        let i = p.index(self.n);
        &mut self.values[i]
    }
}
