//! Liouville measure density and high points of a field sample.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::grid::{LatticePoint, ScalarGrid, TorusSize};

/// Pointwise density `m(x) = exp(γX(x) − γ²σ²/2)` of the Liouville measure
/// against counting measure normalized by `n⁻²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleWeights {
    pub grid: ScalarGrid,
    pub gamma: f64,
    /// `(1/n²)·Σ_x m(x)`.
    pub total_mass: f64,
}

impl LiouvilleWeights {
    pub fn size(&self) -> TorusSize {
        self.grid.size()
    }

    /// Checks that every weight is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        for (index, &value) in self.grid.values().iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::BadWeight { index, value });
            }
        }
        Ok(())
    }
}

pub fn liouville_weights(field: &FieldSample, gamma: f64) -> Result<LiouvilleWeights> {
    if !(0.0..2.0).contains(&gamma) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "coupling must lie in [0, 2)",
        });
    }
    let shift = 0.5 * gamma * gamma * field.sigma2;
    let n = field.size();
    let mut values = Vec::with_capacity(n.sites());
    for (index, &x) in field.grid.values().iter().enumerate() {
        let m = libm::exp(gamma * x - shift);
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::BadWeight { index, value: m });
        }
        values.push(m);
    }
    let total_mass = values.iter().sum::<f64>() / n.sites() as f64;
    let grid = ScalarGrid::from_vec(n, values)?;
    Ok(LiouvilleWeights {
        grid,
        gamma,
        total_mass,
    })
}

/// The `k` sites with the largest field values, highest first, ties broken by
/// row-major index.
pub fn high_points(field: &FieldSample, k: usize) -> Result<Vec<LatticePoint>> {
    high_points_separated(field, k, 0)
}

/// Like [`high_points`], but greedily skips any candidate whose sup-norm
/// distance to an already selected point is below `min_separation`. With
/// separation 0 or 1 this is exactly the top-`k` list.
pub fn high_points_separated(
    field: &FieldSample,
    k: usize,
    min_separation: usize,
) -> Result<Vec<LatticePoint>> {
    let n = field.size();
    if k == 0 || k > n.sites() {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "number of high points must be in 1..=n²",
        });
    }
    let values = field.grid.values();
    let mut order: Vec<usize> = (0..n.sites()).collect();
    // stable sort keeps row-major order among equal values
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let mut picked: Vec<LatticePoint> = Vec::with_capacity(k);
    for i in order {
        let p = LatticePoint::from_index(n, i);
        if picked
            .iter()
            .all(|q| q.linf_distance(p, n) >= min_separation)
        {
            picked.push(p);
            if picked.len() == k {
                return Ok(picked);
            }
        }
    }
    Err(Error::InsufficientData(
        "not enough sites satisfy the minimum separation",
    ))
}
