#![no_std]

//! Heat flow on discrete Liouville quantum gravity.
//!
//! This crate holds the numerical core: spectral sampling of the discrete
//! Gaussian free field on the square torus, the Liouville measure built from a
//! sample, the Liouville Laplacian `m⁻¹Δ`, a Crank–Nicolson integrator with a
//! matrix-free preconditioned conjugate-gradient solver, and the heat-kernel
//! analyses (on-diagonal decay, spectral dimension, profile cuts and the
//! scaling-collapse fit of the space-time exponent).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the companion `lqg-lab` crate.

extern crate alloc;

pub mod analysis;
pub mod cg;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod field;
pub mod grid;
pub mod measure;
pub mod operator;

pub use crate::analysis::{
    collapse_cost, euclidean_reference, fit_alpha, heat_ball_radius, horizontal_cut,
    on_diagonal_series, spectral_dimension, vertical_cut, CollapseParams, CollapseReport,
    CutDirection, OnDiagSeries, ProfileEntry, ProfileSet,
};
pub use crate::error::{Error, Result};
pub use crate::evolve::{
    cn_step, dense_heat_oracle, evolve, CgRecord, EvolveConfig, SnapshotSchedule, Trajectory,
};
pub use crate::field::{
    field_variance, green_function, sample_gff, torus_eigenvalues, FieldSample,
};
pub use crate::grid::{LatticePoint, ScalarGrid, TorusSize};
pub use crate::measure::{high_points, high_points_separated, liouville_weights, LiouvilleWeights};
pub use crate::operator::{apply_generator, apply_laplacian, cn_system_apply, GeneratorContext};
