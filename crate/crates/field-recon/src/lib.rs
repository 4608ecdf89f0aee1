//! Reconstruction of bandlimited fields from irregular, noisy,
//! position-jittered sensor samples.
//!
//! The library models a periodic field with `2M+1` harmonics sampled by `r`
//! sensors, reconstructs its spectrum with linear filters (matched filter,
//! zero forcing, LMMSE, jitter-aware LMMSE, and a linear-interpolation
//! baseline), and evaluates the mean square error three ways: empirical
//! Monte Carlo, finite-size trace formulas, and asymptotic closed forms
//! driven by sampled eigenvalue distributions of the scaled Gram matrix.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability, and the `field-recon` binary for the experiment runner.

// Parameter guards are written as `!(x >= 0.0)` on purpose: the negation
// also rejects NaN, which `x < 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod experiment;
pub mod filters;
pub mod linalg;
pub mod model;
pub mod mse;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use filters::{Filter, FilterKind};
pub use model::{FieldSpectrum, FourierMatrix, MeasurementSet, ScenarioParams, SensorLayout};
pub use mse::{EigenSample, Model, MseReport, PsiMatrix};
