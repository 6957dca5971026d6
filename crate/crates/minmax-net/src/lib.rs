//! Learning of continuous piecewise-linear functions with MinMax networks:
//! sums of min/max combinations of affine basic neurons, trained by discrete
//! constrained gradient descent with Lagrange-multiplier edge constraints,
//! plus numerical certification of the per-step contraction properties.
//!
//! The crate is generic over the scalar type through [`scalar::Real`];
//! concrete aliases for `f32` and `f64` live at the crate root.

pub mod benchmarks;
pub mod constraints;
pub mod contraction;
pub mod dataset;
pub mod error;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod simplex;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` aliases (the default precision for the CLI and benchmarks).
pub type Network64 = model::Network<f64>;
pub type Dataset64 = dataset::Dataset<f64>;
pub type DenseMatrix64 = numerics::DenseMatrix<f64>;
pub type TrainerConfig64 = trainer::TrainerConfig<f64>;
pub type ContractionReport64 = contraction::ContractionReport<f64>;

/// `f32` aliases.
pub type Network32 = model::Network<f32>;
pub type Dataset32 = dataset::Dataset<f32>;
pub type DenseMatrix32 = numerics::DenseMatrix<f32>;
pub type TrainerConfig32 = trainer::TrainerConfig<f32>;
pub type ContractionReport32 = contraction::ContractionReport<f32>;
