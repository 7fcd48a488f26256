//! Inversive distance circle packings on closed triangulated surfaces.
//!
//! The numerical core is generic over [`scalar::Real`] (`f32` or `f64`).
//! Audits and the document format work in `f64`.

pub mod audit;
pub mod complex;
pub mod curvature;
pub mod document;
pub mod error;
pub mod euclidean;
pub mod fixtures;
pub mod hyperbolic;
pub mod kernel;
pub mod linalg;
pub mod parallel;
pub mod potential;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use complex::{Edge, FaceWeightTriple, Geometry};
pub use curvature::{alpha_curvature, curvature, global_jacobian};
pub use error::{Error, Result};
pub use potential::CurvatureTarget;
pub use scalar::Real;
pub use solver::{solve, SolveConfig, SolveStatus};

pub type WeightedComplex = complex::WeightedComplex<f64>;
pub type PackingMetric = complex::PackingMetric<f64>;
pub type PotentialSpec = potential::PotentialSpec<f64>;
pub type SolveOutcome = solver::SolveOutcome<f64>;

pub type WeightedComplexF32 = complex::WeightedComplex<f32>;
pub type PackingMetricF32 = complex::PackingMetric<f32>;
pub type PotentialSpecF32 = potential::PotentialSpec<f32>;
pub type SolveOutcomeF32 = solver::SolveOutcome<f32>;
