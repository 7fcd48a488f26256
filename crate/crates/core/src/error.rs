use thiserror::Error;

use crate::complex::Edge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("complex has no faces")]
    EmptyComplex,
    #[error("face {face} references vertex {vertex} outside [0, {vertex_count})")]
    VertexOutOfRange {
        face: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("face {face} repeats a vertex: {vertices:?}")]
    DegenerateFace { face: usize, vertices: [usize; 3] },
    #[error("face {face} duplicates face {first}")]
    DuplicateFace { face: usize, first: usize },
    #[error("edge {edge} lies in {count} faces; a closed surface needs exactly 2")]
    NonManifold { edge: Edge, count: usize },
    #[error("vertex {vertex} is not used by any face")]
    IsolatedVertex { vertex: usize },
    #[error("edge {edge} has no inversive distance")]
    MissingWeight { edge: Edge },
    #[error("edge {edge} is given more than one inversive distance")]
    DuplicateWeight { edge: Edge },
    #[error("inversive distance given for {edge}, which is not an edge of the complex")]
    UnknownEdge { edge: Edge },
    #[error("edge {edge} has inversive distance {value}, which is not > -1")]
    WeightOutOfRange { edge: Edge, value: f64 },
    #[error("face {face} violates the weight condition (gammas {gammas:?})")]
    WeightConditionViolated { face: usize, gammas: [f64; 3] },
    #[error("hyperbolic coordinate u[{vertex}] = {value} is not negative")]
    UDomainViolation { vertex: usize, value: f64 },
    #[error("radius r[{vertex}] = {value} is not a positive finite number")]
    InvalidRadius { vertex: usize, value: f64 },
    #[error("lengths {lengths:?} do not satisfy the strict triangle inequalities")]
    DegenerateTriangle { lengths: [f64; 3] },
    #[error("face {face} is not admissible at this metric")]
    InadmissibleFace { face: usize },
    #[error("expected {expected} per-vertex values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("quadrature did not reach tolerance {tolerance:e} (error estimate {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("line search stalled at step {step:e}")]
    LineSearchStalled { step: f64 },
    #[error("iterate left the hyperbolic domain at vertex {vertex}")]
    LeftDomain { vertex: usize },
}
