//! Cyclic block coordinate descent solvers, their complexity bounds and
//! numerical checks of the per-cycle inequalities behind those bounds.

pub mod bounds;
pub mod io;
pub mod linalg;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod suite;
pub mod vecops;
pub mod verify;

pub use scalar::Scalar;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Problem = problems::CompositeQuadraticProblem<f64>;
pub type Term = problems::NonsmoothTerm<f64>;
pub type Constants = problems::ProblemConstants<f64>;
