//! Generalized quantum state discrimination: maximize a linear objective over
//! POVMs subject to linear inequality constraints, with certified bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod certify;
pub mod cli;
pub mod error;
pub mod gsolver;
pub mod linalg;
pub mod minerr;
pub mod parallel;
pub mod problem;

pub use error::{Error, Result};
pub use gsolver::{solve, SolveReport, SolveStatus, SolverConfig};
pub use linalg::{HermitianMatrix, Spectrum, C64};
pub use minerr::{solve_min_error, MinErrInstance, MinErrSolution};
pub use parallel::Execution;
pub use problem::{DiscriminationProblem, Povm, StateEnsemble};
