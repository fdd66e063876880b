//! Matrix-free proximal conjugate gradient for composite problems
//! `min q(x) + h(x)` with smooth, possibly nonconvex `q` and prox-friendly `h`.
//!
//! Curvature is only touched through Hessian-vector products. Each outer
//! iteration runs CG on the local Hessian, converts the largest Ritz value of
//! the CG tridiagonal into a proximal step size, certifies CG directions with
//! an isotropic surrogate, and backtracks along the segment between the last
//! certified and the first rejected direction.

pub mod cg;
pub mod error;
pub mod majorize;
pub mod oracle;
pub mod problems;
pub mod prox;
pub mod selftest;
pub mod solvers;
pub mod spectrum;

pub use error::{Error, Result};
pub use oracle::{Point, ProxOperator, SmoothOracle};
pub use solvers::{apg_solve, pcg_solve, pg_solve, IterateRecord, SolveResult, SolverConfig, Termination};
