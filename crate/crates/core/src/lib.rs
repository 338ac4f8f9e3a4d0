//! Smoothing-continuation solver for nonlinear complementarity problems
//! `x >= 0, F(x) >= 0, x . F(x) = 0`.
//!
//! A kernel `psi` defines the soft-min `G_r(s, t) = r psi^{-1}(psi(s/r) + psi(t/r))`,
//! which tends to `min(s, t)` as `r -> 0`. The solver drives
//! `H_r(x) = G_r(x, F(x))` to zero with damped Newton while shrinking `r`.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod lcp;
pub mod ncp;
pub mod problems;
pub mod smoothing;
pub mod solver;

pub use error::{Error, Result};
pub use grid::GridSpec;
pub use kernels::{make_exponential, make_phi_lambda, make_rational, SmoothingKernel};
pub use ncp::NcpProblem;
pub use problems::ProblemSpec;
pub use solver::{continuation_solve, SolveReport, SolveStatus, SolverConfig};
