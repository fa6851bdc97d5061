//! Multi-block randomized ADMM for linearly constrained convex quadratic programming.
//!
//! The solver minimizes
//!
//! ```text
//!     f(x) = 1/2 x'Hx + c'x + c0
//!     s.t. A_eq x = b_eq,  A_ineq x <= b_ineq,  lb <= x <= ub
//! ```
//!
//! by cycling Gauss-Seidel sweeps over variable blocks that are re-assembled
//! uniformly at random each iteration (RAC), with fixed-partition baselines
//! (cyclic, randomly permuted, distributed) and a single-block LDL mode.
//! Binary/mixed problems run through a solve-perturb-solve driver with an
//! exact small-block sub-solver. The [`spectral`] module builds the per-order
//! iteration maps of the equality-constrained case and certifies expected and
//! almost-sure convergence through their spectral radii.

pub mod admm;
pub mod blocks;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod mip;
pub mod ml;
pub mod problem;
pub mod spectral;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
