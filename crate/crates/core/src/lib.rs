//! Acceleration with ball optimization oracles.
//!
//! The building blocks, bottom-up:
//!
//! - [`linalg`]: seminorms `‖x‖_M`, pseudoinverse and regularized solves.
//! - [`objectives`]: `f(x) = g(Ax − b)` for logistic, softmax and power losses.
//! - [`trust_region`]: ball-constrained quadratic minimization.
//! - [`ball_oracle`]: accelerated Newton inside a ball, plus a brute-force reference.
//! - [`ms_accel`]: the accelerated proximal-point outer loop and the plain iterated-ball baseline.
//! - [`solvers`]: end-to-end drivers for logistic, `ℓ∞` and `ℓp` regression.
//! - [`bench`]: oracle-call scaling of the accelerated loop against the baseline.
//! - [`lower_bound`]: the hard chain instance behind the matching query lower bound.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball_oracle;
pub mod bench;
pub mod config;
pub mod error;
pub mod linalg;
pub mod lower_bound;
pub mod ms_accel;
pub mod objectives;
pub mod solvers;
pub mod synthetic;
pub mod trust_region;

pub use error::{Error, Result};
