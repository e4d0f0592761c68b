//! Positive stationary solutions of quasilinear size-structured population
//! models
//!
//! ```text
//! u_t + (g(x,u) u)_x + mu(x,u) u = 0,
//! g(0,u) u(t,0) = int beta(x,u) u(t,x) dx,     x in [0, inf)
//! ```
//!
//! An equilibrium is a fixed point of `u = G(u) Pi(., u)`. Writing
//! `u = lambda v` splits it into `v = Pi(., lambda v)` and `R(lambda v) = 1`;
//! the solver runs an inner Picard iteration in `v` and brackets roots of the
//! scalar residual in `lambda`.
//!
//! Modules, bottom up:
//!
//! - [`grid`]: truncated quadrature on the half-line.
//! - [`model`]: vital rates with bound constants, builtin models, sampled
//!   hypothesis checks.
//! - [`kernel`]: survival kernel, envelopes, `G`, `R`, the fixed-point map and
//!   compactness diagnostics.
//! - [`solver`]: equilibria by root scanning and bisection, the clamped
//!   `(v, lambda)` map, and existence/nonexistence certificates.

pub mod error;
pub mod grid;
pub mod kernel;
pub mod model;
pub mod solver;

pub use error::{Error, Rate, Result};
pub use grid::{build_grid, DensityProfile, Grid, Scheme};
pub use kernel::KernelContext;
pub use model::{ModelSpec, RateBounds, Variant};
