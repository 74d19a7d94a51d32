//! Lattice-point observability for heat equations.
//!
//! The crate checks, numerically and falsifiably, that nonnegative heat
//! solutions on `R^d` are controlled in `L^2` by their values on the integer
//! lattice, builds the explicit data showing that sign-changing solutions are
//! not, and uses the inequality to synthesize impulsive lattice controls that
//! steer the heat flow into the nonnegative cone.
//!
//! Module map:
//!
//! * [`grid`] uniform grids on a truncated box, trapezoidal quadrature, lattice sampling
//! * [`kernel`] free and potential-perturbed heat semigroups, two-sided kernel bounds
//! * [`lattice`] Gaussian cube/lattice comparison lemmas and the pointwise solution bound
//! * [`observability`] the lattice observability inequalities and their counterexamples
//! * [`control`] the dual variational method for impulsive sign control
//! * [`cli`] the `lattice-obs` command runner and report files

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli;
pub mod control;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod lattice;
pub mod observability;
pub mod random;
pub mod report;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec, LatticeVector, LatticeWindow};
