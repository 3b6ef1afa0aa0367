//! Numerical laboratory for the inhomogeneous parabolic p-Laplace system
//! `u_t - div(|Du|^{p-2} Du) = -div g`.
//!
//! The crate is organised bottom-up: [`grid`] holds discrete space-time
//! fields and regions, [`solver`] integrates the system, [`geometry`]
//! builds intrinsic cylinder families, [`oscillation`] evaluates the
//! oscillation seminorms, and [`experiments`] combines them into
//! reproducible sweeps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod cli_report;
pub mod error;
pub mod experiments;
pub mod field_io;
pub mod geometry;
pub mod grid;
pub mod oscillation;
pub mod solver;

pub use error::{Error, Result};
