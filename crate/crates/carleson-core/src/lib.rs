//! A desk-scale laboratory for sparse domination and sharp weighted bounds
//! of the Carleson operator and related maximally modulated singular
//! integrals, realized on the periodic unit circle.
//!
//! Everything lives on a dyadic grid of `N = 2^K` cells. Functions are step
//! signals (constant on cells), so all integrals, norms, medians and
//! rearrangements are exact finite sums. The crate provides:
//!
//! * dyadic grids (plain and one-third shifted), medians, non-increasing
//!   rearrangements and local mean oscillations ([`grid`], [`signal`],
//!   [`oscillation`]);
//! * a Young-function catalogue with Luxemburg norms, complementary
//!   functions, `B_p` constants and the star construction ([`young`]);
//! * Muckenhoupt weight constants `A_1`, `A_p`, Fujii–Wilson `A_inf`,
//!   dual weights ([`weights`]);
//! * the circle Hilbert transform, modulations, the Carleson operator with
//!   its linearization and adjoint, and the maximal-function family
//!   ([`operators`], [`kernel`]);
//! * the median oscillation decomposition into sparse families with a
//!   per-cell certificate, sparse operators and the duality linearizer
//!   ([`sparse`]);
//! * norm functionals, empirical operator norms, exponent fitting and the
//!   inequality suites ([`harness`], [`suites`], [`corpus`], [`report`]).

pub mod corpus;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod oscillation;
pub mod report;
pub mod signal;
pub mod sparse;
pub mod suites;
pub mod weights;
pub mod young;

pub mod operators;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operation requires a real-valued signal")]
    NonRealSignal,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

pub use grid::{CellArc, DyadicInterval, GridShift, GridSpec};
pub use signal::StepSignal;
pub use weights::WeightProfile;
pub use young::{YoungFn, YoungSpec};
