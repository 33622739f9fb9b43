//! Numerical experiments with finite-propagation operators on finite metric
//! spaces: bounded-geometry profiles, box spaces, scale-R Laplacians,
//! polynomial functional calculus, and the certification solvers that measure
//! weak-expansion constants, localization profiles, and ghost decay.
//!
//! Everything here is exact-at-desk-scale: spaces are finite, operators are
//! symmetric real matrices, and every certificate carries the data needed to
//! reproduce it (witness subsets, ball centers, measured sup errors).
//!
//! The crate is organized around six modules:
//!
//! * [`space`] — finite metric spaces, balls, geometry profiles, box spaces,
//!   and the annular / R-separated decompositions.
//! * [`generators`] — deterministic graph families (cycles, tori, random
//!   regular graphs, SL(2, Z/p) Cayley graphs, complete graphs).
//! * [`bandop`] — symmetric finite-propagation operators: Laplacians,
//!   truncation, compression, block decomposition, operator norms.
//! * [`spectral`] — dense eigensolves and the polynomial functional calculus
//!   via certified Chebyshev approximation.
//! * [`certify`] — weak-expander constants, ball-gap verification,
//!   localization profiles, ghost-decay and truncation-error reports.
//! * [`pipeline`] — the two ghost constructions (spectral-gap filter and the
//!   inductive block construction) with their ledgers.
//!
//! With the default `parallel` feature, data-parallel inner loops (columnwise
//! filter application, per-ball scans, per-block norms) run on rayon; building
//! with `--no-default-features` selects a sequential fallback that produces
//! identical results.

pub mod bandop;
pub mod certify;
pub mod generators;
pub mod pipeline;
pub mod report;
pub mod space;
pub mod spectral;

mod error;
mod exec;

pub use error::{Error, Result};
