//! Discrete analysis on self-similar polygon carpets.
//!
//! The crate builds ratio-balanced partitions and cell graphs of a polygon
//! carpet given by an iterated function system, computes effective
//! resistances and the Poincare-type constants that control energy
//! renormalization, fits scaling exponents and assembles explicit
//! low-energy test functions with energy certificates.

pub mod carpet;
pub mod cellgraph;
pub mod cli;
pub mod constants;
pub mod energy;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod par;

pub use error::{Error, Result};
