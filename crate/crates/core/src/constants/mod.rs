//! Poincaré, resistance and oscillation constants per level, with their
//! witnesses, plus the derived exponent fits and chain checks.

pub mod poincare;

pub use poincare::{Estimate, Evaluator, Witness, DEFAULT_SEED};
pub mod table;

pub use table::{build_table, ConstantsConfig, ConstantsRow, ConstantsTable};
pub mod fit;

pub use fit::{check_chain, fit_exponents, ChainReport, FitReport};
pub mod ring;

pub use ring::{halfside_resistances, resistance_cluster, symmetric_ring, Cluster, HalfsideReport, Ring};
