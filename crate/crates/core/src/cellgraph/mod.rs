//! Level partitions `Λ_n` and the cell graphs built on them.

pub mod boundary;
pub mod graph;
pub mod partition;

pub use graph::{CellGraph, Edge, EdgeKind};
pub use partition::{cells_of, level_of, partition, Cell, PartitionLevel, Word};
