//! Power network partitioning and distributed OPF validation.
//!
//! The crate covers the full pipeline for turning a single MATPOWER-format
//! network into a multi-region dataset and checking that the result is
//! usable for distributed optimization:
//!
//! 1. [`case`] — domain types plus a parser/writer for the MATPOWER case
//!    text format.
//! 2. [`partition`] — spectral clustering of the bus-connectivity graph
//!    into `k` electrically coherent regions with few tie-lines.
//! 3. [`region`] — materialization of a partition into per-region
//!    sub-cases, the global tie-line table, and file exports.
//! 4. [`dcopf`] / [`acopf`] — distributed DC and AC optimal power flow via
//!    consensus ADMM on boundary-bus variables, with centralized reference
//!    solves for optimality-gap reporting.
//! 5. [`report`] — physical-consistency checks and convergence artifacts.
//!
//! The numerical kernels backing all of this (sparse symmetric
//! eigensolver, convex QP solver, nonconvex NLP solver) live in
//! [`numerics`] behind solver-agnostic problem descriptions.

pub mod acopf;
pub mod admm;
pub mod case;
pub mod dcopf;
pub mod numerics;
pub mod partition;
pub mod region;
pub mod report;

#[cfg(test)]
pub(crate) mod testutil;

pub use case::{parse_case, renumber_buses, write_case, Bus, BusType, CaseData, CaseError};
pub use partition::{partition_case, Partition, PartitionError};
pub use region::{extract_regions, verify_integrity, MultiRegionCase, RegionCase, TieLine};
