//! Nodal domains of discrete Schrödinger operators on finite graphs.
//!
//! The crate works with the operator `H(G) = -A(G) + Q(G)` on a simple,
//! connected, optionally weighted graph and provides:
//!
//! * nodal counting (`ν`, `ζ`, `ℓ`) and the Courant-type bounds on them,
//! * edge deletion with potential compensation and the rank-one
//!   parametrized family `H(G) + B(α)`,
//! * equipartitions of graph partitions, the tree-partition eigenvector
//!   construction and local charts of the equipartition manifold,
//! * two independent computations of the Morse index of the equipartition
//!   energy, compared against the nodal deficiency `n - ν_n`,
//! * brute-force oracles and seeded random ensembles for verification.
//!
//! Spectral indices (`n`, `m`) are 1-based throughout, matching the usual
//! labelling `λ_1 ≤ λ_2 ≤ …`. Vertex indices are 0-based.

pub mod checks;
pub mod dsu;
pub mod ensemble;
pub mod equipartition;
mod error;
pub mod exec;
pub mod graph;
pub mod io;
pub mod morse;
pub mod nodal;
pub mod operator;
pub mod oracle;
pub mod surgery;

pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{Edge, Graph, Partition, PartitionGraph};
pub use operator::{Hamiltonian, Potential, Spectrum};
