//! Star-stencil computation in the external memory model.
//!
//! The crate is a laboratory for the I/O complexity of evaluating the s-star
//! stencil `S_s(x) = { y : ‖y − x‖₁ ≤ s }` once at every vertex of an
//! n-dimensional grid, on a two-level machine with `M` element slots of
//! internal memory and blocks of `B` elements:
//!
//! * [`grid`] — vertex universe (grid or torus), stencil neighborhoods, index arithmetic;
//! * [`combinatorics`] — exact ℓ¹-ball weights and the closure / core / boundary set operators;
//! * [`bounds`] — the isoperimetric lower bound, every layout's leading upper-bound
//!   term and the exact non-compulsory I/O ceilings;
//! * [`machine`] — the `(M, B)` machine with explicit loads and evictions, I/O
//!   classification and replayable traces;
//! * [`layout`] — banded data layouts and sweep-shape sizing;
//! * [`sweep`] — the sweep algorithms that drive the machine over a layout;
//! * [`oracle`] — brute-force ground truth (naive stencil, lattice enumeration,
//!   exhaustive isoperimetry on tiny tori);
//! * [`experiment`] — configuration files, the experiment runner and CSV reports.

pub mod bounds;
pub mod combinatorics;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod layout;
pub mod machine;
pub mod oracle;
pub mod sweep;

pub use error::{Error, Result};
pub use grid::{GridSpec, StencilSpec, Topology, Vertex};
pub use layout::{Layout, LayoutKind};
pub use machine::{Address, Fidelity, IoStats, Machine, MachineConfig};
