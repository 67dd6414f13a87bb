//! Flow-based refinement.
//!
//! Pairs of adjacent blocks are refined by growing a region around their
//! cut, contracting the rest of both blocks into a source and a sink, and
//! running FlowCutter on the Lawler expansion of the region hypergraph until
//! a minimum cut induces a balanced bipartition. Moves of concurrently solved
//! pairs are applied one pair at a time and reverted if they worsen the
//! connectivity metric.

mod flowcutter;
mod lawler;
mod network;
mod push_relabel;
mod quotient;
mod region;
mod scheduler;

pub use flowcutter::{flowcutter, CutterConfig, CutterResult};
pub use lawler::{FlowProblem, SINK, SOURCE};
pub use network::{ArcSpec, FlowGraph};
pub use push_relabel::{derive_side_cuts, max_preflow, FlowError, Preflow};
pub use quotient::QuotientGraph;
pub use region::{construct_region, Region};
pub use scheduler::{apply_region_moves, flow_refinement, ApplyOutcome, FlowConfig, FlowStats};
