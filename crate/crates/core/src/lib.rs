//! Multilevel balanced hypergraph partitioning.
//!
//! `hgpart` computes `k`-way partitions of weighted hypergraphs that respect
//! the balance constraint `c(V_i) <= (1 + eps) * ceil(c(V) / k)` while
//! minimizing the connectivity (`lambda - 1`) metric. The pipeline follows the
//! classic multilevel scheme:
//!
//! 1. community detection on the bipartite representation ([`community`]),
//! 2. community-restricted heavy-edge coarsening ([`coarsening`]),
//! 3. recursive bipartitioning with a portfolio of flat algorithms
//!    ([`initial`]),
//! 4. uncoarsening with label propagation, localized FM and flow-based
//!    refinement ([`refinement`], [`flow`]).
//!
//! A fully deterministic preset ([`deterministic`]) replaces the asynchronous
//! components by synchronous local moving so that the output is identical for
//! any number of threads.
//!
//! ```
//! use hgpart::{Hypergraph, pipeline::{partition, Config, Preset}};
//!
//! let hg = Hypergraph::new(6, &[vec![0, 1, 2], vec![2, 3], vec![3, 4, 5]], None, None).unwrap();
//! let config = Config::new(2, 0.03).with_preset(Preset::Default).with_seed(7);
//! let result = partition(&hg, &config).unwrap();
//! assert_eq!(result.report.km1, 1);
//! ```

pub mod bench;
pub mod coarsening;
pub mod community;
pub mod deterministic;
pub mod flow;
pub mod hypergraph;
pub mod initial;
pub mod io;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod refinement;
pub(crate) mod util;

pub use hypergraph::{Hypergraph, HypergraphError};
pub use metrics::{compute_objective, KWayPartition, Objective};
pub use partition::{GainTable, Move, MoveOutcome, PartitionedHypergraph};

/// Dense node id.
pub type NodeId = u32;
/// Dense net (hyperedge) id.
pub type NetId = u32;
/// Block id in `[0, k)`.
pub type BlockId = u32;
/// Node and net weights. Objectives are computed exactly in this type.
pub type Weight = i64;

pub(crate) const INVALID: u32 = u32::MAX;
