//! Local refinement: asynchronous label propagation, parallel localized FM
//! with thread-local delta partitions, and a greedy rebalancer.

mod delta;
mod fm;
mod lp;
mod rebalance;

pub use delta::DeltaPartition;
pub use fm::{fm_refinement, localized_fm_search, AdaptiveStop, FmConfig, Ownership, StopRule};
pub use lp::{label_propagation, LpConfig};
pub use rebalance::rebalance;
