//! Multilevel coarsening.
//!
//! Each pass clusters nodes by the heavy-edge rating, restricted to nodes of
//! the same community and to clusters of weight at most `c_max`, and then
//! contracts the clustering. Coarsening stops at the contraction limit or when
//! a pass removes fewer than 1% of the nodes.

mod clustering;
mod contraction;
mod rating_map;

pub use clustering::{compute_clustering, rate_and_select, ClusterJoin, Clustering, ClusteringConfig, JoinState};
pub(crate) use clustering::Rater;
pub use contraction::{contract, detect_identical_nets, fingerprint, Contraction, IdenticalNetGroup};

use crate::deterministic::deterministic_coarsening_pass;
use crate::util::derive_seed;
use crate::{BlockId, Hypergraph, NodeId, Weight};

/// Settings of the coarsening phase.
#[derive(Debug, Clone)]
pub struct CoarseningConfig {
    /// Stop once the coarse hypergraph has at most this many nodes.
    pub contraction_limit: usize,
    /// Per pass cap on the node count reduction factor.
    pub shrink_factor: f64,
    /// Stop if a pass removes less than this fraction of the nodes.
    pub min_shrink: f64,
    pub max_levels: usize,
    pub seed: u64,
    pub deterministic: bool,
    pub sub_rounds: usize,
}

impl CoarseningConfig {
    /// Contraction limit `multiplier * k`.
    pub fn for_k(k: usize, multiplier: usize) -> Self {
        Self { contraction_limit: multiplier * k, ..Self::default() }
    }
}

impl Default for CoarseningConfig {
    fn default() -> Self {
        Self {
            contraction_limit: 320,
            shrink_factor: 2.5,
            min_shrink: 0.01,
            max_levels: 100,
            seed: 0,
            deterministic: false,
            sub_rounds: 16,
        }
    }
}

/// `c_max = max(1, ceil(c(V) / contraction_limit))`.
pub fn max_cluster_weight(total: Weight, contraction_limit: usize) -> Weight {
    let limit = contraction_limit.max(1) as Weight;
    ((total + limit - 1) / limit).max(1)
}

/// One coarsening level.
#[derive(Debug, Clone)]
pub struct Level {
    pub hypergraph: Hypergraph,
    /// Coarse node of every node of the next finer level.
    pub mapping: Vec<NodeId>,
    pub communities: Vec<u32>,
    pub removed_single_pin_nets: usize,
    pub merged_identical_nets: usize,
}

/// Sequence of successively coarser hypergraphs. `levels[0]` is obtained
/// from the input, the last level is the coarsest.
#[derive(Debug, Clone, Default)]
pub struct CoarseningHierarchy {
    pub levels: Vec<Level>,
}

impl CoarseningHierarchy {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Coarsest hypergraph, or `input` if no level was built.
    pub fn coarsest<'a>(&'a self, input: &'a Hypergraph) -> &'a Hypergraph {
        self.levels.last().map_or(input, |l| &l.hypergraph)
    }

    /// Projects a partition of the coarsest hypergraph to the input.
    pub fn project_to_input(&self, coarse_parts: &[BlockId]) -> Vec<BlockId> {
        self.levels.iter().rev().fold(coarse_parts.to_vec(), |parts, level| project_partition(&level.mapping, &parts))
    }
}

/// Fine partition induced by a coarse one: `fine[u] = coarse[mapping[u]]`.
pub fn project_partition(mapping: &[NodeId], coarse_parts: &[BlockId]) -> Vec<BlockId> {
    mapping.iter().map(|&c| coarse_parts[c as usize]).collect()
}

/// Builds the coarsening hierarchy of `hg`.
pub fn coarsen(hg: &Hypergraph, communities: &[u32], config: &CoarseningConfig) -> CoarseningHierarchy {
    assert_eq!(communities.len(), hg.num_nodes());
    let c_max = max_cluster_weight(hg.total_weight(), config.contraction_limit);
    let mut hierarchy = CoarseningHierarchy::default();
    let mut communities = communities.to_vec();
    for pass in 0..config.max_levels {
        let current = hierarchy.coarsest(hg);
        let n = current.num_nodes();
        if n <= config.contraction_limit {
            break;
        }
        let seed = derive_seed(config.seed, &[pass as u64]);
        let clustering = if config.deterministic {
            deterministic_coarsening_pass(current, &communities, c_max, config.shrink_factor, config.sub_rounds, seed)
        } else {
            let cc = ClusteringConfig { seed, shrink_factor: config.shrink_factor };
            compute_clustering(current, &communities, c_max, &cc)
        };
        let clusters = clustering.num_clusters();
        if ((n - clusters) as f64) < config.min_shrink * n as f64 || clusters == n {
            break;
        }
        let c = contract(current, &clustering);
        let mut coarse_comm = vec![0; c.coarse.num_nodes()];
        for (u, &m) in c.mapping.iter().enumerate() {
            coarse_comm[m as usize] = communities[u];
        }
        log::debug!("coarsening level {}: {} -> {} nodes", pass + 1, n, c.coarse.num_nodes());
        communities = coarse_comm.clone();
        hierarchy.levels.push(Level {
            hypergraph: c.coarse,
            mapping: c.mapping,
            communities: coarse_comm,
            removed_single_pin_nets: c.removed_single_pin_nets,
            merged_identical_nets: c.merged_identical_nets,
        });
    }
    hierarchy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_objective, Objective};

    fn hypercube(dim: u32) -> Hypergraph {
        let n = 1usize << dim;
        let mut nets = Vec::new();
        for u in 0..n as u32 {
            for b in 0..dim {
                let v = u ^ (1 << b);
                if u < v {
                    nets.push(vec![u, v]);
                }
            }
        }
        Hypergraph::new(n, &nets, None, None).unwrap()
    }

    #[test]
    fn small_input_has_no_levels() {
        let hg = hypercube(4);
        let h = coarsen(&hg, &[0; 16], &CoarseningConfig { contraction_limit: 16, ..Default::default() });
        assert_eq!(h.num_levels(), 0);
    }

    #[test]
    fn hypercube_coarsens_within_bounds() {
        let hg = hypercube(10);
        for deterministic in [false, true] {
            let config = CoarseningConfig { contraction_limit: 64, deterministic, seed: 5, ..Default::default() };
            let h = coarsen(&hg, &vec![0; 1024], &config);
            assert!(h.num_levels() >= 1 && h.num_levels() <= 10, "{} levels", h.num_levels());
            let mut prev = hg.num_nodes();
            let c_max = max_cluster_weight(1024, 64);
            for level in &h.levels {
                let n = level.hypergraph.num_nodes();
                assert!(n as f64 <= 0.99 * prev as f64);
                assert!(n as f64 >= prev as f64 / 2.5 - 1.0, "{prev} -> {n}");
                assert_eq!(level.hypergraph.total_weight(), 1024);
                assert!(level.hypergraph.node_weights().iter().all(|&w| w <= c_max));
                prev = n;
            }
        }
    }

    #[test]
    fn projection_preserves_objective() {
        let hg = hypercube(8);
        let h = coarsen(&hg, &vec![0; 256], &CoarseningConfig { contraction_limit: 16, seed: 1, ..Default::default() });
        let coarse = h.coarsest(&hg);
        let parts: Vec<u32> = (0..coarse.num_nodes() as u32).map(|u| u % 3).collect();
        let fine = h.project_to_input(&parts);
        assert_eq!(compute_objective(coarse, &parts, Objective::Km1), compute_objective(&hg, &fine, Objective::Km1));
    }

    #[test]
    fn communities_are_never_mixed() {
        let hg = hypercube(8);
        let comm: Vec<u32> = (0..256).map(|u| (u % 4) as u32).collect();
        let h = coarsen(&hg, &comm, &CoarseningConfig { contraction_limit: 8, seed: 2, ..Default::default() });
        let mut fine_to_coarse: Vec<u32> = (0..256).collect();
        for level in &h.levels {
            for x in fine_to_coarse.iter_mut() {
                *x = level.mapping[*x as usize];
            }
        }
        let mut seen = std::collections::HashMap::new();
        for (u, &c) in fine_to_coarse.iter().enumerate() {
            assert_eq!(*seen.entry(c).or_insert(comm[u]), comm[u]);
        }
    }

    #[test]
    fn no_joins_terminates() {
        let hg = Hypergraph::new(1000, &[] as &[Vec<u32>], None, None).unwrap();
        let h = coarsen(&hg, &vec![0; 1000], &CoarseningConfig { contraction_limit: 10, ..Default::default() });
        assert_eq!(h.num_levels(), 0);
    }
}
