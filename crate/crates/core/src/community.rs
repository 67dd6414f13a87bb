//! Louvain community detection on the bipartite representation.
//!
//! Communities restrict coarsening: two nodes are only contracted if they
//! share a community. The default variant moves nodes asynchronously in
//! parallel with atomically updated cluster volumes. The deterministic variant
//! splits every round into sub-rounds, computes all moves of a sub-round against
//! a frozen clustering and aggregates volume updates in a fixed order.

use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deterministic::{deterministic_volume_aggregation, SubRoundPlan, VolumeUpdate};
use crate::hypergraph::EdgeWeightModel;
use crate::util::{derive_seed, rng, AtomicF64};
use crate::{Hypergraph, NodeId};

/// Undirected graph with `f64` edge weights and a self-loop weight per vertex.
///
/// The degree of a vertex counts its self loop twice, so the degrees sum to
/// `2 W` where `W` is the total edge weight including loops.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    self_loops: Vec<f64>,
    degrees: Vec<f64>,
    total_weight: f64,
}

impl WeightedGraph {
    /// Builds a graph from undirected edges. Parallel edges are merged by
    /// summing their weights in input order; `(u, u, w)` adds to the self loop.
    pub fn from_edges(n: usize, edges: &[(u32, u32, f64)]) -> Self {
        let mut self_loops = vec![0.0; n];
        let mut canon: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            assert!((u as usize) < n && (v as usize) < n, "edge endpoint out of range");
            if u == v {
                self_loops[u as usize] += w;
            } else {
                canon.push((u.min(v), u.max(v), w));
            }
        }
        canon.par_sort_by_key(|&(u, v, _)| (u, v));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(canon.len());
        for (u, v, w) in canon {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => merged.push((u, v, w)),
            }
        }
        let mut counts = vec![0usize; n + 1];
        for &(u, v, _) in &merged {
            counts[u as usize + 1] += 1;
            counts[v as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut pos = counts;
        let mut targets = vec![0u32; merged.len() * 2];
        let mut weights = vec![0.0; merged.len() * 2];
        for &(u, v, w) in &merged {
            for (a, b) in [(u, v), (v, u)] {
                let p = pos[a as usize];
                targets[p] = b;
                weights[p] = w;
                pos[a as usize] += 1;
            }
        }
        let degrees: Vec<f64> = (0..n)
            .map(|u| weights[offsets[u]..offsets[u + 1]].iter().sum::<f64>() + 2.0 * self_loops[u])
            .collect();
        let total_weight = merged.iter().map(|e| e.2).sum::<f64>() + self_loops.iter().sum::<f64>();
        Self { offsets, targets, weights, self_loops, degrees, total_weight }
    }

    pub fn num_vertices(&self) -> usize {
        self.self_loops.len()
    }

    /// Number of distinct non-loop edges.
    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, u: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let range = self.offsets[u as usize]..self.offsets[u as usize + 1];
        self.targets[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn self_loop(&self, u: u32) -> f64 {
        self.self_loops[u as usize]
    }

    /// Weighted degree, self loop counted twice.
    pub fn degree(&self, u: u32) -> f64 {
        self.degrees[u as usize]
    }

    /// `W`, the total edge weight including self loops.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Collapses every cluster into one vertex. `clusters` must be dense.
    fn contract(&self, clusters: &[u32], num_clusters: usize) -> WeightedGraph {
        let mut edges = Vec::with_capacity(self.targets.len() / 2 + self.num_vertices());
        for u in 0..self.num_vertices() as u32 {
            let cu = clusters[u as usize];
            if self.self_loops[u as usize] != 0.0 {
                edges.push((cu, cu, self.self_loops[u as usize]));
            }
            for (v, w) in self.neighbors(u) {
                if u < v {
                    edges.push((cu, clusters[v as usize], w));
                }
            }
        }
        WeightedGraph::from_edges(num_clusters, &edges)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommunityError {
    #[error("modularity is undefined for a graph without edge weight")]
    ZeroWeight,
    #[error("clustering has {got} entries for {expected} vertices")]
    Length { expected: usize, got: usize },
}

/// `Q = sum_C [ w_in(C) / W - (vol(C) / 2W)^2 ]`.
pub fn modularity(graph: &WeightedGraph, clustering: &[u32]) -> Result<f64, CommunityError> {
    let n = graph.num_vertices();
    if clustering.len() != n {
        return Err(CommunityError::Length { expected: n, got: clustering.len() });
    }
    let w = graph.total_weight();
    if w <= 0.0 {
        return Err(CommunityError::ZeroWeight);
    }
    let num = clustering.iter().max().map_or(0, |&c| c as usize + 1);
    let mut inside = vec![0.0; num];
    let mut volume = vec![0.0; num];
    for u in 0..n as u32 {
        let c = clustering[u as usize] as usize;
        volume[c] += graph.degree(u);
        inside[c] += graph.self_loop(u);
        for (v, wt) in graph.neighbors(u) {
            if u < v && clustering[v as usize] as usize == c {
                inside[c] += wt;
            }
        }
    }
    Ok(inside.iter().zip(&volume).map(|(i, v)| i / w - (v / (2.0 * w)).powi(2)).sum())
}

/// Settings of the Louvain method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommunityConfig {
    pub edge_weight_model: EdgeWeightModel,
    /// A level (and a local moving round) must improve modularity by at least this much.
    pub tolerance: f64,
    /// Maximum number of contraction levels.
    pub max_passes: usize,
    /// Maximum number of local moving rounds per level.
    pub max_rounds: usize,
    /// Merge single-node communities into their most connected neighbor community.
    pub merge_singletons: bool,
    pub deterministic: bool,
    pub sub_rounds: usize,
    pub seed: u64,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        Self {
            edge_weight_model: EdgeWeightModel::Uniform,
            tolerance: 1e-4,
            max_passes: 25,
            max_rounds: 16,
            merge_singletons: false,
            deterministic: false,
            sub_rounds: 16,
            seed: 0,
        }
    }
}

/// Community id per hypergraph node, dense in `[0, num_communities)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    pub ids: Vec<u32>,
    pub num_communities: usize,
}

impl CommunityAssignment {
    /// Every node in its own community.
    pub fn singletons(n: usize) -> Self {
        Self { ids: (0..n as u32).collect(), num_communities: n }
    }

    /// All nodes in one community.
    pub fn single(n: usize) -> Self {
        Self { ids: vec![0; n], num_communities: usize::from(n > 0) }
    }

    /// Renumbers arbitrary labels densely in order of first occurrence.
    pub fn from_labels(labels: &[u32]) -> Self {
        let (ids, num_communities) = compact(labels);
        Self { ids, num_communities }
    }
}

fn compact(labels: &[u32]) -> (Vec<u32>, usize) {
    let max = labels.iter().max().map_or(0, |&c| c as usize + 1);
    let mut map = vec![u32::MAX; max];
    let mut next = 0u32;
    let ids = labels
        .iter()
        .map(|&c| {
            if map[c as usize] == u32::MAX {
                map[c as usize] = next;
                next += 1;
            }
            map[c as usize]
        })
        .collect();
    (ids, next as usize)
}

/// Louvain on the bipartite representation of `hg`, projected to the nodes.
pub fn detect_communities(hg: &Hypergraph, config: &CommunityConfig) -> CommunityAssignment {
    let graph = hg.bipartite_representation(config.edge_weight_model);
    let labels = louvain(&graph, config);
    let mut result = CommunityAssignment::from_labels(&labels[..hg.num_nodes()]);
    if config.merge_singletons {
        merge_singletons(hg, &mut result);
    }
    result
}

fn merge_singletons(hg: &Hypergraph, assignment: &mut CommunityAssignment) {
    let mut size = vec![0usize; assignment.num_communities];
    for &c in &assignment.ids {
        size[c as usize] += 1;
    }
    let mut labels = assignment.ids.clone();
    for u in hg.nodes() {
        if size[assignment.ids[u as usize] as usize] != 1 {
            continue;
        }
        let mut scores: Vec<(u32, i64)> = Vec::new();
        for &e in hg.incident_nets(u) {
            for &v in hg.pins(e) {
                if v == u {
                    continue;
                }
                let c = assignment.ids[v as usize];
                match scores.iter_mut().find(|s| s.0 == c) {
                    Some(s) => s.1 += hg.net_weight(e),
                    None => scores.push((c, hg.net_weight(e))),
                }
            }
        }
        if let Some(&(c, _)) = scores.iter().max_by_key(|&&(c, s)| (s, std::cmp::Reverse(c))) {
            labels[u as usize] = c;
        }
    }
    *assignment = CommunityAssignment::from_labels(&labels);
}

/// Louvain method. Returns a dense cluster id per vertex.
pub fn louvain(graph: &WeightedGraph, config: &CommunityConfig) -> Vec<u32> {
    let n = graph.num_vertices();
    let mut assignment: Vec<u32> = (0..n as u32).collect();
    if graph.total_weight() <= 0.0 || n == 0 {
        return assignment;
    }
    let mut current = graph.clone();
    let mut quality = modularity(&current, &(0..n as u32).collect::<Vec<_>>()).unwrap();
    for pass in 0..config.max_passes {
        let seed = derive_seed(config.seed, &[pass as u64]);
        let clusters = if config.deterministic {
            local_moving_synchronous(&current, config, seed)
        } else {
            local_moving_async(&current, config, seed)
        };
        let (clusters, num) = compact(&clusters);
        let improved = modularity(&current, &clusters).unwrap();
        if num == current.num_vertices() || improved - quality < config.tolerance {
            if improved > quality {
                for c in assignment.iter_mut() {
                    *c = clusters[*c as usize];
                }
            }
            break;
        }
        quality = improved;
        for c in assignment.iter_mut() {
            *c = clusters[*c as usize];
        }
        current = current.contract(&clusters, num);
    }
    compact(&assignment).0
}

/// `Delta Q * W` of moving `u` (degree `d`) from `C` to `D`, given the edge
/// weights `w_c = w(u, C \ u)`, `w_d = w(u, D)` and volumes without `u`.
#[inline]
fn move_score(w_d: f64, w_c: f64, d: f64, vol_d: f64, vol_c_rest: f64, total: f64) -> f64 {
    (w_d - w_c) - d * (vol_d - vol_c_rest) / (2.0 * total)
}

#[inline]
fn accepts(score: f64, d: f64) -> bool {
    score > 1e-12 * (1.0 + d)
}

struct Scratch {
    weight_to: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self { weight_to: vec![0.0; n], seen: vec![false; n], touched: Vec::new() }
    }

    fn add(&mut self, c: u32, w: f64) {
        if !self.seen[c as usize] {
            self.seen[c as usize] = true;
            self.touched.push(c);
        }
        self.weight_to[c as usize] += w;
    }

    fn clear(&mut self) {
        for &c in &self.touched {
            self.weight_to[c as usize] = 0.0;
            self.seen[c as usize] = false;
        }
        self.touched.clear();
    }

    /// Best target cluster for `u`, or `None` if staying is at least as good.
    fn best_move(
        &mut self,
        graph: &WeightedGraph,
        u: u32,
        own: u32,
        cluster_of: impl Fn(u32) -> u32,
        volume_of: impl Fn(u32) -> f64,
    ) -> Option<u32> {
        for (v, w) in graph.neighbors(u) {
            self.add(cluster_of(v), w);
        }
        let d = graph.degree(u);
        let w_c = self.weight_to[own as usize];
        let vol_c = volume_of(own) - d;
        let total = graph.total_weight();
        let mut best: Option<(u32, f64)> = None;
        for &c in &self.touched {
            if c == own {
                continue;
            }
            let score = move_score(self.weight_to[c as usize], w_c, d, volume_of(c), vol_c, total);
            if accepts(score, d) && best.is_none_or(|(bc, bs)| score > bs || (score == bs && c < bc)) {
                best = Some((c, score));
            }
        }
        self.clear();
        best.map(|b| b.0)
    }
}

fn local_moving_async(graph: &WeightedGraph, config: &CommunityConfig, seed: u64) -> Vec<u32> {
    let n = graph.num_vertices();
    let clusters: Vec<AtomicU32> = (0..n as u32).map(AtomicU32::new).collect();
    let volumes: Vec<AtomicF64> = (0..n as u32).map(|u| AtomicF64::new(graph.degree(u))).collect();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut quality = modularity(graph, &(0..n as u32).collect::<Vec<_>>()).unwrap();
    for round in 0..config.max_rounds {
        order.shuffle(&mut rng(derive_seed(seed, &[round as u64])));
        let moved = AtomicUsize::new(0);
        order.par_iter().for_each_init(
            || Scratch::new(n),
            |s, &u| {
                let own = clusters[u as usize].load(Ordering::Relaxed);
                let target = s.best_move(
                    graph,
                    u,
                    own,
                    |v| clusters[v as usize].load(Ordering::Relaxed),
                    |c| volumes[c as usize].load(),
                );
                if let Some(t) = target {
                    let d = graph.degree(u);
                    volumes[own as usize].fetch_add(-d);
                    volumes[t as usize].fetch_add(d);
                    clusters[u as usize].store(t, Ordering::Relaxed);
                    moved.fetch_add(1, Ordering::Relaxed);
                }
            },
        );
        if moved.load(Ordering::Relaxed) == 0 {
            break;
        }
        let snapshot: Vec<u32> = clusters.iter().map(|c| c.load(Ordering::Relaxed)).collect();
        let q = modularity(graph, &snapshot).unwrap();
        if q - quality < config.tolerance {
            break;
        }
        quality = q;
    }
    clusters.into_iter().map(AtomicU32::into_inner).collect()
}

fn local_moving_synchronous(graph: &WeightedGraph, config: &CommunityConfig, seed: u64) -> Vec<u32> {
    let n = graph.num_vertices();
    let mut clusters: Vec<u32> = (0..n as u32).collect();
    let mut volumes: Vec<f64> = (0..n as u32).map(|u| graph.degree(u)).collect();
    let mut quality = modularity(graph, &clusters).unwrap();
    for round in 0..config.max_rounds {
        let plan = SubRoundPlan::new(n, config.sub_rounds, seed, round as u64);
        let mut moved = 0;
        for nodes in plan.sub_rounds() {
            let moves: Vec<(u32, u32, u32)> = nodes
                .par_iter()
                .map_init(
                    || Scratch::new(n),
                    |s, &u| {
                        let own = clusters[u as usize];
                        s.best_move(graph, u, own, |v| clusters[v as usize], |c| volumes[c as usize])
                            .map(|t| (u, own, t))
                    },
                )
                .flatten()
                .collect();
            moved += moves.len();
            let updates: Vec<VolumeUpdate> = moves
                .iter()
                .flat_map(|&(u, from, to)| {
                    let d = graph.degree(u);
                    [VolumeUpdate { cluster: from, node: u, delta: -d }, VolumeUpdate { cluster: to, node: u, delta: d }]
                })
                .collect();
            for (c, delta) in deterministic_volume_aggregation(updates) {
                volumes[c as usize] += delta;
            }
            for &(u, _, t) in &moves {
                clusters[u as usize] = t;
            }
        }
        if moved == 0 {
            break;
        }
        let q = modularity(graph, &clusters).unwrap();
        if q - quality < config.tolerance {
            break;
        }
        quality = q;
    }
    clusters
}

/// Node ids in `0..n` grouped by community.
pub fn members(assignment: &CommunityAssignment) -> Vec<Vec<NodeId>> {
    let mut groups = vec![Vec::new(); assignment.num_communities];
    for (v, &c) in assignment.ids.iter().enumerate() {
        groups[c as usize].push(v as NodeId);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> Vec<(u32, u32, f64)> {
        let mut edges = Vec::new();
        for base in [0u32, 4] {
            for a in 0..4 {
                for b in a + 1..4 {
                    edges.push((base + a, base + b, 1.0));
                }
            }
        }
        edges.push((3, 4, 1.0));
        edges
    }

    fn brute_force_best(graph: &WeightedGraph) -> f64 {
        let n = graph.num_vertices();
        let mut best = f64::MIN;
        let mut labels = vec![0u32; n];
        // Restricted growth strings enumerate every set partition once.
        fn rec(i: usize, max: u32, labels: &mut Vec<u32>, graph: &WeightedGraph, best: &mut f64) {
            if i == labels.len() {
                *best = best.max(modularity(graph, labels).unwrap());
                return;
            }
            for c in 0..=max + 1 {
                labels[i] = c;
                rec(i + 1, max.max(c), labels, graph, best);
            }
        }
        labels[0] = 0;
        rec(1, 0, &mut labels, graph, &mut best);
        best
    }

    #[test]
    fn modularity_examples() {
        let triangle = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        assert!(modularity(&triangle, &[0, 0, 0]).unwrap().abs() < 1e-12);
        assert!((modularity(&triangle, &[0, 1, 2]).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        let empty = WeightedGraph::from_edges(2, &[]);
        assert_eq!(modularity(&empty, &[0, 1]), Err(CommunityError::ZeroWeight));
    }

    #[test]
    fn clique_split_is_optimal() {
        let g = WeightedGraph::from_edges(8, &two_cliques());
        let q = modularity(&g, &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        assert!((q - brute_force_best(&g)).abs() < 1e-12);
        for deterministic in [false, true] {
            let config = CommunityConfig { deterministic, ..Default::default() };
            let labels = louvain(&g, &config);
            assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1, 1]);
        }
    }

    #[test]
    fn clique_hypergraph_communities() {
        let nets: Vec<Vec<u32>> = two_cliques().into_iter().map(|(u, v, _)| vec![u, v]).collect();
        let hg = Hypergraph::new(8, &nets, None, None).unwrap();
        let c = detect_communities(&hg, &CommunityConfig::default());
        assert_eq!(c.num_communities, 2);
        assert!(c.ids[..4].iter().all(|&x| x == c.ids[0]));
        assert!(c.ids[4..].iter().all(|&x| x == c.ids[4]));
    }

    #[test]
    fn single_node() {
        let hg = Hypergraph::new(1, &[] as &[Vec<u32>], None, None).unwrap();
        let c = detect_communities(&hg, &CommunityConfig::default());
        assert_eq!(c.num_communities, 1);
    }

    #[test]
    fn components_stay_separate() {
        let nets = vec![vec![0, 1, 2], vec![1, 2], vec![3, 4], vec![4, 5, 3]];
        let hg = Hypergraph::new(6, &nets, None, None).unwrap();
        for deterministic in [false, true] {
            let c = detect_communities(&hg, &CommunityConfig { deterministic, ..Default::default() });
            for a in 0..3 {
                for b in 3..6 {
                    assert_ne!(c.ids[a], c.ids[b]);
                }
            }
        }
    }

    #[test]
    fn single_thread_moves_strictly_ascend() {
        let edges = two_cliques();
        let g = WeightedGraph::from_edges(8, &edges);
        let mut clusters: Vec<u32> = (0..8).collect();
        let mut volumes: Vec<f64> = (0..8).map(|u| g.degree(u)).collect();
        let mut q = modularity(&g, &clusters).unwrap();
        let mut s = Scratch::new(8);
        for _ in 0..5 {
            for u in 0..8u32 {
                let own = clusters[u as usize];
                if let Some(t) = s.best_move(&g, u, own, |v| clusters[v as usize], |c| volumes[c as usize]) {
                    volumes[own as usize] -= g.degree(u);
                    volumes[t as usize] += g.degree(u);
                    clusters[u as usize] = t;
                    let next = modularity(&g, &clusters).unwrap();
                    assert!(next > q);
                    q = next;
                }
            }
        }
    }

    #[test]
    fn merge_singletons_flag() {
        let nets = vec![vec![0, 1], vec![0, 1], vec![1, 2]];
        let hg = Hypergraph::new(4, &nets, None, None).unwrap();
        let c = detect_communities(&hg, &CommunityConfig { merge_singletons: true, ..Default::default() });
        // Node 3 has no nets and stays alone; node 2 joins its neighbor.
        assert_eq!(c.ids[2], c.ids[1]);
        assert_ne!(c.ids[3], c.ids[0]);
    }
}
