use std::sync::atomic::{AtomicI64, AtomicU32, AtomicU8, AtomicUsize, Ordering::SeqCst};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::rating_map::RatingMap;
use crate::util::{derive_seed, mix, rng};
use crate::{Hypergraph, NodeId, Weight};

const UNCLUSTERED: u8 = 0;
const JOINING: u8 = 1;
const CLUSTERED: u8 = 2;

/// State of a node during a clustering pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinState {
    Unclustered,
    Joining,
    Clustered,
}

/// Result of a clustering pass: `rep[u]` is the representative of the
/// cluster of `u`, and `rep[rep[u]] == rep[u]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub rep: Vec<NodeId>,
}

impl Clustering {
    pub fn singletons(n: usize) -> Self {
        Self { rep: (0..n as NodeId).collect() }
    }

    pub fn num_clusters(&self) -> usize {
        self.rep.iter().enumerate().filter(|&(u, &r)| u as NodeId == r).count()
    }

    /// Cluster weights indexed by representative (zero for non-representatives).
    pub fn cluster_weights(&self, hg: &Hypergraph) -> Vec<Weight> {
        let mut w = vec![0; self.rep.len()];
        for (u, &r) in self.rep.iter().enumerate() {
            w[r as usize] += hg.node_weight(u as NodeId);
        }
        w
    }
}

/// Shared clustering state for concurrent cluster joins.
pub struct ClusterJoin<'a> {
    hg: &'a Hypergraph,
    c_max: Weight,
    rep: Vec<AtomicU32>,
    state: Vec<AtomicU8>,
    desired: Vec<AtomicU32>,
    weight: Vec<AtomicI64>,
    joins: AtomicUsize,
}

impl<'a> ClusterJoin<'a> {
    pub fn new(hg: &'a Hypergraph, c_max: Weight) -> Self {
        let n = hg.num_nodes();
        Self {
            hg,
            c_max,
            rep: (0..n as NodeId).map(AtomicU32::new).collect(),
            state: (0..n).map(|_| AtomicU8::new(UNCLUSTERED)).collect(),
            desired: (0..n as NodeId).map(AtomicU32::new).collect(),
            weight: hg.nodes().map(|u| AtomicI64::new(hg.node_weight(u))).collect(),
            joins: AtomicUsize::new(0),
        }
    }

    pub fn rep(&self, u: NodeId) -> NodeId {
        self.rep[u as usize].load(SeqCst)
    }

    pub fn state(&self, u: NodeId) -> JoinState {
        match self.state[u as usize].load(SeqCst) {
            UNCLUSTERED => JoinState::Unclustered,
            JOINING => JoinState::Joining,
            _ => JoinState::Clustered,
        }
    }

    pub fn cluster_weight(&self, r: NodeId) -> Weight {
        self.weight[r as usize].load(SeqCst)
    }

    /// Number of successful joins so far.
    pub fn joins(&self) -> usize {
        self.joins.load(SeqCst)
    }

    #[inline]
    fn cas(&self, u: NodeId, from: u8, to: u8) -> bool {
        self.state[u as usize].compare_exchange(from, to, SeqCst, SeqCst).is_ok()
    }

    /// Adds `c(u)` to the cluster of `r` if it stays within `c_max`.
    fn reserve(&self, u: NodeId, r: NodeId) -> bool {
        let w = self.hg.node_weight(u);
        if self.weight[r as usize].fetch_add(w, SeqCst) + w > self.c_max {
            self.weight[r as usize].fetch_sub(w, SeqCst);
            return false;
        }
        true
    }

    /// Clears `desired[u]` before `u` leaves the joining state, so cycle
    /// detection never follows a stale pointer.
    fn release(&self, u: NodeId, state: u8) {
        self.desired[u as usize].store(u, SeqCst);
        self.state[u as usize].store(state, SeqCst);
    }

    fn finish(&self, u: NodeId, target: NodeId) {
        self.rep[u as usize].store(target, SeqCst);
        self.joins.fetch_add(1, SeqCst);
    }

    /// `true` iff following `desired` from `v` through joining nodes leads
    /// back to `u` and `u` has the smallest id on that cycle.
    fn smallest_on_cycle(&self, u: NodeId, v: NodeId) -> bool {
        let mut cur = v;
        for _ in 0..self.rep.len() {
            if cur == u {
                return true;
            }
            if cur < u || self.state[cur as usize].load(SeqCst) != JOINING {
                return false;
            }
            let next = self.desired[cur as usize].load(SeqCst);
            if next == cur {
                return false;
            }
            cur = next;
        }
        false
    }

    /// Tries to add `u` to the cluster of `v`. Returns `true` on success.
    ///
    /// Rejected joins leave `u` unclustered and undo every weight update.
    pub fn join(&self, u: NodeId, v: NodeId) -> bool {
        debug_assert_ne!(u, v);
        if !self.cas(u, UNCLUSTERED, JOINING) {
            return false;
        }
        self.desired[u as usize].store(v, SeqCst);
        self.join_owned(u, v)
    }

    fn join_owned(&self, u: NodeId, v: NodeId) -> bool {
        loop {
            match self.state[v as usize].load(SeqCst) {
                CLUSTERED => {
                    let r = self.rep(v);
                    return self.commit_or_release(u, r, None);
                }
                UNCLUSTERED => {
                    if self.cas(v, UNCLUSTERED, JOINING) {
                        // v is unclustered, so it is its own representative.
                        return self.commit_or_release(u, v, Some(v));
                    }
                }
                _ => {
                    if self.smallest_on_cycle(u, v) {
                        if !self.reserve(u, v) {
                            self.release(u, UNCLUSTERED);
                            return false;
                        }
                        self.finish(u, self.rep(v));
                        self.state[v as usize].store(CLUSTERED, SeqCst);
                        self.release(u, CLUSTERED);
                        return true;
                    }
                    // Another node broke a cycle through u and joined it.
                    if self.state[u as usize].load(SeqCst) != JOINING {
                        return false;
                    }
                    std::hint::spin_loop();
                }
            }
        }
    }

    fn commit_or_release(&self, u: NodeId, r: NodeId, owned_v: Option<NodeId>) -> bool {
        if self.state[u as usize].load(SeqCst) != JOINING {
            // A cycle breaker made u a representative while we waited.
            if let Some(v) = owned_v {
                self.state[v as usize].store(UNCLUSTERED, SeqCst);
            }
            return false;
        }
        if !self.reserve(u, r) {
            if let Some(v) = owned_v {
                self.state[v as usize].store(UNCLUSTERED, SeqCst);
            }
            self.release(u, UNCLUSTERED);
            return false;
        }
        self.finish(u, r);
        if let Some(v) = owned_v {
            self.state[v as usize].store(CLUSTERED, SeqCst);
        }
        self.release(u, CLUSTERED);
        true
    }

    /// Final clustering. Representatives are resolved to roots, which is a
    /// no-op unless a join raced with a cycle resolution.
    pub fn into_clustering(self) -> Clustering {
        let mut rep: Vec<NodeId> = self.rep.into_iter().map(AtomicU32::into_inner).collect();
        for u in 0..rep.len() {
            let mut r = rep[u];
            while rep[r as usize] != r {
                r = rep[r as usize];
            }
            rep[u] = r;
        }
        Clustering { rep }
    }
}

/// Settings of a clustering pass.
#[derive(Debug, Clone)]
pub struct ClusteringConfig {
    pub seed: u64,
    /// Stop joining once the projected node count is at most `n / shrink_factor`.
    pub shrink_factor: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self { seed: 0, shrink_factor: 2.5 }
    }
}

/// Target clusters with their heavy-edge ratings.
pub(crate) struct Rater<'a> {
    hg: &'a Hypergraph,
    communities: &'a [u32],
    map: RatingMap,
}

impl<'a> Rater<'a> {
    pub(crate) fn new(hg: &'a Hypergraph, communities: &'a [u32]) -> Self {
        Self { hg, communities, map: RatingMap::default() }
    }

    /// Best representative for `u` by `r(u, C) = sum omega(e) / (|e| - 1)`
    /// over nets shared with `C`, skipping pins of other communities and
    /// clusters that cannot take `c(u)` anymore. `tie_key` orders equal
    /// ratings (larger wins).
    pub(crate) fn best_target(
        &mut self,
        u: NodeId,
        rep_of: impl Fn(NodeId) -> NodeId,
        admissible: impl Fn(NodeId) -> bool,
        tie_key: impl Fn(NodeId) -> u64,
    ) -> Option<NodeId> {
        let cu = self.communities[u as usize];
        for &e in self.hg.incident_nets(u) {
            let size = self.hg.net_size(e);
            if size < 2 {
                continue;
            }
            let score = self.hg.net_weight(e) as f64 / (size - 1) as f64;
            for &v in self.hg.pins(e) {
                if v == u || self.communities[v as usize] != cu {
                    continue;
                }
                let r = rep_of(v);
                if r != u {
                    self.map.add_once(r, e, score);
                }
            }
        }
        let mut best: Option<(NodeId, f64, u64)> = None;
        for (r, score) in self.map.iter() {
            if !admissible(r) {
                continue;
            }
            let key = tie_key(r);
            let better = match best {
                None => true,
                Some((_, bs, bk)) => score > bs || (score == bs && key > bk),
            };
            if better {
                best = Some((r, score, key));
            }
        }
        self.map.clear();
        best.map(|b| b.0)
    }

    /// All ratings of `u`.
    #[cfg(test)]
    pub(crate) fn ratings(&mut self, u: NodeId, rep_of: impl Fn(NodeId) -> NodeId) -> Vec<(NodeId, f64)> {
        let cu = self.communities[u as usize];
        for &e in self.hg.incident_nets(u) {
            let size = self.hg.net_size(e);
            if size < 2 {
                continue;
            }
            for &v in self.hg.pins(e) {
                if v != u && self.communities[v as usize] == cu {
                    self.map.add_once(rep_of(v), e, self.hg.net_weight(e) as f64 / (size - 1) as f64);
                }
            }
        }
        let mut out: Vec<_> = self.map.iter().collect();
        self.map.clear();
        out.sort_by_key(|e| e.0);
        out
    }
}

/// Best target of `u` under the current clustering, used by both variants.
pub fn rate_and_select(
    hg: &Hypergraph,
    u: NodeId,
    rep: &[NodeId],
    cluster_weights: &[Weight],
    communities: &[u32],
    c_max: Weight,
    seed: u64,
) -> Option<NodeId> {
    let cu = hg.node_weight(u);
    Rater::new(hg, communities).best_target(
        u,
        |v| rep[v as usize],
        |r| cluster_weights[r as usize] + cu <= c_max,
        |r| mix(seed ^ ((u as u64) << 32 | r as u64)),
    )
}

/// One parallel clustering pass in seeded random node order.
pub fn compute_clustering(hg: &Hypergraph, communities: &[u32], c_max: Weight, config: &ClusteringConfig) -> Clustering {
    let n = hg.num_nodes();
    let cj = ClusterJoin::new(hg, c_max);
    let floor = (n as f64 / config.shrink_factor).ceil() as usize;
    let max_joins = n.saturating_sub(floor);
    let mut order: Vec<NodeId> = hg.nodes().collect();
    order.shuffle(&mut rng(derive_seed(config.seed, &[0xc1])));
    let seed = config.seed;
    order.par_iter().for_each_init(
        || Rater::new(hg, communities),
        |rater, &u| {
            if cj.joins() >= max_joins || cj.state(u) != JoinState::Unclustered {
                return;
            }
            let cu = hg.node_weight(u);
            let target = rater.best_target(
                u,
                |v| cj.rep(v),
                |r| cj.cluster_weight(r) + cu <= c_max,
                |r| mix(seed ^ ((u as u64) << 32 | r as u64)),
            );
            if let Some(v) = target {
                cj.join(u, v);
            }
        },
    );
    cj.into_clustering()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Barrier;

    #[test]
    fn rating_example() {
        let hg = Hypergraph::new(3, &[vec![0, 1], vec![0, 1, 2]], None, Some(vec![2, 1])).unwrap();
        let comm = [0; 3];
        let r = Rater::new(&hg, &comm).ratings(0, |v| v);
        assert_eq!(r, vec![(1, 2.5), (2, 0.5)]);
        let w = [1; 3];
        assert_eq!(rate_and_select(&hg, 0, &[0, 1, 2], &w, &comm, 10, 0), Some(1));
    }

    #[test]
    fn isolated_and_foreign_nodes_have_no_target() {
        let hg = Hypergraph::new(3, &[vec![1, 2]], None, None).unwrap();
        let w = [1; 3];
        assert_eq!(rate_and_select(&hg, 0, &[0, 1, 2], &w, &[0, 0, 0], 10, 0), None);
        assert_eq!(rate_and_select(&hg, 1, &[0, 1, 2], &w, &[0, 0, 1], 10, 0), None);
    }

    #[test]
    fn overweight_targets_are_skipped() {
        let hg = Hypergraph::new(3, &[vec![0, 1], vec![0, 2]], None, Some(vec![5, 1])).unwrap();
        let comm = [0; 3];
        assert_eq!(rate_and_select(&hg, 0, &[0, 1, 2], &[1, 2, 1], &comm, 2, 0), Some(2));
        assert_eq!(rate_and_select(&hg, 0, &[0, 1, 2], &[1, 2, 2], &comm, 2, 0), None);
    }

    #[test]
    fn join_clustered_target_adopts_its_representative() {
        let hg = Hypergraph::new(3, &[vec![0, 1, 2]], None, None).unwrap();
        let cj = ClusterJoin::new(&hg, 10);
        assert!(cj.join(1, 2));
        assert!(cj.join(0, 1));
        assert_eq!(cj.into_clustering().rep, vec![2, 2, 2]);
    }

    #[test]
    fn join_respects_weight_limit() {
        let hg = Hypergraph::new(3, &[vec![0, 1, 2]], Some(vec![1, 1, 1]), None).unwrap();
        let cj = ClusterJoin::new(&hg, 2);
        assert!(cj.join(1, 2));
        assert!(!cj.join(0, 2));
        assert_eq!(cj.cluster_weight(2), 2);
        assert_eq!(cj.state(0), JoinState::Unclustered);
        assert_eq!(cj.into_clustering().rep, vec![0, 2, 2]);
    }

    #[test]
    fn concurrent_two_cycle_shares_representative() {
        let hg = Hypergraph::new(2, &[vec![0, 1]], None, None).unwrap();
        for _ in 0..200 {
            let cj = ClusterJoin::new(&hg, 10);
            let barrier = Barrier::new(2);
            std::thread::scope(|s| {
                s.spawn(|| {
                    barrier.wait();
                    cj.join(0, 1);
                });
                s.spawn(|| {
                    barrier.wait();
                    cj.join(1, 0);
                });
            });
            let rep = cj.into_clustering().rep;
            assert_eq!(rep[0], rep[1]);
            assert_eq!(rep[rep[0] as usize], rep[0]);
        }
    }

    #[test]
    fn concurrent_cycles_and_paths_form_flat_forest() {
        let n = 64;
        let nets: Vec<Vec<u32>> = (0..n as u32).map(|i| vec![i, (i + 1) % n as u32]).collect();
        let hg = Hypergraph::new(n, &nets, None, None).unwrap();
        for round in 0..50 {
            let cj = ClusterJoin::new(&hg, 4);
            // Every node targets its successor: one long cycle.
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.shuffle(&mut rng(round));
            order.par_iter().for_each(|&u| {
                cj.join(u, (u + 1) % n as u32);
            });
            let c = cj.into_clustering();
            for u in 0..n {
                let r = c.rep[u] as usize;
                assert_eq!(c.rep[r] as usize, r);
            }
            assert!(c.cluster_weights(&hg).iter().all(|&w| w <= 4));
        }
    }

    #[test]
    fn clique_clusters_respect_c_max() {
        let hg = Hypergraph::new(4, &[vec![0, 1, 2, 3]], None, None).unwrap();
        let c = compute_clustering(&hg, &[0; 4], 2, &ClusteringConfig { shrink_factor: 100.0, ..Default::default() });
        assert!(c.cluster_weights(&hg).iter().all(|&w| w <= 2));
        assert_eq!(c.num_clusters(), 2);
    }

    #[test]
    fn isolated_nodes_stay_singletons() {
        let hg = Hypergraph::new(5, &[] as &[Vec<u32>], None, None).unwrap();
        let c = compute_clustering(&hg, &[0; 5], 10, &ClusteringConfig::default());
        assert_eq!(c, Clustering::singletons(5));
    }

    #[test]
    fn star_leaves_join_center_until_full() {
        let nets: Vec<Vec<u32>> = (1..7).map(|i| vec![0, i]).collect();
        let hg = Hypergraph::new(7, &nets, None, Some(vec![3, 3, 3, 1, 1, 1])).unwrap();
        let config = ClusteringConfig { shrink_factor: 100.0, seed: 3 };
        let c = compute_clustering(&hg, &[0; 7], 3, &config);
        let w = c.cluster_weights(&hg);
        assert!(w.iter().all(|&x| x <= 3));
        assert_eq!(w[c.rep[0] as usize], 3);
    }

    #[test]
    fn shrink_guard_stops_early() {
        let hg = Hypergraph::new(100, &[(0..100).collect::<Vec<u32>>()], None, None).unwrap();
        let c = compute_clustering(&hg, &[0; 100], 100, &ClusteringConfig::default());
        assert!(c.num_clusters() >= 40);
    }
}
