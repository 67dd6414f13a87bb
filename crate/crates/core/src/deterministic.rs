//! Building blocks of the deterministic preset.
//!
//! Every round is split into sub-rounds by a permutation that depends only on
//! `(seed, round)`. Inside a sub-round all decisions are computed against a
//! frozen state and then applied in an order that does not depend on thread
//! scheduling, so the output is identical for any number of threads.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::coarsening::{Clustering, Rater};
use crate::partition::PartitionedHypergraph;
use crate::util::{derive_seed, rng};
use crate::{BlockId, Hypergraph, NodeId, Weight};

/// Assignment of nodes to the sub-rounds of one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubRoundPlan {
    sub_rounds: Vec<Vec<NodeId>>,
}

impl SubRoundPlan {
    /// Splits a `(seed, round)` permutation of `0..n` into `count` nearly
    /// equal parts, each sorted by node id.
    pub fn new(n: usize, count: usize, seed: u64, round: u64) -> Self {
        let count = count.clamp(1, n.max(1));
        let mut perm: Vec<NodeId> = (0..n as NodeId).collect();
        perm.shuffle(&mut rng(derive_seed(seed, &[0x5b, round])));
        let sub_rounds = (0..count)
            .map(|j| {
                let mut part = perm[j * n / count..(j + 1) * n / count].to_vec();
                part.sort_unstable();
                part
            })
            .collect();
        Self { sub_rounds }
    }

    pub fn sub_rounds(&self) -> &[Vec<NodeId>] {
        &self.sub_rounds
    }

    pub fn len(&self) -> usize {
        self.sub_rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_rounds.is_empty()
    }
}

/// Signed volume change of `cluster` caused by moving `node`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeUpdate {
    pub cluster: u32,
    pub node: NodeId,
    pub delta: f64,
}

/// Groups updates by cluster and sums each group in ascending node id order.
/// Returns `(cluster, sum)` pairs sorted by cluster.
pub fn deterministic_volume_aggregation(mut updates: Vec<VolumeUpdate>) -> Vec<(u32, f64)> {
    updates.par_sort_by_key(|u| (u.cluster, u.node));
    let mut starts: Vec<usize> = (0..updates.len())
        .into_par_iter()
        .filter(|&i| i == 0 || updates[i - 1].cluster != updates[i].cluster)
        .collect();
    starts.push(updates.len());
    starts
        .par_windows(2)
        .map(|w| {
            let group = &updates[w[0]..w[1]];
            (group[0].cluster, group.iter().fold(0.0, |acc, u| acc + u.delta))
        })
        .collect()
}

/// Longest feasible prefix pair `(i, j)` reached by the two-pointer walk over
/// the weights of moves `V_s -> V_t` (`st`) and `V_t -> V_s` (`ts`).
///
/// With `x(i, j) = sum(st[..i]) - sum(ts[..j])`, a pair is feasible iff
/// `-(l_max - c_s) <= x <= l_max - c_t`. The walk advances `i` while
/// `x <= 0` and `j` otherwise, switching sides when one is exhausted. All
/// weights must be non-negative.
pub fn select_swap_prefixes(st: &[Weight], ts: &[Weight], c_s: Weight, c_t: Weight, l_max: Weight) -> (usize, usize) {
    select_swap_prefixes_with_slack(st, ts, l_max - c_s, l_max - c_t)
}

/// [`select_swap_prefixes`] with per-block slack `L_max(V_s) - c(V_s)` and
/// `L_max(V_t) - c(V_t)`.
pub fn select_swap_prefixes_with_slack(st: &[Weight], ts: &[Weight], slack_s: Weight, slack_t: Weight) -> (usize, usize) {
    let a = prefix_sums(st);
    let b = prefix_sums(ts);
    let w = Walk { a: &a, b: &b, lower: -slack_s, upper: slack_t };
    let start = if w.feasible(0, 0) { Some((0, 0)) } else { None };
    w.search(0, st.len(), 0, ts.len()).or(start).unwrap_or((0, 0))
}

/// Sequential version of [`select_swap_prefixes`].
pub fn select_swap_prefixes_sequential(
    st: &[Weight],
    ts: &[Weight],
    c_s: Weight,
    c_t: Weight,
    l_max: Weight,
) -> (usize, usize) {
    let a = prefix_sums(st);
    let b = prefix_sums(ts);
    let w = Walk { a: &a, b: &b, lower: -(l_max - c_s), upper: l_max - c_t };
    let start = if w.feasible(0, 0) { Some((0, 0)) } else { None };
    w.walk(0, st.len(), 0, ts.len()).or(start).unwrap_or((0, 0))
}

fn prefix_sums(w: &[Weight]) -> Vec<Weight> {
    let mut out = Vec::with_capacity(w.len() + 1);
    out.push(0);
    for &x in w {
        out.push(out.last().unwrap() + x);
    }
    out
}

struct Walk<'a> {
    a: &'a [Weight],
    b: &'a [Weight],
    lower: Weight,
    upper: Weight,
}

const SEQUENTIAL_CUTOFF: usize = 64;

impl Walk<'_> {
    #[inline]
    fn feasible(&self, i: usize, j: usize) -> bool {
        let x = self.a[i] - self.b[j];
        self.lower <= x && x <= self.upper
    }

    /// Last feasible state strictly after `(i0, j0)` on the path segment that
    /// ends at `(i1, j1)`.
    fn walk(&self, mut i: usize, i1: usize, mut j: usize, j1: usize) -> Option<(usize, usize)> {
        let mut best = None;
        while i < i1 || j < j1 {
            if j == j1 || (i < i1 && self.a[i] <= self.b[j]) {
                i += 1;
            } else {
                j += 1;
            }
            if self.feasible(i, j) {
                best = Some((i, j));
            }
        }
        best
    }

    /// Same contract as [`walk`](Self::walk), by recursive splitting of the
    /// longer side at its middle.
    fn search(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Option<(usize, usize)> {
        let (la, lb) = (i1 - i0, j1 - j0);
        if la + lb <= SEQUENTIAL_CUTOFF {
            return self.walk(i0, i1, j0, j1);
        }
        if lb == 0 {
            // x grows with i; the feasible states form one interval.
            let bj = self.b[j0];
            let i = i0 + self.a[i0 + 1..=i1].partition_point(|&ai| ai - bj <= self.upper);
            return (i > i0 && self.feasible(i, j0)).then_some((i, j0));
        }
        if la == 0 {
            let ai = self.a[i0];
            let j = j0 + self.b[j0 + 1..=j1].partition_point(|&bj| ai - bj >= self.lower);
            return (j > j0 && self.feasible(i0, j)).then_some((i0, j));
        }
        // (mi, mj) is on the path: the state right before the middle item of
        // the longer side is processed.
        let (mi, mj) = if la >= lb {
            let mi = i0 + la / 2;
            (mi, j0 + self.b[j0..j1].partition_point(|&bj| bj < self.a[mi]))
        } else {
            let mj = j0 + lb / 2;
            (i0 + self.a[i0..i1].partition_point(|&ai| ai <= self.b[mj]), mj)
        };
        let split_feasible = (mi, mj) != (i0, j0) && self.feasible(mi, mj);
        if split_feasible {
            return self.search(mi, i1, mj, j1).or(Some((mi, mj)));
        }
        let (left, right) = rayon::join(|| self.search(i0, mi, j0, mj), || self.search(mi, i1, mj, j1));
        right.or(left)
    }
}

/// A node's request to join the cluster represented by `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinProposal {
    pub target: NodeId,
    pub node: NodeId,
    pub weight: Weight,
}

/// Approves join proposals per target cluster. If all proposals into a
/// cluster fit under `c_max` they are approved together; otherwise they are
/// sorted by `(weight, node)` and the longest fitting prefix is approved.
/// The result is sorted by `(target, weight, node)`.
pub fn approve_joins(
    proposals: Vec<JoinProposal>,
    cluster_weight: impl Fn(NodeId) -> Weight + Sync,
    c_max: Weight,
) -> Vec<JoinProposal> {
    let mut totals: HashMap<NodeId, Weight> = HashMap::new();
    for p in &proposals {
        *totals.entry(p.target).or_default() += p.weight;
    }
    let (mut approved, mut contested): (Vec<_>, Vec<_>) =
        proposals.into_iter().partition(|p| cluster_weight(p.target) + totals[&p.target] <= c_max);
    contested.par_sort_unstable_by_key(|p| (p.target, p.weight, p.node));
    let mut i = 0;
    while i < contested.len() {
        let target = contested[i].target;
        let mut load = cluster_weight(target);
        while i < contested.len() && contested[i].target == target {
            if load + contested[i].weight <= c_max {
                load += contested[i].weight;
                approved.push(contested[i]);
            } else {
                // Weights are ascending, so nothing after this fits either.
                while i < contested.len() && contested[i].target == target {
                    i += 1;
                }
                break;
            }
            i += 1;
        }
    }
    approved.par_sort_unstable_by_key(|p| (p.target, p.weight, p.node));
    approved
}

/// One clustering pass in which every sub-round computes the targets of its
/// singleton nodes against a frozen clustering and then applies the approved
/// joins. Singletons of the current sub-round are not eligible as targets.
pub fn deterministic_coarsening_pass(
    hg: &Hypergraph,
    communities: &[u32],
    c_max: Weight,
    shrink_factor: f64,
    sub_rounds: usize,
    seed: u64,
) -> Clustering {
    let n = hg.num_nodes();
    let mut rep: Vec<NodeId> = (0..n as NodeId).collect();
    let mut weight: Vec<Weight> = hg.node_weights().to_vec();
    let mut singleton = vec![true; n];
    let mut in_round = vec![false; n];
    let max_joins = n.saturating_sub((n as f64 / shrink_factor).ceil() as usize);
    let mut joins = 0;
    let plan = SubRoundPlan::new(n, sub_rounds, seed, 0);
    for nodes in plan.sub_rounds() {
        if joins >= max_joins {
            break;
        }
        for &u in nodes {
            in_round[u as usize] = true;
        }
        let proposals: Vec<JoinProposal> = nodes
            .par_iter()
            .filter(|&&u| singleton[u as usize])
            .map_init(
                || Rater::new(hg, communities),
                |rater, &u| {
                    let cu = hg.node_weight(u);
                    rater
                        .best_target(
                            u,
                            |v| rep[v as usize],
                            |t| !(in_round[t as usize] && singleton[t as usize]) && weight[t as usize] + cu <= c_max,
                            |t| u64::MAX - t as u64,
                        )
                        .map(|target| JoinProposal { target, node: u, weight: cu })
                },
            )
            .flatten()
            .collect();
        for p in approve_joins(proposals, |t| weight[t as usize], c_max) {
            if joins >= max_joins {
                break;
            }
            rep[p.node as usize] = p.target;
            weight[p.target as usize] += p.weight;
            singleton[p.node as usize] = false;
            singleton[p.target as usize] = false;
            joins += 1;
        }
        for &u in nodes {
            in_round[u as usize] = false;
        }
    }
    Clustering { rep }
}

/// Settings of synchronous label propagation.
#[derive(Debug, Clone)]
pub struct SyncLpConfig {
    pub max_rounds: usize,
    pub sub_rounds: usize,
    pub seed: u64,
}

impl Default for SyncLpConfig {
    fn default() -> Self {
        Self { max_rounds: 5, sub_rounds: 16, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    node: NodeId,
    from: BlockId,
    to: BlockId,
    gain: Weight,
    weight: Weight,
}

/// Best move of `u` computed directly from the pin counts: positive gain, or
/// zero gain with `c(V_t) + c(u) < c(V_s)`.
fn best_candidate(ph: &PartitionedHypergraph<'_>, u: NodeId, scratch: &mut Vec<Weight>) -> Option<Candidate> {
    let hg = ph.hypergraph();
    let k = ph.k();
    let from = ph.block(u);
    scratch.clear();
    scratch.resize(k, 0);
    let mut benefit = 0;
    let mut total = 0;
    for &e in hg.incident_nets(u) {
        let w = hg.net_weight(e);
        total += w;
        if ph.pin_count(e, from) == 1 {
            benefit += w;
        }
        for b in ph.connectivity_set(e) {
            scratch[b as usize] += w;
        }
    }
    let cu = hg.node_weight(u);
    let mut best: Option<Candidate> = None;
    for to in 0..k as BlockId {
        if to == from {
            continue;
        }
        let gain = benefit - (total - scratch[to as usize]);
        let improves_balance = ph.block_weight(to) + cu < ph.block_weight(from);
        if gain > 0 || (gain == 0 && improves_balance) {
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Candidate { node: u, from, to, gain, weight: cu });
            }
        }
    }
    best
}

/// Synchronous label propagation. Returns the total reduction of the
/// connectivity metric; the result does not depend on the thread count.
pub fn sync_label_propagation(ph: &PartitionedHypergraph<'_>, config: &SyncLpConfig) -> Weight {
    let n = ph.hypergraph().num_nodes();
    let k = ph.k();
    let mut improvement = 0;
    for round in 0..config.max_rounds {
        let plan = SubRoundPlan::new(n, config.sub_rounds, config.seed, round as u64);
        let mut round_improvement = 0;
        let mut committed = 0;
        for nodes in plan.sub_rounds() {
            let mut candidates: Vec<Candidate> = nodes
                .par_iter()
                .map_init(Vec::new, |scratch, &u| best_candidate(ph, u, scratch))
                .flatten()
                .collect();
            candidates.par_sort_unstable_by_key(|c| (c.from, c.to, std::cmp::Reverse(c.gain), c.node));
            let mut by_pair: HashMap<(BlockId, BlockId), &[Candidate]> = HashMap::new();
            let mut i = 0;
            while i < candidates.len() {
                let key = (candidates[i].from, candidates[i].to);
                let j = i + candidates[i..].partition_point(|c| (c.from, c.to) == key);
                by_pair.insert(key, &candidates[i..j]);
                i = j;
            }
            for s in 0..k as BlockId {
                for t in s + 1..k as BlockId {
                    let st = by_pair.get(&(s, t)).copied().unwrap_or(&[]);
                    let ts = by_pair.get(&(t, s)).copied().unwrap_or(&[]);
                    if st.is_empty() && ts.is_empty() {
                        continue;
                    }
                    let w_st: Vec<Weight> = st.iter().map(|c| c.weight).collect();
                    let w_ts: Vec<Weight> = ts.iter().map(|c| c.weight).collect();
                    let (i, j) = select_swap_prefixes_with_slack(
                        &w_st,
                        &w_ts,
                        ph.max_block_weight(s) - ph.block_weight(s),
                        ph.max_block_weight(t) - ph.block_weight(t),
                    );
                    let chosen: Vec<Candidate> = st[..i].iter().chain(&ts[..j]).copied().collect();
                    if chosen.is_empty() {
                        continue;
                    }
                    let delta: Weight =
                        chosen.par_iter().map(|c| ph.move_node_unchecked(c.node, c.from, c.to, None)).sum();
                    if delta < 0 {
                        chosen.par_iter().for_each(|c| {
                            ph.move_node_unchecked(c.node, c.to, c.from, None);
                        });
                    } else {
                        round_improvement += delta;
                        committed += chosen.len();
                    }
                }
            }
        }
        improvement += round_improvement;
        if committed == 0 {
            break;
        }
    }
    improvement
}
