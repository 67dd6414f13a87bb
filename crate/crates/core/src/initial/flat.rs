//! Flat bipartitioning algorithms of the portfolio.
//!
//! Every member returns a 0/1 assignment. Growing members start with all
//! nodes in block 1 and move nodes to block 0 until block 0 reaches its
//! target weight, never exceeding its maximum.

use std::collections::{BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::util::Rng;
use crate::{BlockId, Hypergraph, NodeId, Weight};

/// Score a greedy growing member maximizes when picking the next node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GainPolicy {
    /// Weight of incident nets already touching block 0.
    CutNet,
    /// Reduction of the connectivity objective.
    Connectivity,
    /// Net weight times the number of pins already in block 0.
    MaxPin,
}

/// How a greedy growing member picks its start node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeedPolicy {
    Random,
    /// One end of a pseudo-peripheral pair found by two BFS sweeps.
    PseudoPeripheral,
}

/// A member of the initial bipartitioning portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Member {
    Random,
    Bfs,
    LabelPropagation,
    Greedy(GainPolicy, SeedPolicy),
}

impl Member {
    pub const ALL: [Member; 9] = [
        Member::Random,
        Member::Bfs,
        Member::LabelPropagation,
        Member::Greedy(GainPolicy::CutNet, SeedPolicy::Random),
        Member::Greedy(GainPolicy::CutNet, SeedPolicy::PseudoPeripheral),
        Member::Greedy(GainPolicy::Connectivity, SeedPolicy::Random),
        Member::Greedy(GainPolicy::Connectivity, SeedPolicy::PseudoPeripheral),
        Member::Greedy(GainPolicy::MaxPin, SeedPolicy::Random),
        Member::Greedy(GainPolicy::MaxPin, SeedPolicy::PseudoPeripheral),
    ];

    /// Position in [`Member::ALL`], used as a stable tie-breaker.
    pub fn id(self) -> usize {
        Self::ALL.iter().position(|&m| m == self).expect("member is listed")
    }

    pub fn name(self) -> &'static str {
        match self {
            Member::Random => "random",
            Member::Bfs => "bfs",
            Member::LabelPropagation => "lp",
            Member::Greedy(GainPolicy::CutNet, SeedPolicy::Random) => "greedy-cut-random",
            Member::Greedy(GainPolicy::CutNet, SeedPolicy::PseudoPeripheral) => "greedy-cut-peripheral",
            Member::Greedy(GainPolicy::Connectivity, SeedPolicy::Random) => "greedy-km1-random",
            Member::Greedy(GainPolicy::Connectivity, SeedPolicy::PseudoPeripheral) => "greedy-km1-peripheral",
            Member::Greedy(GainPolicy::MaxPin, SeedPolicy::Random) => "greedy-maxpin-random",
            Member::Greedy(GainPolicy::MaxPin, SeedPolicy::PseudoPeripheral) => "greedy-maxpin-peripheral",
        }
    }
}

/// Weight limits of one bipartitioning step.
#[derive(Debug, Clone, Copy)]
pub struct BipartitionTarget {
    pub max_weights: [Weight; 2],
    /// Weight block 0 is grown to.
    pub grow_to: Weight,
}

impl BipartitionTarget {
    /// Block 0 receives `share` of `total`, block 1 the rest.
    pub fn new(total: Weight, share: f64, max_weights: [Weight; 2]) -> Self {
        let ideal = (total as f64 * share).floor() as Weight;
        let grow_to = ideal.max(total - max_weights[1]).min(max_weights[0]);
        Self { max_weights, grow_to }
    }
}

pub(crate) fn run_flat(hg: &Hypergraph, member: Member, target: &BipartitionTarget, rng: &mut Rng) -> Vec<BlockId> {
    if hg.num_nodes() == 0 {
        return Vec::new();
    }
    match member {
        Member::Random => random(hg, target, rng),
        Member::Bfs => bfs(hg, target, rng),
        Member::LabelPropagation => label_propagation(hg, target, rng),
        Member::Greedy(policy, seeds) => {
            let seed = match seeds {
                SeedPolicy::Random => rng.gen_range(0..hg.num_nodes() as NodeId),
                SeedPolicy::PseudoPeripheral => pseudo_peripheral(hg, rng).0,
            };
            greedy(hg, target, policy, seed, rng)
        }
    }
}

fn random(hg: &Hypergraph, target: &BipartitionTarget, rng: &mut Rng) -> Vec<BlockId> {
    let mut order: Vec<NodeId> = hg.nodes().collect();
    order.shuffle(rng);
    let mut parts = vec![0; hg.num_nodes()];
    let mut w = [0; 2];
    for u in order {
        let c = hg.node_weight(u);
        let mut b = rng.gen_range(0..2usize);
        if w[b] + c > target.max_weights[b] && w[1 - b] + c <= target.max_weights[1 - b] {
            b = 1 - b;
        }
        parts[u as usize] = b as BlockId;
        w[b] += c;
    }
    parts
}

/// Nodes in BFS order from `start`, restricted to one connected component.
fn bfs_order(hg: &Hypergraph, start: NodeId) -> Vec<NodeId> {
    let mut seen = vec![false; hg.num_nodes()];
    let mut net_seen = vec![false; hg.num_nets()];
    let mut order = vec![start];
    seen[start as usize] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &e in hg.incident_nets(u) {
            if std::mem::replace(&mut net_seen[e as usize], true) {
                continue;
            }
            for &v in hg.pins(e) {
                if !std::mem::replace(&mut seen[v as usize], true) {
                    order.push(v);
                }
            }
        }
    }
    order
}

/// Two BFS sweeps: the last node reached from a random start, and the last
/// node reached from that one.
pub(crate) fn pseudo_peripheral(hg: &Hypergraph, rng: &mut Rng) -> (NodeId, NodeId) {
    let start = rng.gen_range(0..hg.num_nodes() as NodeId);
    let a = *bfs_order(hg, start).last().expect("non-empty");
    let b = *bfs_order(hg, a).last().expect("non-empty");
    (a, b)
}

/// Random node not yet in block 0 and not yet visited.
fn fresh_node(parts: &[BlockId], visited: &[bool], rng: &mut Rng) -> Option<NodeId> {
    let candidates: Vec<NodeId> =
        (0..parts.len() as NodeId).filter(|&u| parts[u as usize] == 1 && !visited[u as usize]).collect();
    candidates.choose(rng).copied()
}

fn bfs(hg: &Hypergraph, target: &BipartitionTarget, rng: &mut Rng) -> Vec<BlockId> {
    let n = hg.num_nodes();
    let mut parts = vec![1; n];
    let mut visited = vec![false; n];
    let mut net_seen = vec![false; hg.num_nets()];
    let mut queue = VecDeque::new();
    let mut w0 = 0;
    while w0 < target.grow_to {
        let u = match queue.pop_front() {
            Some(u) => u,
            None => match fresh_node(&parts, &visited, rng) {
                Some(u) => {
                    visited[u as usize] = true;
                    u
                }
                None => break,
            },
        };
        if w0 + hg.node_weight(u) > target.max_weights[0] {
            continue;
        }
        parts[u as usize] = 0;
        w0 += hg.node_weight(u);
        for &e in hg.incident_nets(u) {
            if std::mem::replace(&mut net_seen[e as usize], true) {
                continue;
            }
            for &v in hg.pins(e) {
                if !std::mem::replace(&mut visited[v as usize], true) {
                    queue.push_back(v);
                }
            }
        }
    }
    parts
}

/// Gain contribution of a net with `size` pins, `in0` of them in block 0,
/// for a pin outside block 0.
#[inline]
fn contribution(policy: GainPolicy, size: usize, in0: usize, w: Weight) -> Weight {
    match policy {
        GainPolicy::CutNet => w * (in0 > 0) as Weight,
        GainPolicy::Connectivity => w * ((size - in0 == 1) as Weight - (in0 == 0) as Weight),
        GainPolicy::MaxPin => w * in0 as Weight,
    }
}

fn greedy(hg: &Hypergraph, target: &BipartitionTarget, policy: GainPolicy, seed: NodeId, rng: &mut Rng) -> Vec<BlockId> {
    let n = hg.num_nodes();
    let mut parts = vec![1; n];
    let mut in0 = vec![0usize; hg.num_nets()];
    let mut gain: Vec<Weight> = hg
        .nodes()
        .map(|u| {
            hg.incident_nets(u).iter().map(|&e| contribution(policy, hg.net_size(e), 0, hg.net_weight(e))).sum()
        })
        .collect();
    // Random tie-breaking keys so that repetitions explore different orders.
    let mut keys: Vec<u32> = (0..n as u32).collect();
    keys.shuffle(rng);
    let mut visited = vec![false; n];
    let mut heap: BinaryHeap<(Weight, u32, NodeId)> = BinaryHeap::new();
    visited[seed as usize] = true;
    heap.push((gain[seed as usize], keys[seed as usize], seed));
    let mut w0 = 0;
    while w0 < target.grow_to {
        let u = match heap.pop() {
            Some((g, _, u)) => {
                if parts[u as usize] == 0 || g != gain[u as usize] {
                    continue;
                }
                u
            }
            None => match fresh_node(&parts, &visited, rng) {
                Some(u) => {
                    visited[u as usize] = true;
                    u
                }
                None => break,
            },
        };
        if w0 + hg.node_weight(u) > target.max_weights[0] {
            // Mark as visited so that a later pop of a stale entry is skipped.
            gain[u as usize] = Weight::MIN;
            continue;
        }
        parts[u as usize] = 0;
        w0 += hg.node_weight(u);
        for &e in hg.incident_nets(u) {
            let size = hg.net_size(e);
            let w = hg.net_weight(e);
            let a = in0[e as usize];
            in0[e as usize] += 1;
            let d = contribution(policy, size, a + 1, w) - contribution(policy, size, a, w);
            for &v in hg.pins(e) {
                if parts[v as usize] == 0 || gain[v as usize] == Weight::MIN {
                    continue;
                }
                gain[v as usize] += d;
                if d != 0 || !visited[v as usize] {
                    visited[v as usize] = true;
                    heap.push((gain[v as usize], keys[v as usize], v));
                }
            }
        }
    }
    parts
}

/// Label propagation from a pseudo-peripheral pair. Unassigned nodes join the
/// block that most of their incident net weight already touches.
fn label_propagation(hg: &Hypergraph, target: &BipartitionTarget, rng: &mut Rng) -> Vec<BlockId> {
    const UNASSIGNED: BlockId = 2;
    const ROUNDS: usize = 20;
    let n = hg.num_nodes();
    let mut parts = vec![UNASSIGNED; n];
    let mut phi = vec![[0u32; 2]; hg.num_nets()];
    let mut w = [0; 2];
    let assign = |u: NodeId, b: usize, parts: &mut [BlockId], phi: &mut [[u32; 2]], w: &mut [Weight; 2]| {
        parts[u as usize] = b as BlockId;
        w[b] += hg.node_weight(u);
        for &e in hg.incident_nets(u) {
            phi[e as usize][b] += 1;
        }
    };
    let (a, b) = pseudo_peripheral(hg, rng);
    assign(a, 0, &mut parts, &mut phi, &mut w);
    if b != a && hg.node_weight(b) <= target.max_weights[1] {
        assign(b, 1, &mut parts, &mut phi, &mut w);
    }
    let mut order: Vec<NodeId> = hg.nodes().collect();
    for _ in 0..ROUNDS {
        order.shuffle(rng);
        let mut changed = false;
        for &u in &order {
            if parts[u as usize] != UNASSIGNED {
                continue;
            }
            let mut score = [0; 2];
            for &e in hg.incident_nets(u) {
                for (s, &p) in score.iter_mut().zip(&phi[e as usize]) {
                    if p > 0 {
                        *s += hg.net_weight(e);
                    }
                }
            }
            if score == [0, 0] {
                continue;
            }
            let c = hg.node_weight(u);
            let preferred = if score[0] != score[1] { (score[1] > score[0]) as usize } else { (w[1] < w[0]) as usize };
            let fits = |b: usize| w[b] + c <= target.max_weights[b] && (b == 1 || w[0] < target.grow_to);
            let chosen = [preferred, 1 - preferred].into_iter().find(|&b| score[b] > 0 && fits(b));
            if let Some(bl) = chosen {
                assign(u, bl, &mut parts, &mut phi, &mut w);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for u in hg.nodes() {
        if parts[u as usize] == UNASSIGNED {
            let c = hg.node_weight(u);
            let bl = if w[0] < target.grow_to && w[0] + c <= target.max_weights[0] { 0 } else { 1 };
            assign(u, bl, &mut parts, &mut phi, &mut w);
        }
    }
    parts
}
