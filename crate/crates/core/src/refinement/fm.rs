use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicU8, AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rustc_hash::FxHashSet as HashSet;

use super::delta::DeltaPartition;
use crate::partition::{recalculate_gains_with, revert_to_prefix, GainTable, Move, MoveOutcome, PartitionedHypergraph};
use crate::util::{derive_seed, rng};
use crate::{BlockId, NodeId, Weight};

/// Constants of the adaptive stopping rule.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub alpha: f64,
    pub beta: f64,
    /// Hard cap on moves since the last improvement.
    pub max_fruitless: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 32.0, max_fruitless: 500 }
    }
}

impl StopRule {
    /// Never stops.
    pub fn unlimited() -> Self {
        Self { alpha: 1.0, beta: f64::INFINITY, max_fruitless: usize::MAX }
    }
}

/// Gain statistics since the last improvement. Stops once
/// `s * mu^2 > alpha * sigma^2 + beta` with a non-positive mean `mu`.
#[derive(Debug, Clone)]
pub struct AdaptiveStop {
    rule: StopRule,
    steps: usize,
    mean: f64,
    m2: f64,
}

impl AdaptiveStop {
    pub fn new(rule: StopRule) -> Self {
        Self { rule, steps: 0, mean: 0.0, m2: 0.0 }
    }

    pub fn observe(&mut self, gain: Weight) {
        self.steps += 1;
        let x = gain as f64;
        let d = x - self.mean;
        self.mean += d / self.steps as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn reset(&mut self) {
        self.steps = 0;
        self.mean = 0.0;
        self.m2 = 0.0;
    }

    pub fn should_stop(&self) -> bool {
        if self.steps == 0 {
            return false;
        }
        if self.steps >= self.rule.max_fruitless {
            return true;
        }
        let s = self.steps as f64;
        let variance = self.m2 / s;
        self.mean <= 0.0 && s * self.mean * self.mean > self.rule.alpha * variance + self.rule.beta
    }
}

#[derive(Debug, Clone)]
pub struct FmConfig {
    pub max_rounds: usize,
    /// Seeds polled from the task queue per localized search.
    pub seeds_per_search: usize,
    pub stop: StopRule,
    pub seed: u64,
}

impl Default for FmConfig {
    fn default() -> Self {
        Self { max_rounds: 10, seeds_per_search: 25, stop: StopRule::default(), seed: 0 }
    }
}

const FREE: u8 = 0;
const OWNED: u8 = 1;
const MOVED: u8 = 2;

/// Per-round node ownership. A node is acquired by at most one search, and
/// nodes moved globally stay owned until the round ends.
pub struct Ownership(Vec<AtomicU8>);

impl Ownership {
    pub fn new(n: usize) -> Self {
        Self((0..n).map(|_| AtomicU8::new(FREE)).collect())
    }

    /// Test-and-set acquisition.
    pub fn acquire(&self, u: NodeId) -> bool {
        self.0[u as usize].compare_exchange(FREE, OWNED, Ordering::AcqRel, Ordering::Relaxed).is_ok()
    }

    fn release(&self, u: NodeId) {
        let _ = self.0[u as usize].compare_exchange(OWNED, FREE, Ordering::AcqRel, Ordering::Relaxed);
    }

    fn mark_moved(&self, u: NodeId) {
        self.0[u as usize].store(MOVED, Ordering::Release);
    }

    pub fn is_moved(&self, u: NodeId) -> bool {
        self.0[u as usize].load(Ordering::Acquire) == MOVED
    }
}

struct Search<'s, 'p, 'a> {
    delta: DeltaPartition<'p, 'a>,
    gains: &'p GainTable,
    ownership: &'s Ownership,
    log: &'s Mutex<Vec<Move>>,
    stop: AdaptiveStop,
}

impl Search<'_, '_, '_> {
    fn ph(&self) -> &PartitionedHypergraph<'_> {
        self.delta.shared()
    }

    /// Runs one localized search from already acquired `seeds`.
    fn run(&mut self, seeds: &[NodeId]) {
        let mut pq: BinaryHeap<(Weight, Reverse<NodeId>, BlockId)> = BinaryHeap::new();
        let mut owned: Vec<NodeId> = seeds.to_vec();
        let mut in_search: HashSet<NodeId> = seeds.iter().copied().collect();
        let mut moved: HashSet<NodeId> = HashSet::default();
        let mut pending: Vec<Move> = Vec::new();
        let mut running: Weight = 0;
        self.stop.reset();
        self.delta.clear();
        for &u in seeds {
            if let Some((t, g)) = self.delta.best_target(u) {
                pq.push((g, Reverse(u), t));
            }
        }
        while let Some((g, Reverse(u), t)) = pq.pop() {
            if moved.contains(&u) {
                continue;
            }
            let Some((bt, bg)) = self.delta.best_target(u) else { continue };
            if (bt, bg) != (t, g) {
                pq.push((bg, Reverse(u), bt));
                continue;
            }
            let from = self.delta.block(u);
            let d = self.delta.apply(u, t);
            running += d;
            moved.insert(u);
            pending.push(Move::new(u, from, t));
            self.stop.observe(d);
            if running > 0 || (running == 0 && self.balance_improved()) {
                if !self.flush(&mut pending) {
                    break;
                }
                running = 0;
                self.stop.reset();
            } else if self.stop.should_stop() {
                break;
            }
            let hg = self.ph().hypergraph();
            for &e in hg.incident_nets(u) {
                for &v in hg.pins(e) {
                    if moved.contains(&v) {
                        continue;
                    }
                    if in_search.contains(&v) || self.ownership.acquire(v) {
                        if in_search.insert(v) {
                            owned.push(v);
                        }
                        if let Some((vt, vg)) = self.delta.best_target(v) {
                            pq.push((vg, Reverse(v), vt));
                        }
                    }
                }
            }
        }
        self.delta.clear();
        for u in owned {
            self.ownership.release(u);
        }
    }

    /// `true` iff the heaviest block is lighter in the overlay than globally.
    fn balance_improved(&self) -> bool {
        let ph = self.ph();
        let k = ph.k() as BlockId;
        let local = (0..k).map(|b| self.delta.block_weight(b)).max().unwrap_or(0);
        let shared = (0..k).map(|b| ph.block_weight(b)).max().unwrap_or(0);
        local < shared
    }

    /// Applies the pending moves to the shared partition. If one is rejected
    /// by the balance check, the moves of this flush are undone and `false`
    /// is returned.
    fn flush(&mut self, pending: &mut Vec<Move>) -> bool {
        let ph = self.delta.shared();
        let mut applied = Vec::with_capacity(pending.len());
        for &m in pending.iter() {
            match ph.move_node(m.node, m.from, m.to, Some(self.gains)) {
                MoveOutcome::Moved { .. } => applied.push(m),
                MoveOutcome::Rejected => {
                    for a in applied.iter().rev() {
                        let a: &Move = a;
                        ph.move_node_unchecked(a.node, a.to, a.from, Some(self.gains));
                    }
                    for a in &applied {
                        self.gains.recompute_benefit(ph, a.node);
                    }
                    pending.clear();
                    self.delta.clear();
                    return false;
                }
            }
        }
        for m in &applied {
            self.ownership.mark_moved(m.node);
        }
        self.log.lock().expect("move log poisoned").extend(applied);
        pending.clear();
        self.delta.clear();
        true
    }
}

/// Runs a single localized search from `seeds` on a fresh ownership state
/// and returns the moves it applied to the shared partition.
pub fn localized_fm_search(
    ph: &PartitionedHypergraph<'_>,
    gains: &GainTable,
    seeds: &[NodeId],
    stop: StopRule,
) -> Vec<Move> {
    let ownership = Ownership::new(ph.hypergraph().num_nodes());
    let log = Mutex::new(Vec::new());
    let seeds: Vec<NodeId> = seeds.iter().copied().filter(|&u| ownership.acquire(u)).collect();
    let mut search =
        Search { delta: DeltaPartition::new(ph, gains), gains, ownership: &ownership, log: &log, stop: AdaptiveStop::new(stop) };
    search.run(&seeds);
    log.into_inner().expect("move log poisoned")
}

/// Longest prefix with the best cumulative gain among prefixes whose total
/// overload does not exceed the overload before the first move.
pub(crate) fn best_balanced_prefix(ph: &PartitionedHypergraph<'_>, moves: &[Move], gains: &[Weight]) -> (usize, Weight) {
    let hg = ph.hypergraph();
    let mut w = ph.block_weight_vec();
    for m in moves {
        let c = hg.node_weight(m.node);
        w[m.to as usize] -= c;
        w[m.from as usize] += c;
    }
    let over = |b: usize, w: &[Weight]| (w[b] - ph.max_block_weight(b as BlockId)).max(0);
    let start: Weight = (0..w.len()).map(|b| over(b, &w)).sum();
    let mut overload = start;
    let mut best = (0, 0);
    let mut sum = 0;
    for (i, (m, &g)) in moves.iter().zip(gains).enumerate() {
        let c = hg.node_weight(m.node);
        let (f, t) = (m.from as usize, m.to as usize);
        overload -= over(f, &w) + over(t, &w);
        w[f] -= c;
        w[t] += c;
        overload += over(f, &w) + over(t, &w);
        sum += g;
        if overload <= start && sum >= best.1 {
            best = (i + 1, sum);
        }
    }
    best
}

/// Parallel localized FM. Each round polls boundary nodes in batches of
/// `seeds_per_search`, runs localized searches on all rayon workers, then
/// recalculates the exact gains of the global move log and reverts to its
/// best balanced prefix.
///
/// Returns the total reduction of the connectivity metric.
pub fn fm_refinement(ph: &PartitionedHypergraph<'_>, gains: &GainTable, config: &FmConfig) -> Weight {
    let hg = ph.hypergraph();
    let mut total = 0;
    for round in 0..config.max_rounds {
        let mut tasks: Vec<NodeId> = hg.nodes().filter(|&u| ph.is_boundary(u)).collect();
        if tasks.is_empty() {
            break;
        }
        tasks.shuffle(&mut rng(derive_seed(config.seed, &[round as u64])));
        let ownership = Ownership::new(hg.num_nodes());
        let log = Mutex::new(Vec::new());
        let next = AtomicUsize::new(0);
        let batch = config.seeds_per_search.max(1);
        let worker = || {
            let mut search = Search {
                delta: DeltaPartition::new(ph, gains),
                gains,
                ownership: &ownership,
                log: &log,
                stop: AdaptiveStop::new(config.stop),
            };
            loop {
                let start = next.fetch_add(batch, Ordering::Relaxed);
                if start >= tasks.len() {
                    break;
                }
                let end = (start + batch).min(tasks.len());
                let seeds: Vec<NodeId> = tasks[start..end].iter().copied().filter(|&u| ownership.acquire(u)).collect();
                if !seeds.is_empty() {
                    search.run(&seeds);
                }
            }
        };
        let workers = rayon::current_num_threads();
        if workers <= 1 {
            worker();
        } else {
            rayon::scope(|s| {
                for _ in 0..workers {
                    s.spawn(|_| worker());
                }
            });
        }
        let moves = log.into_inner().expect("move log poisoned");
        if moves.is_empty() {
            break;
        }
        let round_gains = recalculate_gains_with(hg, ph.k(), |v| ph.block(v), &moves)
            .expect("a node is moved at most once per round");
        let (r, g) = best_balanced_prefix(ph, &moves, &round_gains);
        revert_to_prefix(ph, Some(gains), &moves, r);
        total += g;
        log::trace!("fm round {round}: {} moves, kept {r}, improvement {g}", moves.len());
        if g <= 0 {
            break;
        }
    }
    total
}
