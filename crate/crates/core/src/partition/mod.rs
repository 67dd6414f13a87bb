//! Concurrent `k`-way partition state.
//!
//! [`PartitionedHypergraph`] keeps the block of every node, block weights,
//! pin counts `Phi(e, V_i)` and connectivity sets `Lambda(e)`. All mutation
//! goes through [`PartitionedHypergraph::move_node`], which is safe to call
//! from many threads at once: block weights are updated with atomic
//! fetch-and-add, and the two pin count updates of a net are done inside a
//! per-net spin lock. Every move reports an *attributed gain* derived from the
//! pin count transitions it observed; the attributed gains of any set of
//! moves sum to the exact reduction of the connectivity metric.

mod gain_table;
mod pin_counts;
mod recalculation;

use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU32, AtomicU64, Ordering};

pub use gain_table::{rebuild_gain_table, GainTable};
pub use pin_counts::PinCountLayout;
pub use recalculation::{best_prefix, recalculate_gains, recalculate_gains_with, revert_to_prefix, RecalculationError};

use crate::metrics::max_block_weight;
use crate::{BlockId, Hypergraph, NetId, NodeId, Weight};
use pin_counts::PinCounts;

/// A single node move `(node, from, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub node: NodeId,
    pub from: BlockId,
    pub to: BlockId,
}

impl Move {
    pub fn new(node: NodeId, from: BlockId, to: BlockId) -> Self {
        Self { node, from, to }
    }

    pub fn reversed(self) -> Self {
        Self { node: self.node, from: self.to, to: self.from }
    }
}

/// Result of [`PartitionedHypergraph::move_node`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    /// The move was applied; `delta` is its attributed connectivity reduction.
    Moved { delta: Weight },
    /// The target block would exceed its weight limit. Nothing changed.
    Rejected,
}

impl MoveOutcome {
    pub fn delta(self) -> Option<Weight> {
        match self {
            MoveOutcome::Moved { delta } => Some(delta),
            MoveOutcome::Rejected => None,
        }
    }

    pub fn is_rejected(self) -> bool {
        matches!(self, MoveOutcome::Rejected)
    }
}

/// Plain copy of the partition state, used to compare states in tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSnapshot {
    pub parts: Vec<BlockId>,
    pub block_weights: Vec<Weight>,
    pub pin_counts: Vec<u32>,
    pub connectivity_sets: Vec<Vec<BlockId>>,
}

pub struct PartitionedHypergraph<'a> {
    hg: &'a Hypergraph,
    k: usize,
    max_block_weights: Vec<Weight>,
    part: Vec<AtomicU32>,
    block_weights: Vec<AtomicI64>,
    pin_counts: PinCounts,
    connectivity: Vec<AtomicU64>,
    conn_words: usize,
    net_locks: Vec<AtomicBool>,
}

impl<'a> PartitionedHypergraph<'a> {
    /// Materializes the state of `parts` with the limit `L_max` derived from `epsilon`.
    ///
    /// The assignment does not need to be balanced.
    pub fn new(hg: &'a Hypergraph, k: usize, parts: &[BlockId], epsilon: f64) -> Self {
        let limit = max_block_weight(hg.total_weight(), k, epsilon);
        Self::with_limits(hg, k, parts, vec![limit; k], PinCountLayout::Plain)
    }

    /// Materializes a partition with explicit per-block weight limits.
    pub fn with_limits(
        hg: &'a Hypergraph,
        k: usize,
        parts: &[BlockId],
        max_block_weights: Vec<Weight>,
        layout: PinCountLayout,
    ) -> Self {
        assert!(k >= 1, "k must be positive");
        assert_eq!(parts.len(), hg.num_nodes(), "one block id per node required");
        assert_eq!(max_block_weights.len(), k);
        assert!(parts.iter().all(|&b| (b as usize) < k), "block id out of range");
        let conn_words = k.div_ceil(64);
        let ph = Self {
            hg,
            k,
            max_block_weights,
            part: parts.iter().map(|&b| AtomicU32::new(b)).collect(),
            block_weights: (0..k).map(|_| AtomicI64::new(0)).collect(),
            pin_counts: PinCounts::new(layout, hg.num_nets(), k, hg.max_net_size()),
            connectivity: (0..hg.num_nets() * conn_words).map(|_| AtomicU64::new(0)).collect(),
            conn_words,
            net_locks: (0..hg.num_nets()).map(|_| AtomicBool::new(false)).collect(),
        };
        ph.initialize();
        ph
    }

    fn initialize(&self) {
        use rayon::prelude::*;
        let mut weights = vec![0; self.k];
        for v in self.hg.nodes() {
            weights[self.block(v) as usize] += self.hg.node_weight(v);
        }
        for (b, w) in weights.into_iter().enumerate() {
            self.block_weights[b].store(w, Ordering::Relaxed);
        }
        (0..self.hg.num_nets() as NetId).into_par_iter().for_each(|e| {
            let mut counts = vec![0u32; self.k];
            for &v in self.hg.pins(e) {
                counts[self.block(v) as usize] += 1;
            }
            for (b, &c) in counts.iter().enumerate() {
                if c > 0 {
                    self.pin_counts.set(e, b as BlockId, c);
                    self.flip_connectivity(e, b as BlockId);
                }
            }
        });
    }

    #[inline]
    pub fn hypergraph(&self) -> &'a Hypergraph {
        self.hg
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn block(&self, u: NodeId) -> BlockId {
        self.part[u as usize].load(Ordering::Acquire)
    }

    pub fn parts(&self) -> Vec<BlockId> {
        self.part.iter().map(|b| b.load(Ordering::Relaxed)).collect()
    }

    #[inline]
    pub fn block_weight(&self, b: BlockId) -> Weight {
        self.block_weights[b as usize].load(Ordering::Relaxed)
    }

    pub fn block_weight_vec(&self) -> Vec<Weight> {
        (0..self.k as BlockId).map(|b| self.block_weight(b)).collect()
    }

    #[inline]
    pub fn max_block_weight(&self, b: BlockId) -> Weight {
        self.max_block_weights[b as usize]
    }

    pub fn max_block_weights(&self) -> &[Weight] {
        &self.max_block_weights
    }

    pub fn is_balanced(&self) -> bool {
        (0..self.k as BlockId).all(|b| self.block_weight(b) <= self.max_block_weight(b))
    }

    #[inline]
    pub fn pin_count(&self, e: NetId, b: BlockId) -> u32 {
        self.pin_counts.get(e, b)
    }

    /// `lambda(e)`.
    #[inline]
    pub fn connectivity(&self, e: NetId) -> u32 {
        let base = e as usize * self.conn_words;
        self.connectivity[base..base + self.conn_words]
            .iter()
            .map(|w| w.load(Ordering::Relaxed).count_ones())
            .sum()
    }

    /// Blocks of `Lambda(e)` in ascending order, iterated over a snapshot of the bitset.
    pub fn connectivity_set(&self, e: NetId) -> impl Iterator<Item = BlockId> + '_ {
        let base = e as usize * self.conn_words;
        (0..self.conn_words).flat_map(move |w| {
            let mut bits = self.connectivity[base + w].load(Ordering::Relaxed);
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros();
                bits &= bits - 1;
                Some((w * 64) as BlockId + tz)
            })
        })
    }

    #[inline]
    pub fn is_cut(&self, e: NetId) -> bool {
        self.connectivity(e) > 1
    }

    pub fn is_boundary(&self, u: NodeId) -> bool {
        self.hg.incident_nets(u).iter().any(|&e| self.is_cut(e))
    }

    /// Connectivity metric computed from the connectivity sets.
    pub fn km1(&self) -> Weight {
        self.hg
            .nets()
            .map(|e| (self.connectivity(e) as Weight - 1).max(0) * self.hg.net_weight(e))
            .sum()
    }

    pub fn cut(&self) -> Weight {
        self.hg.nets().filter(|&e| self.is_cut(e)).map(|e| self.hg.net_weight(e)).sum()
    }

    #[inline]
    fn flip_connectivity(&self, e: NetId, b: BlockId) {
        let idx = e as usize * self.conn_words + b as usize / 64;
        self.connectivity[idx].fetch_xor(1u64 << (b % 64), Ordering::AcqRel);
    }

    #[inline]
    fn lock(&self, e: NetId) {
        let lock = &self.net_locks[e as usize];
        while lock.compare_exchange_weak(false, true, Ordering::Acquire, Ordering::Relaxed).is_err() {
            std::hint::spin_loop();
        }
    }

    #[inline]
    fn unlock(&self, e: NetId) {
        self.net_locks[e as usize].store(false, Ordering::Release);
    }

    /// Moves `u` from `from` to `to` if `c(V_to) + c(u) <= L_max(to)`.
    ///
    /// When a gain table is given, its benefit and penalty entries are updated
    /// for every incident net.
    pub fn move_node(&self, u: NodeId, from: BlockId, to: BlockId, gains: Option<&GainTable>) -> MoveOutcome {
        self.move_node_with(u, from, to, true, |e, phi_s, phi_t| {
            if let Some(gt) = gains {
                gt.update(self, e, from, to, phi_s, phi_t);
            }
        })
    }

    /// Like [`move_node`](Self::move_node) but without the balance check.
    /// Used to undo moves; never rejects.
    pub fn move_node_unchecked(&self, u: NodeId, from: BlockId, to: BlockId, gains: Option<&GainTable>) -> Weight {
        self.move_node_with(u, from, to, false, |e, phi_s, phi_t| {
            if let Some(gt) = gains {
                gt.update(self, e, from, to, phi_s, phi_t);
            }
        })
        .delta()
        .expect("unchecked moves are never rejected")
    }

    /// The move operation with a caller supplied per-net hook that receives
    /// `(e, Phi(e, from) after decrement, Phi(e, to) after increment)`.
    pub fn move_node_with(
        &self,
        u: NodeId,
        from: BlockId,
        to: BlockId,
        check_balance: bool,
        mut on_net: impl FnMut(NetId, u32, u32),
    ) -> MoveOutcome {
        assert_ne!(from, to, "source and target block must differ");
        assert_eq!(self.block(u), from, "node {u} is not in block {from}");
        let w = self.hg.node_weight(u);
        let before = self.block_weights[to as usize].fetch_add(w, Ordering::AcqRel);
        if check_balance && before + w > self.max_block_weights[to as usize] {
            self.block_weights[to as usize].fetch_sub(w, Ordering::AcqRel);
            return MoveOutcome::Rejected;
        }
        self.part[u as usize].store(to, Ordering::Release);
        self.block_weights[from as usize].fetch_sub(w, Ordering::AcqRel);
        let mut delta = 0;
        for &e in self.hg.incident_nets(u) {
            self.lock(e);
            let phi_s = self.pin_counts.decrement(e, from);
            let phi_t = self.pin_counts.increment(e, to);
            if phi_s == 0 {
                self.flip_connectivity(e, from);
            }
            if phi_t == 1 {
                self.flip_connectivity(e, to);
            }
            self.unlock(e);
            let omega = self.hg.net_weight(e);
            if phi_s == 0 {
                delta += omega;
            }
            if phi_t == 1 {
                delta -= omega;
            }
            on_net(e, phi_s, phi_t);
        }
        MoveOutcome::Moved { delta }
    }

    pub fn snapshot(&self) -> PartitionSnapshot {
        let mut pin_counts = Vec::with_capacity(self.hg.num_nets() * self.k);
        for e in self.hg.nets() {
            for b in 0..self.k as BlockId {
                pin_counts.push(self.pin_count(e, b));
            }
        }
        PartitionSnapshot {
            parts: self.parts(),
            block_weights: self.block_weight_vec(),
            pin_counts,
            connectivity_sets: self.hg.nets().map(|e| self.connectivity_set(e).collect()).collect(),
        }
    }

    /// Recomputes all derived state from the block assignment and reports the
    /// first inconsistency.
    pub fn validate(&self) -> Result<(), String> {
        let parts = self.parts();
        let mut weights = vec![0; self.k];
        for v in self.hg.nodes() {
            weights[parts[v as usize] as usize] += self.hg.node_weight(v);
        }
        for (b, &w) in weights.iter().enumerate() {
            if self.block_weight(b as BlockId) != w {
                return Err(format!("block {b}: stored weight {} != {w}", self.block_weight(b as BlockId)));
            }
        }
        if weights.iter().sum::<Weight>() != self.hg.total_weight() {
            return Err("block weights do not sum to c(V)".into());
        }
        let mut counts = vec![0u32; self.k];
        for e in self.hg.nets() {
            counts.iter_mut().for_each(|c| *c = 0);
            for &v in self.hg.pins(e) {
                counts[parts[v as usize] as usize] += 1;
            }
            let set: Vec<BlockId> = self.connectivity_set(e).collect();
            for b in 0..self.k {
                let stored = self.pin_count(e, b as BlockId);
                if stored != counts[b] {
                    return Err(format!("net {e}, block {b}: pin count {stored} != {}", counts[b]));
                }
                if (counts[b] > 0) != set.contains(&(b as BlockId)) {
                    return Err(format!("net {e}: connectivity set disagrees on block {b}"));
                }
            }
            if counts.iter().sum::<u32>() as usize != self.hg.net_size(e) {
                return Err(format!("net {e}: pin counts do not sum to |e|"));
            }
            let lambda = self.connectivity(e) as usize;
            if lambda < 1 || lambda > self.k.min(self.hg.net_size(e)) {
                return Err(format!("net {e}: connectivity {lambda} out of range"));
            }
        }
        Ok(())
    }
}
