use rustc_hash::FxHashMap as HashMap;

use crate::partition::{GainTable, PartitionedHypergraph};
use crate::{BlockId, NetId, NodeId, Weight};

/// Thread-private overlay of a shared partition and its gain table.
///
/// Every read returns the overlay value if one exists and the shared value
/// otherwise. After [`DeltaPartition::clear`] all reads equal shared reads.
pub struct DeltaPartition<'p, 'a> {
    ph: &'p PartitionedHypergraph<'a>,
    gains: &'p GainTable,
    part: HashMap<NodeId, BlockId>,
    weight: Vec<Weight>,
    pin_count: HashMap<(NetId, BlockId), i64>,
    benefit: HashMap<NodeId, Weight>,
    penalty: HashMap<(NodeId, BlockId), Weight>,
}

impl<'p, 'a> DeltaPartition<'p, 'a> {
    pub fn new(ph: &'p PartitionedHypergraph<'a>, gains: &'p GainTable) -> Self {
        Self {
            ph,
            gains,
            part: HashMap::default(),
            weight: vec![0; ph.k()],
            pin_count: HashMap::default(),
            benefit: HashMap::default(),
            penalty: HashMap::default(),
        }
    }

    pub fn shared(&self) -> &'p PartitionedHypergraph<'a> {
        self.ph
    }

    pub fn is_empty(&self) -> bool {
        self.part.is_empty()
    }

    pub fn clear(&mut self) {
        self.part.clear();
        self.weight.iter_mut().for_each(|w| *w = 0);
        self.pin_count.clear();
        self.benefit.clear();
        self.penalty.clear();
    }

    #[inline]
    pub fn block(&self, u: NodeId) -> BlockId {
        self.part.get(&u).copied().unwrap_or_else(|| self.ph.block(u))
    }

    #[inline]
    pub fn block_weight(&self, b: BlockId) -> Weight {
        self.ph.block_weight(b) + self.weight[b as usize]
    }

    #[inline]
    pub fn pin_count(&self, e: NetId, b: BlockId) -> u32 {
        let d = self.pin_count.get(&(e, b)).copied().unwrap_or(0);
        (self.ph.pin_count(e, b) as i64 + d).max(0) as u32
    }

    #[inline]
    pub fn benefit(&self, u: NodeId) -> Weight {
        self.gains.benefit(u) + self.benefit.get(&u).copied().unwrap_or(0)
    }

    #[inline]
    pub fn penalty(&self, u: NodeId, t: BlockId) -> Weight {
        self.gains.penalty(u, t) + self.penalty.get(&(u, t)).copied().unwrap_or(0)
    }

    /// Best balance-feasible target of `u` in the overlay view, ties to the
    /// smaller block id.
    pub fn best_target(&self, u: NodeId) -> Option<(BlockId, Weight)> {
        let from = self.block(u);
        let c = self.ph.hypergraph().node_weight(u);
        let b = self.benefit(u);
        let mut best: Option<(BlockId, Weight)> = None;
        for t in 0..self.ph.k() as BlockId {
            if t == from || self.block_weight(t) + c > self.ph.max_block_weight(t) {
                continue;
            }
            let g = b - self.penalty(u, t);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((t, g));
            }
        }
        best
    }

    /// Moves `u` to `to` in the overlay and returns the attributed gain.
    /// Gain entries of all pins of incident nets are updated in the overlay.
    pub fn apply(&mut self, u: NodeId, to: BlockId) -> Weight {
        let hg = self.ph.hypergraph();
        let from = self.block(u);
        debug_assert_ne!(from, to);
        let c = hg.node_weight(u);
        self.part.insert(u, to);
        self.weight[from as usize] -= c;
        self.weight[to as usize] += c;
        let mut delta = 0;
        for &e in hg.incident_nets(u) {
            *self.pin_count.entry((e, from)).or_insert(0) -= 1;
            *self.pin_count.entry((e, to)).or_insert(0) += 1;
            let phi_s = self.pin_count(e, from);
            let phi_t = self.pin_count(e, to);
            let w = hg.net_weight(e);
            if phi_s == 0 {
                delta += w;
                for &v in hg.pins(e) {
                    *self.penalty.entry((v, from)).or_insert(0) += w;
                }
            }
            if phi_s == 1 {
                for &v in hg.pins(e) {
                    if self.block(v) == from {
                        *self.benefit.entry(v).or_insert(0) += w;
                    }
                }
            }
            if phi_t == 1 {
                delta -= w;
                for &v in hg.pins(e) {
                    *self.penalty.entry((v, to)).or_insert(0) -= w;
                }
            }
            if phi_t == 2 {
                for &v in hg.pins(e) {
                    if self.block(v) == to {
                        *self.benefit.entry(v).or_insert(0) -= w;
                    }
                }
            }
        }
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{rebuild_gain_table, PinCountLayout};
    use crate::Hypergraph;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn overlay_is_transparent_and_consistent(
            (n, nets, parts, moves) in (2usize..12).prop_flat_map(|n| (
                Just(n),
                prop::collection::vec(prop::collection::btree_set(0..n as u32, 1..=n.min(5)), 1..12),
                prop::collection::vec(0u32..3, n),
                prop::collection::vec((0..n as u32, 0u32..3), 0..8),
            )),
        ) {
            let nets: Vec<Vec<u32>> = nets.into_iter().map(|s| s.into_iter().collect()).collect();
            let hg = Hypergraph::new(n, &nets, None, Some((0..nets.len() as i64).map(|i| 1 + i % 3).collect())).unwrap();
            let ph = PartitionedHypergraph::with_limits(&hg, 3, &parts, vec![1000; 3], PinCountLayout::Plain);
            let gt = rebuild_gain_table(&ph);
            let mut d = DeltaPartition::new(&ph, &gt);
            let check_empty = |d: &DeltaPartition| -> Result<(), TestCaseError> {
                for u in 0..n as u32 {
                    prop_assert_eq!(d.block(u), ph.block(u));
                    prop_assert_eq!(d.benefit(u), gt.benefit(u));
                    for t in 0..3 {
                        prop_assert_eq!(d.penalty(u, t), gt.penalty(u, t));
                    }
                }
                for e in hg.nets() {
                    for b in 0..3 {
                        prop_assert_eq!(d.pin_count(e, b), ph.pin_count(e, b));
                    }
                }
                for b in 0..3 {
                    prop_assert_eq!(d.block_weight(b), ph.block_weight(b));
                }
                Ok(())
            };
            check_empty(&d)?;

            // Overlay moves agree with the same moves applied to a copy.
            let mut local = parts.clone();
            let mut moved = std::collections::HashSet::new();
            let mut total = 0;
            for &(u, t) in &moves {
                if d.block(u) == t || !moved.insert(u) {
                    continue;
                }
                total += d.apply(u, t);
                local[u as usize] = t;
            }
            let copy = PartitionedHypergraph::with_limits(&hg, 3, &local, vec![1000; 3], PinCountLayout::Plain);
            let copy_gt = rebuild_gain_table(&copy);
            prop_assert_eq!(ph.km1() - copy.km1(), total);
            for u in 0..n as u32 {
                prop_assert_eq!(d.block(u), copy.block(u));
                for t in 0..3 {
                    prop_assert_eq!(d.penalty(u, t), copy_gt.penalty(u, t));
                }
                if !moved.contains(&u) {
                    prop_assert_eq!(d.benefit(u), copy_gt.benefit(u));
                }
            }
            for e in hg.nets() {
                for b in 0..3 {
                    prop_assert_eq!(d.pin_count(e, b), copy.pin_count(e, b));
                }
            }
            d.clear();
            check_empty(&d)?;
        }
    }
}
