use std::sync::atomic::{AtomicI64, Ordering};

use rayon::prelude::*;

use super::PartitionedHypergraph;
use crate::{BlockId, NetId, NodeId, Weight};

/// Benefit `b(u)` and penalty `p(u, V_i)` per node, `(k + 1) * n` entries.
///
/// In a quiescent state `b(u) = omega({e in I(u) | Phi(e, part[u]) = 1})` and
/// `p(u, V_t) = omega({e in I(u) | Phi(e, V_t) = 0})`, so moving `u` to `t`
/// changes the connectivity metric by `b(u) - p(u, V_t)`.
/// Benefits of nodes moved since the last rebuild are stale until
/// [`GainTable::recompute_benefit`] is called for them.
pub struct GainTable {
    k: usize,
    benefit: Vec<AtomicI64>,
    penalty: Vec<AtomicI64>,
}

/// Full recomputation from the pin counts of `ph`.
pub fn rebuild_gain_table(ph: &PartitionedHypergraph<'_>) -> GainTable {
    let n = ph.hypergraph().num_nodes();
    let gt = GainTable {
        k: ph.k(),
        benefit: (0..n).map(|_| AtomicI64::new(0)).collect(),
        penalty: (0..n * ph.k()).map(|_| AtomicI64::new(0)).collect(),
    };
    (0..n as NodeId).into_par_iter().for_each(|u| gt.recompute_node(ph, u));
    gt
}

impl GainTable {
    pub fn new(ph: &PartitionedHypergraph<'_>) -> Self {
        rebuild_gain_table(ph)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn benefit(&self, u: NodeId) -> Weight {
        self.benefit[u as usize].load(Ordering::Relaxed)
    }

    #[inline]
    pub fn penalty(&self, u: NodeId, t: BlockId) -> Weight {
        self.penalty[u as usize * self.k + t as usize].load(Ordering::Relaxed)
    }

    /// `g(u, t) = b(u) - p(u, V_t)`; `None` if `t` is the block of `u`.
    #[inline]
    pub fn gain(&self, ph: &PartitionedHypergraph<'_>, u: NodeId, t: BlockId) -> Option<Weight> {
        (ph.block(u) != t).then(|| self.benefit(u) - self.penalty(u, t))
    }

    /// Best target block other than the current one, ties to the smaller block id.
    /// Blocks for which `allowed` is false are skipped.
    pub fn best_target(
        &self,
        ph: &PartitionedHypergraph<'_>,
        u: NodeId,
        mut allowed: impl FnMut(BlockId) -> bool,
    ) -> Option<(BlockId, Weight)> {
        let from = ph.block(u);
        let b = self.benefit(u);
        let mut best: Option<(BlockId, Weight)> = None;
        for t in 0..self.k as BlockId {
            if t == from || !allowed(t) {
                continue;
            }
            let g = b - self.penalty(u, t);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((t, g));
            }
        }
        best
    }

    /// Applies update cases 1 to 4 for net `e` after one of its pins moved
    /// from `from` to `to`. Returns how many cases fired.
    pub fn update(
        &self,
        ph: &PartitionedHypergraph<'_>,
        e: NetId,
        from: BlockId,
        to: BlockId,
        phi_s: u32,
        phi_t: u32,
    ) -> u32 {
        let hg = ph.hypergraph();
        let w = hg.net_weight(e);
        let mut fired = 0;
        if phi_s == 0 {
            for &v in hg.pins(e) {
                self.add_penalty(v, from, w);
            }
            fired += 1;
        }
        if phi_s == 1 {
            for &v in hg.pins(e) {
                if ph.block(v) == from {
                    self.benefit[v as usize].fetch_add(w, Ordering::Relaxed);
                }
            }
            fired += 1;
        }
        if phi_t == 1 {
            for &v in hg.pins(e) {
                self.add_penalty(v, to, -w);
            }
            fired += 1;
        }
        if phi_t == 2 {
            for &v in hg.pins(e) {
                if ph.block(v) == to {
                    self.benefit[v as usize].fetch_sub(w, Ordering::Relaxed);
                }
            }
            fired += 1;
        }
        fired
    }

    #[inline]
    fn add_penalty(&self, v: NodeId, b: BlockId, w: Weight) {
        self.penalty[v as usize * self.k + b as usize].fetch_add(w, Ordering::Relaxed);
    }

    /// Recomputes `b(u)` from the current pin counts.
    pub fn recompute_benefit(&self, ph: &PartitionedHypergraph<'_>, u: NodeId) {
        let hg = ph.hypergraph();
        let block = ph.block(u);
        let b = hg
            .incident_nets(u)
            .iter()
            .filter(|&&e| ph.pin_count(e, block) == 1)
            .map(|&e| hg.net_weight(e))
            .sum();
        self.benefit[u as usize].store(b, Ordering::Relaxed);
    }

    /// Recomputes `b(u)` and every `p(u, .)`.
    pub fn recompute_node(&self, ph: &PartitionedHypergraph<'_>, u: NodeId) {
        let hg = ph.hypergraph();
        let mut penalty = vec![0; self.k];
        let mut total = 0;
        for &e in hg.incident_nets(u) {
            let w = hg.net_weight(e);
            total += w;
            for t in ph.connectivity_set(e) {
                penalty[t as usize] += w;
            }
        }
        for (t, p) in penalty.into_iter().enumerate() {
            self.penalty[u as usize * self.k + t].store(total - p, Ordering::Relaxed);
        }
        self.recompute_benefit(ph, u);
    }

    pub fn benefits(&self) -> Vec<Weight> {
        self.benefit.iter().map(|b| b.load(Ordering::Relaxed)).collect()
    }

    pub fn penalties(&self) -> Vec<Weight> {
        self.penalty.iter().map(|p| p.load(Ordering::Relaxed)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PinCountLayout;
    use crate::Hypergraph;

    #[test]
    fn star_gain() {
        let h = Hypergraph::new(4, &[vec![0, 1], vec![0, 2], vec![0, 3]], None, None).unwrap();
        let ph = PartitionedHypergraph::with_limits(&h, 2, &[0, 1, 1, 1], vec![5, 5], PinCountLayout::Plain);
        let gt = rebuild_gain_table(&ph);
        assert_eq!(gt.gain(&ph, 0, 1), Some(3));
        assert_eq!(gt.gain(&ph, 0, 0), None);
    }

    #[test]
    fn path_gain_is_zero() {
        let h = Hypergraph::new(4, &[vec![0, 1], vec![1, 2], vec![2, 3]], None, None).unwrap();
        let ph = PartitionedHypergraph::new(&h, 2, &[0, 0, 1, 1], 0.5);
        let gt = rebuild_gain_table(&ph);
        assert_eq!(gt.benefit(2), 1);
        assert_eq!(gt.penalty(2, 0), 1);
        assert_eq!(gt.gain(&ph, 2, 0), Some(0));
    }

    #[test]
    fn internal_node_pays_full_penalty() {
        let h = Hypergraph::new(3, &[vec![0, 1], vec![0, 2]], None, Some(vec![2, 3])).unwrap();
        let ph = PartitionedHypergraph::new(&h, 3, &[0, 0, 0], 0.5);
        let gt = rebuild_gain_table(&ph);
        assert_eq!(gt.gain(&ph, 0, 2), Some(-5));
    }

    #[test]
    fn single_block_has_no_benefit() {
        let h = Hypergraph::new(4, &[vec![0, 1, 2], vec![2, 3]], None, None).unwrap();
        let ph = PartitionedHypergraph::new(&h, 2, &[1; 4], 0.5);
        let gt = rebuild_gain_table(&ph);
        assert!(gt.benefits().iter().all(|&b| b == 0));
    }

    #[test]
    fn empty_hypergraph_table_is_zero() {
        let h = Hypergraph::new(3, &[] as &[Vec<u32>], None, None).unwrap();
        let ph = PartitionedHypergraph::new(&h, 2, &[0, 1, 0], 0.5);
        let gt = rebuild_gain_table(&ph);
        assert!(gt.benefits().iter().chain(gt.penalties().iter()).all(|&x| x == 0));
    }

    #[test]
    fn two_pin_net_fires_cases_two_and_three() {
        let h = Hypergraph::new(2, &[vec![0, 1]], None, None).unwrap();
        let ph = PartitionedHypergraph::new(&h, 2, &[0, 0], 1.0);
        let gt = rebuild_gain_table(&ph);
        let mut fired = Vec::new();
        ph.move_node_with(0, 0, 1, true, |e, s, t| {
            fired.push((s, t));
            assert_eq!(gt.update(&ph, e, 0, 1, s, t), 2);
        });
        assert_eq!(fired, vec![(1, 1)]);
        assert_eq!(gt.benefit(1), 1);
        assert_eq!(gt.penalty(0, 1), 0);
        assert_eq!(gt.penalty(1, 1), 0);
    }

    #[test]
    fn only_case_four() {
        let h = Hypergraph::new(5, &[vec![0, 1, 2, 3, 4]], None, None).unwrap();
        let ph = PartitionedHypergraph::new(&h, 2, &[0, 0, 0, 1, 1], 1.0);
        let gt = rebuild_gain_table(&ph);
        // Phi_s 3 -> 2 and Phi_t 2 -> 3 fires nothing; set up Phi_t 1 -> 2 instead.
        let ph2 = PartitionedHypergraph::new(&h, 2, &[0, 0, 0, 1, 0], 1.0);
        let gt2 = rebuild_gain_table(&ph2);
        ph2.move_node_with(0, 0, 1, true, |e, s, t| {
            assert_eq!((s, t), (3, 2));
            assert_eq!(gt2.update(&ph2, e, 0, 1, s, t), 1);
        });
        ph.move_node_with(0, 0, 1, true, |e, s, t| {
            assert_eq!(gt.update(&ph, e, 0, 1, s, t), 0);
        });
    }
}
