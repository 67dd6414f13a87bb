use crate::partition::{GainTable, PartitionedHypergraph};
use crate::{BlockId, NodeId, Weight};

/// Connectivity gain of moving `u` to every block, computed from pin counts.
fn gains_of(ph: &PartitionedHypergraph<'_>, u: NodeId, scratch: &mut Vec<Weight>) -> Weight {
    let hg = ph.hypergraph();
    let from = ph.block(u);
    scratch.clear();
    scratch.resize(ph.k(), 0);
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
    // scratch[t] becomes the gain of moving to t.
    for s in scratch.iter_mut() {
        *s = benefit - (total - *s);
    }
    total
}

/// Greedily moves nodes out of overloaded blocks, most profitable first,
/// into blocks with spare capacity. Sequential and deterministic.
///
/// Returns `true` iff the partition is balanced afterwards.
pub fn rebalance(ph: &PartitionedHypergraph<'_>, gains: Option<&GainTable>) -> bool {
    let hg = ph.hypergraph();
    let k = ph.k();
    let mut scratch = Vec::new();
    loop {
        let overloaded: Vec<bool> = (0..k as BlockId).map(|b| ph.block_weight(b) > ph.max_block_weight(b)).collect();
        if !overloaded.contains(&true) {
            return true;
        }
        let mut candidates: Vec<(Weight, NodeId, BlockId)> = Vec::new();
        for u in hg.nodes() {
            let from = ph.block(u);
            if !overloaded[from as usize] {
                continue;
            }
            let c = hg.node_weight(u);
            gains_of(ph, u, &mut scratch);
            let best = (0..k as BlockId)
                .filter(|&t| t != from && !overloaded[t as usize] && ph.block_weight(t) + c <= ph.max_block_weight(t))
                .max_by_key(|&t| (scratch[t as usize], std::cmp::Reverse(ph.block_weight(t)), std::cmp::Reverse(t)));
            if let Some(t) = best {
                candidates.push((scratch[t as usize], u, t));
            }
        }
        candidates.sort_by_key(|&(g, u, _)| (std::cmp::Reverse(g), u));
        let mut moved = false;
        for (_, u, t) in candidates {
            let from = ph.block(u);
            if ph.block_weight(from) <= ph.max_block_weight(from) {
                continue;
            }
            if ph.move_node(u, from, t, gains).delta().is_some() {
                moved = true;
            }
        }
        if let Some(gt) = gains {
            for u in hg.nodes() {
                gt.recompute_benefit(ph, u);
            }
        }
        if !moved {
            return ph.is_balanced();
        }
    }
}
