use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::partition::{GainTable, MoveOutcome, PartitionedHypergraph};
use crate::util::{derive_seed, rng};
use crate::{BlockId, NodeId, Weight};

#[derive(Debug, Clone)]
pub struct LpConfig {
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self { max_rounds: 5, seed: 0 }
    }
}

/// `true` iff moving a node of weight `c` from `from` to `to` leaves the
/// heavier of the two blocks lighter than before.
#[inline]
pub(crate) fn improves_balance(ph: &PartitionedHypergraph<'_>, from: BlockId, to: BlockId, c: Weight) -> bool {
    ph.block_weight(to) + c < ph.block_weight(from)
}

/// Asynchronous label propagation. Each active node moves to its best
/// feasible target if the gain is positive, or zero while improving balance.
/// A move whose attributed gain turns out negative is reverted at once.
///
/// Returns the total reduction of the connectivity metric.
pub fn label_propagation(ph: &PartitionedHypergraph<'_>, gains: &GainTable, config: &LpConfig) -> Weight {
    let hg = ph.hypergraph();
    let n = hg.num_nodes();
    let mut active: Vec<NodeId> = hg.nodes().filter(|&u| ph.is_boundary(u)).collect();
    let next_active: Vec<AtomicBool> = (0..n).map(|_| AtomicBool::new(false)).collect();
    let mut total = 0;
    for round in 0..config.max_rounds {
        if active.is_empty() {
            break;
        }
        active.shuffle(&mut rng(derive_seed(config.seed, &[round as u64])));
        let improvement = AtomicI64::new(0);
        // Nodes that were moved, including moves reverted right away; their
        // benefits are stale until recomputed below.
        let moved: Vec<NodeId> = active
            .par_iter()
            .filter_map(|&u| {
                let from = ph.block(u);
                let c = hg.node_weight(u);
                let (to, g) =
                    gains.best_target(ph, u, |t| ph.block_weight(t) + c <= ph.max_block_weight(t))?;
                if g < 0 || (g == 0 && !improves_balance(ph, from, to, c)) {
                    return None;
                }
                let MoveOutcome::Moved { delta } = ph.move_node(u, from, to, Some(gains)) else {
                    return None;
                };
                if delta < 0 {
                    let back = ph.move_node_unchecked(u, to, from, Some(gains));
                    improvement.fetch_add(delta + back, Ordering::Relaxed);
                }
                improvement.fetch_add(delta, Ordering::Relaxed);
                Some(u)
            })
            .collect();
        moved.par_iter().for_each(|&u| gains.recompute_benefit(ph, u));
        let improvement = improvement.into_inner();
        total += improvement;
        log::trace!("lp round {round}: {} moves, improvement {improvement}", moved.len());
        if moved.is_empty() {
            break;
        }
        moved.par_iter().for_each(|&u| {
            for &e in hg.incident_nets(u) {
                for &v in hg.pins(e) {
                    next_active[v as usize].store(true, Ordering::Relaxed);
                }
            }
        });
        active = (0..n as NodeId).filter(|&v| next_active[v as usize].swap(false, Ordering::Relaxed)).collect();
        if improvement <= 0 {
            break;
        }
    }
    total
}
