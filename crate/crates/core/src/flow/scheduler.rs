use std::sync::atomic::{AtomicBool, AtomicI64, AtomicUsize, Ordering};
use std::sync::Mutex;

use super::flowcutter::{flowcutter, CutterConfig};
use super::lawler::FlowProblem;
use super::quotient::QuotientGraph;
use super::region::construct_region;
use crate::partition::{GainTable, Move, PartitionedHypergraph};
use crate::util::derive_seed;
use crate::{BlockId, Weight};

#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Region size scaling `alpha`.
    pub alpha: f64,
    /// Maximum BFS distance of region nodes from the cut.
    pub max_distance: u32,
    /// Parallelism factor: at most `tau * k` pairs are solved concurrently.
    pub tau: usize,
    pub max_rounds: usize,
    /// A round improving the connectivity metric by less than this fraction
    /// ends the refinement.
    pub min_relative_improvement: f64,
    pub bulk_piercing: bool,
    /// Ties among piercing candidates by seeded random keys instead of ids.
    pub random_ties: bool,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            alpha: 16.0,
            max_distance: 2,
            tau: 1,
            max_rounds: 20,
            min_relative_improvement: 0.001,
            bulk_piercing: true,
            random_ties: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowStats {
    pub improvement: Weight,
    pub rounds: usize,
    pub pairs_solved: usize,
    pub pairs_improved: usize,
    pub reverted: usize,
}

/// Outcome of [`apply_region_moves`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApplyOutcome {
    /// Realized connectivity reduction; `0` if the moves were reverted.
    pub delta: Weight,
    /// Moves still valid after filtering stale ones.
    pub applied: usize,
    pub reverted: bool,
}

/// Applies the moves of one block pair inside the exclusive section `lock`.
///
/// Moves whose node left its expected block are dropped. If the remaining
/// moves would overload a block nothing is applied. If the realized gain is
/// negative every move is undone.
pub fn apply_region_moves(
    ph: &PartitionedHypergraph<'_>,
    gains: Option<&GainTable>,
    moves: &[Move],
    lock: &Mutex<()>,
) -> ApplyOutcome {
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    let hg = ph.hypergraph();
    let valid: Vec<Move> = moves.iter().copied().filter(|m| ph.block(m.node) == m.from).collect();
    if valid.is_empty() {
        return ApplyOutcome::default();
    }
    let mut weights = std::collections::BTreeMap::<BlockId, Weight>::new();
    for m in &valid {
        let c = hg.node_weight(m.node);
        *weights.entry(m.from).or_insert_with(|| ph.block_weight(m.from)) -= c;
        *weights.entry(m.to).or_insert_with(|| ph.block_weight(m.to)) += c;
    }
    if weights.iter().any(|(&b, &w)| w > ph.max_block_weight(b)) {
        return ApplyOutcome { delta: 0, applied: 0, reverted: true };
    }
    let delta: Weight = valid.iter().map(|m| ph.move_node_unchecked(m.node, m.from, m.to, gains)).sum();
    let reverted = delta < 0;
    if reverted {
        for m in valid.iter().rev() {
            ph.move_node_unchecked(m.node, m.to, m.from, gains);
        }
    }
    if let Some(gt) = gains {
        for m in &valid {
            gt.recompute_benefit(ph, m.node);
        }
    }
    ApplyOutcome { delta: if reverted { 0 } else { delta }, applied: valid.len(), reverted }
}

/// Solves one block pair and returns its moves if the expected gain is
/// positive, or zero with a lighter heavier block.
fn solve_pair(
    ph: &PartitionedHypergraph<'_>,
    (i, j): (BlockId, BlockId),
    quotient: &QuotientGraph,
    epsilon: f64,
    config: &FlowConfig,
    seed: u64,
) -> Option<(Vec<Move>, Weight)> {
    let region = construct_region(ph, (i, j), quotient.cut_nets(i, j), config.alpha, epsilon, config.max_distance);
    if region.is_empty() {
        return None;
    }
    let mut problem = FlowProblem::build(ph, &region);
    let cutter = CutterConfig { bulk_piercing: config.bulk_piercing, tie_seed: config.random_ties.then_some(seed) };
    let result = flowcutter(&mut problem, &cutter)?;
    if result.moves.is_empty() || result.expected_delta < 0 {
        return None;
    }
    if result.expected_delta == 0 {
        let hg = ph.hypergraph();
        let shift: Weight = result.moves.iter().map(|m| if m.to == j { hg.node_weight(m.node) } else { -hg.node_weight(m.node) }).sum();
        let (wi, wj) = (ph.block_weight(i), ph.block_weight(j));
        if (wi - shift).max(wj + shift) >= wi.max(wj) {
            return None;
        }
    }
    Some((result.moves, result.expected_delta))
}

/// Flow-based refinement over the quotient graph with active block
/// scheduling. Connectivity never increases and balance is preserved.
pub fn flow_refinement(
    ph: &PartitionedHypergraph<'_>,
    gains: Option<&GainTable>,
    epsilon: f64,
    config: &FlowConfig,
) -> FlowStats {
    let k = ph.k();
    let mut stats = FlowStats::default();
    let mut active = vec![true; k];
    let lock = Mutex::new(());
    for round in 0..config.max_rounds {
        let start = ph.km1();
        if start == 0 {
            break;
        }
        let quotient = QuotientGraph::build(ph);
        let pairs: Vec<(BlockId, BlockId)> =
            quotient.pairs().filter(|&(i, j)| active[i as usize] || active[j as usize]).collect();
        if pairs.is_empty() {
            break;
        }
        let next_active: Vec<AtomicBool> = (0..k).map(|_| AtomicBool::new(false)).collect();
        let cursor = AtomicUsize::new(0);
        let improvement = AtomicI64::new(0);
        let solved = AtomicUsize::new(0);
        let improved = AtomicUsize::new(0);
        let reverted = AtomicUsize::new(0);
        let workers = rayon::current_num_threads().min(config.tau.max(1) * k).max(1);
        rayon::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|_| loop {
                    let idx = cursor.fetch_add(1, Ordering::Relaxed);
                    let Some(&(i, j)) = pairs.get(idx) else { break };
                    solved.fetch_add(1, Ordering::Relaxed);
                    let seed = derive_seed(config.seed, &[round as u64, u64::from(i), u64::from(j)]);
                    let Some((moves, _)) = solve_pair(ph, (i, j), &quotient, epsilon, config, seed) else {
                        continue;
                    };
                    let outcome = apply_region_moves(ph, gains, &moves, &lock);
                    if outcome.reverted {
                        reverted.fetch_add(1, Ordering::Relaxed);
                    } else if outcome.applied > 0 {
                        improvement.fetch_add(outcome.delta, Ordering::Relaxed);
                        improved.fetch_add(1, Ordering::Relaxed);
                        next_active[i as usize].store(true, Ordering::Relaxed);
                        next_active[j as usize].store(true, Ordering::Relaxed);
                    }
                });
            }
        });
        let round_improvement = improvement.into_inner();
        stats.rounds += 1;
        stats.improvement += round_improvement;
        stats.pairs_solved += solved.into_inner();
        stats.pairs_improved += improved.into_inner();
        stats.reverted += reverted.into_inner();
        log::debug!("flow round {round}: {} pairs, improvement {round_improvement}", pairs.len());
        if (round_improvement as f64) < config.min_relative_improvement * start as f64 {
            break;
        }
        active = next_active.into_iter().map(AtomicBool::into_inner).collect();
    }
    stats
}
