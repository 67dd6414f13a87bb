use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};

use rayon::prelude::*;

use super::{GainTable, Move, PartitionedHypergraph};
use crate::{BlockId, Hypergraph, NodeId, Weight, INVALID};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecalculationError {
    #[error("node {0} appears more than once in the move sequence")]
    DuplicateNode(NodeId),
}

/// Exact gains of `moves` when replayed in order from `part_before`.
pub fn recalculate_gains(
    hg: &Hypergraph,
    part_before: &[BlockId],
    moves: &[Move],
) -> Result<Vec<Weight>, RecalculationError> {
    let k = part_before
        .iter()
        .chain(moves.iter().map(|m| &m.to))
        .max()
        .map_or(1, |&b| b as usize + 1);
    recalculate_gains_with(hg, k, |v| part_before[v as usize], moves)
}

/// As [`recalculate_gains`], where `block_of` only needs to be correct for
/// nodes that do not appear in `moves`.
pub fn recalculate_gains_with(
    hg: &Hypergraph,
    k: usize,
    block_of: impl Fn(NodeId) -> BlockId + Sync,
    moves: &[Move],
) -> Result<Vec<Weight>, RecalculationError> {
    let mut index = vec![INVALID; hg.num_nodes()];
    for (i, m) in moves.iter().enumerate() {
        if index[m.node as usize] != INVALID {
            return Err(RecalculationError::DuplicateNode(m.node));
        }
        index[m.node as usize] = i as u32;
    }
    let gains: Vec<AtomicI64> = (0..moves.len()).map(|_| AtomicI64::new(0)).collect();
    let seen: Vec<AtomicBool> = (0..hg.num_nets()).map(|_| AtomicBool::new(false)).collect();

    struct Scratch {
        first_in: Vec<u32>,
        last_out: Vec<u32>,
        non_moved: Vec<u32>,
        touched: Vec<BlockId>,
    }

    moves.par_iter().for_each_init(
        || Scratch {
            first_in: vec![INVALID; k],
            last_out: vec![INVALID; k],
            non_moved: vec![0; k],
            touched: Vec::new(),
        },
        |s, m| {
            for &e in hg.incident_nets(m.node) {
                if seen[e as usize].swap(true, Ordering::AcqRel) {
                    continue;
                }
                for &v in hg.pins(e) {
                    let i = index[v as usize];
                    if i == INVALID {
                        let b = block_of(v) as usize;
                        s.non_moved[b] += 1;
                        s.touched.push(b as BlockId);
                    } else {
                        let mv = moves[i as usize];
                        let (from, to) = (mv.from as usize, mv.to as usize);
                        s.first_in[to] = if s.first_in[to] == INVALID { i } else { s.first_in[to].min(i) };
                        s.last_out[from] = if s.last_out[from] == INVALID { i } else { s.last_out[from].max(i) };
                        s.touched.push(mv.from);
                        s.touched.push(mv.to);
                    }
                }
                let w = hg.net_weight(e);
                for &v in hg.pins(e) {
                    let i = index[v as usize];
                    if i == INVALID {
                        continue;
                    }
                    let mv = moves[i as usize];
                    let (from, to) = (mv.from as usize, mv.to as usize);
                    // V_from empties exactly at its last departure if nothing
                    // stays behind and nothing has arrived yet.
                    if s.last_out[from] == i && s.non_moved[from] == 0 && s.first_in[from] > i {
                        gains[i as usize].fetch_add(w, Ordering::Relaxed);
                    }
                    // V_to becomes occupied at its first arrival if everything
                    // originally there has already left.
                    let emptied_before = s.last_out[to] == INVALID || s.last_out[to] < i;
                    if s.first_in[to] == i && s.non_moved[to] == 0 && emptied_before {
                        gains[i as usize].fetch_sub(w, Ordering::Relaxed);
                    }
                }
                for &b in &s.touched {
                    s.first_in[b as usize] = INVALID;
                    s.last_out[b as usize] = INVALID;
                    s.non_moved[b as usize] = 0;
                }
                s.touched.clear();
            }
        },
    );
    Ok(gains.into_iter().map(AtomicI64::into_inner).collect())
}

/// Length `r` of the prefix with maximum cumulative gain and that gain.
/// Ties go to the longer prefix.
pub fn best_prefix(gains: &[Weight]) -> (usize, Weight) {
    let mut best = (0, 0);
    let mut sum = 0;
    for (i, &g) in gains.iter().enumerate() {
        sum += g;
        if sum >= best.1 {
            best = (i + 1, sum);
        }
    }
    best
}

/// Undoes `moves[r..]` in reverse order, then refreshes the benefits of all
/// nodes in `moves`.
pub fn revert_to_prefix(ph: &PartitionedHypergraph<'_>, gains: Option<&GainTable>, moves: &[Move], r: usize) {
    for m in moves[r..].iter().rev() {
        ph.move_node_unchecked(m.node, m.to, m.from, gains);
    }
    if let Some(gt) = gains {
        moves.par_iter().for_each(|m| gt.recompute_benefit(ph, m.node));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{rebuild_gain_table, PinCountLayout};
    use proptest::prelude::*;

    fn replay(hg: &Hypergraph, k: usize, part: &[BlockId], moves: &[Move]) -> Vec<Weight> {
        let ph = PartitionedHypergraph::with_limits(hg, k, part, vec![Weight::MAX / 4; k], PinCountLayout::Plain);
        moves.iter().map(|m| ph.move_node(m.node, m.from, m.to, None).delta().unwrap()).collect()
    }

    #[test]
    fn path_example() {
        let h = Hypergraph::new(3, &[vec![0, 1], vec![1, 2]], None, None).unwrap();
        let moves = [Move::new(1, 0, 1), Move::new(0, 0, 1)];
        let g = recalculate_gains(&h, &[0, 0, 1], &moves).unwrap();
        assert_eq!(g, vec![0, 1]);
    }

    #[test]
    fn last_out_and_first_in() {
        let h = Hypergraph::new(3, &[vec![0, 1, 2]], None, Some(vec![3])).unwrap();
        // Empty V0 (which holds 0 and 1), then bring 2 into V0.
        let moves = [Move::new(0, 0, 1), Move::new(1, 0, 1), Move::new(2, 1, 0)];
        let g = recalculate_gains(&h, &[0, 0, 1], &moves).unwrap();
        assert_eq!(g, vec![0, 3, -3]);
        assert_eq!(g, replay(&h, 2, &[0, 0, 1], &moves));
    }

    #[test]
    fn duplicate_is_an_error() {
        let h = Hypergraph::new(2, &[vec![0, 1]], None, None).unwrap();
        let moves = [Move::new(0, 0, 1), Move::new(0, 1, 0)];
        assert_eq!(recalculate_gains(&h, &[0, 0], &moves), Err(RecalculationError::DuplicateNode(0)));
    }

    #[test]
    fn prefix_selection() {
        assert_eq!(best_prefix(&[2, -1, 3, -4]), (3, 4));
        assert_eq!(best_prefix(&[-1, -2]), (0, 0));
        assert_eq!(best_prefix(&[0, 0]), (2, 0));
        assert_eq!(best_prefix(&[]), (0, 0));
    }

    #[test]
    fn revert_restores_state() {
        let h = Hypergraph::new(5, &[vec![0, 1, 2], vec![2, 3], vec![3, 4, 0]], None, None).unwrap();
        let part = [0, 1, 2, 0, 1];
        let ph = PartitionedHypergraph::with_limits(&h, 3, &part, vec![10; 3], PinCountLayout::Plain);
        let before = ph.snapshot();
        let gt = rebuild_gain_table(&ph);
        let moves = [Move::new(0, 0, 2), Move::new(3, 0, 1), Move::new(2, 2, 1)];
        for m in &moves {
            ph.move_node(m.node, m.from, m.to, Some(&gt));
        }
        let full = ph.snapshot();
        revert_to_prefix(&ph, Some(&gt), &moves, 3);
        assert_eq!(ph.snapshot(), full);
        revert_to_prefix(&ph, Some(&gt), &moves, 0);
        assert_eq!(ph.snapshot(), before);
        let fresh = rebuild_gain_table(&ph);
        assert_eq!(gt.benefits(), fresh.benefits());
        assert_eq!(gt.penalties(), fresh.penalties());
    }

    fn instance() -> impl Strategy<Value = (Hypergraph, usize, Vec<BlockId>, Vec<Move>)> {
        (2usize..=16, 2usize..=4).prop_flat_map(|(n, k)| {
            let nets = prop::collection::vec(prop::collection::btree_set(0..n as u32, 2..=n.min(5)), 1..12);
            let weights = prop::collection::vec(1i64..4, 12);
            let part = prop::collection::vec(0..k as BlockId, n);
            let order = Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle();
            let targets = prop::collection::vec(1..k as BlockId, n);
            let len = 0..=n;
            (nets, weights, part, order, targets, len).prop_map(move |(nets, weights, part, order, targets, len)| {
                let nets: Vec<Vec<u32>> = nets.into_iter().map(|s| s.into_iter().collect()).collect();
                let w = weights[..nets.len()].to_vec();
                let hg = Hypergraph::new(n, &nets, None, Some(w)).unwrap();
                let moves = order[..len]
                    .iter()
                    .map(|&u| {
                        let from = part[u as usize];
                        Move::new(u, from, (from + targets[u as usize]) % k as BlockId)
                    })
                    .collect();
                (hg, k, part, moves)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn recalculation_matches_replay((hg, k, part, moves) in instance()) {
            let g = recalculate_gains(&hg, &part, &moves).unwrap();
            prop_assert_eq!(g, replay(&hg, k, &part, &moves));
        }

        #[test]
        fn revert_matches_prefix_replay((hg, k, part, moves) in instance(), cut in 0usize..=16) {
            let r = cut.min(moves.len());
            let limits = vec![Weight::MAX / 4; k];
            let ph = PartitionedHypergraph::with_limits(&hg, k, &part, limits.clone(), PinCountLayout::Plain);
            let gt = rebuild_gain_table(&ph);
            for m in &moves {
                ph.move_node(m.node, m.from, m.to, Some(&gt));
            }
            revert_to_prefix(&ph, Some(&gt), &moves, r);
            let oracle = PartitionedHypergraph::with_limits(&hg, k, &part, limits, PinCountLayout::Plain);
            for m in &moves[..r] {
                oracle.move_node(m.node, m.from, m.to, None);
            }
            prop_assert_eq!(ph.snapshot(), oracle.snapshot());
            let fresh = rebuild_gain_table(&ph);
            prop_assert_eq!(gt.penalties(), fresh.penalties());
            prop_assert_eq!(gt.benefits(), fresh.benefits());
            ph.validate().unwrap();
        }
    }
}
