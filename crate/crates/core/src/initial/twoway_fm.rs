use std::collections::BinaryHeap;

use crate::{BlockId, Hypergraph, NodeId, Weight};

/// Consecutive non-improving moves after which a pass stops.
const FRUITLESS_MOVES: usize = 100;

/// Sum of the amounts by which the two sides exceed their limits.
pub(crate) fn overload(weights: [Weight; 2], max_weights: [Weight; 2]) -> Weight {
    (weights[0] - max_weights[0]).max(0) + (weights[1] - max_weights[1]).max(0)
}

pub(crate) fn side_weights(hg: &Hypergraph, parts: &[BlockId]) -> [Weight; 2] {
    let mut w = [0; 2];
    for u in hg.nodes() {
        w[parts[u as usize] as usize] += hg.node_weight(u);
    }
    w
}

/// Cut of a bipartition.
pub(crate) fn bipartition_cut(hg: &Hypergraph, parts: &[BlockId]) -> Weight {
    hg.nets()
        .filter(|&e| {
            let p = hg.pins(e);
            p.iter().any(|&v| parts[v as usize] != parts[p[0] as usize])
        })
        .map(|e| hg.net_weight(e))
        .sum()
}

struct State<'a> {
    hg: &'a Hypergraph,
    parts: &'a mut [BlockId],
    phi: Vec<[u32; 2]>,
    gain: Vec<Weight>,
    weights: [Weight; 2],
}

impl State<'_> {
    /// Contribution of net `e` to the gain of a pin in block `b`.
    #[inline]
    fn contribution(phi: [u32; 2], b: usize, w: Weight) -> Weight {
        w * ((phi[b] == 1) as Weight - (phi[1 - b] == 0) as Weight)
    }

    fn apply(&mut self, u: NodeId, heap: &mut BinaryHeap<(Weight, NodeId)>, locked: &[bool]) {
        let s = self.parts[u as usize] as usize;
        let t = 1 - s;
        self.parts[u as usize] = t as BlockId;
        self.weights[s] -= self.hg.node_weight(u);
        self.weights[t] += self.hg.node_weight(u);
        self.gain[u as usize] = -self.gain[u as usize];
        for &e in self.hg.incident_nets(u) {
            let w = self.hg.net_weight(e);
            let before = self.phi[e as usize];
            let mut after = before;
            after[s] -= 1;
            after[t] += 1;
            self.phi[e as usize] = after;
            for &v in self.hg.pins(e) {
                if v == u {
                    continue;
                }
                let b = self.parts[v as usize] as usize;
                let d = Self::contribution(after, b, w) - Self::contribution(before, b, w);
                if d != 0 {
                    self.gain[v as usize] += d;
                    if !locked[v as usize] {
                        heap.push((self.gain[v as usize], v));
                    }
                }
            }
        }
    }
}

/// Classical two-way FM with best-prefix rollback.
///
/// A pass may exceed the limits by one node weight but is rolled back to its
/// best prefix, so the result never has a larger overload than the input and,
/// at equal overload, never a larger cut. Returns the final cut.
pub fn twoway_fm(hg: &Hypergraph, parts: &mut [BlockId], max_weights: [Weight; 2], max_passes: usize) -> Weight {
    assert_eq!(parts.len(), hg.num_nodes());
    let mut phi = vec![[0u32; 2]; hg.num_nets()];
    for e in hg.nets() {
        for &v in hg.pins(e) {
            phi[e as usize][parts[v as usize] as usize] += 1;
        }
    }
    let gain = hg
        .nodes()
        .map(|u| {
            let b = parts[u as usize] as usize;
            hg.incident_nets(u).iter().map(|&e| State::contribution(phi[e as usize], b, hg.net_weight(e))).sum()
        })
        .collect();
    let weights = side_weights(hg, parts);
    let mut cut = bipartition_cut(hg, parts);
    let mut st = State { hg, parts, phi, gain, weights };
    let n = hg.num_nodes();
    let slack = hg.node_weights().iter().copied().max().unwrap_or(0);

    for _ in 0..max_passes {
        let mut locked = vec![false; n];
        let overloaded = [0, 1].map(|b| st.weights[b] > max_weights[b]);
        let mut heap: BinaryHeap<(Weight, NodeId)> = hg
            .nodes()
            .filter(|&u| {
                overloaded[st.parts[u as usize] as usize]
                    || hg.incident_nets(u).iter().any(|&e| st.phi[e as usize][0] > 0 && st.phi[e as usize][1] > 0)
            })
            .map(|u| (st.gain[u as usize], u))
            .collect();
        let start = (overload(st.weights, max_weights), cut);
        let mut best = start;
        let mut best_len = 0;
        let mut moves: Vec<NodeId> = Vec::new();
        while let Some((g, u)) = heap.pop() {
            if locked[u as usize] || g != st.gain[u as usize] {
                continue;
            }
            let s = st.parts[u as usize] as usize;
            let t = 1 - s;
            let c = hg.node_weight(u);
            let mut next = st.weights;
            next[s] -= c;
            next[t] += c;
            let before = overload(st.weights, max_weights);
            let after = overload(next, max_weights);
            // Temporary overload of at most one node weight lets the pass
            // escape partitions where every single move breaks the limits.
            if next[t] > max_weights[t] && after > before.max(slack) {
                continue;
            }
            locked[u as usize] = true;
            st.apply(u, &mut heap, &locked);
            cut -= g;
            moves.push(u);
            let key = (after, cut);
            if key < best {
                best = key;
                best_len = moves.len();
            } else if moves.len() - best_len > FRUITLESS_MOVES {
                break;
            }
        }
        for &u in moves[best_len..].iter().rev() {
            let g = st.gain[u as usize];
            st.apply(u, &mut heap, &locked);
            cut -= g;
        }
        debug_assert_eq!((overload(st.weights, max_weights), cut), best);
        if best >= start {
            break;
        }
    }
    cut
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn path_reaches_optimum() {
        let hg = Hypergraph::new(4, &[vec![0, 1], vec![1, 2], vec![2, 3]], None, None).unwrap();
        let mut parts = vec![0, 1, 0, 1];
        assert_eq!(bipartition_cut(&hg, &parts), 3);
        let cut = twoway_fm(&hg, &mut parts, [2, 2], 10);
        assert_eq!(cut, 1);
        assert_eq!(bipartition_cut(&hg, &parts), 1);
        assert_eq!(side_weights(&hg, &parts), [2, 2]);
    }

    #[test]
    fn optimal_input_is_kept() {
        let hg = Hypergraph::new(4, &[vec![0, 1], vec![1, 2], vec![2, 3]], None, None).unwrap();
        let mut parts = vec![0, 0, 1, 1];
        assert_eq!(twoway_fm(&hg, &mut parts, [2, 2], 10), 1);
    }

    #[test]
    fn overloaded_input_is_repaired() {
        let hg = Hypergraph::new(4, &[vec![0, 1], vec![1, 2], vec![2, 3]], None, None).unwrap();
        let mut parts = vec![0, 0, 0, 0];
        let cut = twoway_fm(&hg, &mut parts, [2, 2], 10);
        assert_eq!(side_weights(&hg, &parts), [2, 2]);
        assert_eq!(cut, 1);
    }

    proptest! {
        #[test]
        fn never_worse(
            (n, nets, parts) in (2usize..14).prop_flat_map(|n| (
                Just(n),
                prop::collection::vec(prop::collection::btree_set(0..n as u32, 2..=n.min(5)), 1..20),
                prop::collection::vec(0u32..2, n),
            )),
            slack in 0i64..3,
        ) {
            let nets: Vec<Vec<u32>> = nets.into_iter().map(|s| s.into_iter().collect()).collect();
            let hg = Hypergraph::new(n, &nets, None, None).unwrap();
            let half = (n as i64 + 1) / 2 + slack;
            let max = [half, half];
            let mut p = parts.clone();
            let before = (overload(side_weights(&hg, &parts), max), bipartition_cut(&hg, &parts));
            let cut = twoway_fm(&hg, &mut p, max, 5);
            let after = (overload(side_weights(&hg, &p), max), bipartition_cut(&hg, &p));
            prop_assert_eq!(cut, after.1);
            prop_assert!(after <= before);
        }
    }
}
