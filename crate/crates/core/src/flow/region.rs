use std::collections::VecDeque;

use crate::partition::PartitionedHypergraph;
use crate::util::scaled_floor;
use crate::{BlockId, NetId, NodeId, Weight};

/// Size-constrained region around the cut between two blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub blocks: (BlockId, BlockId),
    /// Region nodes; those of the first block come first.
    pub nodes: Vec<NodeId>,
    /// `0` for nodes of the first block, `1` for the second.
    pub side: Vec<u8>,
    /// BFS distance from the cut.
    pub distance: Vec<u32>,
}

impl Region {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self, ph: &PartitionedHypergraph<'_>, side: u8) -> Weight {
        let hg = ph.hypergraph();
        self.nodes.iter().zip(&self.side).filter(|(_, &s)| s == side).map(|(&u, _)| hg.node_weight(u)).sum()
    }
}

/// Grows one BFS per block from the pins of `cut_nets`. A node joins while
/// its side stays within the weight bound and its distance is at most
/// `max_distance`.
pub fn construct_region(
    ph: &PartitionedHypergraph<'_>,
    (i, j): (BlockId, BlockId),
    cut_nets: &[NetId],
    alpha: f64,
    epsilon: f64,
    max_distance: u32,
) -> Region {
    let hg = ph.hypergraph();
    let c_pair = ph.block_weight(i) + ph.block_weight(j);
    let scaled = scaled_floor(((c_pair + 1) / 2) as f64, alpha * epsilon);
    let mut region = Region { blocks: (i, j), nodes: Vec::new(), side: Vec::new(), distance: Vec::new() };
    let mut seen = std::collections::HashSet::new();
    let mut seen_net = std::collections::HashSet::new();
    for (side, (own, other)) in [(i, j), (j, i)].into_iter().enumerate() {
        let bound = scaled - ph.block_weight(other);
        let mut weight = 0;
        let mut queue: VecDeque<(NodeId, u32)> = VecDeque::new();
        seen_net.clear();
        for &e in cut_nets {
            for &u in hg.pins(e) {
                if ph.block(u) == own && seen.insert(u) {
                    queue.push_back((u, 0));
                }
            }
        }
        while let Some((u, d)) = queue.pop_front() {
            let c = hg.node_weight(u);
            if weight + c > bound {
                continue;
            }
            weight += c;
            region.nodes.push(u);
            region.side.push(side as u8);
            region.distance.push(d);
            if d >= max_distance {
                continue;
            }
            for &e in hg.incident_nets(u) {
                if !seen_net.insert(e) {
                    continue;
                }
                for &v in hg.pins(e) {
                    if ph.block(v) == own && seen.insert(v) {
                        queue.push_back((v, d + 1));
                    }
                }
            }
        }
    }
    region
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::QuotientGraph;
    use crate::partition::PinCountLayout;
    use crate::Hypergraph;

    fn path6() -> Hypergraph {
        Hypergraph::new(6, &(0..5u32).map(|i| vec![i, i + 1]).collect::<Vec<_>>(), None, None).unwrap()
    }

    fn sorted(r: &Region) -> Vec<NodeId> {
        let mut v = r.nodes.clone();
        v.sort_unstable();
        v
    }

    #[test]
    fn unbounded_region_is_both_blocks() {
        let hg = path6();
        let ph = PartitionedHypergraph::with_limits(&hg, 2, &[0, 0, 0, 1, 1, 1], vec![6, 6], PinCountLayout::Plain);
        let q = QuotientGraph::build(&ph);
        let r = construct_region(&ph, (0, 1), q.cut_nets(0, 1), 1e6, 1.0, u32::MAX);
        assert_eq!(sorted(&r), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(r.distance, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn distance_limits() {
        let hg = path6();
        let ph = PartitionedHypergraph::with_limits(&hg, 2, &[0, 0, 0, 1, 1, 1], vec![6, 6], PinCountLayout::Plain);
        let q = QuotientGraph::build(&ph);
        let r = construct_region(&ph, (0, 1), q.cut_nets(0, 1), 1e6, 1.0, 0);
        assert_eq!(sorted(&r), vec![2, 3]);
        let r = construct_region(&ph, (0, 1), q.cut_nets(0, 1), 1e6, 1.0, 1);
        assert_eq!(sorted(&r), vec![1, 2, 3, 4]);
        assert_eq!(r.side, vec![0, 0, 1, 1]);
    }

    #[test]
    fn weight_bound() {
        let hg = path6();
        let ph = PartitionedHypergraph::with_limits(&hg, 2, &[0, 0, 0, 1, 1, 1], vec![6, 6], PinCountLayout::Plain);
        let q = QuotientGraph::build(&ph);
        // floor(1.5 * 3) - 3 = 1 node per side.
        let r = construct_region(&ph, (0, 1), q.cut_nets(0, 1), 1.0, 0.5, u32::MAX);
        assert_eq!(sorted(&r), vec![2, 3]);
    }
}
