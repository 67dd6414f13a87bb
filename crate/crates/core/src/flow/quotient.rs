use std::collections::BTreeMap;

use crate::partition::PartitionedHypergraph;
use crate::{BlockId, NetId};

/// Block adjacency induced by cut nets. Pair `(i, j)` with `i < j` is an edge
/// iff some net has pins in both blocks; its list holds those nets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuotientGraph {
    k: usize,
    edges: BTreeMap<(BlockId, BlockId), Vec<NetId>>,
}

impl QuotientGraph {
    pub fn build(ph: &PartitionedHypergraph<'_>) -> Self {
        let mut edges: BTreeMap<(BlockId, BlockId), Vec<NetId>> = BTreeMap::new();
        let mut blocks = Vec::new();
        for e in ph.hypergraph().nets() {
            if ph.connectivity(e) < 2 {
                continue;
            }
            blocks.clear();
            blocks.extend(ph.connectivity_set(e));
            blocks.sort_unstable();
            for (a, &i) in blocks.iter().enumerate() {
                for &j in &blocks[a + 1..] {
                    edges.entry((i, j)).or_default().push(e);
                }
            }
        }
        Self { k: ph.k(), edges }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Adjacent pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (BlockId, BlockId)> + '_ {
        self.edges.keys().copied()
    }

    /// Nets spanning both `i` and `j`, in increasing id order.
    pub fn cut_nets(&self, i: BlockId, j: BlockId) -> &[NetId] {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.get(&key).map_or(&[], Vec::as_slice)
    }

    pub fn neighbors(&self, b: BlockId) -> Vec<BlockId> {
        self.pairs()
            .filter_map(|(i, j)| if i == b { Some(j) } else if j == b { Some(i) } else { None })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PinCountLayout;
    use crate::Hypergraph;

    fn quotient(nets: &[Vec<u32>], k: usize, parts: &[u32]) -> QuotientGraph {
        let hg = Hypergraph::new(parts.len(), nets, None, None).unwrap();
        let ph = PartitionedHypergraph::with_limits(&hg, k, parts, vec![100; k], PinCountLayout::Plain);
        QuotientGraph::build(&ph)
    }

    #[test]
    fn bipartition_single_edge() {
        let q = quotient(&[vec![0, 1], vec![1, 2], vec![2, 3]], 2, &[0, 0, 1, 1]);
        assert_eq!(q.pairs().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(q.cut_nets(1, 0), &[1]);
    }

    #[test]
    fn no_cut_nets() {
        let q = quotient(&[vec![0, 1], vec![2, 3]], 2, &[0, 0, 1, 1]);
        assert!(q.is_empty());
    }

    #[test]
    fn net_spanning_three_blocks_gives_triangle() {
        let q = quotient(&[vec![0, 1, 2]], 3, &[0, 1, 2]);
        assert_eq!(q.pairs().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(q.neighbors(1), vec![0, 2]);
    }
}
