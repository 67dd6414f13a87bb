use super::network::{ArcSpec, FlowGraph};
use super::region::Region;
use crate::partition::PartitionedHypergraph;
use crate::{BlockId, NetId, NodeId, Weight};

/// Vertex standing for the part of the first block outside the region.
pub const SOURCE: u32 = 0;
/// Vertex standing for the part of the second block outside the region.
pub const SINK: u32 = 1;
const REGION_OFFSET: u32 = 2;

/// Lawler expansion of the region hypergraph of a block pair.
///
/// Vertex layout: `SOURCE`, `SINK`, one vertex per region node, then a pair
/// `(e_in, e_out)` per net. A net contributes the bridging arc `e_in -> e_out`
/// of capacity `w(e)` and arcs `v -> e_in`, `e_out -> v` per pin. Pin arcs
/// carry capacity `w(e)` during the flow computation and are unbounded when
/// cuts are derived, so only bridging arcs can be cut.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub graph: FlowGraph,
    pub blocks: (BlockId, BlockId),
    pub region: Vec<NodeId>,
    pub(crate) side: Vec<u8>,
    pub(crate) distance: Vec<u32>,
    pub(crate) vertex_weight: Vec<Weight>,
    /// Net id, weight and distinct mapped pins of every modelled net.
    pub(crate) nets: Vec<(NetId, Weight, Vec<u32>)>,
    pub max_weights: [Weight; 2],
}

impl FlowProblem {
    pub fn build(ph: &PartitionedHypergraph<'_>, region: &Region) -> Self {
        let hg = ph.hypergraph();
        let (i, j) = region.blocks;
        let r = region.len();
        let mut vertex_of = std::collections::HashMap::with_capacity(r);
        let mut vertex_weight = vec![ph.block_weight(i) - region.weight(ph, 0), ph.block_weight(j) - region.weight(ph, 1)];
        for (idx, &u) in region.nodes.iter().enumerate() {
            vertex_of.insert(u, REGION_OFFSET + idx as u32);
            vertex_weight.push(hg.node_weight(u));
        }
        let mut net_ids: Vec<NetId> = region.nodes.iter().flat_map(|&u| hg.incident_nets(u).iter().copied()).collect();
        net_ids.sort_unstable();
        net_ids.dedup();
        let mut nets = Vec::new();
        let mut arcs: Vec<ArcSpec> = Vec::new();
        let mut mapped = Vec::new();
        for e in net_ids {
            mapped.clear();
            for &v in hg.pins(e) {
                let b = ph.block(v);
                let m = match vertex_of.get(&v) {
                    Some(&x) => x,
                    None if b == i => SOURCE,
                    None if b == j => SINK,
                    None => continue,
                };
                mapped.push(m);
            }
            mapped.sort_unstable();
            mapped.dedup();
            if mapped.len() < 2 || mapped.iter().all(|&m| m < REGION_OFFSET) {
                continue;
            }
            let w = hg.net_weight(e);
            let e_in = (REGION_OFFSET as usize + r + 2 * nets.len()) as u32;
            let e_out = e_in + 1;
            arcs.push((e_in, e_out, w, false));
            for &v in &mapped {
                arcs.push((v, e_in, w, true));
                arcs.push((e_out, v, w, true));
            }
            nets.push((e, w, mapped.clone()));
        }
        vertex_weight.resize(REGION_OFFSET as usize + r + 2 * nets.len(), 0);
        let graph = FlowGraph::new(vertex_weight.len(), &arcs);
        Self {
            graph,
            blocks: (i, j),
            region: region.nodes.clone(),
            side: region.side.clone(),
            distance: region.distance.clone(),
            vertex_weight,
            nets,
            max_weights: [ph.max_block_weight(i), ph.max_block_weight(j)],
        }
    }

    pub fn num_region_nodes(&self) -> usize {
        self.region.len()
    }

    pub fn num_nets(&self) -> usize {
        self.nets.len()
    }

    pub(crate) fn region_vertices(&self) -> std::ops::Range<u32> {
        REGION_OFFSET..REGION_OFFSET + self.region.len() as u32
    }

    pub(crate) fn region_index(v: u32) -> usize {
        (v - REGION_OFFSET) as usize
    }

    pub fn total_weight(&self) -> Weight {
        self.vertex_weight.iter().sum()
    }

    /// Weight of the modelled nets that have pins on both sides when
    /// `on_second(v)` gives the side of every terminal and region vertex.
    pub fn cut_weight(&self, on_second: impl Fn(u32) -> bool) -> Weight {
        self.nets
            .iter()
            .filter(|(_, _, pins)| {
                let first = on_second(pins[0]);
                pins[1..].iter().any(|&v| on_second(v) != first)
            })
            .map(|&(_, w, _)| w)
            .sum()
    }

    /// Cut weight of the current assignment of the two blocks.
    pub fn initial_cut(&self) -> Weight {
        self.cut_weight(|v| match v {
            SOURCE => false,
            SINK => true,
            _ => self.side[Self::region_index(v)] == 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{construct_region, QuotientGraph};
    use crate::partition::PinCountLayout;
    use crate::Hypergraph;

    #[test]
    fn single_interior_net() {
        let hg = Hypergraph::new(2, &[vec![0, 1]], None, Some(vec![5])).unwrap();
        let ph = PartitionedHypergraph::with_limits(&hg, 2, &[0, 1], vec![2, 2], PinCountLayout::Plain);
        let q = QuotientGraph::build(&ph);
        let region = construct_region(&ph, (0, 1), q.cut_nets(0, 1), 16.0, 1.0, 2);
        let p = FlowProblem::build(&ph, &region);
        assert_eq!(p.num_region_nodes(), 2);
        assert_eq!(p.num_nets(), 1);
        // s, t, two region nodes, e_in, e_out.
        assert_eq!(p.graph.num_vertices(), 6);
        assert_eq!(p.vertex_weight, vec![0, 0, 1, 1, 0, 0]);
        assert_eq!(p.initial_cut(), 5);
    }

    #[test]
    fn exterior_nets_are_contracted() {
        // Path 0-1-2-3-4-5, blocks 0..3 | 3..6, region = {2, 3}.
        let nets: Vec<Vec<u32>> = (0..5u32).map(|i| vec![i, i + 1]).collect();
        let hg = Hypergraph::new(6, &nets, None, None).unwrap();
        let ph = PartitionedHypergraph::with_limits(&hg, 2, &[0, 0, 0, 1, 1, 1], vec![3, 3], PinCountLayout::Plain);
        let q = QuotientGraph::build(&ph);
        let region = construct_region(&ph, (0, 1), q.cut_nets(0, 1), 16.0, 1.0, 0);
        let p = FlowProblem::build(&ph, &region);
        // Net {0,1} lies in V_0 \ B and is absent; {1,2} becomes {s, 2}.
        let ids: Vec<NetId> = p.nets.iter().map(|n| n.0).collect();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(p.nets[0].2, vec![SOURCE, 2]);
        assert_eq!(p.nets[2].2, vec![SINK, 3]);
        assert_eq!(&p.vertex_weight[..4], &[2, 2, 1, 1]);
        assert_eq!(p.initial_cut(), 1);
    }
}
