//! Immutable weighted hypergraph in dual adjacency-array form.

use thiserror::Error;

use crate::community::WeightedGraph;
use crate::{NetId, NodeId, Weight};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("net {net}: pin {pin} out of range (n = {n})")]
    PinOutOfRange { net: usize, pin: u64, n: usize },
    #[error("net {net} contains pin {pin} more than once")]
    DuplicatePin { net: usize, pin: NodeId },
    #[error("net {net} has no pins")]
    EmptyNet { net: usize },
    #[error("expected {expected} {what} weights, got {got}")]
    WeightCount { what: &'static str, expected: usize, got: usize },
    #[error("{what} {id} has non-positive weight {weight}")]
    NonPositiveWeight { what: &'static str, id: usize, weight: Weight },
    #[error("node subset is empty")]
    EmptySubset,
    #[error("node {0} is not part of the hypergraph")]
    UnknownNode(NodeId),
}

/// How pins that occur twice within the same net are handled at build time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePins {
    #[default]
    Reject,
    Deduplicate,
}

/// A weighted hypergraph `H = (V, E, c, omega)`.
///
/// Pins of every net are stored sorted by node id and incident nets of every
/// node are sorted by net id, so iteration order is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    node_weights: Vec<Weight>,
    net_weights: Vec<Weight>,
    pin_offsets: Vec<usize>,
    pins: Vec<NodeId>,
    incidence_offsets: Vec<usize>,
    incident_nets: Vec<NetId>,
    total_weight: Weight,
}

/// Builder for hypergraphs with non-default options.
#[derive(Debug, Clone, Default)]
pub struct HypergraphBuilder {
    duplicates: DuplicatePins,
}

impl HypergraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn duplicate_pins(mut self, mode: DuplicatePins) -> Self {
        self.duplicates = mode;
        self
    }

    pub fn build<P: AsRef<[NodeId]>>(
        &self,
        n: usize,
        nets: &[P],
        node_weights: Option<Vec<Weight>>,
        net_weights: Option<Vec<Weight>>,
    ) -> Result<Hypergraph, HypergraphError> {
        let node_weights = match node_weights {
            Some(w) => {
                if w.len() != n {
                    return Err(HypergraphError::WeightCount { what: "node", expected: n, got: w.len() });
                }
                w
            }
            None => vec![1; n],
        };
        let net_weights = match net_weights {
            Some(w) => {
                if w.len() != nets.len() {
                    return Err(HypergraphError::WeightCount {
                        what: "net",
                        expected: nets.len(),
                        got: w.len(),
                    });
                }
                w
            }
            None => vec![1; nets.len()],
        };
        if let Some((id, &weight)) = node_weights.iter().enumerate().find(|(_, &w)| w <= 0) {
            return Err(HypergraphError::NonPositiveWeight { what: "node", id, weight });
        }
        if let Some((id, &weight)) = net_weights.iter().enumerate().find(|(_, &w)| w <= 0) {
            return Err(HypergraphError::NonPositiveWeight { what: "net", id, weight });
        }

        let mut pin_offsets = Vec::with_capacity(nets.len() + 1);
        pin_offsets.push(0);
        let mut pins = Vec::with_capacity(nets.iter().map(|p| p.as_ref().len()).sum());
        for (e, net) in nets.iter().enumerate() {
            let net = net.as_ref();
            if net.is_empty() {
                return Err(HypergraphError::EmptyNet { net: e });
            }
            let start = pins.len();
            for &v in net {
                if v as usize >= n {
                    return Err(HypergraphError::PinOutOfRange { net: e, pin: v as u64, n });
                }
                pins.push(v);
            }
            let slice = &mut pins[start..];
            slice.sort_unstable();
            if let Some(w) = slice.windows(2).find(|w| w[0] == w[1]) {
                match self.duplicates {
                    DuplicatePins::Reject => return Err(HypergraphError::DuplicatePin { net: e, pin: w[0] }),
                    DuplicatePins::Deduplicate => {
                        let mut unique = slice.to_vec();
                        unique.dedup();
                        pins.truncate(start);
                        pins.extend_from_slice(&unique);
                    }
                }
            }
            pin_offsets.push(pins.len());
        }
        Ok(Hypergraph::from_sorted_parts(node_weights, net_weights, pin_offsets, pins))
    }
}

impl Hypergraph {
    /// Builds a hypergraph with `n` nodes from explicit pin lists.
    ///
    /// Missing weights default to 1. Duplicate pins inside a net are rejected;
    /// use [`HypergraphBuilder`] with [`DuplicatePins::Deduplicate`] to merge them.
    pub fn new<P: AsRef<[NodeId]>>(
        n: usize,
        nets: &[P],
        node_weights: Option<Vec<Weight>>,
        net_weights: Option<Vec<Weight>>,
    ) -> Result<Self, HypergraphError> {
        HypergraphBuilder::new().build(n, nets, node_weights, net_weights)
    }

    /// Assembles a hypergraph from pin lists that are already sorted and
    /// duplicate free. The incidence arrays are derived with a counting sort.
    pub(crate) fn from_sorted_parts(
        node_weights: Vec<Weight>,
        net_weights: Vec<Weight>,
        pin_offsets: Vec<usize>,
        pins: Vec<NodeId>,
    ) -> Self {
        let n = node_weights.len();
        let mut incidence_offsets = vec![0usize; n + 1];
        for &v in &pins {
            incidence_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            incidence_offsets[i + 1] += incidence_offsets[i];
        }
        let mut cursor = incidence_offsets.clone();
        let mut incident_nets = vec![0 as NetId; pins.len()];
        for e in 0..net_weights.len() {
            for &v in &pins[pin_offsets[e]..pin_offsets[e + 1]] {
                incident_nets[cursor[v as usize]] = e as NetId;
                cursor[v as usize] += 1;
            }
        }
        let total_weight = node_weights.iter().sum();
        Self { node_weights, net_weights, pin_offsets, pins, incidence_offsets, incident_nets, total_weight }
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.node_weights.len()
    }

    #[inline]
    pub fn num_nets(&self) -> usize {
        self.net_weights.len()
    }

    /// Total number of pins `p`.
    #[inline]
    pub fn num_pins(&self) -> usize {
        self.pins.len()
    }

    #[inline]
    pub fn pins(&self, e: NetId) -> &[NodeId] {
        let e = e as usize;
        &self.pins[self.pin_offsets[e]..self.pin_offsets[e + 1]]
    }

    #[inline]
    pub fn net_size(&self, e: NetId) -> usize {
        let e = e as usize;
        self.pin_offsets[e + 1] - self.pin_offsets[e]
    }

    #[inline]
    pub fn incident_nets(&self, v: NodeId) -> &[NetId] {
        let v = v as usize;
        &self.incident_nets[self.incidence_offsets[v]..self.incidence_offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.incidence_offsets[v + 1] - self.incidence_offsets[v]
    }

    #[inline]
    pub fn node_weight(&self, v: NodeId) -> Weight {
        self.node_weights[v as usize]
    }

    #[inline]
    pub fn net_weight(&self, e: NetId) -> Weight {
        self.net_weights[e as usize]
    }

    pub fn node_weights(&self) -> &[Weight] {
        &self.node_weights
    }

    pub fn net_weights(&self) -> &[Weight] {
        &self.net_weights
    }

    /// `c(V)`.
    #[inline]
    pub fn total_weight(&self) -> Weight {
        self.total_weight
    }

    pub fn max_net_size(&self) -> usize {
        (0..self.num_nets()).map(|e| self.net_size(e as NetId)).max().unwrap_or(0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        0..self.num_nodes() as NodeId
    }

    pub fn nets(&self) -> impl Iterator<Item = NetId> + '_ {
        0..self.num_nets() as NetId
    }

    /// Raw adjacency arrays `(pin_offsets, pins, incidence_offsets, incident_nets)`.
    pub fn adjacency_arrays(&self) -> (&[usize], &[NodeId], &[usize], &[NetId]) {
        (&self.pin_offsets, &self.pins, &self.incidence_offsets, &self.incident_nets)
    }

    /// Pin lists as owned vectors, in net order.
    pub fn net_list(&self) -> Vec<Vec<NodeId>> {
        self.nets().map(|e| self.pins(e).to_vec()).collect()
    }

    /// The subhypergraph induced by `nodes`: every net `e` with a non-empty
    /// intersection becomes `e ∩ V'` with the weight of `e`.
    ///
    /// With `strip_trivial`, nets reduced to a single pin are dropped. Node `i`
    /// of the result corresponds to `nodes[i]` after sorting and deduplication.
    pub fn extract_subhypergraph(
        &self,
        nodes: &[NodeId],
        strip_trivial: bool,
    ) -> Result<SubHypergraph, HypergraphError> {
        if nodes.is_empty() {
            return Err(HypergraphError::EmptySubset);
        }
        let mut to_original = nodes.to_vec();
        to_original.sort_unstable();
        to_original.dedup();
        if let Some(&bad) = to_original.iter().find(|&&v| v as usize >= self.num_nodes()) {
            return Err(HypergraphError::UnknownNode(bad));
        }
        let mut to_sub = vec![crate::INVALID; self.num_nodes()];
        for (i, &v) in to_original.iter().enumerate() {
            to_sub[v as usize] = i as NodeId;
        }
        let mut touched = vec![false; self.num_nets()];
        let mut net_order = Vec::new();
        for &v in &to_original {
            for &e in self.incident_nets(v) {
                if !touched[e as usize] {
                    touched[e as usize] = true;
                    net_order.push(e);
                }
            }
        }
        net_order.sort_unstable();

        let mut pin_offsets = vec![0];
        let mut pins = Vec::new();
        let mut net_weights = Vec::new();
        let mut original_nets = Vec::new();
        for e in net_order {
            let start = pins.len();
            pins.extend(self.pins(e).iter().map(|&v| to_sub[v as usize]).filter(|&v| v != crate::INVALID));
            if strip_trivial && pins.len() - start < 2 {
                pins.truncate(start);
                continue;
            }
            pin_offsets.push(pins.len());
            net_weights.push(self.net_weight(e));
            original_nets.push(e);
        }
        let node_weights = to_original.iter().map(|&v| self.node_weight(v)).collect();
        Ok(SubHypergraph {
            hypergraph: Hypergraph::from_sorted_parts(node_weights, net_weights, pin_offsets, pins),
            to_original,
            original_nets,
        })
    }

    /// Bipartite graph representation with one vertex per node (ids `0..n`)
    /// followed by one vertex per net (ids `n..n+m`), and an edge `{u, e}`
    /// per pin.
    pub fn bipartite_representation(&self, model: EdgeWeightModel) -> WeightedGraph {
        let n = self.num_nodes();
        let mut edges = Vec::with_capacity(self.num_pins());
        for e in self.nets() {
            let size = self.net_size(e) as f64;
            for &v in self.pins(e) {
                let w = match model {
                    EdgeWeightModel::Uniform => 1.0,
                    EdgeWeightModel::DegreeScaled => self.degree(v) as f64 / size,
                };
                edges.push((v, (n + e as usize) as u32, w));
            }
        }
        WeightedGraph::from_edges(n + self.num_nets(), &edges)
    }
}

/// Edge weights of the bipartite representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum EdgeWeightModel {
    /// Every pin edge has weight 1.
    #[default]
    Uniform,
    /// Pin edge `{u, e}` has weight `d(u) / |e|`.
    DegreeScaled,
}

/// Result of [`Hypergraph::extract_subhypergraph`].
#[derive(Debug, Clone)]
pub struct SubHypergraph {
    pub hypergraph: Hypergraph,
    /// `to_original[i]` is the node of the parent hypergraph represented by `i`.
    pub to_original: Vec<NodeId>,
    /// `original_nets[e]` is the parent net that produced net `e`.
    pub original_nets: Vec<NetId>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> Hypergraph {
        Hypergraph::new(4, &[vec![0, 1], vec![1, 2], vec![2, 3]], None, None).unwrap()
    }

    #[test]
    fn path_counts() {
        let h = path4();
        assert_eq!(h.num_pins(), 6);
        assert_eq!(h.degree(1), 2);
        assert_eq!(h.incident_nets(1), &[0, 1]);
        assert_eq!(h.total_weight(), 4);
    }

    #[test]
    fn single_pin_net_is_kept() {
        let h = Hypergraph::new(1, &[vec![0]], None, None).unwrap();
        assert_eq!(h.num_nets(), 1);
        assert_eq!(h.pins(0), &[0]);
    }

    #[test]
    fn rejects_out_of_range_pin() {
        let err = Hypergraph::new(3, &[vec![0, 1, 5]], None, None).unwrap_err();
        assert_eq!(err, HypergraphError::PinOutOfRange { net: 0, pin: 5, n: 3 });
    }

    #[test]
    fn duplicate_pins() {
        let err = Hypergraph::new(3, &[vec![0, 1, 1]], None, None).unwrap_err();
        assert_eq!(err, HypergraphError::DuplicatePin { net: 0, pin: 1 });
        let h = HypergraphBuilder::new()
            .duplicate_pins(DuplicatePins::Deduplicate)
            .build(3, &[vec![2, 1, 1, 0]], None, None)
            .unwrap();
        assert_eq!(h.pins(0), &[0, 1, 2]);
        assert_eq!(h.num_pins(), 3);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(Hypergraph::new(2, &[vec![0, 1]], Some(vec![1, 0]), None).is_err());
        assert!(Hypergraph::new(2, &[vec![0, 1]], None, Some(vec![-3])).is_err());
        assert!(Hypergraph::new(2, &[vec![0, 1]], Some(vec![1]), None).is_err());
        assert!(Hypergraph::new(2, &[Vec::<NodeId>::new()], None, None).is_err());
    }

    #[test]
    fn subhypergraph_intersections() {
        let h = Hypergraph::new(4, &[vec![0, 1, 2], vec![2, 3]], None, Some(vec![3, 5])).unwrap();
        let sub = h.extract_subhypergraph(&[0, 1, 2], false).unwrap();
        assert_eq!(sub.hypergraph.net_list(), vec![vec![0, 1, 2], vec![2]]);
        assert_eq!(sub.hypergraph.net_weights(), &[3, 5]);
        let stripped = h.extract_subhypergraph(&[0, 1, 2], true).unwrap();
        assert_eq!(stripped.hypergraph.net_list(), vec![vec![0, 1, 2]]);

        let single = h.extract_subhypergraph(&[3], true).unwrap();
        assert_eq!(single.hypergraph.num_nodes(), 1);
        assert_eq!(single.hypergraph.num_nets(), 0);
        assert_eq!(single.to_original, vec![3]);

        assert_eq!(h.extract_subhypergraph(&[], true).unwrap_err(), HypergraphError::EmptySubset);
    }

    #[test]
    fn full_subset_is_a_copy() {
        let h = path4();
        let sub = h.extract_subhypergraph(&[3, 2, 1, 0], false).unwrap();
        assert_eq!(sub.hypergraph, h);
        assert_eq!(sub.to_original, vec![0, 1, 2, 3]);
    }

    #[test]
    fn bipartite_expansion() {
        let h = Hypergraph::new(2, &[vec![0, 1]], None, None).unwrap();
        let g = h.bipartite_representation(EdgeWeightModel::Uniform);
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 2);

        let star = Hypergraph::new(4, &[vec![0, 1], vec![0, 2], vec![0, 3]], None, None).unwrap();
        let g = star.bipartite_representation(EdgeWeightModel::Uniform);
        assert_eq!(g.neighbors(0).count(), 3);
        assert!(g.neighbors(0).all(|(_, w)| w == 1.0));

        let g = star.bipartite_representation(EdgeWeightModel::DegreeScaled);
        // d(0) = 3, |e| = 2
        assert!(g.neighbors(0).all(|(_, w)| (w - 1.5).abs() < 1e-12));
        assert!(g.neighbors(1).all(|(_, w)| (w - 0.5).abs() < 1e-12));
    }

    #[test]
    fn dual_consistency_roundtrip() {
        let h = Hypergraph::new(5, &[vec![4, 0], vec![1, 2, 3], vec![0, 3]], None, None).unwrap();
        let (po, pins, io, inc) = h.adjacency_arrays();
        let rebuilt = Hypergraph::from_sorted_parts(
            h.node_weights().to_vec(),
            h.net_weights().to_vec(),
            po.to_vec(),
            pins.to_vec(),
        );
        let (_, _, io2, inc2) = rebuilt.adjacency_arrays();
        assert_eq!(io, io2);
        assert_eq!(inc, inc2);
        let degree_sum: usize = h.nodes().map(|v| h.degree(v)).sum();
        assert_eq!(degree_sum, h.num_pins());
    }
}
