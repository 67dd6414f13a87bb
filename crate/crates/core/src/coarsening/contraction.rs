use rayon::prelude::*;

use super::Clustering;
use crate::{Hypergraph, NetId, NodeId, Weight};

/// Nets with identical pin sets. `representative` is the smallest member and
/// `weight` the sum of the member weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdenticalNetGroup {
    pub representative: NetId,
    pub members: Vec<NetId>,
    pub weight: Weight,
}

/// `f(e) = sum of v^2 over the pins of e`.
pub fn fingerprint(pins: &[NodeId]) -> u64 {
    pins.iter().fold(0u64, |acc, &v| acc.wrapping_add((v as u64) * (v as u64)))
}

/// Groups identical nets. Only groups with at least two members are returned,
/// ordered by representative.
pub fn detect_identical_nets(hg: &Hypergraph) -> Vec<IdenticalNetGroup> {
    let nets: Vec<&[NodeId]> = hg.nets().map(|e| hg.pins(e)).collect();
    let owner = identical_owner(&nets);
    let mut groups: Vec<IdenticalNetGroup> = Vec::new();
    let mut index = vec![usize::MAX; nets.len()];
    for (e, &o) in owner.iter().enumerate() {
        if o as usize == e {
            continue;
        }
        if index[o as usize] == usize::MAX {
            index[o as usize] = groups.len();
            groups.push(IdenticalNetGroup { representative: o, members: vec![o], weight: hg.net_weight(o) });
        }
        let g = &mut groups[index[o as usize]];
        g.members.push(e as NetId);
        g.weight += hg.net_weight(e as NetId);
    }
    groups.sort_by_key(|g| g.representative);
    groups
}

/// `owner[e]` is the smallest net identical to `e` (possibly `e` itself).
/// Pin lists must be sorted.
fn identical_owner(nets: &[&[NodeId]]) -> Vec<NetId> {
    let mut order: Vec<(u64, usize, NetId)> =
        nets.par_iter().enumerate().map(|(e, p)| (fingerprint(p), p.len(), e as NetId)).collect();
    order.par_sort_unstable();
    let mut owner: Vec<NetId> = (0..nets.len() as NetId).collect();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && order[end].0 == order[start].0 && order[end].1 == order[start].1 {
            end += 1;
        }
        // Members of a bucket are in ascending net order, so the first match
        // found for a net is its smallest identical net.
        for i in start..end {
            let e = order[i].2;
            if owner[e as usize] != e {
                continue;
            }
            for j in i + 1..end {
                let f = order[j].2;
                if owner[f as usize] == f && nets[e as usize] == nets[f as usize] {
                    owner[f as usize] = e;
                }
            }
        }
        start = end;
    }
    owner
}

/// Result of contracting one clustering.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub coarse: Hypergraph,
    /// `mapping[u]` is the coarse node of fine node `u`.
    pub mapping: Vec<NodeId>,
    /// Number of fine nets that became single-pin nets and were dropped.
    pub removed_single_pin_nets: usize,
    /// Number of fine nets merged into an identical net.
    pub merged_identical_nets: usize,
}

/// Collapses every cluster into one node, removes single-pin nets and merges
/// identical nets. Coarse ids follow the order of the representatives.
pub fn contract(hg: &Hypergraph, clustering: &Clustering) -> Contraction {
    let n = hg.num_nodes();
    let rep = &clustering.rep;
    assert_eq!(rep.len(), n);
    let mut coarse_id = vec![0 as NodeId; n];
    let mut next = 0;
    for u in 0..n {
        if rep[u] as usize == u {
            coarse_id[u] = next;
            next += 1;
        }
    }
    let mapping: Vec<NodeId> = rep
        .par_iter()
        .map(|&r| {
            debug_assert_eq!(rep[r as usize], r, "clustering must be flat");
            coarse_id[r as usize]
        })
        .collect();
    let mut node_weights = vec![0; next as usize];
    for u in hg.nodes() {
        node_weights[mapping[u as usize] as usize] += hg.node_weight(u);
    }

    let mapped: Vec<Vec<NodeId>> = hg
        .nets()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|e| {
            let mut pins: Vec<NodeId> = hg.pins(e).iter().map(|&v| mapping[v as usize]).collect();
            pins.sort_unstable();
            pins.dedup();
            pins
        })
        .collect();
    let kept: Vec<NetId> = (0..mapped.len() as NetId).filter(|&e| mapped[e as usize].len() > 1).collect();
    let removed_single_pin_nets = mapped.len() - kept.len();
    let kept_pins: Vec<&[NodeId]> = kept.iter().map(|&e| mapped[e as usize].as_slice()).collect();
    let owner = identical_owner(&kept_pins);

    let mut weights: Vec<Weight> = vec![0; kept.len()];
    for (i, &o) in owner.iter().enumerate() {
        weights[o as usize] += hg.net_weight(kept[i]);
    }
    let mut offsets = vec![0usize];
    let mut pins = Vec::new();
    let mut net_weights = Vec::new();
    for (i, &o) in owner.iter().enumerate() {
        if o as usize == i {
            pins.extend_from_slice(kept_pins[i]);
            offsets.push(pins.len());
            net_weights.push(weights[i]);
        }
    }
    let merged_identical_nets = kept.len() - net_weights.len();
    let coarse = Hypergraph::from_sorted_parts(node_weights, net_weights, offsets, pins);
    Contraction { coarse, mapping, removed_single_pin_nets, merged_identical_nets }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_objective, Objective};
    use proptest::prelude::*;

    #[test]
    fn fingerprint_examples() {
        assert_eq!(fingerprint(&[1, 2, 3]), 14);
        assert_eq!(fingerprint(&[1, 8]), fingerprint(&[4, 7]));
    }

    #[test]
    fn equal_fingerprints_are_compared() {
        let hg = Hypergraph::new(9, &[vec![1, 8], vec![4, 7]], None, None).unwrap();
        assert!(detect_identical_nets(&hg).is_empty());
    }

    #[test]
    fn duplicates_are_aggregated() {
        let hg = Hypergraph::new(3, &[vec![0, 2], vec![1, 2], vec![0, 2]], None, None).unwrap();
        let groups = detect_identical_nets(&hg);
        assert_eq!(groups, vec![IdenticalNetGroup { representative: 0, members: vec![0, 2], weight: 2 }]);
    }

    #[test]
    fn star_contraction() {
        let hg = Hypergraph::new(4, &[vec![0, 1], vec![0, 2], vec![0, 3]], None, None).unwrap();
        let c = contract(&hg, &Clustering { rep: vec![0, 0, 2, 2] });
        assert_eq!(c.coarse.num_nodes(), 2);
        assert_eq!(c.coarse.num_nets(), 1);
        assert_eq!(c.coarse.pins(0), &[0, 1]);
        assert_eq!(c.coarse.net_weight(0), 2);
        assert_eq!(c.removed_single_pin_nets, 1);
        assert_eq!(c.merged_identical_nets, 1);
        assert_eq!(c.mapping, vec![0, 0, 1, 1]);
    }

    #[test]
    fn identity_and_full_contraction() {
        let hg = Hypergraph::new(4, &[vec![0, 1, 2], vec![2, 3]], Some(vec![1, 2, 3, 4]), Some(vec![5, 6])).unwrap();
        let id = contract(&hg, &Clustering::singletons(4));
        assert_eq!(id.coarse.net_list(), hg.net_list());
        assert_eq!(id.coarse.node_weights(), hg.node_weights());
        let all = contract(&hg, &Clustering { rep: vec![3; 4] });
        assert_eq!(all.coarse.num_nodes(), 1);
        assert_eq!(all.coarse.num_nets(), 0);
        assert_eq!(all.coarse.total_weight(), 10);
    }

    fn random_instance() -> impl Strategy<Value = (Hypergraph, Vec<NodeId>, Vec<u32>)> {
        (2usize..20).prop_flat_map(|n| {
            let nets = prop::collection::vec(prop::collection::btree_set(0..n as u32, 1..=n.min(6)), 0..15);
            let weights = prop::collection::vec(1i64..5, n);
            let targets = prop::collection::vec(0..n as u32, n);
            let parts = prop::collection::vec(0u32..3, n);
            (Just(n), nets, weights, targets, parts).prop_map(|(n, nets, w, targets, parts)| {
                let nets: Vec<Vec<u32>> = nets.into_iter().map(|s| s.into_iter().collect()).collect();
                let nw: Vec<i64> = (0..nets.len() as i64).map(|i| 1 + i % 3).collect();
                let hg = Hypergraph::new(n, &nets, Some(w), Some(nw)).unwrap();
                // The first `roots` nodes are representatives; every other node
                // points at one of them.
                let roots = 1 + targets[0] as usize % n;
                let flat: Vec<u32> = (0..n)
                    .map(|u| if u < roots { u as u32 } else { targets[u] % roots as u32 })
                    .collect();
                (hg, flat, parts)
            })
        })
    }

    proptest! {
        #[test]
        fn contraction_preserves_weight_and_objectives((hg, rep, coarse_parts) in random_instance()) {
            let clustering = Clustering { rep };
            let c = contract(&hg, &clustering);
            prop_assert_eq!(c.coarse.total_weight(), hg.total_weight());
            let coarse_parts = &coarse_parts[..c.coarse.num_nodes()];
            let fine: Vec<u32> = c.mapping.iter().map(|&m| coarse_parts[m as usize]).collect();
            for metric in [Objective::Km1, Objective::Cut, Objective::Soed] {
                prop_assert_eq!(compute_objective(&c.coarse, coarse_parts, metric), compute_objective(&hg, &fine, metric));
            }
        }

        #[test]
        fn identical_merge_preserves_objectives((hg, _rep, parts) in random_instance()) {
            let c = contract(&hg, &Clustering::singletons(hg.num_nodes()));
            for metric in [Objective::Km1, Objective::Cut] {
                prop_assert_eq!(compute_objective(&c.coarse, &parts, metric), compute_objective(&hg, &parts, metric));
            }
        }
    }
}
