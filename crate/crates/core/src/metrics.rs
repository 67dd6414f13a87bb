//! Partition objectives and the balance constraint.

use serde::{Deserialize, Serialize};

use crate::util::scaled_floor;
use crate::{BlockId, Hypergraph, Weight};

/// Objective functions on the nets of a partitioned hypergraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Sum of `omega(e)` over cut nets.
    Cut,
    /// Sum of `(lambda(e) - 1) * omega(e)` over all nets.
    #[default]
    Km1,
    /// Sum of external degrees: `km1 + cut`.
    Soed,
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cut" => Ok(Objective::Cut),
            "km1" | "connectivity" => Ok(Objective::Km1),
            "soed" => Ok(Objective::Soed),
            other => Err(format!("unknown objective '{other}'")),
        }
    }
}

/// Evaluates `metric` for the assignment `part` (one block id per node).
pub fn compute_objective(hg: &Hypergraph, part: &[BlockId], metric: Objective) -> Weight {
    let (km1, cut) = km1_and_cut(hg, part);
    match metric {
        Objective::Cut => cut,
        Objective::Km1 => km1,
        Objective::Soed => km1 + cut,
    }
}

pub(crate) fn km1_and_cut(hg: &Hypergraph, part: &[BlockId]) -> (Weight, Weight) {
    debug_assert_eq!(part.len(), hg.num_nodes());
    let mut km1 = 0;
    let mut cut = 0;
    let mut seen: Vec<BlockId> = Vec::new();
    for e in hg.nets() {
        seen.clear();
        for &v in hg.pins(e) {
            let b = part[v as usize];
            if !seen.contains(&b) {
                seen.push(b);
            }
        }
        let lambda = seen.len() as Weight;
        if lambda > 1 {
            km1 += (lambda - 1) * hg.net_weight(e);
            cut += hg.net_weight(e);
        }
    }
    (km1, cut)
}

/// `L_max = (1 + eps) * ceil(total / k)`, rounded down to an integer weight.
pub fn max_block_weight(total: Weight, k: usize, epsilon: f64) -> Weight {
    let perfect = (total + k as Weight - 1) / k as Weight;
    scaled_floor(perfect as f64, epsilon)
}

/// Block weights `c(V_i)` of an assignment.
pub fn block_weights(hg: &Hypergraph, part: &[BlockId], k: usize) -> Vec<Weight> {
    let mut weights = vec![0; k];
    for v in hg.nodes() {
        weights[part[v as usize] as usize] += hg.node_weight(v);
    }
    weights
}

/// `max_i c(V_i) / ceil(c(V) / k) - 1`.
pub fn imbalance(hg: &Hypergraph, part: &[BlockId], k: usize) -> f64 {
    let total = hg.total_weight();
    if total == 0 {
        return 0.0;
    }
    let perfect = (total + k as Weight - 1) / k as Weight;
    let heaviest = block_weights(hg, part, k).into_iter().max().unwrap_or(0);
    heaviest as f64 / perfect as f64 - 1.0
}

/// A `k`-way partition of a hypergraph together with its imbalance budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KWayPartition {
    pub k: usize,
    pub epsilon: f64,
    pub parts: Vec<BlockId>,
}

impl KWayPartition {
    pub fn new(k: usize, epsilon: f64, parts: Vec<BlockId>) -> Self {
        debug_assert!(parts.iter().all(|&b| (b as usize) < k));
        Self { k, epsilon, parts }
    }

    pub fn max_block_weight(&self, hg: &Hypergraph) -> Weight {
        max_block_weight(hg.total_weight(), self.k, self.epsilon)
    }

    pub fn block_weights(&self, hg: &Hypergraph) -> Vec<Weight> {
        block_weights(hg, &self.parts, self.k)
    }

    /// `true` iff every block satisfies `c(V_i) <= L_max`.
    pub fn is_balanced(&self, hg: &Hypergraph) -> bool {
        let limit = self.max_block_weight(hg);
        self.block_weights(hg).into_iter().all(|w| w <= limit)
    }

    pub fn objective(&self, hg: &Hypergraph, metric: Objective) -> Weight {
        compute_objective(hg, &self.parts, metric)
    }

    pub fn imbalance(&self, hg: &Hypergraph) -> f64 {
        imbalance(hg, &self.parts, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> Hypergraph {
        Hypergraph::new(4, &[vec![0, 1], vec![0, 2], vec![0, 3]], None, None).unwrap()
    }

    #[test]
    fn star_objectives() {
        let h = star();
        let part = [0, 1, 1, 1];
        assert_eq!(compute_objective(&h, &part, Objective::Km1), 3);
        assert_eq!(compute_objective(&h, &part, Objective::Cut), 3);
        assert_eq!(compute_objective(&h, &part, Objective::Soed), 6);
        assert!((imbalance(&h, &part, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_block_is_free() {
        let h = star();
        for metric in [Objective::Cut, Objective::Km1, Objective::Soed] {
            assert_eq!(compute_objective(&h, &[0; 4], metric), 0);
        }
    }

    #[test]
    fn path_connectivity() {
        let h = Hypergraph::new(4, &[vec![0, 1], vec![1, 2], vec![2, 3]], None, None).unwrap();
        assert_eq!(compute_objective(&h, &[0, 0, 1, 1], Objective::Km1), 1);
    }

    #[test]
    fn connectivity_counts_lambda_minus_one() {
        let h = Hypergraph::new(3, &[vec![0, 1, 2]], None, Some(vec![4])).unwrap();
        assert_eq!(compute_objective(&h, &[0, 1, 2], Objective::Km1), 8);
        assert_eq!(compute_objective(&h, &[0, 1, 2], Objective::Cut), 4);
    }

    #[test]
    fn balance_limit() {
        assert_eq!(max_block_weight(1024, 2, 0.03), 527);
        assert_eq!(max_block_weight(7, 2, 0.0), 4);
        let h = star();
        let p = KWayPartition::new(2, 0.03, vec![0, 0, 1, 1]);
        assert!(p.is_balanced(&h));
        let p = KWayPartition::new(2, 0.03, vec![0, 1, 1, 1]);
        assert!(!p.is_balanced(&h));
    }
}
