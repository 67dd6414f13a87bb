//! Initial partitioning by parallel recursive bipartitioning.
//!
//! Each bipartitioning step runs a portfolio of flat algorithms with an
//! adjusted imbalance `eps'` chosen so that the final `k`-way partition is
//! balanced whenever every step met its own limits.

mod flat;
mod portfolio;
mod twoway_fm;

pub use flat::{BipartitionTarget, GainPolicy, Member, SeedPolicy};
pub use portfolio::{bipartition_portfolio, run_member, Candidate, PortfolioConfig, PortfolioResult, PortfolioStats};
pub use twoway_fm::twoway_fm;

use crate::metrics::KWayPartition;
use crate::util::{derive_seed, scaled_floor};
use crate::{BlockId, Hypergraph, NodeId, Weight};

/// Imbalance for a bipartitioning step on a subhypergraph of weight `c_sub`
/// that is split further into `k_sub` blocks:
/// `((1 + eps) * ceil(c_total / k) * k_sub / c_sub)^(1 / ceil(log2 k_sub)) - 1`,
/// floored at zero.
pub fn adaptive_epsilon(c_total: Weight, c_sub: Weight, k: usize, k_sub: usize, epsilon: f64) -> f64 {
    assert!(k_sub >= 2 && c_sub > 0 && k >= 1);
    let perfect = ((c_total + k as Weight - 1) / k as Weight) as f64;
    let base = (1.0 + epsilon) * perfect * k_sub as f64 / c_sub as f64;
    let depth = (k_sub as f64).log2().ceil();
    (base.powf(1.0 / depth) - 1.0).max(0.0)
}

/// Side limits `(1 + eps') * ceil(c_sub * k_i / k_sub)` for a split into
/// `ceil(k_sub / 2)` and `floor(k_sub / 2)` blocks.
pub fn side_limits(c_sub: Weight, k_sub: usize, eps_sub: f64) -> [Weight; 2] {
    let k0 = k_sub.div_ceil(2) as Weight;
    let k1 = (k_sub / 2) as Weight;
    let k_sub = k_sub as Weight;
    let ceil = |ki: Weight| (c_sub * ki + k_sub - 1) / k_sub;
    [scaled_floor(ceil(k0) as f64, eps_sub), scaled_floor(ceil(k1) as f64, eps_sub)]
}

#[derive(Debug, Clone, Default)]
pub struct InitialConfig {
    pub portfolio: PortfolioConfig,
    pub seed: u64,
}

/// Recursive bipartitioning together with the outcome of every step.
#[derive(Debug, Clone)]
pub struct RecursionReport {
    pub partition: KWayPartition,
    /// `true` iff every bipartitioning step respected its side limits.
    pub all_steps_balanced: bool,
    pub steps: usize,
}

/// `k`-way partition of `hg` by recursive bipartitioning.
pub fn recursive_bipartition(hg: &Hypergraph, k: usize, epsilon: f64, config: &InitialConfig) -> KWayPartition {
    recursive_bipartition_report(hg, k, epsilon, config).partition
}

pub fn recursive_bipartition_report(
    hg: &Hypergraph,
    k: usize,
    epsilon: f64,
    config: &InitialConfig,
) -> RecursionReport {
    assert!(k >= 1, "k must be positive");
    let ctx = Context {
        c_total: hg.total_weight(),
        l_max: crate::metrics::max_block_weight(hg.total_weight(), k, epsilon),
        k, epsilon, config };
    let mut parts = vec![0 as BlockId; hg.num_nodes()];
    let out = if hg.num_nodes() == 0 { Outcome::default() } else { ctx.recurse(hg, k, 0, 1) };
    for (u, b) in out.assignment {
        parts[u as usize] = b;
    }
    RecursionReport {
        partition: KWayPartition::new(k, epsilon, parts),
        all_steps_balanced: out.balanced,
        steps: out.steps,
    }
}

struct Context<'a> {
    c_total: Weight,
    l_max: Weight,
    k: usize,
    epsilon: f64,
    config: &'a InitialConfig,
}

struct Outcome {
    /// `(node of the subhypergraph, block)`.
    assignment: Vec<(NodeId, BlockId)>,
    balanced: bool,
    steps: usize,
}

impl Default for Outcome {
    fn default() -> Self {
        Self { assignment: Vec::new(), balanced: true, steps: 0 }
    }
}

impl Context<'_> {
    /// `path` identifies the position in the recursion tree (heap numbering).
    fn recurse(&self, hg: &Hypergraph, k_sub: usize, offset: BlockId, path: u64) -> Outcome {
        if k_sub == 1 || hg.num_nodes() == 0 {
            return Outcome { assignment: hg.nodes().map(|u| (u, offset)).collect(), ..Outcome::default() };
        }
        let c_sub = hg.total_weight();
        let eps_sub = if c_sub > 0 { adaptive_epsilon(self.c_total, c_sub, self.k, k_sub, self.epsilon) } else { 0.0 };
        // Rounding up `c_sub * k_i / k_sub` can exceed what `L_max` allows, so a
        // side with `k_i` blocks never gets more than `k_i * L_max`.
        let k_sides = [k_sub.div_ceil(2), k_sub / 2];
        let max_weights = side_limits(c_sub, k_sub, eps_sub);
        let max_weights = [0, 1].map(|b| max_weights[b].min(k_sides[b] as Weight * self.l_max));
        let k0 = k_sub.div_ceil(2);
        let target = BipartitionTarget::new(c_sub, k0 as f64 / k_sub as f64, max_weights);
        let seed = derive_seed(self.config.seed, &[path]);
        let result = bipartition_portfolio(hg, &target, seed, &self.config.portfolio);
        let sides: [Vec<NodeId>; 2] =
            [0, 1].map(|b| hg.nodes().filter(|&u| result.best.parts[u as usize] == b).collect());
        let solve = |b: usize| {
            if sides[b].is_empty() {
                return Outcome::default();
            }
            let sub = hg.extract_subhypergraph(&sides[b], true).expect("side is non-empty");
            let side_offset = offset + if b == 0 { 0 } else { k0 as BlockId };
            let mut out = self.recurse(&sub.hypergraph, k_sides[b], side_offset, 2 * path + b as u64);
            for (u, _) in out.assignment.iter_mut() {
                *u = sub.to_original[*u as usize];
            }
            out
        };
        let (left, right) = rayon::join(|| solve(0), || solve(1));
        let mut assignment = left.assignment;
        assignment.extend(right.assignment);
        Outcome {
            assignment,
            balanced: result.best.overload == 0 && left.balanced && right.balanced,
            steps: 1 + left.steps + right.steps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_objective, Objective};
    use proptest::prelude::*;

    #[test]
    fn epsilon_examples() {
        let e = adaptive_epsilon(800, 800, 8, 8, 0.03);
        assert!((e - (1.03f64.powf(1.0 / 3.0) - 1.0)).abs() < 1e-12);
        assert!((e - 0.00990).abs() < 1e-4);
        assert_eq!(adaptive_epsilon(800, 200, 8, 2, 0.0), 0.0);
        let e2 = adaptive_epsilon(1000, 240, 8, 2, 0.03);
        assert!((e2 - (1.03 * 125.0 * 2.0 / 240.0 - 1.0)).abs() < 1e-12);
        // Subproblems heavier than their share get no slack.
        assert_eq!(adaptive_epsilon(800, 300, 8, 2, 0.03), 0.0);
    }

    #[test]
    fn three_way_split_limits() {
        let [a, b] = side_limits(30, 3, 0.0);
        assert_eq!((a, b), (20, 10));
    }

    #[test]
    fn k_one_is_single_block() {
        let hg = Hypergraph::new(5, &[vec![0, 1, 2], vec![3, 4]], None, None).unwrap();
        let p = recursive_bipartition(&hg, 1, 0.03, &InitialConfig::default());
        assert_eq!(p.parts, vec![0; 5]);
    }

    fn grid(side: u32) -> Hypergraph {
        let mut nets = Vec::new();
        for r in 0..side {
            for c in 0..side {
                let u = r * side + c;
                if c + 1 < side {
                    nets.push(vec![u, u + 1]);
                }
                if r + 1 < side {
                    nets.push(vec![u, u + side]);
                }
            }
        }
        Hypergraph::new((side * side) as usize, &nets, None, None).unwrap()
    }

    #[test]
    fn eight_way_grid_is_balanced() {
        let hg = grid(16);
        for seed in 0..3 {
            let config = InitialConfig { seed, ..Default::default() };
            let report = recursive_bipartition_report(&hg, 8, 0.03, &config);
            assert_eq!(report.steps, 7);
            assert!(report.partition.is_balanced(&hg), "{:?}", report.partition.block_weights(&hg));
            assert!(report.partition.block_weights(&hg).iter().all(|&w| w > 0));
            let km1 = compute_objective(&hg, &report.partition.parts, Objective::Km1);
            assert!(km1 <= 80, "{km1}");
        }
    }

    #[test]
    fn three_way() {
        let hg = grid(6);
        let p = recursive_bipartition(&hg, 3, 0.03, &InitialConfig::default());
        assert_eq!(p.block_weights(&hg), vec![12, 12, 12]);
    }

    #[test]
    fn deterministic_across_threads() {
        let hg = grid(10);
        let run = |t| crate::util::with_threads(t, || recursive_bipartition(&hg, 4, 0.03, &InitialConfig::default()));
        let p = run(1);
        assert_eq!(run(3).parts, p.parts);
        assert_eq!(run(8).parts, p.parts);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn balanced_steps_give_balanced_partition(
            (n, nets, weights) in (1usize..40).prop_flat_map(|n| (
                Just(n),
                prop::collection::vec(prop::collection::btree_set(0..n as u32, 1..=n.min(4)), 0..40),
                prop::collection::vec(1i64..4, n),
            )),
            k in 1usize..6,
            unit in any::<bool>(),
            seed in 0u64..100,
        ) {
            let nets: Vec<Vec<u32>> = nets.into_iter().map(|s| s.into_iter().collect()).collect();
            let w = if unit { None } else { Some(weights) };
            let hg = Hypergraph::new(n, &nets, w, None).unwrap();
            let config = InitialConfig {
                seed,
                portfolio: PortfolioConfig { min_runs: 1, adaptive: false, ..Default::default() },
            };
            let report = recursive_bipartition_report(&hg, k, 0.03, &config);
            prop_assert!(report.partition.parts.iter().all(|&b| (b as usize) < k));
            if report.all_steps_balanced {
                prop_assert!(report.partition.is_balanced(&hg), "{:?}", report.partition.block_weights(&hg));
            }
            if unit {
                prop_assert!(report.all_steps_balanced);
            }
        }
    }
}
