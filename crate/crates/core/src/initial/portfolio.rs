use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flat::{run_flat, BipartitionTarget, Member};
use super::twoway_fm::{overload, side_weights, twoway_fm};
use crate::util::{derive_seed, rng};
use crate::{BlockId, Hypergraph, Weight};

/// Running statistics of one portfolio member.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PortfolioStats {
    pub runs: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub best: Option<Weight>,
    m2: f64,
}

impl PortfolioStats {
    pub fn record(&mut self, objective: Weight) {
        self.runs += 1;
        let x = objective as f64;
        let d = x - self.mean;
        self.mean += d / self.runs as f64;
        self.m2 += d * (x - self.mean);
        self.std_dev = (self.m2 / self.runs as f64).max(0.0).sqrt();
        self.best = Some(self.best.map_or(objective, |b| b.min(objective)));
    }

    /// The 95% rule: another run is worthwhile unless `mean - 2 * std_dev`
    /// exceeds the best objective found so far by any member.
    pub fn worth_another_run(&self, best: Weight) -> bool {
        self.mean - 2.0 * self.std_dev <= best as f64
    }
}

#[derive(Debug, Clone)]
pub struct PortfolioConfig {
    pub members: Vec<Member>,
    pub min_runs: usize,
    pub max_runs: usize,
    /// Apply the 95% rule between `min_runs` and `max_runs`. Without it every
    /// member runs exactly `min_runs` times.
    pub adaptive: bool,
    pub fm_passes: usize,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        Self { members: Member::ALL.to_vec(), min_runs: 5, max_runs: 20, adaptive: true, fm_passes: 10 }
    }
}

/// Outcome of one portfolio run, ordered by
/// `(overload, objective, load, member, repetition)`.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub parts: Vec<BlockId>,
    pub objective: Weight,
    pub overload: Weight,
    /// Largest ratio of side weight to side limit.
    pub load: f64,
    pub member: Member,
    pub repetition: usize,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        (self.overload, self.objective)
            .cmp(&(other.overload, other.objective))
            .then(self.load.total_cmp(&other.load))
            .then((self.member.id(), self.repetition).cmp(&(other.member.id(), other.repetition)))
            .is_lt()
    }
}

#[derive(Debug, Clone)]
pub struct PortfolioResult {
    pub best: Candidate,
    /// Statistics in the order of `PortfolioConfig::members`.
    pub stats: Vec<PortfolioStats>,
}

/// One run of `member`, polished by two-way FM. The seed depends only on
/// `(seed, member, repetition)`.
pub fn run_member(
    hg: &Hypergraph,
    member: Member,
    target: &BipartitionTarget,
    seed: u64,
    repetition: usize,
    fm_passes: usize,
) -> Candidate {
    let mut r = rng(derive_seed(seed, &[member.id() as u64, repetition as u64]));
    let mut parts = run_flat(hg, member, target, &mut r);
    let objective = twoway_fm(hg, &mut parts, target.max_weights, fm_passes);
    let w = side_weights(hg, &parts);
    let load = (0..2)
        .map(|b| if target.max_weights[b] > 0 { w[b] as f64 / target.max_weights[b] as f64 } else { w[b] as f64 })
        .fold(0.0, f64::max);
    Candidate { parts, objective, overload: overload(w, target.max_weights), load, member, repetition }
}

/// Runs the portfolio and returns the best polished bipartition.
///
/// All members first run `min_runs` times. Afterwards rounds of one more run
/// per member follow while some member is below `max_runs` and passes the 95%
/// rule. Runs within a round are independent tasks, so the result does not
/// depend on scheduling.
pub fn bipartition_portfolio(
    hg: &Hypergraph,
    target: &BipartitionTarget,
    seed: u64,
    config: &PortfolioConfig,
) -> PortfolioResult {
    assert!(!config.members.is_empty(), "portfolio needs at least one member");
    let mut stats = vec![PortfolioStats::default(); config.members.len()];
    let mut best: Option<Candidate> = None;
    let min_runs = config.min_runs.max(1);
    let mut tasks: Vec<(usize, usize)> =
        (0..config.members.len()).flat_map(|i| (0..min_runs).map(move |r| (i, r))).collect();
    while !tasks.is_empty() {
        let results: Vec<(usize, Candidate)> = tasks
            .par_iter()
            .map(|&(i, r)| (i, run_member(hg, config.members[i], target, seed, r, config.fm_passes)))
            .collect();
        for (i, c) in results {
            stats[i].record(c.objective);
            if best.as_ref().is_none_or(|b| c.better_than(b)) {
                best = Some(c);
            }
        }
        if !config.adaptive {
            break;
        }
        let best_objective = best.as_ref().expect("at least one run").objective;
        tasks = stats
            .iter()
            .enumerate()
            .filter(|(_, s)| s.runs < config.max_runs && s.worth_another_run(best_objective))
            .map(|(i, s)| (i, s.runs))
            .collect();
    }
    PortfolioResult { best: best.expect("at least one run"), stats }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_direct() {
        let xs = [3, 7, 7, 19, 4];
        let mut s = PortfolioStats::default();
        for x in xs {
            s.record(x);
        }
        let mean = xs.iter().sum::<i64>() as f64 / 5.0;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.std_dev - var.sqrt()).abs() < 1e-12);
        assert_eq!(s.best, Some(3));
        assert_eq!(s.runs, 5);
    }

    #[test]
    fn rule_stops_hopeless_members() {
        let mut s = PortfolioStats::default();
        for x in [10, 10, 10, 10, 10] {
            s.record(x);
        }
        assert!(!s.worth_another_run(9));
        assert!(s.worth_another_run(10));
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
    fn disconnected_halves_have_zero_cut() {
        let nets: Vec<Vec<u32>> = (0..7).chain(8..15).map(|i| vec![i, i + 1]).collect();
        let hg = Hypergraph::new(16, &nets, None, None).unwrap();
        let target = BipartitionTarget::new(16, 0.5, [8, 8]);
        let res = bipartition_portfolio(&hg, &target, 1, &PortfolioConfig::default());
        assert_eq!(res.best.objective, 0);
        assert_eq!(res.best.overload, 0);
        let bfs_only = PortfolioConfig { members: vec![Member::Bfs], ..Default::default() };
        assert_eq!(bipartition_portfolio(&hg, &target, 2, &bfs_only).best.objective, 0);
    }

    #[test]
    fn hopeless_members_stop_after_min_runs() {
        let hg = grid(8);
        let target = BipartitionTarget::new(64, 0.5, [33, 33]);
        let res = bipartition_portfolio(&hg, &target, 3, &PortfolioConfig::default());
        let best = res.best.objective;
        for s in &res.stats {
            assert!(s.runs >= 5 && s.runs <= 20);
            if s.runs < 20 {
                assert!(!s.worth_another_run(best));
            }
        }
        assert!(best <= 12, "{best}");
        let fixed = bipartition_portfolio(&hg, &target, 3, &PortfolioConfig { adaptive: false, ..Default::default() });
        assert!(fixed.stats.iter().all(|s| s.runs == 5));
    }

    #[test]
    fn single_node() {
        let hg = Hypergraph::new(1, &[] as &[Vec<u32>], None, None).unwrap();
        let target = BipartitionTarget::new(1, 0.5, [1, 1]);
        let res = bipartition_portfolio(&hg, &target, 0, &PortfolioConfig::default());
        assert_eq!(res.best.objective, 0);
        assert_eq!(res.best.overload, 0);
        let w = side_weights(&hg, &res.best.parts);
        assert!(w.contains(&0));
    }

    #[test]
    fn dominates_guaranteed_runs_of_every_member() {
        let hg = grid(6);
        let target = BipartitionTarget::new(36, 0.5, [18, 18]);
        let config = PortfolioConfig::default();
        let res = bipartition_portfolio(&hg, &target, 11, &config);
        for member in Member::ALL {
            for r in 0..config.min_runs {
                let c = run_member(&hg, member, &target, 11, r, config.fm_passes);
                assert!((res.best.overload, res.best.objective) <= (c.overload, c.objective));
            }
        }
    }

    #[test]
    fn result_is_thread_independent() {
        let hg = grid(7);
        let target = BipartitionTarget::new(49, 0.5, [25, 25]);
        let run = |t| {
            crate::util::with_threads(t, || {
                bipartition_portfolio(&hg, &target, 5, &PortfolioConfig::default()).best.parts
            })
        };
        let one = run(1);
        assert_eq!(run(4), one);
    }
}
