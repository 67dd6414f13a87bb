//! The multilevel pipeline and its presets.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::coarsening::{coarsen, project_partition, CoarseningConfig};
use crate::community::{detect_communities, CommunityAssignment, CommunityConfig};
use crate::deterministic::{sync_label_propagation, SyncLpConfig};
use crate::flow::{flow_refinement, FlowConfig};
use crate::initial::{recursive_bipartition, InitialConfig, PortfolioConfig};
use crate::metrics::{km1_and_cut, max_block_weight, KWayPartition, Objective};
use crate::partition::{rebuild_gain_table, PartitionedHypergraph};
use crate::refinement::{fm_refinement, label_propagation, rebalance, FmConfig, LpConfig};
use crate::util::{derive_seed, with_threads};
use crate::{BlockId, Hypergraph, Weight};

/// Component selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Synchronous Louvain, coarsening and label propagation. The output
    /// depends only on the input and the seed, not on the thread count.
    Deterministic,
    /// Label propagation followed by localized FM.
    #[default]
    Default,
    /// `Default` plus flow-based refinement.
    DefaultFlows,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Deterministic, Preset::Default, Preset::DefaultFlows];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Deterministic => "deterministic",
            Preset::Default => "default",
            Preset::DefaultFlows => "default-flows",
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown preset '{s}' (expected deterministic, default or default-flows)"))
    }
}

/// Partitioner settings. [`Config::with_preset`] sets the component flags
/// consistently; individual fields may be adjusted afterwards.
#[derive(Debug, Clone)]
pub struct Config {
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub preset: Preset,
    /// Reported objective. Refinement always optimizes connectivity.
    pub objective: Objective,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Coarsening stops at `contraction_multiplier * k` nodes.
    pub contraction_multiplier: usize,
    pub community_detection: bool,
    pub deterministic: bool,
    pub lp_rounds: usize,
    pub fm: bool,
    pub fm_rounds: usize,
    pub flows: bool,
    pub flow: FlowConfig,
    /// Run flows only on the finest `r` levels; `None` runs them everywhere.
    pub flow_levels: Option<usize>,
    pub adaptive_portfolio: bool,
    /// Refinement is skipped on the remaining levels once exceeded.
    pub time_limit: Option<Duration>,
}

impl Config {
    pub fn new(k: usize, epsilon: f64) -> Self {
        Self {
            k,
            epsilon,
            seed: 0,
            preset: Preset::Default,
            objective: Objective::Km1,
            threads: None,
            contraction_multiplier: 160,
            community_detection: true,
            deterministic: false,
            lp_rounds: 5,
            fm: true,
            fm_rounds: 10,
            flows: false,
            flow: FlowConfig::default(),
            flow_levels: None,
            adaptive_portfolio: true,
            time_limit: None,
        }
        .with_preset(Preset::Default)
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.preset = preset;
        self.deterministic = preset == Preset::Deterministic;
        self.fm = preset != Preset::Deterministic;
        self.flows = preset == Preset::DefaultFlows;
        self.adaptive_portfolio = preset != Preset::Deterministic;
        self.flow.random_ties = preset != Preset::Deterministic;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn validate(&self) -> Result<(), PartitionError> {
        let bad = |msg: String| Err(PartitionError::InvalidConfig(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be a non-negative number, got {}", self.epsilon));
        }
        if self.threads == Some(0) {
            return bad("thread count must be at least 1".into());
        }
        if self.contraction_multiplier == 0 {
            return bad("contraction multiplier must be at least 1".into());
        }
        if self.deterministic && (self.fm || self.flows) {
            return bad("the deterministic preset excludes FM and flow refinement".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no balanced partition found: heaviest block {heaviest} exceeds L_max = {limit}")]
    InfeasibleBalance { heaviest: Weight, limit: Weight },
}

/// Wall time per phase, in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub preprocessing: f64,
    pub coarsening: f64,
    pub initial_partitioning: f64,
    pub refinement: f64,
    pub total: f64,
}

/// Connectivity before and after refinement on one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelTrace {
    /// `0` is the input hypergraph.
    pub level: usize,
    pub nodes: usize,
    pub projected_km1: Weight,
    pub refined_km1: Weight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub k: usize,
    pub epsilon: f64,
    pub preset: Preset,
    pub objective: Objective,
    /// Value of `objective`.
    pub objective_value: Weight,
    pub km1: Weight,
    pub cut: Weight,
    pub soed: Weight,
    pub imbalance: f64,
    pub max_block_weight: Weight,
    pub block_weights: Vec<Weight>,
    pub balanced: bool,
    pub communities: usize,
    pub levels: Vec<LevelTrace>,
    pub timings: PhaseTimings,
    pub timed_out: bool,
}

#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub partition: KWayPartition,
    pub report: Report,
}

/// Metrics of an arbitrary partition.
pub fn evaluate(hg: &Hypergraph, partition: &KWayPartition, objective: Objective) -> Report {
    let (km1, cut) = km1_and_cut(hg, &partition.parts);
    let block_weights = partition.block_weights(hg);
    Report {
        k: partition.k,
        epsilon: partition.epsilon,
        preset: Preset::Default,
        objective,
        objective_value: match objective {
            Objective::Km1 => km1,
            Objective::Cut => cut,
            Objective::Soed => km1 + cut,
        },
        km1,
        cut,
        soed: km1 + cut,
        imbalance: partition.imbalance(hg),
        max_block_weight: max_block_weight(hg.total_weight(), partition.k, partition.epsilon),
        balanced: partition.is_balanced(hg),
        block_weights,
        communities: 0,
        levels: Vec::new(),
        timings: PhaseTimings::default(),
        timed_out: false,
    }
}

/// Partitions `hg` into `config.k` blocks of weight at most
/// `(1 + eps) * ceil(c(V) / k)`.
pub fn partition(hg: &Hypergraph, config: &Config) -> Result<PartitionResult, PartitionError> {
    config.validate()?;
    match config.threads {
        Some(t) => with_threads(t, || run(hg, config)),
        None => run(hg, config),
    }
}

fn run(hg: &Hypergraph, config: &Config) -> Result<PartitionResult, PartitionError> {
    let start = Instant::now();
    let k = config.k;
    let mut timings = PhaseTimings::default();
    let l_max = max_block_weight(hg.total_weight(), k, config.epsilon);

    let phase = Instant::now();
    let communities = if config.community_detection && k > 1 {
        let cc = CommunityConfig {
            deterministic: config.deterministic,
            seed: derive_seed(config.seed, &[1]),
            ..CommunityConfig::default()
        };
        detect_communities(hg, &cc)
    } else {
        CommunityAssignment::single(hg.num_nodes())
    };
    timings.preprocessing = phase.elapsed().as_secs_f64();

    let phase = Instant::now();
    let hierarchy = if k > 1 {
        let cc = CoarseningConfig {
            seed: derive_seed(config.seed, &[2]),
            deterministic: config.deterministic,
            ..CoarseningConfig::for_k(k, config.contraction_multiplier)
        };
        coarsen(hg, &communities.ids, &cc)
    } else {
        Default::default()
    };
    timings.coarsening = phase.elapsed().as_secs_f64();

    let phase = Instant::now();
    let coarsest = hierarchy.coarsest(hg);
    let initial = InitialConfig {
        portfolio: PortfolioConfig { adaptive: config.adaptive_portfolio, ..PortfolioConfig::default() },
        seed: derive_seed(config.seed, &[3]),
    };
    let mut parts = recursive_bipartition(coarsest, k, config.epsilon, &initial).parts;
    timings.initial_partitioning = phase.elapsed().as_secs_f64();

    let phase = Instant::now();
    let num_levels = hierarchy.num_levels();
    let mut levels = Vec::with_capacity(num_levels + 1);
    let mut timed_out = false;
    for level in (0..=num_levels).rev() {
        let current = if level == 0 { hg } else { &hierarchy.levels[level - 1].hypergraph };
        if level < num_levels {
            parts = project_partition(&hierarchy.levels[level].mapping, &parts);
        }
        if let Some(limit) = config.time_limit {
            timed_out |= start.elapsed() > limit;
        }
        let (projected, refined, refined_parts) = refine_level(current, parts, level, l_max, config, timed_out);
        parts = refined_parts;
        levels.push(LevelTrace { level, nodes: current.num_nodes(), projected_km1: projected, refined_km1: refined });
    }
    timings.refinement = phase.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    let partition = KWayPartition::new(k, config.epsilon, parts);
    let heaviest = partition.block_weights(hg).into_iter().max().unwrap_or(0);
    if heaviest > l_max {
        return Err(PartitionError::InfeasibleBalance { heaviest, limit: l_max });
    }
    let mut report = evaluate(hg, &partition, config.objective);
    report.preset = config.preset;
    report.communities = communities.num_communities;
    report.levels = levels;
    report.timings = timings;
    report.timed_out = timed_out;
    Ok(PartitionResult { partition, report })
}

/// Refines one level and returns `(projected km1, refined km1, partition)`.
fn refine_level(
    hg: &Hypergraph,
    parts: Vec<BlockId>,
    level: usize,
    l_max: Weight,
    config: &Config,
    skip: bool,
) -> (Weight, Weight, Vec<BlockId>) {
    let k = config.k;
    let ph = PartitionedHypergraph::with_limits(hg, k, &parts, vec![l_max; k], crate::partition::PinCountLayout::Plain);
    let projected = ph.km1();
    if k == 1 {
        return (projected, projected, parts);
    }
    let seed = derive_seed(config.seed, &[4, level as u64]);
    if config.deterministic {
        rebalance(&ph, None);
        if !skip {
            sync_label_propagation(&ph, &SyncLpConfig { max_rounds: config.lp_rounds, seed, ..SyncLpConfig::default() });
        }
    } else {
        let gains = rebuild_gain_table(&ph);
        rebalance(&ph, Some(&gains));
        if !skip {
            label_propagation(&ph, &gains, &LpConfig { max_rounds: config.lp_rounds, seed });
            if config.fm {
                let fm = FmConfig { max_rounds: config.fm_rounds, seed: derive_seed(seed, &[1]), ..FmConfig::default() };
                fm_refinement(&ph, &gains, &fm);
            }
            if config.flows && config.flow_levels.is_none_or(|r| level < r) {
                let flow = FlowConfig { seed: derive_seed(seed, &[2]), ..config.flow.clone() };
                flow_refinement(&ph, Some(&gains), config.epsilon, &flow);
            }
        }
    }
    let refined = ph.km1();
    (projected, refined, ph.parts())
}
