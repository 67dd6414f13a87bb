//! Benchmark harness: experiment records, performance profiles,
//! effectiveness tests and aggregation.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pipeline::{partition, Config, PartitionError, Preset};
use crate::util::{derive_seed, rng, with_threads};
use crate::{Hypergraph, Objective, Weight};

/// Relative tolerance of `q <= tau * best` in performance profiles.
pub const PROFILE_TOLERANCE: f64 = 1e-9;

/// One partitioner run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub instance: String,
    pub algorithm: String,
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub objective: Weight,
    pub imbalance: f64,
    /// Wall time in seconds.
    pub time: f64,
    pub threads: usize,
    pub timeout: bool,
    /// Balanced and within the time limit.
    pub feasible: bool,
}

impl ExperimentRecord {
    /// Builds a record whose feasibility flag is derived from the imbalance
    /// and the timeout flag.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        instance: impl Into<String>,
        algorithm: impl Into<String>,
        k: usize,
        epsilon: f64,
        seed: u64,
        objective: Weight,
        imbalance: f64,
        time: f64,
        threads: usize,
        timeout: bool,
    ) -> Self {
        let feasible = !timeout && imbalance <= epsilon + 1e-12;
        Self {
            instance: instance.into(),
            algorithm: algorithm.into(),
            k,
            epsilon,
            seed,
            objective,
            imbalance,
            time,
            threads,
            timeout,
            feasible,
        }
    }

    /// Instance key `(instance, k)` used for grouping.
    pub fn key(&self) -> (String, usize) {
        (self.instance.clone(), self.k)
    }
}

pub fn write_csv(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

/// Settings of a benchmark run, stored next to the CSV results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub instances: Vec<String>,
    pub presets: Vec<Preset>,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub objective: Objective,
    pub threads: usize,
    pub time_limit: Option<f64>,
    pub parallel_jobs: usize,
    /// Set when jobs ran concurrently; wall times are then not comparable.
    pub timing_tainted: bool,
    pub records: usize,
}

/// A benchmark suite: every preset on every instance, `k` and seed.
#[derive(Debug, Clone)]
pub struct Suite {
    pub presets: Vec<Preset>,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub objective: Objective,
    pub threads: usize,
    pub time_limit: Option<Duration>,
    pub parallel_jobs: usize,
}

impl Default for Suite {
    fn default() -> Self {
        Self {
            presets: vec![Preset::Default],
            ks: vec![2],
            seeds: vec![0],
            epsilon: 0.03,
            objective: Objective::Km1,
            threads: 1,
            time_limit: None,
            parallel_jobs: 1,
        }
    }
}

impl Suite {
    pub fn manifest(&self, instances: &[String], records: usize) -> RunManifest {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            instances: instances.to_vec(),
            presets: self.presets.clone(),
            ks: self.ks.clone(),
            seeds: self.seeds.clone(),
            epsilon: self.epsilon,
            objective: self.objective,
            threads: self.threads,
            time_limit: self.time_limit.map(|d| d.as_secs_f64()),
            parallel_jobs: self.parallel_jobs,
            timing_tainted: self.parallel_jobs > 1,
            records,
        }
    }

    /// Runs all jobs, sequentially unless `parallel_jobs > 1`.
    pub fn run(&self, instances: &[(String, Hypergraph)]) -> Vec<ExperimentRecord> {
        let mut jobs = Vec::new();
        for (i, _) in instances.iter().enumerate() {
            for &k in &self.ks {
                for &preset in &self.presets {
                    for &seed in &self.seeds {
                        jobs.push((i, k, preset, seed));
                    }
                }
            }
        }
        let run_job = |&(i, k, preset, seed): &(usize, usize, Preset, u64)| {
            let (name, hg) = &instances[i];
            let mut config =
                Config::new(k, self.epsilon).with_preset(preset).with_seed(seed).with_threads(self.threads).with_objective(self.objective);
            config.time_limit = self.time_limit;
            let start = Instant::now();
            let result = partition(hg, &config);
            let elapsed = start.elapsed().as_secs_f64();
            let limit = self.time_limit.map(|d| d.as_secs_f64());
            match result {
                Ok(r) => {
                    let timeout = r.report.timed_out || limit.is_some_and(|l| elapsed > l);
                    ExperimentRecord::new(
                        name.clone(),
                        preset.name(),
                        k,
                        self.epsilon,
                        seed,
                        r.report.objective_value,
                        r.report.imbalance,
                        elapsed,
                        self.threads,
                        timeout,
                    )
                }
                Err(PartitionError::InfeasibleBalance { .. }) | Err(PartitionError::InvalidConfig(_)) => {
                    let mut rec = ExperimentRecord::new(name.clone(), preset.name(), k, self.epsilon, seed, 0, f64::INFINITY, elapsed, self.threads, false);
                    rec.feasible = false;
                    rec
                }
            }
        };
        if self.parallel_jobs > 1 {
            with_threads(self.parallel_jobs, || jobs.par_iter().map(run_job).collect())
        } else {
            jobs.iter().map(run_job).collect()
        }
    }
}

/// Fractions of instances within factor `tau` of the best per algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub algorithm: String,
    /// `(tau, fraction)` for every requested `tau`.
    pub points: Vec<(f64, f64)>,
    /// Share of instances where every run was infeasible.
    pub infeasible: f64,
}

/// Per instance and algorithm: arithmetic mean objective over the feasible
/// runs, or `None` if no run was feasible.
pub fn instance_qualities(records: &[ExperimentRecord]) -> BTreeMap<(String, usize), BTreeMap<String, Option<f64>>> {
    let mut sums: BTreeMap<(String, usize), BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for r in records {
        let e = sums.entry(r.key()).or_default().entry(r.algorithm.clone()).or_insert((0.0, 0));
        if r.feasible {
            e.0 += r.objective as f64;
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(key, algs)| (key, algs.into_iter().map(|(a, (s, c))| (a, (c > 0).then(|| s / c as f64))).collect()))
        .collect()
}

/// Performance profile at the given `taus`. An algorithm covers instance
/// `I` at `tau` iff it has a feasible quality `q` with `q <= tau * Best(I)`.
pub fn performance_profile(records: &[ExperimentRecord], taus: &[f64]) -> Vec<ProfileRow> {
    let qualities = instance_qualities(records);
    let mut algorithms: Vec<String> = records.iter().map(|r| r.algorithm.clone()).collect();
    algorithms.sort();
    algorithms.dedup();
    let instances = qualities.len().max(1) as f64;
    algorithms
        .into_iter()
        .map(|a| {
            let mut covered = vec![0usize; taus.len()];
            let mut infeasible = 0;
            for algs in qualities.values() {
                let best = algs.values().flatten().copied().fold(f64::INFINITY, f64::min);
                match algs.get(&a).copied().flatten() {
                    Some(q) => {
                        for (c, &tau) in covered.iter_mut().zip(taus) {
                            if q <= tau * best + PROFILE_TOLERANCE * best.abs().max(1.0) {
                                *c += 1;
                            }
                        }
                    }
                    None => infeasible += 1,
                }
            }
            ProfileRow {
                algorithm: a,
                points: taus.iter().zip(covered).map(|(&t, c)| (t, c as f64 / instances)).collect(),
                infeasible: infeasible as f64 / instances,
            }
        })
        .collect()
}

/// Running time and objective of one run used by effectiveness tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub time: f64,
    pub objective: Weight,
    pub feasible: bool,
}

impl From<&ExperimentRecord> for Run {
    fn from(r: &ExperimentRecord) -> Self {
        Self { time: r.time, objective: r.objective, feasible: r.feasible }
    }
}

/// Runs drawn for one virtual instance, as indices into the input slices.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualInstance {
    pub a_runs: Vec<usize>,
    pub b_runs: Vec<usize>,
    /// Minimum feasible objective of the sampled runs.
    pub a_quality: Option<Weight>,
    pub b_quality: Option<Weight>,
}

/// Samples one virtual instance. One run of each algorithm is drawn; the
/// faster side then draws further runs without replacement until their
/// accumulated time exceeds the slower run or no run is left. The last draw
/// is kept with probability `(t_slow - sum of earlier times) / t_last`.
pub fn effectiveness_test_sample(a: &[Run], b: &[Run], rng: &mut impl Rng) -> VirtualInstance {
    assert!(!a.is_empty() && !b.is_empty(), "each algorithm needs at least one run");
    let mut order_a: Vec<usize> = (0..a.len()).collect();
    let mut order_b: Vec<usize> = (0..b.len()).collect();
    order_a.shuffle(rng);
    order_b.shuffle(rng);
    let a_faster = a[order_a[0]].time <= b[order_b[0]].time;
    let (fast, order_fast, budget) =
        if a_faster { (a, &order_a, b[order_b[0]].time) } else { (b, &order_b, a[order_a[0]].time) };
    let mut taken = vec![order_fast[0]];
    let mut used = fast[order_fast[0]].time;
    for &i in &order_fast[1..] {
        if used > budget {
            break;
        }
        let t = fast[i].time;
        if used + t > budget {
            let p = if t > 0.0 { ((budget - used) / t).clamp(0.0, 1.0) } else { 1.0 };
            if rng.gen_bool(p) {
                taken.push(i);
            }
            break;
        }
        taken.push(i);
        used += t;
    }
    let (a_runs, b_runs) = if a_faster { (taken, vec![order_b[0]]) } else { (vec![order_a[0]], taken) };
    let best = |runs: &[Run], idx: &[usize]| idx.iter().filter(|&&i| runs[i].feasible).map(|&i| runs[i].objective).min();
    VirtualInstance { a_quality: best(a, &a_runs), b_quality: best(b, &b_runs), a_runs, b_runs }
}

/// Virtual instances per real instance.
pub const VIRTUAL_INSTANCES: usize = 10;

/// Effectiveness test between algorithms `a` and `b`: for every instance
/// both ran on, [`VIRTUAL_INSTANCES`] virtual instances are sampled and
/// returned as records (instance name suffixed with `#i`) ready for
/// [`performance_profile`].
pub fn effectiveness_test(records: &[ExperimentRecord], a: &str, b: &str, seed: u64) -> Vec<ExperimentRecord> {
    let mut grouped: BTreeMap<(String, usize), (Vec<&ExperimentRecord>, Vec<&ExperimentRecord>)> = BTreeMap::new();
    for r in records {
        let e = grouped.entry(r.key()).or_default();
        if r.algorithm == a {
            e.0.push(r);
        } else if r.algorithm == b {
            e.1.push(r);
        }
    }
    let mut out = Vec::new();
    for (idx, ((instance, k), (ra, rb))) in grouped.into_iter().enumerate() {
        if ra.is_empty() || rb.is_empty() {
            continue;
        }
        let runs_a: Vec<Run> = ra.iter().map(|&r| r.into()).collect();
        let runs_b: Vec<Run> = rb.iter().map(|&r| r.into()).collect();
        let mut g = rng(derive_seed(seed, &[idx as u64]));
        for v in 0..VIRTUAL_INSTANCES {
            let s = effectiveness_test_sample(&runs_a, &runs_b, &mut g);
            let name = format!("{instance}#{v}");
            for (alg, quality, runs, idx) in [(a, s.a_quality, &ra, &s.a_runs), (b, s.b_quality, &rb, &s.b_runs)] {
                let time = idx.iter().map(|&i| runs[i].time).sum();
                let eps = runs[0].epsilon;
                let mut rec = ExperimentRecord::new(name.clone(), alg, k, eps, v as u64, quality.unwrap_or(0), 0.0, time, runs[0].threads, false);
                rec.feasible = quality.is_some();
                out.push(rec);
            }
        }
    }
    out
}

/// Geometric mean; `0` if any value is `0`, `NaN` for an empty slice.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: String,
    pub runs: usize,
    pub instances: usize,
    /// Geometric mean over instances of the arithmetic mean time over seeds.
    /// Timed out runs count with the time limit.
    pub geometric_mean_time: f64,
    /// Geometric mean over instances of the mean feasible objective,
    /// shifted by one to admit zero objectives.
    pub geometric_mean_objective: f64,
    pub infeasible_instances: usize,
}

/// Per-algorithm summary of `records`.
pub fn aggregate(records: &[ExperimentRecord], time_limit: Option<f64>) -> Vec<Summary> {
    let mut by_alg: BTreeMap<&str, BTreeMap<(String, usize), Vec<&ExperimentRecord>>> = BTreeMap::new();
    for r in records {
        by_alg.entry(r.algorithm.as_str()).or_default().entry(r.key()).or_default().push(r);
    }
    by_alg
        .into_iter()
        .map(|(alg, instances)| {
            let mut times = Vec::new();
            let mut objectives = Vec::new();
            let mut infeasible = 0;
            let mut runs = 0;
            for recs in instances.values() {
                runs += recs.len();
                let t: f64 = recs.iter().map(|r| if r.timeout { time_limit.unwrap_or(r.time) } else { r.time }).sum();
                times.push(t / recs.len() as f64);
                let feasible: Vec<f64> = recs.iter().filter(|r| r.feasible).map(|r| r.objective as f64).collect();
                if feasible.is_empty() {
                    infeasible += 1;
                } else {
                    objectives.push(feasible.iter().sum::<f64>() / feasible.len() as f64 + 1.0);
                }
            }
            Summary {
                algorithm: alg.to_string(),
                runs,
                instances: instances.len(),
                geometric_mean_time: geometric_mean(&times),
                geometric_mean_objective: if objectives.is_empty() { f64::NAN } else { geometric_mean(&objectives) - 1.0 },
                infeasible_instances: infeasible,
            }
        })
        .collect()
}
