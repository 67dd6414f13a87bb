//! `hgpart` command line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hgpart::bench::{aggregate, effectiveness_test, performance_profile, read_csv, write_csv, Suite};
use hgpart::io;
use hgpart::pipeline::{evaluate, partition, Config, Preset};
use hgpart::{Hypergraph, KWayPartition, Objective};

#[derive(Parser)]
#[command(name = "hgpart", version, about = "Multilevel balanced hypergraph partitioner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// hMetis hypergraph file.
    Hmetis,
    /// Metis graph file; every edge becomes a 2-pin net.
    Metis,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a hypergraph.
    Partition {
        input: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(short, long = "epsilon", default_value_t = 0.03)]
        e: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "default")]
        preset: Preset,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "km1")]
        objective: Objective,
        #[arg(long, value_enum, default_value = "hmetis")]
        format: Format,
        /// Time limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Partition output file; defaults to `<input>.part<k>`.
        #[arg(short)]
        o: Option<PathBuf>,
        /// Also write the metrics report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print metrics of an existing partition.
    Evaluate {
        input: PathBuf,
        partition: PathBuf,
        /// Number of blocks; defaults to the largest block id plus one.
        #[arg(short)]
        k: Option<usize>,
        #[arg(short, long = "epsilon", default_value_t = 0.03)]
        e: f64,
        #[arg(long, value_enum, default_value = "hmetis")]
        format: Format,
    },
    /// Run presets on a list of instances and write CSV results plus a JSON manifest.
    Bench {
        /// File with one instance path per line.
        #[arg(long)]
        instances: PathBuf,
        #[arg(short, value_delimiter = ',', default_value = "2")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "default")]
        presets: Vec<Preset>,
        #[arg(short, long = "epsilon", default_value_t = 0.03)]
        e: f64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        time_limit: Option<f64>,
        /// Run jobs concurrently; timings are then marked as tainted.
        #[arg(long, default_value_t = 1)]
        parallel_jobs: usize,
        #[arg(long, value_enum, default_value = "hmetis")]
        format: Format,
        #[arg(short, default_value = "results.csv")]
        o: PathBuf,
    },
    /// Performance profile table (algorithm,tau,fraction) from CSV results.
    Profile {
        results: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,1.01,1.05,1.1,1.25,1.5,2,5,10")]
        taus: Vec<f64>,
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Effectiveness test between two algorithms; writes virtual instance records.
    Effectiveness {
        results: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short)]
        o: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,1.01,1.05,1.1,1.25,1.5,2,5,10")]
        taus: Vec<f64>,
    },
}

fn read_input(path: &Path, format: Format) -> Result<Hypergraph> {
    let hg = match format {
        Format::Hmetis => io::read_hypergraph(path),
        Format::Metis => io::read_graph(path),
    };
    hg.with_context(|| format!("reading {}", path.display()))
}

fn print_profile(out: &mut impl Write, rows: &[hgpart::bench::ProfileRow]) -> Result<()> {
    writeln!(out, "algorithm,tau,fraction")?;
    for row in rows {
        for (tau, f) in &row.points {
            writeln!(out, "{},{tau},{f}", row.algorithm)?;
        }
        writeln!(out, "{},infeasible,{}", row.algorithm, row.infeasible)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Partition { input, k, e, seed, preset, threads, objective, format, time_limit, o, report } => {
            let hg = read_input(&input, format)?;
            let mut config = Config::new(k, e).with_preset(preset).with_seed(seed).with_objective(objective);
            config.threads = threads;
            config.time_limit = time_limit.map(Duration::from_secs_f64);
            let result = partition(&hg, &config)?;
            let out = o.unwrap_or_else(|| PathBuf::from(format!("{}.part{k}", input.display())));
            io::write_partition_file(&result.partition.parts, &out).with_context(|| format!("writing {}", out.display()))?;
            let r = &result.report;
            writeln!(
                stdout,
                "km1={} cut={} soed={} imbalance={:.6} time={:.3}s -> {}",
                r.km1,
                r.cut,
                r.soed,
                r.imbalance,
                r.timings.total,
                out.display()
            )?;
            if let Some(path) = report {
                fs::write(&path, serde_json::to_string_pretty(r)?)?;
            }
        }
        Command::Evaluate { input, partition, k, e, format } => {
            let hg = read_input(&input, format)?;
            let parts = io::read_partition_file(&partition, hg.num_nodes())?;
            let k = k.unwrap_or_else(|| parts.iter().max().map_or(1, |&b| b as usize + 1));
            if let Some(&b) = parts.iter().find(|&&b| b as usize >= k) {
                bail!("block id {b} out of range for k = {k}");
            }
            let report = evaluate(&hg, &KWayPartition::new(k, e, parts), Objective::Km1);
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Bench { instances, k, seeds, presets, e, threads, time_limit, parallel_jobs, format, o } => {
            let list = fs::read_to_string(&instances).with_context(|| format!("reading {}", instances.display()))?;
            let base = instances.parent().unwrap_or(Path::new("."));
            let mut names = Vec::new();
            let mut graphs = Vec::new();
            for line in list.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
                let path = base.join(line);
                graphs.push((line.to_string(), read_input(&path, format)?));
                names.push(line.to_string());
            }
            let suite = Suite {
                presets,
                ks: k,
                seeds,
                epsilon: e,
                objective: Objective::Km1,
                threads,
                time_limit: time_limit.map(Duration::from_secs_f64),
                parallel_jobs,
            };
            let records = suite.run(&graphs);
            write_csv(&records, &o)?;
            let manifest = suite.manifest(&names, records.len());
            fs::write(o.with_extension("json"), serde_json::to_string_pretty(&manifest)?)?;
            for s in aggregate(&records, time_limit) {
                writeln!(
                    stdout,
                    "{}: {} runs, geomean time {:.4}s, geomean objective {:.2}, infeasible instances {}",
                    s.algorithm, s.runs, s.geometric_mean_time, s.geometric_mean_objective, s.infeasible_instances
                )?;
            }
        }
        Command::Profile { results, taus, time_limit } => {
            let records = read_csv(&results)?;
            print_profile(&mut stdout, &performance_profile(&records, &taus))?;
            for s in aggregate(&records, time_limit) {
                writeln!(stdout, "# {}: geomean time {:.4}s over {} instances", s.algorithm, s.geometric_mean_time, s.instances)?;
            }
        }
        Command::Effectiveness { results, a, b, seed, o, taus } => {
            let records = read_csv(&results)?;
            let virtual_records = effectiveness_test(&records, &a, &b, seed);
            if virtual_records.is_empty() {
                bail!("no instance has runs of both '{a}' and '{b}'");
            }
            if let Some(path) = o {
                write_csv(&virtual_records, path)?;
            }
            print_profile(&mut stdout, &performance_profile(&virtual_records, &taus))?;
        }
    }
    Ok(())
}
