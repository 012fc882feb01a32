use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use oim::diffusion::write_weighted_edge_list;
use oim::graph::write_edge_list;
use oim::harness::{
    build_instance, estimate_instance_reachability, run_bandit_experiment, run_comparison,
    verify_surrogate, write_comparison_csv, write_report_csv, write_summary, write_trace_csv,
    AlgorithmKind, ExperimentConfig, ExperimentResult, HarnessError, Overrides, RunSummary,
};

/// Model-independent online influence maximization experiments.
#[derive(Debug, Parser)]
#[command(name = "oim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the configured graph(s) and write edge and weight lists.
    GenerateGraph(Common),
    /// Estimate the pairwise reachability table by simulation.
    EstimateReachability(Common),
    /// Compare the surrogate with Monte-Carlo spread for each configured K.
    VerifySurrogate(Common),
    /// Run one bandit algorithm and write its regret traces.
    RunBandit(Common),
    /// Run several algorithms on the same instances.
    Compare(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Algorithm (for compare: comma-separated list).
    #[arg(long)]
    algo: Option<String>,
    /// Seed-set cardinality.
    #[arg(long)]
    k: Option<usize>,
    /// Number of bandit rounds.
    #[arg(long)]
    rounds: Option<usize>,
}

fn parse_algos(s: &str) -> Result<Vec<AlgorithmKind>, HarnessError> {
    s.split(',')
        .map(|a| a.trim().parse().map_err(HarnessError::Config))
        .collect()
}

fn load(common: &Common, multi_algo: bool) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut algorithm = None;
    if let Some(a) = &common.algo {
        let algos = parse_algos(a)?;
        if multi_algo {
            config.bandit.compare = algos;
        } else if let [one] = algos[..] {
            algorithm = Some(one);
        } else {
            return Err(HarnessError::Config("--algo takes one algorithm here".into()));
        }
    }
    config.apply_overrides(&Overrides {
        seed: common.seed,
        k: common.k,
        rounds: common.rounds,
        algorithm,
    })?;
    Ok(config)
}

fn out_dir(common: &Common) -> Result<&Path, HarnessError> {
    fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

fn create(path: PathBuf) -> Result<BufWriter<File>, HarnessError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_traces(dir: &Path, result: &ExperimentResult) -> Result<(), HarnessError> {
    for run in &result.runs {
        let name = format!("trace_{}_{}.csv", result.algorithm, run.instance);
        write_trace_csv(&run.trace, create(dir.join(name))?)?;
    }
    Ok(())
}

fn result_json(r: &ExperimentResult) -> serde_json::Value {
    json!({
        "algorithm": r.algorithm,
        "k": r.k,
        "rounds": r.rounds,
        "mean_final_regret": r.mean_final_regret(),
        "mean_final_per_step_reward": r.mean_per_step_reward().last().copied(),
        "runs": r.runs,
    })
}

fn run(command: &Command) -> Result<String, HarnessError> {
    match command {
        Command::GenerateGraph(c) => {
            let config = load(c, false)?;
            let dir = out_dir(c)?;
            let mut graphs = Vec::new();
            for i in 0..config.bandit.num_instances {
                let inst = build_instance(&config, i)?;
                fs::write(dir.join(format!("graph_{i}.txt")), write_edge_list(&inst.graph))?;
                fs::write(
                    dir.join(format!("weights_{i}.txt")),
                    write_weighted_edge_list(&inst.graph, &inst.params),
                )?;
                graphs.push(json!({
                    "instance": i,
                    "nodes": inst.graph.node_count(),
                    "edges": inst.graph.edge_count(),
                    "density": inst.graph.density(),
                }));
            }
            write_summary(dir, &RunSummary::new("generate-graph", &config, graphs))?;
            Ok(format!("wrote {} graph(s) to {}", config.bandit.num_instances, dir.display()))
        }
        Command::EstimateReachability(c) => {
            let config = load(c, false)?;
            let dir = out_dir(c)?;
            let mut tables = Vec::new();
            for i in 0..config.bandit.num_instances {
                let inst = build_instance(&config, i)?;
                let p = estimate_instance_reachability(&config, &inst, i)?;
                fs::write(dir.join(format!("reachability_{i}.csv")), p.to_csv())?;
                let observed = (0..p.node_count()).filter(|&u| p.is_observed(u)).count();
                tables.push(json!({
                    "instance": i,
                    "nodes": p.node_count(),
                    "observed_sources": observed,
                }));
            }
            write_summary(dir, &RunSummary::new("estimate-reachability", &config, tables))?;
            Ok(format!("wrote reachability table(s) to {}", dir.display()))
        }
        Command::VerifySurrogate(c) => {
            let config = load(c, false)?;
            let dir = out_dir(c)?;
            let report = verify_surrogate(&config)?;
            write_report_csv(&report, create(dir.join("surrogate_report.csv"))?)?;
            write_summary(dir, &RunSummary::new("verify-surrogate", &config, &report))?;
            Ok(format!("wrote surrogate report for {} K value(s)", report.rows.len()))
        }
        Command::RunBandit(c) => {
            let config = load(c, false)?;
            let dir = out_dir(c)?;
            let result = run_bandit_experiment(&config)?;
            write_traces(dir, &result)?;
            write_summary(dir, &RunSummary::new("run-bandit", &config, result_json(&result)))?;
            Ok(format!(
                "{}: mean R(T) = {:.3} over {} instance(s)",
                result.algorithm,
                result.mean_final_regret(),
                result.runs.len()
            ))
        }
        Command::Compare(c) => {
            let config = load(c, true)?;
            let dir = out_dir(c)?;
            let results = run_comparison(&config)?;
            for r in &results {
                write_traces(dir, r)?;
            }
            write_comparison_csv(&results, create(dir.join("compare.csv"))?)?;
            let json: Vec<_> = results.iter().map(result_json).collect();
            write_summary(dir, &RunSummary::new("compare", &config, json))?;
            Ok(results
                .iter()
                .map(|r| format!("{}: mean R(T) = {:.3}", r.algorithm, r.mean_final_regret()))
                .collect::<Vec<_>>()
                .join("\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli.command) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
