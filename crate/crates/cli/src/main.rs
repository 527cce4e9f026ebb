//! Command-line entry point: population generation, single-scenario
//! simulation, calibration, R0 estimation, sweeps, and report tables.
//!
//! All numeric behavior lives in `episim-core`; every subcommand is a thin
//! adapter. Exit codes: 0 success, 1 runtime failure, 2 malformed
//! configuration or usage.

mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use episim_core::analysis::{calibrate_grid, estimate_r0};
use episim_core::config::{load_sweep_plan, SimConfig};
use episim_core::engine::SimSetup;
use episim_core::population::{
    generate_population, layer_degree_summary, write_agent_table, Layer,
};
use episim_core::rng::derive_seed;
use episim_core::sweep::{execute_sweep, expand_plan};

#[derive(Parser)]
#[command(name = "episim", version, about = "Layered-network epidemic policy simulator")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print progress notes to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Simulation config file (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic population and write the agent table and
    /// layered edge list.
    GenPop {
        #[command(flatten)]
        config: ConfigArg,
        /// Output directory (overridden by EPISIM_OUT).
        #[arg(long)]
        out: PathBuf,
        /// Population seed override (overridden by EPISIM_SEED).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run replications of one scenario and persist the per-day series.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Lever spec, e.g. "mask_wearing=++,mask_efficacy=++".
        #[arg(long)]
        levers: Option<String>,
        /// Named policy combination from the scenario library.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Replication count (default: config value).
        #[arg(long)]
        reps: Option<u32>,
        /// Master seed override (overridden by EPISIM_SEED).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Grid-search calibration against the configured target series.
    Calibrate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate R0 from index-agent runs on the configured population.
    EstimateR0 {
        #[command(flatten)]
        config: ConfigArg,
        /// Base transmission rate override.
        #[arg(long)]
        beta: Option<f64>,
        /// Number of index runs.
        #[arg(long, default_value_t = 1000)]
        runs: u32,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Execute a sweep plan (resumable; exit 0 only when complete).
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Sweep plan file (TOML).
        #[arg(long)]
        plan: PathBuf,
    },
    /// Summarize a results directory against a baseline scenario.
    Report {
        /// Results directory produced by `sweep` or `simulate`.
        #[arg(long)]
        results: PathBuf,
        /// Baseline scenario id or label.
        #[arg(long)]
        baseline: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: could not configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage = err
                .downcast_ref::<episim_core::Error>()
                .map(|e| e.is_usage())
                .unwrap_or(false);
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("EPISIM_SEED").ok().and_then(|s| s.parse().ok())
}

fn env_out() -> Option<PathBuf> {
    std::env::var("EPISIM_OUT").ok().map(PathBuf::from)
}

fn run(cli: Cli) -> Result<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::GenPop { config, out, seed } => {
            let out = env_out().unwrap_or(out);
            let mut loaded = SimConfig::load(&config.config)?;
            if let Some(seed) = env_seed().or(seed) {
                loaded.population.rng_seed = seed;
            }
            let (agents, net) = generate_population(&loaded.population)?;
            fs::create_dir_all(&out)?;
            let agent_file = fs::File::create(out.join("agents.csv"))?;
            write_agent_table(&agents, agent_file)?;
            let mut edges = Vec::new();
            net.write_edge_list(&mut edges)?;
            fs::write(out.join("network.csv"), edges)?;
            for layer in Layer::ALL {
                let summary = layer_degree_summary(&net, layer.name())?;
                println!(
                    "{}: {} edges, mean degree {:.3}, variance {:.3}, max {}",
                    layer.name(),
                    net.edge_count(layer),
                    summary.mean,
                    summary.variance,
                    summary.max
                );
            }
            println!("wrote {} agents to {}", agents.len(), out.display());
            Ok(())
        }
        Command::Simulate { config, levers, policy, out, reps, seed } => {
            let out = env_out().unwrap_or(out);
            let loaded = SimConfig::load(&config.config)?;
            let mut scenario = loaded.scenario.clone();
            let mut params = loaded.params.clone();
            let mut label = "baseline".to_string();
            if let Some(policy) = &policy {
                let library = loaded.require_library()?;
                library.apply_selected(policy, &mut scenario, &mut params)?;
                label = policy.clone();
            }
            if let Some(spec) = &levers {
                let library = loaded.require_library()?;
                let pairs = episim_core::scenarios::parse_lever_spec(spec)?;
                for (lever, level) in &pairs {
                    library.apply(lever, level, &mut scenario, &mut params)?;
                }
                label = spec.clone();
            }
            let master_seed = env_seed().or(seed).unwrap_or(loaded.run.master_seed);
            let replications = reps.unwrap_or(loaded.run.replications);
            let scenario_id = episim_core::sweep::content_hash(&scenario, &params);

            if verbose {
                eprintln!("generating population ({} agents)", loaded.population.n_agents);
            }
            let (agents, net) = generate_population(&loaded.population)?;
            let setup = SimSetup {
                agents: &agents,
                net: &net,
                burn_in: &loaded.burn_in,
                waning: &loaded.waning,
                horizon: loaded.run.horizon,
            };
            fs::create_dir_all(&out)?;
            let mut peak = 0u32;
            let mut cumulative = 0u64;
            for rep in 0..replications {
                let series =
                    setup.run(&scenario, &params, derive_seed(master_seed, &scenario_id, rep as u64))?;
                peak = peak.max(series.peak_infectious());
                cumulative += series.cumulative_new_infections();
                let file = fs::File::create(out.join(format!("rep_{rep:05}.csv")))?;
                series.write_csv(file)?;
                if verbose {
                    eprintln!("replication {rep}: done");
                }
            }
            println!(
                "scenario {label} ({scenario_id}): {replications} replications, mean cumulative infections {:.1}, peak infectious {peak}",
                cumulative as f64 / replications as f64
            );
            println!("series written to {}", out.display());
            Ok(())
        }
        Command::Calibrate { config, out } => {
            let out = env_out().unwrap_or(out);
            let loaded = SimConfig::load(&config.config)?;
            let (axes, reps_per_point, seed) = loaded
                .calibrate
                .clone()
                .ok_or_else(|| episim_core::Error::config("config has no [calibrate] section"))?;
            let target = loaded
                .target
                .as_ref()
                .ok_or_else(|| episim_core::Error::config("config has no calibration_target"))?;
            let (agents, net) = generate_population(&loaded.population)?;
            let setup = SimSetup {
                agents: &agents,
                net: &net,
                burn_in: &loaded.burn_in,
                waning: &loaded.waning,
                horizon: loaded.run.horizon,
            };
            let board = calibrate_grid(
                &axes,
                &setup,
                &loaded.scenario,
                &loaded.params,
                target,
                reps_per_point,
                seed,
            )?;
            fs::create_dir_all(&out)?;
            let mut text = String::from("rank,scenario_id,mse");
            for axis in &axes {
                text.push(',');
                text.push_str(axis.param.name());
            }
            text.push('\n');
            for (rank, point) in board.iter().enumerate() {
                text.push_str(&format!("{},{},{}", rank + 1, point.scenario_id, point.mse));
                for (_, value) in &point.values {
                    text.push_str(&format!(",{value}"));
                }
                text.push('\n');
            }
            fs::write(out.join("leaderboard.csv"), text)?;
            let best = &board[0];
            println!("best point: {} (mse {:.2})", best.scenario_id, best.mse);
            for (param, value) in &best.values {
                println!("  {} = {}", param.name(), value);
            }
            println!("full leaderboard at {}", out.join("leaderboard.csv").display());
            Ok(())
        }
        Command::EstimateR0 { config, beta, runs, seed } => {
            let loaded = SimConfig::load(&config.config)?;
            let mut params = loaded.params.clone();
            if let Some(beta) = beta {
                params.base_transmission_rate = beta;
            }
            let seed = env_seed().or(seed).unwrap_or(loaded.run.master_seed);
            let (agents, net) = generate_population(&loaded.population)?;
            let estimate = estimate_r0(&agents, &net, &params, runs, seed)?;
            println!(
                "R0 estimate {:.3} (beta {}, {} index runs, {} secondary / {} tertiary cases)",
                estimate.estimate,
                params.base_transmission_rate,
                estimate.index_runs,
                estimate.secondary_cases,
                estimate.tertiary_cases
            );
            Ok(())
        }
        Command::Sweep { config, plan } => {
            let loaded = SimConfig::load(&config.config)?;
            let mut plan = load_sweep_plan(&plan)?;
            if let Some(out) = env_out() {
                plan.output = out;
            }
            let library = loaded.require_library()?;
            let resolved = expand_plan(&plan, library, &loaded.scenario, &loaded.params)?;
            if verbose {
                eprintln!(
                    "sweep: {} scenarios x {} replications",
                    resolved.len(),
                    plan.replications
                );
            }
            let (agents, net) = generate_population(&loaded.population)?;
            let setup = SimSetup {
                agents: &agents,
                net: &net,
                burn_in: &loaded.burn_in,
                waning: &loaded.waning,
                horizon: loaded.run.horizon,
            };
            let report = execute_sweep(&plan, &resolved, &setup)?;
            println!(
                "sweep complete: {} scenarios x {} replications ({} run, {} resumed)",
                report.scenarios,
                report.replications_per_scenario,
                report.executed,
                report.skipped
            );
            Ok(())
        }
        Command::Report { results, baseline, out } => {
            let out = env_out().unwrap_or(out);
            report::write_report(&results, &baseline, &out).context("report failed")?;
            Ok(())
        }
    }
}
