use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rpi_core::experiment::{
    load_config, run_basis_command, run_chain_experiment, run_gridworld_experiment, table1,
    BasisChoice, Environment, ExperimentConfig, RunReport,
};
use rpi_core::mdp::NamedLayout;
use rpi_core::{Error, Parallelism, Result};

#[derive(Parser)]
#[command(name = "rpi", version, about = "Representation policy iteration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded runs on the 50-state chain.
    Chain(Opts),
    /// Seeded runs on a gridworld; writes value grids and PGM heightmaps.
    Gridworld(Opts),
    /// Learns a sample graph and writes its edge list, basis and eigenfunctions.
    Basis(Opts),
    /// All nine chain basis comparisons.
    Table1(Opts),
}

#[derive(Args)]
struct Opts {
    /// chain, closed-chain, two-room, four-room, five-room or obstacle.
    #[arg(long)]
    env: Option<String>,
    #[arg(long, value_enum)]
    basis: Option<BasisChoice>,
    /// Eigenfunctions, polynomial degree, or RBF feature count.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// JSON file with ExperimentConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Resample and rebuild the basis at every iteration.
    #[arg(long)]
    relearn: bool,
    /// Disable data-parallel execution.
    #[arg(long)]
    sequential: bool,
}

impl Opts {
    fn resolve(&self, default_env: Environment, default_k: Option<usize>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::for_env(default_env),
        };
        if self.config.is_none() {
            cfg.k = default_k;
        }
        if let Some(e) = &self.env {
            cfg.env = e.parse()?;
        }
        cfg.basis = self.basis.or(cfg.basis);
        cfg.k = self.k.or(cfg.k);
        cfg.gamma = self.gamma.or(cfg.gamma);
        cfg.samples = self.samples.or(cfg.samples);
        cfg.runs = self.runs.unwrap_or(cfg.runs);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.epsilon = self.epsilon.unwrap_or(cfg.epsilon);
        cfg.max_iter = self.max_iter.unwrap_or(cfg.max_iter);
        cfg.out = self.out.clone().or(cfg.out).or_else(|| Some(PathBuf::from("results")));
        cfg.relearn |= self.relearn;
        if self.sequential {
            cfg.parallelism = Parallelism::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(report: &RunReport) {
    for r in &report.runs {
        let mut line = format!(
            "run {} seed {}: iterations {} errors {}{}",
            r.run,
            r.seed,
            r.iterations,
            r.errors,
            if r.converged { "" } else { " (not converged)" }
        );
        if let Some(p) = r.pearson {
            line.push_str(&format!(" pearson {p:.4}"));
        }
        if !r.full_coverage {
            line.push_str(&format!(" [visited {} states, k = {}]", r.visited_states, r.k_used));
        }
        println!("{line}");
    }
    println!("mean iterations {} mean errors {}", report.mean_iterations, report.mean_errors);
    if let Some(p) = report.mean_pearson() {
        println!("mean pearson {p:.4}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Chain(o) => {
            let cfg = o.resolve(Environment::Chain, None)?;
            print_report(&run_chain_experiment(&cfg)?);
        }
        Command::Gridworld(o) => {
            let cfg = o.resolve(Environment::Grid(NamedLayout::TwoRoom), None)?;
            print_report(&run_gridworld_experiment(&cfg)?);
        }
        Command::Basis(o) => {
            let cfg = o.resolve(Environment::Chain, Some(4))?;
            let g = run_basis_command(&cfg)?;
            println!(
                "graph: {} vertices, {} edges, {} dropped states",
                g.n_vertices(),
                g.n_edges(),
                g.dropped_states().len()
            );
        }
        Command::Table1(o) => {
            let cfg = o.resolve(Environment::Chain, None)?;
            if !cfg.env.is_chain() {
                return Err(Error::Config("table1 runs on the chain only".into()));
            }
            println!("{:<16} {:>10} {:>10}", "method", "#trials", "errors");
            for row in table1(&cfg)? {
                println!("{:<16} {:>10} {:>10}", row.method, row.mean_iterations, row.mean_errors);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
