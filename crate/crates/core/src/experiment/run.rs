use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{BasisChoice, Environment, ExperimentConfig};
use super::output::{pearson, write_csv, write_grid_csv, write_pgm};
use crate::basis::{polynomial_basis_with, rbf_basis_with, tabular_basis, BasisSet};
use crate::error::{Error, Result};
use crate::lspi::{greedy_policy, lspi, rpi, LspiOptions, MdpSampler, RpiConfig, WeightVector};
use crate::mdp::{
    build_chain_mdp, build_gridworld, collect_samples, Behavior, ChainConfig, Gridworld,
    OptimalSolution, RestartRule, TabularMdp,
};
use crate::parallel::Parallelism;
use crate::spectral::{build_graph_from_samples, laplacian_eigensystem, EigenSystem, OperatorKind, StateGraph};

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// LSTDQ invocations.
    pub iterations: usize,
    pub converged: bool,
    /// States where the learned policy is strictly suboptimal.
    pub errors: usize,
    pub visited_states: usize,
    /// Every state of the environment appeared in the samples.
    pub full_coverage: bool,
    /// Features per action block actually used.
    pub k_used: usize,
    /// Correlation of approximate and exact values over non-goal states
    /// (gridworld runs only).
    pub pearson: Option<f64>,
}

/// Per-iteration greedy values and policies of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub values: Vec<Vec<f64>>,
    pub policies: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub traces: Vec<RunTrace>,
    /// The final weights of each run.
    pub weights: Vec<WeightVector>,
    pub exact_values: Vec<f64>,
    pub mean_iterations: f64,
    pub mean_errors: f64,
}

impl RunReport {
    fn new(config: ExperimentConfig, outcomes: Vec<RunOutcome>, exact_values: Vec<f64>) -> Self {
        let n = outcomes.len() as f64;
        let mean_iterations = outcomes.iter().map(|o| o.record.iterations as f64).sum::<f64>() / n;
        let mean_errors = outcomes.iter().map(|o| o.record.errors as f64).sum::<f64>() / n;
        let mut runs = Vec::new();
        let mut traces = Vec::new();
        let mut weights = Vec::new();
        for o in outcomes {
            runs.push(o.record);
            traces.push(o.trace);
            weights.push(o.weights);
        }
        RunReport {
            config,
            runs,
            traces,
            weights,
            exact_values,
            mean_iterations,
            mean_errors,
        }
    }

    pub fn mean_pearson(&self) -> Option<f64> {
        let v: Option<Vec<f64>> = self.runs.iter().map(|r| r.pearson).collect();
        v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Per-run rows followed by a `mean` row.
    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let with_pearson = self.runs.iter().any(|r| r.pearson.is_some());
        let mut header = vec![
            "run", "seed", "iterations", "errors", "converged", "visited_states", "full_coverage", "k_used",
        ];
        if with_pearson {
            header.push("pearson");
        }
        let mut rows: Vec<Vec<String>> = self
            .runs
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.run.to_string(),
                    r.seed.to_string(),
                    r.iterations.to_string(),
                    r.errors.to_string(),
                    r.converged.to_string(),
                    r.visited_states.to_string(),
                    r.full_coverage.to_string(),
                    r.k_used.to_string(),
                ];
                if with_pearson {
                    row.push(r.pearson.map_or(String::new(), |p| p.to_string()));
                }
                row
            })
            .collect();
        let mut mean = vec![
            "mean".to_string(),
            String::new(),
            self.mean_iterations.to_string(),
            self.mean_errors.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ];
        if with_pearson {
            mean.push(self.mean_pearson().map_or(String::new(), |p| p.to_string()));
        }
        rows.push(mean);
        write_csv(path, &header, rows)
    }
}

struct RunOutcome {
    record: RunRecord,
    trace: RunTrace,
    weights: WeightVector,
}

fn chain_mdp(cfg: &ExperimentConfig) -> Result<TabularMdp> {
    let mut chain = ChainConfig::benchmark()
        .success_prob(cfg.success_prob)
        .reward_timing(cfg.reward_timing)
        .closed(cfg.env == Environment::ClosedChain);
    chain.discount = cfg.discount();
    build_chain_mdp(&chain)
}

fn restart_rule(cfg: &ExperimentConfig) -> RestartRule {
    if cfg.env.is_chain() {
        RestartRule::default()
    } else {
        RestartRule {
            episode_cap: cfg.episode_cap,
            ..RestartRule::default()
        }
    }
}

fn fixed_basis(cfg: &ExperimentConfig, n_states: usize, n_actions: usize) -> BasisSet {
    let k = cfg.k_value();
    match cfg.basis_choice() {
        BasisChoice::Poly => polynomial_basis_with(n_states, k, n_actions, cfg.poly_encoding),
        BasisChoice::Rbf => rbf_basis_with(n_states, k - 1, n_actions, cfg.rbf_width),
        _ => tabular_basis(n_states, n_actions),
    }
}

fn run_once(mdp: &TabularMdp, cfg: &ExperimentConfig, run: usize, opt: &OptimalSolution) -> Result<RunOutcome> {
    let seed = cfg.run_seed(run);
    let lspi_opts = LspiOptions {
        epsilon: cfg.epsilon,
        max_iterations: cfg.max_iter,
        solve: cfg.solve_method(),
    };
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let (weights, history, iterations, converged, visited) = match cfg.basis_choice().operator() {
        Some(operator) => {
            let rcfg = RpiConfig {
                lspi: lspi_opts,
                relearn_representation: cfg.relearn,
                missing: cfg.missing_states,
                parallelism: cfg.parallelism,
                ..RpiConfig::new(cfg.k_value(), operator, cfg.discount())
            };
            let mut source = MdpSampler {
                mdp,
                n_steps: cfg.n_samples(),
                seed,
                restart: restart_rule(cfg),
            };
            let r = rpi(&mut source, &rcfg, None)?;
            let visited = r.graph.n_vertices() + r.graph.dropped_states().len();
            (r.weights, r.history, r.iterations, r.converged, visited)
        }
        None => {
            let samples = collect_samples(mdp, Behavior::UniformRandom, cfg.n_samples(), seed, restart_rule(cfg))?;
            let mut seen = vec![false; ns];
            for s in &samples {
                seen[s.state] = true;
                seen[s.next_state] = true;
            }
            let basis = Arc::new(fixed_basis(cfg, ns, na));
            let r = lspi(&samples, basis, cfg.discount(), &lspi_opts, None)?;
            (r.weights, r.history, r.iterations, r.converged, seen.iter().filter(|&&x| x).count())
        }
    };
    if visited < ns {
        log::warn!("run {run}: samples cover {visited} of {ns} states");
    }
    let trace = RunTrace {
        values: history.iter().map(WeightVector::state_values).collect(),
        policies: history.iter().map(|w| greedy_policy(w).actions().to_vec()).collect(),
    };
    let policy = greedy_policy(&weights);
    let record = RunRecord {
        run,
        seed,
        iterations,
        converged,
        errors: opt.error_count(&policy),
        visited_states: visited,
        full_coverage: visited == ns,
        k_used: weights.basis().k(),
        pearson: None,
    };
    Ok(RunOutcome { record, trace, weights })
}

fn run_all(mdp: &TabularMdp, cfg: &ExperimentConfig, opt: &OptimalSolution) -> Result<Vec<RunOutcome>> {
    let par = cfg.parallelism;
    par.map(cfg.runs, |i| run_once(mdp, cfg, i, opt)).into_iter().collect()
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn run_dir(out: &Path, run: usize) -> Result<PathBuf> {
    let dir = out.join(format!("run_{run}"));
    create_dir(&dir)?;
    Ok(dir)
}

/// Seeded chain runs. With an output directory, writes
/// `run_<i>/value_function_iter_<t>.csv`, `run_<i>/policy_iter_<t>.csv` and
/// `summary.csv`. States are numbered from 1.
pub fn run_chain_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    if !cfg.env.is_chain() {
        return Err(Error::Config(format!("'{}' is not a chain environment", cfg.env)));
    }
    let mdp = chain_mdp(cfg)?;
    let opt = OptimalSolution::solve(&mdp)?;
    let outcomes = run_all(&mdp, cfg, &opt)?;
    let report = RunReport::new(cfg.clone(), outcomes, opt.values.values.clone());
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        for (r, trace) in report.runs.iter().zip(&report.traces) {
            let dir = run_dir(out, r.run)?;
            for (t, (values, policy)) in trace.values.iter().zip(&trace.policies).enumerate() {
                write_csv(
                    &dir.join(format!("value_function_iter_{}.csv", t + 1)),
                    &["state", "value"],
                    values.iter().enumerate().map(|(s, v)| [(s + 1).to_string(), v.to_string()]),
                )?;
                write_csv(
                    &dir.join(format!("policy_iter_{}.csv", t + 1)),
                    &["state", "action"],
                    policy.iter().enumerate().map(|(s, a)| [(s + 1).to_string(), a.to_string()]),
                )?;
            }
        }
        report.write_summary(&out.join("summary.csv"))?;
    }
    Ok(report)
}

fn gridworld(cfg: &ExperimentConfig) -> Result<Gridworld> {
    match cfg.env {
        Environment::Grid(layout) => build_gridworld(layout.layout(), cfg.discount()),
        other => Err(Error::Config(format!("'{other}' is not a gridworld"))),
    }
}

/// Seeded gridworld runs. With an output directory, writes the exact
/// optimal values (`value_exact.csv`, `.pgm`), each run's approximation
/// (`run_<i>/value_approx.csv`, `.pgm`) and `summary.csv`.
pub fn run_gridworld_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let world = gridworld(cfg)?;
    let opt = OptimalSolution::solve(&world.mdp)?;
    let mut outcomes = run_all(&world.mdp, cfg, &opt)?;
    let exact = opt.values.values.clone();
    let keep: Vec<usize> = (0..world.mdp.n_states()).filter(|&s| !world.mdp.is_absorbing(s)).collect();
    let exact_kept: Vec<f64> = keep.iter().map(|&s| exact[s]).collect();
    for o in &mut outcomes {
        let approx = o.weights.state_values();
        let approx_kept: Vec<f64> = keep.iter().map(|&s| approx[s]).collect();
        o.record.pearson = Some(pearson(&approx_kept, &exact_kept));
    }
    let report = RunReport::new(cfg.clone(), outcomes, exact);
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        let width = world.layout.width;
        let exact_grid = world.to_grid(&report.exact_values);
        write_grid_csv(&out.join("value_exact.csv"), &exact_grid, width)?;
        write_pgm(&out.join("value_exact.pgm"), &exact_grid, width)?;
        for (r, w) in report.runs.iter().zip(&report.weights) {
            let dir = run_dir(out, r.run)?;
            let grid = world.to_grid(&w.state_values());
            write_grid_csv(&dir.join("value_approx.csv"), &grid, width)?;
            write_pgm(&dir.join("value_approx.pgm"), &grid, width)?;
        }
        report.write_summary(&out.join("summary.csv"))?;
    }
    Ok(report)
}

/// Writes `eigenfunction_<i>.csv` (`state,value`, 1-based states) for
/// the `k` lowest eigenfunctions, plus `eigenvalues.csv`.
pub fn emit_basis_figures(
    graph: &StateGraph,
    kind: OperatorKind,
    k: usize,
    out_dir: &Path,
    par: Parallelism,
) -> Result<EigenSystem> {
    let sys = laplacian_eigensystem(graph, kind, k, par)?;
    create_dir(out_dir)?;
    for j in 0..sys.k() {
        write_csv(
            &out_dir.join(format!("eigenfunction_{}.csv", j + 1)),
            &["state", "value"],
            graph
                .vertex_labels()
                .iter()
                .zip(sys.eigenvectors.column(j).iter())
                .map(|(s, v)| [(s + 1).to_string(), v.to_string()]),
        )?;
    }
    write_csv(
        &out_dir.join("eigenvalues.csv"),
        &["index", "eigenvalue"],
        sys.eigenvalues
            .iter()
            .enumerate()
            .map(|(j, v)| [(j + 1).to_string(), v.to_string()]),
    )?;
    Ok(sys)
}

/// Learns a sample graph for the configured environment and writes its
/// edge list (`graph.txt`), the state-feature matrix (`basis.csv`) and, for
/// Laplacian bases, the eigenfunction figures.
pub fn run_basis_command(cfg: &ExperimentConfig) -> Result<StateGraph> {
    cfg.validate()?;
    let mdp = if cfg.env.is_chain() { chain_mdp(cfg)? } else { gridworld(cfg)?.mdp };
    let samples = collect_samples(&mdp, Behavior::UniformRandom, cfg.n_samples(), cfg.seed, restart_rule(cfg))?;
    let graph = build_graph_from_samples(&samples)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    create_dir(&out)?;
    graph.save_edge_list(&out.join("graph.txt"))?;
    let basis = match cfg.basis_choice().operator() {
        Some(kind) => {
            let k = cfg.k_value().min(graph.n_vertices());
            emit_basis_figures(&graph, kind, k, &out, cfg.parallelism)?;
            crate::basis::laplacian_basis(&graph, k, kind, mdp.n_states(), mdp.n_actions(), cfg.missing_states, cfg.parallelism)?
        }
        None => fixed_basis(cfg, mdp.n_states(), mdp.n_actions()),
    };
    basis.save_csv(&out.join("basis.csv"))?;
    Ok(graph)
}

/// `(label, basis, k)` for each comparison row.
pub const TABLE1_ROWS: [(&str, BasisChoice, usize); 9] = [
    ("RPI (5)", BasisChoice::LaplacianComb, 5),
    ("RPI (15)", BasisChoice::LaplacianComb, 15),
    ("RPI (25)", BasisChoice::LaplacianComb, 25),
    ("LSPI RBF (6)", BasisChoice::Rbf, 6),
    ("LSPI RBF (14)", BasisChoice::Rbf, 14),
    ("LSPI RBF (26)", BasisChoice::Rbf, 26),
    ("LSPI Poly (5)", BasisChoice::Poly, 5),
    ("LSPI Poly (15)", BasisChoice::Poly, 15),
    ("LSPI Poly (25)", BasisChoice::Poly, 25),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub method: String,
    pub basis: BasisChoice,
    pub k: usize,
    pub mean_iterations: f64,
    pub mean_errors: f64,
}

/// All nine chain comparisons under one configuration; writes `table1.csv`
/// when an output directory is set.
pub fn table1(cfg: &ExperimentConfig) -> Result<Vec<Table1Row>> {
    let mut rows = Vec::with_capacity(TABLE1_ROWS.len());
    for (label, basis, k) in TABLE1_ROWS {
        let run_cfg = ExperimentConfig {
            basis: Some(basis),
            k: Some(k),
            out: None,
            ..cfg.clone()
        };
        let report = run_chain_experiment(&run_cfg)?;
        rows.push(Table1Row {
            method: label.to_string(),
            basis,
            k,
            mean_iterations: report.mean_iterations,
            mean_errors: report.mean_errors,
        });
    }
    if let Some(out) = &cfg.out {
        create_dir(out)?;
        write_csv(
            &out.join("table1.csv"),
            &["method", "basis", "k", "mean_iterations", "mean_errors"],
            rows.iter().map(|r| {
                [
                    r.method.clone(),
                    r.basis.name().to_string(),
                    r.k.to_string(),
                    r.mean_iterations.to_string(),
                    r.mean_errors.to_string(),
                ]
            }),
        )?;
    }
    Ok(rows)
}
