use std::sync::Arc;

use super::{greedy_policy, lspi, lstdq, LspiOptions, WeightVector};
use crate::basis::{laplacian_basis, BasisSet, MissingStateRule};
use crate::error::{Error, Result};
use crate::mdp::{
    collect_samples, Behavior, DeterministicPolicy, RestartRule, TabularMdp, TransitionSample,
};
use crate::parallel::Parallelism;
use crate::spectral::{build_graph_from_samples, OperatorKind, StateGraph};

/// Supplies sample sets, round 0 first.
pub trait SampleSource {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Samples for `round`, following `policy` when given and acting
    /// uniformly at random otherwise.
    fn draw(&mut self, round: usize, policy: Option<&DeterministicPolicy>) -> Result<Vec<TransitionSample>>;
}

/// Simulates a tabular MDP. Round 0 uses `seed`; round `r` uses
/// `seed + (r << 32)`, keeping rounds of consecutive seeds apart.
#[derive(Debug, Clone)]
pub struct MdpSampler<'a> {
    pub mdp: &'a TabularMdp,
    pub n_steps: usize,
    pub seed: u64,
    pub restart: RestartRule,
}

impl SampleSource for MdpSampler<'_> {
    fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn draw(&mut self, round: usize, policy: Option<&DeterministicPolicy>) -> Result<Vec<TransitionSample>> {
        let behavior = policy.map_or(Behavior::UniformRandom, Behavior::Policy);
        collect_samples(self.mdp, behavior, self.n_steps, self.seed.wrapping_add((round as u64) << 32), self.restart)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpiConfig {
    pub k: usize,
    pub operator: OperatorKind,
    pub discount: f64,
    pub lspi: LspiOptions,
    /// Redraw samples under the current policy and rebuild the basis at
    /// every iteration.
    pub relearn_representation: bool,
    pub missing: MissingStateRule,
    pub parallelism: Parallelism,
}

impl RpiConfig {
    pub fn new(k: usize, operator: OperatorKind, discount: f64) -> Self {
        RpiConfig {
            k,
            operator,
            discount,
            lspi: LspiOptions::default(),
            relearn_representation: false,
            missing: MissingStateRule::default(),
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RpiResult {
    pub weights: WeightVector,
    pub basis: Arc<BasisSet>,
    pub graph: StateGraph,
    pub samples: Vec<TransitionSample>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<WeightVector>,
    pub steps: Vec<f64>,
}

impl RpiResult {
    pub fn policy(&self) -> DeterministicPolicy {
        greedy_policy(&self.weights)
    }
}

fn learn_basis(samples: &[TransitionSample], cfg: &RpiConfig, n_states: usize, n_actions: usize) -> Result<(StateGraph, Arc<BasisSet>)> {
    let graph = build_graph_from_samples(samples)?;
    let k = cfg.k.min(graph.n_vertices());
    if k < cfg.k {
        log::warn!("sample graph has {} vertices; using k = {k} instead of {}", graph.n_vertices(), cfg.k);
    }
    let basis = laplacian_basis(&graph, k, cfg.operator, n_states, n_actions, cfg.missing, cfg.parallelism)?;
    Ok((graph, Arc::new(basis)))
}

/// Learns a Laplacian basis from samples, then runs LSPI on it.
///
/// `k` is reduced to the vertex count of a smaller sample graph.
/// Initial samples follow `initial_policy` (uniformly random when absent).
/// Without relearning this is exactly [`lspi`] on the learned basis.
pub fn rpi(
    source: &mut dyn SampleSource,
    cfg: &RpiConfig,
    initial_policy: Option<&DeterministicPolicy>,
) -> Result<RpiResult> {
    if cfg.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let (ns, na) = (source.n_states(), source.n_actions());
    let samples = source.draw(0, initial_policy)?;
    let (graph, basis) = learn_basis(&samples, cfg, ns, na)?;

    if !cfg.relearn_representation {
        let r = lspi(&samples, Arc::clone(&basis), cfg.discount, &cfg.lspi, None)?;
        return Ok(RpiResult {
            weights: r.weights,
            basis,
            graph,
            samples,
            iterations: r.iterations,
            converged: r.converged,
            history: r.history,
            steps: r.steps,
        });
    }

    let mut state = (samples, graph, basis);
    let mut w = WeightVector::zeros(Arc::clone(&state.2));
    let mut history = Vec::new();
    let mut steps: Vec<f64> = Vec::new();
    let mut best = 0;
    for round in 0..cfg.lspi.max_iterations {
        let policy = greedy_policy(&w);
        if round > 0 {
            let samples = source.draw(round, Some(&policy))?;
            let (graph, basis) = learn_basis(&samples, cfg, ns, na)?;
            state = (samples, graph, basis);
        }
        let next = lstdq(&state.0, &state.2, cfg.discount, &policy, cfg.lspi.solve)?;
        // A rebuilt basis of another size has no comparable weights.
        let step = if next.weights().len() == w.weights().len() {
            (next.weights() - w.weights()).norm()
        } else {
            f64::INFINITY
        };
        history.push(next.clone());
        steps.push(step);
        if step < steps[best] {
            best = steps.len() - 1;
        }
        w = next;
        if step <= cfg.lspi.epsilon {
            break;
        }
    }
    let converged = steps.last().is_some_and(|&s| s <= cfg.lspi.epsilon);
    let weights = if converged { w } else { history[best].clone() };
    let basis = Arc::clone(weights.basis());
    Ok(RpiResult {
        weights,
        basis,
        graph: state.1,
        samples: state.0,
        iterations: history.len(),
        converged,
        history,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{build_chain_mdp, ChainConfig};

    #[test]
    fn fixed_basis_matches_lspi() {
        let mdp = build_chain_mdp(&ChainConfig::benchmark()).unwrap();
        let mut src = MdpSampler { mdp: &mdp, n_steps: 2000, seed: 3, restart: RestartRule::default() };
        let cfg = RpiConfig::new(6, OperatorKind::Combinatorial, 0.8);
        let r = rpi(&mut src, &cfg, None).unwrap();
        let direct = lspi(&r.samples, Arc::clone(&r.basis), 0.8, &cfg.lspi, None).unwrap();
        assert_eq!(r.history, direct.history);
        assert_eq!(r.weights, direct.weights);
        assert_eq!(r.iterations, direct.iterations);
    }

    #[test]
    fn relearning_runs() {
        let mdp = build_chain_mdp(&ChainConfig::benchmark()).unwrap();
        let mut src = MdpSampler { mdp: &mdp, n_steps: 2000, seed: 3, restart: RestartRule::default() };
        let cfg = RpiConfig { relearn_representation: true, ..RpiConfig::new(6, OperatorKind::Normalized, 0.8) };
        let r = rpi(&mut src, &cfg, None).unwrap();
        assert!(r.iterations >= 1);
        assert_eq!(r.weights.basis().n_states(), 50);
    }

    #[test]
    fn zero_k_rejected() {
        let mdp = build_chain_mdp(&ChainConfig::benchmark()).unwrap();
        let mut src = MdpSampler { mdp: &mdp, n_steps: 10, seed: 0, restart: RestartRule::default() };
        assert!(rpi(&mut src, &RpiConfig::new(0, OperatorKind::Normalized, 0.8), None).is_err());
    }
}
