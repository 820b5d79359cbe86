use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::lstdq::min_norm_solve;
use super::WeightVector;
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::mdp::{ActionId, DeterministicPolicy, StateId, TabularMdp};

/// Weights `mu(s, a)` over state-action pairs, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    n_actions: usize,
    weights: Vec<f64>,
}

impl SamplingDistribution {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let n = n_states * n_actions;
        SamplingDistribution {
            n_actions,
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// `weights[s * n_actions + a]`, nonnegative and normalised to 1e-12.
    pub fn new(weights: Vec<f64>, n_actions: usize) -> Result<Self> {
        if n_actions == 0 || weights.is_empty() || weights.len() % n_actions != 0 {
            return Err(Error::Input("distribution shape does not match the action count".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Input("distribution weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("distribution sums to {total}, not 1")));
        }
        Ok(SamplingDistribution { n_actions, weights })
    }

    /// Normalises nonnegative counts.
    pub fn from_counts(counts: &[f64], n_actions: usize) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Input("counts must have positive total".into()));
        }
        Self::new(counts.iter().map(|c| c / total).collect(), n_actions)
    }

    pub fn n_states(&self) -> usize {
        self.weights.len() / self.n_actions
    }

    pub fn weight(&self, s: StateId, a: ActionId) -> f64 {
        self.weights[s * self.n_actions + a]
    }
}

/// Model-based fixed point `Phi^T D (Phi - gamma P Pi Phi) w = Phi^T D R`.
///
/// Rank-deficient systems fall back to minimum-norm least squares.
pub fn exact_fixed_point_weights(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
    basis: &Arc<BasisSet>,
    mu: &SamplingDistribution,
) -> Result<WeightVector> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    if basis.n_states() != ns || basis.n_actions() != na || policy.n_states() != ns || mu.n_states() != ns || mu.n_actions != na {
        return Err(Error::Input("MDP, policy, basis and distribution shapes disagree".into()));
    }
    let d = basis.dim();
    let rows = ns * na;
    let g = mdp.discount();
    let phi = DMatrix::from_fn(rows, d, |r, c| basis.features(r / na, r % na)[c]);
    // (P Pi Phi)(s, a) = sum_{s'} P(s' | s, a) phi(s', pi(s')).
    let mut next = DMatrix::zeros(rows, d);
    let mut reward = DVector::zeros(rows);
    let mut weight = DVector::zeros(rows);
    for s in 0..ns {
        for a in 0..na {
            let r = s * na + a;
            weight[r] = mu.weight(s, a);
            reward[r] = mdp.expected_reward(s, a);
            for o in mdp.outcomes(s, a) {
                let row = basis.features(o.next, policy.action(o.next));
                for c in 0..d {
                    next[(r, c)] += o.prob * row[c];
                }
            }
        }
    }
    let weighted = DMatrix::from_fn(rows, d, |r, c| phi[(r, c)] * weight[r]);
    let a = weighted.transpose() * (&phi - next * g);
    let b = weighted.transpose() * reward;
    let w = match a.clone().lu().solve(&b) {
        Some(w) if w.iter().all(|x| x.is_finite()) && well_conditioned(&a) => w,
        _ => {
            log::warn!("fixed-point system is rank deficient; using least squares");
            min_norm_solve(&a, &b, None)?.0
        }
    };
    WeightVector::new(Arc::clone(basis), w)
}

fn well_conditioned(a: &DMatrix<f64>) -> bool {
    let s = a.singular_values();
    let (lo, hi) = (s.min(), s.max());
    hi > 0.0 && lo > hi * a.nrows() as f64 * f64::EPSILON
}
