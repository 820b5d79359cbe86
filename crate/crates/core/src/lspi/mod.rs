//! Least-squares policy iteration over linear state-action features.

mod lstdq;
mod oracle;
mod rpi;

use std::sync::Arc;

use nalgebra::DVector;

pub use lstdq::{lstdq, lstdq_system, LstdqAccumulator, SolveMethod};
pub use oracle::{exact_fixed_point_weights, SamplingDistribution};
pub use rpi::{rpi, MdpSampler, RpiConfig, RpiResult, SampleSource};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::mdp::{ActionId, DeterministicPolicy, StateId, TransitionSample};

/// Weights `w` of `Q(s, a) = phi(s, a) . w` together with their basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    basis: Arc<BasisSet>,
    weights: DVector<f64>,
}

impl WeightVector {
    pub fn new(basis: Arc<BasisSet>, weights: DVector<f64>) -> Result<Self> {
        if weights.len() != basis.dim() {
            return Err(Error::Input(format!(
                "{} weights for a basis of dimension {}",
                weights.len(),
                basis.dim()
            )));
        }
        Ok(WeightVector { basis, weights })
    }

    pub fn zeros(basis: Arc<BasisSet>) -> Self {
        let weights = DVector::zeros(basis.dim());
        WeightVector { basis, weights }
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn q_value(&self, s: StateId, a: ActionId) -> f64 {
        self.basis.q_value(self.weights.as_slice(), s, a)
    }

    /// `max_a Q(s, a)` for every state.
    pub fn state_values(&self) -> Vec<f64> {
        (0..self.basis.n_states())
            .map(|s| {
                (0..self.basis.n_actions())
                    .map(|a| self.q_value(s, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        WeightVector {
            basis: Arc::clone(&self.basis),
            weights: &self.weights * c,
        }
    }
}

/// `argmax_a Q(s, a)`, ties to the lowest action.
pub fn greedy_policy(w: &WeightVector) -> DeterministicPolicy {
    let n_a = w.basis.n_actions();
    let actions = (0..w.basis.n_states())
        .map(|s| {
            let mut best = 0;
            let mut best_q = w.q_value(s, 0);
            for a in 1..n_a {
                let q = w.q_value(s, a);
                if q > best_q {
                    best = a;
                    best_q = q;
                }
            }
            best
        })
        .collect();
    DeterministicPolicy::new(actions, n_a).expect("greedy actions are in range")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LspiOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub solve: SolveMethod,
}

impl Default for LspiOptions {
    fn default() -> Self {
        LspiOptions {
            epsilon: 1e-3,
            max_iterations: 20,
            solve: SolveMethod::default(),
        }
    }
}

impl LspiOptions {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LspiResult {
    pub weights: WeightVector,
    /// LSTDQ invocations performed.
    pub iterations: usize,
    pub converged: bool,
    /// Weights after each LSTDQ invocation.
    pub history: Vec<WeightVector>,
    /// `||w_t - w_{t-1}||_2` for each iteration.
    pub steps: Vec<f64>,
}

impl LspiResult {
    pub fn policy(&self) -> DeterministicPolicy {
        greedy_policy(&self.weights)
    }
}

/// Iterates `w <- lstdq(greedy(w))` from `w0` (zero when absent) until the
/// step is at most `epsilon`. Without convergence the iterate with the
/// smallest step is returned.
pub fn lspi(
    samples: &[TransitionSample],
    basis: Arc<BasisSet>,
    discount: f64,
    options: &LspiOptions,
    w0: Option<WeightVector>,
) -> Result<LspiResult> {
    options.validate()?;
    let mut w = match w0 {
        Some(w) if Arc::ptr_eq(&w.basis, &basis) || *w.basis == *basis => w,
        Some(_) => return Err(Error::Input("initial weights use a different basis".into())),
        None => WeightVector::zeros(Arc::clone(&basis)),
    };
    let mut history = Vec::new();
    let mut steps = Vec::new();
    let mut best = 0;
    for _ in 0..options.max_iterations {
        let policy = greedy_policy(&w);
        let next = lstdq(samples, &basis, discount, &policy, options.solve)?;
        let step = (next.weights() - w.weights()).norm();
        history.push(next.clone());
        steps.push(step);
        if step < steps[best] {
            best = steps.len() - 1;
        }
        w = next;
        if step <= options.epsilon {
            return Ok(LspiResult {
                weights: w,
                iterations: history.len(),
                converged: true,
                history,
                steps,
            });
        }
    }
    log::warn!(
        "LSPI did not converge in {} iterations; smallest step {:e} at iteration {}",
        options.max_iterations,
        steps[best],
        best + 1
    );
    Ok(LspiResult {
        weights: history[best].clone(),
        iterations: history.len(),
        converged: false,
        history,
        steps,
    })
}
