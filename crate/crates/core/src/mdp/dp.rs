use nalgebra::{DMatrix, DVector};

use super::{ActionId, DeterministicPolicy, StateId, TabularMdp};
use crate::error::{Error, Result};

/// Actions whose values differ by no more than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

const BELLMAN_RESIDUAL_LIMIT: f64 = 1e-10;

/// State values and state-action values of one policy (or of the optimum).
#[derive(Debug, Clone, PartialEq)]
pub struct ActionValues {
    pub n_actions: usize,
    pub values: Vec<f64>,
    /// Row-major `q[s * n_actions + a]`.
    pub q: Vec<f64>,
}

impl ActionValues {
    pub fn q(&self, s: StateId, a: ActionId) -> f64 {
        self.q[s * self.n_actions + a]
    }

    pub fn q_row(&self, s: StateId) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn best(&self, s: StateId) -> f64 {
        self.q_row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `q(s, a)` falls short of the best action by more than the tie tolerance.
    pub fn is_suboptimal(&self, s: StateId, a: ActionId) -> bool {
        self.q(s, a) < self.best(s) - TIE_TOLERANCE
    }
}

fn q_from_values(mdp: &TabularMdp, values: &[f64]) -> Vec<f64> {
    let g = mdp.discount();
    let mut q = Vec::with_capacity(mdp.n_states() * mdp.n_actions());
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            q.push(
                mdp.outcomes(s, a)
                    .iter()
                    .map(|o| o.prob * (o.reward + g * values[o.next]))
                    .sum(),
            );
        }
    }
    q
}

/// Greedy policy over a row-major Q table; near-ties go to the lowest action.
pub fn greedy_from_q(q: &[f64], n_actions: usize) -> DeterministicPolicy {
    let actions = q
        .chunks(n_actions)
        .map(|row| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.iter().position(|&v| v >= best - TIE_TOLERANCE).unwrap_or(0)
        })
        .collect();
    DeterministicPolicy { actions }
}

/// Solves `(I - γ P_π) V = R_π` directly, then backs up Q from V.
pub fn policy_evaluation_exact(mdp: &TabularMdp, policy: &DeterministicPolicy) -> Result<ActionValues> {
    let n = mdp.n_states();
    if policy.n_states() != n || policy.actions().iter().any(|&a| a >= mdp.n_actions()) {
        return Err(Error::Input("policy does not match the MDP".into()));
    }
    let g = mdp.discount();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for s in 0..n {
        let a = policy.action(s);
        for o in mdp.outcomes(s, a) {
            m[(s, o.next)] -= g * o.prob;
            r[s] += o.prob * o.reward;
        }
    }
    let v = m
        .clone()
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Numeric("singular policy-evaluation system".into()))?;
    let residual = (&m * &v - &r).amax();
    if !residual.is_finite() || residual >= BELLMAN_RESIDUAL_LIMIT {
        return Err(Error::Numeric(format!("Bellman residual {residual:e} after direct solve")));
    }
    let values: Vec<f64> = v.iter().copied().collect();
    let q = q_from_values(mdp, &values);
    Ok(ActionValues {
        n_actions: mdp.n_actions(),
        values,
        q,
    })
}

/// Result of [`value_iteration`].
#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub policy: DeterministicPolicy,
    pub values: ActionValues,
    pub iterations: usize,
}

impl OptimalSolution {
    /// Counts states where `learned` picks a strictly suboptimal action,
    /// judged by the exact Q of the optimal policy.
    pub fn error_count(&self, learned: &DeterministicPolicy) -> usize {
        (0..learned.n_states())
            .filter(|&s| self.values.is_suboptimal(s, learned.action(s)))
            .count()
    }
}

/// Bellman optimality backups until the max-norm change drops below
/// `tolerance`.
pub fn value_iteration(mdp: &TabularMdp, tolerance: f64) -> Result<OptimalSolution> {
    if !(tolerance > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {tolerance}")));
    }
    let n_a = mdp.n_actions();
    let mut values = vec![0.0; mdp.n_states()];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let q = q_from_values(mdp, &values);
        let next: Vec<f64> = q
            .chunks(n_a)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let change = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if change < tolerance {
            break;
        }
    }
    let q = q_from_values(mdp, &values);
    let policy = greedy_from_q(&q, n_a);
    Ok(OptimalSolution {
        policy,
        values: ActionValues {
            n_actions: n_a,
            values,
            q,
        },
        iterations,
    })
}

/// Solves the MDP and evaluates its optimal policy exactly, for error counting.
pub(crate) fn exact_optimum(mdp: &TabularMdp) -> Result<OptimalSolution> {
    let mut sol = value_iteration(mdp, 1e-10)?;
    sol.values = policy_evaluation_exact(mdp, &sol.policy)?;
    Ok(sol)
}

/// Number of states where `learned` is strictly suboptimal.
pub fn policy_error_count(learned: &DeterministicPolicy, mdp: &TabularMdp) -> Result<usize> {
    if learned.n_states() != mdp.n_states() {
        return Err(Error::Input("policy does not match the MDP".into()));
    }
    Ok(exact_optimum(mdp)?.error_count(learned))
}

impl OptimalSolution {
    /// Value iteration at the default tolerance, with Q re-derived by a
    /// direct solve of the resulting policy.
    pub fn solve(mdp: &TabularMdp) -> Result<Self> {
        exact_optimum(mdp)
    }
}
