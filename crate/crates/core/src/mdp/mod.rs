//! Finite MDPs, benchmark environments, sampling and exact solvers.

mod chain;
mod dp;
mod grid;
mod sampling;

pub use chain::{build_chain_mdp, ChainConfig, RewardTiming, LEFT, RIGHT};
pub use dp::{
    greedy_from_q, policy_error_count, policy_evaluation_exact, value_iteration, ActionValues,
    OptimalSolution, TIE_TOLERANCE,
};
pub use grid::{
    build_gridworld, GridLayout, Gridworld, NamedLayout, EAST, NORTH, SOUTH, WEST,
};
pub use sampling::{collect_samples, exhaustive_samples, Behavior, RestartRule};

use crate::error::{Error, Result};

pub type StateId = usize;
pub type ActionId = usize;

/// One possible successor of a state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: StateId,
    pub prob: f64,
    pub reward: f64,
}

/// Finite MDP with a sparse transition model.
///
/// Row `(s, a)` lists the successors with nonzero probability; entries of
/// the dense tensors `P(s, a, s')` and `R(s, a, s')` are recovered through
/// [`TabularMdp::transition`] and [`TabularMdp::reward`].
#[derive(Debug, Clone)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    rows: Vec<Vec<Outcome>>,
    discount: f64,
    absorbing: Vec<bool>,
}

const ROW_SUM_TOLERANCE: f64 = 1e-12;

impl TabularMdp {
    /// `rows[s * n_actions + a]` holds the successors of `(s, a)`.
    /// Duplicate successors within a row are merged, probabilities summed,
    /// rewards probability-weighted.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        rows: Vec<Vec<Outcome>>,
        discount: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Config("MDP needs at least one state and one action".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::Config(format!("discount {discount} outside [0, 1)")));
        }
        if rows.len() != n_states * n_actions {
            return Err(Error::Config(format!(
                "expected {} transition rows, got {}",
                n_states * n_actions,
                rows.len()
            )));
        }
        let mut merged = Vec::with_capacity(rows.len());
        for (idx, row) in rows.into_iter().enumerate() {
            let mut out: Vec<Outcome> = Vec::with_capacity(row.len());
            for o in row {
                if o.next >= n_states {
                    return Err(Error::Config(format!("row {idx}: successor {} out of range", o.next)));
                }
                if !(0.0..=1.0).contains(&o.prob) || !o.reward.is_finite() {
                    return Err(Error::Config(format!("row {idx}: invalid outcome {o:?}")));
                }
                if o.prob == 0.0 {
                    continue;
                }
                match out.iter_mut().find(|e| e.next == o.next) {
                    Some(e) => {
                        let p = e.prob + o.prob;
                        e.reward = (e.reward * e.prob + o.reward * o.prob) / p;
                        e.prob = p;
                    }
                    None => out.push(o),
                }
            }
            out.sort_by_key(|o| o.next);
            let total: f64 = out.iter().map(|o| o.prob).sum();
            if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Config(format!(
                    "row (s={}, a={}) sums to {total}",
                    idx / n_actions,
                    idx % n_actions
                )));
            }
            merged.push(out);
        }
        let absorbing = (0..n_states)
            .map(|s| {
                (0..n_actions).all(|a| {
                    let row = &merged[s * n_actions + a];
                    row.len() == 1 && row[0].next == s && row[0].reward == 0.0
                })
            })
            .collect();
        Ok(TabularMdp {
            n_states,
            n_actions,
            rows: merged,
            discount,
            absorbing,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::Config(format!("discount {discount} outside [0, 1)")));
        }
        Ok(TabularMdp {
            discount,
            ..self.clone()
        })
    }

    pub fn outcomes(&self, s: StateId, a: ActionId) -> &[Outcome] {
        &self.rows[s * self.n_actions + a]
    }

    pub fn transition(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.prob)
    }

    pub fn reward(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.outcomes(s, a)
            .iter()
            .find(|o| o.next == next)
            .map_or(0.0, |o| o.reward)
    }

    /// Expected immediate reward of `(s, a)`.
    pub fn expected_reward(&self, s: StateId, a: ActionId) -> f64 {
        self.outcomes(s, a).iter().map(|o| o.prob * o.reward).sum()
    }

    /// Every action loops back to `s` with zero reward.
    pub fn is_absorbing(&self, s: StateId) -> bool {
        self.absorbing[s]
    }

    pub fn absorbing_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.n_states).filter(|&s| self.absorbing[s])
    }

    /// Largest deviation of a transition row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|o| o.prob).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// One `(s, a, r, s')` experience tuple.
///
/// `absorbing` marks transitions into an absorbing state; the return after
/// `next_state` is then known to be zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSample {
    pub state: StateId,
    pub action: ActionId,
    pub reward: f64,
    pub next_state: StateId,
    pub absorbing: bool,
}

impl TransitionSample {
    pub fn new(state: StateId, action: ActionId, reward: f64, next_state: StateId) -> Self {
        TransitionSample {
            state,
            action,
            reward,
            next_state,
            absorbing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    actions: Vec<ActionId>,
}

impl DeterministicPolicy {
    pub fn new(actions: Vec<ActionId>, n_actions: usize) -> Result<Self> {
        if let Some(bad) = actions.iter().find(|&&a| a >= n_actions) {
            return Err(Error::Input(format!("action {bad} not below {n_actions}")));
        }
        Ok(DeterministicPolicy { actions })
    }

    pub fn constant(n_states: usize, action: ActionId) -> Self {
        DeterministicPolicy {
            actions: vec![action; n_states],
        }
    }

    pub fn action(&self, s: StateId) -> ActionId {
        self.actions[s]
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }
}
