use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DeterministicPolicy, StateId, TabularMdp, TransitionSample};
use crate::error::{Error, Result};

/// Behavior policy used to generate experience.
#[derive(Debug, Clone, Copy)]
pub enum Behavior<'a> {
    UniformRandom,
    Policy(&'a DeterministicPolicy),
}

/// When a trajectory jumps to a fresh start state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RestartRule {
    /// Restart after this many steps in one episode.
    pub episode_cap: Option<usize>,
    /// First state of the trajectory; uniform over non-absorbing states if unset.
    pub start_state: Option<StateId>,
}

impl RestartRule {
    pub fn capped(cap: usize) -> Self {
        RestartRule {
            episode_cap: Some(cap),
            start_state: None,
        }
    }

    pub fn starting_at(mut self, s: StateId) -> Self {
        self.start_state = Some(s);
        self
    }
}

fn random_start(mdp: &TabularMdp, rng: &mut ChaCha8Rng) -> StateId {
    let open: Vec<StateId> = (0..mdp.n_states()).filter(|&s| !mdp.is_absorbing(s)).collect();
    if open.is_empty() {
        rng.random_range(0..mdp.n_states())
    } else {
        open[rng.random_range(0..open.len())]
    }
}

/// Generates one trajectory of exactly `n_steps` transitions.
///
/// Entering an absorbing state, or hitting the episode cap, restarts the
/// walk from a uniformly drawn non-absorbing state. Bit-reproducible for a
/// fixed seed.
pub fn collect_samples(
    mdp: &TabularMdp,
    behavior: Behavior<'_>,
    n_steps: usize,
    seed: u64,
    restart: RestartRule,
) -> Result<Vec<TransitionSample>> {
    if n_steps == 0 {
        return Err(Error::Input("n_steps must be at least 1".into()));
    }
    if let Behavior::Policy(p) = behavior {
        if p.n_states() != mdp.n_states() || p.actions().iter().any(|&a| a >= mdp.n_actions()) {
            return Err(Error::Input("behavior policy does not match the MDP".into()));
        }
    }
    if let Some(s) = restart.start_state.filter(|&s| s >= mdp.n_states()) {
        return Err(Error::Input(format!("start state {s} out of range")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = match restart.start_state {
        Some(s) => s,
        None => random_start(mdp, &mut rng),
    };
    let mut episode_len = 0;
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let action = match behavior {
            Behavior::UniformRandom => rng.random_range(0..mdp.n_actions()),
            Behavior::Policy(p) => p.action(state),
        };
        let outcomes = mdp.outcomes(state, action);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = outcomes[outcomes.len() - 1];
        for o in outcomes {
            acc += o.prob;
            if u < acc {
                chosen = *o;
                break;
            }
        }
        let absorbing = mdp.is_absorbing(chosen.next);
        out.push(TransitionSample {
            state,
            action,
            reward: chosen.reward,
            next_state: chosen.next,
            absorbing,
        });
        episode_len += 1;
        state = chosen.next;
        if absorbing || restart.episode_cap.is_some_and(|cap| episode_len >= cap) {
            state = random_start(mdp, &mut rng);
            episode_len = 0;
        }
    }
    Ok(out)
}

/// One sample per `(s, a, s')` with positive probability, in state-action order.
pub fn exhaustive_samples(mdp: &TabularMdp) -> Vec<TransitionSample> {
    let mut out = Vec::new();
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            for o in mdp.outcomes(s, a) {
                out.push(TransitionSample {
                    state: s,
                    action: a,
                    reward: o.reward,
                    next_state: o.next,
                    absorbing: mdp.is_absorbing(o.next),
                });
            }
        }
    }
    out
}
