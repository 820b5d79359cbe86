use std::collections::BTreeSet;

use super::{ActionId, Outcome, StateId, TabularMdp};
use crate::error::{Error, Result};

pub const LEFT: ActionId = 0;
pub const RIGHT: ActionId = 1;

/// Which state of a transition decides whether the chain pays out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardTiming {
    /// `r(s, a, s') = 1` iff `s` is a reward state.
    #[default]
    CurrentState,
    /// `r(s, a, s') = 1` iff `s'` is a reward state.
    NextState,
}

/// Chain walk parameters. States are 0-indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_states: usize,
    pub reward_states: BTreeSet<StateId>,
    pub discount: f64,
    pub success_prob: f64,
    pub reward_timing: RewardTiming,
    /// Wrap around at the ends instead of saturating.
    pub closed: bool,
}

impl ChainConfig {
    pub fn new(n_states: usize, reward_states: impl IntoIterator<Item = StateId>, discount: f64) -> Self {
        ChainConfig {
            n_states,
            reward_states: reward_states.into_iter().collect(),
            discount,
            success_prob: 0.9,
            reward_timing: RewardTiming::default(),
            closed: false,
        }
    }

    /// The 50-state benchmark chain rewarding states 10 and 41 (1-indexed).
    pub fn benchmark() -> Self {
        ChainConfig::new(50, [9, 40], 0.8)
    }

    pub fn success_prob(mut self, p: f64) -> Self {
        self.success_prob = p;
        self
    }

    pub fn reward_timing(mut self, timing: RewardTiming) -> Self {
        self.reward_timing = timing;
        self
    }

    pub fn closed(mut self, closed: bool) -> Self {
        self.closed = closed;
        self
    }
}

/// Two-action chain: the chosen move succeeds with `success_prob`, otherwise
/// the agent moves the opposite way. Open chains saturate at the ends.
pub fn build_chain_mdp(cfg: &ChainConfig) -> Result<TabularMdp> {
    let n = cfg.n_states;
    if n < 2 {
        return Err(Error::Config(format!("chain needs at least 2 states, got {n}")));
    }
    if !(0.5..=1.0).contains(&cfg.success_prob) {
        return Err(Error::Config(format!(
            "success probability {} outside [0.5, 1]",
            cfg.success_prob
        )));
    }
    if let Some(&bad) = cfg.reward_states.iter().find(|&&s| s >= n) {
        return Err(Error::Config(format!("reward state {bad} outside a {n}-state chain")));
    }

    let step = |s: StateId, dir: isize| -> StateId {
        let t = s as isize + dir;
        if cfg.closed {
            t.rem_euclid(n as isize) as StateId
        } else {
            t.clamp(0, n as isize - 1) as StateId
        }
    };
    let pays = |s: StateId, next: StateId| -> f64 {
        let hit = match cfg.reward_timing {
            RewardTiming::CurrentState => cfg.reward_states.contains(&s),
            RewardTiming::NextState => cfg.reward_states.contains(&next),
        };
        if hit {
            1.0
        } else {
            0.0
        }
    };

    let mut rows = Vec::with_capacity(2 * n);
    for s in 0..n {
        for a in [LEFT, RIGHT] {
            let dir = if a == RIGHT { 1 } else { -1 };
            let (ok, fail) = (step(s, dir), step(s, -dir));
            rows.push(vec![
                Outcome { next: ok, prob: cfg.success_prob, reward: pays(s, ok) },
                Outcome { next: fail, prob: 1.0 - cfg.success_prob, reward: pays(s, fail) },
            ]);
        }
    }
    TabularMdp::new(n, 2, rows, cfg.discount)
}
