use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{MissingStateRule, PolynomialEncoding, RbfWidth};
use crate::error::{Error, Result};
use crate::lspi::SolveMethod;
use crate::mdp::{NamedLayout, RewardTiming};
use crate::parallel::Parallelism;
use crate::spectral::OperatorKind;

/// `chain`, `closed-chain`, or a gridworld layout name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Environment {
    Chain,
    ClosedChain,
    Grid(NamedLayout),
}

impl Environment {
    pub fn is_chain(self) -> bool {
        matches!(self, Environment::Chain | Environment::ClosedChain)
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Environment::Chain => f.write_str("chain"),
            Environment::ClosedChain => f.write_str("closed-chain"),
            Environment::Grid(l) => f.write_str(l.name()),
        }
    }
}

impl FromStr for Environment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Environment::Chain),
            "closed-chain" => Ok(Environment::ClosedChain),
            other => other.parse().map(Environment::Grid).map_err(|_| {
                Error::Config(format!(
                    "unknown environment '{other}' (expected chain, closed-chain, two-room, \
                     four-room, five-room or obstacle)"
                ))
            }),
        }
    }
}

impl TryFrom<String> for Environment {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Environment> for String {
    fn from(e: Environment) -> String {
        e.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BasisChoice {
    LaplacianComb,
    LaplacianNorm,
    Poly,
    Rbf,
    Tabular,
}

impl BasisChoice {
    pub fn operator(self) -> Option<OperatorKind> {
        match self {
            BasisChoice::LaplacianComb => Some(OperatorKind::Combinatorial),
            BasisChoice::LaplacianNorm => Some(OperatorKind::Normalized),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisChoice::LaplacianComb => "laplacian-comb",
            BasisChoice::LaplacianNorm => "laplacian-norm",
            BasisChoice::Poly => "poly",
            BasisChoice::Rbf => "rbf",
            BasisChoice::Tabular => "tabular",
        }
    }
}

/// One experiment. Unset options take environment-specific defaults:
/// the chain uses the combinatorial Laplacian, discount 0.8 and 10000
/// samples; gridworlds use the normalized Laplacian, discount 0.9 and 9144
/// samples. Both default to `k = 20`.
///
/// `k` is the eigenfunction count for Laplacian bases, the degree for
/// polynomials and the feature count (centres plus constant) for RBFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: Environment,
    pub basis: Option<BasisChoice>,
    pub k: Option<usize>,
    pub gamma: Option<f64>,
    pub samples: Option<usize>,
    pub runs: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
    pub reward_timing: RewardTiming,
    pub success_prob: f64,
    pub poly_encoding: PolynomialEncoding,
    pub rbf_width: RbfWidth,
    pub missing_states: MissingStateRule,
    pub relearn: bool,
    /// Singular-value cutoff of the least-squares solve.
    pub rcond: Option<f64>,
    /// Ridge parameter; replaces the minimum-norm solve when set.
    pub ridge: Option<f64>,
    /// Gridworld episodes restart after this many steps.
    pub episode_cap: Option<usize>,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: Environment::Chain,
            basis: None,
            k: None,
            gamma: None,
            samples: None,
            runs: 5,
            seed: 0,
            epsilon: 1e-3,
            max_iter: 20,
            out: None,
            reward_timing: RewardTiming::default(),
            success_prob: 0.9,
            poly_encoding: PolynomialEncoding::Raw,
            rbf_width: RbfWidth::Fixed(4.0),
            missing_states: MissingStateRule::default(),
            relearn: false,
            rcond: None,
            ridge: None,
            episode_cap: Some(100),
            parallelism: Parallelism::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_env(env: Environment) -> Self {
        ExperimentConfig {
            env,
            ..Default::default()
        }
    }

    pub fn basis_choice(&self) -> BasisChoice {
        self.basis.unwrap_or(if self.env.is_chain() {
            BasisChoice::LaplacianComb
        } else {
            BasisChoice::LaplacianNorm
        })
    }

    pub fn k_value(&self) -> usize {
        self.k.unwrap_or(20)
    }

    pub fn discount(&self) -> f64 {
        self.gamma.unwrap_or(if self.env.is_chain() { 0.8 } else { 0.9 })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.unwrap_or(if self.env.is_chain() { 10_000 } else { 9144 })
    }

    pub fn solve_method(&self) -> SolveMethod {
        match self.ridge {
            Some(lambda) => SolveMethod::Ridge { lambda },
            None => SolveMethod::MinNorm { rcond: self.rcond },
        }
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let g = self.discount();
        if !(0.0..1.0).contains(&g) {
            return fail(format!("gamma {g} outside [0, 1)"));
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.n_samples() == 0 {
            return fail("samples must be at least 1".into());
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1".into());
        }
        if self.k_value() == 0 && self.basis_choice() != BasisChoice::Poly {
            return fail("k must be at least 1".into());
        }
        if self.basis_choice() == BasisChoice::Rbf && self.k_value() < 2 {
            return fail("an RBF basis needs k >= 2 (constant plus one centre)".into());
        }
        if !(0.5..=1.0).contains(&self.success_prob) {
            return fail(format!("success_prob {} outside [0.5, 1]", self.success_prob));
        }
        if let RbfWidth::Fixed(s) = self.rbf_width {
            if !(s > 0.0) {
                return fail(format!("RBF width must be positive, got {s}"));
            }
        }
        if let Some(r) = self.rcond {
            if !(r >= 0.0) {
                return fail(format!("rcond must be nonnegative, got {r}"));
            }
        }
        if let Some(l) = self.ridge {
            if !(l > 0.0) {
                return fail(format!("ridge must be positive, got {l}"));
            }
        }
        if self.episode_cap == Some(0) {
            return fail("episode_cap must be at least 1".into());
        }
        Ok(())
    }
}

/// Reads a JSON configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
