//! Representation policy iteration.
//!
//! Basis functions for value-function approximation are learned from the
//! graph Laplacian of a state graph induced by sampled transitions, then
//! used inside least-squares policy iteration.
//!
//! Layout:
//!
//! - [`mdp`]: finite MDPs, the chain and gridworld benchmarks, trajectory
//!   sampling and exact dynamic-programming oracles.
//! - [`spectral`]: state graphs, Laplacian operators, a dense symmetric
//!   eigensolver, Rayleigh quotients and Cheeger constants.
//! - [`basis`]: state-action feature sets (Laplacian, polynomial, RBF,
//!   tabular) and Gram-Schmidt orthonormalization.
//! - [`lspi`]: LSTDQ, the policy-iteration loop, the representation-learning
//!   wrapper and the model-based fixed-point oracle.
//! - [`experiment`]: seeded multi-run harness behind the `rpi` binary.

pub mod basis;
pub mod error;
pub mod experiment;
pub mod lspi;
pub mod mdp;
pub mod parallel;
pub mod spectral;

pub use error::{Error, Result};
pub use parallel::Parallelism;
