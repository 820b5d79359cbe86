//! Sample graphs, graph Laplacians, a symmetric eigensolver and Cheeger
//! diagnostics.

mod cheeger;
mod eigen;
mod graph;
mod laplacian;

pub use cheeger::{
    cheeger_constant_bruteforce, cheeger_cut, verify_cheeger_bound, CheegerBound, CheegerCut,
    CHEEGER_BOUND_SLACK, CHEEGER_MAX_VERTICES,
};
pub use eigen::{
    laplacian_eigensystem, smallest_eigenpairs, smallest_eigenpairs_with, EigenSystem,
    EIGEN_TIE_TOLERANCE,
};
pub use graph::{build_graph_from_samples, StateGraph};
pub use laplacian::{
    combinatorial_laplacian, laplacian, normalized_laplacian, random_walk_operator,
    rayleigh_quotient, OperatorKind,
};
