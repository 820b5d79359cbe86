use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{BasisKind, BasisSet};
use crate::error::{Error, Result};
use crate::parallel::Parallelism;
use crate::spectral::{laplacian_eigensystem, OperatorKind, StateGraph};

/// Features for states that are not vertices of the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingStateRule {
    #[default]
    Zero,
    /// Copy the vertex with the closest state id, ties to the smaller id.
    NearestVertex,
}

/// The `k` lowest-order eigenfunctions of the graph's Laplacian as state
/// features over `n_states` states.
pub fn laplacian_basis(
    graph: &StateGraph,
    k: usize,
    kind: OperatorKind,
    n_states: usize,
    n_actions: usize,
    missing: MissingStateRule,
    par: Parallelism,
) -> Result<BasisSet> {
    let nv = graph.n_vertices();
    if k == 0 || k > nv {
        return Err(Error::Input(format!("k = {k} outside 1..={nv} graph vertices")));
    }
    if let Some(&s) = graph.vertex_labels().last().filter(|&&s| s >= n_states) {
        return Err(Error::Input(format!("graph vertex for state {s} beyond {n_states} states")));
    }
    let sys = laplacian_eigensystem(graph, kind, k, par)?;
    let labels = graph.vertex_labels();
    let source = |s: usize| -> Option<usize> {
        match graph.vertex_of_state(s) {
            Some(v) => Some(v),
            None if missing == MissingStateRule::NearestVertex => {
                let i = labels.partition_point(|&l| l < s);
                match (i.checked_sub(1), labels.get(i)) {
                    (Some(lo), Some(&hi)) if hi - s < s - labels[lo] => Some(i),
                    (Some(lo), _) => Some(lo),
                    (None, _) => Some(i),
                }
            }
            None => None,
        }
    };
    let mut m = DMatrix::zeros(n_states, k);
    for s in 0..n_states {
        if let Some(v) = source(s) {
            for j in 0..k {
                m[(s, j)] = sys.eigenvectors[(v, j)];
            }
        }
    }
    BasisSet::new(BasisKind::laplacian(kind), n_actions, m, Some(sys.eigenvalues))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> StateGraph {
        StateGraph::from_edges(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn first_feature_is_constant() {
        let b = laplacian_basis(&path(50), 1, OperatorKind::Combinatorial, 50, 2, MissingStateRule::Zero, Parallelism::Parallel)
            .unwrap();
        let first = b.state_feature(0)[0];
        assert!((first - 1.0 / 50f64.sqrt()).abs() < 1e-10);
        for s in 0..50 {
            assert!((b.state_feature(s)[0] - first).abs() < 1e-10);
        }
        assert_eq!(b.kind(), BasisKind::LaplacianCombinatorial);
    }

    #[test]
    fn sign_changes_grow_with_order() {
        let b = laplacian_basis(&path(50), 4, OperatorKind::Combinatorial, 50, 1, MissingStateRule::Zero, Parallelism::Parallel)
            .unwrap();
        for j in 0..4 {
            let col: Vec<f64> = (0..50).map(|s| b.state_feature(s)[j]).collect();
            let changes = col.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
            assert_eq!(changes, j);
        }
    }

    #[test]
    fn missing_states() {
        let g = StateGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let zero = laplacian_basis(&g, 2, OperatorKind::Normalized, 5, 1, MissingStateRule::Zero, Parallelism::Sequential)
            .unwrap();
        assert_eq!(zero.state_feature(4), &[0.0, 0.0]);
        let near = laplacian_basis(&g, 2, OperatorKind::Normalized, 5, 1, MissingStateRule::NearestVertex, Parallelism::Sequential)
            .unwrap();
        assert_eq!(near.state_feature(4), near.state_feature(2));
    }

    #[test]
    fn nearest_vertex_tie_goes_low() {
        let samples: Vec<_> = [(0, 1), (1, 4)]
            .iter()
            .map(|&(a, b)| crate::mdp::TransitionSample::new(a, 0, 0.0, b))
            .collect();
        let g = crate::spectral::build_graph_from_samples(&samples).unwrap();
        let b = laplacian_basis(&g, 3, OperatorKind::Combinatorial, 6, 1, MissingStateRule::NearestVertex, Parallelism::Sequential)
            .unwrap();
        assert_eq!(b.state_feature(2), b.state_feature(1));
        assert_eq!(b.state_feature(3), b.state_feature(4));
        assert_eq!(b.state_feature(5), b.state_feature(4));
    }

    #[test]
    fn k_out_of_range() {
        let g = path(3);
        for k in [0, 4] {
            assert!(laplacian_basis(&g, k, OperatorKind::Normalized, 3, 1, MissingStateRule::Zero, Parallelism::Sequential).is_err());
        }
        assert!(laplacian_basis(&g, 1, OperatorKind::Normalized, 2, 1, MissingStateRule::Zero, Parallelism::Sequential).is_err());
    }
}
