use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::StateGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `L = D - A`.
    Combinatorial,
    /// `D^{-1/2} (D - A) D^{-1/2}`.
    Normalized,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Combinatorial => "combinatorial",
            OperatorKind::Normalized => "normalized",
        }
    }
}

pub fn combinatorial_laplacian(graph: &StateGraph) -> DMatrix<f64> {
    let n = graph.n_vertices();
    let mut l = DMatrix::zeros(n, n);
    for u in 0..n {
        l[(u, u)] = graph.degree(u);
        for &(v, w) in graph.neighbors(u) {
            l[(u, v)] = -w;
        }
    }
    l
}

pub fn normalized_laplacian(graph: &StateGraph) -> DMatrix<f64> {
    let n = graph.n_vertices();
    let mut l = DMatrix::zeros(n, n);
    for u in 0..n {
        let du = graph.degree(u);
        if du > 0.0 {
            l[(u, u)] = 1.0;
        }
        for &(v, w) in graph.neighbors(u) {
            l[(u, v)] = -w / (du * graph.degree(v)).sqrt();
        }
    }
    l
}

pub fn laplacian(graph: &StateGraph, kind: OperatorKind) -> DMatrix<f64> {
    match kind {
        OperatorKind::Combinatorial => combinatorial_laplacian(graph),
        OperatorKind::Normalized => normalized_laplacian(graph),
    }
}

/// Transition matrix `D^{-1} A` of the simple random walk.
pub fn random_walk_operator(graph: &StateGraph) -> DMatrix<f64> {
    let n = graph.n_vertices();
    let mut p = DMatrix::zeros(n, n);
    for u in 0..n {
        let du = graph.degree(u);
        for &(v, w) in graph.neighbors(u) {
            p[(u, v)] = w / du;
        }
    }
    p
}

/// `<g, M g> / <g, g>`.
pub fn rayleigh_quotient(g: &DVector<f64>, m: &DMatrix<f64>) -> Result<f64> {
    if g.len() != m.nrows() || !m.is_square() {
        return Err(Error::Input(format!(
            "vector of length {} does not match a {}x{} operator",
            g.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let norm2 = g.dot(g);
    if norm2 == 0.0 {
        return Err(Error::Input("Rayleigh quotient of the zero vector".into()));
    }
    Ok(g.dot(&(m * g)) / norm2)
}
