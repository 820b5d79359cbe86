use super::{laplacian_eigensystem, OperatorKind, StateGraph};
use crate::error::{Error, Result};
use crate::parallel::Parallelism;

/// Largest graph accepted by the exhaustive subset search.
pub const CHEEGER_MAX_VERTICES: usize = 20;

/// Tolerance on `2 h >= lambda_1`.
pub const CHEEGER_BOUND_SLACK: f64 = 1e-10;

/// A minimising cut: `subset` never contains the last vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CheegerCut {
    pub value: f64,
    pub subset: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheegerBound {
    pub h: f64,
    pub lambda1: f64,
    pub holds: bool,
}

/// `min |E(S, S^c)| / min(vol S, vol S^c)` over nonempty proper subsets.
///
/// Each bipartition is visited once, as the side without the last vertex;
/// ties keep the subset with the smallest bitmask.
pub fn cheeger_cut(graph: &StateGraph, par: Parallelism) -> Result<CheegerCut> {
    let n = graph.n_vertices();
    if n > CHEEGER_MAX_VERTICES {
        return Err(Error::Capacity {
            what: "Cheeger enumeration graph",
            size: n,
            limit: CHEEGER_MAX_VERTICES,
        });
    }
    if n < 2 {
        return Err(Error::Input("Cheeger constant needs at least two vertices".into()));
    }
    let edges: Vec<(u32, u32, f64)> = graph
        .edges()
        .map(|(u, v, w)| (1u32 << u, 1u32 << v, w))
        .collect();
    let degrees = graph.degrees();
    let total: f64 = degrees.iter().sum();
    let count = (1usize << (n - 1)) - 1;
    let (idx, value) = par
        .argmin_by_key(count, |i| {
            let mask = (i + 1) as u32;
            let cut: f64 = edges
                .iter()
                .filter(|&&(a, b, _)| (mask & a == 0) != (mask & b == 0))
                .map(|e| e.2)
                .sum();
            let vol: f64 = (0..n).filter(|v| mask >> v & 1 == 1).map(|v| degrees[v]).sum();
            cut / vol.min(total - vol)
        })
        .expect("at least one bipartition");
    let mask = idx + 1;
    Ok(CheegerCut {
        value,
        subset: (0..n).filter(|v| mask >> v & 1 == 1).collect(),
    })
}

pub fn cheeger_constant_bruteforce(graph: &StateGraph) -> Result<f64> {
    Ok(cheeger_cut(graph, Parallelism::default())?.value)
}

/// Checks `2 h >= lambda_1` with `lambda_1` the first nonzero eigenvalue of
/// the normalized Laplacian.
pub fn verify_cheeger_bound(graph: &StateGraph) -> Result<CheegerBound> {
    let h = cheeger_constant_bruteforce(graph)?;
    let sys = laplacian_eigensystem(graph, OperatorKind::Normalized, 2, Parallelism::default())?;
    let lambda1 = sys.eigenvalues[1];
    Ok(CheegerBound {
        h,
        lambda1,
        holds: 2.0 * h >= lambda1 - CHEEGER_BOUND_SLACK,
    })
}
