use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mdp::{StateId, TransitionSample};

/// Undirected weighted graph over visited states.
///
/// Vertices are numbered `0..n` in increasing order of the state id they
/// represent. Neighbour lists are sorted by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGraph {
    vertex_labels: Vec<StateId>,
    neighbors: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    dropped: Vec<StateId>,
}

impl StateGraph {
    /// Builds a graph from labelled weighted edges, keeping the largest
    /// connected component. Repeated edges keep the first weight.
    fn from_labelled_edges(
        labels: BTreeSet<StateId>,
        edges: impl IntoIterator<Item = (StateId, StateId, f64)>,
    ) -> Result<Self> {
        let index: BTreeMap<StateId, usize> =
            labels.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let n = labels.len();
        let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (a, b, w) in edges {
            if a == b {
                continue;
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Input(format!("edge ({a}, {b}) has invalid weight {w}")));
            }
            let (i, j) = (index[&a], index[&b]);
            adj[i].entry(j).or_insert(w);
            adj[j].entry(i).or_insert(w);
        }

        // Components by BFS; keep the largest, ties to the one with the
        // smallest state id.
        let mut comp = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut queue = vec![start];
            comp[start] = id;
            let mut size = 0;
            while let Some(v) = queue.pop() {
                size += 1;
                for &u in adj[v].keys() {
                    if comp[u] == usize::MAX {
                        comp[u] = id;
                        queue.push(u);
                    }
                }
            }
            sizes.push(size);
        }
        let keep = (0..sizes.len())
            .max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)))
            .ok_or_else(|| Error::Input("graph has no vertices".into()))?;

        let labels: Vec<StateId> = labels.into_iter().collect();
        let mut remap = vec![usize::MAX; n];
        let mut vertex_labels = Vec::new();
        let mut dropped = Vec::new();
        for v in 0..n {
            if comp[v] == keep {
                remap[v] = vertex_labels.len();
                vertex_labels.push(labels[v]);
            } else {
                dropped.push(labels[v]);
            }
        }
        let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
            .filter(|&v| comp[v] == keep)
            .map(|v| adj[v].iter().map(|(&u, &w)| (remap[u], w)).collect())
            .collect();
        let degree = neighbors
            .iter()
            .map(|row: &Vec<(usize, f64)>| row.iter().map(|&(_, w)| w).sum())
            .collect();
        Ok(StateGraph {
            vertex_labels,
            neighbors,
            degree,
            dropped,
        })
    }

    /// Unweighted graph on vertices `0..n` from an edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_weighted_edges(n, &edges.iter().map(|&(a, b)| (a, b, 1.0)).collect::<Vec<_>>())
    }

    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("graph needs at least one vertex".into()));
        }
        if let Some(&(a, b, _)) = edges.iter().find(|&&(a, b, _)| a >= n || b >= n) {
            return Err(Error::Input(format!("edge ({a}, {b}) out of range for {n} vertices")));
        }
        Self::from_labelled_edges((0..n).collect(), edges.iter().copied())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_labels.len()
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Original state id of each vertex.
    pub fn vertex_labels(&self) -> &[StateId] {
        &self.vertex_labels
    }

    /// States seen in the samples but outside the kept component.
    pub fn dropped_states(&self) -> &[StateId] {
        &self.dropped
    }

    pub fn vertex_of_state(&self, s: StateId) -> Option<usize> {
        self.vertex_labels.binary_search(&s).ok()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.degree[v]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.neighbors[u]
            .binary_search_by_key(&v, |&(x, _)| x)
            .map_or(0.0, |i| self.neighbors[u][i].1)
    }

    /// Each edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    pub fn is_regular(&self) -> bool {
        self.degree.windows(2).all(|w| w[0] == w[1])
    }

    /// One `u v` line per edge, vertex indices 0-based.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v, _) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_edge_list(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Unweighted undirected graph of observed transitions, restricted to the
/// largest connected component.
pub fn build_graph_from_samples(samples: &[TransitionSample]) -> Result<StateGraph> {
    if samples.is_empty() {
        return Err(Error::Input("cannot build a graph from zero samples".into()));
    }
    let labels: BTreeSet<StateId> = samples
        .iter()
        .flat_map(|s| [s.state, s.next_state])
        .collect();
    StateGraph::from_labelled_edges(
        labels,
        samples.iter().map(|s| (s.state, s.next_state, 1.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(s: usize, t: usize) -> TransitionSample {
        TransitionSample::new(s, 0, 0.0, t)
    }

    #[test]
    fn single_sample_gives_one_edge() {
        let g = build_graph_from_samples(&[sample(0, 1)]).unwrap();
        assert_eq!((g.n_vertices(), g.n_edges()), (2, 1));
        assert_eq!(g.degrees(), &[1.0, 1.0]);
    }

    #[test]
    fn duplicates_and_self_loops_collapse() {
        let g = build_graph_from_samples(&[sample(0, 1), sample(1, 0), sample(0, 1), sample(1, 1)])
            .unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 1), 0.0);
    }

    #[test]
    fn three_cycle() {
        let g = build_graph_from_samples(&[sample(4, 7), sample(7, 9), sample(9, 4)]).unwrap();
        assert_eq!(g.vertex_labels(), &[4, 7, 9]);
        assert_eq!(g.degrees(), &[2.0, 2.0, 2.0]);
        assert!(g.is_regular());
        let e: Vec<_> = g.edges().map(|(u, v, _)| (u, v)).collect();
        assert_eq!(e, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn keeps_largest_component() {
        let g = build_graph_from_samples(&[sample(0, 1), sample(5, 6), sample(6, 7)]).unwrap();
        assert_eq!(g.vertex_labels(), &[5, 6, 7]);
        assert_eq!(g.dropped_states(), &[0, 1]);
        assert_eq!(g.vertex_of_state(6), Some(1));
        assert_eq!(g.vertex_of_state(0), None);
    }

    #[test]
    fn equal_components_keep_smallest_label() {
        let g = build_graph_from_samples(&[sample(8, 9), sample(2, 3)]).unwrap();
        assert_eq!(g.vertex_labels(), &[2, 3]);
    }

    #[test]
    fn edge_list_format() {
        let g = StateGraph::from_edges(3, &[(2, 1), (0, 1)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n1 2\n");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_graph_from_samples(&[]).is_err());
        assert!(StateGraph::from_edges(2, &[(0, 2)]).is_err());
        assert!(StateGraph::from_weighted_edges(2, &[(0, 1, -1.0)]).is_err());
    }
}
