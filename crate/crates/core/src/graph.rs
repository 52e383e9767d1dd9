//! Metric graphs: finite multigraphs with positive edge lengths and their
//! shortest-path metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for every distance comparison.
pub const REL_TOL: f64 = 1e-9;

/// `a <= b` up to [`REL_TOL`].
pub fn approx_le(a: f64, b: f64) -> bool {
    if a <= b {
        return true;
    }
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    a - b <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn approx_eq(a: f64, b: f64) -> bool {
    approx_le(a, b) && approx_le(b, a)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub len: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    /// The endpoint opposite `x`. For a loop this is `x` itself.
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// A finite multigraph on vertices `0..n` with strictly positive edge lengths.
/// Edge ids are positions in [`MetricGraph::edges`].
#[derive(Clone, Debug, PartialEq)]
pub struct MetricGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl MetricGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        for (id, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::invalid(
                    format!("edge {id}"),
                    format!("endpoint out of range ({}, {}) for {n} vertices", e.u, e.v),
                ));
            }
            if !(e.len.is_finite() && e.len > 0.0) {
                return Err(Error::invalid(
                    format!("edge {id}"),
                    format!("length must be positive and finite, got {}", e.len),
                ));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, id));
            if !e.is_loop() {
                adj[e.v].push((e.u, id));
            }
        }
        Ok(MetricGraph { n, edges, adj })
    }

    /// Convenience constructor from `(u, v, len)` triples.
    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(n, triples.iter().map(|&(u, v, len)| Edge { u, v, len }).collect())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// `(neighbor, edge id)` pairs; a loop is listed once.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    /// Degree counting a loop twice.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v]
            .iter()
            .map(|&(_, e)| if self.edges[e].is_loop() { 2 } else { 1 })
            .sum()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).sum()
    }

    /// Connected-component label per vertex, labels in order of first vertex.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &(y, _) in &self.adj[x] {
                    if label[y] == usize::MAX {
                        label[y] = count;
                        stack.push(y);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().0 == 1
    }

    /// Single-source shortest-path distances; unreachable vertices get `f64::INFINITY`.
    pub fn dijkstra(&self, source: usize) -> Vec<f64> {
        self.dijkstra_multi(&[source])
    }

    /// Distances to the nearest of `sources`.
    pub fn dijkstra_multi(&self, sources: &[usize]) -> Vec<f64> {
        self.dijkstra_tree(sources).0
    }

    /// Distances plus the parent edge of each reached non-source vertex. Ties
    /// are resolved toward the smaller parent edge id so the tree is deterministic.
    pub fn dijkstra_tree(&self, sources: &[usize]) -> (Vec<f64>, Vec<Option<usize>>) {
        let mut dist = vec![f64::INFINITY; self.n];
        let mut parent = vec![None; self.n];
        let mut done = vec![false; self.n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(HeapItem { dist: 0.0, vertex: s });
        }
        while let Some(HeapItem { dist: d, vertex: x }) = heap.pop() {
            if done[x] {
                continue;
            }
            done[x] = true;
            for &(y, e) in &self.adj[x] {
                if done[y] {
                    continue;
                }
                let nd = d + self.edges[e].len;
                let better = nd < dist[y]
                    || (nd == dist[y] && parent[y].is_some_and(|p: usize| e < p));
                if better {
                    dist[y] = nd;
                    parent[y] = Some(e);
                    heap.push(HeapItem { dist: nd, vertex: y });
                }
            }
        }
        (dist, parent)
    }

    pub fn shortest_dist(&self, u: usize, v: usize) -> f64 {
        self.dijkstra(u)[v]
    }

    /// All-pairs distance table, one Dijkstra per row.
    pub fn all_pairs(&self) -> DistMatrix {
        let rows: Vec<Vec<f64>> = (0..self.n).into_par_iter().map(|s| self.dijkstra(s)).collect();
        let mut data = Vec::with_capacity(self.n * self.n);
        for r in rows {
            data.extend(r);
        }
        // Dijkstra from each side can differ in the last ulp; make the table exactly symmetric.
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let m = data[i * self.n + j].min(data[j * self.n + i]);
                data[i * self.n + j] = m;
                data[j * self.n + i] = m;
            }
        }
        DistMatrix { n: self.n, data }
    }

    /// Subgraph induced by `vertices` (in the given order). Returns the graph and
    /// for each new edge the id of the parent edge.
    pub fn induced(&self, vertices: &[usize]) -> (MetricGraph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        let mut origin = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            if local[e.u] != usize::MAX && local[e.v] != usize::MAX {
                edges.push(Edge { u: local[e.u], v: local[e.v], len: e.len });
                origin.push(id);
            }
        }
        let g = MetricGraph::new(vertices.len(), edges).expect("induced subgraph of a valid graph");
        (g, origin)
    }

    /// Same vertex set, keeping only edges for which `keep` holds.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, &Edge) -> bool) -> MetricGraph {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(id, e)| keep(*id, e))
            .map(|(_, e)| *e)
            .collect();
        MetricGraph::new(self.n, edges).expect("edge subset of a valid graph")
    }

    pub fn scaled(&self, factor: f64) -> MetricGraph {
        let edges = self.edges.iter().map(|e| Edge { len: e.len * factor, ..*e }).collect();
        MetricGraph::new(self.n, edges).expect("positive scaling keeps lengths positive")
    }

    /// Minimum distance between distinct vertices. The closest pair is always
    /// adjacent, so this is the shortest non-loop edge. `None` if there is none.
    pub fn min_pair_distance(&self) -> Option<f64> {
        self.edges
            .iter()
            .filter(|e| !e.is_loop())
            .map(|e| e.len)
            .min_by(f64::total_cmp)
    }
}

/// Rescale so the minimum distance between distinct vertices is exactly 1.
/// Returns the rescaled graph and the factor applied to every length.
pub fn rescale_min_distance(g: &MetricGraph) -> Result<(MetricGraph, f64)> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let factor = match g.min_pair_distance() {
        Some(m) => 1.0 / m,
        None => 1.0,
    };
    if factor == 1.0 {
        return Ok((g.clone(), 1.0));
    }
    let mut scaled = g.scaled(factor);
    // Pin the shortest edges to exactly 1 so later checks compare without drift.
    let min = g.min_pair_distance().unwrap();
    let edges: Vec<Edge> = g
        .edges()
        .iter()
        .zip(scaled.edges())
        .map(|(orig, s)| if !orig.is_loop() && orig.len == min { Edge { len: 1.0, ..*s } } else { *s })
        .collect();
    scaled = MetricGraph::new(g.vertex_count(), edges)?;
    Ok((scaled, factor))
}

#[derive(Clone, Copy, Debug)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Dense symmetric distance table.
#[derive(Clone, Debug, PartialEq)]
pub struct DistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = if i == j { 0.0 } else { f(i, j) };
            }
        }
        DistMatrix { n, data }
    }

    /// All distinct points at distance `spacing`.
    pub fn uniform(n: usize, spacing: f64) -> Self {
        DistMatrix::from_fn(n, |_, _| spacing)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest finite entry.
    pub fn diameter(&self) -> f64 {
        self.data.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }

    /// Restriction to `points`, in that order.
    pub fn restrict(&self, points: &[usize]) -> DistMatrix {
        DistMatrix::from_fn(points.len(), |i, j| self.get(points[i], points[j]))
    }

    /// Diameter of a subset.
    pub fn set_diameter(&self, set: &[usize]) -> f64 {
        let mut best: f64 = 0.0;
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                best = best.max(self.get(a, b));
            }
        }
        best
    }
}

/// A subgraph given by an edge subset; the vertex set is the set of endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
}

impl Subgraph {
    pub fn from_edges(g: &MetricGraph, edges: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut edges: Vec<usize> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        if let Some(&bad) = edges.iter().find(|&&e| e >= g.edge_count()) {
            return Err(Error::Structural(format!("edge {bad} is not an edge of the graph")));
        }
        let mut vertices: Vec<usize> = edges
            .iter()
            .flat_map(|&e| [g.edge(e).u, g.edge(e).v])
            .collect();
        vertices.sort_unstable();
        vertices.dedup();
        Ok(Subgraph { edges, vertices })
    }

    /// The subgraph as a standalone graph on `0..vertices.len()`; local vertex
    /// `i` is parent vertex `self.vertices[i]`.
    pub fn to_graph(&self, g: &MetricGraph) -> MetricGraph {
        let local = |x: usize| self.vertices.binary_search(&x).expect("endpoint in vertex set");
        let edges = self
            .edges
            .iter()
            .map(|&e| {
                let ed = g.edge(e);
                Edge { u: local(ed.u), v: local(ed.v), len: ed.len }
            })
            .collect();
        MetricGraph::new(self.vertices.len(), edges).expect("subgraph of a valid graph")
    }

    pub fn length(&self, g: &MetricGraph) -> f64 {
        self.edges.iter().map(|&e| g.edge(e).len).sum()
    }

    /// `|E| - |V| + 1`.
    pub fn euler_number(&self) -> i64 {
        self.edges.len() as i64 - self.vertices.len() as i64 + 1
    }

    /// Vertices of degree at least 3 within the subgraph.
    pub fn high_degree_count(&self, g: &MetricGraph) -> usize {
        let mut deg = vec![0usize; self.vertices.len()];
        for &e in &self.edges {
            let ed = g.edge(e);
            deg[self.vertices.binary_search(&ed.u).unwrap()] += 1;
            deg[self.vertices.binary_search(&ed.v).unwrap()] += 1;
        }
        deg.iter().filter(|&&d| d >= 3).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4(lens: [f64; 4]) -> MetricGraph {
        MetricGraph::from_triples(4, &[(0, 1, lens[0]), (1, 2, lens[1]), (2, 3, lens[2]), (3, 0, lens[3])])
            .unwrap()
    }

    #[test]
    fn rejects_nonpositive_lengths() {
        let err = MetricGraph::from_triples(2, &[(0, 1, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref location, .. } if location == "edge 0"));
        assert!(MetricGraph::from_triples(2, &[(0, 1, -1.0)]).is_err());
        assert!(MetricGraph::from_triples(2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn adjacent_pair_distance() {
        let g = MetricGraph::from_triples(3, &[(0, 1, 3.0), (1, 2, 2.0), (0, 2, 5.0)]).unwrap();
        assert_eq!(g.shortest_dist(0, 1), 3.0);
    }

    #[test]
    fn cycle_opposite_corners() {
        let g = cycle4([1.0; 4]);
        assert_eq!(g.shortest_dist(0, 2), 2.0);
    }

    #[test]
    fn unreachable_is_infinite() {
        let g = MetricGraph::from_triples(3, &[(0, 1, 1.0)]).unwrap();
        assert!(g.shortest_dist(0, 2).is_infinite());
        assert!(!g.is_connected());
    }

    #[test]
    fn loops_and_parallel_edges() {
        let g = MetricGraph::from_triples(2, &[(0, 0, 1.0), (0, 1, 4.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(g.degree(0), 4);
        assert_eq!(g.shortest_dist(0, 1), 2.0);
        assert_eq!(g.min_pair_distance(), Some(2.0));
    }

    #[test]
    fn rescale_identity_and_triangle() {
        let g = cycle4([1.0; 4]);
        let (h, f) = rescale_min_distance(&g).unwrap();
        assert_eq!(f, 1.0);
        assert_eq!(h, g);

        let t = MetricGraph::from_triples(3, &[(0, 1, 2.0), (1, 2, 4.0), (2, 0, 4.0)]).unwrap();
        let (h, f) = rescale_min_distance(&t).unwrap();
        assert_eq!(f, 0.5);
        let d = h.all_pairs();
        let min = (0..3).flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| d.get(i, j))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, 1.0);
    }

    #[test]
    fn rescale_rejects_disconnected() {
        let g = MetricGraph::from_triples(3, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(rescale_min_distance(&g).unwrap_err(), Error::Disconnected);
    }

    #[test]
    fn subgraph_counts() {
        let g = cycle4([1.0; 4]);
        let s = Subgraph::from_edges(&g, [2, 0, 1, 3]).unwrap();
        assert_eq!(s.edges, vec![0, 1, 2, 3]);
        assert_eq!(s.euler_number(), 1);
        assert_eq!(s.high_degree_count(&g), 0);
        assert!(Subgraph::from_edges(&g, [9]).is_err());
    }
}
