//! Splitting cut-graph boundary edges and embedding the cut graph into a
//! random dominating tree.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{approx_eq, DistMatrix, Edge, MetricGraph, Subgraph};
use crate::seed;

/// Length of the outer half of a split edge.
pub const SPLIT_HALF: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitVertex {
    /// The split vertex in `J`.
    pub vertex: usize,
    /// Edge of the original graph that was split.
    pub original_edge: usize,
    /// Endpoint on the cut graph.
    pub inner: usize,
    /// Endpoint off the cut graph.
    pub outer: usize,
}

/// `J` is the original graph with every edge leaving the cut graph split
/// in two; vertices `0..n` keep their ids and split vertices follow.
#[derive(Clone, Debug)]
pub struct SplitComplex {
    pub j: MetricGraph,
    pub original_vertices: usize,
    /// The cut graph, with edge ids of `J`.
    pub cut: Subgraph,
    pub splits: Vec<SplitVertex>,
    /// Sorted `V(C) ∪ Z`.
    pub k_vertices: Vec<usize>,
    /// Edges of `J` with both ends in `k_vertices`.
    pub k_edges: Vec<usize>,
    /// Edge of the original graph each `J` edge comes from.
    pub edge_origin: Vec<usize>,
}

impl SplitComplex {
    pub fn in_k(&self, v: usize) -> bool {
        self.k_vertices.binary_search(&v).is_ok()
    }

    /// Vertices off `K`, i.e. original vertices not on the cut graph.
    pub fn outside(&self) -> Vec<usize> {
        (0..self.original_vertices).filter(|&v| !self.in_k(v)).collect()
    }

    pub fn k_graph(&self) -> MetricGraph {
        self.j.induced(&self.k_vertices).0
    }
}

/// Split every edge with exactly one endpoint on `cut`. The graph must be
/// rescaled so that its shortest non-loop edge has length 1.
pub fn build_split_complex(g: &MetricGraph, cut: &Subgraph) -> Result<SplitComplex> {
    let min = g.min_pair_distance().unwrap_or(1.0);
    if !approx_eq(min, 1.0) {
        return Err(Error::NotRescaled { min_distance: min });
    }
    let local = cut.to_graph(g);
    if cut.vertices.is_empty() || !local.is_connected() {
        return Err(Error::Structural("cut graph must be nonempty and connected".into()));
    }
    let n = g.vertex_count();
    let mut on_cut = vec![false; n];
    for &v in &cut.vertices {
        on_cut[v] = true;
    }
    let mut edges = Vec::with_capacity(g.edge_count());
    let mut edge_origin = Vec::with_capacity(g.edge_count());
    let mut splits = Vec::new();
    let mut new_id = vec![usize::MAX; g.edge_count()];
    for (id, e) in g.edges().iter().enumerate() {
        if on_cut[e.u] == on_cut[e.v] {
            new_id[id] = edges.len();
            edges.push(*e);
            edge_origin.push(id);
            continue;
        }
        let (inner, outer) = if on_cut[e.u] { (e.u, e.v) } else { (e.v, e.u) };
        let z = n + splits.len();
        edges.push(Edge { u: inner, v: z, len: e.len - SPLIT_HALF });
        edges.push(Edge { u: z, v: outer, len: SPLIT_HALF });
        edge_origin.extend([id, id]);
        splits.push(SplitVertex { vertex: z, original_edge: id, inner, outer });
    }
    let j = MetricGraph::new(n + splits.len(), edges)?;
    let mut k_vertices = cut.vertices.clone();
    k_vertices.extend(splits.iter().map(|s| s.vertex));
    k_vertices.sort_unstable();
    let in_k = |v: usize| v >= n || on_cut[v];
    let k_edges = (0..j.edge_count()).filter(|&e| in_k(j.edge(e).u) && in_k(j.edge(e).v)).collect();
    let cut = Subgraph { edges: cut.edges.iter().map(|&e| new_id[e]).collect(), vertices: cut.vertices.clone() };
    Ok(SplitComplex { j, original_vertices: n, cut, splits, k_vertices, k_edges, edge_origin })
}

/// A rooted tree with points mapped to nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominatingTree {
    pub parent: Vec<Option<usize>>,
    /// Length of the edge to the parent (0 at the root).
    pub length: Vec<f64>,
    /// Node of each point.
    pub point_node: Vec<usize>,
    pub seed: u64,
    #[serde(skip)]
    depth: Vec<usize>,
    #[serde(skip)]
    height: Vec<f64>,
}

impl DominatingTree {
    fn new(parent: Vec<Option<usize>>, length: Vec<f64>, point_node: Vec<usize>, seed: u64) -> Self {
        let mut t = DominatingTree { parent, length, point_node, seed, depth: Vec::new(), height: Vec::new() };
        t.reindex();
        t
    }

    /// Rebuild cached depths, e.g. after deserializing. Parents must precede children.
    pub fn reindex(&mut self) {
        let n = self.parent.len();
        self.depth = vec![0; n];
        self.height = vec![0.0; n];
        for v in 0..n {
            if let Some(p) = self.parent[v] {
                self.depth[v] = self.depth[p] + 1;
                self.height[v] = self.height[p] + self.length[v];
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn point_count(&self) -> usize {
        self.point_node.len()
    }

    pub fn node_distance(&self, mut a: usize, mut b: usize) -> f64 {
        let total = self.height[a] + self.height[b];
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        total - 2.0 * self.height[a]
    }

    /// Tree distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.node_distance(self.point_node[i], self.point_node[j])
    }

    pub fn point_metric(&self) -> DistMatrix {
        DistMatrix::from_fn(self.point_count(), |i, j| self.distance(i, j))
    }

    /// First pair `(i, j)` with tree distance below `metric`, if any.
    pub fn domination_violation(&self, metric: &DistMatrix) -> Option<(usize, usize)> {
        for i in 0..self.point_count() {
            for j in i + 1..self.point_count() {
                if self.distance(i, j) < metric.get(i, j) * (1.0 - crate::graph::REL_TOL) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn push(&mut self, parent: usize, len: f64) -> usize {
        self.parent.push(Some(parent));
        self.length.push(len);
        self.depth.push(self.depth[parent] + 1);
        self.height.push(self.height[parent] + len);
        self.parent.len() - 1
    }
}

/// Hierarchical random decomposition tree over a finite metric. Points are
/// leaves; tree distances dominate the metric.
pub fn frt_tree(metric: &DistMatrix, seed: u64) -> Result<DominatingTree> {
    let n = metric.len();
    if n == 0 {
        return Err(Error::invalid("metric", "needs at least one point"));
    }
    if let Some(bad) = (0..n * n).find(|&k| !metric.get(k / n, k % n).is_finite()) {
        return Err(Error::invalid("metric", format!("infinite distance between {} and {}", bad / n, bad % n)));
    }
    let mut rng = seed::rng(seed);
    let beta: f64 = rng.gen_range(1.0..2.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let diam = metric.diameter();
    let top = if diam > 0.0 { diam.log2().ceil() as i32 } else { 0 };

    let mut tree = DominatingTree::new(vec![None], vec![0.0], vec![0; n], seed);
    // (tree node, level, members)
    let mut stack = vec![(0usize, top, (0..n).collect::<Vec<usize>>())];
    while let Some((node, level, members)) = stack.pop() {
        if members.len() == 1 {
            tree.point_node[members[0]] = node;
            continue;
        }
        let child_level = level - 1;
        let edge = 2f64.powi(child_level);
        if metric.set_diameter(&members) == 0.0 {
            for &p in &members {
                tree.point_node[p] = tree.push(node, edge);
            }
            continue;
        }
        let radius = beta * 2f64.powi(child_level - 2);
        let mut assigned = vec![false; members.len()];
        let mut children = Vec::new();
        for &c in &order {
            let mut cluster = Vec::new();
            for (k, &p) in members.iter().enumerate() {
                if !assigned[k] && metric.get(c, p) <= radius {
                    assigned[k] = true;
                    cluster.push(p);
                }
            }
            if !cluster.is_empty() {
                children.push(cluster);
            }
            if assigned.iter().all(|&a| a) {
                break;
            }
        }
        // Reverse so that the stack processes clusters in carving order.
        for cluster in children.into_iter().rev() {
            let child = tree.push(node, edge);
            stack.push((child, child_level, cluster));
        }
    }
    Ok(tree)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    /// Decompose only the branch vertices of the cut graph and hang the
    /// subdivision paths off them.
    #[default]
    Core,
    /// Decompose every cut-graph vertex.
    Direct,
}

/// Random dominating tree over `V(K)` (points in `sc.k_vertices` order):
/// a decomposition tree of the cut graph's own metric, with each split
/// vertex hung as a leaf from its cut-graph neighbor.
pub fn embed_cutgraph_tree(sc: &SplitComplex, mode: TreeMode, seed: u64) -> Result<DominatingTree> {
    let cut_vertices = &sc.cut.vertices;
    let c = sc.cut.to_graph(&sc.j);
    let local = |v: usize| cut_vertices.binary_search(&v).expect("cut vertex");

    let mut tree = match mode {
        TreeMode::Direct => frt_tree(&c.all_pairs(), seed)?,
        TreeMode::Core => core_tree(&c, seed)?,
    };
    // Reindex points from cut-graph order to K order, then add split leaves.
    let mut point_node = vec![usize::MAX; sc.k_vertices.len()];
    for (i, &v) in cut_vertices.iter().enumerate() {
        point_node[sc.k_vertices.binary_search(&v).unwrap()] = tree.point_node[i];
    }
    for s in &sc.splits {
        let inner: Vec<(usize, usize)> = sc
            .j
            .neighbors(s.vertex)
            .iter()
            .copied()
            .filter(|&(w, _)| w < sc.original_vertices && sc.in_k(w))
            .collect();
        if inner.len() != 1 {
            return Err(Error::Structural(format!(
                "split vertex {} has {} cut-graph neighbors",
                s.vertex,
                inner.len()
            )));
        }
        let (w, e) = inner[0];
        let node = tree.push(tree.point_node[local(w)], sc.j.edge(e).len);
        point_node[sc.k_vertices.binary_search(&s.vertex).unwrap()] = node;
    }
    tree.point_node = point_node;
    Ok(tree)
}

/// Decomposition tree of the branch vertices of `c`, with each subdivision
/// path split at its midpoint and hung from its two ends as chains.
fn core_tree(c: &MetricGraph, seed: u64) -> Result<DominatingTree> {
    let n = c.vertex_count();
    let mut branch: Vec<usize> = (0..n).filter(|&v| c.degree(v) != 2).collect();
    if branch.is_empty() {
        branch.push(0);
    }
    let dist = c.all_pairs();
    let frt = frt_tree(&dist.restrict(&branch), seed)?;
    let mut tree = DominatingTree::new(frt.parent.clone(), frt.length.clone(), vec![usize::MAX; n], seed);
    let mut is_branch = vec![false; n];
    for (i, &b) in branch.iter().enumerate() {
        is_branch[b] = true;
        tree.point_node[b] = frt.point_node[i];
    }

    let mut used = vec![false; c.edge_count()];
    for &p in &branch {
        for &(first, e0) in c.neighbors(p) {
            if used[e0] {
                continue;
            }
            // Walk the subdivision path p -> ... -> q.
            used[e0] = true;
            let mut inner: Vec<(usize, f64)> = Vec::new();
            let mut along = c.edge(e0).len;
            let mut at = first;
            while !is_branch[at] {
                inner.push((at, along));
                let &(next, e) = c.neighbors(at).iter().find(|&&(_, e)| !used[e]).expect("degree-2 vertex continues");
                used[e] = true;
                along += c.edge(e).len;
                at = next;
            }
            let q = at;
            let total = along;
            let mut prev = (tree.point_node[p], 0.0);
            for &(w, s) in inner.iter().filter(|&&(_, s)| s <= total / 2.0) {
                let node = tree.push(prev.0, s - prev.1);
                tree.point_node[w] = node;
                prev = (node, s);
            }
            let mut prev = (tree.point_node[q], total);
            for &(w, s) in inner.iter().rev().filter(|&&(_, s)| s > total / 2.0) {
                let node = tree.push(prev.0, prev.1 - s);
                tree.point_node[w] = node;
                prev = (node, s);
            }
        }
    }
    if tree.point_node.contains(&usize::MAX) {
        return Err(Error::Internal("cut graph vertex missed by core tree".into()));
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> MetricGraph {
        let t: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        MetricGraph::from_triples(n, &t).unwrap()
    }

    #[test]
    fn split_single_boundary_edge() {
        let g = path(3);
        let cut = Subgraph::from_edges(&g, [0]).unwrap();
        let sc = build_split_complex(&g, &cut).unwrap();
        assert_eq!(sc.splits.len(), 1);
        let z = sc.splits[0].vertex;
        assert_eq!(z, 3);
        let lens: Vec<f64> = sc.j.neighbors(z).iter().map(|&(_, e)| sc.j.edge(e).len).collect();
        assert_eq!(lens, vec![0.5, 0.5]);
        assert_eq!(sc.k_vertices, vec![0, 1, 3]);
        assert_eq!(sc.outside(), vec![2]);
    }

    #[test]
    fn split_without_boundary() {
        let g = path(4);
        let cut = Subgraph::from_edges(&g, 0..3).unwrap();
        let sc = build_split_complex(&g, &cut).unwrap();
        assert!(sc.splits.is_empty());
        assert_eq!(sc.j, g);
        assert_eq!(sc.k_edges, vec![0, 1, 2]);
    }

    #[test]
    fn split_requires_rescaling() {
        let g = path(3).scaled(2.0);
        let cut = Subgraph::from_edges(&g, [0]).unwrap();
        assert!(matches!(build_split_complex(&g, &cut), Err(Error::NotRescaled { .. })));
    }

    #[test]
    fn frt_small_cases() {
        let one = frt_tree(&DistMatrix::uniform(1, 1.0), 0).unwrap();
        assert_eq!(one.node_count(), 1);
        for d in [0.3, 1.0, 1.5, 7.0] {
            let m = DistMatrix::uniform(2, d);
            for s in 0..50 {
                let t = frt_tree(&m, s).unwrap();
                let dt = t.distance(0, 1);
                assert!(dt >= d && dt < 2.0 * d, "d {d} gives {dt}");
            }
        }
    }

    #[test]
    fn frt_dominates_path_metric() {
        let m = path(17).all_pairs();
        for s in 0..100 {
            let t = frt_tree(&m, s).unwrap();
            assert_eq!(t.domination_violation(&m), None);
            assert_eq!(t, frt_tree(&m, s).unwrap());
        }
    }

    #[test]
    fn core_tree_of_cycle_and_theta() {
        let cycle = MetricGraph::from_triples(5, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 1.0), (4, 0, 1.5)]).unwrap();
        let theta = MetricGraph::from_triples(
            6,
            &[(0, 2, 1.0), (2, 1, 1.0), (0, 3, 1.0), (3, 4, 1.0), (4, 1, 1.0), (0, 5, 3.0), (5, 1, 1.0)],
        )
        .unwrap();
        for g in [cycle, theta] {
            let m = g.all_pairs();
            for s in 0..50 {
                let t = core_tree(&g, s).unwrap();
                assert_eq!(t.domination_violation(&m), None);
            }
        }
    }
}
