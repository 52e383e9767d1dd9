//! Cut graphs: subgraphs along which the surface can be cut open into a disk.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{Faces, SurfaceEmbedding};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, Subgraph, REL_TOL};

/// Above this many points dilation is refused rather than sampled.
pub const DILATION_POINT_LIMIT: usize = 2000;

/// Default node budget for the exact search.
pub const DEFAULT_SEARCH_BUDGET: u64 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    #[serde(rename = "treecotree")]
    TreeCotree,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Search nodes visited (exact solver) or leaves pruned (tree-cotree).
    pub nodes: u64,
    /// Cut graphs found that improved the incumbent.
    pub improvements: u64,
}

/// Why a subgraph is or is not a cut graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub nonempty: bool,
    pub connected: bool,
    /// Regions left after merging faces across every edge outside the subgraph.
    pub regions: usize,
    pub euler_number: i64,
    pub euler_genus: usize,
}

impl Certificate {
    pub fn is_cut_graph(&self) -> bool {
        self.nonempty && self.connected && self.regions == 1 && self.euler_number == self.euler_genus as i64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutGraphResult {
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    pub length: f64,
    pub high_degree_count: usize,
    pub euler_number: i64,
    pub certified: bool,
    pub solver: Solver,
    pub stats: SearchStats,
    /// Size of the graph left after suppressing degree-2 vertices.
    pub core_vertices: usize,
    pub core_edges: usize,
}

impl CutGraphResult {
    pub fn subgraph(&self) -> Subgraph {
        Subgraph { edges: self.edges.clone(), vertices: self.vertices.clone() }
    }

    fn build(g: &MetricGraph, h: &Subgraph, certified: bool, solver: Solver, stats: SearchStats) -> Self {
        let mut deg = vec![0usize; h.vertices.len()];
        for &e in &h.edges {
            let ed = g.edge(e);
            deg[h.vertices.binary_search(&ed.u).unwrap()] += 1;
            deg[h.vertices.binary_search(&ed.v).unwrap()] += 1;
        }
        let branch = deg.iter().filter(|&&d| d != 2).count().max(1);
        let suppressed = h.vertices.len() - branch;
        CutGraphResult {
            edges: h.edges.clone(),
            vertices: h.vertices.clone(),
            length: h.length(g),
            high_degree_count: h.high_degree_count(g),
            euler_number: h.euler_number(),
            certified,
            solver,
            stats,
            core_vertices: branch,
            core_edges: h.edges.len() - suppressed,
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), sets: n }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        self.parent[a.max(b)] = a.min(b);
        self.sets -= 1;
        true
    }
}

fn regions_outside(faces: &Faces, in_h: &[bool]) -> usize {
    let mut uf = UnionFind::new(faces.count());
    for (e, &[a, b]) in faces.edge_faces.iter().enumerate() {
        if !in_h[e] {
            uf.union(a, b);
        }
    }
    uf.sets
}

fn certificate(g: &MetricGraph, faces: &Faces, eg: usize, h: &Subgraph) -> Certificate {
    let mut in_h = vec![false; g.edge_count()];
    for &e in &h.edges {
        in_h[e] = true;
    }
    let connected = {
        let local = |x: usize| h.vertices.binary_search(&x).unwrap();
        let mut uf = UnionFind::new(h.vertices.len());
        for &e in &h.edges {
            uf.union(local(g.edge(e).u), local(g.edge(e).v));
        }
        uf.sets <= 1
    };
    Certificate {
        nonempty: !h.edges.is_empty(),
        connected,
        regions: regions_outside(faces, &in_h),
        euler_number: h.euler_number(),
        euler_genus: eg,
    }
}

fn check_subgraph(g: &MetricGraph, h: &Subgraph) -> Result<()> {
    let rebuilt = Subgraph::from_edges(g, h.edges.iter().copied())?;
    if rebuilt.vertices != h.vertices || rebuilt.edges.len() != h.edges.len() {
        return Err(Error::Structural("subgraph vertex set does not match its edges".into()));
    }
    Ok(())
}

/// Certify whether `h` is a cut graph of `emb`: it must be nonempty and
/// connected, merging faces across all edges outside `h` must leave a single
/// region, and its Euler number must equal the Euler genus of the surface.
pub fn is_cut_graph(emb: &SurfaceEmbedding, h: &Subgraph) -> Result<Certificate> {
    check_subgraph(emb.graph(), h)?;
    let eg = emb.euler_genus()?.euler_genus;
    let faces = emb.faces()?;
    Ok(certificate(emb.graph(), &faces, eg, h))
}

/// Tree-cotree cut graph: a shortest-path tree from `root`, a maximum-length
/// spanning tree of the dual over the remaining edges, and the leftover
/// edges; dangling tree branches are then pruned.
pub fn cut_graph_treecotree(emb: &SurfaceEmbedding, root: usize) -> Result<CutGraphResult> {
    let g = emb.graph();
    if root >= g.vertex_count() {
        return Err(Error::invalid("root", format!("unknown vertex {root}")));
    }
    let eg = emb.euler_genus()?.euler_genus;
    if eg == 0 {
        return Err(Error::GenusZero);
    }
    let faces = emb.faces()?;
    let (_, parent) = g.dijkstra_tree(&[root]);
    let mut in_tree = vec![false; g.edge_count()];
    for p in parent.iter().flatten() {
        in_tree[*p] = true;
    }
    let mut rest: Vec<usize> = (0..g.edge_count()).filter(|&e| !in_tree[e]).collect();
    rest.sort_by(|&a, &b| g.edge(b).len.total_cmp(&g.edge(a).len).then(a.cmp(&b)));
    let mut uf = UnionFind::new(faces.count());
    let mut leftover = Vec::new();
    for e in rest {
        let [a, b] = faces.edge_faces[e];
        if !uf.union(a, b) {
            leftover.push(e);
        }
    }
    if leftover.len() != eg {
        return Err(Error::Internal(format!(
            "tree-cotree left {} edges, expected Euler genus {eg}",
            leftover.len()
        )));
    }

    let mut in_h: Vec<bool> = in_tree.clone();
    let mut is_x = vec![false; g.edge_count()];
    for &e in &leftover {
        in_h[e] = true;
        is_x[e] = true;
    }
    let mut deg = vec![0usize; g.vertex_count()];
    let mut touches_x = vec![false; g.vertex_count()];
    for e in (0..g.edge_count()).filter(|&e| in_h[e]) {
        let ed = g.edge(e);
        deg[ed.u] += 1;
        deg[ed.v] += 1;
        if is_x[e] {
            touches_x[ed.u] = true;
            touches_x[ed.v] = true;
        }
    }
    let mut pruned = 0u64;
    let mut stack: Vec<usize> = (0..g.vertex_count()).filter(|&v| deg[v] == 1 && !touches_x[v]).collect();
    while let Some(v) = stack.pop() {
        if deg[v] != 1 || touches_x[v] {
            continue;
        }
        let &(w, e) = g.neighbors(v).iter().find(|&&(_, e)| in_h[e]).expect("leaf has an edge");
        in_h[e] = false;
        deg[v] = 0;
        deg[w] -= 1;
        pruned += 1;
        if deg[w] == 1 && !touches_x[w] {
            stack.push(w);
        }
    }
    let h = Subgraph::from_edges(g, (0..g.edge_count()).filter(|&e| in_h[e]))?;
    let cert = certificate(g, &faces, eg, &h);
    if !cert.is_cut_graph() {
        return Err(Error::Internal(format!("tree-cotree output failed certification: {cert:?}")));
    }
    Ok(CutGraphResult::build(g, &h, true, Solver::TreeCotree, SearchStats { nodes: pruned, improvements: 0 }))
}

/// Exhaustive branch-and-bound over connected edge subsets for a minimum
/// length cut graph. Ties are broken toward the lexicographically smallest
/// sorted edge list. `budget` caps the number of search nodes.
pub fn min_cut_graph_exact(emb: &SurfaceEmbedding, budget: u64) -> Result<CutGraphResult> {
    let g = emb.graph();
    let eg = emb.euler_genus()?.euler_genus;
    if eg == 0 {
        return Err(Error::GenusZero);
    }
    let faces = emb.faces()?;
    let mut sorted_lens: Vec<f64> = g.edges().iter().map(|e| e.len).collect();
    sorted_lens.sort_by(f64::total_cmp);
    let mut prefix = vec![0.0];
    for l in &sorted_lens {
        prefix.push(prefix.last().unwrap() + l);
    }

    let incumbent = cut_graph_treecotree(emb, 0)?;
    let mut search = Search {
        g,
        faces: &faces,
        eg: eg as i64,
        budget,
        prefix,
        in_h: vec![false; g.edge_count()],
        vdeg: vec![0; g.vertex_count()],
        nv: 0,
        ne: 0,
        leaves: 0,
        length: 0.0,
        root: 0,
        best_len: incumbent.length,
        best_edges: incumbent.edges.clone(),
        stats: SearchStats::default(),
    };
    for root in 0..g.edge_count() {
        search.root = root;
        search.add(root);
        let ext: Vec<usize> = search.fresh_candidates(root, &[]);
        let r = search.recurse(&ext);
        search.remove(root);
        r?;
    }
    let h = Subgraph::from_edges(g, search.best_edges.iter().copied())?;
    let cert = certificate(g, &faces, eg, &h);
    if !cert.is_cut_graph() {
        return Err(Error::Internal(format!("exact search returned a non cut graph: {cert:?}")));
    }
    let stats = search.stats.clone();
    Ok(CutGraphResult::build(g, &h, true, Solver::Exact, stats))
}

struct Search<'a> {
    g: &'a MetricGraph,
    faces: &'a Faces,
    eg: i64,
    budget: u64,
    /// prefix[k] = sum of the k shortest edge lengths.
    prefix: Vec<f64>,
    in_h: Vec<bool>,
    vdeg: Vec<usize>,
    nv: usize,
    ne: usize,
    leaves: usize,
    length: f64,
    root: usize,
    best_len: f64,
    best_edges: Vec<usize>,
    stats: SearchStats,
}

impl Search<'_> {
    fn bump(&mut self, v: usize, delta: isize) {
        let before = self.vdeg[v];
        let after = (before as isize + delta) as usize;
        if before == 0 {
            self.nv += 1;
        }
        if after == 0 {
            self.nv -= 1;
        }
        if before == 1 {
            self.leaves -= 1;
        }
        if after == 1 {
            self.leaves += 1;
        }
        self.vdeg[v] = after;
    }

    fn add(&mut self, e: usize) {
        let ed = *self.g.edge(e);
        self.in_h[e] = true;
        self.ne += 1;
        self.length += ed.len;
        if ed.is_loop() {
            self.bump(ed.u, 2);
        } else {
            self.bump(ed.u, 1);
            self.bump(ed.v, 1);
        }
    }

    fn remove(&mut self, e: usize) {
        let ed = *self.g.edge(e);
        self.in_h[e] = false;
        self.ne -= 1;
        self.length -= ed.len;
        if ed.is_loop() {
            self.bump(ed.u, -2);
        } else {
            self.bump(ed.u, -1);
            self.bump(ed.v, -1);
        }
    }

    /// Candidates contributed by adding `e`: edges above the root that touch
    /// an endpoint of `e` new to the subgraph and no older subgraph vertex.
    fn fresh_candidates(&self, e: usize, old_vertices_of_e: &[usize]) -> Vec<usize> {
        let ed = self.g.edge(e);
        let mut out = Vec::new();
        let mut ends = vec![ed.u];
        if ed.v != ed.u {
            ends.push(ed.v);
        }
        for &w in &ends {
            if old_vertices_of_e.contains(&w) {
                continue;
            }
            for &(y, f) in self.g.neighbors(w) {
                if f <= self.root || self.in_h[f] || out.contains(&f) {
                    continue;
                }
                // y must not be an older vertex of the subgraph.
                let y_old = self.vdeg[y] > 0 && !ends.contains(&y) || old_vertices_of_e.contains(&y);
                if y_old {
                    continue;
                }
                out.push(f);
            }
        }
        out
    }

    fn euler_number(&self) -> i64 {
        self.ne as i64 - self.nv as i64 + 1
    }

    fn recurse(&mut self, ext: &[usize]) -> Result<()> {
        self.stats.nodes += 1;
        if self.stats.nodes > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        let chi = self.euler_number();
        let tol = REL_TOL * self.best_len.max(1.0);
        let needed = ((self.eg - chi).max(0) as usize).max(self.leaves.div_ceil(2));
        let lower = self.length + self.prefix[needed.min(self.prefix.len() - 1)];
        if lower > self.best_len + tol {
            return Ok(());
        }
        if regions_outside(self.faces, &self.in_h) != 1 {
            return Ok(());
        }
        if chi >= self.eg {
            if chi == self.eg && self.leaves == 0 {
                let mut edges: Vec<usize> = (0..self.in_h.len()).filter(|&e| self.in_h[e]).collect();
                edges.sort_unstable();
                let better = self.length < self.best_len - tol
                    || (self.length <= self.best_len + tol && edges < self.best_edges);
                if better {
                    self.best_len = self.length;
                    self.best_edges = edges;
                    self.stats.improvements += 1;
                }
            }
            return Ok(());
        }
        for i in 0..ext.len() {
            let e = ext[i];
            let ed = *self.g.edge(e);
            let old: Vec<usize> = [ed.u, ed.v].into_iter().filter(|&x| self.vdeg[x] > 0).collect();
            let mut next: Vec<usize> = ext[i + 1..].to_vec();
            for f in self.fresh_candidates(e, &old) {
                if !next.contains(&f) {
                    next.push(f);
                }
            }
            self.add(e);
            let r = self.recurse(&next);
            self.remove(e);
            r?;
        }
        Ok(())
    }
}

/// Dilation of `points` in `g`: the largest ratio of induced-subgraph distance
/// to ambient distance over distinct pairs. Infinite when the induced
/// subgraph disconnects a pair; 1 for fewer than two points.
pub fn dilation(g: &MetricGraph, points: &[usize]) -> Result<f64> {
    let mut a: Vec<usize> = points.to_vec();
    a.sort_unstable();
    a.dedup();
    if let Some(&bad) = a.iter().find(|&&x| x >= g.vertex_count()) {
        return Err(Error::invalid("points", format!("unknown vertex {bad}")));
    }
    if a.len() < 2 {
        return Ok(1.0);
    }
    if a.len() > DILATION_POINT_LIMIT {
        return Err(Error::BudgetExceeded { budget: DILATION_POINT_LIMIT as u64 });
    }
    let (induced, _) = g.induced(&a);
    let worst = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let ambient = g.dijkstra(a[i]);
            let inner = induced.dijkstra(i);
            let mut w: f64 = 1.0;
            for j in (i + 1)..a.len() {
                let d = ambient[a[j]];
                if !inner[j].is_finite() {
                    return f64::INFINITY;
                }
                w = w.max(inner[j] / d);
            }
            w
        })
        .reduce(|| 1.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::torus_grid;

    /// Edge ids of the 3x3 torus grid (horizontal `2(3i+j)`, vertical `+1`).
    fn row_cycle(i: usize) -> Vec<usize> {
        (0..3).map(|j| 2 * (3 * i + j)).collect()
    }
    fn col_cycle(j: usize) -> Vec<usize> {
        (0..3).map(|i| 2 * (3 * i + j) + 1).collect()
    }

    #[test]
    fn figure_eight_is_a_cut_graph() {
        let emb = torus_grid(3).unwrap();
        let h = Subgraph::from_edges(emb.graph(), row_cycle(0).into_iter().chain(col_cycle(0))).unwrap();
        let cert = is_cut_graph(&emb, &h).unwrap();
        assert_eq!(cert.regions, 1);
        assert_eq!(cert.euler_number, 2);
        assert!(cert.is_cut_graph());
    }

    #[test]
    fn face_boundary_and_whole_graph_are_not() {
        let emb = torus_grid(3).unwrap();
        // Boundary of the square on (0,0),(0,1),(1,1),(1,0).
        let sq = Subgraph::from_edges(emb.graph(), [0, 1, 3, 6]).unwrap();
        let cert = is_cut_graph(&emb, &sq).unwrap();
        assert_eq!(cert.euler_number, 1);
        assert!(!cert.is_cut_graph());

        let all = Subgraph::from_edges(emb.graph(), 0..18).unwrap();
        let cert = is_cut_graph(&emb, &all).unwrap();
        assert_eq!(cert.regions, 9);
        assert!(!cert.is_cut_graph());
    }

    #[test]
    fn invariant_under_edge_relabeling() {
        let emb = torus_grid(3).unwrap();
        let h: Vec<usize> = row_cycle(1).into_iter().chain(col_cycle(2)).collect();
        let base = is_cut_graph(&emb, &Subgraph::from_edges(emb.graph(), h.clone()).unwrap()).unwrap();
        // Reverse edge ids.
        let m = emb.graph().edge_count();
        let edges: Vec<_> = (0..m).rev().map(|e| *emb.graph().edge(e)).collect();
        let g2 = MetricGraph::new(emb.graph().vertex_count(), edges).unwrap();
        let rot = emb
            .rotations()
            .iter()
            .map(|r| r.iter().map(|d| crate::Dart::new(m - 1 - d.edge(), d.end())).collect())
            .collect();
        let emb2 = SurfaceEmbedding::orientable(g2, rot).unwrap();
        let h2 = Subgraph::from_edges(emb2.graph(), h.iter().map(|&e| m - 1 - e)).unwrap();
        assert_eq!(is_cut_graph(&emb2, &h2).unwrap(), base);
    }

    #[test]
    fn not_a_subgraph() {
        let emb = torus_grid(3).unwrap();
        let bogus = Subgraph { edges: vec![99], vertices: vec![0] };
        assert!(matches!(is_cut_graph(&emb, &bogus), Err(Error::Structural(_))));
    }

    #[test]
    fn bouquet_needs_everything() {
        let g = MetricGraph::from_triples(1, &[(0, 0, 1.0), (0, 0, 1.0)]).unwrap();
        let d = crate::Dart::new;
        let emb = SurfaceEmbedding::orientable(g, vec![vec![d(0, 0), d(1, 0), d(0, 1), d(1, 1)]]).unwrap();
        let r = min_cut_graph_exact(&emb, 1000).unwrap();
        assert_eq!(r.edges, vec![0, 1]);
        assert_eq!(r.length, 2.0);
    }

    #[test]
    fn exact_torus_grid() {
        let emb = torus_grid(3).unwrap();
        let r = min_cut_graph_exact(&emb, DEFAULT_SEARCH_BUDGET).unwrap();
        assert_eq!(r.length, 6.0);
        assert!(r.certified);
        assert_eq!(r.euler_number, 2);
        assert!(r.high_degree_count <= 2);
    }

    #[test]
    fn genus_zero_and_budget_errors() {
        let emb = crate::embedding::tests::planar_k4();
        assert_eq!(min_cut_graph_exact(&emb, 10).unwrap_err(), Error::GenusZero);
        assert_eq!(cut_graph_treecotree(&emb, 0).unwrap_err(), Error::GenusZero);
        let torus = torus_grid(4).unwrap();
        assert_eq!(min_cut_graph_exact(&torus, 5).unwrap_err(), Error::BudgetExceeded { budget: 5 });
    }

    #[test]
    fn treecotree_on_torus() {
        let emb = torus_grid(3).unwrap();
        for root in 0..9 {
            let r = cut_graph_treecotree(&emb, root).unwrap();
            assert!(r.certified);
            assert_eq!(r.euler_number, 2);
            assert!(r.length >= 6.0);
        }
    }

    #[test]
    fn dilation_examples() {
        let c4 = MetricGraph::from_triples(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 0.5), (3, 0, 0.5)]).unwrap();
        assert_eq!(dilation(&c4, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(dilation(&c4, &[0, 1, 2]).unwrap(), 2.0);
        assert!(dilation(&c4, &[0, 2]).unwrap().is_infinite());
        assert_eq!(dilation(&c4, &[1]).unwrap(), 1.0);
    }
}
