//! Random planarization: map an embedded graph into a random planar graph
//! without contracting any distance.
//!
//! One sample is built as follows. The graph is rescaled so that its shortest
//! edge has length 1, a cut graph `C` is chosen, and every edge leaving `C`
//! is split in two (the split vertices are `Z`, and `K` is spanned by
//! `V(C) ∪ Z`). Every vertex off `K` is assigned to a split vertex by a
//! random peel assignment, and `K` is replaced by a random dominating tree.
//! The output graph `R` is that tree with one copy of `G - V(C)` hung from
//! each split vertex, so it is a 1-sum of a tree and planar pieces.

use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cutgraph::{cut_graph_treecotree, dilation, min_cut_graph_exact, CutGraphResult, Solver, DEFAULT_SEARCH_BUDGET};
use crate::embedding::SurfaceEmbedding;
use crate::error::{Error, Result};
use crate::graph::{rescale_min_distance, DistMatrix, Edge, MetricGraph, REL_TOL};
use crate::io;
use crate::peeling::{PeelAssignment, PeelSampler};
use crate::planarity::is_planar;
use crate::seed;
use crate::treeembed::{build_split_complex, embed_cutgraph_tree, DominatingTree, SplitComplex, TreeMode, SPLIT_HALF};

/// Above this many vertex pairs, verification checks a random subset.
pub const DEFAULT_PAIR_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutGraphMode {
    #[default]
    Exact,
    #[serde(rename = "treecotree")]
    TreeCotree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub cutgraph: CutGraphMode,
    pub tree: TreeMode,
    /// Node budget for the exact cut graph search.
    pub budget: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { cutgraph: CutGraphMode::Exact, tree: TreeMode::Core, budget: DEFAULT_SEARCH_BUDGET }
    }
}

/// How a sample was put together. Absent for genus-0 inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub cut_edges: Vec<usize>,
    pub solver: Solver,
    /// Factor the input lengths were multiplied by before construction.
    pub rescale: f64,
    /// Anchor (a vertex of the split graph) of every input vertex.
    pub anchors: Vec<usize>,
    pub peel_fallback: usize,
    pub tree: DominatingTree,
    /// Piece of each vertex of `R`: 0 for the tree, `i + 1` for copy `i`.
    pub piece: Vec<usize>,
    /// Tree vertex of `R` each copy is glued to.
    pub glue: Vec<usize>,
    /// The copies carry a genus-0 restriction of the input rotation system.
    pub pieces_planar: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSample {
    pub r: MetricGraph,
    /// Image in `R` of each input vertex.
    pub map: Vec<usize>,
    pub seed: u64,
    pub provenance: Option<Provenance>,
    /// `d_R(F(x), F(y)) / d_G(x, y)` for every input edge `{x, y}` (1 on loops).
    pub edge_expansion: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SampleFile {
    r: Value,
    map: Vec<usize>,
    seed: u64,
    provenance: Option<Provenance>,
    edge_expansion: Vec<f64>,
}

impl EmbeddingSample {
    pub fn to_json(&self) -> String {
        let file = SampleFile {
            r: io::graph_to_value(&self.r),
            map: self.map.clone(),
            seed: self.seed,
            provenance: self.provenance.clone(),
            edge_expansion: self.edge_expansion.clone(),
        };
        serde_json::to_string_pretty(&file).expect("sample serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SampleFile = serde_json::from_str(text)?;
        let mut provenance = file.provenance;
        if let Some(p) = provenance.as_mut() {
            p.tree.reindex();
        }
        Ok(EmbeddingSample {
            r: io::parse_value(&file.r)?.graph,
            map: file.map,
            seed: file.seed,
            provenance,
            edge_expansion: file.edge_expansion,
        })
    }
}

/// Quantities fixed once the cut graph is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub genus: usize,
    pub high_degree_count: usize,
    pub euler_number: i64,
    /// Dilation of the cut graph's vertices in the input graph.
    pub cut_dilation: f64,
    /// Dilation of `V(K)` in the split graph.
    pub split_dilation: f64,
    /// Whether the bounds below were asserted (exact cut graphs only).
    pub asserted: bool,
}

struct Prepared {
    factor: f64,
    cut: CutGraphResult,
    split: SplitComplex,
    peel: PeelSampler,
    /// Input vertices off the cut graph, and their index (or `usize::MAX`).
    outside: Vec<usize>,
    out_index: Vec<usize>,
    out_graph: MetricGraph,
    out_dist: DistMatrix,
    /// Index in `split.k_vertices` of each split-graph vertex, or `usize::MAX`.
    k_index: Vec<usize>,
    pieces_planar: bool,
    bounds: Bounds,
}

/// Seed-independent state of the pipeline for one input.
pub struct Planarizer {
    graph: MetricGraph,
    dist: DistMatrix,
    options: PipelineOptions,
    prepared: Option<Prepared>,
}

fn tagged(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Internal(m) | Error::Structural(m) => Error::Stage { stage, message: m },
        other => other,
    }
}

impl Planarizer {
    pub fn new(emb: &SurfaceEmbedding, options: PipelineOptions) -> Result<Self> {
        let graph = emb.graph().clone();
        let info = emb.euler_genus()?;
        let dist = graph.all_pairs();
        if info.euler_genus == 0 {
            return Ok(Planarizer { graph, dist, options, prepared: None });
        }
        let genus = info.genus();
        let (scaled, factor) = rescale_min_distance(&graph)?;
        let emb_r = SurfaceEmbedding::new(scaled.clone(), emb.rotations().to_vec(), emb.twisted().to_vec())?;
        let cut = match options.cutgraph {
            CutGraphMode::Exact => min_cut_graph_exact(&emb_r, options.budget),
            CutGraphMode::TreeCotree => cut_graph_treecotree(&emb_r, 0),
        }
        .map_err(tagged("cutgraph"))?;
        let split = build_split_complex(&scaled, &cut.subgraph()).map_err(tagged("split"))?;

        let n = graph.vertex_count();
        let outside = split.outside();
        let mut out_index = vec![usize::MAX; n];
        for (i, &v) in outside.iter().enumerate() {
            out_index[v] = i;
        }
        let (out_graph, _) = scaled.induced(&outside);
        let out_dist = out_graph.all_pairs();
        let mut k_index = vec![usize::MAX; split.j.vertex_count()];
        for (i, &v) in split.k_vertices.iter().enumerate() {
            k_index[v] = i;
        }
        let pieces_planar = emb_r.restrict(&outside).total_euler_genus().map_err(tagged("pieces"))? == 0;
        if !pieces_planar {
            return Err(Error::Stage { stage: "pieces", message: "graph off the cut graph is not planar".into() });
        }
        let peel = PeelSampler::new(&split.j, &split.k_vertices, genus).map_err(tagged("peel"))?;

        let bounds = Bounds {
            genus,
            high_degree_count: cut.high_degree_count,
            euler_number: cut.euler_number,
            cut_dilation: dilation(&scaled, &cut.vertices)?,
            split_dilation: dilation(&split.j, &split.k_vertices)?,
            asserted: options.cutgraph == CutGraphMode::Exact,
        };
        if bounds.asserted {
            let g = genus as f64;
            let checks = [
                (bounds.high_degree_count as f64 <= 4.0 * g - 2.0, "high-degree count exceeds 4g-2"),
                ((bounds.euler_number as f64) < 6.0 * g, "Euler number not below 6g"),
                (bounds.cut_dilation <= 4.0 * g * (1.0 + REL_TOL), "cut graph dilation exceeds 4g"),
                (bounds.split_dilation <= 14.0 * g * (1.0 + REL_TOL), "split dilation exceeds 14g"),
            ];
            if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
                return Err(Error::Stage { stage: "bounds", message: format!("{msg}: {bounds:?}") });
            }
        }
        let prepared = Prepared {
            factor,
            cut,
            split,
            peel,
            outside,
            out_index,
            out_graph,
            out_dist,
            k_index,
            pieces_planar,
            bounds,
        };
        Ok(Planarizer { graph, dist, options, prepared: Some(prepared) })
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn distances(&self) -> &DistMatrix {
        &self.dist
    }

    pub fn options(&self) -> PipelineOptions {
        self.options
    }

    pub fn cut_graph(&self) -> Option<&CutGraphResult> {
        self.prepared.as_ref().map(|p| &p.cut)
    }

    pub fn split_complex(&self) -> Option<&SplitComplex> {
        self.prepared.as_ref().map(|p| &p.split)
    }

    pub fn bounds(&self) -> Option<&Bounds> {
        self.prepared.as_ref().map(|p| &p.bounds)
    }

    /// Input vertices lying on `K` (the cut graph's vertices).
    pub fn k_points(&self) -> Vec<usize> {
        match &self.prepared {
            None => (0..self.graph.vertex_count()).collect(),
            Some(p) => p.cut.vertices.clone(),
        }
    }

    pub fn sample(&self, seed: u64) -> Result<EmbeddingSample> {
        let Some(p) = &self.prepared else {
            return Ok(EmbeddingSample {
                r: self.graph.clone(),
                map: (0..self.graph.vertex_count()).collect(),
                seed,
                provenance: None,
                edge_expansion: vec![1.0; self.graph.edge_count()],
            });
        };
        let n = self.graph.vertex_count();
        let assignment: PeelAssignment = p.peel.sample(seed::derive_tagged(seed, "peel", 0)).map_err(tagged("peel"))?;
        let tree = embed_cutgraph_tree(&p.split, self.options.tree, seed::derive_tagged(seed, "tree", 0))
            .map_err(tagged("tree"))?;

        let tn = tree.node_count();
        let m = p.outside.len();
        let copies = p.split.splits.len();
        let inv = 1.0 / p.factor;
        let mut edges = Vec::with_capacity(tn + copies * (p.out_graph.edge_count() + 1));
        for v in 0..tn {
            if let Some(u) = tree.parent[v] {
                edges.push(Edge { u: v, v: u, len: tree.length[v] * inv });
            }
        }
        let mut piece = vec![0; tn];
        let mut glue = Vec::with_capacity(copies);
        for (zi, s) in p.split.splits.iter().enumerate() {
            let base = tn + zi * m;
            for e in p.out_graph.edges() {
                edges.push(Edge { u: base + e.u, v: base + e.v, len: e.len * inv });
            }
            let anchor = tree.point_node[p.k_index[s.vertex]];
            edges.push(Edge { u: anchor, v: base + p.out_index[s.outer], len: SPLIT_HALF * inv });
            piece.extend(std::iter::repeat_n(zi + 1, m));
            glue.push(anchor);
        }
        let r = MetricGraph::new(tn + copies * m, edges).map_err(tagged("splice"))?;

        let mut map = Vec::with_capacity(n);
        for v in 0..n {
            let image = if p.k_index[v] != usize::MAX {
                tree.point_node[p.k_index[v]]
            } else {
                let a = assignment.anchor[v];
                if a < n {
                    return Err(Error::Stage { stage: "peel", message: format!("vertex {v} anchored on the cut graph") });
                }
                tn + (a - n) * m + p.out_index[v]
            };
            map.push(image);
        }

        let provenance = Provenance {
            cut_edges: p.cut.edges.clone(),
            solver: p.cut.solver,
            rescale: p.factor,
            anchors: assignment.anchor[..n].to_vec(),
            peel_fallback: assignment.fallback,
            tree,
            piece,
            glue,
            pieces_planar: p.pieces_planar,
        };
        let mut sample = EmbeddingSample { r, map, seed, provenance: Some(provenance), edge_expansion: Vec::new() };
        sample.edge_expansion = self
            .graph
            .edges()
            .iter()
            .map(|e| if e.is_loop() { 1.0 } else { self.expansion(&sample, e.u, e.v) })
            .collect();
        if let Some((x, y)) = self.contraction(&sample) {
            return Err(Error::Stage {
                stage: "splice",
                message: format!("pair ({x}, {y}) contracted: {} < {}", self.r_distance(&sample, x, y), self.dist.get(x, y)),
            });
        }
        Ok(sample)
    }

    /// `d_R(F(x), F(y))` in input units, read off the structure of `R`.
    pub fn r_distance(&self, sample: &EmbeddingSample, x: usize, y: usize) -> f64 {
        let (Some(p), Some(prov)) = (&self.prepared, &sample.provenance) else {
            return self.dist.get(x, y);
        };
        if x == y {
            return 0.0;
        }
        let tree = &prov.tree;
        let n = self.graph.vertex_count();
        // Tree point of `v` and the distance from it to F(v).
        let reach = |v: usize| -> (usize, f64) {
            if p.k_index[v] != usize::MAX {
                (p.k_index[v], 0.0)
            } else {
                let a = prov.anchors[v];
                let outer = p.split.splits[a - n].outer;
                (p.k_index[a], SPLIT_HALF + p.out_dist.get(p.out_index[outer], p.out_index[v]))
            }
        };
        let d = if p.k_index[x] == usize::MAX && p.k_index[y] == usize::MAX && prov.anchors[x] == prov.anchors[y] {
            p.out_dist.get(p.out_index[x], p.out_index[y])
        } else {
            let (tx, dx) = reach(x);
            let (ty, dy) = reach(y);
            dx + tree.distance(tx, ty) + dy
        };
        d / p.factor
    }

    pub fn expansion(&self, sample: &EmbeddingSample, x: usize, y: usize) -> f64 {
        self.r_distance(sample, x, y) / self.dist.get(x, y)
    }

    fn contraction(&self, sample: &EmbeddingSample) -> Option<(usize, usize)> {
        let n = self.graph.vertex_count();
        (0..n)
            .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
            .find(|&(x, y)| self.r_distance(sample, x, y) < self.dist.get(x, y) * (1.0 - REL_TOL))
    }
}

/// One sample of the pipeline on `emb`.
pub fn sample_planarization(emb: &SurfaceEmbedding, options: PipelineOptions, seed: u64) -> Result<EmbeddingSample> {
    Planarizer::new(emb, options)?.sample(seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: usize,
    pub y: usize,
    pub original: f64,
    pub image: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub map_valid: bool,
    pub injective: bool,
    pub planar: bool,
    /// Pieces meet only at their glue vertex and the tree piece is a tree.
    pub one_sum: bool,
    pub non_contracting: bool,
    pub pairs_checked: usize,
    /// Pairs were subsampled because there were too many.
    pub sampled: bool,
    pub violation: Option<Violation>,
    pub messages: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.map_valid && self.injective && self.planar && self.one_sum && self.non_contracting
    }
}

/// Recheck a sample against its input from scratch: planarity of `R` by an
/// independent test, the 1-sum structure recorded in its provenance, and
/// non-contraction using shortest paths in `R` itself.
pub fn verify_sample(g: &MetricGraph, s: &EmbeddingSample, pair_budget: usize) -> VerificationReport {
    let n = g.vertex_count();
    let mut report = VerificationReport {
        map_valid: s.map.len() == n && s.map.iter().all(|&v| v < s.r.vertex_count()),
        injective: true,
        planar: is_planar(&s.r),
        one_sum: true,
        non_contracting: true,
        pairs_checked: 0,
        sampled: false,
        violation: None,
        messages: Vec::new(),
    };
    if !report.map_valid {
        report.messages.push("map is not a total function into R".into());
        return report;
    }
    let mut images = s.map.clone();
    images.sort_unstable();
    images.dedup();
    report.injective = images.len() == n;
    if !report.planar {
        report.messages.push("R failed the planarity test".into());
    }
    if let Some(p) = &s.provenance {
        if let Err(msg) = check_one_sum(&s.r, p) {
            report.one_sum = false;
            report.messages.push(msg);
        }
    }

    let total = n * n.saturating_sub(1) / 2;
    let pairs: Vec<(usize, usize)> = if total <= pair_budget {
        (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect()
    } else {
        report.sampled = true;
        let mut rng = seed::rng(seed::derive_tagged(s.seed, "verify", 0));
        let mut out: Vec<(usize, usize)> = sample_indices(&mut rng, total, pair_budget)
            .into_iter()
            .map(|k| unrank_pair(n, k))
            .collect();
        out.sort_unstable();
        out
    };
    report.pairs_checked = pairs.len();
    let mut from_x: Option<(usize, Vec<f64>, Vec<f64>)> = None;
    for (x, y) in pairs {
        if from_x.as_ref().is_none_or(|f| f.0 != x) {
            from_x = Some((x, g.dijkstra(x), s.r.dijkstra(s.map[x])));
        }
        let (_, dg, dr) = from_x.as_ref().unwrap();
        let (d, image) = (dg[y], dr[s.map[y]]);
        if image < d * (1.0 - REL_TOL) {
            report.non_contracting = false;
            report.violation = Some(Violation { x, y, original: d, image });
            report.messages.push(format!("pair ({x}, {y}) contracted from {d} to {image}"));
            break;
        }
    }
    report
}

/// The `k`-th pair `(x, y)` with `x < y` in lexicographic order.
fn unrank_pair(n: usize, mut k: usize) -> (usize, usize) {
    for x in 0..n {
        let row = n - x - 1;
        if k < row {
            return (x, x + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair index out of range")
}

fn check_one_sum(r: &MetricGraph, p: &Provenance) -> std::result::Result<(), String> {
    if p.piece.len() != r.vertex_count() {
        return Err("piece labels do not cover R".into());
    }
    let mut tree_vertices = 0;
    let mut tree_edges = 0;
    for (id, e) in r.edges().iter().enumerate() {
        let (a, b) = (p.piece[e.u], p.piece[e.v]);
        match (a, b) {
            (0, 0) => tree_edges += 1,
            (a, b) if a == b => {}
            (0, c) | (c, 0) => {
                let t = if a == 0 { e.u } else { e.v };
                if p.glue.get(c - 1) != Some(&t) {
                    return Err(format!("edge {id} joins copy {} away from its glue vertex", c - 1));
                }
            }
            _ => return Err(format!("edge {id} joins two different copies")),
        }
    }
    let tree_nodes: Vec<usize> = (0..r.vertex_count()).filter(|&v| p.piece[v] == 0).collect();
    tree_vertices += tree_nodes.len();
    let (tree, _) = r.induced(&tree_nodes);
    if tree_edges + 1 != tree_vertices || !tree.is_connected() {
        return Err("tree piece is not a tree".into());
    }
    // Each copy must hang from its glue vertex by exactly one edge.
    let mut attachments = vec![0usize; p.glue.len()];
    for e in r.edges() {
        let (a, b) = (p.piece[e.u], p.piece[e.v]);
        if (a == 0) != (b == 0) {
            attachments[a.max(b) - 1] += 1;
        }
    }
    if let Some(c) = attachments.iter().position(|&k| k != 1) {
        return Err(format!("copy {c} is attached by {} edges", attachments[c]));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::torus_grid;

    #[test]
    fn genus_zero_is_identity() {
        let emb = crate::embedding::tests::planar_k4();
        let s = sample_planarization(&emb, PipelineOptions::default(), 3).unwrap();
        assert_eq!(s.r, *emb.graph());
        assert_eq!(s.map, vec![0, 1, 2, 3]);
        assert!(s.edge_expansion.iter().all(|&x| x == 1.0));
        assert!(verify_sample(emb.graph(), &s, DEFAULT_PAIR_BUDGET).passed());
    }

    #[test]
    fn torus_samples_verify() {
        let emb = torus_grid(3).unwrap();
        let pl = Planarizer::new(&emb, PipelineOptions::default()).unwrap();
        for s in 0..20 {
            let sample = pl.sample(s).unwrap();
            let report = verify_sample(emb.graph(), &sample, DEFAULT_PAIR_BUDGET);
            assert!(report.passed(), "{report:?}");
            // Structural distances agree with shortest paths in R.
            for x in 0..9 {
                let dr = sample.r.dijkstra(sample.map[x]);
                for y in 0..9 {
                    assert!((dr[sample.map[y]] - pl.r_distance(&sample, x, y)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn corrupted_sample_names_a_pair() {
        let emb = torus_grid(3).unwrap();
        let mut s = sample_planarization(&emb, PipelineOptions::default(), 1).unwrap();
        let edges: Vec<Edge> = s.r.edges().iter().map(|e| Edge { len: e.len * 1e-3, ..*e }).collect();
        s.r = MetricGraph::new(s.r.vertex_count(), edges).unwrap();
        let report = verify_sample(emb.graph(), &s, DEFAULT_PAIR_BUDGET);
        assert!(!report.non_contracting);
        assert!(report.violation.is_some());
        assert!(!report.passed());
    }

    #[test]
    fn json_round_trip() {
        let emb = torus_grid(3).unwrap();
        let s = sample_planarization(&emb, PipelineOptions::default(), 9).unwrap();
        let back = EmbeddingSample::from_json(&s.to_json()).unwrap();
        assert_eq!(back.to_json(), s.to_json());
        assert!(verify_sample(emb.graph(), &back, 10).passed());
    }

    #[test]
    fn unrank_covers_pairs() {
        let all: Vec<_> = (0..10).map(|k| unrank_pair(5, k)).collect();
        assert_eq!(all[0], (0, 1));
        assert_eq!(all[9], (3, 4));
    }
}
