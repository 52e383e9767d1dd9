//! The peeled graph: `G[A]` with one copy of `G[(V∖A) ∪ {a}]` hung at each
//! anchor `a`, and a random assignment of vertices to anchors.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DistMatrix, Edge, MetricGraph};
use crate::partition::{KprPartitioner, Partition};
use crate::seed;

#[derive(Clone, Debug)]
pub struct PeeledGraph {
    pub graph: MetricGraph,
    /// Sorted anchor set `A`.
    pub anchors: Vec<usize>,
    /// Vertices outside `A`, sorted.
    pub outside: Vec<usize>,
    /// Original vertex of each peeled vertex.
    pub origin: Vec<usize>,
    /// Anchor index whose copy a peeled vertex lies in; `None` on the core.
    pub layer: Vec<Option<usize>>,
}

impl PeeledGraph {
    /// Peeled vertex of anchor `a` (an original id in `A`).
    pub fn core_vertex(&self, a: usize) -> usize {
        self.anchors.binary_search(&a).expect("anchor")
    }

    /// Peeled vertex of original `v` inside the copy hung at anchor `a`.
    pub fn copy_vertex(&self, a: usize, v: usize) -> usize {
        if v == a {
            return self.core_vertex(a);
        }
        let ai = self.core_vertex(a);
        let vi = self.outside.binary_search(&v).expect("vertex outside A");
        self.anchors.len() + ai * self.outside.len() + vi
    }

    /// Image of `v` under an assignment: the copy of `v` at its anchor.
    pub fn image(&self, assignment: &PeelAssignment, v: usize) -> usize {
        self.copy_vertex(assignment.anchor[v], v)
    }
}

fn sorted_set(g: &MetricGraph, a: &[usize]) -> Result<Vec<usize>> {
    let mut a = a.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.is_empty() {
        return Err(Error::invalid("anchors", "anchor set is empty"));
    }
    if let Some(&bad) = a.iter().find(|&&v| v >= g.vertex_count()) {
        return Err(Error::invalid("anchors", format!("unknown vertex {bad}")));
    }
    Ok(a)
}

pub fn build_peel(g: &MetricGraph, anchors: &[usize]) -> Result<PeeledGraph> {
    let anchors = sorted_set(g, anchors)?;
    let n = g.vertex_count();
    let mut in_a = vec![false; n];
    for &a in &anchors {
        in_a[a] = true;
    }
    let outside: Vec<usize> = (0..n).filter(|&v| !in_a[v]).collect();
    let total = anchors.len() + anchors.len() * outside.len();
    let mut peel = PeeledGraph {
        graph: MetricGraph::new(0, Vec::new())?,
        anchors,
        outside,
        origin: Vec::with_capacity(total),
        layer: Vec::with_capacity(total),
    };
    for &a in &peel.anchors {
        peel.origin.push(a);
        peel.layer.push(None);
    }
    for ai in 0..peel.anchors.len() {
        for &v in &peel.outside {
            peel.origin.push(v);
            peel.layer.push(Some(ai));
        }
    }
    let mut edges = Vec::new();
    for e in g.edges() {
        match (in_a[e.u], in_a[e.v]) {
            (true, true) => edges.push(Edge { u: peel.core_vertex(e.u), v: peel.core_vertex(e.v), len: e.len }),
            (false, false) => {
                for &a in &peel.anchors {
                    edges.push(Edge { u: peel.copy_vertex(a, e.u), v: peel.copy_vertex(a, e.v), len: e.len });
                }
            }
            (true, false) | (false, true) => {
                let a = if in_a[e.u] { e.u } else { e.v };
                edges.push(Edge { u: peel.copy_vertex(a, e.u), v: peel.copy_vertex(a, e.v), len: e.len });
            }
        }
    }
    peel.graph = MetricGraph::new(total, edges)?;
    Ok(peel)
}

/// A map from vertices to anchors, identity on the anchors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelAssignment {
    pub anchor: Vec<usize>,
    pub seed: u64,
    /// Partition scale `2^j` used for each vertex outside `A` (absent on `A`
    /// and on fallback vertices).
    pub scale: Vec<Option<f64>>,
    /// Vertices cut off from `A` once edges inside `A` are removed; these
    /// are sent to their nearest anchor in the full graph. Cannot happen on
    /// a connected graph, but counted so that it would show.
    pub fallback: usize,
}

/// Everything about `(G, A)` that does not depend on the seed.
pub struct PeelSampler {
    graph: MetricGraph,
    anchors: Vec<usize>,
    in_a: Vec<bool>,
    kpr: KprPartitioner,
    /// `from_anchor[i][v]` = distance from anchor `i` to `v` without edges inside `A`.
    from_anchor: Vec<Vec<f64>>,
    to_a: Vec<f64>,
    top_scale: i32,
}

impl PeelSampler {
    pub fn new(g: &MetricGraph, anchors: &[usize], genus: usize) -> Result<Self> {
        let anchors = sorted_set(g, anchors)?;
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        let mut in_a = vec![false; g.vertex_count()];
        for &a in &anchors {
            in_a[a] = true;
        }
        let stripped = g.filter_edges(|_, e| !(in_a[e.u] && in_a[e.v]));
        let from_anchor: Vec<Vec<f64>> = anchors.iter().map(|&a| stripped.dijkstra(a)).collect();
        let to_a = stripped.dijkstra_multi(&anchors);
        let kpr = KprPartitioner::new(&stripped, genus);
        let diam = kpr.metric().diameter().max(1.0);
        let top_scale = (4.0 * diam).log2().ceil() as i32;
        Ok(PeelSampler { graph: g.clone(), anchors, in_a, kpr, from_anchor, to_a, top_scale })
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn stripped(&self) -> &MetricGraph {
        self.kpr.graph()
    }

    pub fn stripped_metric(&self) -> &DistMatrix {
        self.kpr.metric()
    }

    /// Scale exponent for `v`: `⌈log₂ max(1, d(v, A))⌉ + 1`.
    pub fn scale_exponent(&self, v: usize) -> i32 {
        self.to_a[v].max(1.0).log2().ceil() as i32 + 1
    }

    pub fn sample(&self, seed: u64) -> Result<PeelAssignment> {
        let n = self.graph.vertex_count();
        let mut partitions: BTreeMap<i32, Partition> = BTreeMap::new();
        let mut anchor = (0..n).collect::<Vec<usize>>();
        let mut scale = vec![None; n];
        let mut fallback = 0;
        let mut full_from_a: Option<Vec<Vec<f64>>> = None;
        for v in (0..n).filter(|&v| !self.in_a[v]) {
            if !self.to_a[v].is_finite() {
                fallback += 1;
                let dists = full_from_a
                    .get_or_insert_with(|| self.anchors.iter().map(|&a| self.graph.dijkstra(a)).collect());
                anchor[v] = self.argmin(|i| dists[i][v]);
                continue;
            }
            let j = self.scale_exponent(v).min(self.top_scale);
            if let Entry::Vacant(slot) = partitions.entry(j) {
                slot.insert(self.kpr.sample(2f64.powi(j), seed::derive_tagged(seed, "peel-scale", j as u64))?);
            }
            let p = &partitions[&j];
            let cluster = &p.blocks[p.block_of(v)];
            anchor[v] = self.argmin(|i| {
                cluster.iter().map(|&u| self.from_anchor[i][u]).fold(f64::INFINITY, f64::min)
            });
            scale[v] = Some(2f64.powi(j));
        }
        Ok(PeelAssignment { anchor, seed, scale, fallback })
    }

    /// Anchor minimizing `cost`, ties to the smallest id.
    fn argmin(&self, cost: impl Fn(usize) -> f64) -> usize {
        let mut best = (f64::INFINITY, self.anchors[0]);
        for (i, &a) in self.anchors.iter().enumerate() {
            let c = cost(i);
            if c < best.0 {
                best = (c, a);
            }
        }
        best.1
    }
}

/// One assignment for `(g, A)`, partitions drawn for the given genus.
pub fn sample_peel_assignment(g: &MetricGraph, anchors: &[usize], genus: usize, seed: u64) -> Result<PeelAssignment> {
    PeelSampler::new(g, anchors, genus)?.sample(seed)
}
