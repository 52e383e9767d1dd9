#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfcut::cutgraph::is_cut_graph;
use surfcut::{MetricGraph, Subgraph, SurfaceEmbedding};

/// Same embedding with integer lengths drawn from 1..=4.
pub fn reweighted(emb: &SurfaceEmbedding, seed: u64) -> SurfaceEmbedding {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = emb
        .graph()
        .edges()
        .iter()
        .map(|e| surfcut::Edge { len: rng.gen_range(1..=4) as f64, ..*e })
        .collect();
    let g = MetricGraph::new(emb.graph().vertex_count(), edges).unwrap();
    SurfaceEmbedding::new(g, emb.rotations().to_vec(), emb.twisted().to_vec()).unwrap()
}

/// Minimum over every edge subset, checked one by one.
pub fn brute_force(emb: &SurfaceEmbedding) -> f64 {
    let g = emb.graph();
    let m = g.edge_count();
    assert!(m < 26, "too many edges for exhaustive search");
    let mut best = f64::INFINITY;
    for mask in 1u64..(1 << m) {
        let h = Subgraph::from_edges(g, (0..m).filter(|&e| mask >> e & 1 == 1)).unwrap();
        let len = h.length(g);
        if len < best && is_cut_graph(emb, &h).unwrap().is_cut_graph() {
            best = len;
        }
    }
    best
}
