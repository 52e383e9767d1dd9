//! Cellular embeddings given by signed rotation systems.
//!
//! Every edge `e` contributes two darts: `2e` at its `u` end and `2e + 1` at
//! its `v` end. A vertex's rotation is the cyclic order of the darts at that
//! vertex. An edge is *twisted* when traversing it reverses the local
//! orientation; an embedding with no twisted edges is orientable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, MetricGraph};

/// One end of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dart(pub usize);

impl Dart {
    pub fn new(edge: usize, end: usize) -> Self {
        debug_assert!(end < 2);
        Dart(2 * edge + end)
    }

    pub fn edge(self) -> usize {
        self.0 / 2
    }

    /// 0 for the `u` end, 1 for the `v` end.
    pub fn end(self) -> usize {
        self.0 % 2
    }

    pub fn twin(self) -> Dart {
        Dart(self.0 ^ 1)
    }
}

/// Traced faces of an embedding.
#[derive(Clone, Debug)]
pub struct Faces {
    /// Each face as the sequence of darts it leaves through.
    pub walks: Vec<Vec<Dart>>,
    /// For every edge, the faces on its two sides (equal when both sides
    /// belong to the same face).
    pub edge_faces: Vec<[usize; 2]>,
}

impl Faces {
    pub fn count(&self) -> usize {
        self.walks.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenusInfo {
    pub euler_genus: usize,
    pub orientable: bool,
    pub faces: usize,
}

impl GenusInfo {
    /// Orientable genus (half the Euler genus) or non-orientable genus.
    pub fn genus(&self) -> usize {
        if self.orientable {
            self.euler_genus / 2
        } else {
            self.euler_genus
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceEmbedding {
    graph: MetricGraph,
    rotation: Vec<Vec<Dart>>,
    twisted: Vec<bool>,
    /// Index of each dart within its vertex rotation.
    position: Vec<usize>,
}

impl SurfaceEmbedding {
    pub fn new(graph: MetricGraph, rotation: Vec<Vec<Dart>>, twisted: Vec<bool>) -> Result<Self> {
        let n = graph.vertex_count();
        let m = graph.edge_count();
        if rotation.len() != n {
            return Err(Error::invalid(
                "rotation",
                format!("expected {n} vertex rotations, got {}", rotation.len()),
            ));
        }
        if twisted.len() != m {
            return Err(Error::invalid("edges", format!("expected {m} signs, got {}", twisted.len())));
        }
        let mut position = vec![usize::MAX; 2 * m];
        for (v, rot) in rotation.iter().enumerate() {
            for (i, &d) in rot.iter().enumerate() {
                let loc = format!("rotation[{v}][{i}]");
                if d.edge() >= m {
                    return Err(Error::invalid(loc, format!("dart of unknown edge {}", d.edge())));
                }
                let e = graph.edge(d.edge());
                let at = if d.end() == 0 { e.u } else { e.v };
                if at != v {
                    return Err(Error::invalid(
                        loc,
                        format!("dart ({}, {}) belongs to vertex {at}", d.edge(), d.end()),
                    ));
                }
                if position[d.0] != usize::MAX {
                    return Err(Error::invalid(loc, format!("dart ({}, {}) repeated", d.edge(), d.end())));
                }
                position[d.0] = i;
            }
        }
        if let Some(missing) = position.iter().position(|&p| p == usize::MAX) {
            let d = Dart(missing);
            return Err(Error::invalid(
                "rotation",
                format!("dart ({}, {}) missing from every rotation", d.edge(), d.end()),
            ));
        }
        Ok(SurfaceEmbedding { graph, rotation, twisted, position })
    }

    /// Orientable embedding from a rotation system with no twisted edges.
    pub fn orientable(graph: MetricGraph, rotation: Vec<Vec<Dart>>) -> Result<Self> {
        let m = graph.edge_count();
        Self::new(graph, rotation, vec![false; m])
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn rotation(&self, v: usize) -> &[Dart] {
        &self.rotation[v]
    }

    pub fn rotations(&self) -> &[Vec<Dart>] {
        &self.rotation
    }

    pub fn is_twisted(&self, edge: usize) -> bool {
        self.twisted[edge]
    }

    pub fn twisted(&self) -> &[bool] {
        &self.twisted
    }

    /// Vertex a dart leaves from.
    pub fn dart_vertex(&self, d: Dart) -> usize {
        let e = self.graph.edge(d.edge());
        if d.end() == 0 {
            e.u
        } else {
            e.v
        }
    }

    fn rot_next(&self, d: Dart) -> Dart {
        let rot = &self.rotation[self.dart_vertex(d)];
        rot[(self.position[d.0] + 1) % rot.len()]
    }

    fn rot_prev(&self, d: Dart) -> Dart {
        let rot = &self.rotation[self.dart_vertex(d)];
        rot[(self.position[d.0] + rot.len() - 1) % rot.len()]
    }

    /// Trace all faces. Faces are orbits of (dart, local orientation) flags
    /// under the face-successor map; each face shows up as a pair of mutually
    /// reversed orbits, and only the first-discovered of each pair is kept.
    pub fn faces(&self) -> Result<Faces> {
        let m = self.graph.edge_count();
        // flag index: 2 * dart + (0 for +, 1 for -)
        let mut seen = vec![false; 4 * m];
        let mut walks = Vec::new();
        let mut edge_faces = vec![[usize::MAX; 2]; m];
        let mut fill = vec![0usize; m];
        let mut in_orbit = vec![false; 4 * m];
        for start in 0..4 * m {
            if seen[start] {
                continue;
            }
            let face = walks.len();
            let mut walk = Vec::new();
            let mut orbit = Vec::new();
            let mut flag = start;
            loop {
                seen[flag] = true;
                orbit.push(flag);
                let d = Dart(flag / 2);
                let plus = flag % 2 == 0;
                walk.push(d);
                let e = d.edge();
                if fill[e] >= 2 {
                    return Err(Error::Structural(format!("edge {e} traversed more than twice")));
                }
                edge_faces[e][fill[e]] = face;
                fill[e] += 1;
                let plus_after = plus != self.twisted[e];
                let arrive = d.twin();
                let next = if plus_after { self.rot_next(arrive) } else { self.rot_prev(arrive) };
                flag = 2 * next.0 + usize::from(!plus_after);
                if flag == start {
                    break;
                }
                if seen[flag] {
                    return Err(Error::Structural("face successor map is not a permutation".into()));
                }
            }
            for &f in &orbit {
                in_orbit[f] = true;
            }
            for &f in &orbit {
                let d = Dart(f / 2);
                let plus_after = (f % 2 == 0) != self.twisted[d.edge()];
                let rev = 2 * d.twin().0 + usize::from(plus_after);
                if in_orbit[rev] {
                    return Err(Error::Structural("face orbit is its own reverse".into()));
                }
                if seen[rev] {
                    return Err(Error::Structural("reversed face orbit overlaps another face".into()));
                }
                seen[rev] = true;
            }
            for &f in &orbit {
                in_orbit[f] = false;
            }
            walks.push(walk);
        }
        if let Some(e) = fill.iter().position(|&c| c != 2) {
            return Err(Error::Structural(format!("edge {e} is not on exactly two face sides")));
        }
        Ok(Faces { walks, edge_faces })
    }

    /// Whether some switching of local orientations makes every edge untwisted.
    pub fn is_orientable(&self) -> bool {
        let g = &self.graph;
        let mut flip: Vec<Option<bool>> = vec![None; g.vertex_count()];
        for s in 0..g.vertex_count() {
            if flip[s].is_some() {
                continue;
            }
            flip[s] = Some(false);
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                let fx = flip[x].unwrap();
                for &(y, e) in g.neighbors(x) {
                    let want = fx ^ self.twisted[e];
                    match flip[y] {
                        None => {
                            flip[y] = Some(want);
                            stack.push(y);
                        }
                        Some(fy) if fy != want => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// `|V| - |E| + |F|`, computed per connected component and summed, with an
    /// edgeless component counting as one face.
    fn euler_characteristic(&self) -> Result<i64> {
        let faces = self.faces()?;
        let isolated = (0..self.graph.vertex_count()).filter(|&v| self.rotation[v].is_empty()).count();
        Ok(self.graph.vertex_count() as i64 - self.graph.edge_count() as i64
            + faces.count() as i64
            + isolated as i64)
    }

    /// Euler genus `2 - (V - E + F)` and orientability of a connected embedding.
    pub fn euler_genus(&self) -> Result<GenusInfo> {
        if !self.graph.is_connected() {
            return Err(Error::Disconnected);
        }
        let chi = self.euler_characteristic()?;
        if chi > 2 {
            return Err(Error::Structural(format!("Euler characteristic {chi} exceeds 2")));
        }
        Ok(GenusInfo {
            euler_genus: (2 - chi) as usize,
            orientable: self.is_orientable(),
            faces: self.faces()?.count(),
        })
    }

    /// Sum of Euler genera over connected components. Zero certifies that
    /// every component is planar.
    pub fn total_euler_genus(&self) -> Result<usize> {
        let (count, _) = self.graph.components();
        let chi = self.euler_characteristic()?;
        let eg = 2 * count as i64 - chi;
        if eg < 0 {
            return Err(Error::Structural(format!("negative Euler genus {eg}")));
        }
        Ok(eg as usize)
    }

    /// Induced sub-embedding on `vertices` (in the given order), keeping the
    /// cyclic order of the surviving darts.
    pub fn restrict(&self, vertices: &[usize]) -> SurfaceEmbedding {
        let (sub, origin) = self.graph.induced(vertices);
        let mut new_id = vec![usize::MAX; self.graph.edge_count()];
        for (i, &e) in origin.iter().enumerate() {
            new_id[e] = i;
        }
        let rotation = vertices
            .iter()
            .map(|&v| {
                self.rotation[v]
                    .iter()
                    .filter(|d| new_id[d.edge()] != usize::MAX)
                    .map(|d| Dart::new(new_id[d.edge()], d.end()))
                    .collect()
            })
            .collect();
        let twisted = origin.iter().map(|&e| self.twisted[e]).collect();
        SurfaceEmbedding::new(sub, rotation, twisted).expect("restriction of a valid embedding")
    }

    /// Relabel vertices by `perm` (old -> new) and rotate each cyclic order by
    /// `shift[v]` positions. Used to check labeling invariance.
    pub fn relabeled(&self, perm: &[usize], shift: &[usize]) -> SurfaceEmbedding {
        let n = self.graph.vertex_count();
        let edges: Vec<Edge> = self
            .graph
            .edges()
            .iter()
            .map(|e| Edge { u: perm[e.u], v: perm[e.v], len: e.len })
            .collect();
        let g = MetricGraph::new(n, edges).expect("relabeling keeps validity");
        let mut rotation = vec![Vec::new(); n];
        for v in 0..n {
            let rot = &self.rotation[v];
            let k = if rot.is_empty() { 0 } else { shift[v] % rot.len() };
            rotation[perm[v]] = rot[k..].iter().chain(&rot[..k]).copied().collect();
        }
        SurfaceEmbedding::new(g, rotation, self.twisted.clone()).expect("relabeling keeps validity")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn d(e: usize, end: usize) -> Dart {
        Dart::new(e, end)
    }

    /// K4 drawn with vertex 3 inside triangle 0-1-2.
    pub(crate) fn planar_k4() -> SurfaceEmbedding {
        // edges: 0:(0,1) 1:(1,2) 2:(2,0) 3:(0,3) 4:(1,3) 5:(2,3)
        let g = MetricGraph::from_triples(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let rot = vec![
            vec![d(0, 0), d(3, 0), d(2, 1)],
            vec![d(1, 0), d(4, 0), d(0, 1)],
            vec![d(2, 0), d(5, 0), d(1, 1)],
            vec![d(3, 1), d(4, 1), d(5, 1)],
        ];
        SurfaceEmbedding::orientable(g, rot).unwrap()
    }

    #[test]
    fn k4_on_sphere() {
        let emb = planar_k4();
        let faces = emb.faces().unwrap();
        assert_eq!(faces.count(), 4);
        assert!(faces.walks.iter().all(|w| w.len() == 3));
        let info = emb.euler_genus().unwrap();
        assert_eq!(info.euler_genus, 0);
        assert!(info.orientable);
    }

    #[test]
    fn projective_plane_loop() {
        let g = MetricGraph::from_triples(1, &[(0, 0, 1.0)]).unwrap();
        let emb = SurfaceEmbedding::new(g, vec![vec![d(0, 0), d(0, 1)]], vec![true]).unwrap();
        assert_eq!(emb.faces().unwrap().count(), 1);
        let info = emb.euler_genus().unwrap();
        assert_eq!(info.euler_genus, 1);
        assert!(!info.orientable);
        assert_eq!(info.genus(), 1);
    }

    #[test]
    fn untwisted_loop_is_spherical() {
        let g = MetricGraph::from_triples(1, &[(0, 0, 1.0)]).unwrap();
        let emb = SurfaceEmbedding::orientable(g, vec![vec![d(0, 0), d(0, 1)]]).unwrap();
        assert_eq!(emb.faces().unwrap().count(), 2);
        assert_eq!(emb.euler_genus().unwrap().euler_genus, 0);
    }

    #[test]
    fn torus_bouquet() {
        let g = MetricGraph::from_triples(1, &[(0, 0, 1.0), (0, 0, 1.0)]).unwrap();
        let emb =
            SurfaceEmbedding::orientable(g, vec![vec![d(0, 0), d(1, 0), d(0, 1), d(1, 1)]]).unwrap();
        let faces = emb.faces().unwrap();
        assert_eq!(faces.count(), 1);
        assert_eq!(faces.walks[0].len(), 4);
        assert_eq!(emb.euler_genus().unwrap().euler_genus, 2);
    }

    #[test]
    fn malformed_rotations_rejected() {
        let g = MetricGraph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let dup = SurfaceEmbedding::orientable(g.clone(), vec![vec![d(0, 0), d(0, 0)], vec![d(0, 1)]]);
        assert!(matches!(dup, Err(Error::Invalid { .. })));
        let missing = SurfaceEmbedding::orientable(g.clone(), vec![vec![d(0, 0)], vec![]]);
        assert!(matches!(missing, Err(Error::Invalid { .. })));
        let wrong_vertex = SurfaceEmbedding::orientable(g, vec![vec![d(0, 1)], vec![d(0, 0)]]);
        assert!(matches!(wrong_vertex, Err(Error::Invalid { .. })));
    }

    #[test]
    fn disconnected_genus_is_an_error() {
        let g = MetricGraph::from_triples(2, &[]).unwrap();
        let emb = SurfaceEmbedding::orientable(g, vec![vec![], vec![]]).unwrap();
        assert_eq!(emb.euler_genus().unwrap_err(), Error::Disconnected);
        assert_eq!(emb.total_euler_genus().unwrap(), 0);
    }

    #[test]
    fn restriction_drops_darts() {
        let emb = planar_k4();
        let sub = emb.restrict(&[0, 1, 2]);
        assert_eq!(sub.graph().edge_count(), 3);
        assert_eq!(sub.euler_genus().unwrap().euler_genus, 0);
    }
}
