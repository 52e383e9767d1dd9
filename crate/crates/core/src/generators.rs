//! Self-certifying instance generators. Each generator recomputes the Euler
//! genus of what it built and fails if it does not match the request.

use serde::Serialize;

use crate::embedding::{Dart, SurfaceEmbedding};
use crate::error::{Error, Result};
use crate::graph::{Edge, MetricGraph};

/// Horizontal edge id of grid vertex `(i, j)`.
fn h_edge(k: usize, i: usize, j: usize) -> usize {
    2 * (i * k + j)
}

/// Vertical edge id of grid vertex `(i, j)`.
fn v_edge(k: usize, i: usize, j: usize) -> usize {
    2 * (i * k + j) + 1
}

/// Unit-length `k x k` grid on the torus. Vertex `(i, j)` has id `i * k + j`;
/// its rotation is east, north, west, south.
pub fn torus_grid(k: usize) -> Result<SurfaceEmbedding> {
    if k < 3 {
        return Err(Error::invalid("k", format!("torus grid needs k >= 3, got {k}")));
    }
    let id = |i: usize, j: usize| (i % k) * k + (j % k);
    let mut edges = Vec::with_capacity(2 * k * k);
    for i in 0..k {
        for j in 0..k {
            edges.push(Edge { u: id(i, j), v: id(i, j + 1), len: 1.0 });
            edges.push(Edge { u: id(i, j), v: id(i + 1, j), len: 1.0 });
        }
    }
    let mut rotation = vec![Vec::new(); k * k];
    for i in 0..k {
        for j in 0..k {
            rotation[id(i, j)] = vec![
                Dart::new(h_edge(k, i, j), 0),
                Dart::new(v_edge(k, i, j), 0),
                Dart::new(h_edge(k, i, (j + k - 1) % k), 1),
                Dart::new(v_edge(k, (i + k - 1) % k, j), 1),
            ];
        }
    }
    let emb = SurfaceEmbedding::orientable(MetricGraph::new(k * k, edges)?, rotation)?;
    certify(&emb, 2, "torus grid")?;
    Ok(emb)
}

fn certify(emb: &SurfaceEmbedding, expected: usize, what: &str) -> Result<()> {
    let got = emb.euler_genus()?.euler_genus;
    if got != expected {
        return Err(Error::Internal(format!(
            "{what} generator produced Euler genus {got}, expected {expected}"
        )));
    }
    Ok(())
}

/// The face of an orientable embedding entered through `start`, as the
/// sequence of darts it leaves through.
pub fn face_from(emb: &SurfaceEmbedding, start: Dart) -> Vec<Dart> {
    let mut walk = vec![start];
    let mut d = start;
    loop {
        let arrive = d.twin();
        let rot = emb.rotation(emb.dart_vertex(arrive));
        let pos = rot.iter().position(|&x| x == arrive).expect("dart in its rotation");
        d = rot[(pos + 1) % rot.len()];
        if d == start {
            return walk;
        }
        walk.push(d);
    }
}

/// Result of [`connected_sum`]: the glued embedding plus where `b`'s vertices
/// and darts ended up.
pub struct Glued {
    pub embedding: SurfaceEmbedding,
    pub b_vertex: Vec<usize>,
    pub b_dart: Vec<Dart>,
}

/// Orientable connected sum: delete the face of `a` through `face_a` and the
/// face of `b` through `face_b` and glue the two boundary cycles with
/// opposite orientations. Both faces must be simple cycles of equal length.
pub fn connected_sum(a: &SurfaceEmbedding, face_a: Dart, b: &SurfaceEmbedding, face_b: Dart) -> Result<Glued> {
    let fa = face_from(a, face_a);
    let fb = face_from(b, face_b);
    let len = fa.len();
    if fb.len() != len {
        return Err(Error::Structural(format!("face lengths differ ({len} vs {})", fb.len())));
    }
    let simple = |emb: &SurfaceEmbedding, f: &[Dart]| {
        let mut vs: Vec<usize> = f.iter().map(|&d| emb.dart_vertex(d)).collect();
        vs.sort_unstable();
        vs.dedup();
        vs.len() == f.len()
    };
    if !simple(a, &fa) || !simple(b, &fb) {
        return Err(Error::Structural("glued faces must be simple cycles".into()));
    }
    let ga = a.graph();
    let gb = b.graph();
    let at = |i: isize| fa[i.rem_euclid(len as isize) as usize];

    // Vertex map for b: boundary vertex b_j is identified with a_{-j}.
    let mut b_vertex = vec![usize::MAX; gb.vertex_count()];
    for (j, &e) in fb.iter().enumerate() {
        b_vertex[b.dart_vertex(e)] = a.dart_vertex(at(-(j as isize)));
    }
    let mut next = ga.vertex_count();
    for slot in b_vertex.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }

    // Dart map for b: boundary edge e_j becomes the reverse of d_{-j-1}.
    let mut edges: Vec<Edge> = ga.edges().to_vec();
    let mut twisted = a.twisted().to_vec();
    let mut b_dart = vec![Dart(usize::MAX); 2 * gb.edge_count()];
    for (j, &e) in fb.iter().enumerate() {
        let d = at(-(j as isize) - 1);
        b_dart[e.0] = d.twin();
        b_dart[e.twin().0] = d;
    }
    for (id, e) in gb.edges().iter().enumerate() {
        if b_dart[2 * id].0 != usize::MAX {
            continue;
        }
        let new_id = edges.len();
        edges.push(Edge { u: b_vertex[e.u], v: b_vertex[e.v], len: e.len });
        twisted.push(b.is_twisted(id));
        b_dart[2 * id] = Dart::new(new_id, 0);
        b_dart[2 * id + 1] = Dart::new(new_id, 1);
    }

    let mut rotation: Vec<Vec<Dart>> = a.rotations().to_vec();
    rotation.resize(next, Vec::new());
    for (v, rot) in b.rotations().iter().enumerate() {
        if b_vertex[v] >= ga.vertex_count() {
            rotation[b_vertex[v]] = rot.iter().map(|d| b_dart[d.0]).collect();
        }
    }
    for i in 0..len as isize {
        let di = at(i);
        let prev_twin = at(i - 1).twin();
        let v = a.dart_vertex(di);
        let rot_a = a.rotation(v);
        let p = rot_a.iter().position(|&x| x == di).unwrap();
        let mut merged: Vec<Dart> = rot_a[p..].iter().chain(&rot_a[..p]).copied().collect();
        debug_assert_eq!(merged.last(), Some(&prev_twin));
        let bv = b.dart_vertex(fb[((-i).rem_euclid(len as isize)) as usize]);
        let rot_b: Vec<Dart> = b.rotation(bv).iter().map(|d| b_dart[d.0]).collect();
        let q = rot_b.iter().position(|&x| x == prev_twin).unwrap();
        for k in 1..rot_b.len() {
            let x = rot_b[(q + k) % rot_b.len()];
            if x == di {
                break;
            }
            merged.push(x);
        }
        rotation[v] = merged;
    }
    let graph = MetricGraph::new(next, edges)?;
    let embedding = SurfaceEmbedding::new(graph, rotation, twisted)?;
    Ok(Glued { embedding, b_vertex, b_dart })
}

/// `g` unit `k x k` torus grids glued in a chain by connected sums.
pub fn genus_chain(g: usize, k: usize) -> Result<SurfaceEmbedding> {
    if g < 1 {
        return Err(Error::invalid("g", "genus chain needs g >= 1"));
    }
    let mut emb = torus_grid(k)?;
    // Where the most recently added grid's darts live in `emb`.
    let mut last_dart: Vec<Dart> = (0..4 * k * k).map(Dart).collect();
    let mid = k / 2;
    for step in 1..g {
        let block = torus_grid(k)?;
        let face_a = last_dart[Dart::new(h_edge(k, mid, mid), 0).0];
        let face_b = Dart::new(h_edge(k, 0, 0), 0);
        let glued = connected_sum(&emb, face_a, &block, face_b)?;
        emb = glued.embedding;
        last_dart = glued.b_dart;
        certify(&emb, 2 * (step + 1), "genus chain")?;
    }
    certify(&emb, 2 * g, "genus chain")?;
    Ok(emb)
}

/// Metadata of a K5-tori instance.
#[derive(Clone, Debug, Serialize)]
pub struct K5Tori {
    #[serde(skip)]
    pub embedding: SurfaceEmbedding,
    /// Rail length (unit steps) of every thickened K5 edge.
    pub ladder_len: usize,
    /// `(K5 edge index, step)` of the quad each handle was glued into.
    pub handles: Vec<(usize, usize)>,
    /// Smallest gap, in steps along the concatenated ladders, between handles.
    pub min_handle_spacing: Option<usize>,
}

const K5_EDGES: [(usize, usize); 10] =
    [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

/// First (lexicographic) rotation system of K5 with Euler genus 2.
fn k5_torus_rotation() -> Vec<Vec<usize>> {
    let perms3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let g = MetricGraph::from_triples(5, &K5_EDGES.map(|(u, v)| (u, v, 1.0))).unwrap();
    let neighbors = |v: usize| -> Vec<usize> { (0..5).filter(|&w| w != v).collect() };
    let edge_of = |u: usize, v: usize| K5_EDGES.iter().position(|&e| e == (u.min(v), u.max(v))).unwrap();
    for code in 0..6usize.pow(5) {
        let mut c = code;
        let mut order = Vec::with_capacity(5);
        let mut rot = Vec::with_capacity(5);
        for v in 0..5 {
            let nb = neighbors(v);
            let p = perms3[c % 6];
            c /= 6;
            let cyc = vec![nb[0], nb[1 + p[0]], nb[1 + p[1]], nb[1 + p[2]]];
            rot.push(cyc.iter().map(|&w| Dart::new(edge_of(v, w), usize::from(v > w))).collect());
            order.push(cyc);
        }
        let emb = SurfaceEmbedding::orientable(g.clone(), rot).unwrap();
        if emb.euler_genus().unwrap().euler_genus == 2 {
            return order;
        }
    }
    unreachable!("K5 embeds in the torus")
}

/// Combinatorial analog of K5 thickened into tubes with `g - 1` extra handles:
/// K5 embedded on the torus, every edge replaced by a unit ladder of
/// `n / 20` steps, and `g - 1` small torus grids glued into ladder quads spread
/// evenly along the concatenated ladders. Requires `g >= 2` and `n >= 40 g`.
pub fn k5_tori(g: usize, n: usize) -> Result<K5Tori> {
    if g < 2 {
        return Err(Error::invalid("g", "K5-tori needs g >= 2"));
    }
    if n < 40 * g {
        return Err(Error::invalid("n", format!("K5-tori with g = {g} needs n >= {}", 40 * g)));
    }
    let ladder = n / 20;
    let order = k5_torus_rotation();

    let mut edges: Vec<Edge> = Vec::new();
    let mut nv = 5;
    // Per K5 edge: rail vertices and the hub-side darts of each rail.
    let mut rails = Vec::new();
    for &(p, q) in &K5_EDGES {
        let a: Vec<usize> = (0..ladder - 1).map(|s| nv + s).collect();
        nv += ladder - 1;
        let b: Vec<usize> = (0..ladder - 1).map(|s| nv + s).collect();
        nv += ladder - 1;
        let mut rail_edges = |verts: &[usize]| -> Vec<usize> {
            let path: Vec<usize> = std::iter::once(p).chain(verts.iter().copied()).chain([q]).collect();
            path.windows(2)
                .map(|w| {
                    edges.push(Edge { u: w[0], v: w[1], len: 1.0 });
                    edges.len() - 1
                })
                .collect()
        };
        let ea = rail_edges(&a);
        let eb = rail_edges(&b);
        let rungs: Vec<usize> = (0..ladder - 1)
            .map(|s| {
                edges.push(Edge { u: a[s], v: b[s], len: 1.0 });
                edges.len() - 1
            })
            .collect();
        rails.push((a, b, ea, eb, rungs));
    }
    let mut rotation = vec![Vec::new(); nv];
    for (a, b, ea, eb, rungs) in &rails {
        for s in 0..ladder - 1 {
            // rail edge s+1 leaves vertex s forward; rail edge s enters it.
            rotation[a[s]] = vec![Dart::new(ea[s + 1], 0), Dart::new(ea[s], 1), Dart::new(rungs[s], 0)];
            rotation[b[s]] = vec![Dart::new(eb[s + 1], 0), Dart::new(rungs[s], 1), Dart::new(eb[s], 1)];
        }
    }
    for hub in 0..5 {
        for &w in &order[hub] {
            let ki = K5_EDGES.iter().position(|&e| e == (hub.min(w), hub.max(w))).unwrap();
            let (_, _, ea, eb, _) = &rails[ki];
            if hub < w {
                rotation[hub].push(Dart::new(eb[0], 0));
                rotation[hub].push(Dart::new(ea[0], 0));
            } else {
                rotation[hub].push(Dart::new(ea[ladder - 1], 1));
                rotation[hub].push(Dart::new(eb[ladder - 1], 1));
            }
        }
    }
    let mut emb = SurfaceEmbedding::orientable(MetricGraph::new(nv, edges)?, rotation)?;
    certify(&emb, 2, "K5 skeleton")?;

    let handles_wanted = g - 1;
    let total = 10 * ladder;
    let mut handles = Vec::new();
    for h in 0..handles_wanted {
        let pos = ((h as f64 + 0.5) * total as f64 / handles_wanted as f64).floor() as usize;
        let ki = (pos / ladder).min(9);
        let step = (pos % ladder).clamp(1, ladder - 2);
        handles.push((ki, step));
    }
    for (h, &(ki, step)) in handles.iter().enumerate() {
        // Quad between rungs `step` and `step + 1` (1-based), entered along rail A.
        let dart = Dart::new(rails[ki].2[step], 0);
        let block = torus_grid(3)?;
        let glued = connected_sum(&emb, dart, &block, Dart::new(h_edge(3, 0, 0), 0))?;
        emb = glued.embedding;
        certify(&emb, 2 * (h + 2), "K5-tori")?;
    }
    let positions: Vec<usize> = handles.iter().map(|&(ki, s)| ki * ladder + s).collect();
    let min_handle_spacing = positions.windows(2).map(|w| w[1] - w[0]).min();
    Ok(K5Tori { embedding: emb, ladder_len: ladder, handles, min_handle_spacing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grids() {
        let emb = torus_grid(3).unwrap();
        assert_eq!(emb.graph().vertex_count(), 9);
        assert_eq!(emb.graph().edge_count(), 18);
        let faces = emb.faces().unwrap();
        assert_eq!(faces.count(), 9);
        assert_eq!(torus_grid(5).unwrap().euler_genus().unwrap().euler_genus, 2);
        let faces = torus_grid(10).unwrap().faces().unwrap();
        assert!(faces.walks.iter().all(|w| w.len() == 4));
        assert!(torus_grid(2).is_err());
    }

    /// Independent count: g grids of k^2 vertices, 2k^2 edges and k^2 faces;
    /// each of the g-1 gluings merges 4 vertices and 4 edges and deletes 2 faces.
    fn chain_counts(g: usize, k: usize) -> (usize, usize, usize) {
        let k2 = k * k;
        (g * k2 - 4 * (g - 1), 2 * g * k2 - 4 * (g - 1), g * k2 - 2 * (g - 1))
    }

    #[test]
    fn genus_chain_counts() {
        for (g, k) in [(1, 3), (2, 4), (3, 4), (2, 3), (3, 3)] {
            let emb = genus_chain(g, k).unwrap();
            let (v, e, f) = chain_counts(g, k);
            assert_eq!(emb.graph().vertex_count(), v);
            assert_eq!(emb.graph().edge_count(), e);
            assert_eq!(emb.faces().unwrap().count(), f);
            let chi = v as i64 - e as i64 + f as i64;
            assert_eq!(emb.euler_genus().unwrap().euler_genus as i64, 2 - chi);
            assert_eq!(2 - chi, 2 * g as i64);
        }
    }

    #[test]
    fn k5_tori_genus_and_spacing() {
        let inst = k5_tori(2, 80).unwrap();
        assert_eq!(inst.embedding.euler_genus().unwrap().euler_genus, 4);
        let inst = k5_tori(4, 160).unwrap();
        assert_eq!(inst.embedding.euler_genus().unwrap().euler_genus, 8);
        let spacing = inst.min_handle_spacing.unwrap();
        assert!(spacing >= 10 * inst.ladder_len / 4, "spacing {spacing}");
        assert!(k5_tori(2, 79).is_err());
        assert!(k5_tori(1, 400).is_err());
    }
}
