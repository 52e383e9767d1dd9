//! Planarity testing for multigraphs.
//!
//! Loops and parallel edges never affect planarity, so the graph is first
//! simplified. A graph is planar iff each of its biconnected blocks is, and
//! each block is tested with the Demoucron-Malgrange-Pertuiset path
//! embedding algorithm (quadratic, ample at the sizes used here).

use std::collections::{HashSet, VecDeque};

use crate::graph::MetricGraph;

/// True iff the underlying multigraph has a plane embedding.
pub fn is_planar(g: &MetricGraph) -> bool {
    let n = g.vertex_count();
    let mut simple: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|e| !e.is_loop())
        .map(|e| (e.u.min(e.v), e.u.max(e.v)))
        .collect();
    simple.sort_unstable();
    simple.dedup();
    is_planar_simple(n, &simple)
}

/// Planarity of a simple graph given as an edge list.
pub fn is_planar_simple(n: usize, edges: &[(usize, usize)]) -> bool {
    if edges.len() < 9 {
        return true;
    }
    for block in blocks(n, edges) {
        if block.len() < 9 {
            continue;
        }
        let mut verts: Vec<usize> = block.iter().flat_map(|&(u, v)| [u, v]).collect();
        verts.sort_unstable();
        verts.dedup();
        if block.len() > 3 * verts.len() - 6 {
            return false;
        }
        let local = |x: usize| verts.binary_search(&x).unwrap();
        let local_edges: Vec<(usize, usize)> = block.iter().map(|&(u, v)| (local(u), local(v))).collect();
        if !dmp_biconnected(verts.len(), &local_edges) {
            return false;
        }
    }
    true
}

/// Biconnected blocks as edge lists (iterative Tarjan).
fn blocks(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (id, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((v, id));
        adj[v].push((u, id));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    let mut out = Vec::new();
    let mut estack: Vec<usize> = Vec::new();
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for s in 0..n {
        if disc[s] != usize::MAX {
            continue;
        }
        disc[s] = time;
        low[s] = time;
        time += 1;
        stack.push((s, usize::MAX, 0));
        while let Some(top) = stack.last_mut() {
            let (v, pe) = (top.0, top.1);
            if top.2 < adj[v].len() {
                let (w, e) = adj[v][top.2];
                top.2 += 1;
                if e == pe {
                    continue;
                }
                if disc[w] == usize::MAX {
                    estack.push(e);
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, e, 0));
                } else if disc[w] < disc[v] {
                    estack.push(e);
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[v]);
                    if low[v] >= disc[p] {
                        let mut block = Vec::new();
                        while let Some(e) = estack.pop() {
                            block.push(edges[e]);
                            if e == pe {
                                break;
                            }
                        }
                        out.push(block);
                    }
                }
            }
        }
    }
    out
}

/// A piece of the graph not yet embedded: either a single chord between two
/// embedded vertices, or a component of unembedded vertices (identified via
/// `comp_id`) with its attachment edges.
struct Fragment {
    attachments: Vec<usize>,
    chord: Option<(usize, usize)>,
}

fn dmp_biconnected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let key = |u: usize, v: usize| (u.min(v), u.max(v));

    let cycle = find_cycle(&adj);
    let mut in_h = vec![false; n];
    let mut h_edges: HashSet<(usize, usize)> = HashSet::new();
    for i in 0..cycle.len() {
        in_h[cycle[i]] = true;
        h_edges.insert(key(cycle[i], cycle[(i + 1) % cycle.len()]));
    }
    let mut faces: Vec<Vec<usize>> = vec![cycle.clone(), cycle];
    let mut comp_id = vec![usize::MAX; n];

    loop {
        // Collect fragments.
        let mut frags: Vec<Fragment> = Vec::new();
        for &(u, v) in edges {
            if in_h[u] && in_h[v] && !h_edges.contains(&key(u, v)) {
                frags.push(Fragment { attachments: vec![u, v], chord: Some((u, v)) });
            }
        }
        comp_id.iter_mut().for_each(|c| *c = usize::MAX);
        for s in 0..n {
            if in_h[s] || comp_id[s] != usize::MAX {
                continue;
            }
            let id = frags.len();
            let mut comp = vec![s];
            let mut att = Vec::new();
            comp_id[s] = id;
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for &y in &adj[x] {
                    if in_h[y] {
                        att.push(y);
                    } else if comp_id[y] == usize::MAX {
                        comp_id[y] = id;
                        comp.push(y);
                    }
                }
            }
            att.sort_unstable();
            att.dedup();
            frags.push(Fragment { attachments: att, chord: None });
        }
        if frags.is_empty() {
            return true;
        }

        // Admissible faces per fragment.
        let face_sets: Vec<Vec<usize>> = faces
            .iter()
            .map(|f| {
                let mut s = f.clone();
                s.sort_unstable();
                s
            })
            .collect();
        let mut choice: Option<(usize, usize)> = None;
        for (fi, frag) in frags.iter().enumerate() {
            let admissible: Vec<usize> = face_sets
                .iter()
                .enumerate()
                .filter(|(_, s)| frag.attachments.iter().all(|a| s.binary_search(a).is_ok()))
                .map(|(i, _)| i)
                .collect();
            match admissible.len() {
                0 => return false,
                1 => {
                    choice = Some((fi, admissible[0]));
                    break;
                }
                _ => {
                    if choice.is_none() {
                        choice = Some((fi, admissible[0]));
                    }
                }
            }
        }
        let (fi, face_idx) = choice.unwrap();
        let frag = &frags[fi];

        // A path through the fragment between two attachment vertices.
        let path: Vec<usize> = match frag.chord {
            Some((u, v)) => vec![u, v],
            None => {
                let a = frag.attachments[0];
                let b = frag.attachments[1];
                let mut prev = vec![usize::MAX; n];
                let mut queue = VecDeque::new();
                for &y in &adj[a] {
                    if !in_h[y] && comp_id[y] == fi && prev[y] == usize::MAX {
                        prev[y] = a;
                        queue.push_back(y);
                    }
                }
                let mut end = usize::MAX;
                'bfs: while let Some(x) = queue.pop_front() {
                    for &y in &adj[x] {
                        if y == b {
                            end = x;
                            break 'bfs;
                        }
                        if !in_h[y] && prev[y] == usize::MAX {
                            prev[y] = x;
                            queue.push_back(y);
                        }
                    }
                }
                debug_assert!(end != usize::MAX, "fragment connects its attachments");
                let mut p = vec![b];
                let mut x = end;
                while x != a {
                    p.push(x);
                    x = prev[x];
                }
                p.push(a);
                p.reverse();
                p
            }
        };

        // Split the face along the path.
        let face = faces.swap_remove(face_idx);
        let a = path[0];
        let b = *path.last().unwrap();
        let len = face.len();
        let ia = face.iter().position(|&x| x == a).unwrap();
        let ib = face.iter().position(|&x| x == b).unwrap();
        let inner = &path[1..path.len() - 1];
        let mut f1 = Vec::new();
        let mut i = ia;
        loop {
            f1.push(face[i]);
            if i == ib {
                break;
            }
            i = (i + 1) % len;
        }
        f1.extend(inner.iter().rev());
        let mut f2 = Vec::new();
        let mut i = ib;
        loop {
            f2.push(face[i]);
            if i == ia {
                break;
            }
            i = (i + 1) % len;
        }
        f2.extend(inner.iter());
        faces.push(f1);
        faces.push(f2);
        for w in path.windows(2) {
            h_edges.insert(key(w[0], w[1]));
        }
        for &x in &path {
            in_h[x] = true;
        }
    }
}

/// Some simple cycle of a biconnected graph with at least one cycle.
fn find_cycle(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![usize::MAX; n];
    let mut stack = vec![(0usize, 0usize)];
    depth[0] = 0;
    while let Some(top) = stack.last_mut() {
        let (v, i) = *top;
        if i < adj[v].len() {
            top.1 += 1;
            let w = adj[v][i];
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                parent[w] = v;
                stack.push((w, 0));
            } else if w != parent[v] && depth[w] < depth[v] {
                let mut cyc = vec![v];
                let mut x = v;
                while x != w {
                    x = parent[x];
                    cyc.push(x);
                }
                return cyc;
            }
        } else {
            stack.pop();
        }
    }
    unreachable!("biconnected block with >= 9 edges has a cycle")
}
