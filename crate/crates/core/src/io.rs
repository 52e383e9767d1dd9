//! Embedded-graph file format.
//!
//! A document is one JSON object, written one record per line:
//!
//! ```text
//! {
//! "vertices": [0,1,2],
//! "edges": [
//! {"id":0,"u":0,"v":1,"len":"1","sign":1},
//! ...
//! ],
//! "rotation": {
//! "0": [[0,0],[2,1]],
//! ...
//! }
//! }
//! ```
//!
//! Vertex ids are `0..n` and edge ids `0..m`, each listed in order. A dart is
//! `[edge id, end]` with end 0 at `u` and 1 at `v`. Lengths are decimal
//! strings; `sign` is `1` or `-1` (twisted). `rotation` is optional for plain
//! graphs. The writer is deterministic, so load/save round-trips byte for byte.

use std::fmt::Write as _;

use serde_json::Value;

use crate::embedding::{Dart, SurfaceEmbedding};
use crate::error::{Error, Result};
use crate::graph::{Edge, MetricGraph};

/// A parsed file: a graph with per-edge signs and an optional rotation system.
#[derive(Clone, Debug)]
pub struct GraphDocument {
    pub graph: MetricGraph,
    pub twisted: Vec<bool>,
    pub rotation: Option<Vec<Vec<Dart>>>,
}

impl GraphDocument {
    pub fn into_embedding(self) -> Result<SurfaceEmbedding> {
        let rotation = self
            .rotation
            .ok_or_else(|| Error::invalid("rotation", "document has no rotation system"))?;
        SurfaceEmbedding::new(self.graph, rotation, self.twisted)
    }
}

pub fn format_len(len: f64) -> String {
    format!("{len}")
}

fn write_doc(g: &MetricGraph, twisted: Option<&[bool]>, rotation: Option<&[Vec<Dart>]>) -> String {
    let mut s = String::new();
    s.push_str("{\n\"vertices\": [");
    for v in 0..g.vertex_count() {
        if v > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v}");
    }
    s.push_str("],\n\"edges\": [\n");
    for (id, e) in g.edges().iter().enumerate() {
        let sign = if twisted.is_some_and(|t| t[id]) { -1 } else { 1 };
        let _ = write!(
            s,
            "{{\"id\":{id},\"u\":{},\"v\":{},\"len\":\"{}\",\"sign\":{sign}}}",
            e.u,
            e.v,
            format_len(e.len)
        );
        s.push_str(if id + 1 < g.edge_count() { ",\n" } else { "\n" });
    }
    s.push(']');
    if let Some(rot) = rotation {
        s.push_str(",\n\"rotation\": {\n");
        for (v, darts) in rot.iter().enumerate() {
            let _ = write!(s, "\"{v}\": [");
            for (i, d) in darts.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "[{},{}]", d.edge(), d.end());
            }
            s.push(']');
            s.push_str(if v + 1 < rot.len() { ",\n" } else { "\n" });
        }
        s.push('}');
    }
    s.push_str("\n}\n");
    s
}

pub fn embedding_to_string(emb: &SurfaceEmbedding) -> String {
    write_doc(emb.graph(), Some(emb.twisted()), Some(emb.rotations()))
}

pub fn graph_to_string(g: &MetricGraph) -> String {
    write_doc(g, None, None)
}

/// A plain graph as a JSON value in the document schema (no rotation), for
/// embedding inside other artifacts.
pub fn graph_to_value(g: &MetricGraph) -> Value {
    serde_json::from_str(&graph_to_string(g)).expect("writer emits valid JSON")
}

fn as_index(v: &Value, loc: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::invalid(loc, format!("expected a nonnegative integer, got {v}")))
}

pub fn parse_value(root: &Value) -> Result<GraphDocument> {
    let obj = root.as_object().ok_or_else(|| Error::invalid("document", "expected a JSON object"))?;
    let vertices = obj
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid("vertices", "missing or not an array"))?;
    for (i, v) in vertices.iter().enumerate() {
        let id = as_index(v, &format!("vertices[{i}]"))?;
        if id != i {
            return Err(Error::invalid(format!("vertices[{i}]"), format!("expected id {i}, got {id}")));
        }
    }
    let n = vertices.len();
    let edges_json = obj
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::invalid("edges", "missing or not an array"))?;
    let mut edges = Vec::with_capacity(edges_json.len());
    let mut twisted = Vec::with_capacity(edges_json.len());
    for (i, e) in edges_json.iter().enumerate() {
        let loc = |f: &str| format!("edges[{i}].{f}");
        let e = e
            .as_object()
            .ok_or_else(|| Error::invalid(format!("edges[{i}]"), "expected an object"))?;
        let field = |f: &str| e.get(f).ok_or_else(|| Error::invalid(loc(f), "missing"));
        let id = as_index(field("id")?, &loc("id"))?;
        if id != i {
            return Err(Error::invalid(loc("id"), format!("expected id {i}, got {id}")));
        }
        let u = as_index(field("u")?, &loc("u"))?;
        let v = as_index(field("v")?, &loc("v"))?;
        for (x, f) in [(u, "u"), (v, "v")] {
            if x >= n {
                return Err(Error::invalid(loc(f), format!("unknown vertex {x}")));
            }
        }
        let len = match field("len")? {
            Value::String(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(loc("len"), format!("not a decimal number: {s:?}")))?,
            Value::Number(x) => x.as_f64().unwrap_or(f64::NAN),
            other => return Err(Error::invalid(loc("len"), format!("expected a decimal string, got {other}"))),
        };
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::invalid(loc("len"), format!("length must be positive, got {len}")));
        }
        let sign = match e.get("sign") {
            None => 1,
            Some(s) => s.as_i64().unwrap_or(0),
        };
        if sign != 1 && sign != -1 {
            return Err(Error::invalid(loc("sign"), "sign must be 1 or -1"));
        }
        edges.push(Edge { u, v, len });
        twisted.push(sign == -1);
    }
    let graph = MetricGraph::new(n, edges)?;
    let rotation = match obj.get("rotation") {
        None | Some(Value::Null) => None,
        Some(Value::Object(map)) => {
            let mut rot: Vec<Option<Vec<Dart>>> = vec![None; n];
            for (key, darts) in map {
                let loc = format!("rotation[{key}]");
                let v: usize = key
                    .parse()
                    .ok()
                    .filter(|&v: &usize| v < n)
                    .ok_or_else(|| Error::invalid(&loc, "not a vertex id"))?;
                let darts = darts.as_array().ok_or_else(|| Error::invalid(&loc, "expected an array"))?;
                let mut list = Vec::with_capacity(darts.len());
                for (j, d) in darts.iter().enumerate() {
                    let dloc = format!("{loc}[{j}]");
                    let pair = d
                        .as_array()
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| Error::invalid(&dloc, "dart must be [edge, end]"))?;
                    let edge = as_index(&pair[0], &dloc)?;
                    let end = as_index(&pair[1], &dloc)?;
                    if edge >= graph.edge_count() || end > 1 {
                        return Err(Error::invalid(dloc, format!("invalid dart [{edge},{end}]")));
                    }
                    list.push(Dart::new(edge, end));
                }
                rot[v] = Some(list);
            }
            let mut out = Vec::with_capacity(n);
            for (v, r) in rot.into_iter().enumerate() {
                out.push(r.ok_or_else(|| Error::invalid(format!("rotation[{v}]"), "missing"))?);
            }
            Some(out)
        }
        Some(_) => return Err(Error::invalid("rotation", "expected an object")),
    };
    Ok(GraphDocument { graph, twisted, rotation })
}

pub fn parse_document(text: &str) -> Result<GraphDocument> {
    let root: Value = serde_json::from_str(text)?;
    parse_value(&root)
}

pub fn parse_embedding(text: &str) -> Result<SurfaceEmbedding> {
    parse_document(text)?.into_embedding()
}

pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    Ok(parse_document(text)?.graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOUQUET: &str = "{\n\"vertices\": [0],\n\"edges\": [\n{\"id\":0,\"u\":0,\"v\":0,\"len\":\"1\",\"sign\":1},\n{\"id\":1,\"u\":0,\"v\":0,\"len\":\"2.5\",\"sign\":-1}\n],\n\"rotation\": {\n\"0\": [[0,0],[1,0],[0,1],[1,1]]\n}\n}\n";

    #[test]
    fn round_trip_is_byte_identical() {
        let emb = parse_embedding(BOUQUET).unwrap();
        assert_eq!(emb.graph().edge(1).len, 2.5);
        assert!(emb.is_twisted(1));
        assert_eq!(embedding_to_string(&emb), BOUQUET);
    }

    #[test]
    fn reports_location_of_first_violation() {
        let bad = BOUQUET.replace("\"len\":\"2.5\"", "\"len\":\"0\"");
        match parse_embedding(&bad).unwrap_err() {
            Error::Invalid { location, .. } => assert_eq!(location, "edges[1].len"),
            e => panic!("unexpected {e:?}"),
        }
        let bad = BOUQUET.replace("[1,1]]", "[1,0]]");
        match parse_embedding(&bad).unwrap_err() {
            Error::Invalid { location, .. } => assert_eq!(location, "rotation[0][3]"),
            e => panic!("unexpected {e:?}"),
        }
        let bad = BOUQUET.replace("\"sign\":-1", "\"sign\":2");
        assert!(matches!(parse_embedding(&bad), Err(Error::Invalid { .. })));
    }

    #[test]
    fn plain_graph_has_no_rotation() {
        let g = MetricGraph::from_triples(2, &[(0, 1, 0.5)]).unwrap();
        let text = graph_to_string(&g);
        let doc = parse_document(&text).unwrap();
        assert!(doc.rotation.is_none());
        assert_eq!(doc.graph, g);
        assert!(doc.into_embedding().is_err());
    }
}
