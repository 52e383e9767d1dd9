//! Random planarization of metric graphs embedded on surfaces.
//!
//! A graph cellularly embedded on a surface of Euler genus `eg` is mapped,
//! at random, into a planar graph: a cut graph is computed, the surface is
//! peeled open along it using multiscale Lipschitz random partitions, and the
//! cut graph itself is replaced by a random dominating tree. The resulting
//! map never contracts distances; its expected expansion is measured by the
//! harness.

pub mod cutgraph;
pub mod embedding;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod io;
pub mod partition;
pub mod peeling;
pub mod planarity;
pub mod planarize;
pub mod seed;
pub mod treeembed;

pub use embedding::{Dart, Faces, GenusInfo, SurfaceEmbedding};
pub use error::{Error, Result};
pub use graph::{rescale_min_distance, DistMatrix, Edge, MetricGraph, Subgraph};
