//! Random Δ-bounded partitions and Monte Carlo estimates of their Lipschitz
//! constant.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{approx_le, DistMatrix, MetricGraph};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ckr,
    Kpr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Sorted blocks, ordered by smallest member.
    pub blocks: Vec<Vec<usize>>,
    pub delta: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Oversized pieces that had to be split by the greedy fallback.
    pub fallback_splits: usize,
    #[serde(skip)]
    block_of: Vec<usize>,
}

impl Partition {
    fn from_labels(labels: &[usize], delta: f64, seed: u64, scheme: Scheme, fallback_splits: usize) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for (v, &l) in labels.iter().enumerate() {
            let b = *index.entry(l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(v);
        }
        // Vertices are visited in order, so blocks are sorted and ordered by minimum.
        let mut block_of = vec![0; labels.len()];
        for (b, block) in blocks.iter().enumerate() {
            for &v in block {
                block_of[v] = b;
            }
        }
        Partition { blocks, delta, seed, scheme, fallback_splits, block_of }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, v: usize) -> usize {
        self.block_of[v]
    }

    pub fn separates(&self, x: usize, y: usize) -> bool {
        self.block_of[x] != self.block_of[y]
    }

    /// Exact check that blocks cover `0..n` disjointly and have diameter at most Δ.
    pub fn check(&self, metric: &DistMatrix) -> Result<()> {
        let mut seen = vec![false; metric.len()];
        for block in &self.blocks {
            for &v in block {
                if v >= seen.len() || std::mem::replace(&mut seen[v], true) {
                    return Err(Error::Structural(format!("vertex {v} missing or repeated in partition")));
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Structural(format!("vertex {v} not covered by partition")));
        }
        for block in &self.blocks {
            let d = metric.set_diameter(block);
            if !approx_le(d, self.delta) {
                return Err(Error::Structural(format!(
                    "block containing {} has diameter {d} > {}",
                    block[0], self.delta
                )));
            }
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("must be positive, got {delta}")))
    }
}

/// Random-radius, random-order ball carving on an arbitrary metric.
pub fn ckr_partition(metric: &DistMatrix, delta: f64, seed: u64) -> Result<Partition> {
    check_delta(delta)?;
    let n = metric.len();
    let mut rng = seed::rng(seed);
    let radius = rng.gen_range(delta / 4.0..=delta / 2.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let labels: Vec<usize> = (0..n)
        .map(|v| {
            order
                .iter()
                .copied()
                .find(|&c| metric.get(c, v) <= radius)
                .expect("every point lies within its own ball")
        })
        .collect();
    Ok(Partition::from_labels(&labels, delta, seed, Scheme::Ckr, 0))
}

/// Annulus chopping for graphs of bounded genus. Holds the all-pairs table
/// so that repeated sampling does not recompute it.
pub struct KprPartitioner {
    graph: MetricGraph,
    metric: DistMatrix,
    rounds: usize,
}

impl KprPartitioner {
    pub fn new(graph: &MetricGraph, genus: usize) -> Self {
        KprPartitioner { graph: graph.clone(), metric: graph.all_pairs(), rounds: genus + 2 }
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn metric(&self) -> &DistMatrix {
        &self.metric
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn sample(&self, delta: f64, seed: u64) -> Result<Partition> {
        check_delta(delta)?;
        let g = &self.graph;
        let n = g.vertex_count();
        let width = delta / (2.0 * self.rounds as f64);
        let mut rng = seed::rng(seed);
        let (_, mut piece) = g.components();
        let mut dist = vec![f64::INFINITY; n];
        for _ in 0..self.rounds {
            let offset = rng.gen_range(0.0..width);
            // Distances from the smallest vertex of each piece, inside the piece.
            dist.fill(f64::INFINITY);
            let mut heap = BinaryHeap::new();
            let mut rooted = std::collections::HashSet::new();
            for v in 0..n {
                if rooted.insert(piece[v]) {
                    dist[v] = 0.0;
                    heap.push((Reverse(OrdF64(0.0)), v));
                }
            }
            while let Some((Reverse(OrdF64(d)), v)) = heap.pop() {
                if d > dist[v] {
                    continue;
                }
                for &(w, e) in g.neighbors(v) {
                    let nd = d + g.edge(e).len;
                    if piece[w] == piece[v] && nd < dist[w] {
                        dist[w] = nd;
                        heap.push((Reverse(OrdF64(nd)), w));
                    }
                }
            }
            let band: Vec<i64> = dist.iter().map(|&d| ((d + offset) / width).floor() as i64).collect();
            piece = refine(g, &piece, &band);
        }

        let mut fallback = 0;
        let mut labels = piece.clone();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            members[piece[v]].push(v);
        }
        let mut next_label = n;
        for block in members.iter().filter(|b| !b.is_empty()) {
            if approx_le(self.metric.set_diameter(block), delta) {
                continue;
            }
            fallback += 1;
            let mut rest: Vec<usize> = block.clone();
            while let Some(&c) = rest.first() {
                let (ball, far): (Vec<usize>, Vec<usize>) =
                    rest.iter().copied().partition(|&v| self.metric.get(c, v) <= delta / 2.0);
                for v in ball {
                    labels[v] = next_label;
                }
                next_label += 1;
                rest = far;
            }
        }
        Ok(Partition::from_labels(&labels, delta, seed, Scheme::Kpr, fallback))
    }
}

/// Connected components of edges that stay inside one piece and one band.
fn refine(g: &MetricGraph, piece: &[usize], band: &[i64]) -> Vec<usize> {
    let n = g.vertex_count();
    let mut label = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in g.neighbors(v) {
                if label[w] == usize::MAX && piece[w] == piece[v] && band[w] == band[v] {
                    label[w] = s;
                    queue.push_back(w);
                }
            }
        }
    }
    label
}

#[derive(Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// One-shot KPR partition of a connected graph.
pub fn kpr_partition(g: &MetricGraph, genus: usize, delta: f64, seed: u64) -> Result<Partition> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    KprPartitioner::new(g, genus).sample(delta, seed)
}

/// Wilson score interval for `k` successes in `n` trials at 95%.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub x: usize,
    pub y: usize,
    pub d: f64,
    pub separated: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PairEstimate {
    /// frequency · Δ / d
    pub fn ratio(&self, delta: f64) -> f64 {
        self.frequency * delta / self.d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta: f64,
    /// Max over pairs of the CI endpoints scaled by Δ/d.
    pub ci_low: f64,
    pub ci_high: f64,
    pub delta: f64,
    pub trials: u64,
    pub excluded_pairs: usize,
    pub pairs: Vec<PairEstimate>,
}

impl BetaEstimate {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,d,frequency,ci_low,ci_high\n");
        for p in &self.pairs {
            let _ = writeln!(s, "{},{},{},{},{},{}", p.x, p.y, p.d, p.frequency, p.ci_low, p.ci_high);
        }
        s
    }
}

/// Estimate β as the largest `Pr[separated] · Δ / d` over `pairs`, using
/// `trials` partitions drawn with seeds derived from `seed`. The sampler must
/// be a pure function of its seed and produce partitions with a common Δ.
pub fn estimate_beta<F>(sampler: F, metric: &DistMatrix, delta: f64, pairs: &[(usize, usize)], trials: u64, seed: u64) -> Result<BetaEstimate>
where
    F: Fn(u64) -> Result<Partition> + Sync,
{
    check_delta(delta)?;
    if trials < 100 {
        return Err(Error::invalid("trials", format!("need at least 100, got {trials}")));
    }
    let kept: Vec<(usize, usize)> = pairs.iter().copied().filter(|&(x, y)| metric.get(x, y) > 0.0).collect();
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<u64>> {
            let p = sampler(seed::derive(seed, t))?;
            Ok(kept.iter().map(|&(x, y)| p.separates(x, y) as u64).collect::<Vec<u64>>())
        })
        .try_reduce(|| vec![0; kept.len()], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
    let mut est = BetaEstimate {
        beta: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        delta,
        trials,
        excluded_pairs: pairs.len() - kept.len(),
        pairs: Vec::with_capacity(kept.len()),
    };
    for (&(x, y), &k) in kept.iter().zip(&counts) {
        let d = metric.get(x, y);
        let (lo, hi) = wilson_interval(k, trials);
        let pe = PairEstimate { x, y, d, separated: k, frequency: k as f64 / trials as f64, ci_low: lo, ci_high: hi };
        est.beta = est.beta.max(pe.ratio(delta));
        est.ci_low = est.ci_low.max(lo * delta / d);
        est.ci_high = est.ci_high.max(hi * delta / d);
        est.pairs.push(pe);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> MetricGraph {
        let t: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        MetricGraph::from_triples(n, &t).unwrap()
    }

    #[test]
    fn ckr_trivial_cases() {
        let one = DistMatrix::uniform(1, 1.0);
        assert_eq!(ckr_partition(&one, 1.0, 3).unwrap().blocks, vec![vec![0]]);
        let far = DistMatrix::uniform(2, 5.0);
        for s in 0..50 {
            assert_eq!(ckr_partition(&far, 4.0, s).unwrap().len(), 2);
        }
        assert!(ckr_partition(&far, 0.0, 0).is_err());
    }

    #[test]
    fn ckr_is_bounded_and_reproducible() {
        let m = path(30).all_pairs();
        for s in 0..100 {
            let p = ckr_partition(&m, 5.0, s).unwrap();
            p.check(&m).unwrap();
            assert_eq!(p, ckr_partition(&m, 5.0, s).unwrap());
        }
    }

    #[test]
    fn kpr_path_blocks_are_short_intervals() {
        let g = path(40);
        let m = g.all_pairs();
        for s in 0..200 {
            let p = kpr_partition(&g, 0, 4.0, s).unwrap();
            p.check(&m).unwrap();
            for b in &p.blocks {
                assert!(b.len() <= 5);
                assert_eq!(b.last().unwrap() - b[0] + 1, b.len(), "block {b:?} is not an interval");
            }
        }
    }

    #[test]
    fn kpr_large_delta_often_single_block() {
        let g = path(6);
        let whole = (0..50).filter(|&s| kpr_partition(&g, 0, 100.0, s).unwrap().len() == 1).count();
        assert!(whole > 10);
    }

    #[test]
    fn estimate_beta_extremes() {
        let m = path(5).all_pairs();
        let pairs = [(0, 1), (0, 4), (2, 2)];
        let singletons = |s: u64| -> Result<Partition> { Ok(Partition::from_labels(&[0, 1, 2, 3, 4], 2.0, s, Scheme::Ckr, 0)) };
        let est = estimate_beta(singletons, &m, 2.0, &pairs, 100, 0).unwrap();
        assert_eq!(est.excluded_pairs, 1);
        assert_eq!(est.beta, 2.0);
        let whole = |s: u64| -> Result<Partition> { Ok(Partition::from_labels(&[0; 5], 10.0, s, Scheme::Ckr, 0)) };
        assert_eq!(estimate_beta(whole, &m, 10.0, &pairs, 100, 0).unwrap().beta, 0.0);
        assert!(estimate_beta(whole, &m, 10.0, &pairs, 99, 0).is_err());
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert!(wilson_interval(0, 100).0 < 1e-12);
        assert!(wilson_interval(100, 100).1 > 1.0 - 1e-12);
    }
}
