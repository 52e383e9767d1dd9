//! Monte Carlo distortion estimates over many pipeline samples.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::SurfaceEmbedding;
use crate::error::{Error, Result};
use crate::planarize::{verify_sample, Bounds, PipelineOptions, Planarizer, DEFAULT_PAIR_BUDGET};
use crate::seed;

pub const MIN_SAMPLES: usize = 30;
pub const DEFAULT_BOOTSTRAP: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    /// Endpoints of input edges only.
    #[default]
    Edges,
    /// Every pair of distinct vertices.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionOptions {
    pub pipeline: PipelineOptions,
    pub pairs: PairMode,
    pub bootstrap: usize,
    /// Rerun full independent verification on every sample.
    pub verify: bool,
    pub pair_budget: usize,
}

impl Default for DistortionOptions {
    fn default() -> Self {
        DistortionOptions {
            pipeline: PipelineOptions::default(),
            pairs: PairMode::Edges,
            bootstrap: DEFAULT_BOOTSTRAP,
            verify: true,
            pair_budget: DEFAULT_PAIR_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub generator: String,
    pub vertices: usize,
    pub edges: usize,
    pub genus: usize,
    pub euler_genus: usize,
    pub orientable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub x: usize,
    pub y: usize,
    pub d: f64,
    pub mean: f64,
    pub max: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub sample: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub status: Status,
    pub instance: Instance,
    pub options: DistortionOptions,
    pub samples: usize,
    /// Sample `i` uses `seed::derive(seed, i)`.
    pub seed: u64,
    /// Largest mean expansion over the measured pairs.
    pub distortion: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// The same maximum restricted to input edges.
    pub edge_distortion: Option<f64>,
    /// The same maximum restricted to pairs on the cut graph.
    pub cut_pair_distortion: Option<f64>,
    pub contraction_violations: usize,
    pub peel_fallbacks: usize,
    pub bounds: Option<Bounds>,
    pub failure: Option<Failure>,
    pub pairs: Vec<PairStats>,
}

impl DistortionReport {
    pub fn failed(&self) -> bool {
        self.status == Status::Failed
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,d,mean,max,ci_low,ci_high\n");
        for p in &self.pairs {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", p.x, p.y, p.d, p.mean, p.max, p.ci_low, p.ci_high);
        }
        s
    }
}

struct Draw {
    expansions: Vec<f64>,
    fallback: usize,
}

/// Draw `samples` pipeline samples and estimate the distortion as the largest
/// mean expansion over the chosen pairs, with bootstrap percentile intervals.
/// A sample that errors or fails verification marks the whole report FAILED
/// and no statistics are aggregated.
pub fn estimate_distortion(
    emb: &SurfaceEmbedding,
    generator: &str,
    options: DistortionOptions,
    samples: usize,
    seed: u64,
) -> Result<DistortionReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid("samples", format!("need at least {MIN_SAMPLES}, got {samples}")));
    }
    let info = emb.euler_genus()?;
    let planarizer = Planarizer::new(emb, options.pipeline)?;
    let g = planarizer.graph();
    let n = g.vertex_count();
    let mut pairs: Vec<(usize, usize)> = match options.pairs {
        PairMode::Edges => g.edges().iter().filter(|e| !e.is_loop()).map(|e| (e.u.min(e.v), e.u.max(e.v))).collect(),
        PairMode::All => (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect(),
    };
    pairs.sort_unstable();
    pairs.dedup();

    let mut report = DistortionReport {
        status: Status::Ok,
        instance: Instance {
            generator: generator.to_string(),
            vertices: n,
            edges: g.edge_count(),
            genus: info.genus(),
            euler_genus: info.euler_genus,
            orientable: info.orientable,
        },
        options,
        samples,
        seed,
        distortion: None,
        ci_low: None,
        ci_high: None,
        edge_distortion: None,
        cut_pair_distortion: None,
        contraction_violations: 0,
        peel_fallbacks: 0,
        bounds: planarizer.bounds().cloned(),
        failure: None,
        pairs: Vec::new(),
    };

    let draws: Vec<std::result::Result<Draw, Failure>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(seed, i as u64);
            let fail = |reason: String| Failure { sample: i, seed: s, reason };
            let sample = planarizer.sample(s).map_err(|e| fail(e.to_string()))?;
            if options.verify {
                let v = verify_sample(g, &sample, options.pair_budget);
                if !v.passed() {
                    return Err(fail(v.messages.join("; ")));
                }
            }
            let expansions = pairs.iter().map(|&(x, y)| planarizer.expansion(&sample, x, y)).collect();
            let fallback = sample.provenance.as_ref().map_or(0, |p| p.peel_fallback);
            Ok(Draw { expansions, fallback })
        })
        .collect();

    let mut table = Vec::with_capacity(samples);
    for d in draws {
        match d {
            Ok(d) => {
                report.peel_fallbacks += d.fallback;
                table.push(d.expansions);
            }
            Err(f) => {
                report.status = Status::Failed;
                report.contraction_violations += f.reason.contains("contracted") as usize;
                report.failure.get_or_insert(f);
            }
        }
    }
    if report.failed() {
        return Ok(report);
    }

    let p = pairs.len();
    let mean_of = |rows: &mut dyn Iterator<Item = &Vec<f64>>| {
        let mut sum = vec![0.0; p];
        let mut count = 0.0;
        for row in rows {
            for (s, x) in sum.iter_mut().zip(row) {
                *s += x;
            }
            count += 1.0;
        }
        sum.into_iter().map(|s| s / count).collect::<Vec<f64>>()
    };
    let means = mean_of(&mut table.iter());
    let resamples: Vec<Vec<f64>> = (0..options.bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::rng(seed::derive_tagged(seed, "bootstrap", b as u64));
            let picks: Vec<usize> = (0..samples).map(|_| rng.gen_range(0..samples)).collect();
            mean_of(&mut picks.iter().map(|&i| &table[i]))
        })
        .collect();
    let percentile = |mut v: Vec<f64>, q: f64| -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(f64::total_cmp);
        v[((v.len() - 1) as f64 * q).round() as usize]
    };

    let cut_points = planarizer.k_points();
    let on_cut = |v: usize| cut_points.binary_search(&v).is_ok();
    let is_edge = {
        let mut edges: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
        edges.sort_unstable();
        move |pair: &(usize, usize)| edges.binary_search(pair).is_ok()
    };
    let max_over = |keep: &dyn Fn(usize) -> bool| -> Option<f64> {
        (0..p).filter(|&k| keep(k)).map(|k| means[k]).reduce(f64::max)
    };
    report.distortion = max_over(&|_| true).or(Some(1.0));
    report.edge_distortion = max_over(&|k| is_edge(&pairs[k]));
    report.cut_pair_distortion = max_over(&|k| on_cut(pairs[k].0) && on_cut(pairs[k].1));
    if options.bootstrap > 0 && p > 0 {
        let maxima: Vec<f64> = resamples.iter().map(|r| r.iter().copied().fold(f64::MIN, f64::max)).collect();
        report.ci_low = Some(percentile(maxima.clone(), 0.025));
        report.ci_high = Some(percentile(maxima, 0.975));
    }
    for (k, &(x, y)) in pairs.iter().enumerate() {
        let column: Vec<f64> = resamples.iter().map(|r| r[k]).collect();
        report.pairs.push(PairStats {
            x,
            y,
            d: planarizer.distances().get(x, y),
            mean: means[k],
            max: table.iter().map(|row| row[k]).fold(f64::MIN, f64::max),
            ci_low: percentile(column.clone(), 0.025),
            ci_high: percentile(column, 0.975),
        });
    }
    Ok(report)
}
