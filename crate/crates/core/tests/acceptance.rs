//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use common::{brute_force, reweighted};
use surfcut::cutgraph::{dilation, min_cut_graph_exact, DEFAULT_SEARCH_BUDGET};
use surfcut::generators::{genus_chain, torus_grid};
use surfcut::harness::{estimate_distortion, DistortionOptions, PairMode};
use surfcut::partition::{ckr_partition, estimate_beta, kpr_partition, Partition};
use surfcut::planarize::{verify_sample, CutGraphMode, PipelineOptions, Planarizer, DEFAULT_PAIR_BUDGET};
use surfcut::treeembed::{embed_cutgraph_tree, frt_tree, TreeMode};
use surfcut::{DistMatrix, Result, SurfaceEmbedding};

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// An instance together with the cut graph solver used for it.
struct Desk {
    name: &'static str,
    emb: SurfaceEmbedding,
    mode: CutGraphMode,
}

fn desk() -> Vec<Desk> {
    vec![
        Desk { name: "torus 3x3", emb: torus_grid(3).unwrap(), mode: CutGraphMode::Exact },
        Desk { name: "chain g=2 k=3", emb: genus_chain(2, 3).unwrap(), mode: CutGraphMode::Exact },
        Desk { name: "chain g=3 k=3", emb: genus_chain(3, 3).unwrap(), mode: CutGraphMode::TreeCotree },
    ]
}

fn options(mode: CutGraphMode) -> PipelineOptions {
    PipelineOptions { cutgraph: mode, ..Default::default() }
}

/// Instances small enough for the exact solver, all of genus 1 or 2.
fn exact_instances() -> Vec<(String, SurfaceEmbedding)> {
    let mut out = Vec::new();
    for k in [3, 4, 5] {
        out.push((format!("torus {k}x{k}"), torus_grid(k).unwrap()));
    }
    for seed in 1..=4 {
        out.push((format!("torus 3x3 w{seed}"), reweighted(&torus_grid(3).unwrap(), seed)));
    }
    for seed in 1..=2 {
        out.push((format!("torus 4x4 w{seed}"), reweighted(&torus_grid(4).unwrap(), seed)));
    }
    out.push(("chain g=2 k=3".into(), genus_chain(2, 3).unwrap()));
    for seed in 1..=2 {
        out.push((format!("chain g=2 k=3 w{seed}"), reweighted(&genus_chain(2, 3).unwrap(), seed)));
    }
    out
}

fn exact_oracle() -> Outcome {
    let emb = torus_grid(3).unwrap();
    let start = Instant::now();
    let exact = min_cut_graph_exact(&emb, DEFAULT_SEARCH_BUDGET).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let oracle = brute_force(&emb);
    let pass = exact.length == 6.0 && oracle == 6.0 && exact.certified && elapsed < 60.0;
    outcome(pass, format!("exact length {}, exhaustive oracle {oracle}, {elapsed:.3}s", exact.length))
}

fn cut_graph_structure() -> Outcome {
    let mut bad = Vec::new();
    let instances = exact_instances();
    for (name, emb) in &instances {
        let g = emb.info_genus();
        let r = min_cut_graph_exact(emb, DEFAULT_SEARCH_BUDGET).unwrap();
        let h = r.high_degree_count as f64;
        let dil = dilation(emb.graph(), &r.vertices).unwrap();
        let ok = dil <= h + 2.0 + TOL && h <= 4.0 * g - 2.0 && (r.euler_number as f64) < 6.0 * g;
        println!("    {name}: g={g} length={} h={h} chi={} dil={dil:.4}", r.length, r.euler_number);
        if !ok {
            bad.push(name.clone());
        }
    }
    outcome(bad.is_empty() && instances.len() >= 10, format!("{} exact instances, violations: {bad:?}", instances.len()))
}

trait GenusExt {
    fn info_genus(&self) -> f64;
}

impl GenusExt for SurfaceEmbedding {
    fn info_genus(&self) -> f64 {
        self.euler_genus().unwrap().genus() as f64
    }
}

fn dilation_chain() -> Outcome {
    let mut bad = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for (name, emb) in exact_instances() {
        let g = emb.info_genus();
        let p = Planarizer::new(&emb, options(CutGraphMode::Exact)).unwrap();
        let b = p.bounds().unwrap();
        worst = (worst.0.max(b.cut_dilation / g), worst.1.max(b.split_dilation / g));
        if b.cut_dilation > 4.0 * g + TOL || b.split_dilation > 14.0 * g + TOL {
            bad.push(name);
        }
    }
    outcome(
        bad.is_empty(),
        format!("max dil_C/g = {:.3} (<= 4), max dil_K/g = {:.3} (<= 14), violations: {bad:?}", worst.0, worst.1),
    )
}

fn soundness() -> Outcome {
    const N: u64 = 500;
    let mut pass = true;
    let mut parts = Vec::new();
    for d in desk() {
        let p = Planarizer::new(&d.emb, options(d.mode)).unwrap();
        let (mut planar, mut structural, mut sound, mut fallbacks, mut errors) = (0, 0, 0, 0, 0);
        for seed in 0..N {
            let Ok(s) = p.sample(seed) else {
                errors += 1;
                continue;
            };
            let v = verify_sample(p.graph(), &s, DEFAULT_PAIR_BUDGET);
            let prov = s.provenance.as_ref().unwrap();
            planar += v.planar as u64;
            structural += (v.one_sum && prov.pieces_planar) as u64;
            sound += (v.non_contracting && !v.sampled && v.passed()) as u64;
            fallbacks += prov.peel_fallback;
        }
        pass &= planar == N && structural == N && sound == N && fallbacks == 0 && errors == 0;
        parts.push(format!("{}: planar {planar}/{N}, one-sum {structural}/{N}, non-contracting {sound}/{N}, fallbacks {fallbacks}", d.name));
    }
    outcome(pass, parts.join("; "))
}

fn partitions() -> Outcome {
    let unbounded = AtomicUsize::new(0);
    let checked = AtomicUsize::new(0);
    let check = |p: Result<Partition>, metric: &DistMatrix| -> Result<Partition> {
        let p = p?;
        checked.fetch_add(1, Ordering::Relaxed);
        if p.check(metric).is_err() {
            unbounded.fetch_add(1, Ordering::Relaxed);
        }
        Ok(p)
    };

    let mut rows = Vec::new();
    for n in [16usize, 64, 256] {
        let metric = DistMatrix::uniform(n, 1.0);
        let delta = 3.0;
        let pairs: Vec<(usize, usize)> = (0..8).map(|i| (i, n - 1 - i)).collect();
        let est = estimate_beta(|s: u64| check(ckr_partition(&metric, delta, s), &metric), &metric, delta, &pairs, 10_000, n as u64)
            .unwrap();
        rows.push((n as f64, est.beta, est.ci_high));
    }
    let ln: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let c = rows.iter().zip(&ln).map(|(r, l)| r.2 * l).sum::<f64>() / ln.iter().map(|l| l * l).sum::<f64>();
    let fit: Vec<String> = rows.iter().map(|(n, b, hi)| format!("n={n} beta={b:.3} upper={hi:.3}")).collect();

    for d in desk() {
        let g = d.emb.graph();
        let metric = g.all_pairs();
        let genus = d.emb.euler_genus().unwrap().genus();
        for delta in [2.0, 4.0, 8.0] {
            for seed in 0..200 {
                check(kpr_partition(g, genus, delta, seed), &metric).unwrap();
                check(ckr_partition(&metric, delta, seed), &metric).unwrap();
            }
        }
    }
    let torus = torus_grid(20).unwrap();
    let metric = torus.graph().all_pairs();
    for seed in 0..200 {
        check(kpr_partition(torus.graph(), 1, 10.0, seed), &metric).unwrap();
    }
    let unbounded = unbounded.into_inner();
    outcome(
        unbounded == 0 && c <= 2.5,
        format!("{} partitions checked, {unbounded} not delta-bounded; fit c = {c:.3} (<= 2.5) from {}", checked.into_inner(), fit.join(", ")),
    )
}

fn domination() -> Outcome {
    let mut violations = 0;
    let mut trees = 0;
    for d in desk() {
        let p = Planarizer::new(&d.emb, options(d.mode)).unwrap();
        let split = p.split_complex().unwrap();
        let k_metric = split.k_graph().all_pairs();
        let g_metric = p.distances();
        for seed in 0..100 {
            for mode in [TreeMode::Core, TreeMode::Direct] {
                violations += embed_cutgraph_tree(split, mode, seed).unwrap().domination_violation(&k_metric).is_some() as usize;
                trees += 1;
            }
            violations += frt_tree(g_metric, seed).unwrap().domination_violation(g_metric).is_some() as usize;
            trees += 1;
        }
    }
    let n = 32;
    let metric = DistMatrix::uniform(n, 1.0);
    let seeds = 2000;
    let mut sum = vec![0.0; n * n];
    for seed in 0..seeds {
        let t = frt_tree(&metric, seed).unwrap();
        violations += t.domination_violation(&metric).is_some() as usize;
        for i in 0..n {
            for j in i + 1..n {
                sum[i * n + j] += t.distance(i, j) / metric.get(i, j);
            }
        }
    }
    let worst = sum.iter().map(|s| s / seeds as f64).fold(0.0, f64::max);
    let bound = 4.0 * (n as f64).log2();
    outcome(
        violations == 0 && worst <= bound,
        format!("{trees} trees on desk instances, {violations} domination violations; uniform-32 expected stretch {worst:.3} (<= {bound})"),
    )
}

fn trend_at(k: usize, n: usize) -> Vec<(f64, f64, f64)> {
    (1..=3)
        .map(|g| {
            let emb = genus_chain(g, k).unwrap();
            let opts = DistortionOptions { pipeline: options(CutGraphMode::TreeCotree), bootstrap: 200, ..Default::default() };
            let r = estimate_distortion(&emb, "chain", opts, n, 2024).unwrap();
            assert!(!r.failed(), "chain g={g} k={k}: {:?}", r.failure);
            (g as f64, r.distortion.unwrap(), r.cut_pair_distortion.unwrap_or(f64::NAN))
        })
        .collect()
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
fn loglog(points: &[(f64, f64)]) -> (f64, f64) {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn trend() -> Outcome {
    const K: usize = 6;
    for k in [3, 4, 5] {
        let t = trend_at(k, 500);
        let (slope, _) = loglog(&t.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>());
        println!("    info k={k}: D = {:?}, exponent {slope:.3}", t.iter().map(|p| p.1).collect::<Vec<_>>());
    }
    let t = trend_at(K, 500);
    let d: Vec<(f64, f64)> = t.iter().map(|p| (p.0, p.1)).collect();
    let (slope, intercept) = loglog(&d);
    let c = intercept.exp();
    let monotone = d.windows(2).all(|w| w[1].1 >= w[0].1);
    let excess = d.iter().map(|&(g, v)| v - c * g * g).fold(f64::MIN, f64::max);
    println!("    cut-pair distortion at k={K}: {:?}", t.iter().map(|p| p.2).collect::<Vec<_>>());
    outcome(
        monotone && (0.5..=2.5).contains(&slope) && excess <= c,
        format!(
            "k={K}: D = {:?}, monotone {monotone}, exponent {slope:.3} in [0.5, 2.5], envelope C g^2 with C = {c:.3}, worst excess {excess:.3} (<= C)",
            d.iter().map(|p| p.1).collect::<Vec<_>>()
        ),
    )
}

fn worst_pair() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in desk() {
        let opts = DistortionOptions { pipeline: options(d.mode), pairs: PairMode::All, bootstrap: 0, ..Default::default() };
        let r = estimate_distortion(&d.emb, d.name, opts, 500, 99).unwrap();
        let (all, edges) = (r.distortion.unwrap_or(f64::NAN), r.edge_distortion.unwrap_or(f64::NAN));
        pass &= !r.failed() && (all - edges).abs() <= TOL;
        parts.push(format!("{}: all pairs {all:.6}, edges {edges:.6}", d.name));
    }
    outcome(pass, parts.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    let run = |args: &[&str]| -> Vec<u8> {
        let out = Command::new(env!("CARGO_BIN_EXE_surfcut")).args(args).env_remove("SURFCUT_SEED").output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let (torus, chain, sample) = (path("torus.json"), path("chain.json"), path("sample.json"));
    run(&["gen", "--family", "torus", "--k", "3", "-o", &torus]);
    run(&["gen", "--family", "chain", "--g", "2", "--k", "3", "-o", &chain]);
    run(&["--seed", "5", "planarize", &torus, "-o", &sample]);
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "--family", "k5", "--g", "2", "--n", "80"],
        vec!["cutgraph", &torus],
        vec!["cutgraph", &chain, "--mode", "treecotree"],
        vec!["--seed", "5", "planarize", &torus],
        vec!["--seed", "5", "planarize", &chain, "--tree", "direct"],
        vec!["--seed", "5", "measure", &torus, "--n", "40", "--bootstrap", "100"],
        vec!["--seed", "5", "measure", &chain, "--n", "30", "--pairs", "all", "--format", "csv"],
        vec!["verify", &torus, &sample],
    ];
    let differing: Vec<String> = commands.iter().filter(|c| run(c) != run(c)).map(|c| c.join(" ")).collect();
    outcome(differing.is_empty(), format!("{} commands run twice, differing: {differing:?}", commands.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("exact cut graph on the 3x3 torus", exact_oracle),
        ("cut graph structure on exact instances", cut_graph_structure),
        ("cut and split dilation", dilation_chain),
        ("per-sample soundness", soundness),
        ("partition contracts", partitions),
        ("tree domination", domination),
        ("distortion trend in genus", trend),
        ("worst pair is an edge", worst_pair),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += !o.pass as usize;
        println!(
            "criterion {} {}: {name} ({:.1}s): {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
