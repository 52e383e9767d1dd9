use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use surfcut::cutgraph::{cut_graph_treecotree, min_cut_graph_exact, DEFAULT_SEARCH_BUDGET};
use surfcut::generators::{genus_chain, k5_tori, torus_grid};
use surfcut::harness::{estimate_distortion, DistortionOptions, PairMode};
use surfcut::planarize::{verify_sample, CutGraphMode, EmbeddingSample, PipelineOptions, Planarizer, DEFAULT_PAIR_BUDGET};
use surfcut::treeembed::TreeMode;
use surfcut::{io, Error};

#[derive(Parser)]
#[command(name = "surfcut", version, about = "Random planarization of graphs embedded on surfaces")]
struct Cli {
    /// Seed for randomized commands.
    #[arg(long, global = true, env = "SURFCUT_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Node budget for exact cut graph search; pair budget for verification.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Torus,
    Chain,
    K5,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Treecotree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tree {
    Core,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairs {
    Edges,
    All,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Pipeline {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    cutgraph: Mode,
    #[arg(long, value_enum, default_value_t = Tree::Core)]
    tree: Tree,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an embedded instance.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        /// Grid side (torus, chain).
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Genus (chain, k5).
        #[arg(long, default_value_t = 2)]
        g: usize,
        /// Size parameter (k5).
        #[arg(long, default_value_t = 80)]
        n: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Compute a cut graph.
    Cutgraph {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        /// Root of the shortest-path tree (treecotree).
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Draw one planarization sample.
    Planarize {
        input: PathBuf,
        #[command(flatten)]
        pipeline: Pipeline,
        #[command(flatten)]
        out: Output,
    },
    /// Estimate distortion over many samples.
    Measure {
        input: PathBuf,
        /// Number of samples.
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Pairs::Edges)]
        pairs: Pairs,
        #[arg(long, default_value_t = surfcut::harness::DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        /// Also write the per-pair CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        pipeline: Pipeline,
        #[command(flatten)]
        out: Output,
    },
    /// Recheck a sample against its input graph.
    Verify {
        input: PathBuf,
        sample: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn pipeline_options(p: &Pipeline, budget: Option<u64>) -> PipelineOptions {
    PipelineOptions {
        cutgraph: match p.cutgraph {
            Mode::Exact => CutGraphMode::Exact,
            Mode::Treecotree => CutGraphMode::TreeCotree,
        },
        tree: match p.tree {
            Tree::Core => TreeMode::Core,
            Tree::Direct => TreeMode::Direct,
        },
        budget: budget.unwrap_or(DEFAULT_SEARCH_BUDGET),
    }
}

fn seed(cli: &Cli) -> Result<u64, Failure> {
    cli.seed.ok_or_else(|| Failure::Usage("this command needs --seed (or SURFCUT_SEED)".into()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Gen { family, k, g, n, out } => {
            let emb = match family {
                Family::Torus => torus_grid(*k)?,
                Family::Chain => genus_chain(*g, *k)?,
                Family::K5 => k5_tori(*g, *n)?.embedding,
            };
            emit(out, &io::embedding_to_string(&emb))
        }
        Command::Cutgraph { input, mode, root, out } => {
            let emb = io::parse_embedding(&read(input)?)?;
            let result = match mode {
                Mode::Exact => min_cut_graph_exact(&emb, cli.budget.unwrap_or(DEFAULT_SEARCH_BUDGET))?,
                Mode::Treecotree => cut_graph_treecotree(&emb, *root)?,
            };
            let text = match cli.format {
                Format::Json => json(&result),
                Format::Csv => {
                    let mut s = String::from("edge,u,v,len\n");
                    for &e in &result.edges {
                        let ed = emb.graph().edge(e);
                        s.push_str(&format!("{e},{},{},{}\n", ed.u, ed.v, io::format_len(ed.len)));
                    }
                    s
                }
            };
            emit(out, &text)
        }
        Command::Planarize { input, pipeline, out } => {
            let emb = io::parse_embedding(&read(input)?)?;
            let planarizer = Planarizer::new(&emb, pipeline_options(pipeline, cli.budget))?;
            let sample = planarizer.sample(seed(cli)?)?;
            let mut text = sample.to_json();
            text.push('\n');
            emit(out, &text)
        }
        Command::Measure { input, n, pairs, bootstrap, csv, pipeline, out } => {
            let emb = io::parse_embedding(&read(input)?)?;
            let options = DistortionOptions {
                pipeline: pipeline_options(pipeline, cli.budget),
                pairs: match pairs {
                    Pairs::Edges => PairMode::Edges,
                    Pairs::All => PairMode::All,
                },
                bootstrap: *bootstrap,
                ..DistortionOptions::default()
            };
            let name = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let report = estimate_distortion(&emb, &name, options, *n, seed(cli)?)?;
            if let Some(path) = csv {
                fs::write(path, report.to_csv()).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            }
            emit(out, &if cli.format == Format::Csv { report.to_csv() } else { json(&report) })?;
            match &report.failure {
                Some(f) => Err(Failure::Verification(format!("sample {} (seed {}) failed: {}", f.sample, f.seed, f.reason))),
                None => Ok(()),
            }
        }
        Command::Verify { input, sample, out } => {
            let g = io::parse_graph(&read(input)?)?;
            let s = EmbeddingSample::from_json(&read(sample)?)?;
            let budget = cli.budget.map_or(DEFAULT_PAIR_BUDGET, |b| b as usize);
            let report = verify_sample(&g, &s, budget);
            emit(out, &json(&report))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification(report.messages.join("; ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}
