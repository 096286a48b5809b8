use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use treembed::constants::Constants;
use treembed::dense::{dense_decomposition, densest_small_subgraph, expand, find_dense_seed};
use treembed::embed::{greedy_embed, AnchorConstraint, Traversal};
use treembed::error::Error;
use treembed::gen::{gen_extremal, gen_random_host, ExtremalKind};
use treembed::graph::{degree_profile, validate_embedding, Embedding, Graph};
use treembed::num::{parse_ratio, ratio_string};
use treembed::oracle::{brute_force_embed_counted, OracleVerdict};
use treembed::pipeline::{theorem1_embed, theorem2_embed};
use treembed::scan::scan_conjecture;
use treembed::sparse::{is_locally_sparse, SearchMode, EXACT_SPARSITY_CAP};
use treembed::tree::{bipartition, leaf_profile, separator, stable_set_s, Tree};

const EXIT_NOT_FOUND: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(
    name = "treembed",
    about = "Tree embeddings into graphs under degree conditions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a tree into a host graph.
    Embed(EmbedArgs),
    /// Validate an embedding JSON against a tree and a host.
    Check(CheckArgs),
    /// Scan all trees with m edges against sampled hosts.
    Scan(ScanArgs),
    /// Generate instances: tight extremal pairs or random hosts.
    Gen(GenArgs),
    /// Print separator, stable set, bipartition and leaf profile of a tree.
    AnalyzeTree(AnalyzeArgs),
    /// Dense-structure reports: seeds, decompositions, sparsity, densest.
    DetectDense(DetectArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Theorem1,
    Theorem2,
    Greedy,
    Brute,
}

#[derive(Args)]
struct EmbedArgs {
    /// Tree file (first line n, then n-1 edges, optional "root r").
    #[arg(long)]
    tree: PathBuf,
    /// Host graph file (first line "n e", then e edges).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    method: Method,
    /// Constants file (key=value lines; keys m, alpha, gamma, epsilon,
    /// g_override, retries, mode).
    #[arg(long)]
    constants: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Node budget for the exhaustive search.
    #[arg(long, default_value = "10000000")]
    budget: u64,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Embedding JSON as produced by `embed`.
    #[arg(long)]
    embedding: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "1000")]
    hosts: usize,
    #[arg(long, default_value = "0")]
    seed: u64,
    #[arg(long, default_value = "10000000")]
    budget: u64,
}

#[derive(Args)]
struct GenArgs {
    /// Extremal instance scale k (tree with 3k edges).
    #[arg(long, conflicts_with = "random", requires = "kind")]
    extremal: Option<usize>,
    /// Extremal kind: twin (two cliques) or bip (complete bipartite).
    #[arg(long)]
    kind: Option<String>,
    /// Random host: n delta_min Delta_min seed.
    #[arg(long, num_args = 4, value_names = ["N", "DELTA", "BIG_DELTA", "SEED"])]
    random: Option<Vec<u64>>,
    /// Write the host edge list here instead of inlining it.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    /// Write the tree file here instead of inlining it.
    #[arg(long)]
    tree_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    tree: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetectMode {
    Seed,
    Decompose,
    SparseCheck,
    Densest,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "0.2")]
    alpha: String,
    #[arg(long, value_enum, default_value = "seed")]
    mode: DetectMode,
    /// Subset size bound for the densest search (defaults to m+1).
    #[arg(long)]
    bound: Option<usize>,
    /// Force the search flavor; defaults by host size.
    #[arg(long)]
    search: Option<String>,
    /// Sparsity ratio for sparse-check (default 1/25).
    #[arg(long, default_value = "1/25")]
    sparsity_ratio: String,
}

fn read(path: &PathBuf) -> Result<String, Error> {
    Ok(std::fs::read_to_string(path)?)
}

fn run() -> Result<u8, Error> {
    env_logger::init();
    let cli = Cli::parse();
    match cli.command {
        Command::Embed(args) => run_embed(args),
        Command::Check(args) => run_check(args),
        Command::Scan(args) => {
            let report = scan_conjecture(args.m, args.hosts, args.seed, args.budget)?;
            println!("{}", serde_json::to_string(&report)?);
            eprintln!(
                "scan: {} verdicts in {} ms, {} counterexamples",
                report.verdicts,
                report.wall_ms,
                report.counterexamples.len()
            );
            Ok(if report.counterexamples.is_empty() {
                0
            } else {
                1
            })
        }
        Command::Gen(args) => run_gen(args),
        Command::AnalyzeTree(args) => {
            let tree = Tree::parse_text(&read(&args.tree)?)?;
            let root = tree.root().unwrap_or(0);
            let stable = if tree.n() >= 2 {
                Some(stable_set_s(&tree, root)?)
            } else {
                None
            };
            let leaves = if tree.n() >= 2 {
                let (total, max, at) = leaf_profile(&tree)?;
                Some(serde_json::json!({
                    "total_leaves": total,
                    "max_leaf_children": max,
                    "argmax_vertex": at,
                }))
            } else {
                None
            };
            let out = serde_json::json!({
                "n": tree.n(),
                "root": root,
                "separator": separator(&tree),
                "stable_set": stable,
                "bipartition": bipartition(&tree),
                "leaf_profile": leaves,
            });
            println!("{out}");
            Ok(0)
        }
        Command::DetectDense(args) => run_detect(args),
    }
}

fn run_embed(args: EmbedArgs) -> Result<u8, Error> {
    let tree = Tree::parse_text(&read(&args.tree)?)?;
    let graph = Graph::parse_edge_list(&read(&args.graph)?)?;
    let constants = match &args.constants {
        Some(path) => Constants::parse(&read(path)?)?,
        None => Constants::defaults(tree.edge_count()),
    };
    #[derive(serde::Serialize)]
    struct EmbedJson {
        tree_n: usize,
        map: Vec<Option<usize>>,
        status: String,
        stuck_at: Option<usize>,
    }
    let emit = |status: &str, map: Option<&Embedding>, stuck_at: Option<usize>| {
        let out = EmbedJson {
            tree_n: tree.n(),
            map: match map {
                Some(f) => f.as_slice().to_vec(),
                None => vec![None; tree.n()],
            },
            status: status.to_string(),
            stuck_at,
        };
        println!("{}", serde_json::to_string(&out).expect("serializes"));
    };
    let outcome = match args.method {
        Method::Greedy => Some(greedy_embed(
            &tree,
            &graph,
            &AnchorConstraint::none(),
            Traversal::Bfs,
        )?),
        Method::Theorem1 => Some(theorem1_embed(&tree, &graph, &constants)?.outcome),
        Method::Theorem2 => Some(theorem2_embed(&tree, &graph, &constants, args.seed)?.outcome),
        Method::Auto => {
            let second = theorem2_embed(&tree, &graph, &constants, args.seed)?.outcome;
            if second.is_success() {
                Some(second)
            } else {
                None // fall through to the oracle below
            }
        }
        Method::Brute => None,
    };
    if let Some(out) = outcome {
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
        let status = if out.is_success() { "success" } else { "stuck" };
        emit(status, Some(&out.map), out.stuck_at);
        return Ok(if out.is_success() { 0 } else { EXIT_NOT_FOUND });
    }
    let (verdict, nodes) = brute_force_embed_counted(&tree, &graph, args.budget);
    eprintln!("exhaustive search: {nodes} nodes");
    match verdict {
        OracleVerdict::Found(f) => {
            debug_assert!(validate_embedding(&tree, &graph, &f).complete_valid);
            emit("success", Some(&f), None);
            Ok(0)
        }
        OracleVerdict::None => {
            emit("none", None, None);
            Ok(EXIT_NOT_FOUND)
        }
        OracleVerdict::BudgetExceeded => {
            emit("budget_exceeded", None, None);
            Ok(EXIT_BUDGET)
        }
    }
}

fn run_check(args: CheckArgs) -> Result<u8, Error> {
    let tree = Tree::parse_text(&read(&args.tree)?)?;
    let graph = Graph::parse_edge_list(&read(&args.graph)?)?;
    let text = read(&args.embedding)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(format!("embedding JSON: {e}")))?;
    let map_value = value.get("map").cloned().unwrap_or(value.clone());
    let raw: Vec<Option<usize>> = serde_json::from_value(map_value)
        .map_err(|e| Error::parse(format!("embedding map: {e}")))?;
    let mut f = Embedding::new(raw.len());
    for (v, img) in raw.iter().enumerate() {
        if let Some(h) = img {
            f.set(v, *h);
        }
    }
    let report = validate_embedding(&tree, &graph, &f);
    println!("{}", serde_json::to_string(&report)?);
    Ok(if report.complete_valid { 0 } else { 1 })
}

fn run_gen(args: GenArgs) -> Result<u8, Error> {
    let (host, tree, meta) = if let Some(k) = args.extremal {
        let kind = match args.kind.as_deref() {
            Some("twin") => ExtremalKind::TwinCliques,
            Some("bip") => ExtremalKind::Bipartite,
            other => {
                return Err(Error::invalid(format!(
                    "kind must be twin or bip, got {other:?}"
                )))
            }
        };
        let inst = gen_extremal(k, kind)?;
        let meta = serde_json::to_value(&inst)?;
        (inst.host, Some(inst.tree), meta)
    } else if let Some(random) = &args.random {
        let [n, delta, big_delta, seed] = random[..] else {
            return Err(Error::invalid("--random needs N DELTA BIG_DELTA SEED"));
        };
        let host = gen_random_host(n as usize, delta as usize, big_delta as usize, seed)?;
        let (dmin, dmax, avg) = degree_profile(&host);
        let meta = serde_json::json!({
            "n": host.n(),
            "edges": host.edge_count(),
            "min_degree": dmin,
            "max_degree": dmax,
            "avg_degree": ratio_string(avg),
            "seed": seed,
        });
        (host, None, meta)
    } else {
        return Err(Error::invalid(
            "pass --extremal K --kind twin|bip or --random",
        ));
    };
    let host_text = host.to_edge_list();
    let tree_text = tree.as_ref().map(|t| t.to_text());
    if let Some(path) = &args.graph_out {
        std::fs::write(path, &host_text)?;
    }
    if let (Some(path), Some(text)) = (&args.tree_out, &tree_text) {
        std::fs::write(path, text)?;
    }
    let out = serde_json::json!({
        "meta": meta,
        "host": if args.graph_out.is_some() { serde_json::Value::Null } else { host_text.into() },
        "tree": match (&args.tree_out, tree_text) {
            (Some(_), _) | (_, None) => serde_json::Value::Null,
            (None, Some(text)) => text.into(),
        },
    });
    println!("{out}");
    Ok(0)
}

fn run_detect(args: DetectArgs) -> Result<u8, Error> {
    let graph = Graph::parse_edge_list(&read(&args.graph)?)?;
    let alpha = parse_ratio(&args.alpha)?;
    let search = match args.search.as_deref() {
        Some("exact") => SearchMode::Exact,
        Some("peeling") => SearchMode::Peeling,
        Some(other) => {
            return Err(Error::invalid(format!(
                "search must be exact or peeling, got {other}"
            )))
        }
        None => {
            if graph.n() <= EXACT_SPARSITY_CAP {
                SearchMode::Exact
            } else {
                SearchMode::Peeling
            }
        }
    };
    match args.mode {
        DetectMode::SparseCheck => {
            let ratio = parse_ratio(&args.sparsity_ratio)?;
            let report = is_locally_sparse(&graph, args.m, ratio, search)?;
            println!("{}", serde_json::to_string(&report)?);
            Ok(0)
        }
        DetectMode::Seed => {
            let (seed, failures) = find_dense_seed(&graph, args.m, alpha)?;
            let expanded = seed.map(|w| expand(&w, &graph));
            let out = serde_json::json!({
                "witness": expanded,
                "failed_candidates": failures.len(),
            });
            println!("{out}");
            Ok(0)
        }
        DetectMode::Decompose => {
            let result = dense_decomposition(&graph, args.m, alpha)?;
            println!("{}", serde_json::to_string(&result)?);
            Ok(0)
        }
        DetectMode::Densest => {
            let bound = args.bound.unwrap_or(args.m + 1);
            let (set, avg, delta) = densest_small_subgraph(&graph, bound, search)?;
            let out = serde_json::json!({
                "vertices": set,
                "avg_degree": ratio_string(avg),
                "min_degree": delta,
            });
            println!("{out}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
