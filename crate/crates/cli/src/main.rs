//! `pgsim`: generate probabilistic graph databases, build their index, and
//! answer threshold similarity queries.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pgsim_core::database::Database;
use pgsim_core::graph::{DistanceOracle, RelaxOptions};
use pgsim_core::io::eval::{score, summarize, EvalTable, TruthDocument, TruthEntry};
use pgsim_core::io::generator::{
    generate, independent_derived, sample_query, GeneratorConfig, NeighborPolicy, TableMode,
};
use pgsim_core::io::{read_database, read_query, to_json, write_database, PatternDoc, QueryDocument, FORMAT_VERSION};
use pgsim_core::pmi::{build_index, build_pmi, load_pmi, select_features, save_pmi, IndexParams, MiningParams, Pmi};
use pgsim_core::prob::oracle_cap_from_env;
use pgsim_core::query::{exact_ssp, run_query, QueryParams, TpsQuery};
use pgsim_core::sip::{ConditionalMode, SipParams};
use pgsim_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_INTEGRITY: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "pgsim", version, about = "Threshold similarity search over probabilistic graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic database (and optionally query documents).
    Gen(GenArgs),
    /// Mine features and build the index for a database.
    Index(IndexArgs),
    /// Answer a query; prints one answer id per line.
    Query(QueryArgs),
    /// Exact similarity probability of every graph by world enumeration.
    Oracle(OracleArgs),
    /// Precision and recall of query answers against truth labels.
    Eval(EvalArgs),
    /// Generate, index and query a scaled corpus, reporting timings.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Singletons,
    Stars,
    Triangles,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Independent,
    RandomCorrelated,
    MaxTransform,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sample,
}

#[derive(Args)]
struct GenArgs {
    /// Output database path.
    #[arg(long)]
    db: PathBuf,
    #[arg(long, default_value_t = 10)]
    graphs: usize,
    #[arg(long, default_value_t = 4)]
    min_vertices: usize,
    #[arg(long, default_value_t = 7)]
    max_vertices: usize,
    #[arg(long, default_value_t = 1.3)]
    edge_ratio: f64,
    #[arg(long, default_value_t = 3)]
    vertex_labels: usize,
    #[arg(long, default_value_t = 2)]
    edge_labels: usize,
    #[arg(long, value_enum, default_value = "stars")]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value = "max-transform")]
    table_mode: TableArg,
    #[arg(long, default_value_t = 3)]
    max_set_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write this many query documents into `--queries-dir`.
    #[arg(long, default_value_t = 0)]
    queries: usize,
    #[arg(long)]
    queries_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    query_edges: usize,
    #[arg(long, default_value_t = 1)]
    delta: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    db: PathBuf,
    /// Output index path.
    #[arg(long)]
    pmi: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 0.15)]
    beta: f64,
    #[arg(long, default_value_t = 0.15)]
    gamma: f64,
    #[arg(long, default_value_t = 5)]
    max_feature_vertices: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, default_value_t = 0.05)]
    xi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    pmi: PathBuf,
    #[arg(long)]
    query: PathBuf,
    /// Overrides the query document's threshold.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Overrides the query document's distance.
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    enable_accept_pruning: bool,
    #[arg(long)]
    exact_verify: bool,
    #[arg(long)]
    relax_relabel: bool,
    /// Compare `Cnt / N` rather than `V * Cnt / N` against the threshold.
    #[arg(long)]
    literal_estimator: bool,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
    /// Write the structured report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long)]
    relax_relabel: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    pmi: PathBuf,
    /// Directory of query documents; each file's stem names the query.
    #[arg(long)]
    queries: PathBuf,
    /// Truth labels; without it, `--oracle-truth` must be given.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Compute truth labels by world enumeration.
    #[arg(long)]
    oracle_truth: bool,
    /// Also evaluate on the independent-edge version of the database.
    #[arg(long)]
    compare_independent: bool,
    #[arg(long)]
    exact_verify: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the tables as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    graphs: usize,
    #[arg(long, default_value_t = 30)]
    vertices: usize,
    #[arg(long, default_value_t = 1.5)]
    edge_ratio: f64,
    /// Query sizes in edges.
    #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    queries_per_size: usize,
    #[arg(long, default_value_t = 1)]
    delta: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 4)]
    max_feature_vertices: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IndexMismatch(_) => EXIT_INTEGRITY,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Index(a) => cmd_index(a),
        Command::Query(a) => cmd_query(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_query(path: &Path, delta: Option<usize>, epsilon: Option<f64>) -> Result<(QueryDocument, TpsQuery), Failure> {
    let mut doc = read_query(path)?;
    if let Some(d) = delta {
        doc.delta = d;
    }
    if let Some(e) = epsilon {
        doc.epsilon = e;
    }
    let q = TpsQuery::from_document(&doc)?;
    Ok((doc, q))
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let cfg = GeneratorConfig {
        graphs: a.graphs,
        min_vertices: a.min_vertices,
        max_vertices: a.max_vertices,
        edge_ratio: a.edge_ratio,
        vertex_labels: a.vertex_labels,
        edge_labels: a.edge_labels,
        policy: match a.policy {
            PolicyArg::Singletons => NeighborPolicy::Singletons,
            PolicyArg::Stars => NeighborPolicy::Stars,
            PolicyArg::Triangles => NeighborPolicy::Triangles,
        },
        table_mode: match a.table_mode {
            TableArg::Independent => TableMode::Independent,
            TableArg::RandomCorrelated => TableMode::RandomCorrelated,
            TableArg::MaxTransform => TableMode::MaxTransform,
        },
        max_set_size: a.max_set_size,
        seed: a.seed,
        ..GeneratorConfig::default()
    };
    let db = generate(&cfg)?;
    write_database(&db, &a.db)?;
    if a.queries > 0 {
        let dir = a
            .queries_dir
            .ok_or_else(|| usage("--queries needs --queries-dir"))?;
        fs::create_dir_all(&dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
        let docs = make_queries(&db, a.queries, a.query_edges, a.delta, a.epsilon, a.seed)?;
        for (i, doc) in docs.iter().enumerate() {
            write_file(&dir.join(format!("q{i:03}.json")), &to_json(doc))?;
        }
    }
    eprintln!("wrote {} graphs to {}", db.len(), a.db.display());
    Ok(0)
}

/// Queries cut from randomly chosen database skeletons.
fn make_queries(
    db: &Database,
    count: usize,
    edges: usize,
    delta: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<QueryDocument>, Failure> {
    if db.is_empty() {
        return Err(usage("cannot cut queries from an empty database"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut docs = Vec::with_capacity(count);
    while docs.len() < count {
        let g = &db.graphs()[rand::Rng::random_range(&mut rng, 0..db.len())];
        let Some(q) = sample_query(g.skeleton(), edges, &mut rng) else {
            continue;
        };
        docs.push(QueryDocument {
            format_version: FORMAT_VERSION,
            query: PatternDoc::from_graph(&q),
            delta: delta.min(q.edge_count()),
            epsilon,
            tau: None,
            xi: None,
            seed: None,
        });
    }
    Ok(docs)
}

fn cmd_index(a: IndexArgs) -> CmdResult {
    let db = read_database(&a.db)?;
    let params = IndexParams {
        mining: MiningParams {
            alpha: a.alpha,
            beta: a.beta,
            gamma: a.gamma,
            max_vertices: a.max_feature_vertices,
            ..MiningParams::default()
        },
        sip: SipParams {
            mode: match a.mode {
                ModeArg::Exact => ConditionalMode::Exact,
                ModeArg::Sample => ConditionalMode::Sample,
            },
            tau: a.tau,
            xi: a.xi,
            seed: a.seed,
            ..SipParams::default()
        },
    };
    let start = Instant::now();
    let pmi = build_index(&db, &params)?;
    save_pmi(&pmi, &a.pmi)?;
    for w in &pmi.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "indexed {} graphs with {} features in {:.2}s",
        db.len(),
        pmi.features.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn query_params(a: &QueryArgs, doc: &QueryDocument) -> QueryParams {
    let d = QueryParams::default();
    QueryParams {
        tau: a.tau.or(doc.tau).unwrap_or(d.tau),
        xi: a.xi.or(doc.xi).unwrap_or(d.xi),
        seed: a.seed.or(doc.seed).unwrap_or(d.seed),
        enable_accept_pruning: a.enable_accept_pruning,
        exact_verify: a.exact_verify,
        literal_estimator: a.literal_estimator,
        relabel: a.relax_relabel,
        record_timings: a.timings,
        ..d
    }
}

fn cmd_query(a: QueryArgs) -> CmdResult {
    let db = read_database(&a.db)?;
    let pmi = load_pmi(&a.pmi)?;
    let (doc, q) = load_query(&a.query, a.delta, a.epsilon)?;
    let params = query_params(&a, &doc);
    if !(params.tau > 0.0 && params.xi > 0.0 && params.xi < 1.0) {
        return Err(usage("tau must be positive and xi within (0, 1)"));
    }
    let (answers, report) = run_query(&db, &pmi, &q, &params)?;
    if let Some(path) = &a.report {
        write_file(path, &to_json(&report))?;
    }
    for id in &answers {
        println!("{id}");
    }
    for r in &report.graphs {
        if let Some(e) = &r.error {
            eprintln!("warning: verification of {} failed: {e}", r.id);
        }
    }
    Ok(0)
}

/// Exact similarity probability per graph; `None` where the graph exceeds
/// the oracle cap.
fn oracle_table(db: &Database, q: &TpsQuery, relabel: bool) -> Result<Vec<(String, Option<f64>)>, Failure> {
    let opts = if relabel {
        let mut labels: Vec<_> = db
            .graphs()
            .iter()
            .flat_map(|g| g.skeleton().edges().iter().map(|e| e.label.clone()))
            .collect();
        labels.sort();
        labels.dedup();
        RelaxOptions {
            relabel: true,
            alphabet: labels,
        }
    } else {
        RelaxOptions::default()
    };
    let oracle = DistanceOracle::new(&q.q, &opts)?;
    let cap = oracle_cap_from_env();
    let mut rows = Vec::with_capacity(db.len());
    for g in db.graphs() {
        match exact_ssp(g, &oracle, q.delta, cap) {
            Ok(p) => rows.push((g.id().to_string(), Some(p))),
            Err(Error::OracleCap { .. }) => rows.push((g.id().to_string(), None)),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(rows)
}

fn cmd_oracle(a: OracleArgs) -> CmdResult {
    let db = read_database(&a.db)?;
    let (_, q) = load_query(&a.query, a.delta, a.epsilon)?;
    let rows = oracle_table(&db, &q, a.relax_relabel)?;
    let mut skipped = false;
    println!("graph\tssp\tanswer");
    for (id, p) in rows {
        match p {
            Some(p) => println!("{id}\t{p:.12}\t{}", (p >= q.epsilon) as u8),
            None => {
                skipped = true;
                eprintln!("warning: {id} exceeds the oracle cap of {} edges; skipped", oracle_cap_from_env());
            }
        }
    }
    Ok(if skipped { EXIT_PARTIAL } else { 0 })
}

fn query_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, Failure> {
    let mut files: Vec<(String, PathBuf)> = fs::read_dir(dir)
        .map_err(|e| usage(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_stem().unwrap_or_default().to_string_lossy().into_owned(), p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("no query documents in {}", dir.display())));
    }
    Ok(files)
}

fn evaluate(
    label: &str,
    db: &Database,
    pmi: &Pmi,
    queries: &[(String, TpsQuery)],
    truth: &TruthDocument,
    params: &QueryParams,
) -> Result<EvalTable, Failure> {
    let mut scores = Vec::new();
    for (name, q) in queries {
        let t = truth
            .truths
            .iter()
            .find(|t| &t.query == name)
            .ok_or_else(|| usage(format!("no truth labels for query `{name}`")))?;
        let (answers, _) = run_query(db, pmi, q, params)?;
        scores.push(score(name, &answers, &t.answers));
    }
    Ok(summarize(label, scores))
}

fn oracle_truth(db: &Database, queries: &[(String, TpsQuery)]) -> Result<TruthDocument, Failure> {
    let mut truths = Vec::new();
    for (name, q) in queries {
        let rows = oracle_table(db, q, false)?;
        if rows.iter().any(|(_, p)| p.is_none()) {
            return Err(Failure {
                code: EXIT_PARTIAL,
                message: format!("query `{name}`: some graphs exceed the oracle cap"),
            });
        }
        truths.push(TruthEntry {
            query: name.clone(),
            answers: rows
                .into_iter()
                .filter(|(_, p)| p.is_some_and(|p| p >= q.epsilon))
                .map(|(id, _)| id)
                .collect(),
        });
    }
    Ok(TruthDocument {
        format_version: FORMAT_VERSION,
        truths,
    })
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    let db = read_database(&a.db)?;
    let pmi = load_pmi(&a.pmi)?;
    let mut queries = Vec::new();
    for (name, path) in query_files(&a.queries)? {
        let (_, q) = load_query(&path, None, None)?;
        queries.push((name, q));
    }
    let truth = match (&a.truth, a.oracle_truth) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            pgsim_core::io::parse_versioned::<TruthDocument>(&text, "truth")?
        }
        (None, true) => oracle_truth(&db, &queries)?,
        (None, false) => return Err(usage("truth labels missing: pass --truth or --oracle-truth")),
    };
    let params = QueryParams {
        exact_verify: a.exact_verify,
        seed: a.seed,
        ..QueryParams::default()
    };
    let mut tables = vec![evaluate("correlated", &db, &pmi, &queries, &truth, &params)?];
    if a.compare_independent {
        let ind = independent_derived(&db)?;
        let ind_pmi = build_index(&ind, &pmi.params)?;
        tables.push(evaluate("independent", &ind, &ind_pmi, &queries, &truth, &params)?);
    }
    for t in &tables {
        print!("{}", t.render());
    }
    if let Some(path) = &a.out {
        write_file(path, &to_json(&tables))?;
    }
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let cfg = GeneratorConfig {
        graphs: a.graphs,
        min_vertices: a.vertices,
        max_vertices: a.vertices,
        edge_ratio: a.edge_ratio,
        seed: a.seed,
        ..GeneratorConfig::default()
    };
    let t = Instant::now();
    let db = generate(&cfg)?;
    println!("generate: {} graphs in {:.2}s", db.len(), t.elapsed().as_secs_f64());

    let params = IndexParams {
        mining: MiningParams {
            max_vertices: a.max_feature_vertices,
            ..MiningParams::default()
        },
        sip: SipParams {
            seed: a.seed,
            ..SipParams::default()
        },
    };
    let t = Instant::now();
    let mined = select_features(&db, &params.mining)?;
    let mining = t.elapsed().as_secs_f64();
    let mut pmi = build_pmi(&db, mined.features, &params);
    pmi.warnings = mined.warnings;
    println!(
        "index: {} features in {:.2}s (mining {:.2}s)",
        pmi.features.len(),
        t.elapsed().as_secs_f64(),
        mining
    );

    println!("size\tquery\tstructural\tcandidates\tanswers\tseconds");
    let qparams = QueryParams {
        seed: a.seed,
        ..QueryParams::default()
    };
    let mut times = Vec::new();
    for &size in &a.sizes {
        let docs = make_queries(&db, a.queries_per_size, size, a.delta, a.epsilon, a.seed ^ size as u64)?;
        for (i, doc) in docs.iter().enumerate() {
            let q = TpsQuery::from_document(doc)?;
            let t = Instant::now();
            let (_, report) = run_query(&db, &pmi, &q, &qparams)?;
            let secs = t.elapsed().as_secs_f64();
            times.push(secs);
            println!(
                "q{size}\t{i}\t{}\t{}\t{}\t{secs:.3}",
                report.stages.structural, report.stages.candidates, report.stages.answers
            );
        }
    }
    times.sort_by(f64::total_cmp);
    if !times.is_empty() {
        println!("median query: {:.3}s", times[times.len() / 2]);
    }
    Ok(0)
}
