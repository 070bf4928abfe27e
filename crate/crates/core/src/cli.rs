//! The `sgreti` command line.
//!
//! Exit codes: 0 success, 2 I/O or input error, 3 query syntax error,
//! 4 database error. Flags fall back to `SGRETI_*` environment variables.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::approximator::ApproxConfig;
use crate::corpus::ingest_scene_graphs;
use crate::corpus::vg::convert_visual_genome;
use crate::db::{load_database, save_database, Database};
use crate::embedding::{load_embeddings, EmbeddingStore};
use crate::engine::{evaluate, Evaluation};
use crate::lexicon::{load_lexicon, Lexicon, Scope};

pub const EXIT_IO: i32 = 2;
pub const EXIT_SYNTAX: i32 = 3;
pub const EXIT_DB: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sgreti",
    version,
    about = "Approximate scene-graph image retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a database from a scene-graph file.
    Ingest {
        /// Scene-graph file, one image per line.
        input: PathBuf,
        #[arg(long, env = "SGRETI_LEXICON")]
        lexicon: PathBuf,
        #[arg(long, env = "SGRETI_DB")]
        db: PathBuf,
    },
    /// Convert Visual Genome scene-graph JSON to a scene-graph file.
    ConvertVg {
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Drop objects and relationships whose synsets are not in this lexicon.
        #[arg(long, env = "SGRETI_LEXICON")]
        lexicon: Option<PathBuf>,
    },
    /// Rank images against a query.
    Query(QueryArgs),
    /// Print database counts.
    Stats {
        #[arg(long, env = "SGRETI_DB")]
        db: PathBuf,
    },
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Query text, e.g. `(g:girl) - eating - (c:cake)`.
    query: String,
    #[arg(long, env = "SGRETI_DB")]
    db: PathBuf,
    #[arg(long, env = "SGRETI_LEXICON")]
    lexicon: PathBuf,
    #[arg(long, env = "SGRETI_EMBEDDINGS")]
    embeddings: PathBuf,
    #[arg(long, env = "SGRETI_TOP_K", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    top_k: u64,
    #[arg(long, env = "SGRETI_SUBJECT_SCOPE", default_value = "sister")]
    subject_scope: Scope,
    #[arg(long, env = "SGRETI_OBJECT_SCOPE", default_value = "sister")]
    object_scope: Scope,
    #[arg(long, env = "SGRETI_PREDICATE_SCOPE", default_value = "sister-child")]
    predicate_scope: Scope,
    /// Fraction of ranked predicates to keep, in (0, 1].
    #[arg(long, env = "SGRETI_KEEP_FRACTION", value_parser = parse_fraction)]
    keep_fraction: Option<f64>,
    #[arg(long, env = "SGRETI_MAX_CANDIDATES", default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    max_candidates: u64,
    /// Only use synsets witnessed in context, without nearest-relative back-off.
    #[arg(long, env = "SGRETI_NO_BACKOFF")]
    no_backoff: bool,
    /// Print the approximation trace and per-image groundings.
    #[arg(long)]
    explain: bool,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if f > 0.0 && f <= 1.0 {
        Ok(f)
    } else {
        Err(format!("{f} is outside (0, 1]"))
    }
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn read_lexicon(path: &Path) -> Result<Lexicon, Failure> {
    let file = File::open(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    load_lexicon(BufReader::new(file))
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn read_embeddings(path: &Path) -> Result<EmbeddingStore, Failure> {
    let file = File::open(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    load_embeddings(BufReader::new(file))
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run(
    args: impl IntoIterator<Item = OsString>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { 0 };
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "sgreti: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Ingest { input, lexicon, db } => ingest(&input, &lexicon, &db, out),
        Command::ConvertVg {
            input,
            output,
            lexicon,
        } => convert(&input, &output, lexicon.as_deref(), out),
        Command::Query(args) => query(&args, out),
        Command::Stats { db } => stats(&db, out),
    }
}

fn ingest(input: &Path, lexicon: &Path, db_dir: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let lexicon = read_lexicon(lexicon)?;
    let file = File::open(input).map_err(|e| fail(EXIT_IO, format!("{}: {e}", input.display())))?;
    let corpus = ingest_scene_graphs(BufReader::new(file), &lexicon)
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", input.display())))?;
    let db = Database::build(corpus);
    save_database(db_dir, &db).map_err(|e| fail(EXIT_IO, e))?;
    writeln!(
        out,
        "ingested {} images, {} relationships into {}",
        db.corpus.len(),
        db.corpus.relationship_count(),
        db_dir.display()
    )
    .map_err(|e| fail(EXIT_IO, e))
}

fn convert(
    input: &Path,
    output: &Path,
    lexicon: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let lexicon = lexicon.map(read_lexicon).transpose()?;
    let source =
        File::open(input).map_err(|e| fail(EXIT_IO, format!("{}: {e}", input.display())))?;
    let sink =
        File::create(output).map_err(|e| fail(EXIT_IO, format!("{}: {e}", output.display())))?;
    let mut sink = BufWriter::new(sink);
    let stats = convert_visual_genome(BufReader::new(source), &mut sink, lexicon.as_ref())
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", input.display())))?;
    sink.flush().map_err(|e| fail(EXIT_IO, e))?;
    writeln!(
        out,
        "wrote {} images; dropped {} images, {} objects, {} relationships",
        stats.images_written,
        stats.images_dropped,
        stats.objects_dropped,
        stats.relationships_dropped
    )
    .map_err(|e| fail(EXIT_IO, e))
}

fn stats(db_dir: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let db = load_database(db_dir, None).map_err(|e| fail(EXIT_DB, e))?;
    let text = format!(
        "images\t{}\ntriplets\t{}\nindex-keys\t{}\nsag-entries\t{}\noag-entries\t{}\npag-entries\t{}\n",
        db.corpus.len(),
        db.corpus.relationship_count(),
        db.index.len(),
        db.aggregates.subjects.0.len(),
        db.aggregates.objects.0.len(),
        db.aggregates.predicates.0.len(),
    );
    out.write_all(text.as_bytes()).map_err(|e| fail(EXIT_IO, e))
}

fn query(args: &QueryArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = ApproxConfig {
        subject_scope: args.subject_scope,
        object_scope: args.object_scope,
        predicate_scope: args.predicate_scope,
        predicate_keep_fraction: args
            .keep_fraction
            .unwrap_or(ApproxConfig::default().predicate_keep_fraction),
        max_candidates_per_role: args.max_candidates as usize,
        nearest_witness_backoff: !args.no_backoff,
    };
    let lexicon = read_lexicon(&args.lexicon)?;
    let embeddings = read_embeddings(&args.embeddings)?;
    let db = load_database(&args.db, Some(&lexicon)).map_err(|e| fail(EXIT_DB, e))?;
    let evaluation = evaluate(&args.query, &db, &lexicon, &embeddings, &config)
        .map_err(|e| fail(EXIT_SYNTAX, format!("query: {e}")))?;
    let text = render(&evaluation, args.top_k as usize, args.explain);
    out.write_all(text.as_bytes()).map_err(|e| fail(EXIT_IO, e))
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|i| i.to_string()).collect();
    if parts.is_empty() {
        "-".to_owned()
    } else {
        parts.join(", ")
    }
}

/// Result lines, optionally interleaved with the explanation.
pub fn render(evaluation: &Evaluation, top_k: usize, explain: bool) -> String {
    let mut s = String::new();
    if explain {
        let json = serde_json::to_string(&evaluation.query).expect("query graphs serialize");
        let _ = writeln!(s, "# query {json}");
        for (t, trace) in evaluation.triplets.iter().zip(&evaluation.traces) {
            let _ = writeln!(s, "# {} component {}", t, t.component);
            let _ = writeln!(
                s,
                "#   subject candidates: {}",
                join(&trace.subject_candidates)
            );
            let _ = writeln!(
                s,
                "#   predicate candidates: {}",
                join(&trace.predicate_candidates)
            );
            let _ = writeln!(
                s,
                "#   object candidates: {}",
                join(&trace.object_candidates)
            );
            let _ = writeln!(
                s,
                "#   plausible subjects: {}",
                join(&trace.plausible_subjects)
            );
            let _ = writeln!(
                s,
                "#   plausible objects: {}",
                join(&trace.plausible_objects)
            );
            if !trace.backoff_subjects.is_empty() || !trace.backoff_objects.is_empty() {
                let _ = writeln!(
                    s,
                    "#   back-off: subjects {}; objects {}",
                    join(&trace.backoff_subjects),
                    join(&trace.backoff_objects)
                );
            }
            let scores = trace
                .predicate_scores
                .iter()
                .map(|(p, w)| format!("{p}={w:.6}"));
            let _ = writeln!(s, "#   predicate scores: {}", join(scores));
            let _ = writeln!(s, "#   kept predicates: {}", join(&trace.kept_predicates));
            let _ = writeln!(s, "#   approximates: {}", trace.approximates.len());
            for (key, n) in &trace.approximates {
                let _ = writeln!(s, "#     {key} ({n} images)");
            }
        }
    }
    let shown = &evaluation.results[..evaluation.results.len().min(top_k)];
    for (rank, r) in shown.iter().enumerate() {
        let scores: Vec<String> = r.triplet_scores.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(
            s,
            "{}\t{}\t{:.6}\t{}",
            rank + 1,
            r.image_id,
            r.image_score,
            scores.join(",")
        );
        if explain {
            for sub in &r.explanation {
                let covers = sub.covered_triplets.iter().map(|t| format!("T{}", t + 1));
                let _ = writeln!(
                    s,
                    "    subgraph {} covers {} total {:.6}",
                    sub.id,
                    join(covers),
                    sub.total_score()
                );
                for p in &sub.primitives {
                    let _ = writeln!(
                        s,
                        "      T{} {} at {} -> {}",
                        p.approximate.source_triplet + 1,
                        p.approximate.key,
                        p.subject_node,
                        p.object_node
                    );
                }
                let nodes = sub
                    .node_scores
                    .iter()
                    .map(|(slot, d)| format!("{slot}={d:.6}"));
                let _ = writeln!(s, "      distances {}", join(nodes));
            }
        }
    }
    let _ = writeln!(s, "{} results", shown.len());
    s
}
