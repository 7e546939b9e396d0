use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;

use qp_core::annotate::{annotate, annotate_report, parse_annotation, serialize_annotation, ArticleAnnotation};
use qp_core::config::{Config, Pipeline};
use qp_core::doc_model::conllu::read_conllu;
use qp_core::doc_model::{parse_documents, AnnotatedDocument};
use qp_core::eval::{evaluate, gold_speaker_references, render_report, EvalOptions, GoldAnnotation};
use qp_core::stats::{breakdown_csv, months, outlet_breakdown, top_sources, top_sources_csv, Window};
use qp_core::store::{AnnotationStatus, Put, Store, STORE_ENV};

#[derive(Parser)]
#[command(name = "qp", version, about = "Quote extraction and source gender statistics for French news")]
struct Cli {
    /// Pipeline configuration (TOML); the builtin defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory.
    #[arg(long, global = true, env = STORE_ENV)]
    store: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check annotated documents (JSON, JSON lines or CoNLL-U).
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run the pipeline over documents and store the annotations.
    Annotate(AnnotateArgs),
    /// Score system annotations against gold annotations.
    Evaluate(EvaluateArgs),
    /// Outlet breakdown and monthly top sources from stored annotations.
    Stats(StatsArgs),
}

#[derive(Args)]
struct AnnotateArgs {
    paths: Vec<PathBuf>,
    /// Also write annotations to stdout, one JSON object per line.
    #[arg(long)]
    stdout: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of gold annotation files.
    #[arg(long)]
    gold: PathBuf,
    /// Directory of system annotation files; the store otherwise.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Source documents, enabling span checks and the gold-speaker
    /// reference protocol.
    #[arg(long)]
    docs: Vec<PathBuf>,
    /// Matching threshold; repeatable, replaces the configured ones.
    #[arg(long)]
    threshold: Vec<f64>,
    /// Write the report as JSON to this file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    #[arg(long)]
    outlet: Option<String>,
    /// Sources per gender in the monthly rankings.
    #[arg(long)]
    top: Option<usize>,
    /// Count every quote rather than each source once per article.
    #[arg(long)]
    occurrences: bool,
    /// Write breakdown.csv and top_sources.csv here instead of stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// A failure that maps to the usage exit code.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::builtin(),
    };
    match &cli.command {
        Command::Validate { paths } => Ok(validate(paths)),
        Command::Annotate(a) => annotate_cmd(cli, &config, a),
        Command::Evaluate(a) => evaluate_cmd(cli, &config, a),
        Command::Stats(a) => stats_cmd(cli, &config, a),
    }
}

fn open_store(cli: &Cli) -> Result<Option<Store>> {
    cli.store
        .as_ref()
        .map(|p| Store::open(p).with_context(|| format!("opening store {}", p.display())))
        .transpose()
}

fn require_store(cli: &Cli) -> Result<Store> {
    open_store(cli)?.ok_or_else(|| Usage(format!("no store given (use --store or {STORE_ENV})")).into())
}

/// Files named by `paths`, directories expanded to their document files.
fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.is_file()
                        && matches!(f.extension().and_then(|e| e.to_str()), Some("json" | "jsonl" | "ndjson" | "conllu"))
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Every document in a file, each parsed or failed on its own.
fn read_documents(path: &Path) -> Result<Vec<Result<AnnotatedDocument, String>>> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "conllu") {
        return Ok(match read_conllu(&src) {
            Ok(docs) => docs.into_iter().map(Ok).collect(),
            Err(e) => vec![Err(e.to_string())],
        });
    }
    Ok(parse_documents(&src).into_iter().map(|r| r.map_err(|e| e.to_string())).collect())
}

fn validate(paths: &[PathBuf]) -> bool {
    let (mut valid, mut invalid, mut unreadable) = (0, 0, 0);
    let files = match expand(paths) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e:#}");
            return false;
        }
    };
    for f in &files {
        match read_documents(f) {
            Err(e) => {
                unreadable += 1;
                println!("{}: {e:#}", f.display());
            }
            Ok(docs) => {
                for (i, d) in docs.iter().enumerate() {
                    match d {
                        Ok(d) => {
                            valid += 1;
                            println!("{}: {} ok", f.display(), d.doc_id());
                        }
                        Err(e) => {
                            invalid += 1;
                            println!("{}: document {}: {e}", f.display(), i + 1);
                        }
                    }
                }
            }
        }
    }
    println!("{} files, {valid} valid, {invalid} invalid, {unreadable} unreadable", files.len());
    invalid == 0 && unreadable == 0
}

enum Outcome {
    Annotated(Box<ArticleAnnotation>),
    Unchanged,
    Failed,
}

fn annotate_cmd(cli: &Cli, config: &Config, args: &AnnotateArgs) -> Result<bool> {
    let store = open_store(cli)?;
    if store.is_none() && !args.stdout {
        return Err(Usage(format!("nowhere to write: give --store, {STORE_ENV} or --stdout")).into());
    }
    let pipeline = Pipeline::from_config(config)?;
    let mut docs = Vec::new();
    let mut failed = 0;
    for f in expand(&args.paths)? {
        match read_documents(&f) {
            Ok(found) => {
                for (i, d) in found.into_iter().enumerate() {
                    match d {
                        Ok(d) => docs.push(d),
                        Err(e) => {
                            failed += 1;
                            warn!("{}: document {}: {e}", f.display(), i + 1);
                        }
                    }
                }
            }
            Err(e) => {
                failed += 1;
                warn!("{e:#}");
            }
        }
    }
    let outcomes: Vec<Outcome> = docs
        .par_iter()
        .map(|d| {
            if let Some(s) = &store {
                if let Err(e) = s.put_document(d) {
                    warn!("{}: {e}", d.doc_id());
                    return Outcome::Failed;
                }
                if s.annotation_status(d.doc_id(), &pipeline.config_hash) == AnnotationStatus::Fresh && !args.stdout {
                    return Outcome::Unchanged;
                }
            }
            let a = match annotate(d, &pipeline) {
                Ok(a) => a,
                Err(e) => {
                    warn!("{e}");
                    return Outcome::Failed;
                }
            };
            if let Some(s) = &store {
                match s.put_annotation(&a, &pipeline.config_hash) {
                    Ok(Put::Unchanged) => return Outcome::Unchanged,
                    Ok(Put::Stored) => {}
                    Err(e) => {
                        warn!("{}: {e}", d.doc_id());
                        return Outcome::Failed;
                    }
                }
            }
            Outcome::Annotated(Box::new(a))
        })
        .collect();
    pipeline.cache.save()?;
    let mut counts = (0, 0, failed);
    for o in &outcomes {
        match o {
            Outcome::Annotated(a) => {
                counts.0 += 1;
                if args.stdout {
                    println!("{}", serialize_annotation(a));
                }
            }
            Outcome::Unchanged => counts.1 += 1,
            Outcome::Failed => counts.2 += 1,
        }
    }
    if args.stdout && store.is_some() {
        // unchanged annotations are still streamed
        for (d, o) in docs.iter().zip(&outcomes) {
            if matches!(o, Outcome::Unchanged) {
                if let Some(s) = &store {
                    println!("{}", serialize_annotation(&s.get_annotation(d.doc_id())?));
                }
            }
        }
    }
    eprintln!("annotated {}, unchanged {}, failed {}", counts.0, counts.1, counts.2);
    Ok(counts.2 == 0)
}

fn read_dir_json<T>(dir: &Path, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<(PathBuf, T)>> {
    let mut out = Vec::new();
    for f in expand(&[dir.to_path_buf()])? {
        if f.extension().is_some_and(|e| e == "json") {
            let src = std::fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
            let v = parse(&src).with_context(|| format!("in {}", f.display()))?;
            out.push((f, v));
        }
    }
    Ok(out)
}

fn evaluate_cmd(cli: &Cli, config: &Config, args: &EvaluateArgs) -> Result<bool> {
    if !args.gold.is_dir() {
        return Err(Usage(format!("{} is not a directory", args.gold.display())).into());
    }
    if let Some(t) = args.threshold.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Usage(format!("threshold {t} outside [0, 1]")).into());
    }
    let golds = read_dir_json(&args.gold, |s| Ok(GoldAnnotation::parse(s)?))?;
    if golds.is_empty() {
        bail!("no gold annotations in {}", args.gold.display());
    }
    let systems: BTreeMap<String, ArticleAnnotation> = match &args.system {
        Some(dir) => read_dir_json(dir, |s| Ok(parse_annotation(s)?))?
            .into_iter()
            .map(|(_, a)| (a.doc_id.clone(), a))
            .collect(),
        None => {
            let store = require_store(cli)?;
            store.annotations(Window::default(), None)?.into_iter().map(|a| (a.doc_id.clone(), a)).collect()
        }
    };
    let mut documents: BTreeMap<String, AnnotatedDocument> = BTreeMap::new();
    for f in expand(&args.docs)? {
        for d in read_documents(&f)? {
            let d = d.map_err(|e| anyhow::anyhow!("{}: {e}", f.display()))?;
            documents.insert(d.doc_id().to_string(), d);
        }
    }

    let pipeline = (!documents.is_empty()).then(|| Pipeline::from_config(config)).transpose()?;
    let mut pairs = Vec::new();
    let mut references = Vec::new();
    for (path, g) in &golds {
        let Some(s) = systems.get(&g.doc_id) else {
            warn!("{}: no system annotation for {:?}, skipped", path.display(), g.doc_id);
            continue;
        };
        if let Some(p) = &pipeline {
            let Some(d) = documents.get(&g.doc_id) else {
                warn!("{}: no document for {:?}, skipped", path.display(), g.doc_id);
                continue;
            };
            g.check_against(d)?;
            let report = annotate_report(d, p)?;
            references.extend(gold_speaker_references(d, &p.lexicon, &report.clusters, g));
        }
        pairs.push((g, s));
    }
    if pairs.is_empty() {
        bail!("no gold annotation has a matching system annotation");
    }
    let opts = EvalOptions {
        thresholds: if args.threshold.is_empty() { config.eval.thresholds.clone() } else { args.threshold.clone() },
        speaker_overlap: config.eval.speaker_overlap,
        max_reference_distance: config.eval.max_reference_distance,
    };
    let report = evaluate(&pairs, pipeline.as_ref().map(|_| references.as_slice()), &opts);
    print!("{}", render_report(&report));
    if let Some(out) = &args.output {
        let json = serde_json::to_string_pretty(&report)?;
        std::fs::write(out, json + "\n").with_context(|| format!("writing {}", out.display()))?;
        info!("report written to {}", out.display());
    }
    Ok(true)
}

fn stats_cmd(cli: &Cli, config: &Config, args: &StatsArgs) -> Result<bool> {
    let top = args.top.unwrap_or(config.stats.top);
    if top == 0 {
        return Err(Usage("--top must be at least 1".into()).into());
    }
    if let (Some(f), Some(t)) = (args.from, args.to) {
        if f > t {
            return Err(Usage(format!("--from {f} is after --to {t}")).into());
        }
    }
    let store = require_store(cli)?;
    let window = Window {
        from: args.from,
        to: args.to,
    };
    let annotations = store.annotations(window, args.outlet.as_deref())?;
    if annotations.is_empty() {
        eprintln!("no annotated articles in the selection");
        return Ok(true);
    }
    let breakdown = outlet_breakdown(&annotations, window, args.occurrences || config.stats.count_occurrences);
    let tops: Vec<_> = months(&annotations).into_iter().map(|(y, m)| top_sources(&annotations, y, m, top)).collect();
    let (b, t) = (breakdown_csv(&breakdown)?, top_sources_csv(&tops)?);
    match &args.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            std::fs::write(dir.join("breakdown.csv"), b)?;
            std::fs::write(dir.join("top_sources.csv"), t)?;
            std::fs::write(dir.join("breakdown.json"), serde_json::to_string_pretty(&breakdown)? + "\n")?;
            std::fs::write(dir.join("top_sources.json"), serde_json::to_string_pretty(&tops)? + "\n")?;
        }
        None => {
            print!("{b}");
            println!();
            print!("{t}");
        }
    }
    Ok(true)
}
