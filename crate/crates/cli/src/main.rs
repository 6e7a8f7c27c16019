mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use booktalk::dataset::{read_dialogues, read_jsonl, write_dialogues, write_jsonl};
use booktalk::eval::{evaluate, EmbeddingTable, EvalInput, EvalOptions, KlDirection};
use booktalk::extract::Dialogue;
use booktalk::ingest::{load_mirror, Book};
use booktalk::lang::{LanguageProfile, LanguageRegistry};
use booktalk::pipeline;
use booktalk::qa::{sample_dialogues, sample_utterance_pairs, tally_annotations};
use booktalk::split::{split_corpus, Part};
use booktalk::stats::{accumulate_file, Histogram};
use booktalk::PipelineConfig;
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use manifest::RunManifest;

/// Extract dialogue corpora from plain-text books and evaluate responses.
#[derive(Debug, Parser)]
#[command(name = "booktalk", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON file with pipeline thresholds; flags below override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Language registry replacing the built-in one.
    #[arg(long, global = true, value_name = "FILE")]
    languages: Option<PathBuf>,

    /// Worker threads for per-book work (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,

    #[arg(long, global = true)]
    kl_threshold: Option<f64>,
    #[arg(long, global = true)]
    kl_min_words: Option<usize>,
    #[arg(long, global = true)]
    delimiter_ratio: Option<f64>,
    #[arg(long, global = true)]
    gap_chars: Option<usize>,
    #[arg(long, global = true)]
    max_utt_words: Option<usize>,
    #[arg(long, global = true)]
    rare_vocab_top: Option<usize>,
    #[arg(long, global = true)]
    rare_ratio: Option<f64>,
    /// Train, validation and test shares, comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_name = "T,V,T")]
    split_ratios: Option<Vec<f64>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load eligible books from a local mirror into a JSON-lines book file.
    Ingest {
        #[arg(long)]
        mirror: PathBuf,
        #[arg(long)]
        metadata: PathBuf,
        #[arg(long)]
        lang: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Drop books whose word distribution is far from the corpus.
    Prefilter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Per-book decisions (default: <output>.decisions.jsonl).
        #[arg(long)]
        decisions: Option<PathBuf>,
    },
    /// Drop books with too few dialogue delimiters.
    DelimiterFilter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        lang: String,
        #[arg(long)]
        decisions: Option<PathBuf>,
    },
    /// Extract dialogues from a book file.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        lang: String,
    },
    /// Drop dialogues with too many rare words.
    Postfilter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write train/valid/test dialogue files, keeping each book in one part.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        lang: String,
    },
    /// Corpus statistics of a dialogue file.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Write the statistics here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write a dialogue-length histogram as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        bin: usize,
    },
    /// Annotation sheets for manual error analysis.
    Sample {
        #[command(subcommand)]
        action: SampleAction,
    },
    /// Score a response file against targets.
    Eval(EvalArgs),
    /// Run every stage from mirror to splits.
    Pipeline {
        #[arg(long)]
        mirror: PathBuf,
        #[arg(long)]
        metadata: PathBuf,
        #[arg(long)]
        lang: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        histogram_bin: usize,
    },
}

#[derive(Debug, Subcommand)]
enum SampleAction {
    /// Adjacent utterance pairs.
    Pairs(SampleArgs),
    /// Whole dialogues.
    Dialogues(SampleArgs),
    /// Count labels in a completed sheet.
    Tally {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Dialogue file with its provenance sidecar.
    #[arg(long)]
    input: PathBuf,
    /// Book file used for context excerpts.
    #[arg(long)]
    books: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    context_chars: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    sources: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    #[arg(long)]
    targets: PathBuf,
    #[arg(long)]
    train_targets: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Report KL(responses ‖ targets) instead of KL(targets ‖ responses).
    #[arg(long)]
    reverse_kl: bool,
    /// Accept empty response lines.
    #[arg(long)]
    allow_empty: bool,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl GlobalArgs {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(kl_threshold, kl_min_words, delimiter_ratio, gap_chars, max_utt_words, rare_vocab_top, rare_ratio, seed);
        if let Some(r) = &self.split_ratios {
            let [t, v, s] = r[..] else {
                bail!(booktalk::Error::InvalidConfig(format!(
                    "--split-ratios needs three values, got {}",
                    r.len()
                )));
            };
            cfg.split_ratios = [t, v, s];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn profile(&self, lang: &str) -> Result<LanguageProfile> {
        let registry = match &self.languages {
            Some(path) => LanguageRegistry::load(path)?,
            None => LanguageRegistry::builtin(),
        };
        Ok(registry.get(lang)?.clone())
    }
}

/// What a command did, for its manifest.
struct Outcome {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    tallies: serde_json::Value,
    /// Manifest location when `--manifest` is not given.
    manifest: PathBuf,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    path.with_file_name(format!("{name}{suffix}"))
}

fn manifest_next_to(path: &Path) -> PathBuf {
    sibling(path, ".manifest.json")
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn book_decision_tally(decisions: &[pipeline::BookDecision]) -> serde_json::Value {
    let kept = decisions.iter().filter(|d| d.decision.keep).count();
    json!({ "input": decisions.len(), "kept": kept, "dropped": decisions.len() - kept })
}

fn run(cli: &Cli, cfg: &PipelineConfig) -> Result<Outcome> {
    let g = &cli.global;
    Ok(match &cli.command {
        Command::Ingest { mirror, metadata, lang, output } => {
            let load = load_mirror(mirror, metadata, lang)?;
            write_jsonl(output, &load.books)?;
            let skipped = sibling(output, ".skipped.jsonl");
            write_jsonl(&skipped, &load.skipped)?;
            info!("ingest: {} books loaded, {} skipped", load.books.len(), load.skipped.len());
            Outcome {
                inputs: vec![mirror.clone(), metadata.clone()],
                outputs: vec![output.clone(), skipped],
                tallies: json!({ "loaded": load.books.len(), "skipped": load.skipped.len() }),
                manifest: manifest_next_to(output),
            }
        }
        Command::Prefilter { input, output, decisions } => {
            let books: Vec<Book> = read_jsonl(input)?;
            let (kept, log) = pipeline::apply_prefilter(books, cfg)?;
            let decisions = decisions.clone().unwrap_or_else(|| sibling(output, ".decisions.jsonl"));
            write_jsonl(output, &kept)?;
            write_jsonl(&decisions, &log)?;
            info!("prefilter: kept {} of {} books", kept.len(), log.len());
            Outcome {
                inputs: vec![input.clone()],
                outputs: vec![output.clone(), decisions],
                tallies: book_decision_tally(&log),
                manifest: manifest_next_to(output),
            }
        }
        Command::DelimiterFilter { input, output, lang, decisions } => {
            let profile = g.profile(lang)?;
            let books: Vec<Book> = read_jsonl(input)?;
            let (kept, log) = pipeline::apply_delimiter_filter(books, &profile, cfg)?;
            let decisions = decisions.clone().unwrap_or_else(|| sibling(output, ".decisions.jsonl"));
            write_jsonl(output, &kept)?;
            write_jsonl(&decisions, &log)?;
            info!("delimiter filter: kept {} of {} books", kept.len(), log.len());
            Outcome {
                inputs: vec![input.clone()],
                outputs: vec![output.clone(), decisions],
                tallies: book_decision_tally(&log),
                manifest: manifest_next_to(output),
            }
        }
        Command::Extract { input, output, lang } => {
            let profile = g.profile(lang)?;
            let books: Vec<Book> = read_jsonl(input)?;
            let (dialogues, tally) = pipeline::apply_extraction(&books, &profile, cfg);
            write_jsonl(output, &dialogues)?;
            info!("extract: {} dialogues from {} books", dialogues.len(), books.len());
            Outcome {
                inputs: vec![input.clone()],
                outputs: vec![output.clone()],
                tallies: serde_json::to_value(tally)?,
                manifest: manifest_next_to(output),
            }
        }
        Command::Postfilter { input, output } => {
            let dialogues: Vec<Dialogue> = read_jsonl(input)?;
            let n = dialogues.len();
            let kept = pipeline::apply_rare_word_filter(dialogues, cfg)?;
            write_jsonl(output, &kept)?;
            info!("post-filter: kept {} of {n} dialogues", kept.len());
            Outcome {
                inputs: vec![input.clone()],
                outputs: vec![output.clone()],
                tallies: json!({ "input": n, "kept": kept.len(), "dropped": n - kept.len() }),
                manifest: manifest_next_to(output),
            }
        }
        Command::Split { input, out_dir, lang } => {
            let dialogues: Vec<Dialogue> = read_jsonl(input)?;
            let split = split_corpus(&dialogues, cfg);
            let dir = out_dir.join(lang);
            let mut outputs = Vec::new();
            let mut tallies = serde_json::Map::new();
            for part in Part::ALL {
                let path = dir.join(format!("{}.txt", part.name()));
                write_dialogues(&path, split.part(part))?;
                tallies.insert(part.name().into(), json!(split.part(part).len()));
                outputs.push(path);
            }
            let tallies = serde_json::Value::from(tallies);
            info!("split: {tallies}");
            Outcome {
                inputs: vec![input.clone()],
                outputs,
                tallies,
                manifest: dir.join("split.manifest.json"),
            }
        }
        Command::Stats { input, output, histogram, bin } => {
            let acc = accumulate_file(input)?;
            let stats = acc.finish();
            write_json(output.as_deref(), &stats)?;
            let mut outputs: Vec<PathBuf> = output.iter().cloned().collect();
            if let Some(h) = histogram {
                let csv = Histogram::from_counts(acc.length_counts(), *bin)?.to_csv();
                fs::write(h, csv).with_context(|| format!("writing {}", h.display()))?;
                outputs.push(h.clone());
            }
            Outcome {
                inputs: vec![input.clone()],
                manifest: manifest_next_to(output.as_deref().unwrap_or(&sibling(input, ".stats"))),
                outputs,
                tallies: serde_json::to_value(&stats)?,
            }
        }
        Command::Sample { action } => match action {
            SampleAction::Pairs(args) | SampleAction::Dialogues(args) => {
                let corpus = read_dialogues(&args.input)?;
                let mut inputs = vec![args.input.clone()];
                let bodies: BTreeMap<String, String> = match &args.books {
                    Some(path) => {
                        inputs.push(path.clone());
                        read_jsonl::<Book>(path)?
                            .into_iter()
                            .map(|b| (b.meta.book_id, b.body))
                            .collect()
                    }
                    None => BTreeMap::new(),
                };
                let sheet = if matches!(action, SampleAction::Pairs(_)) {
                    sample_utterance_pairs(&corpus, &bodies, args.n, args.context_chars, cfg.seed)?
                } else {
                    sample_dialogues(&corpus, &bodies, args.n, args.context_chars, cfg.seed)?
                };
                fs::write(&args.output, sheet.to_csv()?)
                    .with_context(|| format!("writing {}", args.output.display()))?;
                Outcome {
                    inputs,
                    outputs: vec![args.output.clone()],
                    tallies: json!({ "items": sheet.items.len(), "level": sheet.level }),
                    manifest: manifest_next_to(&args.output),
                }
            }
            SampleAction::Tally { input, output } => {
                let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
                let tally = tally_annotations(&text)?;
                write_json(output.as_deref(), &tally)?;
                Outcome {
                    inputs: vec![input.clone()],
                    outputs: output.iter().cloned().collect(),
                    tallies: serde_json::to_value(&tally)?,
                    manifest: manifest_next_to(output.as_deref().unwrap_or(&sibling(input, ".tally"))),
                }
            }
        },
        Command::Eval(args) => {
            let input = EvalInput::from_files(&args.sources, &args.responses, &args.targets, &args.train_targets)?;
            let table = EmbeddingTable::load(&args.embeddings)?;
            let opts = EvalOptions {
                kl_direction: if args.reverse_kl {
                    KlDirection::ResponsesToTargets
                } else {
                    KlDirection::TargetsToResponses
                },
                allow_empty_responses: args.allow_empty,
                ..EvalOptions::default()
            };
            let report = evaluate(&input, &table, &opts)?;
            eprint!("{}", report.to_table());
            write_json(args.output.as_deref(), &report)?;
            Outcome {
                inputs: vec![
                    args.sources.clone(),
                    args.responses.clone(),
                    args.targets.clone(),
                    args.train_targets.clone(),
                    args.embeddings.clone(),
                ],
                outputs: args.output.iter().cloned().collect(),
                tallies: json!({ "responses": input.len(), "options": opts }),
                manifest: manifest_next_to(args.output.as_deref().unwrap_or(&sibling(&args.responses, ".eval"))),
            }
        }
        Command::Pipeline { mirror, metadata, lang, out_dir, histogram_bin } => {
            let profile = g.profile(lang)?;
            let out = pipeline::run(mirror, metadata, &profile, cfg)?;
            let mut outputs = out.write(out_dir, *histogram_bin)?;
            let dir = out_dir.join(lang);
            for (name, records) in [("prefilter", &out.prefilter), ("delimiter", &out.delimiter)] {
                let path = dir.join(format!("{name}_decisions.jsonl"));
                write_jsonl(&path, records)?;
                outputs.push(path);
            }
            let skipped = dir.join("skipped_books.jsonl");
            write_jsonl(&skipped, &out.skipped)?;
            outputs.push(skipped);
            outputs.sort();
            for s in &out.report.stages {
                info!(
                    "{:<16} {:>10} {:<10} in, {:>10} kept, {:>10} dropped ({:.2}%)",
                    s.stage,
                    s.input,
                    serde_json::to_value(s.unit)?.as_str().unwrap_or(""),
                    s.kept,
                    s.dropped,
                    s.pct_dropped
                );
            }
            Outcome {
                inputs: vec![mirror.clone(), metadata.clone()],
                outputs,
                tallies: json!({ "stages": out.report.stages, "stats": out.stats() }),
                manifest: dir.join("manifest.json"),
            }
        }
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest { .. } => "ingest",
        Command::Prefilter { .. } => "prefilter",
        Command::DelimiterFilter { .. } => "delimiter-filter",
        Command::Extract { .. } => "extract",
        Command::Postfilter { .. } => "postfilter",
        Command::Split { .. } => "split",
        Command::Stats { .. } => "stats",
        Command::Sample { action } => match action {
            SampleAction::Pairs(_) => "sample pairs",
            SampleAction::Dialogues(_) => "sample dialogues",
            SampleAction::Tally { .. } => "sample tally",
        },
        Command::Eval(_) => "eval",
        Command::Pipeline { .. } => "pipeline",
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = cli.global.pipeline_config()?;
    let outcome = pipeline::with_jobs(cli.global.jobs, || run(cli, &cfg))??;
    let mut manifest = RunManifest::new(command_name(&cli.command), &cfg);
    manifest.inputs = outcome.inputs;
    manifest.outputs = outcome.outputs;
    manifest.tallies = outcome.tallies;
    let path = cli.global.manifest.clone().unwrap_or(outcome.manifest);
    manifest.write_atomic(&path)?;
    info!("manifest written to {}", path.display());
    Ok(())
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<booktalk::Error>().map(booktalk::Error::kind))
        .or_else(|| e.chain().find_map(|c| c.downcast_ref::<std::io::Error>().map(|_| "io")))
        .unwrap_or("failure")
}

/// The error chain joined with ": ", skipping causes whose text the
/// previous message already includes.
fn error_message(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if parts.last().is_none_or(|prev| !prev.contains(&text)) {
            parts.push(text);
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = json!({ "error": error_kind(&e), "message": error_message(&e) });
            eprintln!("{report}");
            ExitCode::from(1)
        }
    }
}
