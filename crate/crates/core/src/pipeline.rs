//! Stage driver: runs the filters and extraction steps in order over a
//! set of books and accounts for everything each stage keeps and drops.
//!
//! Per-book work runs in parallel; results are collected in book order and
//! all tallies are integer sums, so the output does not depend on the
//! number of worker threads.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::dataset::{write_dialogues, write_file};
use crate::error::{Error, Result};
use crate::extract::{extract_book, Dialogue, ExtractionTally};
use crate::filters::{delimiter_filter, prefilter_counts, rare_word_filter, FilterDecision, Vocabulary};
use crate::ingest::{load_mirror, Book, SkippedBook};
use crate::lang::LanguageProfile;
use crate::split::{split_corpus, Part, SplitCorpus};
use crate::stats::{accumulate, CorpusStats, Histogram, StatsAccumulator};
use crate::text::{tokenize, NgramCounts, Order, WordDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Books,
    Utterances,
    Dialogues,
}

/// One row of the stage report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTally {
    pub stage: String,
    pub method: String,
    pub parameter: String,
    pub unit: Unit,
    pub input: usize,
    pub kept: usize,
    pub dropped: usize,
    /// Dropped share of the stage input, in percent.
    pub pct_dropped: f64,
}

impl StageTally {
    fn new(stage: &str, method: &str, parameter: String, unit: Unit, input: usize, kept: usize) -> Self {
        let dropped = input - kept;
        StageTally {
            stage: stage.into(),
            method: method.into(),
            parameter,
            unit,
            input,
            kept,
            dropped,
            pct_dropped: if input == 0 {
                0.0
            } else {
                100.0 * dropped as f64 / input as f64
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub lang: String,
    pub stages: Vec<StageTally>,
}

/// Outcome of a book-level filter for one book.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookDecision {
    pub book_id: String,
    pub word_count: usize,
    #[serde(flatten)]
    pub decision: FilterDecision,
}

fn book_counts(book: &Book) -> NgramCounts {
    NgramCounts::from_tokens(Order::Unigram, &tokenize(&book.body).tokens)
}

/// KL pre-filter against the distribution of all `books`.
pub fn apply_prefilter(books: Vec<Book>, cfg: &PipelineConfig) -> Result<(Vec<Book>, Vec<BookDecision>)> {
    if books.is_empty() {
        return Ok((books, Vec::new()));
    }
    let per_book: Vec<NgramCounts> = books.par_iter().map(book_counts).collect();
    let mut total = NgramCounts::new(Order::Unigram);
    for c in &per_book {
        total.merge(c)?;
    }
    let global = WordDistribution::from_counts(&total, None)?;
    let decisions: Vec<FilterDecision> = per_book
        .par_iter()
        .map(|c| prefilter_counts(c, &global, cfg))
        .collect::<Result<_>>()?;
    Ok(partition_books(books, decisions))
}

pub fn apply_delimiter_filter(
    books: Vec<Book>,
    profile: &LanguageProfile,
    cfg: &PipelineConfig,
) -> Result<(Vec<Book>, Vec<BookDecision>)> {
    let decisions: Vec<FilterDecision> = books
        .par_iter()
        .map(|b| delimiter_filter(b, profile, cfg))
        .collect::<Result<_>>()?;
    Ok(partition_books(books, decisions))
}

fn partition_books(books: Vec<Book>, decisions: Vec<FilterDecision>) -> (Vec<Book>, Vec<BookDecision>) {
    let mut kept = Vec::new();
    let mut log = Vec::with_capacity(books.len());
    for (book, decision) in books.into_iter().zip(decisions) {
        log.push(BookDecision {
            book_id: book.meta.book_id.clone(),
            word_count: book.word_count,
            decision,
        });
        if decision.keep {
            kept.push(book);
        }
    }
    (kept, log)
}

/// Extraction, gap segmentation and long-utterance removal over all books.
/// Dialogues come out ordered by book, then by position in the book.
pub fn apply_extraction(
    books: &[Book],
    profile: &LanguageProfile,
    cfg: &PipelineConfig,
) -> (Vec<Dialogue>, ExtractionTally) {
    let per_book: Vec<(Vec<Dialogue>, ExtractionTally)> =
        books.par_iter().map(|b| extract_book(b, profile, cfg)).collect();
    let mut tally = ExtractionTally::default();
    let mut dialogues = Vec::new();
    for (ds, t) in per_book {
        tally.add(&t);
        dialogues.extend(ds);
    }
    (dialogues, tally)
}

/// Rare-word post-filter with a vocabulary built from `dialogues` itself.
pub fn apply_rare_word_filter(dialogues: Vec<Dialogue>, cfg: &PipelineConfig) -> Result<Vec<Dialogue>> {
    let vocab = Vocabulary::from_dialogues(&dialogues, cfg.rare_vocab_top);
    let keep: Vec<bool> = dialogues
        .par_iter()
        .map(|d| rare_word_filter(d, &vocab, cfg).map(|r| r.keep))
        .collect::<Result<_>>()?;
    Ok(dialogues
        .into_iter()
        .zip(keep)
        .filter_map(|(d, k)| k.then_some(d))
        .collect())
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub split: SplitCorpus,
    pub report: StageReport,
    pub prefilter: Vec<BookDecision>,
    pub delimiter: Vec<BookDecision>,
    pub skipped: Vec<SkippedBook>,
}

/// Stats for each part and for the whole corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub train: CorpusStats,
    pub valid: CorpusStats,
    pub test: CorpusStats,
    pub total: CorpusStats,
}

impl PipelineOutput {
    pub fn all_dialogues(&self) -> impl Iterator<Item = &Dialogue> {
        Part::ALL.into_iter().flat_map(|p| self.split.part(p))
    }

    fn accumulators(&self) -> [StatsAccumulator; 3] {
        Part::ALL.map(|p| accumulate(self.split.part(p)))
    }

    pub fn stats(&self) -> SplitStats {
        let [train, valid, test] = self.accumulators();
        let mut total = train.clone();
        total.merge(&valid);
        total.merge(&test);
        SplitStats {
            train: train.finish(),
            valid: valid.finish(),
            test: test.finish(),
            total: total.finish(),
        }
    }

    pub fn histogram(&self, bin: usize) -> Result<Histogram> {
        let mut total = StatsAccumulator::default();
        for acc in self.accumulators() {
            total.merge(&acc);
        }
        Histogram::from_counts(total.length_counts(), bin)
    }

    /// Write `<lang>/{train,valid,test}.txt` with provenance sidecars plus
    /// `stats.json`, `histogram.csv` and `stage_report.json` under `out_dir`.
    /// Returns the written paths.
    pub fn write(&self, out_dir: &Path, histogram_bin: usize) -> Result<Vec<PathBuf>> {
        let dir = out_dir.join(&self.report.lang);
        let mut written = Vec::new();
        for part in Part::ALL {
            let path = dir.join(format!("{}.txt", part.name()));
            write_dialogues(&path, self.split.part(part))?;
            written.push(crate::dataset::provenance_path(&path));
            written.push(path);
        }
        let files: [(&str, Vec<u8>); 3] = [
            ("stats.json", pretty_json(&self.stats())?),
            ("histogram.csv", self.histogram(histogram_bin)?.to_csv().into_bytes()),
            ("stage_report.json", pretty_json(&self.report)?),
        ];
        for (name, bytes) in files {
            let path = dir.join(name);
            write_file(&path, &bytes)?;
            written.push(path);
        }
        written.sort();
        Ok(written)
    }
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Run every stage after ingestion on already-loaded books of one language.
/// `skipped` is the ingestion-stage drop list and feeds the first report row.
pub fn run_books(
    books: Vec<Book>,
    skipped: Vec<SkippedBook>,
    profile: &LanguageProfile,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut stages = Vec::new();
    let loaded = books.len();
    stages.push(StageTally::new(
        "rights_language",
        "public-domain books in the requested language",
        profile.lang.clone(),
        Unit::Books,
        loaded + skipped.len(),
        loaded,
    ));

    let (books, prefilter) = apply_prefilter(books, cfg)?;
    stages.push(StageTally::new(
        "prefilter",
        "KL divergence from the corpus unigram distribution",
        format!("{} bits, books of {}+ words", cfg.kl_threshold, cfg.kl_min_words),
        Unit::Books,
        loaded,
        books.len(),
    ));

    let n_pre = books.len();
    let (books, delimiter) = apply_delimiter_filter(books, profile, cfg)?;
    stages.push(StageTally::new(
        "delimiter",
        "opening delimiters per 10000 words",
        format!("{}", cfg.delimiter_ratio),
        Unit::Books,
        n_pre,
        books.len(),
    ));

    let (dialogues, tally) = apply_extraction(&books, profile, cfg);
    let after_gap = tally.utterances - tally.gap_singletons;
    stages.push(StageTally::new(
        "dialogue_gap",
        "characters of narrative between turns",
        format!("{}", cfg.gap_chars),
        Unit::Utterances,
        tally.utterances,
        after_gap,
    ));
    let after_long: usize = dialogues.iter().map(Dialogue::len).sum();
    stages.push(StageTally::new(
        "long_utterances",
        "words per utterance",
        format!("{}", cfg.max_utt_words),
        Unit::Utterances,
        after_gap,
        after_long,
    ));

    let n_dialogues = dialogues.len();
    let dialogues = apply_rare_word_filter(dialogues, cfg)?;
    stages.push(StageTally::new(
        "post_filter",
        "share of words outside the most frequent words",
        format!("{} of top {}", cfg.rare_ratio, cfg.rare_vocab_top),
        Unit::Dialogues,
        n_dialogues,
        dialogues.len(),
    ));

    let split = split_corpus(&dialogues, cfg);
    Ok(PipelineOutput {
        split,
        report: StageReport {
            lang: profile.lang.clone(),
            stages,
        },
        prefilter,
        delimiter,
        skipped,
    })
}

/// Load a mirror and run the whole pipeline.
pub fn run(mirror_dir: &Path, metadata: &Path, profile: &LanguageProfile, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let load = load_mirror(mirror_dir, metadata, &profile.lang)?;
    run_books(load.books, load.skipped, profile, cfg)
}

/// Run `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
