//! The four filtering stages: KL pre-filter, delimiter density,
//! long-utterance removal and the rare-word post-filter.
//!
//! Every threshold is inclusive on the keep side.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::extract::{Dialogue, MIN_DIALOGUE_LEN};
use crate::ingest::Book;
use crate::lang::{count_open_marks, LanguageProfile};
use crate::text::{
    is_punctuation, kl_divergence, split_paragraphs, tokenize, NgramCounts, Order, WordDistribution,
    DEFAULT_EPSILON,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    Passed,
    ShortBook,
    KlAboveThreshold,
    FewDelimiters,
    TooManyRareWords,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub keep: bool,
    /// KL divergence in bits, delimiters per 10 000 tokens, or rare-word
    /// share, depending on the filter.
    pub score: f64,
    pub reason: FilterReason,
}

pub fn prefilter(book: &Book, global: &WordDistribution, cfg: &PipelineConfig) -> Result<FilterDecision> {
    let tokens = tokenize(&book.body).tokens;
    prefilter_counts(&NgramCounts::from_tokens(Order::Unigram, &tokens), global, cfg)
}

/// [`prefilter`] on a book's precomputed unigram counts.
pub fn prefilter_counts(
    book_counts: &NgramCounts,
    global: &WordDistribution,
    cfg: &PipelineConfig,
) -> Result<FilterDecision> {
    if book_counts.total() == 0 {
        return Err(Error::InvalidBook("no tokens".into()));
    }
    let dist = WordDistribution::from_counts(book_counts, None)?;
    let score = kl_divergence(&dist, global, DEFAULT_EPSILON)?;
    let (keep, reason) = if (book_counts.total() as usize) < cfg.kl_min_words {
        (true, FilterReason::ShortBook)
    } else if score <= cfg.kl_threshold {
        (true, FilterReason::Passed)
    } else {
        (false, FilterReason::KlAboveThreshold)
    };
    Ok(FilterDecision { keep, score, reason })
}

pub fn delimiter_filter(book: &Book, profile: &LanguageProfile, cfg: &PipelineConfig) -> Result<FilterDecision> {
    if book.word_count == 0 {
        return Err(Error::InvalidBook(format!("{} has no tokens", book.id())));
    }
    let opens: usize = split_paragraphs(&book.body)
        .iter()
        .map(|p| count_open_marks(&p.text, profile))
        .sum();
    Ok(delimiter_decision(opens, book.word_count, cfg))
}

pub(crate) fn delimiter_decision(opens: usize, word_count: usize, cfg: &PipelineConfig) -> FilterDecision {
    // One rounding only, so exact boundary ratios compare equal.
    let score = (opens as f64 * 10_000.0) / word_count as f64;
    let keep = score >= cfg.delimiter_ratio;
    FilterDecision {
        keep,
        score,
        reason: if keep {
            FilterReason::Passed
        } else {
            FilterReason::FewDelimiters
        },
    }
}

/// Remove utterances longer than `max_utt_words` tokens. The dialogue is
/// cut at every removal; pieces shorter than two turns are dropped.
pub fn drop_long_utterances(dialogue: &Dialogue, cfg: &PipelineConfig) -> Vec<Dialogue> {
    dialogue
        .utterances
        .split(|u| u.token_count() > cfg.max_utt_words)
        .filter(|run| run.len() >= MIN_DIALOGUE_LEN)
        .map(|run| Dialogue {
            book_id: dialogue.book_id.clone(),
            utterances: run.to_vec(),
        })
        .collect()
}

/// The most frequent non-punctuation tokens of a corpus. Punctuation is
/// always in vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: HashSet<String>,
}

impl Vocabulary {
    pub fn from_counts(counts: &NgramCounts, top_k: usize) -> Self {
        let words = counts
            .top_k(top_k)
            .into_iter()
            .map(|(w, _)| w.to_string())
            .collect();
        Vocabulary { words }
    }

    pub fn from_dialogues<'a>(dialogues: impl IntoIterator<Item = &'a Dialogue>, top_k: usize) -> Self {
        Self::from_counts(&word_counts(dialogues), top_k)
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Vocabulary {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        is_punctuation(token) || self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Unigram counts of the non-punctuation tokens of some dialogues.
pub fn word_counts<'a>(dialogues: impl IntoIterator<Item = &'a Dialogue>) -> NgramCounts {
    let mut counts = NgramCounts::new(Order::Unigram);
    for d in dialogues {
        for u in &d.utterances {
            let words: Vec<&str> = u
                .tokens
                .iter()
                .map(String::as_str)
                .filter(|t| !is_punctuation(t))
                .collect();
            counts.add_sequence(&words);
        }
    }
    counts
}

pub fn rare_word_filter(dialogue: &Dialogue, vocab: &Vocabulary, cfg: &PipelineConfig) -> Result<FilterDecision> {
    let total = dialogue.token_count();
    if total == 0 {
        return Err(Error::InvalidDialogue(format!(
            "dialogue from {} has no tokens",
            dialogue.book_id
        )));
    }
    let rare = dialogue
        .utterances
        .iter()
        .flat_map(|u| &u.tokens)
        .filter(|t| !vocab.contains(t))
        .count();
    let score = rare as f64 / total as f64;
    let keep = score <= cfg.rare_ratio;
    Ok(FilterDecision {
        keep,
        score,
        reason: if keep {
            FilterReason::Passed
        } else {
            FilterReason::TooManyRareWords
        },
    })
}
