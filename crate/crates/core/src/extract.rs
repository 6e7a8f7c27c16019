//! Turning a book into dialogues: separate speech from narration, cut the
//! stream of turns into dialogues at long narrative gaps, then apply the
//! utterance- and dialogue-level filters.

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::filters::{drop_long_utterances, rare_word_filter, Vocabulary};
use crate::ingest::Book;
use crate::lang::{find_spans, LanguageProfile};
use crate::text::{split_paragraphs, tokenize};

pub const MIN_DIALOGUE_LEN: usize = 2;

/// One conversational turn: the speech of one paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub tokens: Vec<String>,
    pub book_id: String,
    pub paragraph_index: usize,
    /// From the first speech character to the last, in body characters.
    pub char_range: (usize, usize),
    /// Inner ranges of the delimited spans joined into `text`.
    pub spans: Vec<(usize, usize)>,
}

impl Utterance {
    pub fn new(
        text: impl Into<String>,
        book_id: impl Into<String>,
        paragraph_index: usize,
        char_range: (usize, usize),
    ) -> Self {
        let text = text.into();
        let tokens = tokenize(&text).tokens;
        Utterance {
            text,
            tokens,
            book_id: book_id.into(),
            paragraph_index,
            char_range,
            spans: vec![char_range],
        }
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub book_id: String,
    pub utterances: Vec<Utterance>,
}

impl Dialogue {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.utterances.iter().map(Utterance::token_count).sum()
    }
}

/// An utterance with the narrative gap that precedes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GappedUtterance {
    pub utterance: Utterance,
    /// Non-whitespace characters of the narrative paragraphs between the
    /// previous utterance and this one; 0 for the first utterance.
    pub gap: usize,
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One utterance per paragraph that contains speech. Spans of the same
/// paragraph are joined with a single space.
pub fn extract_utterances(book: &Book, profile: &LanguageProfile) -> Vec<GappedUtterance> {
    let mut out = Vec::new();
    let mut pending_gap = 0usize;

    for (index, paragraph) in split_paragraphs(&book.body).iter().enumerate() {
        let spans: Vec<_> = find_spans(paragraph, index, profile)
            .into_iter()
            .map(|s| (collapse_whitespace(&s.text), s))
            .filter(|(text, _)| !text.is_empty())
            .collect();

        if spans.is_empty() {
            pending_gap += paragraph.text.chars().filter(|c| !c.is_whitespace()).count();
            continue;
        }

        let base = paragraph.char_range.0;
        let ranges: Vec<(usize, usize)> = spans
            .iter()
            .map(|(_, s)| (base + s.char_range.0, base + s.char_range.1))
            .collect();
        let text = spans
            .iter()
            .map(|(t, _)| t.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let utterance = Utterance {
            tokens: tokenize(&text).tokens,
            text,
            book_id: book.meta.book_id.clone(),
            paragraph_index: index,
            char_range: (ranges[0].0, ranges[ranges.len() - 1].1),
            spans: ranges,
        };
        let gap = if out.is_empty() { 0 } else { pending_gap };
        pending_gap = 0;
        out.push(GappedUtterance { utterance, gap });
    }
    out
}

/// Raw segmentation: a new group starts after every gap above
/// `gap_chars`. Groups of any length are returned.
pub fn segment_groups(stream: &[GappedUtterance], gap_chars: usize) -> Vec<Vec<Utterance>> {
    let mut groups: Vec<Vec<Utterance>> = Vec::new();
    for (i, item) in stream.iter().enumerate() {
        let new_group = i == 0
            || item.gap > gap_chars
            || groups
                .last()
                .and_then(|g| g.last())
                .is_some_and(|prev| prev.book_id != item.utterance.book_id);
        if new_group {
            groups.push(Vec::new());
        }
        groups
            .last_mut()
            .expect("a group was just opened")
            .push(item.utterance.clone());
    }
    groups
}

/// Cut the stream into dialogues; single-turn groups are discarded.
pub fn segment_dialogues(stream: &[GappedUtterance], cfg: &PipelineConfig) -> Vec<Dialogue> {
    segment_groups(stream, cfg.gap_chars)
        .into_iter()
        .filter(|g| g.len() >= MIN_DIALOGUE_LEN)
        .map(|utterances| Dialogue {
            book_id: utterances[0].book_id.clone(),
            utterances,
        })
        .collect()
}

/// Per-book counts of what each extraction step kept and dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionTally {
    pub utterances: usize,
    pub gap_singletons: usize,
    pub long_removed: usize,
    pub long_orphaned: usize,
    pub dialogues_after_long: usize,
}

impl ExtractionTally {
    pub fn add(&mut self, other: &ExtractionTally) {
        self.utterances += other.utterances;
        self.gap_singletons += other.gap_singletons;
        self.long_removed += other.long_removed;
        self.long_orphaned += other.long_orphaned;
        self.dialogues_after_long += other.dialogues_after_long;
    }
}

/// Speech separation, gap segmentation and long-utterance removal for one
/// book, with stage counts.
pub fn extract_book(book: &Book, profile: &LanguageProfile, cfg: &PipelineConfig) -> (Vec<Dialogue>, ExtractionTally) {
    let stream = extract_utterances(book, profile);
    let segmented = segment_dialogues(&stream, cfg);
    let in_dialogues: usize = segmented.iter().map(Dialogue::len).sum();

    let mut tally = ExtractionTally {
        utterances: stream.len(),
        gap_singletons: stream.len() - in_dialogues,
        ..Default::default()
    };
    let mut dialogues = Vec::new();
    for dialogue in &segmented {
        let long = dialogue
            .utterances
            .iter()
            .filter(|u| u.token_count() > cfg.max_utt_words)
            .count();
        let parts = drop_long_utterances(dialogue, cfg);
        let kept: usize = parts.iter().map(Dialogue::len).sum();
        tally.long_removed += long;
        tally.long_orphaned += dialogue.len() - long - kept;
        dialogues.extend(parts);
    }
    tally.dialogues_after_long = dialogues.len();
    (dialogues, tally)
}

/// Full per-book extraction. The rare-word post-filter runs only when a
/// vocabulary is supplied, since it is built from the whole run's output.
pub fn extract_dialogues(
    book: &Book,
    profile: &LanguageProfile,
    cfg: &PipelineConfig,
    vocab: Option<&Vocabulary>,
) -> Result<Vec<Dialogue>> {
    let (dialogues, _) = extract_book(book, profile, cfg);
    let Some(vocab) = vocab else {
        return Ok(dialogues);
    };
    let mut kept = Vec::with_capacity(dialogues.len());
    for d in dialogues {
        if rare_word_filter(&d, vocab, cfg)?.keep {
            kept.push(d);
        }
    }
    Ok(kept)
}
