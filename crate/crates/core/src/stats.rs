//! Corpus statistics and dialogue-length histograms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::DialogueLines;
use crate::error::{Error, Result};
use crate::extract::Dialogue;

/// Thresholds reported in [`CorpusStats::n_dialogues_ge`].
pub const LENGTH_THRESHOLDS: [usize; 4] = [5, 10, 20, 50];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Number of utterances (#U).
    pub n_utterances: u64,
    /// Total tokens over all utterances.
    pub n_tokens: u64,
    /// Mean utterance length in tokens (|U|).
    pub mean_utt_len: f64,
    /// Number of dialogues (#D).
    pub n_dialogues: u64,
    /// Mean dialogue length in utterances (|D|).
    pub mean_dlg_len: f64,
    /// Population standard deviation of dialogue length.
    pub std_dlg_len: f64,
    /// Dialogues with at least `k` utterances.
    pub n_dialogues_ge: BTreeMap<usize, u64>,
}

/// Streaming accumulator behind [`corpus_stats`]. All sums are exact
/// integers, so partial accumulators can be merged in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    n_utterances: u64,
    n_tokens: u64,
    n_dialogues: u64,
    sum_len_sq: u128,
    length_counts: BTreeMap<usize, u64>,
}

impl StatsAccumulator {
    pub fn push<I: IntoIterator<Item = usize>>(&mut self, utterance_lengths: I) {
        let mut len = 0usize;
        for tokens in utterance_lengths {
            len += 1;
            self.n_tokens += tokens as u64;
        }
        self.n_utterances += len as u64;
        self.n_dialogues += 1;
        self.sum_len_sq += (len as u128) * (len as u128);
        *self.length_counts.entry(len).or_default() += 1;
    }

    pub fn push_dialogue(&mut self, dialogue: &Dialogue) {
        self.push(dialogue.utterances.iter().map(|u| u.token_count()));
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        self.n_utterances += other.n_utterances;
        self.n_tokens += other.n_tokens;
        self.n_dialogues += other.n_dialogues;
        self.sum_len_sq += other.sum_len_sq;
        for (&len, &c) in &other.length_counts {
            *self.length_counts.entry(len).or_default() += c;
        }
    }

    pub fn length_counts(&self) -> &BTreeMap<usize, u64> {
        &self.length_counts
    }

    pub fn finish(&self) -> CorpusStats {
        let n_d = self.n_dialogues;
        let n_u = self.n_utterances;
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let std = if n_d == 0 {
            0.0
        } else {
            let n = n_d as u128;
            let s = n_u as u128;
            // Var = (n·Σx² − (Σx)²) / n²
            let numer = n * self.sum_len_sq - s * s;
            (numer as f64 / (n * n) as f64).sqrt()
        };
        let n_dialogues_ge = LENGTH_THRESHOLDS
            .iter()
            .map(|&k| (k, self.length_counts.range(k..).map(|(_, &c)| c).sum()))
            .collect();
        CorpusStats {
            n_utterances: n_u,
            n_tokens: self.n_tokens,
            mean_utt_len: ratio(self.n_tokens, n_u),
            n_dialogues: n_d,
            mean_dlg_len: ratio(n_u, n_d),
            std_dlg_len: std,
            n_dialogues_ge,
        }
    }
}

pub fn corpus_stats(dialogues: &[Dialogue]) -> CorpusStats {
    accumulate(dialogues).finish()
}

pub fn accumulate(dialogues: &[Dialogue]) -> StatsAccumulator {
    let mut acc = StatsAccumulator::default();
    for d in dialogues {
        acc.push_dialogue(d);
    }
    acc
}

/// Stream a dialogue file; utterance length is its whitespace token count.
pub fn accumulate_file(path: &Path) -> Result<StatsAccumulator> {
    let mut acc = StatsAccumulator::default();
    for lines in DialogueLines::open(path)? {
        acc.push(lines?.iter().map(|l| l.split_whitespace().count()));
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive bounds, in utterances.
    pub start: usize,
    pub end: usize,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// Bins of width `bin` starting at length 2 (or the shortest length
    /// seen, if shorter). Empty bins between occupied ones are kept.
    pub fn from_counts(length_counts: &BTreeMap<usize, u64>, bin: usize) -> Result<Self> {
        if bin == 0 {
            return Err(Error::InvalidConfig("histogram bin width must be >= 1".into()));
        }
        let (Some((&min, _)), Some((&max, _))) =
            (length_counts.first_key_value(), length_counts.last_key_value())
        else {
            return Ok(Histogram::default());
        };
        let origin = min.min(2);
        let n_bins = (max - origin) / bin + 1;
        let mut bins: Vec<HistogramBin> = (0..n_bins)
            .map(|i| HistogramBin {
                start: origin + i * bin,
                end: origin + (i + 1) * bin - 1,
                count: 0,
            })
            .collect();
        for (&len, &c) in length_counts {
            bins[(len - origin) / bin].count += c;
        }
        let first = bins.iter().position(|b| b.count > 0).unwrap_or(0);
        Ok(Histogram {
            bins: bins.split_off(first),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("start,end,count\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{}", b.start, b.end, b.count);
        }
        out
    }
}

pub fn length_histogram(dialogues: &[Dialogue], bin: usize) -> Result<Histogram> {
    Histogram::from_counts(accumulate(dialogues).length_counts(), bin)
}
