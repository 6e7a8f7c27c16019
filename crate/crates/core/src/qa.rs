//! Annotation sheets for manual error analysis of an extracted corpus.
//!
//! Sheets are CSV: one row per sampled item, one 0/1 column per error
//! category of the sheet's level, and a free-text `notes` column.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::Dialogue;
use crate::text::char_slice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Utterance,
    Dialogue,
}

/// Utterance-pair error types. The two minor types have no published
/// names, hence the placeholders.
pub const UTTERANCE_CATEGORIES: [&str; 4] =
    ["non_conversational", "false_turn_split", "minor_1", "minor_2"];

pub const DIALOGUE_CATEGORIES: [&str; 7] = [
    "conversation_cut_up",
    "multiple_conversations_merged",
    "more_than_two_speakers",
    "consecutive_same_speaker",
    "non_conversational_mixed",
    "delimiter_missing",
    "different_speakers_same_paragraph",
];

impl Level {
    pub fn categories(self) -> &'static [&'static str] {
        match self {
            Level::Utterance => &UTTERANCE_CATEGORIES,
            Level::Dialogue => &DIALOGUE_CATEGORIES,
        }
    }

    fn prefix(self) -> char {
        match self {
            Level::Utterance => 'p',
            Level::Dialogue => 'd',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub sample_id: String,
    pub book_id: String,
    /// Body characters spanned by the sampled utterances.
    pub char_range: (usize, usize),
    pub utterances: Vec<String>,
    /// Book text around `char_range`; empty when the book is unavailable.
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSheet {
    pub level: Level,
    pub seed: u64,
    pub items: Vec<AnnotationItem>,
}

const FIXED_COLUMNS: [&str; 6] = ["sample_id", "book_id", "char_start", "char_end", "utterances", "context"];
const NOTES_COLUMN: &str = "notes";

fn excerpt(bodies: &BTreeMap<String, String>, book_id: &str, range: (usize, usize), pad: usize) -> String {
    match bodies.get(book_id) {
        Some(body) => char_slice(body, range.0.saturating_sub(pad), range.1.saturating_add(pad)).to_string(),
        None => {
            log::warn!("no body for book {book_id}; context left empty");
            String::new()
        }
    }
}

fn draw(population: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > population {
        return Err(Error::SampleTooLarge {
            requested: n,
            available: population,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, population, n).into_vec())
}

/// `n` adjacent utterance pairs drawn uniformly without replacement, each
/// with `context_chars` of surrounding book text on both sides.
pub fn sample_utterance_pairs(
    corpus: &[Dialogue],
    bodies: &BTreeMap<String, String>,
    n: usize,
    context_chars: usize,
    seed: u64,
) -> Result<AnnotationSheet> {
    let pairs: Vec<(usize, usize)> = corpus
        .iter()
        .enumerate()
        .flat_map(|(d, dlg)| (0..dlg.len().saturating_sub(1)).map(move |i| (d, i)))
        .collect();
    let items = draw(pairs.len(), n, seed)?
        .into_iter()
        .enumerate()
        .map(|(k, idx)| {
            let (d, i) = pairs[idx];
            let dlg = &corpus[d];
            let (a, b) = (&dlg.utterances[i], &dlg.utterances[i + 1]);
            let range = (a.char_range.0, b.char_range.1);
            AnnotationItem {
                sample_id: format!("{}{:04}", Level::Utterance.prefix(), k + 1),
                book_id: dlg.book_id.clone(),
                char_range: range,
                utterances: vec![a.text.clone(), b.text.clone()],
                context: excerpt(bodies, &dlg.book_id, range, context_chars),
            }
        })
        .collect();
    Ok(AnnotationSheet {
        level: Level::Utterance,
        seed,
        items,
    })
}

/// `n` whole dialogues drawn uniformly without replacement.
pub fn sample_dialogues(
    corpus: &[Dialogue],
    bodies: &BTreeMap<String, String>,
    n: usize,
    context_chars: usize,
    seed: u64,
) -> Result<AnnotationSheet> {
    let items = draw(corpus.len(), n, seed)?
        .into_iter()
        .enumerate()
        .map(|(k, idx)| {
            let dlg = &corpus[idx];
            let first = dlg.utterances.first().map_or(0, |u| u.char_range.0);
            let last = dlg.utterances.last().map_or(0, |u| u.char_range.1);
            AnnotationItem {
                sample_id: format!("{}{:04}", Level::Dialogue.prefix(), k + 1),
                book_id: dlg.book_id.clone(),
                char_range: (first, last),
                utterances: dlg.utterances.iter().map(|u| u.text.clone()).collect(),
                context: excerpt(bodies, &dlg.book_id, (first, last), context_chars),
            }
        })
        .collect();
    Ok(AnnotationSheet {
        level: Level::Dialogue,
        seed,
        items,
    })
}

impl AnnotationSheet {
    /// Blank sheet as CSV, ready for annotators.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
        header.extend(self.level.categories());
        header.push(NOTES_COLUMN);
        w.write_record(&header)?;
        for item in &self.items {
            let mut row = vec![
                item.sample_id.clone(),
                item.book_id.clone(),
                item.char_range.0.to_string(),
                item.char_range.1.to_string(),
                item.utterances.join("\n"),
                item.context.clone(),
            ];
            row.extend(self.level.categories().iter().map(|_| String::new()));
            row.push(String::new());
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub level: Level,
    pub items: u64,
    pub error_free: u64,
    /// Items carrying each category, in taxonomy order.
    pub categories: IndexMap<String, u64>,
}

/// Count labelled items per category. An item with several labels counts
/// once for each of them.
pub fn tally_labels<S: AsRef<str>>(level: Level, items: &[Vec<S>]) -> Result<Tally> {
    let mut categories: IndexMap<String, u64> =
        level.categories().iter().map(|c| (c.to_string(), 0)).collect();
    let mut error_free = 0;
    for labels in items {
        let mut seen: Vec<&str> = Vec::new();
        for label in labels {
            let label = label.as_ref();
            let count = categories
                .get_mut(label)
                .ok_or_else(|| Error::InvalidLabel(format!("`{label}` is not a {level:?}-level category")))?;
            if !seen.contains(&label) {
                *count += 1;
                seen.push(label);
            }
        }
        if seen.is_empty() {
            error_free += 1;
        }
    }
    Ok(Tally {
        level,
        items: items.len() as u64,
        error_free,
        categories,
    })
}

fn parse_mark(cell: &str, column: &str, row: usize) -> Result<bool> {
    match cell.trim() {
        "" | "0" => Ok(false),
        "1" | "x" | "X" => Ok(true),
        other => Err(Error::InvalidLabel(format!(
            "row {row}, column {column}: expected 0, 1 or blank, got `{other}`"
        ))),
    }
}

/// Tally a completed sheet.
pub fn tally_annotations(csv_text: &str) -> Result<Tally> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();

    let label_columns: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !FIXED_COLUMNS.contains(h) && *h != NOTES_COLUMN)
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let level = if label_columns.iter().any(|(_, h)| DIALOGUE_CATEGORIES.contains(&h.as_str())) {
        Level::Dialogue
    } else {
        Level::Utterance
    };
    if let Some((_, h)) = label_columns
        .iter()
        .find(|(_, h)| !level.categories().contains(&h.as_str()))
    {
        return Err(Error::InvalidLabel(format!("unknown category column `{h}`")));
    }

    let mut items = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut labels = Vec::new();
        for (i, name) in &label_columns {
            if parse_mark(record.get(*i).unwrap_or(""), name, row + 1)? {
                labels.push(name.clone());
            }
        }
        items.push(labels);
    }
    tally_labels(level, &items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Utterance;

    fn corpus(dialogues: usize, len: usize) -> Vec<Dialogue> {
        (0..dialogues)
            .map(|d| Dialogue {
                book_id: format!("b{}", d % 3),
                utterances: (0..len)
                    .map(|i| Utterance::new(format!("d{d} u{i}"), format!("b{}", d % 3), i, (i * 10, i * 10 + 5)))
                    .collect(),
            })
            .collect()
    }

    fn bodies() -> BTreeMap<String, String> {
        (0..3).map(|b| (format!("b{b}"), "x".repeat(1000))).collect()
    }

    #[test]
    fn hundred_unique_pairs() {
        let sheet = sample_utterance_pairs(&corpus(100, 5), &bodies(), 100, 20, 7).unwrap();
        assert_eq!(sheet.items.len(), 100);
        let mut keys: Vec<_> = sheet.items.iter().map(|i| (i.utterances.clone(), i.book_id.clone())).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 100);
        let first = &sheet.items[0];
        assert_eq!(first.utterances.len(), 2);
        assert_eq!(first.context.chars().count(), first.char_range.1 + 20 - first.char_range.0.saturating_sub(20));
    }

    #[test]
    fn zero_pairs_is_empty_sheet() {
        assert!(sample_utterance_pairs(&corpus(3, 3), &bodies(), 0, 10, 1).unwrap().items.is_empty());
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let c = corpus(40, 4);
        assert_eq!(
            sample_utterance_pairs(&c, &bodies(), 10, 5, 3).unwrap(),
            sample_utterance_pairs(&c, &bodies(), 10, 5, 3).unwrap()
        );
        assert_eq!(
            sample_dialogues(&c, &bodies(), 10, 0, 3).unwrap(),
            sample_dialogues(&c, &bodies(), 10, 0, 3).unwrap()
        );
    }

    #[test]
    fn fifty_dialogues_and_too_many() {
        let c = corpus(60, 3);
        assert_eq!(sample_dialogues(&c, &bodies(), 50, 0, 1).unwrap().items.len(), 50);
        assert!(matches!(
            sample_dialogues(&c, &bodies(), 61, 0, 1),
            Err(Error::SampleTooLarge { requested: 61, available: 60 })
        ));
        assert!(matches!(
            sample_utterance_pairs(&corpus(2, 2), &bodies(), 3, 0, 1),
            Err(Error::SampleTooLarge { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn tally_fifty_dialogues() {
        let mut items: Vec<Vec<&str>> = vec![vec![]; 16];
        items.extend(std::iter::repeat_n(vec!["conversation_cut_up"], 17));
        items.extend(std::iter::repeat_n(vec!["more_than_two_speakers"], 17));
        let t = tally_labels(Level::Dialogue, &items).unwrap();
        assert_eq!(t.items, 50);
        assert_eq!(t.error_free, 16);
        assert_eq!(t.categories["conversation_cut_up"], 17);
        assert_eq!(t.categories["delimiter_missing"], 0);
    }

    #[test]
    fn tally_multi_label_and_unlabelled() {
        let t = tally_labels(Level::Utterance, &[vec!["non_conversational", "minor_1", "minor_2"]]).unwrap();
        assert_eq!(t.categories.values().copied().collect::<Vec<_>>(), [1, 0, 1, 1]);
        assert_eq!(t.error_free, 0);

        let none: Vec<Vec<&str>> = vec![vec![]; 9];
        assert_eq!(tally_labels(Level::Utterance, &none).unwrap().error_free, 9);
        assert!(matches!(
            tally_labels(Level::Utterance, &[vec!["typo"]]),
            Err(Error::InvalidLabel(_))
        ));
    }

    #[test]
    fn csv_sheet_round_trip_through_tally() {
        let sheet = sample_dialogues(&corpus(5, 2), &bodies(), 3, 4, 9).unwrap();
        let csv_text = sheet.to_csv().unwrap();
        let t = tally_annotations(&csv_text).unwrap();
        assert_eq!(t.level, Level::Dialogue);
        assert_eq!(t.error_free, 3);

        let mut rows: Vec<String> = csv_text.lines().map(String::from).collect();
        // Mark the first category of the first item.
        let header = rows[0].clone();
        let col = header.split(',').position(|h| h == "conversation_cut_up").unwrap();
        let completed = format!(
            "{}\nd9,b0,0,1,hi,ctx,{}1{}\n",
            header,
            ",".repeat(col - 6),
            ",".repeat(header.split(',').count() - col - 1)
        );
        let t = tally_annotations(&completed).unwrap();
        assert_eq!(t.categories["conversation_cut_up"], 1);
        assert_eq!(t.error_free, 0);

        rows[0] = rows[0].replace("delimiter_missing", "bogus");
        assert!(matches!(tally_annotations(&rows.join("\n")), Err(Error::InvalidLabel(_))));
    }

    #[test]
    fn bad_cell_value_is_invalid() {
        let text = "sample_id,non_conversational,notes\np1,maybe,\n";
        assert!(matches!(tally_annotations(text), Err(Error::InvalidLabel(_))));
    }
}
