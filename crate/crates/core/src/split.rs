//! Train/validation/test splits that keep every book in one part.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::extract::Dialogue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Train,
    Valid,
    Test,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Train, Part::Valid, Part::Test];

    pub fn name(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Valid => "valid",
            Part::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitCorpus {
    pub train: Vec<Dialogue>,
    pub valid: Vec<Dialogue>,
    pub test: Vec<Dialogue>,
    pub seed: u64,
}

impl SplitCorpus {
    pub fn part(&self, part: Part) -> &[Dialogue] {
        match part {
            Part::Train => &self.train,
            Part::Valid => &self.valid,
            Part::Test => &self.test,
        }
    }

    fn part_mut(&mut self, part: Part) -> &mut Vec<Dialogue> {
        match part {
            Part::Train => &mut self.train,
            Part::Valid => &mut self.valid,
            Part::Test => &mut self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which part each book goes to.
///
/// Books are visited in a seeded random order; each goes to the part whose
/// dialogue count is furthest below its target share once the book is
/// counted in the running total. Ties go to the earlier part.
pub fn assign_books(book_sizes: &BTreeMap<String, usize>, ratios: [f64; 3], seed: u64) -> BTreeMap<String, Part> {
    let mut order: Vec<(&String, usize)> = book_sizes.iter().map(|(b, &n)| (b, n)).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut counts = [0usize; 3];
    let mut assigned = 0usize;
    let mut out = BTreeMap::new();
    for (book, size) in order {
        let total = (assigned + size) as f64;
        let mut best = 0;
        let mut best_deficit = f64::NEG_INFINITY;
        for (i, &ratio) in ratios.iter().enumerate() {
            let deficit = ratio * total - counts[i] as f64;
            if deficit > best_deficit {
                best = i;
                best_deficit = deficit;
            }
        }
        counts[best] += size;
        assigned += size;
        out.insert(book.clone(), Part::ALL[best]);
    }
    out
}

/// Split dialogues into train/valid/test, moving all dialogues of a book
/// together. Dialogues keep their input order within each part.
pub fn split_corpus(dialogues: &[Dialogue], cfg: &PipelineConfig) -> SplitCorpus {
    let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
    for d in dialogues {
        *sizes.entry(d.book_id.clone()).or_default() += 1;
    }
    let assignment = assign_books(&sizes, cfg.split_ratios, cfg.seed);

    let mut split = SplitCorpus {
        seed: cfg.seed,
        ..Default::default()
    };
    for d in dialogues {
        split.part_mut(assignment[&d.book_id]).push(d.clone());
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Utterance;

    fn corpus(books: usize, per_book: usize) -> Vec<Dialogue> {
        (0..books)
            .flat_map(|b| {
                (0..per_book).map(move |i| Dialogue {
                    book_id: format!("book{b:04}"),
                    utterances: vec![
                        Utterance::new("a", format!("book{b:04}"), 2 * i, (0, 1)),
                        Utterance::new("b", format!("book{b:04}"), 2 * i + 1, (2, 3)),
                    ],
                })
            })
            .collect()
    }

    #[test]
    fn single_book_goes_to_train() {
        let split = split_corpus(&corpus(1, 7), &PipelineConfig::default());
        assert_eq!(split.train.len(), 7);
        assert!(split.valid.is_empty() && split.test.is_empty());
    }

    #[test]
    fn empty_input() {
        let split = split_corpus(&[], &PipelineConfig::default());
        assert!(split.is_empty());
    }

    #[test]
    fn same_seed_same_split() {
        let ds = corpus(50, 3);
        let cfg = PipelineConfig::default();
        assert_eq!(split_corpus(&ds, &cfg), split_corpus(&ds, &cfg));
    }

    #[test]
    fn different_seed_moves_books() {
        let ds = corpus(200, 1);
        let a = split_corpus(&ds, &PipelineConfig { seed: 1, ..Default::default() });
        let b = split_corpus(&ds, &PipelineConfig { seed: 2, ..Default::default() });
        assert_ne!(a.valid, b.valid);
    }

    #[test]
    fn equal_books_hit_target_ratios() {
        let ds = corpus(1000, 4);
        let split = split_corpus(&ds, &PipelineConfig::default());
        let n = ds.len() as f64;
        assert!((split.train.len() as f64 / n - 0.90).abs() < 0.02);
        assert!((split.valid.len() as f64 / n - 0.05).abs() < 0.02);
        assert!((split.test.len() as f64 / n - 0.05).abs() < 0.02);
    }
}
