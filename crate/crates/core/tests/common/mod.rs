//! Seeded synthetic data shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use booktalk::extract::{Dialogue, GappedUtterance, Utterance};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// A Zipf-weighted vocabulary of pronounceable pseudo-words.
pub struct Lexicon {
    words: Vec<String>,
    weights: WeightedIndex<f64>,
}

impl Lexicon {
    pub fn new(size: usize, seed: u64) -> Self {
        const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "th", "st"];
        const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ea", "ou"];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut words = Vec::with_capacity(size);
        let mut seen = std::collections::HashSet::new();
        while words.len() < size {
            let syllables = rng.gen_range(1..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
                w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
            }
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        let weights = WeightedIndex::new((1..=size).map(|r| 1.0 / r as f64)).unwrap();
        Lexicon { words, weights }
    }

    pub fn word(&self, rng: &mut impl Rng) -> &str {
        &self.words[self.weights.sample(rng)]
    }

    pub fn sentence(&self, rng: &mut impl Rng, words: usize) -> String {
        let mut s = String::new();
        for i in 0..words {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(self.word(rng));
        }
        s
    }
}

/// Body text of a synthetic novel with roughly `target_words` tokens.
/// Most paragraphs are quoted speech with a speech tag; the rest are
/// narrative of varying length, and a few utterances are over-long.
pub fn synthetic_body(lex: &Lexicon, rng: &mut impl Rng, target_words: usize) -> String {
    let mut body = String::new();
    let mut words = 0usize;
    while words < target_words {
        let roll: f64 = rng.gen();
        let para = if roll < 0.70 {
            let n = rng.gen_range(1..=25);
            words += n + 5;
            format!("\"{}.\" {} said.", capitalize(&lex.sentence(rng, n)), lex.word(rng))
        } else if roll < 0.72 {
            let n = rng.gen_range(101..=140);
            words += n + 3;
            format!("\"{}.\"", capitalize(&lex.sentence(rng, n)))
        } else {
            let n = if rng.gen_bool(0.3) {
                rng.gen_range(40..=90)
            } else {
                rng.gen_range(3..=20)
            };
            words += n + 1;
            format!("{}.", capitalize(&lex.sentence(rng, n)))
        };
        if !body.is_empty() {
            body.push_str("\n\n");
        }
        body.push_str(&para);
    }
    body
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn wrap_gutenberg(title: &str, body: &str) -> String {
    format!(
        "The Project Gutenberg eBook of {title}\n\nTitle: {title}\n\n\
         *** START OF THE PROJECT GUTENBERG EBOOK {t} ***\n\n{body}\n\n\
         *** END OF THE PROJECT GUTENBERG EBOOK {t} ***\n\nEnd of license.\n",
        t = title.to_uppercase()
    )
}

/// Write `books` synthetic English books of about `words_per_book` tokens
/// into `dir/mirror`, with `dir/metadata.jsonl`. Returns (mirror, metadata).
pub fn write_mirror(dir: &Path, books: usize, words_per_book: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mirror = dir.join("mirror");
    fs::create_dir_all(&mirror).unwrap();
    let lex = Lexicon::new(3000, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut meta = String::new();
    for i in 0..books {
        let id = format!("{}", 10_000 + i);
        let body = synthetic_body(&lex, &mut rng, words_per_book);
        fs::write(mirror.join(format!("{id}.txt")), wrap_gutenberg(&format!("Book {i}"), &body)).unwrap();
        writeln!(meta, r#"{{"book_id":"{id}","language":"en","rights":"public_domain"}}"#).unwrap();
    }
    let metadata = dir.join("metadata.jsonl");
    fs::write(&metadata, meta).unwrap();
    (mirror, metadata)
}

pub fn utterance(book: &str, index: usize, words: usize) -> Utterance {
    let text = vec!["w"; words.max(1)].join(" ");
    Utterance::new(text, book, index, (index * 10, index * 10 + 1))
}

/// A random utterance stream for one book with gaps spread over 0..=800.
pub fn random_stream(rng: &mut impl Rng, len: usize) -> Vec<GappedUtterance> {
    (0..len)
        .map(|i| GappedUtterance {
            utterance: utterance("s", i, rng.gen_range(1..=10)),
            gap: if i == 0 { 0 } else { rng.gen_range(0..=800) },
        })
        .collect()
}

/// `books` books, each with a random number of two-turn dialogues.
pub fn synthetic_dialogues(books: usize, seed: u64) -> Vec<Dialogue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for b in 0..books {
        let id = format!("b{b:05}");
        for i in 0..rng.gen_range(1..=40) {
            out.push(Dialogue {
                book_id: id.clone(),
                utterances: vec![utterance(&id, 2 * i, 3), utterance(&id, 2 * i + 1, 4)],
            });
        }
    }
    out
}
