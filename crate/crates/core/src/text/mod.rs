//! Shared text primitives: tokenization, paragraphs, n-gram distributions
//! and KL divergence.

mod distribution;
mod paragraph;
mod tokenize;

pub use distribution::{kl_divergence, word_distribution, NgramCounts, Order, WordDistribution};
pub use paragraph::{split_paragraphs, Paragraph};
pub use tokenize::tokenize;

/// Floor probability for events unseen by a reference distribution.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Lowercase tokens plus their `(start, end)` character offsets in the
/// tokenized source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub offsets: Vec<(usize, usize)>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn push(&mut self, chars: &[char], start: usize, end: usize) {
        debug_assert!(start < end);
        let raw: String = chars[start..end].iter().collect();
        self.tokens.push(raw.to_lowercase());
        self.offsets.push((start, end));
    }
}

/// True for tokens made only of punctuation or symbols.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(char::is_alphanumeric)
}

/// Slice `text` by character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let from = indices.nth(start).unwrap_or(text.len());
    let to = if end > start {
        indices.nth(end - start - 1).unwrap_or(text.len())
    } else {
        from
    };
    &text[from..to]
}
