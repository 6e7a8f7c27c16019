use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// N-gram order. Bigram keys are the two tokens joined by one space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    Unigram,
    Bigram,
}

impl Order {
    pub fn n(self) -> usize {
        match self {
            Order::Unigram => 1,
            Order::Bigram => 2,
        }
    }
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Order::Unigram),
            2 => Ok(Order::Bigram),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }
}

impl From<Order> for u8 {
    fn from(order: Order) -> u8 {
        order.n() as u8
    }
}

/// Raw n-gram counts. Sequences added separately never form n-grams
/// across their boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts {
    order: Order,
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl NgramCounts {
    pub fn new(order: Order) -> Self {
        NgramCounts {
            order,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn from_tokens<S: AsRef<str>>(order: Order, tokens: &[S]) -> Self {
        let mut counts = NgramCounts::new(order);
        counts.add_sequence(tokens);
        counts
    }

    pub fn add_sequence<S: AsRef<str>>(&mut self, tokens: &[S]) {
        match self.order {
            Order::Unigram => {
                for t in tokens {
                    self.add_key(t.as_ref());
                }
            }
            Order::Bigram => {
                for pair in tokens.windows(2) {
                    let key = format!("{} {}", pair[0].as_ref(), pair[1].as_ref());
                    self.add_owned(key, 1);
                }
            }
        }
    }

    fn add_key(&mut self, key: &str) {
        if let Some(c) = self.counts.get_mut(key) {
            *c += 1;
            self.total += 1;
        } else {
            self.add_owned(key.to_string(), 1);
        }
    }

    fn add_owned(&mut self, key: String, by: u64) {
        *self.counts.entry(key).or_insert(0) += by;
        self.total += by;
    }

    pub fn merge(&mut self, other: &NgramCounts) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order.into(),
                right: other.order.into(),
            });
        }
        for (k, &c) in &other.counts {
            if let Some(mine) = self.counts.get_mut(k) {
                *mine += c;
                self.total += c;
            } else {
                self.add_owned(k.clone(), c);
            }
        }
        Ok(())
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &c)| (k.as_str(), c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// The `k` most frequent n-grams, ties broken lexicographically.
    pub fn top_k(&self, k: usize) -> Vec<(&str, u64)> {
        let mut entries: Vec<(&str, u64)> = self.iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries.truncate(k);
        entries
    }
}

/// Maximum-likelihood n-gram distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDistribution {
    order: Order,
    probs: BTreeMap<String, f64>,
    /// Raw n-gram count before any vocabulary truncation.
    total_count: u64,
}

impl WordDistribution {
    pub fn from_counts(counts: &NgramCounts, vocab_limit: Option<usize>) -> Result<Self> {
        if counts.total() == 0 {
            return Err(Error::EmptyDistribution(format!(
                "no {}-grams in input",
                counts.order().n()
            )));
        }
        let kept: Vec<(&str, u64)> = match vocab_limit {
            Some(0) => {
                return Err(Error::EmptyDistribution("vocabulary limit is zero".into()));
            }
            Some(limit) => counts.top_k(limit),
            None => counts.iter().collect(),
        };
        let mass: u64 = kept.iter().map(|&(_, c)| c).sum();
        let probs = kept
            .into_iter()
            .map(|(k, c)| (k.to_string(), c as f64 / mass as f64))
            .collect();
        Ok(WordDistribution {
            order: counts.order(),
            probs,
            total_count: counts.total(),
        })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn prob(&self, key: &str) -> Option<f64> {
        self.probs.get(key).copied()
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }
}

pub fn word_distribution<S: AsRef<str>>(
    tokens: &[S],
    order: Order,
    vocab_limit: Option<usize>,
) -> Result<WordDistribution> {
    if tokens.len() < order.n() {
        return Err(Error::EmptyDistribution(format!(
            "{} tokens is too short for order {}",
            tokens.len(),
            order.n()
        )));
    }
    WordDistribution::from_counts(&NgramCounts::from_tokens(order, tokens), vocab_limit)
}

/// `Σ_{w ∈ supp(P)} P(w) · log2(P(w) / Q'(w))`, where `Q'` falls back to
/// `epsilon` outside the support of `q`.
pub fn kl_divergence(p: &WordDistribution, q: &WordDistribution, epsilon: f64) -> Result<f64> {
    if p.order != q.order {
        return Err(Error::OrderMismatch {
            left: p.order.into(),
            right: q.order.into(),
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(p
        .probs
        .iter()
        .map(|(w, &pw)| {
            let qw = q.probs.get(w).copied().unwrap_or(epsilon);
            pw * (pw / qw).log2()
        })
        .sum())
}
