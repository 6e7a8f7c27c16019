//! Set-level n-gram metrics: entropy under a fitted model, KL divergence
//! between response and target sets, and distinct-n.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{kl_divergence, NgramCounts, Order, WordDistribution};

/// Maximum-likelihood n-gram model with a floor probability for unseen
/// events. Bigrams never cross line boundaries. A model fitted on text
/// with no n-grams of its order puts every event on the floor.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: Order,
    dist: Option<WordDistribution>,
    epsilon: f64,
}

impl NgramModel {
    pub fn fit<S: AsRef<str>>(lines: &[Vec<S>], order: Order, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        let c = counts(lines, order);
        let dist = if c.total() == 0 {
            log::warn!("no {}-grams in the training targets; every event gets the floor", order.n());
            None
        } else {
            Some(WordDistribution::from_counts(&c, None)?)
        };
        Ok(NgramModel { order, dist, epsilon })
    }

    pub fn from_distribution(dist: WordDistribution, epsilon: f64) -> Self {
        NgramModel {
            order: dist.order(),
            dist: Some(dist),
            epsilon,
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn prob(&self, key: &str) -> f64 {
        self.dist.as_ref().and_then(|d| d.prob(key)).unwrap_or(self.epsilon)
    }
}

pub fn counts<S: AsRef<str>>(lines: &[Vec<S>], order: Order) -> NgramCounts {
    let mut c = NgramCounts::new(order);
    for line in lines {
        c.add_sequence(line);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entropy {
    /// Mean surprisal per n-gram, in bits.
    pub per_word: f64,
    /// Summed surprisal per response, in bits.
    pub per_utterance: f64,
}

pub fn entropy_metrics<S: AsRef<str>>(responses: &[Vec<S>], model: &NgramModel) -> Entropy {
    let c = counts(responses, model.order());
    let surprisal: f64 = c
        .iter()
        .map(|(key, n)| -(n as f64) * model.prob(key).log2())
        .sum();
    let per = |den: usize| if den == 0 { 0.0 } else { surprisal / den as f64 };
    Entropy {
        per_word: per(c.total() as usize),
        per_utterance: per(responses.len()),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// KL(targets ‖ responses).
    #[default]
    TargetsToResponses,
    /// KL(responses ‖ targets).
    ResponsesToTargets,
}

/// KL divergence between the n-gram distributions of two sets of lines.
/// An empty left-hand side diverges by 0; an empty right-hand side puts
/// every event on the floor.
pub fn kl_div_metrics<S: AsRef<str>>(
    responses: &[Vec<S>],
    targets: &[Vec<S>],
    order: Order,
    direction: KlDirection,
    epsilon: f64,
) -> Result<f64> {
    let (p_lines, q_lines) = match direction {
        KlDirection::TargetsToResponses => (targets, responses),
        KlDirection::ResponsesToTargets => (responses, targets),
    };
    let p_counts = counts(p_lines, order);
    let q_counts = counts(q_lines, order);
    if p_counts.total() == 0 {
        return Ok(0.0);
    }
    let p = WordDistribution::from_counts(&p_counts, None)?;
    if q_counts.total() == 0 {
        return Ok(p.probs().values().map(|&pw| pw * (pw / epsilon).log2()).sum());
    }
    let q = WordDistribution::from_counts(&q_counts, None)?;
    kl_divergence(&p, &q, epsilon)
}

/// Unique n-grams over total n-grams across all responses.
pub fn distinct_n<S: AsRef<str>>(responses: &[Vec<S>], n: usize) -> f64 {
    let mut unique: HashSet<Vec<&str>> = HashSet::new();
    let mut total = 0usize;
    for r in responses {
        let toks: Vec<&str> = r.iter().map(AsRef::as_ref).collect();
        if n == 0 || toks.len() < n {
            continue;
        }
        for w in toks.windows(n) {
            unique.insert(w.to_vec());
            total += 1;
        }
    }
    if total == 0 {
        log::warn!("no {n}-grams in responses; distinct-{n} is 0");
        return 0.0;
    }
    unique.len() as f64 / total as f64
}
