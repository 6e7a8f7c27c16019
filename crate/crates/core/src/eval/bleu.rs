//! Sentence-level BLEU restricted to a single n-gram order.

use std::collections::HashMap;

pub const DEFAULT_SMOOTHING: f64 = 0.1;

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut out = HashMap::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    let toks: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    for w in toks.windows(n) {
        *out.entry(w.to_vec()).or_insert(0) += 1;
    }
    out
}

/// Clipped order-`n` precision. A zero numerator is replaced by
/// `smoothing / max(1, total)`. A response with no n-grams of this order
/// scores 1 when it equals the target and is smoothed otherwise.
pub fn modified_precision<S: AsRef<str>>(response: &[S], target: &[S], n: usize, smoothing: f64) -> f64 {
    let hyp = ngram_counts(response, n);
    let total: usize = hyp.values().sum();
    if total == 0 {
        let identical = response.len() == target.len()
            && response.iter().zip(target).all(|(a, b)| a.as_ref() == b.as_ref());
        return if identical { 1.0 } else { smoothing };
    }
    let reference = ngram_counts(target, n);
    let clipped: usize = hyp
        .iter()
        .map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0)))
        .sum();
    if clipped == 0 {
        smoothing / total as f64
    } else {
        clipped as f64 / total as f64
    }
}

pub fn brevity_penalty(response_len: usize, target_len: usize) -> f64 {
    if response_len == 0 {
        0.0
    } else if response_len >= target_len {
        1.0
    } else {
        (1.0 - target_len as f64 / response_len as f64).exp()
    }
}

/// `b_n` for one response/target pair. An empty response scores 0.
pub fn bleu_n<S: AsRef<str>>(response: &[S], target: &[S], n: usize, smoothing: f64) -> f64 {
    if response.is_empty() {
        return 0.0;
    }
    brevity_penalty(response.len(), target.len()) * modified_precision(response, target, n, smoothing)
}
