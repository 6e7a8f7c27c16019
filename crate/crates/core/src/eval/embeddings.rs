//! Word-embedding similarity metrics: average, extrema, greedy matching and
//! source/response coherence. Out-of-vocabulary words are skipped; a side
//! with no known words scores 0.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(Error::InvalidEmbeddings(format!(
                "`{word}` has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbeddings(format!("`{word}` has a non-finite component")));
        }
        self.vectors.insert(word, vector);
        Ok(())
    }

    /// Text format: one word per line followed by its components. A leading
    /// `<count> <dim>` header line is skipped.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidEmbeddings(e.to_string()))?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            let vector = rest
                .iter()
                .map(|f| f.parse::<f32>())
                .collect::<std::result::Result<Vec<f32>, _>>()
                .map_err(|e| Error::InvalidEmbeddings(format!("line {}: {e}", i + 1)))?;
            if vector.is_empty() {
                return Err(Error::InvalidEmbeddings(format!("line {}: no components", i + 1)));
            }
            table
                .get_or_insert_with(|| EmbeddingTable::new(vector.len()))
                .insert(word, vector)?;
        }
        table.ok_or_else(|| Error::InvalidEmbeddings("no vectors".into()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    fn known<'a, S: AsRef<str>>(&'a self, tokens: &'a [S]) -> impl Iterator<Item = &'a [f32]> + 'a {
        tokens.iter().filter_map(|t| self.get(t.as_ref()))
    }

    /// Mean of the in-vocabulary word vectors.
    pub fn mean_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Option<Vec<f64>> {
        let mut sum = vec![0.0f64; self.dim];
        let mut n = 0usize;
        for v in self.known(tokens) {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += x as f64;
            }
            n += 1;
        }
        (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
    }

    /// Per dimension, the component of largest magnitude, sign kept.
    pub fn extrema_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Option<Vec<f64>> {
        let mut max = vec![f64::NEG_INFINITY; self.dim];
        let mut min = vec![f64::INFINITY; self.dim];
        let mut any = false;
        for v in self.known(tokens) {
            any = true;
            for (d, &x) in v.iter().enumerate() {
                max[d] = max[d].max(x as f64);
                min[d] = min[d].min(x as f64);
            }
        }
        any.then(|| {
            max.into_iter()
                .zip(min)
                .map(|(hi, lo)| if hi >= -lo { hi } else { lo })
                .collect()
        })
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    // Identical vectors are exactly parallel; skip the rounding in the norm.
    if a == b {
        return if a.iter().any(|&x| x != 0.0) { 1.0 } else { 0.0 };
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

pub fn embedding_average<S: AsRef<str>>(response: &[S], target: &[S], table: &EmbeddingTable) -> f64 {
    match (table.mean_vector(response), table.mean_vector(target)) {
        (Some(r), Some(t)) => cosine(&r, &t),
        _ => 0.0,
    }
}

pub fn embedding_extrema<S: AsRef<str>>(response: &[S], target: &[S], table: &EmbeddingTable) -> f64 {
    match (table.extrema_vector(response), table.extrema_vector(target)) {
        (Some(r), Some(t)) => cosine(&r, &t),
        _ => 0.0,
    }
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Mean over `from` words of the best cosine to any `to` word.
fn greedy_direction(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|f| to.iter().map(|t| cosine(f, t)).fold(f64::NEG_INFINITY, f64::max))
        .sum();
    total / from.len() as f64
}

/// Greedy matching, averaged over both directions.
pub fn embedding_greedy<S: AsRef<str>>(response: &[S], target: &[S], table: &EmbeddingTable) -> f64 {
    let r: Vec<Vec<f64>> = table.known(response).map(widen).collect();
    let t: Vec<Vec<f64>> = table.known(target).map(widen).collect();
    if r.is_empty() || t.is_empty() {
        return 0.0;
    }
    (greedy_direction(&r, &t) + greedy_direction(&t, &r)) / 2.0
}

/// Cosine of the mean embeddings of a source and its response.
pub fn coherence<S: AsRef<str>>(source: &[S], response: &[S], table: &EmbeddingTable) -> f64 {
    embedding_average(source, response, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[(&str, &[f32])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(entries[0].1.len());
        for (w, v) in entries {
            t.insert(*w, v.to_vec()).unwrap();
        }
        t
    }

    fn orthogonal() -> EmbeddingTable {
        table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])])
    }

    const HALF_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn average_cases() {
        let t = orthogonal();
        assert_eq!(embedding_average(&["a", "b"], &["a", "b"], &t), 1.0);
        assert_eq!(embedding_average(&["a"], &["b"], &t), 0.0);
        // cos((1,0), (0.5,0.5)) = 0.5 / (1 · √0.5)
        assert!((embedding_average(&["a"], &["a", "b"], &t) - HALF_SQRT2).abs() < 1e-12);
    }

    #[test]
    fn extrema_cases() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, -1.0])]);
        assert_eq!(embedding_extrema(&["a"], &["a"], &t), 1.0);
        // target extrema (1, −1) against (1, 0)
        assert!((embedding_extrema(&["a"], &["a", "b"], &t) - HALF_SQRT2).abs() < 1e-12);
        assert_eq!(embedding_extrema(&["zz"], &["a"], &t), 0.0);
    }

    #[test]
    fn greedy_cases() {
        let t = orthogonal();
        assert_eq!(embedding_greedy(&["a", "b"], &["a", "b"], &t), 1.0);
        // r→t = 1, t→r = (1 + 0) / 2
        assert_eq!(embedding_greedy(&["a"], &["a", "b"], &t), 0.75);
        assert_eq!(embedding_greedy(&["a"], &["b"], &t), 0.0);
    }

    #[test]
    fn coherence_cases() {
        let t = orthogonal();
        assert_eq!(coherence(&["a", "b"], &["a", "b"], &t), 1.0);
        assert_eq!(coherence(&["a"], &["b"], &t), 0.0);
        assert!((coherence(&["a", "b"], &["a"], &t) - HALF_SQRT2).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocabulary_side_scores_zero() {
        let t = orthogonal();
        assert_eq!(embedding_average(&["q"], &["a"], &t), 0.0);
        assert_eq!(embedding_greedy(&["a"], &["q"], &t), 0.0);
    }

    #[test]
    fn parse_text_format() {
        let text = "2 3\nthe 0.1 0.2 0.3\ncat -1 0 1e-2\n";
        let t = EmbeddingTable::parse(text.as_bytes()).unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("cat").unwrap(), &[-1.0, 0.0, 0.01]);
    }

    #[test]
    fn parse_rejects_ragged_and_nan() {
        let ragged = "a 1 2\nb 1 2 3\n";
        assert!(matches!(EmbeddingTable::parse(ragged.as_bytes()), Err(Error::InvalidEmbeddings(_))));
        let nan = "a 1 NaN\n";
        assert!(matches!(EmbeddingTable::parse(nan.as_bytes()), Err(Error::InvalidEmbeddings(_))));
        assert!(EmbeddingTable::parse("".as_bytes()).is_err());
    }
}
