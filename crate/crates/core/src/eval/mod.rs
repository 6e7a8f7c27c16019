//! Response evaluation over aligned source/response/target files.
//!
//! Per-response metrics (length, embedding similarities, BLEU) are averaged
//! and carry a normal-approximation 95% confidence half-width. Set-level
//! metrics (entropies, KL, distinct-n) are single numbers.

pub mod bleu;
pub mod embeddings;
pub mod ngram;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{Order, DEFAULT_EPSILON};

pub use bleu::{bleu_n, DEFAULT_SMOOTHING};
pub use embeddings::{coherence, cosine, embedding_average, embedding_extrema, embedding_greedy, EmbeddingTable};
pub use ngram::{distinct_n, entropy_metrics, kl_div_metrics, Entropy, KlDirection, NgramModel};

/// Separator between context turns in multi-turn source lines.
pub const TURN_SEPARATOR: &str = "EOU";

type Lines = Vec<Vec<String>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalInput {
    pub sources: Lines,
    pub responses: Lines,
    pub targets: Lines,
    pub train_targets: Lines,
}

fn split_line(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_owned).collect()
}

fn read_lines(path: &Path) -> Result<Lines> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map(|l| split_line(&l)).map_err(|e| Error::io(path, e)))
        .collect()
}

impl EvalInput {
    pub fn from_lines<S: AsRef<str>>(sources: &[S], responses: &[S], targets: &[S], train_targets: &[S]) -> Self {
        let conv = |v: &[S]| v.iter().map(|l| split_line(l.as_ref())).collect();
        EvalInput {
            sources: conv(sources),
            responses: conv(responses),
            targets: conv(targets),
            train_targets: conv(train_targets),
        }
    }

    pub fn from_files(sources: &Path, responses: &Path, targets: &Path, train_targets: &Path) -> Result<Self> {
        Ok(EvalInput {
            sources: read_lines(sources)?,
            responses: read_lines(responses)?,
            targets: read_lines(targets)?,
            train_targets: read_lines(train_targets)?,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn validate(&self, allow_empty_responses: bool) -> Result<()> {
        if self.responses.is_empty() {
            return Err(Error::EmptyEval("no responses".into()));
        }
        if self.sources.len() != self.responses.len() || self.targets.len() != self.responses.len() {
            return Err(Error::InvalidEvalInput(format!(
                "misaligned inputs: {} sources, {} responses, {} targets",
                self.sources.len(),
                self.responses.len(),
                self.targets.len()
            )));
        }
        if self.train_targets.iter().all(Vec::is_empty) {
            return Err(Error::EmptyEval("no training targets".into()));
        }
        if !allow_empty_responses {
            if let Some(i) = self.responses.iter().position(Vec::is_empty) {
                return Err(Error::InvalidEvalInput(format!("response {} is empty", i + 1)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub kl_direction: KlDirection,
    pub allow_empty_responses: bool,
    pub epsilon: f64,
    pub bleu_smoothing: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            kl_direction: KlDirection::default(),
            allow_empty_responses: false,
            epsilon: DEFAULT_EPSILON,
            bleu_smoothing: DEFAULT_SMOOTHING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95: Option<f64>,
}

impl Metric {
    fn set_level(value: f64) -> Self {
        Metric { value, ci95: None }
    }
}

/// Mean and 95% half-width `1.96·s/√n` with the sample standard deviation.
/// Values are summed in sorted order so the result does not depend on the
/// order of the input.
pub fn mean_ci(values: &[f64]) -> Result<Metric> {
    if values.is_empty() {
        return Err(Error::EmptyEval("no values to average".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let ci = if sorted.len() < 2 {
        0.0
    } else {
        let mut sq: Vec<f64> = sorted.iter().map(|x| (x - mean) * (x - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let var = sq.iter().sum::<f64>() / (n - 1.0);
        1.96 * var.sqrt() / n.sqrt()
    };
    Ok(Metric { value: mean, ci95: Some(ci) })
}

/// Mean number of words per response.
pub fn response_length<S: AsRef<str>>(responses: &[Vec<S>]) -> Result<Metric> {
    let lens: Vec<f64> = responses.iter().map(|r| r.len() as f64).collect();
    mean_ci(&lens).map_err(|_| Error::EmptyEval("no responses".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub u_len: Metric,
    pub h_w_u: Metric,
    pub h_w_b: Metric,
    pub h_u_u: Metric,
    pub h_u_b: Metric,
    pub d_kl_u: Metric,
    pub d_kl_b: Metric,
    pub avg: Metric,
    pub ext: Metric,
    pub gre: Metric,
    pub coh: Metric,
    pub d1: Metric,
    pub d2: Metric,
    pub b1: Metric,
    pub b2: Metric,
    pub b3: Metric,
    pub b4: Metric,
}

impl MetricReport {
    /// Column headers and metrics in report order.
    pub fn columns(&self) -> [(&'static str, &Metric); 17] {
        [
            ("|U|", &self.u_len),
            ("H_w^u", &self.h_w_u),
            ("H_w^b", &self.h_w_b),
            ("H_u^u", &self.h_u_u),
            ("H_u^b", &self.h_u_b),
            ("D_kl^u", &self.d_kl_u),
            ("D_kl^b", &self.d_kl_b),
            ("AVG", &self.avg),
            ("EXT", &self.ext),
            ("GRE", &self.gre),
            ("COH", &self.coh),
            ("d1", &self.d1),
            ("d2", &self.d2),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("b3", &self.b3),
            ("b4", &self.b4),
        ]
    }

    /// Aligned text table: a header row, a value row and a CI row.
    pub fn to_table(&self) -> String {
        let cols = self.columns();
        let values: Vec<String> = cols.iter().map(|(_, m)| format_value(m.value)).collect();
        let cis: Vec<String> = cols
            .iter()
            .map(|(_, m)| m.ci95.map_or_else(|| "-".to_owned(), |c| format!("±{c:.4}")))
            .collect();
        let widths: Vec<usize> = cols
            .iter()
            .enumerate()
            .map(|(i, (h, _))| h.chars().count().max(values[i].chars().count()).max(cis[i].chars().count()))
            .collect();
        let mut out = String::new();
        let mut row = |label: &str, cells: Vec<&str>| {
            let _ = write!(out, "{label:<6}");
            for (cell, w) in cells.iter().zip(&widths) {
                let pad = w - cell.chars().count();
                let _ = write!(out, "  {}{cell}", " ".repeat(pad));
            }
            out.push('\n');
        };
        row("", cols.iter().map(|(h, _)| *h).collect());
        row("value", values.iter().map(String::as_str).collect());
        row("ci95", cis.iter().map(String::as_str).collect());
        out
    }
}

fn format_value(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.4}")
    }
}

struct PerResponse {
    avg: f64,
    ext: f64,
    gre: f64,
    coh: f64,
    bleu: [f64; 4],
}

/// Compute the full metric suite.
pub fn evaluate(input: &EvalInput, table: &EmbeddingTable, opts: &EvalOptions) -> Result<MetricReport> {
    input.validate(opts.allow_empty_responses)?;
    if !(opts.epsilon > 0.0 && opts.epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(opts.epsilon));
    }

    let per: Vec<PerResponse> = (0..input.len())
        .into_par_iter()
        .map(|i| {
            let r = &input.responses[i];
            let t = &input.targets[i];
            let src: Vec<&String> = input.sources[i]
                .iter()
                .filter(|w| !w.eq_ignore_ascii_case(TURN_SEPARATOR))
                .collect();
            let resp: Vec<&String> = r.iter().collect();
            let mut bleu = [0.0; 4];
            for (n, b) in bleu.iter_mut().enumerate() {
                *b = bleu_n(r, t, n + 1, opts.bleu_smoothing);
            }
            PerResponse {
                avg: embedding_average(r, t, table),
                ext: embedding_extrema(r, t, table),
                gre: embedding_greedy(r, t, table),
                coh: coherence(&src, &resp, table),
                bleu,
            }
        })
        .collect();

    let agg = |f: fn(&PerResponse) -> f64| mean_ci(&per.iter().map(f).collect::<Vec<_>>());

    let uni = NgramModel::fit(&input.train_targets, Order::Unigram, opts.epsilon)?;
    let bi = NgramModel::fit(&input.train_targets, Order::Bigram, opts.epsilon)?;
    let h_u = entropy_metrics(&input.responses, &uni);
    let h_b = entropy_metrics(&input.responses, &bi);
    let kl = |order| kl_div_metrics(&input.responses, &input.targets, order, opts.kl_direction, opts.epsilon);

    Ok(MetricReport {
        u_len: response_length(&input.responses)?,
        h_w_u: Metric::set_level(h_u.per_word),
        h_w_b: Metric::set_level(h_b.per_word),
        h_u_u: Metric::set_level(h_u.per_utterance),
        h_u_b: Metric::set_level(h_b.per_utterance),
        d_kl_u: Metric::set_level(kl(Order::Unigram)?),
        d_kl_b: Metric::set_level(kl(Order::Bigram)?),
        avg: agg(|p| p.avg)?,
        ext: agg(|p| p.ext)?,
        gre: agg(|p| p.gre)?,
        coh: agg(|p| p.coh)?,
        d1: Metric::set_level(distinct_n(&input.responses, 1)),
        d2: Metric::set_level(distinct_n(&input.responses, 2)),
        b1: agg(|p| p.bleu[0])?,
        b2: agg(|p| p.bleu[1])?,
        b3: agg(|p| p.bleu[2])?,
        b4: agg(|p| p.bleu[3])?,
    })
}
