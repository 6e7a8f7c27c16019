mod common;

use std::collections::BTreeMap;

use booktalk::eval::{cosine, evaluate, EmbeddingTable, EvalInput, EvalOptions};
use booktalk::extract::{extract_book, extract_utterances, segment_dialogues, segment_groups, Dialogue, GappedUtterance};
use booktalk::filters::{delimiter_filter, drop_long_utterances, prefilter, rare_word_filter, Vocabulary};
use booktalk::ingest::{Book, BookMeta, Rights};
use booktalk::lang::{find_spans, profile_for};
use booktalk::qa::{sample_dialogues, tally_labels, Level, DIALOGUE_CATEGORIES};
use booktalk::split::{split_corpus, Part};
use booktalk::stats::{accumulate, corpus_stats};
use booktalk::text::{
    char_slice, kl_divergence, split_paragraphs, tokenize, word_distribution, NgramCounts, Order, WordDistribution,
    DEFAULT_EPSILON,
};
use booktalk::PipelineConfig;
use common::utterance;
use proptest::prelude::*;

fn book(body: String) -> Book {
    Book::new(
        BookMeta {
            book_id: "p".into(),
            language: "en".into(),
            rights: Rights::PublicDomain,
            author: None,
        },
        body,
    )
}

/// Text built from word-ish pieces, punctuation, quotes and blank lines.
fn prose() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        4 => "[A-Za-z]{1,8}",
        1 => "[A-Za-z]{1,5}(n't|'s|'ll|'re|'m|'d|'ve)",
        1 => "[0-9]{1,3}([.,][0-9]{1,3})?",
        1 => "[A-Za-z]{1,4}-[A-Za-z]{1,4}",
        2 => prop::sample::select(vec![".", ",", "!", "?", ";", ":", "...", "--", "'", "\u{201c}", "\u{201d}", "\""]).prop_map(String::from),
    ];
    let sep = prop::sample::select(vec![" ", " ", " ", "", "\n", "\n\n"]);
    prop::collection::vec((piece, sep), 0..40)
        .prop_map(|parts| parts.into_iter().map(|(p, s)| format!("{p}{s}")).collect())
}

/// Paragraphs of mostly quoted speech with narrative in between.
fn dialogue_text() -> impl Strategy<Value = String> {
    let para = prop_oneof![
        3 => ("[a-z]{1,6}( [a-z]{1,6}){0,12}", "[a-z]{2,5}")
            .prop_map(|(speech, tag)| format!("\"{speech}.\" {tag} said.")),
        1 => ("[a-z]{1,6}( [a-z]{1,6}){0,5}", "[a-z]{1,6}( [a-z]{1,6}){0,5}")
            .prop_map(|(a, b)| format!("\"{a},\" she said. \"{b}.\"")),
        2 => "[a-z]{1,9}( [a-z]{1,9}){0,40}\\.",
    ];
    prop::collection::vec(para, 0..30).prop_map(|ps| ps.join("\n\n"))
}

fn counts(pairs: &[(String, u64)]) -> NgramCounts {
    let mut c = NgramCounts::new(Order::Unigram);
    for (w, n) in pairs {
        c.add_sequence(&vec![w.as_str(); *n as usize]);
    }
    c
}

fn dialogues_strategy() -> impl Strategy<Value = Vec<Dialogue>> {
    prop::collection::vec((0usize..30, prop::collection::vec(1usize..12, 2..8)), 0..60).prop_map(|specs| {
        specs
            .into_iter()
            .enumerate()
            .map(|(i, (book, lens))| {
                let id = format!("b{book:02}");
                Dialogue {
                    utterances: lens.iter().enumerate().map(|(j, &w)| utterance(&id, i * 10 + j, w)).collect(),
                    book_id: id,
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tokenize_is_idempotent_on_its_output(text in prose()) {
        let once = tokenize(&text).tokens;
        let twice = tokenize(&once.join(" ")).tokens;
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn token_offsets_retokenize(text in prose()) {
        let stream = tokenize(&text);
        for (tok, &(s, e)) in stream.tokens.iter().zip(&stream.offsets) {
            prop_assert_eq!(&tokenize(char_slice(&text, s, e)).tokens, &vec![tok.clone()]);
        }
        if let (Some(&(s, _)), Some(&(_, e))) = (stream.offsets.first(), stream.offsets.last()) {
            prop_assert_eq!(tokenize(char_slice(&text, s, e)).tokens, stream.tokens.clone());
        }
    }

    #[test]
    fn kl_identity_and_non_negativity(
        p in prop::collection::btree_map("[a-f]", 1u64..50, 1..6),
        extra in prop::collection::btree_map("[a-h]", 1u64..50, 0..6),
    ) {
        let p_pairs: Vec<(String, u64)> = p.into_iter().collect();
        let mut q_pairs = p_pairs.clone();
        q_pairs.extend(extra);
        let p = WordDistribution::from_counts(&counts(&p_pairs), None).unwrap();
        let q = WordDistribution::from_counts(&counts(&q_pairs), None).unwrap();
        prop_assert_eq!(kl_divergence(&p, &p, DEFAULT_EPSILON).unwrap(), 0.0);
        prop_assert!(kl_divergence(&p, &q, DEFAULT_EPSILON).unwrap() >= 0.0);
    }

    #[test]
    fn quote_spans_are_ordered_and_delimited(text in dialogue_text()) {
        let profile = profile_for("en").unwrap();
        for (i, para) in split_paragraphs(&text).iter().enumerate() {
            let chars: Vec<char> = para.text.chars().collect();
            let spans = find_spans(para, i, &profile);
            for w in spans.windows(2) {
                prop_assert!(w[0].outer_range.1 <= w[1].outer_range.0);
            }
            for s in &spans {
                prop_assert_eq!(chars[s.char_range.0 - 1], '"');
                prop_assert_eq!(chars[s.char_range.1], '"');
            }
        }
    }

    #[test]
    fn delimiter_free_text_has_no_spans(a in "[a-z ,.]{0,80}", b in "[a-z ,.]{0,80}") {
        let profile = profile_for("en").unwrap();
        let body = format!("{a}\n\n{b}");
        for (i, para) in split_paragraphs(&body).iter().enumerate() {
            prop_assert!(find_spans(para, i, &profile).is_empty());
        }
    }

    #[test]
    fn provenance_reads_back(text in dialogue_text()) {
        let b = book(text);
        let profile = profile_for("en").unwrap();
        for g in extract_utterances(&b, &profile) {
            let u = g.utterance;
            let joined: Vec<&str> = u.spans.iter().map(|&(s, e)| char_slice(&b.body, s, e)).collect();
            prop_assert_eq!(tokenize(&joined.join(" ")).tokens, u.tokens);
        }
    }

    #[test]
    fn extraction_is_deterministic_and_never_yields_singletons(text in dialogue_text(), gap in 0usize..400) {
        let b = book(text);
        let profile = profile_for("en").unwrap();
        let cfg = PipelineConfig { gap_chars: gap, ..PipelineConfig::default() };
        let (first, _) = extract_book(&b, &profile, &cfg);
        let (second, _) = extract_book(&b, &profile, &cfg);
        prop_assert!(first.iter().all(|d| d.len() >= 2));
        prop_assert_eq!(first, second);
    }

    /// Before singletons are discarded, widening the gap only merges groups.
    #[test]
    fn raw_groups_coarsen_with_gap(gaps in prop::collection::vec(0usize..800, 1..60)) {
        let stream: Vec<GappedUtterance> = gaps
            .iter()
            .enumerate()
            .map(|(i, &g)| GappedUtterance { utterance: utterance("s", i, 3), gap: if i == 0 { 0 } else { g } })
            .collect();
        let mut prev: Option<Vec<usize>> = None;
        for gap_chars in [50, 100, 150, 300, 600] {
            let sizes: Vec<usize> = segment_groups(&stream, gap_chars).iter().map(Vec::len).collect();
            prop_assert_eq!(sizes.iter().sum::<usize>(), stream.len());
            if let Some(p) = &prev {
                prop_assert!(sizes.len() <= p.len());
            }
            prev = Some(sizes);
        }
        let cfg = PipelineConfig { gap_chars: 150, ..PipelineConfig::default() };
        prop_assert!(segment_dialogues(&stream, &cfg).iter().all(|d| d.len() >= 2));
    }

    #[test]
    fn long_utterance_removal_is_idempotent_and_accounted(lens in prop::collection::vec(1usize..160, 2..12)) {
        let cfg = PipelineConfig::default();
        let d = Dialogue {
            book_id: "l".into(),
            utterances: lens.iter().enumerate().map(|(i, &w)| utterance("l", i, w)).collect(),
        };
        let parts = drop_long_utterances(&d, &cfg);
        for p in &parts {
            prop_assert_eq!(drop_long_utterances(p, &cfg), vec![p.clone()]);
            prop_assert!(p.utterances.iter().all(|u| d.utterances.contains(u)));
        }
        let kept: usize = parts.iter().map(Dialogue::len).sum();
        let long = lens.iter().filter(|&&w| w > cfg.max_utt_words).count();
        prop_assert!(kept + long <= d.len());
    }

    #[test]
    fn permissive_config_passes_everything(text in dialogue_text(), lens in prop::collection::vec(1usize..300, 2..8)) {
        let cfg = PipelineConfig::permissive();
        let b = book(format!("{text}\n\nfiller words here."));
        let global = word_distribution(&tokenize("something else entirely").tokens, Order::Unigram, None).unwrap();
        prop_assert!(prefilter(&b, &global, &cfg).unwrap().keep);
        prop_assert!(delimiter_filter(&b, &profile_for("en").unwrap(), &cfg).unwrap().keep);
        let d = Dialogue {
            book_id: "x".into(),
            utterances: lens.iter().enumerate().map(|(i, &w)| utterance("x", i, w)).collect(),
        };
        prop_assert_eq!(drop_long_utterances(&d, &cfg), vec![d.clone()]);
        prop_assert!(rare_word_filter(&d, &Vocabulary::default(), &cfg).unwrap().keep);
    }

    #[test]
    fn rare_word_filter_is_idempotent(corpus in dialogues_strategy(), top in 0usize..3) {
        let cfg = PipelineConfig::default();
        let vocab = Vocabulary::from_dialogues(&corpus, top);
        let kept: Vec<Dialogue> = corpus
            .iter()
            .filter(|d| rare_word_filter(d, &vocab, &cfg).unwrap().keep)
            .cloned()
            .collect();
        for d in &kept {
            prop_assert!(rare_word_filter(d, &vocab, &cfg).unwrap().keep);
        }
    }

    #[test]
    fn split_partitions_by_book(corpus in dialogues_strategy(), seed in any::<u64>()) {
        let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
        let split = split_corpus(&corpus, &cfg);
        let mut all: Vec<&Dialogue> = Part::ALL.iter().flat_map(|&p| split.part(p)).collect();
        prop_assert_eq!(all.len(), corpus.len());
        let mut input: Vec<&Dialogue> = corpus.iter().collect();
        let key = |d: &&Dialogue| (d.book_id.clone(), d.utterances[0].paragraph_index);
        all.sort_by_key(key);
        input.sort_by_key(key);
        prop_assert_eq!(all, input);
        let mut owner = BTreeMap::new();
        for part in Part::ALL {
            for d in split.part(part) {
                prop_assert_eq!(*owner.entry(d.book_id.clone()).or_insert(part), part);
            }
        }
    }

    #[test]
    fn stats_recompose_over_parts(corpus in dialogues_strategy()) {
        let split = split_corpus(&corpus, &PipelineConfig::default());
        let mut merged = accumulate(&split.train);
        merged.merge(&accumulate(&split.valid));
        merged.merge(&accumulate(&split.test));
        let whole = corpus_stats(&corpus);
        let parts = merged.finish();
        prop_assert_eq!(parts.n_utterances, whole.n_utterances);
        prop_assert_eq!(parts.n_tokens, whole.n_tokens);
        prop_assert_eq!(parts.n_dialogues, whole.n_dialogues);
        prop_assert_eq!(parts.n_dialogues_ge, whole.n_dialogues_ge);
        let sum: u64 = corpus.iter().map(|d| d.len() as u64).sum();
        prop_assert_eq!(whole.n_utterances, sum);
    }

    #[test]
    fn tally_accounts_for_every_item(labels in prop::collection::vec(prop::collection::vec(prop::sample::select(DIALOGUE_CATEGORIES.to_vec()), 0..4), 0..60)) {
        let t = tally_labels(Level::Dialogue, &labels).unwrap();
        let labelled = labels.iter().filter(|l| !l.is_empty()).count() as u64;
        prop_assert_eq!(t.error_free + labelled, labels.len() as u64);
        prop_assert_eq!(t.items, labels.len() as u64);
    }
}

fn toy_lines() -> impl Strategy<Value = Vec<(String, String, String)>> {
    let line = "[a-e]( [a-e]){0,7}";
    prop::collection::vec((line, line, line), 1..20)
}

fn toy_table(scale: f32) -> EmbeddingTable {
    let mut t = EmbeddingTable::new(3);
    for (w, v) in [
        ("a", [1.0, 0.0, 0.5]),
        ("b", [0.0, 1.0, -0.3]),
        ("c", [-0.7, 0.2, 0.9]),
        ("d", [0.3, -0.8, 0.1]),
    ] {
        t.insert(w, v.iter().map(|x| x * scale).collect()).unwrap();
    }
    t
}

fn input_of(triples: &[(String, String, String)]) -> EvalInput {
    let s: Vec<&str> = triples.iter().map(|t| t.0.as_str()).collect();
    let r: Vec<&str> = triples.iter().map(|t| t.1.as_str()).collect();
    let g: Vec<&str> = triples.iter().map(|t| t.2.as_str()).collect();
    EvalInput::from_lines(&s, &r, &g, &g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metrics_stay_in_range(triples in toy_lines()) {
        let r = evaluate(&input_of(&triples), &toy_table(1.0), &EvalOptions::default()).unwrap();
        for m in [r.avg, r.ext, r.gre, r.coh] {
            prop_assert!((-1.0..=1.0).contains(&m.value));
        }
        for m in [r.d1, r.d2, r.b1, r.b2, r.b3, r.b4] {
            prop_assert!((0.0..=1.0).contains(&m.value));
        }
        for m in [r.h_w_u, r.h_w_b, r.h_u_u, r.h_u_b, r.d_kl_u, r.d_kl_b] {
            prop_assert!(m.value >= 0.0);
        }
        prop_assert!(r.u_len.value >= 1.0);
    }

    #[test]
    fn metrics_ignore_triple_order(triples in toy_lines(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = triples.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let opts = EvalOptions::default();
        let a = evaluate(&input_of(&triples), &toy_table(1.0), &opts).unwrap();
        let b = evaluate(&input_of(&shuffled), &toy_table(1.0), &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn embedding_metrics_ignore_vector_scale(triples in toy_lines(), scale in 0.01f32..100.0) {
        let opts = EvalOptions::default();
        let a = evaluate(&input_of(&triples), &toy_table(1.0), &opts).unwrap();
        let b = evaluate(&input_of(&triples), &toy_table(scale), &opts).unwrap();
        for (x, y) in [(a.avg, b.avg), (a.ext, b.ext), (a.gre, b.gre), (a.coh, b.coh)] {
            prop_assert!((x.value - y.value).abs() < 1e-6, "{} vs {}", x.value, y.value);
        }
    }

    #[test]
    fn cosine_of_a_vector_with_itself_is_one(v in prop::collection::vec(-1e6f64..1e6, 1..32)) {
        prop_assume!(v.iter().any(|&x| x != 0.0));
        prop_assert_eq!(cosine(&v, &v), 1.0);
    }
}

/// Every dialogue should be drawn about equally often across seeds.
#[test]
fn dialogue_sampling_is_uniform() {
    const POPULATION: usize = 20;
    const DRAWS: usize = 5;
    const SEEDS: u64 = 4000;
    let corpus: Vec<Dialogue> = (0..POPULATION)
        .map(|i| Dialogue {
            book_id: "u".into(),
            utterances: vec![utterance("u", 2 * i, 2), utterance("u", 2 * i + 1, 2)],
        })
        .collect();
    let bodies = BTreeMap::from([("u".to_string(), "x".repeat(1000))]);
    let mut hits = [0u64; POPULATION];
    for seed in 0..SEEDS {
        let sheet = sample_dialogues(&corpus, &bodies, DRAWS, 0, seed).unwrap();
        for item in sheet.items {
            hits[item.char_range.0 / 20] += 1;
        }
    }
    let expected = (SEEDS as f64) * DRAWS as f64 / POPULATION as f64;
    let chi2: f64 = hits.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum();
    // 19 degrees of freedom, p = 0.001
    assert!(chi2 < 43.82, "chi-square {chi2:.2}, hits {hits:?}");
}
