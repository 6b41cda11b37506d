//! Shared test support: an independent brute-force evaluation of the
//! propagated weighting formulas, random instance generators, and the
//! synthetic two-topic benchmark corpus.
//!
//! The oracle works on dense M×M cosine tables and never touches the
//! sparse matrix code it is used to check.

// Not every test binary uses every helper; the oracle intentionally uses
// plain index loops rather than iterator adapters.
#![allow(dead_code, clippy::needless_range_loop)]

use cptw_core::corpus::{Corpus, Stopwords};
use cptw_core::embeddings::EmbeddingTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense cosine table over the corpus vocabulary: `None` where either
/// word lacks an embedding (except the diagonal, which is always 1).
fn dense_cosines(corpus: &Corpus, emb: &EmbeddingTable<f64>) -> Vec<Vec<Option<f64>>> {
    let m = corpus.vocab_size();
    let rows: Vec<Option<&[f64]>> = corpus.vocabulary().iter().map(|w| emb.get(w)).collect();
    let mut table = vec![vec![None; m]; m];
    for j in 0..m {
        for k in 0..m {
            if j == k {
                table[j][k] = Some(1.0);
            } else if let (Some(vj), Some(vk)) = (rows[j], rows[k]) {
                let mut acc = 0.0;
                for (a, b) in vj.iter().zip(vk) {
                    acc += a * b;
                }
                table[j][k] = Some(acc);
            }
        }
    }
    table
}

/// Brute-force dense propagation matrix: neighbourhoods thresholded at
/// tau, rows scaled by the reciprocal of the neighbourhood cosine sum.
pub fn oracle_propagation(corpus: &Corpus, emb: &EmbeddingTable<f64>, tau: f64) -> Vec<Vec<f64>> {
    let m = corpus.vocab_size();
    let cos = dense_cosines(corpus, emb);
    let mut p = vec![vec![0.0; m]; m];
    for j in 0..m {
        let mut row_sum = 0.0;
        for k in 0..m {
            if let Some(c) = cos[j][k] {
                if c >= tau {
                    row_sum += c;
                }
            }
        }
        let alpha = 1.0 / row_sum;
        for k in 0..m {
            if let Some(c) = cos[j][k] {
                if c >= tau {
                    p[j][k] = alpha * c;
                }
            }
        }
    }
    p
}

/// Term-by-term evaluation of the propagated term weights: for every
/// vocabulary word j, alpha_j times the cosine-weighted frequencies of
/// its embedded neighbourhood.
pub fn oracle_cptw(corpus: &Corpus, emb: &EmbeddingTable<f64>, tau: f64, doc: usize) -> Vec<f64> {
    let m = corpus.vocab_size();
    let cos = dense_cosines(corpus, emb);
    let mut out = vec![0.0; m];
    for j in 0..m {
        let mut row_sum = 0.0;
        for k in 0..m {
            if let Some(c) = cos[j][k] {
                if c >= tau {
                    row_sum += c;
                }
            }
        }
        let alpha = 1.0 / row_sum;
        let mut acc = 0.0;
        for k in 0..m {
            if let Some(c) = cos[j][k] {
                if c >= tau {
                    acc += corpus.count(doc, k as u32) as f64 * c;
                }
            }
        }
        out[j] = alpha * acc;
    }
    out
}

/// Term-by-term evaluation of the idf-propagated variant, with the
/// logarithm taken of the full product (N/df) · alpha · cos.
pub fn oracle_cptw_idf(
    corpus: &Corpus,
    emb: &EmbeddingTable<f64>,
    tau: f64,
    doc: usize,
) -> Vec<f64> {
    let m = corpus.vocab_size();
    let n = corpus.n_docs() as f64;
    let cos = dense_cosines(corpus, emb);
    let mut out = vec![0.0; m];
    for j in 0..m {
        let mut row_sum = 0.0;
        for k in 0..m {
            if let Some(c) = cos[j][k] {
                if c >= tau {
                    row_sum += c;
                }
            }
        }
        let alpha = 1.0 / row_sum;
        let mut acc = 0.0;
        for k in 0..m {
            if let Some(c) = cos[j][k] {
                if c >= tau {
                    let f = corpus.count(doc, k as u32) as f64;
                    let df = corpus.doc_freq(k as u32) as f64;
                    acc += f * c * ((n / df) * alpha * c).ln();
                }
            }
        }
        out[j] = alpha * acc;
    }
    out
}

pub struct RandomInstance {
    pub corpus: Corpus,
    pub emb: EmbeddingTable<f64>,
    pub tau: f64,
}

/// Seeded random corpus + embedding + tau. Roughly 15% of the token pool
/// has no embedding so out-of-vocabulary rows are exercised.
pub fn random_instance(seed: u64, max_docs: usize, max_vocab: usize) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(2..=8);
    let pool = rng.random_range(2..=max_vocab.max(2));
    let tokens: Vec<String> = (0..pool).map(|i| format!("w{i}")).collect();

    let mut rows = Vec::new();
    for token in &tokens {
        if rng.random_range(0.0..1.0) < 0.85 {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            if v.iter().all(|x| x.abs() < 1e-3) {
                v[0] = 1.0;
            }
            rows.push((token.clone(), v));
        }
    }
    if rows.is_empty() {
        rows.push((tokens[0].clone(), vec![1.0; dim]));
    }
    let emb = EmbeddingTable::from_rows(rows).unwrap();

    let n_docs = rng.random_range(2..=max_docs.max(2));
    let mut records = Vec::new();
    for d in 0..n_docs {
        let len = if d == 0 {
            rng.random_range(1..=20)
        } else {
            rng.random_range(0..=20)
        };
        let text: Vec<&str> = (0..len)
            .map(|_| tokens[rng.random_range(0..pool)].as_str())
            .collect();
        let label = if d % 2 == 0 { "even" } else { "odd" };
        records.push((format!("d{d}"), label.to_string(), text.join(" ")));
    }
    let corpus = Corpus::build(&records, &Stopwords::none(), 1).unwrap();
    let tau = rng.random_range(0.1..=0.9);
    RandomInstance { corpus, emb, tau }
}

/// Two-topic corpus whose topics use disjoint content vocabularies in
/// which every concept is split across two synonyms at cosine 0.9, plus a
/// small pool of noise words shared by both topics. The constructed
/// embedding keeps different concepts exactly orthogonal.
pub struct SyntheticDataset {
    pub records: Vec<(String, String, String)>,
    pub embedding_text: String,
}

pub fn synthetic_synonym_dataset(seed: u64, docs_per_topic: usize) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concepts_per_topic = 5;
    let n_concepts = 2 * concepts_per_topic;
    let n_noise = 2;
    let dim = 2 * n_concepts + n_noise;
    let syn_cos = 0.9f64;
    let off = (1.0 - syn_cos * syn_cos).sqrt();

    let mut embedding_text = String::new();
    let mut word = |name: &str, components: Vec<(usize, f64)>| {
        let mut v = vec![0.0; dim];
        for (i, x) in components {
            v[i] = x;
        }
        embedding_text.push_str(name);
        for x in v {
            embedding_text.push_str(&format!(" {x}"));
        }
        embedding_text.push('\n');
    };
    for topic in 0..2 {
        for c in 0..concepts_per_topic {
            let concept = topic * concepts_per_topic + c;
            word(&format!("t{topic}c{c}a"), vec![(2 * concept, 1.0)]);
            word(
                &format!("t{topic}c{c}b"),
                vec![(2 * concept, syn_cos), (2 * concept + 1, off)],
            );
        }
    }
    for i in 0..n_noise {
        word(&format!("shared{i}"), vec![(2 * n_concepts + i, 1.0)]);
    }

    let mut records = Vec::new();
    for topic in 0..2 {
        for d in 0..docs_per_topic {
            let mut tokens: Vec<String> = Vec::new();
            let mut concepts: Vec<usize> = (0..concepts_per_topic).collect();
            for i in (1..concepts.len()).rev() {
                let j = rng.random_range(0..=i);
                concepts.swap(i, j);
            }
            for &c in concepts.iter().take(2) {
                let syn = if rng.random_range(0.0..1.0) < 0.5 {
                    "a"
                } else {
                    "b"
                };
                tokens.push(format!("t{topic}c{c}{syn}"));
            }
            for _ in 0..3 {
                tokens.push(format!("shared{}", rng.random_range(0..n_noise)));
            }
            records.push((
                format!("t{topic}d{d}"),
                format!("topic{topic}"),
                tokens.join(" "),
            ));
        }
    }
    SyntheticDataset {
        records,
        embedding_text,
    }
}
