//! Acceptance suite: one test per library-level criterion, each printing
//! a PASS line with its measured runtime. Tolerances are pinned in the
//! assertions. The command-line criteria (report determinism, pretrained
//! reproduction) live in the cli crate's acceptance suite.

#![allow(clippy::needless_range_loop)]

mod common;

use std::time::Instant;

use common::{oracle_cptw, oracle_cptw_idf, random_instance, synthetic_synonym_dataset};
use cptw_core::corpus::{Corpus, Stopwords};
use cptw_core::embeddings::EmbeddingTable;
use cptw_core::eval::{cross_validate, macro_f1, micro_f1, CvConfig, Grids, Normalization, Scheme};
use cptw_core::iicr::{iicr, tau_sweep, SweepScheme};
use cptw_core::simgraph::build_propagation;
use cptw_core::weighting::{
    cptw_idf_vector, cptw_vector, tf_vector, tfidf_vector, CptwIdfMode, DocVector, IdfTable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(name: &str, started: Instant) {
    println!("PASS {name} ({:.2}s)", started.elapsed().as_secs_f64());
}

#[test]
fn row_stochasticity_over_random_instances() {
    let started = Instant::now();
    for seed in 0..100u64 {
        let inst = random_instance(seed, 10, 500);
        let p = build_propagation(&inst.emb, &inst.corpus, inst.tau).unwrap();
        for j in 0..p.m() {
            let (_, vals) = p.row(j);
            let sum: f64 = vals.iter().sum();
            assert!(
                (sum - 1.0).abs() <= 1e-9,
                "seed {seed}: row {j} sums to {sum}"
            );
        }
    }
    assert!(
        started.elapsed().as_secs_f64() < 10.0,
        "over the 10 s budget"
    );
    pass(
        "row-stochasticity (100 random instances, rows sum to 1 ± 1e-9)",
        started,
    );
}

#[test]
fn reduction_suite_at_tau_one() {
    let started = Instant::now();
    for seed in 0..50u64 {
        let inst = random_instance(seed.wrapping_add(1000), 12, 80);
        let p = build_propagation(&inst.emb, &inst.corpus, 1.0).unwrap();
        let idf = IdfTable::from_corpus(&inst.corpus);
        for d in 0..inst.corpus.n_docs() {
            let cptw = cptw_vector(&inst.corpus, d, &p).unwrap();
            assert_eq!(cptw, tf_vector(&inst.corpus, d), "seed {seed} doc {d}");
            let ci =
                cptw_idf_vector(&inst.corpus, d, &p, &idf, CptwIdfMode::WeightInsideLog).unwrap();
            let ti = tfidf_vector(&inst.corpus, d, &idf);
            for k in 0..inst.corpus.vocab_size() {
                assert!(
                    (ci.value_at(k) - ti.value_at(k)).abs() <= 1e-12,
                    "seed {seed} doc {d} word {k}"
                );
            }
        }
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "over the 5 s budget");
    pass(
        "reduction at tau=1 (CPTW == TF exactly, CPTW_IDF == TF-IDF ± 1e-12)",
        started,
    );
}

#[test]
fn oracle_equivalence_on_random_instances() {
    let started = Instant::now();
    let mut max_diff = 0.0f64;
    for seed in 0..50u64 {
        let inst = random_instance(seed.wrapping_add(2000), 20, 100);
        assert!((0.1..=0.9).contains(&inst.tau));
        let p = build_propagation(&inst.emb, &inst.corpus, inst.tau).unwrap();
        let idf = IdfTable::from_corpus(&inst.corpus);
        for d in 0..inst.corpus.n_docs() {
            let got = cptw_vector(&inst.corpus, d, &p).unwrap();
            let want = oracle_cptw(&inst.corpus, &inst.emb, inst.tau, d);
            for k in 0..inst.corpus.vocab_size() {
                max_diff = max_diff.max((got.value_at(k) - want[k]).abs());
            }
            let got =
                cptw_idf_vector(&inst.corpus, d, &p, &idf, CptwIdfMode::WeightInsideLog).unwrap();
            let want = oracle_cptw_idf(&inst.corpus, &inst.emb, inst.tau, d);
            for k in 0..inst.corpus.vocab_size() {
                max_diff = max_diff.max((got.value_at(k) - want[k]).abs());
            }
        }
    }
    assert!(max_diff <= 1e-9, "max abs difference {max_diff}");
    assert!(
        started.elapsed().as_secs_f64() < 30.0,
        "over the 30 s budget"
    );
    pass(
        &format!("oracle equivalence (50 instances, max abs diff {max_diff:.2e} ≤ 1e-9)"),
        started,
    );
}

#[test]
fn worked_three_word_example() {
    let started = Instant::now();
    let emb: EmbeddingTable<f64> =
        EmbeddingTable::read_text(std::io::Cursor::new("a 1 0\nb 0.8 0.6\nc 0 1\n")).unwrap();
    let corpus = Corpus::build(
        &[
            ("d0".into(), "x".into(), "a b c".into()),
            ("d1".into(), "x".into(), "a a c".into()),
        ],
        &Stopwords::none(),
        1,
    )
    .unwrap();
    let p = build_propagation(&emb, &corpus, 0.5).unwrap();
    let v = cptw_vector(&corpus, 1, &p).unwrap();
    let expected = [1.1111, 0.9167, 0.6250];
    for (k, e) in expected.iter().enumerate() {
        assert!(
            (v.value_at(k) - e).abs() <= 1e-4,
            "component {k}: {} vs {e}",
            v.value_at(k)
        );
    }
    pass(
        "three-word worked example (CPTW of tf=(2,0,1) at tau=0.5, ± 1e-4)",
        started,
    );
}

#[test]
fn metric_identity_and_worked_macro() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1);
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let n_classes = rng.random_range(1..6u8);
        let truth: Vec<u8> = (0..n).map(|_| rng.random_range(0..=n_classes)).collect();
        let pred: Vec<u8> = (0..n).map(|_| rng.random_range(0..=n_classes)).collect();
        let acc = truth.iter().zip(&pred).filter(|(t, p)| t == p).count() as f64 / n as f64;
        let micro = micro_f1(&truth, &pred).unwrap();
        assert!(
            (micro - acc).abs() <= 1e-15,
            "micro {micro} vs accuracy {acc}"
        );
    }

    let truth = [0, 0, 1, 1, 2];
    let pred = [0, 1, 1, 1, 2];
    assert!((micro_f1(&truth, &pred).unwrap() - 0.8).abs() <= 1e-15);
    let expected = (2.0 / 3.0 + 0.8 + 1.0) / 3.0;
    assert!((macro_f1(&truth, &pred).unwrap() - expected).abs() <= 1e-12);

    let truth = [0, 0, 1, 1];
    let pred = [0, 0, 0, 0];
    assert!((micro_f1(&truth, &pred).unwrap() - 0.5).abs() <= 1e-15);
    assert!((macro_f1(&truth, &pred).unwrap() - 1.0 / 3.0).abs() <= 1e-12);
    pass(
        "metric identity (micro F1 == accuracy ×1000; macro worked examples)",
        started,
    );
}

#[test]
fn iicr_line_example_identical_distributions_and_scaling() {
    let started = Instant::now();

    // Two classes on a line.
    let vectors: Vec<DocVector<f64>> = [0.0, 0.1, 10.0, 10.1]
        .iter()
        .map(|&x| DocVector::dense(vec![x]))
        .collect();
    let labels: Vec<String> = ["a", "a", "b", "b"].iter().map(|s| s.to_string()).collect();
    let r = iicr(&vectors, &labels, 1).unwrap();
    assert!(
        (r.iicr - 99.5).abs() <= 1e-9,
        "line example iicr {}",
        r.iicr
    );

    // Identical distributions: 200 points per class from one sampler.
    let mut rng = ChaCha8Rng::seed_from_u64(0x11C2);
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        for _ in 0..200 {
            vectors.push(DocVector::<f64>::dense(vec![
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ]));
            labels.push(format!("c{class}"));
        }
    }
    let r = iicr(&vectors, &labels, 5).unwrap();
    assert!(
        (0.8..=1.25).contains(&r.iicr),
        "identical distributions give iicr {}",
        r.iicr
    );

    // Scale invariance.
    let scaled: Vec<DocVector<f64>> = vectors
        .iter()
        .map(|v| DocVector::dense(v.dense_values().unwrap().iter().map(|x| x * 37.5).collect()))
        .collect();
    let rs = iicr(&scaled, &labels, 5).unwrap();
    assert!(
        (r.iicr - rs.iicr).abs() <= 1e-9,
        "scaling moved iicr from {} to {}",
        r.iicr,
        rs.iicr
    );
    pass(
        "iicr (line example 99.5 ± 1e-9; identical classes in [0.8,1.25]; scale-invariant)",
        started,
    );
}

#[test]
fn synthetic_end_to_end_benchmark() {
    let started = Instant::now();
    let data = synthetic_synonym_dataset(0xBE9C, 30);
    let corpus = Corpus::build(&data.records, &Stopwords::smart(), 1).unwrap();
    let emb: EmbeddingTable<f64> = EmbeddingTable::read_text(std::io::Cursor::new(
        data.embedding_text.as_bytes().to_vec(),
    ))
    .unwrap();

    let cfg = CvConfig {
        schemes: vec![Scheme::Bow, Scheme::CptwIdf],
        grids: Grids::default(),
        seed: 7,
        ..CvConfig::default()
    };
    let report = cross_validate(&corpus, Some(&emb), &cfg).unwrap();
    let bow = &report.schemes[0];
    let cptw_idf = &report.schemes[1];
    assert!(
        cptw_idf.mean_micro_f1 >= bow.mean_micro_f1,
        "cptw-idf {} < bow {}",
        cptw_idf.mean_micro_f1,
        bow.mean_micro_f1
    );

    let k = cptw_idf.folds[0].params.k;
    let sweep = tau_sweep(
        &corpus,
        &emb,
        SweepScheme::CptwIdf,
        &[0.5, 1.0],
        k,
        Normalization::L2,
        CptwIdfMode::WeightInsideLog,
    );
    let at = |tau: f64| {
        sweep
            .iter()
            .find(|(t, _)| *t == tau)
            .and_then(|(_, r)| r.as_ref().ok())
            .unwrap_or_else(|| panic!("sweep failed at tau {tau}"))
            .iicr
    };
    assert!(
        at(0.5) > at(1.0),
        "IICR(0.5) = {} not above IICR(1.0) = {}",
        at(0.5),
        at(1.0)
    );
    assert!(
        started.elapsed().as_secs_f64() < 120.0,
        "over the 2 min budget"
    );
    pass(
        &format!(
            "synthetic benchmark (cptw-idf micro {:.4} ≥ bow micro {:.4}; IICR(0.5) {:.3} > IICR(1.0) {:.3})",
            cptw_idf.mean_micro_f1,
            bow.mean_micro_f1,
            at(0.5),
            at(1.0)
        ),
        started,
    );
}
