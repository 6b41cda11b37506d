//! kNN classification, micro/macro F1 scoring, and the cross-validated
//! grid-search protocol: 5 folds, each a test fold once; per fold three
//! stratified 70/30 train/validation draws; the grid point with the best
//! mean validation micro F1 wins and is refit on all four folds.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embeddings::EmbeddingTable;
use crate::scalar::Scalar;
use crate::simgraph::{build_propagation, PropagationMatrix, SimGraphError};
use crate::weighting::{
    bm25_vector, cptw_idf_vector, cptw_vector, tf_vector, tfidf_vector, we_avg_vector, Bm25Params,
    Bm25Stats, CptwIdfMode, DocVector, IdfTable, SifModel, WeightingError,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k = {k} exceeds the {train} training points")]
    KTooLarge { k: usize, train: usize },
    #[error("truth and prediction lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least one prediction")]
    EmptyPredictions,
    #[error("cross validation needs at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("cross validation needs at least 10 documents, found {0}")]
    TooFewDocuments(usize),
    #[error("scheme {0} requires an embedding table")]
    SchemeNeedsEmbeddings(&'static str),
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error("the cosine metric applies to dense schemes only; {0} is sparse")]
    CosineOnSparseScheme(&'static str),
    #[error("split file: {0}")]
    BadSplitFile(String),
    #[error(transparent)]
    Weighting(#[from] WeightingError),
    #[error(transparent)]
    SimGraph(#[from] SimGraphError),
}

/// Distance used by the kNN classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        }
    }
}

/// Whether sparse document vectors are L2-normalized before distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    L2,
    None,
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::L2 => "l2",
            Normalization::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l2" => Some(Normalization::L2),
            "none" => Some(Normalization::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Bow,
    Tfidf,
    Bm25,
    Cptw,
    CptwIdf,
    WeAvg,
    Sif,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Bow,
        Scheme::Tfidf,
        Scheme::Bm25,
        Scheme::Cptw,
        Scheme::CptwIdf,
        Scheme::WeAvg,
        Scheme::Sif,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Bow => "bow",
            Scheme::Tfidf => "tfidf",
            Scheme::Bm25 => "bm25",
            Scheme::Cptw => "cptw",
            Scheme::CptwIdf => "cptw-idf",
            Scheme::WeAvg => "we-avg",
            Scheme::Sif => "sif",
        }
    }

    pub fn parse(s: &str) -> Result<Self, EvalError> {
        Self::ALL
            .iter()
            .copied()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| EvalError::UnknownScheme(s.to_string()))
    }

    pub fn needs_embeddings(&self) -> bool {
        matches!(
            self,
            Scheme::Cptw | Scheme::CptwIdf | Scheme::WeAvg | Scheme::Sif
        )
    }

    pub fn is_sparse(&self) -> bool {
        !matches!(self, Scheme::WeAvg | Scheme::Sif)
    }
}

/// Hyperparameter grids searched by [`cross_validate`]. Defaults follow
/// the documented steps: k 1..19 step 1, τ 0..1 step 0.05 (0 mapped to
/// the minimum supported τ), BM25 k1 step 0.25 and b step 0.1, SIF α in
/// {1e-2..1e-5}.
#[derive(Debug, Clone, Serialize)]
pub struct Grids {
    pub k: Vec<usize>,
    pub tau: Vec<f64>,
    pub bm25_k1: Vec<f64>,
    pub bm25_b: Vec<f64>,
    pub sif_alpha: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            k: (1..=19).collect(),
            tau: (0..=20)
                .map(|i| crate::simgraph::effective_tau(i as f64 * 0.05).0)
                .collect(),
            bm25_k1: vec![1.0, 1.25, 1.5, 1.75, 2.0],
            bm25_b: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            sif_alpha: vec![1e-2, 1e-3, 1e-4, 1e-5],
        }
    }
}

/// One resolved grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSet {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ParamSet {
    pub fn plain(k: usize) -> Self {
        Self {
            k,
            tau: None,
            k1: None,
            b: None,
            alpha: None,
        }
    }
}

/// Representation-level parameters (everything except k).
#[derive(Debug, Clone, Copy, PartialEq)]
enum RepParams {
    Plain,
    Tau(f64),
    Bm25 { k1: f64, b: f64 },
    Alpha(f64),
}

impl RepParams {
    fn param_set(&self, k: usize) -> ParamSet {
        let mut p = ParamSet::plain(k);
        match *self {
            RepParams::Plain => {}
            RepParams::Tau(tau) => p.tau = Some(tau),
            RepParams::Bm25 { k1, b } => {
                p.k1 = Some(k1);
                p.b = Some(b);
            }
            RepParams::Alpha(alpha) => p.alpha = Some(alpha),
        }
        p
    }
}

fn rep_points(scheme: Scheme, grids: &Grids) -> Vec<RepParams> {
    match scheme {
        Scheme::Bow | Scheme::Tfidf | Scheme::WeAvg => vec![RepParams::Plain],
        Scheme::Bm25 => {
            let mut out = Vec::new();
            for &k1 in &grids.bm25_k1 {
                for &b in &grids.bm25_b {
                    out.push(RepParams::Bm25 { k1, b });
                }
            }
            out
        }
        Scheme::Cptw | Scheme::CptwIdf => grids
            .tau
            .iter()
            .map(|&t| RepParams::Tau(crate::simgraph::effective_tau(t).0))
            .collect(),
        Scheme::Sif => grids
            .sif_alpha
            .iter()
            .map(|&a| RepParams::Alpha(a))
            .collect(),
    }
}

/// Fold assignment: document index → fold. Stratified by label with
/// seeded shuffling; classes smaller than the fold count are flagged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of: Vec<u32>,
    pub n_folds: usize,
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    pub fn docs_in_fold(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&d| self.fold_of[d] == fold as u32)
            .collect()
    }

    pub fn docs_outside_fold(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&d| self.fold_of[d] != fold as u32)
            .collect()
    }
}

/// Stratified fold assignment. A rolling counter across classes keeps the
/// fold sizes balanced; per class of size ≥ n_folds the split is
/// stratified, smaller classes are assigned the same way but flagged.
pub fn assign_folds(corpus: &Corpus, n_folds: usize, seed: u64) -> FoldAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0u32; corpus.n_docs()];
    let mut warnings = Vec::new();
    let mut counter = 0usize;
    for (class_idx, class) in corpus.classes().iter().enumerate() {
        let mut members: Vec<usize> = (0..corpus.n_docs())
            .filter(|&d| corpus.class_of(d) == class_idx as u32)
            .collect();
        if members.len() < n_folds {
            warnings.push(format!(
                "class {class:?} has {} members, fewer than {n_folds} folds; its assignment is not stratified",
                members.len()
            ));
        }
        members.shuffle(&mut rng);
        for d in members {
            fold_of[d] = (counter % n_folds) as u32;
            counter += 1;
        }
    }
    FoldAssignment {
        fold_of,
        n_folds,
        warnings,
    }
}

/// Parses an explicit split file: one `doc_id<TAB>fold` line per document.
pub fn parse_split_file(
    text: &str,
    corpus: &Corpus,
    n_folds: usize,
) -> Result<FoldAssignment, EvalError> {
    let mut by_id: HashMap<&str, usize> = HashMap::new();
    for (d, doc) in corpus.documents().iter().enumerate() {
        by_id.insert(doc.id.as_str(), d);
    }
    let mut fold_of = vec![u32::MAX; corpus.n_docs()];
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, fold) = line
            .split_once('\t')
            .ok_or_else(|| EvalError::BadSplitFile(format!("line {}: missing tab", i + 1)))?;
        let fold: usize = fold.trim().parse().map_err(|_| {
            EvalError::BadSplitFile(format!("line {}: fold {:?} is not an integer", i + 1, fold))
        })?;
        if fold >= n_folds {
            return Err(EvalError::BadSplitFile(format!(
                "line {}: fold {fold} out of range 0..{n_folds}",
                i + 1
            )));
        }
        let &doc = by_id.get(id).ok_or_else(|| {
            EvalError::BadSplitFile(format!("line {}: unknown document id {id:?}", i + 1))
        })?;
        fold_of[doc] = fold as u32;
    }
    if let Some(d) = fold_of.iter().position(|&f| f == u32::MAX) {
        return Err(EvalError::BadSplitFile(format!(
            "document {:?} has no fold assignment",
            corpus.document(d).id
        )));
    }
    Ok(FoldAssignment {
        fold_of,
        n_folds,
        warnings: Vec::new(),
    })
}

/// Stratified 70/30 train/validation split of `docs`, sampled without
/// replacement with the supplied RNG. Outputs are sorted by doc index.
pub fn stratified_train_val(
    docs: &[usize],
    class_of: &[u32],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &d in docs {
        by_class.entry(class_of[d]).or_default().push(d);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (_, mut members) in by_class {
        members.sort_unstable();
        members.shuffle(rng);
        let n = members.len();
        let n_train = if n >= 2 {
            ((0.7 * n as f64).round() as usize).clamp(1, n - 1)
        } else {
            n
        };
        train.extend_from_slice(&members[..n_train]);
        val.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn distance<S: Scalar>(
    a: &DocVector<S>,
    b: &DocVector<S>,
    metric: Metric,
) -> Result<S, WeightingError> {
    match metric {
        Metric::Euclidean => a.euclidean(b),
        Metric::Cosine => a.cosine_distance(b),
    }
}

/// Training neighbours of a query, sorted by (distance, doc id).
fn rank_neighbors<S: Scalar>(
    source: &VecSource<'_, S>,
    train: &[usize],
    query: &DocVector<S>,
    metric: Metric,
) -> Result<Vec<(S, usize)>, EvalError> {
    let mut ranked = Vec::with_capacity(train.len());
    for &t in train {
        let d = distance(source.get(t), query, metric)?;
        ranked.push((d, t));
    }
    ranked.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("distances are comparable")
            .then(a.1.cmp(&b.1))
    });
    Ok(ranked)
}

/// Majority vote over the k nearest; vote ties fall to the label with the
/// smaller summed distance, then the smaller class index.
fn vote<S: Scalar>(ranked: &[(S, usize)], class_of: &[u32], k: usize) -> u32 {
    let k = k.min(ranked.len());
    let mut tally: BTreeMap<u32, (usize, S)> = BTreeMap::new();
    for &(d, t) in &ranked[..k] {
        let entry = tally.entry(class_of[t]).or_insert((0, S::zero()));
        entry.0 += 1;
        entry.1 += d;
    }
    let mut best: Option<(u32, usize, S)> = None;
    for (class, (count, dist)) in tally {
        let better = match &best {
            None => true,
            Some((_, bc, bd)) => count > *bc || (count == *bc && dist < *bd),
        };
        if better {
            best = Some((class, count, dist));
        }
    }
    best.expect("k >= 1").0
}

/// Majority label among the k Euclidean-nearest training points.
///
/// Each training point carries a stable id; distance ties are broken by
/// the smaller id, vote ties by the smaller total distance to the query,
/// then by the smaller label. Predictions therefore depend only on the
/// multiset of (id, vector, label) triples, not on their order.
pub fn knn_predict<S: Scalar, L: Ord + Clone>(
    train: &[(usize, DocVector<S>, L)],
    query: &DocVector<S>,
    k: usize,
) -> Result<L, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptyTrainingSet);
    }
    if k == 0 || k > train.len() {
        return Err(EvalError::KTooLarge {
            k,
            train: train.len(),
        });
    }
    let mut ranked: Vec<(S, usize, &L)> = Vec::with_capacity(train.len());
    for (id, v, label) in train {
        ranked.push((query.euclidean(v)?, *id, label));
    }
    ranked.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("distances are comparable")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(b.2))
    });
    let mut tally: BTreeMap<&L, (usize, S)> = BTreeMap::new();
    for (d, _, label) in &ranked[..k] {
        let entry = tally.entry(label).or_insert((0, S::zero()));
        entry.0 += 1;
        entry.1 += *d;
    }
    let mut best: Option<(&L, usize, S)> = None;
    for (label, (count, dist)) in tally {
        let better = match &best {
            None => true,
            Some((_, bc, bd)) => count > *bc || (count == *bc && dist < *bd),
        };
        if better {
            best = Some((label, count, dist));
        }
    }
    Ok(best.expect("k >= 1").0.clone())
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let p = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let r = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if p + r == 0.0 {
        0.0
    } else if p == r {
        // Harmonic mean of equal values; avoids needless rounding.
        p
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Global-count F1. For single-label multiclass prediction this equals
/// plain accuracy.
pub fn micro_f1<L: Eq + std::hash::Hash>(truth: &[L], pred: &[L]) -> Result<f64, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let tp = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    let fp = truth.len() - tp;
    Ok(f1_from_counts(tp, fp, fp))
}

/// Unweighted mean of per-class F1 over the classes present in
/// truth ∪ pred; a class with zero precision and recall scores 0.
pub fn macro_f1<L: Eq + std::hash::Hash + Ord>(truth: &[L], pred: &[L]) -> Result<f64, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let mut classes: Vec<&L> = truth
        .iter()
        .chain(pred.iter())
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    classes.sort();
    let mut sum = 0.0;
    for class in &classes {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (t, p) in truth.iter().zip(pred) {
            let t_is = t == *class;
            let p_is = p == *class;
            match (t_is, p_is) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        sum += f1_from_counts(tp, fp, fn_);
    }
    Ok(sum / classes.len() as f64)
}

/// Cross-validation configuration; see [`cross_validate`].
#[derive(Debug, Clone)]
pub struct CvConfig {
    pub schemes: Vec<Scheme>,
    pub grids: Grids,
    pub seed: u64,
    pub n_folds: usize,
    pub n_draws: usize,
    pub normalize: Normalization,
    pub metric: Metric,
    pub idf_mode: CptwIdfMode,
    pub split: Option<FoldAssignment>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Bow],
            grids: Grids::default(),
            seed: 0,
            n_folds: 5,
            n_draws: 3,
            normalize: Normalization::L2,
            metric: Metric::Euclidean,
            idf_mode: CptwIdfMode::default(),
            split: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub params: ParamSet,
    /// Mean validation micro F1 of the winning grid point.
    pub validation_micro_f1: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SchemeReport {
    pub scheme: String,
    pub folds: Vec<FoldReport>,
    pub mean_micro_f1: f64,
    pub mean_macro_f1: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EvalReport {
    pub seed: u64,
    pub n_folds: usize,
    pub n_draws: usize,
    pub normalize: String,
    pub metric: String,
    pub idf_fit: String,
    pub fold_warnings: Vec<String>,
    pub schemes: Vec<SchemeReport>,
    /// Wall clock per (scheme, stage); excluded from serialized reports so
    /// identical runs stay byte-identical.
    #[serde(skip)]
    pub stage_seconds: Vec<(String, f64)>,
}

enum VecSource<'a, S> {
    Cached(&'a [DocVector<S>]),
    Owned(Vec<Option<DocVector<S>>>),
}

impl<'a, S: Scalar> VecSource<'a, S> {
    fn get(&self, doc: usize) -> &DocVector<S> {
        match self {
            VecSource::Cached(all) => &all[doc],
            VecSource::Owned(slots) => slots[doc]
                .as_ref()
                .expect("vector was computed for this document"),
        }
    }
}

struct SchemeCaches<'e, S: Scalar> {
    corpus_docs: Vec<usize>,
    emb: Option<&'e EmbeddingTable<S>>,
    bow: Option<Vec<DocVector<S>>>,
    weavg: Option<Vec<DocVector<S>>>,
    props: BTreeMap<u64, PropagationMatrix<S>>,
    cptw: BTreeMap<u64, Vec<DocVector<S>>>,
}

fn maybe_normalize<S: Scalar>(mut v: DocVector<S>, normalize: Normalization) -> DocVector<S> {
    if normalize == Normalization::L2 && v.is_sparse() {
        v.l2_normalize();
    }
    v
}

fn require_emb<S: Scalar>(
    emb: Option<&EmbeddingTable<S>>,
    scheme: Scheme,
) -> Result<&EmbeddingTable<S>, EvalError> {
    emb.ok_or(EvalError::SchemeNeedsEmbeddings(scheme.name()))
}

impl<'e, S: Scalar> SchemeCaches<'e, S> {
    fn new(corpus: &Corpus, emb: Option<&'e EmbeddingTable<S>>) -> Self {
        Self {
            corpus_docs: (0..corpus.n_docs()).collect(),
            emb,
            bow: None,
            weavg: None,
            props: BTreeMap::new(),
            cptw: BTreeMap::new(),
        }
    }

    /// Precomputes everything for a scheme that does not depend on the
    /// training split: BOW and WE-AVG vectors, propagation matrices and
    /// CPTW vectors per τ.
    fn prepare(
        &mut self,
        scheme: Scheme,
        reps: &[RepParams],
        corpus: &Corpus,
        cfg: &CvConfig,
    ) -> Result<(), EvalError> {
        match scheme {
            Scheme::Bow if self.bow.is_none() => {
                let vecs = self
                    .corpus_docs
                    .par_iter()
                    .map(|&d| maybe_normalize(tf_vector(corpus, d), cfg.normalize))
                    .collect();
                self.bow = Some(vecs);
            }
            Scheme::WeAvg if self.weavg.is_none() => {
                let emb = require_emb(self.emb, scheme)?;
                let vecs = self
                    .corpus_docs
                    .par_iter()
                    .map(|&d| we_avg_vector(corpus, d, emb))
                    .collect();
                self.weavg = Some(vecs);
            }
            Scheme::Cptw | Scheme::CptwIdf => {
                let emb = require_emb(self.emb, scheme)?;
                for rep in reps {
                    let RepParams::Tau(tau) = rep else { continue };
                    let bits = tau.to_bits();
                    if let std::collections::btree_map::Entry::Vacant(e) = self.props.entry(bits) {
                        e.insert(build_propagation(emb, corpus, *tau)?);
                    }
                    if scheme == Scheme::Cptw && !self.cptw.contains_key(&bits) {
                        let p = &self.props[&bits];
                        let vecs: Result<Vec<_>, WeightingError> = self
                            .corpus_docs
                            .par_iter()
                            .map(|&d| {
                                cptw_vector(corpus, d, p).map(|v| maybe_normalize(v, cfg.normalize))
                            })
                            .collect();
                        self.cptw.insert(bits, vecs?);
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Vectors for `wanted` docs under one representation, with
    /// statistics (idf / BM25 / SIF) fitted on `stat_docs` only.
    #[allow(clippy::too_many_arguments)]
    fn vectors(
        &self,
        scheme: Scheme,
        rep: &RepParams,
        corpus: &Corpus,
        stat_docs: &[usize],
        wanted: &[usize],
        cfg: &CvConfig,
        stats_tag: &str,
    ) -> Result<VecSource<'_, S>, EvalError> {
        let normalize = cfg.normalize;
        match (scheme, rep) {
            (Scheme::Bow, _) => Ok(VecSource::Cached(self.bow.as_ref().unwrap())),
            (Scheme::WeAvg, _) => Ok(VecSource::Cached(self.weavg.as_ref().unwrap())),
            (Scheme::Cptw, RepParams::Tau(tau)) => {
                Ok(VecSource::Cached(&self.cptw[&tau.to_bits()]))
            }
            (Scheme::Tfidf, _) => {
                let idf = IdfTable::from_docs(corpus, stat_docs, stats_tag);
                let mut slots = vec![None; corpus.n_docs()];
                let computed: Vec<(usize, DocVector<S>)> = wanted
                    .par_iter()
                    .map(|&d| (d, maybe_normalize(tfidf_vector(corpus, d, &idf), normalize)))
                    .collect();
                for (d, v) in computed {
                    slots[d] = Some(v);
                }
                Ok(VecSource::Owned(slots))
            }
            (Scheme::Bm25, RepParams::Bm25 { k1, b }) => {
                let stats = Bm25Stats::from_docs(corpus, stat_docs);
                let params = Bm25Params { k1: *k1, b: *b };
                let mut slots = vec![None; corpus.n_docs()];
                let computed: Vec<(usize, DocVector<S>)> = wanted
                    .par_iter()
                    .map(|&d| {
                        (
                            d,
                            maybe_normalize(bm25_vector(corpus, d, &stats, params), normalize),
                        )
                    })
                    .collect();
                for (d, v) in computed {
                    slots[d] = Some(v);
                }
                Ok(VecSource::Owned(slots))
            }
            (Scheme::CptwIdf, RepParams::Tau(tau)) => {
                let p = &self.props[&tau.to_bits()];
                let idf = IdfTable::from_docs(corpus, stat_docs, stats_tag);
                let mut slots = vec![None; corpus.n_docs()];
                let computed: Result<Vec<(usize, DocVector<S>)>, WeightingError> = wanted
                    .par_iter()
                    .map(|&d| {
                        cptw_idf_vector(corpus, d, p, &idf, cfg.idf_mode)
                            .map(|v| (d, maybe_normalize(v, normalize)))
                    })
                    .collect();
                for (d, v) in computed? {
                    slots[d] = Some(v);
                }
                Ok(VecSource::Owned(slots))
            }
            (Scheme::Sif, RepParams::Alpha(alpha)) => {
                let emb = require_emb(self.emb, scheme)?;
                let model = SifModel::fit(corpus, stat_docs, emb, *alpha)?;
                let mut slots = vec![None; corpus.n_docs()];
                let computed: Vec<(usize, DocVector<S>)> = wanted
                    .par_iter()
                    .map(|&d| (d, model.embed(corpus, d, emb)))
                    .collect();
                for (d, v) in computed {
                    slots[d] = Some(v);
                }
                Ok(VecSource::Owned(slots))
            }
            _ => unreachable!("representation parameters match the scheme"),
        }
    }
}

/// Scores `queries` against `train` for every k in `ks`, reusing one
/// neighbour ranking per query.
fn score_all_k<S: Scalar>(
    source: &VecSource<'_, S>,
    train: &[usize],
    queries: &[usize],
    class_of: &[u32],
    ks: &[usize],
    metric: Metric,
) -> Result<Vec<Vec<u32>>, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptyTrainingSet);
    }
    let rankings: Result<Vec<Vec<(S, usize)>>, EvalError> = queries
        .par_iter()
        .map(|&q| rank_neighbors(source, train, source.get(q), metric))
        .collect();
    let rankings = rankings?;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let preds = rankings
            .iter()
            .map(|ranked| vote(ranked, class_of, k))
            .collect();
        out.push(preds);
    }
    Ok(out)
}

/// Runs the full cross-validated grid search and returns per-fold and
/// aggregate scores with the chosen hyperparameters.
///
/// Deterministic for a given seed and independent of thread count: all
/// randomness flows through seeded generators and results are assembled
/// in (scheme, fold, grid-index) order.
pub fn cross_validate<S: Scalar>(
    corpus: &Corpus,
    emb: Option<&EmbeddingTable<S>>,
    cfg: &CvConfig,
) -> Result<EvalReport, EvalError> {
    let n_classes = corpus.classes().len();
    if n_classes < 2 {
        return Err(EvalError::TooFewClasses(n_classes));
    }
    if corpus.n_docs() < 10 {
        return Err(EvalError::TooFewDocuments(corpus.n_docs()));
    }
    for scheme in &cfg.schemes {
        if scheme.needs_embeddings() && emb.is_none() {
            return Err(EvalError::SchemeNeedsEmbeddings(scheme.name()));
        }
        if cfg.metric == Metric::Cosine && scheme.is_sparse() {
            return Err(EvalError::CosineOnSparseScheme(scheme.name()));
        }
    }

    let assignment = match &cfg.split {
        Some(split) => split.clone(),
        None => assign_folds(corpus, cfg.n_folds, cfg.seed),
    };
    let class_of: Vec<u32> = (0..corpus.n_docs()).map(|d| corpus.class_of(d)).collect();

    let mut caches = SchemeCaches::new(corpus, emb);
    let mut scheme_reports = Vec::new();
    let mut stage_seconds = Vec::new();

    for &scheme in &cfg.schemes {
        let reps = rep_points(scheme, &cfg.grids);
        let prep_start = Instant::now();
        caches.prepare(scheme, &reps, corpus, cfg)?;
        stage_seconds.push((
            format!("{}/prepare", scheme.name()),
            prep_start.elapsed().as_secs_f64(),
        ));

        let search_start = Instant::now();
        let mut fold_reports = Vec::new();
        for fold in 0..assignment.n_folds {
            let trainval = assignment.docs_outside_fold(fold);
            let test = assignment.docs_in_fold(fold);
            if trainval.is_empty() || test.is_empty() {
                continue;
            }

            // scores[rep][k] accumulated across draws.
            let mut mean_scores = vec![vec![0.0f64; cfg.grids.k.len()]; reps.len()];
            for draw in 0..cfg.n_draws {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed.wrapping_add((fold * cfg.n_draws + draw) as u64),
                );
                let (train, val) = stratified_train_val(&trainval, &class_of, &mut rng);
                if train.is_empty() || val.is_empty() {
                    continue;
                }
                let truth: Vec<u32> = val.iter().map(|&d| class_of[d]).collect();
                let mut involved = train.clone();
                involved.extend_from_slice(&val);
                let tag = format!("fold{fold}-draw{draw}-train");
                for (ri, rep) in reps.iter().enumerate() {
                    let source =
                        caches.vectors(scheme, rep, corpus, &train, &involved, cfg, &tag)?;
                    let preds_by_k =
                        score_all_k(&source, &train, &val, &class_of, &cfg.grids.k, cfg.metric)?;
                    for (ki, preds) in preds_by_k.iter().enumerate() {
                        mean_scores[ri][ki] += micro_f1(&truth, preds)? / cfg.n_draws as f64;
                    }
                }
            }

            let mut best = (0usize, 0usize, f64::NEG_INFINITY);
            for (ri, row) in mean_scores.iter().enumerate() {
                for (ki, &score) in row.iter().enumerate() {
                    if score > best.2 {
                        best = (ri, ki, score);
                    }
                }
            }
            let (best_rep, best_k_idx, best_score) = best;
            let winning = reps[best_rep].param_set(cfg.grids.k[best_k_idx]);

            // Refit on all four folds with the winning parameters.
            let mut involved = trainval.clone();
            involved.extend_from_slice(&test);
            let tag = format!("fold{fold}-train");
            let source = caches.vectors(
                scheme,
                &reps[best_rep],
                corpus,
                &trainval,
                &involved,
                cfg,
                &tag,
            )?;
            let preds = score_all_k(
                &source,
                &trainval,
                &test,
                &class_of,
                &[winning.k],
                cfg.metric,
            )?
            .remove(0);
            let truth: Vec<u32> = test.iter().map(|&d| class_of[d]).collect();
            fold_reports.push(FoldReport {
                fold,
                params: winning,
                validation_micro_f1: best_score,
                micro_f1: micro_f1(&truth, &preds)?,
                macro_f1: macro_f1(&truth, &preds)?,
            });
        }
        stage_seconds.push((
            format!("{}/grid-search", scheme.name()),
            search_start.elapsed().as_secs_f64(),
        ));

        let n = fold_reports.len().max(1) as f64;
        let mean_micro = fold_reports.iter().map(|f| f.micro_f1).sum::<f64>() / n;
        let mean_macro = fold_reports.iter().map(|f| f.macro_f1).sum::<f64>() / n;
        scheme_reports.push(SchemeReport {
            scheme: scheme.name().to_string(),
            folds: fold_reports,
            mean_micro_f1: mean_micro,
            mean_macro_f1: mean_macro,
        });
    }

    Ok(EvalReport {
        seed: cfg.seed,
        n_folds: assignment.n_folds,
        n_draws: cfg.n_draws,
        normalize: cfg.normalize.name().to_string(),
        metric: cfg.metric.name().to_string(),
        idf_fit: "train-split".to_string(),
        fold_warnings: assignment.warnings.clone(),
        schemes: scheme_reports,
        stage_seconds,
    })
}
