//! Document vectors: TF, TF-IDF, BM25, the contextually propagated
//! variants CPTW / CPTW-IDF, and the dense embedding baselines WE-AVG and
//! SIF.
//!
//! Sparse vectors live in the M-dimensional vocabulary space; dense
//! vectors live in the embedding space. All operations are pure functions
//! over immutable inputs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embeddings::EmbeddingTable;
use crate::scalar::{cast, cast_usize, Scalar};
use crate::simgraph::{PropagationMatrix, SimGraphError};

#[derive(Debug, Error)]
pub enum WeightingError {
    #[error(transparent)]
    Matrix(#[from] SimGraphError),
    #[error("cannot mix sparse and dense vectors")]
    KindMismatch,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("propagation entry ({row},{col}) is not positive; the idf log is undefined")]
    NonPositivePropagation { row: usize, col: usize },
    #[error("sif requires a non-empty training split")]
    EmptySifTraining,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormState {
    Raw,
    Unit,
}

/// A sparse (vocabulary-space) or dense (embedding-space) document vector.
///
/// Sparse indices are strictly increasing and never hold explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector<S> {
    data: VectorData<S>,
    norm: NormState,
}

#[derive(Debug, Clone, PartialEq)]
enum VectorData<S> {
    Sparse {
        dim: usize,
        indices: Vec<u32>,
        values: Vec<S>,
    },
    Dense {
        values: Vec<S>,
    },
}

impl<S: Scalar> DocVector<S> {
    /// Builds a sparse vector from (index, value) pairs sorted by index.
    /// Exact zeros are dropped.
    pub fn sparse(dim: usize, pairs: impl IntoIterator<Item = (u32, S)>) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in pairs {
            debug_assert!((i as usize) < dim);
            debug_assert!(
                indices.last().is_none_or(|&last| i > last),
                "indices must ascend"
            );
            if v != S::zero() {
                indices.push(i);
                values.push(v);
            }
        }
        Self {
            data: VectorData::Sparse {
                dim,
                indices,
                values,
            },
            norm: NormState::Raw,
        }
    }

    pub fn dense(values: Vec<S>) -> Self {
        Self {
            data: VectorData::Dense { values },
            norm: NormState::Raw,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.data, VectorData::Sparse { .. })
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            VectorData::Sparse { dim, .. } => *dim,
            VectorData::Dense { values } => values.len(),
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.data {
            VectorData::Sparse { indices, .. } => indices.len(),
            VectorData::Dense { values } => values.iter().filter(|v| **v != S::zero()).count(),
        }
    }

    pub fn norm_state(&self) -> NormState {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        match &self.data {
            VectorData::Sparse { values, .. } => values.is_empty(),
            VectorData::Dense { values } => values.iter().all(|v| *v == S::zero()),
        }
    }

    /// Sparse (indices, values) slices, if this vector is sparse.
    pub fn sparse_parts(&self) -> Option<(&[u32], &[S])> {
        match &self.data {
            VectorData::Sparse {
                indices, values, ..
            } => Some((indices, values)),
            VectorData::Dense { .. } => None,
        }
    }

    pub fn dense_values(&self) -> Option<&[S]> {
        match &self.data {
            VectorData::Dense { values } => Some(values),
            VectorData::Sparse { .. } => None,
        }
    }

    /// Component at `idx`, materializing implicit zeros.
    pub fn value_at(&self, idx: usize) -> S {
        match &self.data {
            VectorData::Sparse {
                indices, values, ..
            } => match indices.binary_search(&(idx as u32)) {
                Ok(pos) => values[pos],
                Err(_) => S::zero(),
            },
            VectorData::Dense { values } => values[idx],
        }
    }

    pub fn to_dense(&self) -> Vec<S> {
        match &self.data {
            VectorData::Dense { values } => values.clone(),
            VectorData::Sparse {
                dim,
                indices,
                values,
            } => {
                let mut out = vec![S::zero(); *dim];
                for (i, v) in indices.iter().zip(values) {
                    out[*i as usize] = *v;
                }
                out
            }
        }
    }

    pub fn l2_norm(&self) -> S {
        let sum = match &self.data {
            VectorData::Sparse { values, .. } => {
                let mut acc = S::zero();
                for v in values {
                    acc += *v * *v;
                }
                acc
            }
            VectorData::Dense { values } => {
                let mut acc = S::zero();
                for v in values {
                    acc += *v * *v;
                }
                acc
            }
        };
        sum.sqrt()
    }

    /// Scales to unit norm; zero vectors pass through unchanged. Either
    /// way the vector is marked unit-normalized.
    pub fn l2_normalize(&mut self) {
        let norm = self.l2_norm();
        if norm > S::zero() {
            let inv = S::one() / norm;
            match &mut self.data {
                VectorData::Sparse { values, .. } | VectorData::Dense { values } => {
                    for v in values.iter_mut() {
                        *v *= inv;
                    }
                }
            }
        }
        self.norm = NormState::Unit;
    }

    pub fn l2_normalized(mut self) -> Self {
        self.l2_normalize();
        self
    }

    pub fn dot(&self, other: &Self) -> Result<S, WeightingError> {
        self.check_compatible(other)?;
        Ok(match (&self.data, &other.data) {
            (
                VectorData::Sparse {
                    indices: ia,
                    values: va,
                    ..
                },
                VectorData::Sparse {
                    indices: ib,
                    values: vb,
                    ..
                },
            ) => {
                let mut acc = S::zero();
                let (mut a, mut b) = (0usize, 0usize);
                while a < ia.len() && b < ib.len() {
                    match ia[a].cmp(&ib[b]) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[a] * vb[b];
                            a += 1;
                            b += 1;
                        }
                    }
                }
                acc
            }
            (VectorData::Dense { values: va }, VectorData::Dense { values: vb }) => {
                crate::scalar::dot(va, vb)
            }
            _ => unreachable!("check_compatible rejects mixed kinds"),
        })
    }

    /// Euclidean distance, merging sparse index lists without
    /// densification.
    pub fn euclidean(&self, other: &Self) -> Result<S, WeightingError> {
        self.check_compatible(other)?;
        let sum = match (&self.data, &other.data) {
            (
                VectorData::Sparse {
                    indices: ia,
                    values: va,
                    ..
                },
                VectorData::Sparse {
                    indices: ib,
                    values: vb,
                    ..
                },
            ) => {
                let mut acc = S::zero();
                let (mut a, mut b) = (0usize, 0usize);
                while a < ia.len() || b < ib.len() {
                    let d = if b >= ib.len() || (a < ia.len() && ia[a] < ib[b]) {
                        let d = va[a];
                        a += 1;
                        d
                    } else if a >= ia.len() || ib[b] < ia[a] {
                        let d = vb[b];
                        b += 1;
                        d
                    } else {
                        let d = va[a] - vb[b];
                        a += 1;
                        b += 1;
                        d
                    };
                    acc += d * d;
                }
                acc
            }
            (VectorData::Dense { values: va }, VectorData::Dense { values: vb }) => {
                let mut acc = S::zero();
                for (x, y) in va.iter().zip(vb) {
                    let d = *x - *y;
                    acc += d * d;
                }
                acc
            }
            _ => unreachable!("check_compatible rejects mixed kinds"),
        };
        Ok(sum.sqrt())
    }

    /// Cosine distance 1 − cos(a,b); zero vectors are at distance 1 from
    /// everything.
    pub fn cosine_distance(&self, other: &Self) -> Result<S, WeightingError> {
        let denom = self.l2_norm() * other.l2_norm();
        if denom == S::zero() {
            return Ok(S::one());
        }
        Ok(S::one() - self.dot(other)? / denom)
    }

    fn check_compatible(&self, other: &Self) -> Result<(), WeightingError> {
        if self.is_sparse() != other.is_sparse() {
            return Err(WeightingError::KindMismatch);
        }
        if self.dim() != other.dim() {
            return Err(WeightingError::DimMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

/// Returns a unit-normalized copy; zero vectors pass through unchanged.
pub fn l2_normalize<S: Scalar>(v: &DocVector<S>) -> DocVector<S> {
    v.clone().l2_normalized()
}

/// Per-word ln(N/df) computed on a designated document set, with the
/// provenance of that set recorded.
///
/// Words absent from the set carry no entry and weigh zero when looked
/// up, which happens when the table is fitted on a training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable<S> {
    idf: Vec<Option<S>>,
    n_docs: usize,
    provenance: String,
}

impl<S: Scalar> IdfTable<S> {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let n = corpus.n_docs();
        let idf = corpus
            .doc_freqs()
            .iter()
            .map(|&df| {
                if df == 0 {
                    None
                } else {
                    Some(cast::<S>((n as f64 / df as f64).ln()))
                }
            })
            .collect();
        Self {
            idf,
            n_docs: n,
            provenance: "full-corpus".into(),
        }
    }

    /// Recomputes document frequencies on `docs` only.
    pub fn from_docs(corpus: &Corpus, docs: &[usize], provenance: &str) -> Self {
        let n = docs.len();
        let mut df = vec![0u32; corpus.vocab_size()];
        for &d in docs {
            for &(idx, _) in corpus.term_counts(d) {
                df[idx as usize] += 1;
            }
        }
        let idf = df
            .iter()
            .map(|&df| {
                if df == 0 {
                    None
                } else {
                    Some(cast::<S>((n as f64 / df as f64).ln()))
                }
            })
            .collect();
        Self {
            idf,
            n_docs: n,
            provenance: provenance.into(),
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn idf(&self, token_idx: u32) -> Option<S> {
        self.idf.get(token_idx as usize).copied().flatten()
    }

    /// Words with no entry weigh zero.
    pub fn idf_or_zero(&self, token_idx: u32) -> S {
        self.idf(token_idx).unwrap_or_else(S::zero)
    }

    /// Vocabulary words without an entry (df = 0 on the fitted set).
    pub fn missing_words(&self) -> usize {
        self.idf.iter().filter(|v| v.is_none()).count()
    }
}

/// Raw term-frequency vector: f(w,d) at each present word.
pub fn tf_vector<S: Scalar>(corpus: &Corpus, doc: usize) -> DocVector<S> {
    DocVector::sparse(
        corpus.vocab_size(),
        corpus
            .term_counts(doc)
            .iter()
            .map(|&(i, c)| (i, cast_usize::<S>(c as usize))),
    )
}

/// f(w,d) · ln(N/df(w)).
pub fn tfidf_vector<S: Scalar>(corpus: &Corpus, doc: usize, idf: &IdfTable<S>) -> DocVector<S> {
    DocVector::sparse(
        corpus.vocab_size(),
        corpus
            .term_counts(doc)
            .iter()
            .map(|&(i, c)| (i, cast_usize::<S>(c as usize) * idf.idf_or_zero(i))),
    )
}

/// Document-frequency and length statistics BM25 needs, computable on the
/// full corpus or on a training subset.
#[derive(Debug, Clone)]
pub struct Bm25Stats {
    n_docs: usize,
    doc_freq: Vec<u32>,
    avgdl: f64,
}

impl Bm25Stats {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let docs: Vec<usize> = (0..corpus.n_docs()).collect();
        Self::from_docs(corpus, &docs)
    }

    pub fn from_docs(corpus: &Corpus, docs: &[usize]) -> Self {
        let mut doc_freq = vec![0u32; corpus.vocab_size()];
        let mut total_len = 0u64;
        for &d in docs {
            for &(idx, _) in corpus.term_counts(d) {
                doc_freq[idx as usize] += 1;
            }
            total_len += corpus.doc_len(d) as u64;
        }
        let avgdl = if docs.is_empty() {
            0.0
        } else {
            total_len as f64 / docs.len() as f64
        };
        Self {
            n_docs: docs.len(),
            doc_freq,
            avgdl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Robertson–Sparck-Jones BM25 with +1 idf smoothing:
/// idf(w) · f·(k1+1) / (f + k1·(1 − b + b·dl/avgdl)),
/// idf(w) = ln(1 + (N − df + 0.5)/(df + 0.5)).
pub fn bm25_vector<S: Scalar>(
    corpus: &Corpus,
    doc: usize,
    stats: &Bm25Stats,
    params: Bm25Params,
) -> DocVector<S> {
    let dl = corpus.doc_len(doc) as f64;
    let len_norm = if stats.avgdl > 0.0 {
        1.0 - params.b + params.b * dl / stats.avgdl
    } else {
        1.0
    };
    let n = stats.n_docs as f64;
    DocVector::sparse(
        corpus.vocab_size(),
        corpus.term_counts(doc).iter().map(|&(i, c)| {
            let f = c as f64;
            let df = stats.doc_freq[i as usize] as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let w = idf * f * (params.k1 + 1.0) / (f + params.k1 * len_norm);
            (i, cast::<S>(w))
        }),
    )
}

/// Recovers the propagation entry (j,k) from the stored row k: the
/// similarity pattern is symmetric, so sim(j,k) = P(k,j)/α_k and
/// P(j,k) = α_j · sim(j,k).
#[inline]
fn propagation_entry<S: Scalar>(alpha_j: S, alpha_k: S, p_kj: S) -> S {
    alpha_j * (p_kj / alpha_k)
}

/// Contextually propagated term weights: the sparse product P·tf(d),
/// gathered column-wise over the document's words so cost scales with the
/// touched rows rather than the full matrix.
pub fn cptw_vector<S: Scalar>(
    corpus: &Corpus,
    doc: usize,
    p: &PropagationMatrix<S>,
) -> Result<DocVector<S>, WeightingError> {
    p.check_corpus(corpus)?;
    let mut acc: BTreeMap<u32, S> = BTreeMap::new();
    for &(k, count) in corpus.term_counts(doc) {
        let f = cast_usize::<S>(count as usize);
        let alpha_k = p.alpha(k as usize);
        let (cols, vals) = p.row(k as usize);
        for (j, p_kj) in cols.iter().zip(vals) {
            let alpha_j = p.alpha(*j as usize);
            let p_jk = propagation_entry(alpha_j, alpha_k, *p_kj);
            *acc.entry(*j).or_insert_with(S::zero) += f * p_jk;
        }
    }
    Ok(DocVector::sparse(corpus.vocab_size(), acc))
}

/// Where the propagation weight sits relative to the idf logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CptwIdfMode {
    /// The printed formula: each neighbour contributes
    /// f · P(j,k) · ln((N/df(k)) · P(j,k)).
    #[default]
    WeightInsideLog,
    /// Alternative reading with the weight outside the logarithm: each
    /// neighbour contributes f · P(j,k) · ln(N/df(k)), i.e. P applied to
    /// the TF-IDF vector.
    WeightOutsideLog,
}

/// CPTW with the idf component propagated through the neighbourhood.
///
/// Components may legitimately be negative (the log of a product below 1)
/// and are preserved as such.
pub fn cptw_idf_vector<S: Scalar>(
    corpus: &Corpus,
    doc: usize,
    p: &PropagationMatrix<S>,
    idf: &IdfTable<S>,
    mode: CptwIdfMode,
) -> Result<DocVector<S>, WeightingError> {
    p.check_corpus(corpus)?;
    let mut acc: BTreeMap<u32, S> = BTreeMap::new();
    for &(k, count) in corpus.term_counts(doc) {
        let f = cast_usize::<S>(count as usize);
        let idf_k = idf.idf_or_zero(k);
        let alpha_k = p.alpha(k as usize);
        let (cols, vals) = p.row(k as usize);
        for (j, p_kj) in cols.iter().zip(vals) {
            let alpha_j = p.alpha(*j as usize);
            let p_jk = propagation_entry(alpha_j, alpha_k, *p_kj);
            if p_jk <= S::zero() {
                return Err(WeightingError::NonPositivePropagation {
                    row: *j as usize,
                    col: k as usize,
                });
            }
            let weight = match mode {
                CptwIdfMode::WeightInsideLog => p_jk * (idf_k + p_jk.ln()),
                CptwIdfMode::WeightOutsideLog => p_jk * idf_k,
            };
            *acc.entry(*j).or_insert_with(S::zero) += f * weight;
        }
    }
    Ok(DocVector::sparse(corpus.vocab_size(), acc))
}

/// Mean of the embedding vectors of the document's tokens (multiplicity
/// respected); the zero vector when no token is embedded.
pub fn we_avg_vector<S: Scalar>(
    corpus: &Corpus,
    doc: usize,
    emb: &EmbeddingTable<S>,
) -> DocVector<S> {
    let mut sum = vec![S::zero(); emb.dim()];
    let mut found = 0usize;
    for &(idx, count) in corpus.term_counts(doc) {
        if let Some(v) = emb.get(corpus.token(idx)) {
            let c = cast_usize::<S>(count as usize);
            for (s, x) in sum.iter_mut().zip(v) {
                *s += c * *x;
            }
            found += count as usize;
        }
    }
    if found > 0 {
        let inv = S::one() / cast_usize::<S>(found);
        for s in sum.iter_mut() {
            *s *= inv;
        }
    }
    DocVector::dense(sum)
}

/// Relative token frequencies over `docs`, per vocabulary index.
pub fn word_probabilities<S: Scalar>(corpus: &Corpus, docs: &[usize]) -> Vec<S> {
    let mut counts = vec![0u64; corpus.vocab_size()];
    let mut total = 0u64;
    for &d in docs {
        for &(idx, c) in corpus.term_counts(d) {
            counts[idx as usize] += c as u64;
            total += c as u64;
        }
    }
    counts
        .into_iter()
        .map(|c| {
            if total == 0 {
                S::zero()
            } else {
                cast::<S>(c as f64 / total as f64)
            }
        })
        .collect()
}

const POWER_ITERATION_SEED: u64 = 0x5349_4631;
const POWER_ITERATION_TOL: f64 = 1e-10;
const POWER_ITERATION_MAX: usize = 1000;

/// Dominant right singular direction of the row-stacked vectors, via
/// power iteration on the Gram matrix (tolerance 1e-10, at most 1000
/// iterations, fixed-seed start). Returns the zero vector when the rows
/// are all zero.
fn dominant_direction<S: Scalar>(rows: &[Vec<S>], dim: usize) -> Vec<S> {
    let mut gram = vec![0.0f64; dim * dim];
    for row in rows {
        for a in 0..dim {
            let xa = row[a].as_f64();
            if xa == 0.0 {
                continue;
            }
            for b in 0..dim {
                gram[a * dim + b] += xa * row[b].as_f64();
            }
        }
    }
    if gram.iter().all(|&g| g == 0.0) {
        return vec![S::zero(); dim];
    }

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in u.iter_mut() {
        *x /= norm;
    }

    for _ in 0..POWER_ITERATION_MAX {
        let mut v = vec![0.0f64; dim];
        for a in 0..dim {
            let mut acc = 0.0;
            for b in 0..dim {
                acc += gram[a * dim + b] * u[b];
            }
            v[a] = acc;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return vec![S::zero(); dim];
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        let diff = v
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        u = v;
        if diff <= POWER_ITERATION_TOL {
            break;
        }
    }
    u.into_iter().map(cast::<S>).collect()
}

/// Smooth-inverse-frequency embedding model: word weights
/// alpha/(alpha + p(w)) fitted probabilities and the first principal
/// direction of the training vectors, which is removed from every output.
#[derive(Debug, Clone)]
pub struct SifModel<S> {
    alpha: S,
    probs: Vec<S>,
    direction: Vec<S>,
    dim: usize,
}

impl<S: Scalar> SifModel<S> {
    pub fn fit(
        corpus: &Corpus,
        train_docs: &[usize],
        emb: &EmbeddingTable<S>,
        alpha: f64,
    ) -> Result<Self, WeightingError> {
        let probs = word_probabilities(corpus, train_docs);
        Self::fit_with_probs(corpus, train_docs, emb, alpha, probs)
    }

    /// Fits with externally supplied word probabilities.
    pub fn fit_with_probs(
        corpus: &Corpus,
        train_docs: &[usize],
        emb: &EmbeddingTable<S>,
        alpha: f64,
        probs: Vec<S>,
    ) -> Result<Self, WeightingError> {
        if train_docs.is_empty() {
            return Err(WeightingError::EmptySifTraining);
        }
        let mut model = Self {
            alpha: cast::<S>(alpha),
            probs,
            direction: Vec::new(),
            dim: emb.dim(),
        };
        let train_rows: Vec<Vec<S>> = train_docs
            .iter()
            .map(|&d| model.weighted_components(corpus, d, emb))
            .collect();
        model.direction = dominant_direction(&train_rows, emb.dim());
        Ok(model)
    }

    fn weighted_components(&self, corpus: &Corpus, doc: usize, emb: &EmbeddingTable<S>) -> Vec<S> {
        let mut sum = vec![S::zero(); self.dim];
        let mut found = 0usize;
        for &(idx, count) in corpus.term_counts(doc) {
            if let Some(v) = emb.get(corpus.token(idx)) {
                let p = self
                    .probs
                    .get(idx as usize)
                    .copied()
                    .unwrap_or_else(S::zero);
                let w = self.alpha / (self.alpha + p) * cast_usize::<S>(count as usize);
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += w * *x;
                }
                found += count as usize;
            }
        }
        if found > 0 {
            let inv = S::one() / cast_usize::<S>(found);
            for s in sum.iter_mut() {
                *s *= inv;
            }
        }
        sum
    }

    /// The weighted average before principal-direction removal.
    pub fn weighted_average(
        &self,
        corpus: &Corpus,
        doc: usize,
        emb: &EmbeddingTable<S>,
    ) -> DocVector<S> {
        DocVector::dense(self.weighted_components(corpus, doc, emb))
    }

    /// Weighted average with the fitted principal direction projected out.
    pub fn embed(&self, corpus: &Corpus, doc: usize, emb: &EmbeddingTable<S>) -> DocVector<S> {
        let mut x = self.weighted_components(corpus, doc, emb);
        let u = &self.direction;
        if !u.is_empty() {
            let mut proj = S::zero();
            for (a, b) in u.iter().zip(&x) {
                proj += *a * *b;
            }
            for (xi, ui) in x.iter_mut().zip(u) {
                *xi -= proj * *ui;
            }
        }
        DocVector::dense(x)
    }

    pub fn direction(&self) -> &[S] {
        &self.direction
    }
}

/// Fits on the training docs and embeds every document in `apply_docs`.
pub fn sif_vectors<S: Scalar>(
    corpus: &Corpus,
    train_docs: &[usize],
    apply_docs: &[usize],
    emb: &EmbeddingTable<S>,
    alpha: f64,
) -> Result<Vec<DocVector<S>>, WeightingError> {
    let model = SifModel::fit(corpus, train_docs, emb, alpha)?;
    Ok(apply_docs
        .iter()
        .map(|&d| model.embed(corpus, d, emb))
        .collect())
}
