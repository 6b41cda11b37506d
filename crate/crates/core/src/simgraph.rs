//! The τ-thresholded word-to-word similarity graph over a corpus
//! vocabulary and its row-normalized propagation matrix.
//!
//! Both matrices are sparse row-compressed, built once offline, and
//! immutable afterwards. Construction is parallel over rows yet bit-exact
//! for any worker count: rows are assembled independently and concatenated
//! in index order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embeddings::EmbeddingTable;
use crate::scalar::{cast, dot, Scalar};

pub const MATRIX_MAGIC: &[u8; 8] = b"CPTWSIM1";

/// τ requested as exactly 0 is mapped to this value so that neighbourhood
/// logs stay finite; callers are told via the returned flag.
pub const MIN_TAU: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimGraphError {
    #[error("tau must be in (0, 1], got {0}")]
    TauOutOfRange(f64),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not a propagation matrix file")]
    BadMagic(String),
    #[error("{0}: file ends before the declared arrays")]
    TruncatedFile(String),
    #[error(
        "matrix was built for a different vocabulary (file hash {file_hash}, corpus hash {corpus_hash})"
    )]
    VocabHashMismatch {
        file_hash: String,
        corpus_hash: String,
    },
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Maps a requested τ onto the supported (0, 1] range: exactly 0 becomes
/// [`MIN_TAU`]. Returns the effective value and whether mapping happened.
pub fn effective_tau(requested: f64) -> (f64, bool) {
    if requested == 0.0 {
        (MIN_TAU, true)
    } else {
        (requested, false)
    }
}

/// Sparse symmetric pattern of all vocabulary pairs with cosine ≥ τ.
///
/// Every row holds its diagonal with value exactly 1.0. Vocabulary words
/// without an embedding (`oov_rows`) hold only their self-loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<S> {
    m: usize,
    tau: f64,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<S>,
    oov_rows: Vec<u32>,
    vocab_hash: [u8; 32],
}

impl<S: Scalar> SimilarityMatrix<S> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row(&self, j: usize) -> (&[u32], &[S]) {
        let lo = self.row_offsets[j];
        let hi = self.row_offsets[j + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Vocabulary indices with no embedding vector, ascending.
    pub fn oov_rows(&self) -> &[u32] {
        &self.oov_rows
    }

    pub fn vocab_hash(&self) -> [u8; 32] {
        self.vocab_hash
    }
}

/// Builds the similarity graph for the corpus vocabulary.
///
/// All and only pairs with cosine ≥ τ are kept; the candidate space is the
/// full M×M grid, thresholded on the fly, with no approximate index.
pub fn build_similarity<S: Scalar>(
    emb: &EmbeddingTable<S>,
    corpus: &Corpus,
    tau: f64,
) -> Result<SimilarityMatrix<S>, SimGraphError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(SimGraphError::TauOutOfRange(tau));
    }
    let m = corpus.vocab_size();
    if m == 0 {
        return Err(SimGraphError::EmptyVocabulary);
    }

    let emb_row: Vec<Option<u32>> = corpus.vocabulary().iter().map(|w| emb.row_of(w)).collect();
    let tau_s = cast::<S>(tau);

    let rows: Vec<Vec<(u32, S)>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let Some(ej) = emb_row[j] else {
                return vec![(j as u32, S::one())];
            };
            let vj = emb.row(ej as usize);
            let mut row = Vec::new();
            for (k, ek) in emb_row.iter().enumerate() {
                if k == j {
                    row.push((j as u32, S::one()));
                    continue;
                }
                let Some(ek) = ek else { continue };
                let cos = dot(vj, emb.row(*ek as usize));
                if cos >= tau_s {
                    row.push((k as u32, cos));
                }
            }
            row
        })
        .collect();

    let mut row_offsets = Vec::with_capacity(m + 1);
    row_offsets.push(0usize);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    for row in &rows {
        for &(k, v) in row {
            col_indices.push(k);
            values.push(v);
        }
        row_offsets.push(col_indices.len());
    }
    let oov_rows = emb_row
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_none())
        .map(|(j, _)| j as u32)
        .collect();

    Ok(SimilarityMatrix {
        m,
        tau,
        row_offsets,
        col_indices,
        values,
        oov_rows,
        vocab_hash: corpus.vocab_hash(),
    })
}

/// Row-stochastic propagation matrix: entry (j,k) is the similarity entry
/// scaled by the reciprocal of its row sum, so every row sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix<S> {
    m: usize,
    tau: f64,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<S>,
    alphas: Vec<S>,
    vocab_hash: [u8; 32],
}

/// Scales every similarity row by the reciprocal of its sum.
///
/// Row sums of the input are ≥ 1 (the diagonal is 1), so every scale
/// factor is positive and finite.
pub fn row_normalize<S: Scalar>(sim: &SimilarityMatrix<S>) -> PropagationMatrix<S> {
    let mut alphas = Vec::with_capacity(sim.m);
    let mut values = Vec::with_capacity(sim.values.len());
    for j in 0..sim.m {
        let (_, row_values) = sim.row(j);
        let mut sum = S::zero();
        for v in row_values {
            sum += *v;
        }
        let alpha = S::one() / sum;
        alphas.push(alpha);
        for v in row_values {
            values.push(*v * alpha);
        }
    }
    PropagationMatrix {
        m: sim.m,
        tau: sim.tau,
        row_offsets: sim.row_offsets.clone(),
        col_indices: sim.col_indices.clone(),
        values,
        alphas,
        vocab_hash: sim.vocab_hash,
    }
}

/// Convenience: `row_normalize(build_similarity(..))`.
pub fn build_propagation<S: Scalar>(
    emb: &EmbeddingTable<S>,
    corpus: &Corpus,
    tau: f64,
) -> Result<PropagationMatrix<S>, SimGraphError> {
    Ok(row_normalize(&build_similarity(emb, corpus, tau)?))
}

impl<S: Scalar> PropagationMatrix<S> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row(&self, j: usize) -> (&[u32], &[S]) {
        let lo = self.row_offsets[j];
        let hi = self.row_offsets[j + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn alpha(&self, j: usize) -> S {
        self.alphas[j]
    }

    pub fn alphas(&self) -> &[S] {
        &self.alphas
    }

    pub fn vocab_hash(&self) -> [u8; 32] {
        self.vocab_hash
    }

    pub fn matches_corpus(&self, corpus: &Corpus) -> bool {
        self.vocab_hash == corpus.vocab_hash()
    }

    pub fn check_corpus(&self, corpus: &Corpus) -> Result<(), SimGraphError> {
        if self.matches_corpus(corpus) {
            Ok(())
        } else {
            Err(SimGraphError::VocabHashMismatch {
                file_hash: hex(&self.vocab_hash),
                corpus_hash: hex(&corpus.vocab_hash()),
            })
        }
    }

    /// Writes the matrix in the fixed binary layout: magic `CPTWSIM1`,
    /// then little-endian m (u64), tau (f64), vocabulary hash (32 bytes),
    /// alphas (m × f64), row offsets ((m+1) × u64), column indices
    /// (nnz × u64), values (nnz × f64).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SimGraphError> {
        let path = path.as_ref();
        let io = |source| SimGraphError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        w.write_all(MATRIX_MAGIC).map_err(io)?;
        w.write_all(&(self.m as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&self.tau.to_le_bytes()).map_err(io)?;
        w.write_all(&self.vocab_hash).map_err(io)?;
        for a in &self.alphas {
            w.write_all(&a.as_f64().to_le_bytes()).map_err(io)?;
        }
        for off in &self.row_offsets {
            w.write_all(&(*off as u64).to_le_bytes()).map_err(io)?;
        }
        for c in &self.col_indices {
            w.write_all(&(*c as u64).to_le_bytes()).map_err(io)?;
        }
        for v in &self.values {
            w.write_all(&v.as_f64().to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads a matrix written by [`PropagationMatrix::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimGraphError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let io = |source| SimGraphError::Io {
            path: display.clone(),
            source,
        };
        let file = File::open(path).map_err(io)?;
        let mut r = BufReader::new(file);

        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic, &display)?;
        if &magic != MATRIX_MAGIC {
            return Err(SimGraphError::BadMagic(display));
        }
        let m = read_u64(&mut r, &display)? as usize;
        let tau = read_f64(&mut r, &display)?;
        let mut vocab_hash = [0u8; 32];
        read_exact(&mut r, &mut vocab_hash, &display)?;

        let mut alphas = Vec::with_capacity(m);
        for _ in 0..m {
            alphas.push(cast::<S>(read_f64(&mut r, &display)?));
        }
        let mut row_offsets = Vec::with_capacity(m + 1);
        for _ in 0..=m {
            row_offsets.push(read_u64(&mut r, &display)? as usize);
        }
        let nnz = *row_offsets.last().unwrap_or(&0);
        let mut col_indices = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            col_indices.push(read_u64(&mut r, &display)? as u32);
        }
        let mut values = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            values.push(cast::<S>(read_f64(&mut r, &display)?));
        }
        Ok(Self {
            m,
            tau,
            row_offsets,
            col_indices,
            values,
            alphas,
            vocab_hash,
        })
    }

    /// Loads and refuses matrices built for a different vocabulary.
    pub fn load_for(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Self, SimGraphError> {
        let matrix = Self::load(path)?;
        matrix.check_corpus(corpus)?;
        Ok(matrix)
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &str) -> Result<(), SimGraphError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            SimGraphError::TruncatedFile(path.to_string())
        } else {
            SimGraphError::Io {
                path: path.to_string(),
                source: e,
            }
        }
    })
}

fn read_u64(r: &mut impl Read, path: &str) -> Result<u64, SimGraphError> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf, path)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read, path: &str) -> Result<f64, SimGraphError> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf, path)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
impl PropagationMatrix<f64> {
    /// Bitwise equality check used by the round-trip test.
    fn load_bits_equal(&self, other: &Self) -> bool {
        self.m == other.m
            && self.tau.to_bits() == other.tau.to_bits()
            && self.vocab_hash == other.vocab_hash
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self
                .alphas
                .iter()
                .zip(&other.alphas)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
