//! Contextually propagated term weights over bag-of-words document
//! representations.
//!
//! Pretrained word embeddings define a τ-thresholded neighbourhood graph
//! over the corpus vocabulary; row-normalizing it yields a sparse
//! row-stochastic propagation matrix P, and `P · tf(d)` redistributes each
//! word's frequency mass across its embedded neighbours. The crate also
//! ships the classical baselines (TF, TF-IDF, BM25, embedding averages,
//! SIF), a kNN / cross-validation harness with micro/macro F1 scoring,
//! and the inter-vs-intra class ratio diagnostic with its τ sweep.
//!
//! All numeric code is generic over the scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); the `*64` aliases below fix the default precision
//! used by the command-line pipeline.

pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod iicr;
pub mod scalar;
pub mod simgraph;
pub mod weighting;

pub use corpus::{load_dataset, tokenize, Corpus, CorpusError, Document, Stopwords};
pub use embeddings::{cosine, EmbeddingError, EmbeddingTable};
pub use eval::{
    assign_folds, cross_validate, knn_predict, macro_f1, micro_f1, parse_split_file, CvConfig,
    EvalError, EvalReport, FoldAssignment, Grids, Metric, Normalization, ParamSet, Scheme,
};
pub use iicr::{iicr, tau_sweep, IicrError, IicrResult, SweepScheme};
pub use scalar::Scalar;
pub use simgraph::{
    build_propagation, build_similarity, effective_tau, row_normalize, PropagationMatrix,
    SimGraphError, SimilarityMatrix,
};
pub use weighting::{
    bm25_vector, cptw_idf_vector, cptw_vector, l2_normalize, sif_vectors, tf_vector, tfidf_vector,
    we_avg_vector, Bm25Params, Bm25Stats, CptwIdfMode, DocVector, IdfTable, SifModel,
    WeightingError,
};

/// Default-precision aliases used by the command-line pipeline.
pub type EmbeddingTable64 = embeddings::EmbeddingTable<f64>;
pub type SimilarityMatrix64 = simgraph::SimilarityMatrix<f64>;
pub type PropagationMatrix64 = simgraph::PropagationMatrix<f64>;
pub type DocVector64 = weighting::DocVector<f64>;
pub type IdfTable64 = weighting::IdfTable<f64>;
pub type SifModel64 = weighting::SifModel<f64>;
pub type IicrResult64 = iicr::IicrResult<f64>;

/// Single-precision aliases for memory-constrained embedding tables.
pub type EmbeddingTable32 = embeddings::EmbeddingTable<f32>;
pub type DocVector32 = weighting::DocVector<f32>;
