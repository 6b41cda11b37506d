//! Inter-vs-intra class ratio: for every point, the summed Euclidean
//! distances to its k nearest neighbours outside and inside its own class
//! (self excluded); per class the averaged inter sum over the averaged
//! intra sum; overall the mean of the per-class ratios.
//!
//! Values near 1 mean inter- and intra-class samples look alike and the
//! dataset is hard; larger values mean easier separation.

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embeddings::EmbeddingTable;
use crate::eval::Normalization;
use crate::scalar::{cast_usize, Scalar};
use crate::simgraph::{build_propagation, SimGraphError};
use crate::weighting::{
    cptw_idf_vector, cptw_vector, CptwIdfMode, DocVector, IdfTable, WeightingError,
};

#[derive(Debug, Error)]
pub enum IicrError {
    #[error("class {0:?} has a single member; intra-class distance is undefined")]
    SingletonClass(String),
    #[error("need vectors and labels of equal length, got {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("class {0:?} has zero intra-class distance; the ratio is infinite")]
    ZeroIntraDistance(String),
    #[error("k must be positive")]
    ZeroK,
    #[error(transparent)]
    Weighting(#[from] WeightingError),
    #[error(transparent)]
    SimGraph(#[from] SimGraphError),
}

/// Per-class separation: averaged summed distances to the k nearest
/// neighbours outside (`inter`) and inside (`intra`) the class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSeparation<S> {
    pub class: String,
    pub inter: S,
    pub intra: S,
    pub ratio: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IicrResult<S> {
    pub k: usize,
    /// Set when the vectors came from a τ sweep.
    pub tau: Option<f64>,
    pub classes: Vec<ClassSeparation<S>>,
    pub iicr: S,
    /// True when some point had fewer than k neighbours available and the
    /// neighbourhood was clamped.
    pub clamped: bool,
}

/// Computes the inter-vs-intra class ratio with exact neighbour search.
///
/// k is clamped per point to the available neighbour count (and the clamp
/// reported); a class with a single member is an error.
pub fn iicr<S: Scalar>(
    vectors: &[DocVector<S>],
    labels: &[String],
    k: usize,
) -> Result<IicrResult<S>, IicrError> {
    if vectors.len() != labels.len() {
        return Err(IicrError::LengthMismatch(vectors.len(), labels.len()));
    }
    if k == 0 {
        return Err(IicrError::ZeroK);
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(IicrError::TooFewClasses(classes.len()));
    }
    let class_idx = |label: &str| classes.iter().position(|c| c == label).unwrap();
    let class_of: Vec<usize> = labels.iter().map(|l| class_idx(l)).collect();
    let mut class_size = vec![0usize; classes.len()];
    for &c in &class_of {
        class_size[c] += 1;
    }
    if let Some(c) = class_size.iter().position(|&n| n == 1) {
        return Err(IicrError::SingletonClass(classes[c].clone()));
    }

    let n = vectors.len();
    // (inter sum, intra sum, clamped) per point.
    let per_point: Result<Vec<(S, S, bool)>, IicrError> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut inter: Vec<S> = Vec::new();
            let mut intra: Vec<S> = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = vectors[i].euclidean(&vectors[j])?;
                if class_of[j] == class_of[i] {
                    intra.push(d);
                } else {
                    inter.push(d);
                }
            }
            let sort = |v: &mut Vec<S>| {
                v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are comparable"))
            };
            sort(&mut inter);
            sort(&mut intra);
            let k_inter = k.min(inter.len());
            let k_intra = k.min(intra.len());
            let clamped = k_inter < k || k_intra < k;
            let mut inter_sum = S::zero();
            for d in &inter[..k_inter] {
                inter_sum += *d;
            }
            let mut intra_sum = S::zero();
            for d in &intra[..k_intra] {
                intra_sum += *d;
            }
            Ok((inter_sum, intra_sum, clamped))
        })
        .collect();
    let per_point = per_point?;

    let mut class_results = Vec::with_capacity(classes.len());
    let mut ratio_sum = S::zero();
    let clamped = per_point.iter().any(|&(_, _, c)| c);
    for (c, class) in classes.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&i| class_of[i] == c).collect();
        let size = cast_usize::<S>(members.len());
        let mut inter = S::zero();
        let mut intra = S::zero();
        for &i in &members {
            inter += per_point[i].0;
            intra += per_point[i].1;
        }
        inter /= size;
        intra /= size;
        if intra <= S::zero() {
            return Err(IicrError::ZeroIntraDistance(class.clone()));
        }
        let ratio = inter / intra;
        ratio_sum += ratio;
        class_results.push(ClassSeparation {
            class: class.clone(),
            inter,
            intra,
            ratio,
        });
    }
    let iicr = ratio_sum / cast_usize::<S>(classes.len());
    Ok(IicrResult {
        k,
        tau: None,
        classes: class_results,
        iicr,
        clamped,
    })
}

/// Which propagated representation a τ sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScheme {
    Cptw,
    CptwIdf,
}

impl SweepScheme {
    pub fn name(&self) -> &'static str {
        match self {
            SweepScheme::Cptw => "cptw",
            SweepScheme::CptwIdf => "cptw-idf",
        }
    }
}

/// One IICR evaluation per τ over the full dataset, with the propagation
/// matrix rebuilt per τ. IDF (for cptw-idf) is fitted on the full dataset.
/// Per-τ errors are reported in place and do not stop the sweep.
pub fn tau_sweep<S: Scalar>(
    corpus: &Corpus,
    emb: &EmbeddingTable<S>,
    scheme: SweepScheme,
    taus: &[f64],
    k: usize,
    normalize: Normalization,
    idf_mode: CptwIdfMode,
) -> Vec<(f64, Result<IicrResult<S>, IicrError>)> {
    let labels: Vec<String> = (0..corpus.n_docs())
        .map(|d| corpus.label_of(d).to_string())
        .collect();
    let idf = IdfTable::from_corpus(corpus);
    taus.iter()
        .map(|&requested| {
            let (tau, _) = crate::simgraph::effective_tau(requested);
            let result = sweep_point(
                corpus, emb, scheme, tau, k, normalize, idf_mode, &idf, &labels,
            );
            (tau, result)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn sweep_point<S: Scalar>(
    corpus: &Corpus,
    emb: &EmbeddingTable<S>,
    scheme: SweepScheme,
    tau: f64,
    k: usize,
    normalize: Normalization,
    idf_mode: CptwIdfMode,
    idf: &IdfTable<S>,
    labels: &[String],
) -> Result<IicrResult<S>, IicrError> {
    let p = build_propagation(emb, corpus, tau)?;
    let vectors: Result<Vec<DocVector<S>>, WeightingError> = (0..corpus.n_docs())
        .into_par_iter()
        .map(|d| {
            let mut v = match scheme {
                SweepScheme::Cptw => cptw_vector(corpus, d, &p)?,
                SweepScheme::CptwIdf => cptw_idf_vector(corpus, d, &p, idf, idf_mode)?,
            };
            if normalize == Normalization::L2 {
                v.l2_normalize();
            }
            Ok(v)
        })
        .collect();
    let mut result = iicr(&vectors?, labels, k)?;
    result.tau = Some(tau);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[(f64, &str)]) -> (Vec<DocVector<f64>>, Vec<String>) {
        let vectors = points
            .iter()
            .map(|&(x, _)| DocVector::dense(vec![x]))
            .collect();
        let labels = points.iter().map(|&(_, l)| l.to_string()).collect();
        (vectors, labels)
    }

    #[test]
    fn two_class_line_example() {
        let (vectors, labels) = line(&[(0.0, "a"), (0.1, "a"), (10.0, "b"), (10.1, "b")]);
        let r = iicr(&vectors, &labels, 1).unwrap();
        assert!((r.iicr - 99.5).abs() < 1e-9, "iicr = {}", r.iicr);
        for c in &r.classes {
            assert!((c.intra - 0.1).abs() < 1e-12);
            assert!((c.inter - 9.95).abs() < 1e-12);
            assert!((c.ratio - 99.5).abs() < 1e-9);
        }
        assert!(!r.clamped);
    }

    #[test]
    fn scale_invariant() {
        let (vectors, labels) = line(&[(0.0, "a"), (0.3, "a"), (4.0, "b"), (5.1, "b"), (9.0, "a")]);
        let base = iicr(&vectors, &labels, 2).unwrap();
        let scaled: Vec<DocVector<f64>> = vectors
            .iter()
            .map(|v| DocVector::dense(v.dense_values().unwrap().iter().map(|x| x * 7.3).collect()))
            .collect();
        let scaled = iicr(&scaled, &labels, 2).unwrap();
        assert!((base.iicr - scaled.iicr).abs() < 1e-9);
    }

    #[test]
    fn relabeling_invariant() {
        let (vectors, labels) = line(&[(0.0, "a"), (0.3, "a"), (4.0, "b"), (5.1, "b")]);
        let renamed: Vec<String> = labels
            .iter()
            .map(|l| if l == "a" { "zz".into() } else { "qq".into() })
            .collect();
        let base = iicr(&vectors, &labels, 1).unwrap();
        let renamed = iicr(&vectors, &renamed, 1).unwrap();
        assert!((base.iicr - renamed.iicr).abs() < 1e-12);
    }

    #[test]
    fn singleton_class_is_an_error() {
        let (vectors, labels) = line(&[(0.0, "a"), (1.0, "a"), (2.0, "lonely")]);
        let err = iicr(&vectors, &labels, 1).unwrap_err();
        assert!(err.to_string().contains("lonely"));
    }

    #[test]
    fn identical_points_error() {
        let (vectors, labels) = line(&[(1.0, "a"), (1.0, "a"), (1.0, "b"), (1.0, "b")]);
        assert!(matches!(
            iicr(&vectors, &labels, 1),
            Err(IicrError::ZeroIntraDistance(_))
        ));
    }

    #[test]
    fn clamping_reported() {
        // k = 3 but each class only has one other member.
        let (vectors, labels) = line(&[(0.0, "a"), (0.2, "a"), (5.0, "b"), (5.2, "b")]);
        let r = iicr(&vectors, &labels, 3).unwrap();
        assert!(r.clamped);
    }

    #[test]
    fn sweep_reports_degenerate_taus_and_continues() {
        use crate::corpus::{Corpus, Stopwords};
        use crate::embeddings::EmbeddingTable;

        let emb: EmbeddingTable<f64> =
            EmbeddingTable::read_text(std::io::Cursor::new("a 1 0\nb 0 1\n")).unwrap();
        // Identical documents per class make every intra distance zero.
        let corpus = Corpus::build(
            &[
                ("d0".into(), "x".into(), "a".into()),
                ("d1".into(), "x".into(), "a".into()),
                ("d2".into(), "y".into(), "b".into()),
                ("d3".into(), "y".into(), "b".into()),
            ],
            &Stopwords::none(),
            1,
        )
        .unwrap();
        let rows = tau_sweep(
            &corpus,
            &emb,
            SweepScheme::Cptw,
            &[0.5, 1.0],
            1,
            Normalization::L2,
            CptwIdfMode::WeightInsideLog,
        );
        assert_eq!(rows.len(), 2, "the sweep covers every tau");
        for (_, result) in &rows {
            assert!(matches!(result, Err(IicrError::ZeroIntraDistance(_))));
        }
    }

    #[test]
    fn single_tau_sweep_matches_direct_call() {
        use crate::corpus::{Corpus, Stopwords};
        use crate::embeddings::EmbeddingTable;
        use crate::weighting::cptw_vector;

        let emb: EmbeddingTable<f64> =
            EmbeddingTable::read_text(std::io::Cursor::new("a 1 0\nb 0.8 0.6\nc 0 1\n")).unwrap();
        let corpus = Corpus::build(
            &[
                ("d0".into(), "x".into(), "a b".into()),
                ("d1".into(), "x".into(), "a c".into()),
                ("d2".into(), "y".into(), "c b".into()),
                ("d3".into(), "y".into(), "c".into()),
            ],
            &Stopwords::none(),
            1,
        )
        .unwrap();
        let rows = tau_sweep(
            &corpus,
            &emb,
            SweepScheme::Cptw,
            &[0.5],
            1,
            Normalization::L2,
            CptwIdfMode::WeightInsideLog,
        );
        assert_eq!(rows.len(), 1);
        let swept = rows[0].1.as_ref().unwrap();
        assert_eq!(swept.tau, Some(0.5));

        let p = build_propagation(&emb, &corpus, 0.5).unwrap();
        let vectors: Vec<DocVector<f64>> = (0..4)
            .map(|d| cptw_vector(&corpus, d, &p).unwrap().l2_normalized())
            .collect();
        let labels: Vec<String> = (0..4).map(|d| corpus.label_of(d).to_string()).collect();
        let direct = iicr(&vectors, &labels, 1).unwrap();
        assert_eq!(swept.iicr, direct.iicr);
        assert_eq!(swept.classes.len(), direct.classes.len());
    }

    #[test]
    fn separated_classes_exceed_one() {
        let (vectors, labels) = line(&[
            (0.0, "a"),
            (0.5, "a"),
            (1.0, "a"),
            (10.0, "b"),
            (10.5, "b"),
            (11.0, "b"),
        ]);
        let r = iicr(&vectors, &labels, 2).unwrap();
        assert!(r.iicr > 1.0);
    }
}
