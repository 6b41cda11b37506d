//! Pretrained word-embedding tables: text and word2vec-binary loaders,
//! unit normalization, vocabulary lookup, and cosine similarity.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::scalar::{cast, dot, l2_norm_f64, Scalar};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read embedding file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse `{token}` as a number")]
    BadNumber { line: usize, token: String },
    #[error("binary header is not `<count> <dim>`: {0:?}")]
    BadHeader(String),
    #[error("truncated embedding file: header promised {expected} entries, read {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("unexpected trailing bytes after {expected} entries")]
    TrailingData { expected: usize },
    #[error("embedding file contains no usable vectors")]
    Empty,
    #[error("cosine requires equal dimensions, got {0} and {1}")]
    CosineDimMismatch(usize, usize),
}

/// Vocabulary-indexed matrix of unit-normalized word vectors.
///
/// Rows are stored row-major in one flat buffer; `index` maps a token to
/// its row. The table is immutable after loading and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct EmbeddingTable<S> {
    words: Vec<String>,
    dim: usize,
    vectors: Vec<S>,
    index: HashMap<String, u32>,
    duplicate_count: usize,
    zero_norm_count: usize,
}

impl<S: Scalar> EmbeddingTable<S> {
    /// Builds a table from raw (token, vector) rows, normalizing every row.
    ///
    /// Duplicate tokens keep their first occurrence; zero-norm rows are
    /// dropped. Both cases are tallied rather than treated as fatal.
    pub fn from_rows(rows: Vec<(String, Vec<S>)>) -> Result<Self, EmbeddingError> {
        let mut dim = 0usize;
        let mut words = Vec::new();
        let mut vectors = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut duplicate_count = 0usize;
        let mut zero_norm_count = 0usize;

        for (token, mut row) in rows {
            if dim == 0 {
                dim = row.len();
            }
            debug_assert_eq!(row.len(), dim);
            if index.contains_key(&token) {
                duplicate_count += 1;
                continue;
            }
            let norm = l2_norm_f64(&row);
            if norm == 0.0 {
                zero_norm_count += 1;
                continue;
            }
            let inv = cast::<S>(1.0 / norm);
            for x in row.iter_mut() {
                *x *= inv;
            }
            index.insert(token.clone(), words.len() as u32);
            words.push(token);
            vectors.extend_from_slice(&row);
        }
        if words.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(Self {
            words,
            dim,
            vectors,
            index,
            duplicate_count,
            zero_norm_count,
        })
    }

    /// Parses whitespace-separated `token x1 .. xd` lines. A first line of
    /// exactly two integer fields is treated as a `count dim` header.
    pub fn load_text(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_text(BufReader::new(file))
    }

    pub fn read_text(reader: impl BufRead) -> Result<Self, EmbeddingError> {
        let mut rows: Vec<(String, Vec<S>)> = Vec::new();
        let mut dim: Option<usize> = None;

        for (line_no, line) in reader.lines().enumerate() {
            let line_no = line_no + 1;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: "<reader>".into(),
                source,
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if line_no == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
            {
                // "count dim" header; sizes are re-derived from the data.
                continue;
            }
            if fields.len() < 2 {
                return Err(EmbeddingError::DimensionMismatch {
                    line: line_no,
                    expected: dim.map_or(1, |d| d),
                    found: fields.len().saturating_sub(1),
                });
            }
            let token = fields[0].to_string();
            let comps = &fields[1..];
            match dim {
                None => dim = Some(comps.len()),
                Some(d) if d != comps.len() => {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: line_no,
                        expected: d,
                        found: comps.len(),
                    });
                }
                _ => {}
            }
            let mut row = Vec::with_capacity(comps.len());
            for c in comps {
                let v: f64 = c.parse().map_err(|_| EmbeddingError::BadNumber {
                    line: line_no,
                    token: (*c).to_string(),
                })?;
                row.push(cast::<S>(v));
            }
            rows.push((token, row));
        }
        Self::from_rows(rows)
    }

    /// Parses the classic word2vec binary format: an ASCII `<count> <dim>`
    /// header line, then per word a space-terminated token followed by
    /// `dim` little-endian f32 values, optionally followed by a newline.
    pub fn load_binary(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_binary(BufReader::new(file))
    }

    pub fn read_binary(mut reader: impl BufRead) -> Result<Self, EmbeddingError> {
        let io_err = |source| EmbeddingError::Io {
            path: "<reader>".into(),
            source,
        };

        let mut header = Vec::new();
        reader.read_until(b'\n', &mut header).map_err(io_err)?;
        let header_str = String::from_utf8_lossy(&header).trim().to_string();
        let fields: Vec<&str> = header_str.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(EmbeddingError::BadHeader(header_str));
        }
        let count: usize = fields[0]
            .parse()
            .map_err(|_| EmbeddingError::BadHeader(header_str.clone()))?;
        let dim: usize = fields[1]
            .parse()
            .map_err(|_| EmbeddingError::BadHeader(header_str.clone()))?;

        let mut rows: Vec<(String, Vec<S>)> = Vec::with_capacity(count);
        let mut float_buf = vec![0u8; dim * 4];
        for i in 0..count {
            let mut token_bytes = Vec::new();
            loop {
                let mut byte = [0u8; 1];
                match reader.read_exact(&mut byte) {
                    Ok(()) => {}
                    Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                        return Err(EmbeddingError::Truncated {
                            expected: count,
                            actual: i,
                        });
                    }
                    Err(e) => return Err(io_err(e)),
                }
                match byte[0] {
                    b' ' => break,
                    b'\n' | b'\r' if token_bytes.is_empty() => continue,
                    b => token_bytes.push(b),
                }
            }
            match reader.read_exact(&mut float_buf) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                    return Err(EmbeddingError::Truncated {
                        expected: count,
                        actual: i,
                    });
                }
                Err(e) => return Err(io_err(e)),
            }
            let token = String::from_utf8_lossy(&token_bytes).into_owned();
            let row: Vec<S> = float_buf
                .chunks_exact(4)
                .map(|c| cast::<S>(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
                .collect();
            rows.push((token, row));
        }

        // Only whitespace may remain after the promised entries.
        let mut rest = Vec::new();
        reader.read_to_end(&mut rest).map_err(io_err)?;
        if rest.iter().any(|b| !b.is_ascii_whitespace()) {
            return Err(EmbeddingError::TrailingData { expected: count });
        }
        Self::from_rows(rows)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, row: usize) -> &str {
        &self.words[row]
    }

    /// Duplicate tokens skipped while loading (first occurrence kept).
    pub fn duplicate_count(&self) -> usize {
        self.duplicate_count
    }

    /// Zero-norm rows dropped while loading.
    pub fn zero_norm_count(&self) -> usize {
        self.zero_norm_count
    }

    pub fn row(&self, row: usize) -> &[S] {
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    /// Row index for a token: exact match first, then the lowercased token.
    ///
    /// The corpus pipeline lowercases while pretrained files mix cases, so
    /// the fallback recovers tokens the exact lookup would miss.
    pub fn row_of(&self, token: &str) -> Option<u32> {
        if let Some(&i) = self.index.get(token) {
            return Some(i);
        }
        let lower = token.to_lowercase();
        if lower != token {
            return self.index.get(&lower).copied();
        }
        None
    }

    pub fn get(&self, token: &str) -> Option<&[S]> {
        self.row_of(token).map(|i| self.row(i as usize))
    }
}

/// Cosine similarity of two unit-normalized vectors, i.e. their dot product.
pub fn cosine<S: Scalar>(a: &[S], b: &[S]) -> Result<S, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::CosineDimMismatch(a.len(), b.len()));
    }
    Ok(dot(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn table(text: &str) -> EmbeddingTable<f64> {
        EmbeddingTable::read_text(Cursor::new(text)).unwrap()
    }

    #[test]
    fn text_basic() {
        let t = table("a 1 0\nb 0 1\n");
        assert_eq!(t.dim(), 2);
        assert_eq!(t.words(), &["a".to_string(), "b".to_string()]);
        assert_eq!(t.row(0), &[1.0, 0.0]);
        assert_eq!(t.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn text_normalizes() {
        let t = table("a 2 0\n");
        assert_eq!(t.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn text_dim_mismatch_names_line() {
        let err = EmbeddingTable::<f64>::read_text(Cursor::new("a 1 0\nb 1\n")).unwrap_err();
        match err {
            EmbeddingError::DimensionMismatch { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn text_header_detected() {
        let t = table("2 2\na 1 0\nb 0 1\n");
        assert_eq!(t.len(), 2);
        // A non-integer first line of two fields is data, not a header.
        let err = EmbeddingTable::<f64>::read_text(Cursor::new("a 1\nb 0 1\n")).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::DimensionMismatch { line: 2, .. }
        ));
    }

    #[test]
    fn text_duplicates_keep_first_and_tally() {
        let t = table("a 1 0\na 0 1\nb 0 1\n");
        assert_eq!(t.len(), 2);
        assert_eq!(t.duplicate_count(), 1);
        assert_eq!(t.get("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn text_zero_norm_dropped() {
        let t = table("a 0 0\nb 0 1\n");
        assert_eq!(t.len(), 1);
        assert_eq!(t.zero_norm_count(), 1);
        assert!(t.get("a").is_none());
    }

    fn binary_bytes(entries: &[(&str, &[f32])], header: Option<(usize, usize)>) -> Vec<u8> {
        let (count, dim) = header.unwrap_or((entries.len(), entries[0].1.len()));
        let mut out = format!("{count} {dim}\n").into_bytes();
        for (token, comps) in entries {
            out.extend_from_slice(token.as_bytes());
            out.push(b' ');
            for c in *comps {
                out.extend_from_slice(&c.to_le_bytes());
            }
            out.push(b'\n');
        }
        out
    }

    #[test]
    fn binary_basic() {
        let bytes = binary_bytes(&[("a", &[1.0, 0.0, 0.0]), ("b", &[0.0, 1.0, 0.0])], None);
        let t = EmbeddingTable::<f64>::read_binary(Cursor::new(bytes)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
    }

    #[test]
    fn binary_truncated() {
        let bytes = binary_bytes(
            &[("a", &[1.0, 0.0, 0.0]), ("b", &[0.0, 1.0, 0.0])],
            Some((5, 3)),
        );
        let err = EmbeddingTable::<f64>::read_binary(Cursor::new(bytes)).unwrap_err();
        match err {
            EmbeddingError::Truncated { expected, actual } => {
                assert_eq!((expected, actual), (5, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn binary_bad_header() {
        let err = EmbeddingTable::<f64>::read_binary(Cursor::new(b"hello\n".to_vec())).unwrap_err();
        assert!(matches!(err, EmbeddingError::BadHeader(_)));
    }

    #[test]
    fn binary_345_normalized() {
        let bytes = binary_bytes(&[("a", &[3.0, 4.0, 0.0])], None);
        let t = EmbeddingTable::<f64>::read_binary(Cursor::new(bytes)).unwrap();
        let row = t.get("a").unwrap();
        assert!((row[0] - 0.6).abs() < 1e-7);
        assert!((row[1] - 0.8).abs() < 1e-7);
        assert_eq!(row[2], 0.0);
    }

    #[test]
    fn text_and_binary_agree() {
        let text = "a 0.5 0.25 -1\nb 3 4 0\nc -1 -1 -1\n";
        let tt = table(text);
        let entries: Vec<(&str, Vec<f32>)> = vec![
            ("a", vec![0.5, 0.25, -1.0]),
            ("b", vec![3.0, 4.0, 0.0]),
            ("c", vec![-1.0, -1.0, -1.0]),
        ];
        let refs: Vec<(&str, &[f32])> = entries.iter().map(|(t, v)| (*t, v.as_slice())).collect();
        let tb =
            EmbeddingTable::<f64>::read_binary(Cursor::new(binary_bytes(&refs, None))).unwrap();
        for w in ["a", "b", "c"] {
            let va = tt.get(w).unwrap();
            let vb = tb.get(w).unwrap();
            for (x, y) in va.iter().zip(vb) {
                assert!((x - y).abs() < 1e-6, "{w}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn rows_are_unit_norm() {
        let t = table("a 17 -3 2.5\nb 0.001 0 0\nc 9 9 9\n");
        for i in 0..t.len() {
            assert!((l2_norm_f64(t.row(i)) - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        let c: f64 = cosine(&[1.0, 0.0], &[0.8, 0.6]).unwrap();
        assert!((c - 0.8).abs() < 1e-15);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cosine_symmetric_and_self_unit() {
        let t = table("a 1 2 3\nb -4 0.5 2\n");
        let (a, b) = (t.get("a").unwrap(), t.get("b").unwrap());
        assert_eq!(cosine(a, b).unwrap(), cosine(b, a).unwrap());
        assert!(cosine(a, a).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn lowercase_fallback() {
        let t = table("Boat 1 0\nsea 0 1\n");
        assert!(t.get("Boat").is_some());
        assert!(t.get("Sea").is_some(), "query is retried lowercased");
        assert!(t.get("boat").is_none(), "stored case is not folded");
    }
}
