//! Labeled-dataset ingestion, preprocessing, and term statistics.
//!
//! Preprocessing keeps maximal alphanumeric runs, lowercases them, and
//! removes stop words. The vendored SMART list is the default stopword set.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// The SMART stopword list, vendored one token per line.
pub const SMART_STOPWORDS: &str = include_str!("../data/smart_stopwords.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("corpus needs at least one document")]
    NoDocuments,
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("document {0:?} has an empty label")]
    EmptyLabel(String),
    #[error("{path}: line {line}: missing label separator")]
    MissingSeparator { path: String, line: usize },
    #[error("{path}: line {line}: empty label")]
    EmptyLineLabel { path: String, line: usize },
    #[error("{path}: expected a directory-per-class layout, found file {entry:?} directly under the root")]
    NotClassLayout { path: String, entry: String },
}

/// Stopword set applied after lowercasing.
#[derive(Debug, Clone)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    /// The vendored SMART list.
    pub fn smart() -> Self {
        Self::from_text(SMART_STOPWORDS)
    }

    pub fn none() -> Self {
        Self {
            words: HashSet::new(),
        }
    }

    pub fn from_text(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Self { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_text(&text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Splits text into maximal alphanumeric runs, lowercases them, and drops
/// stopwords. Order and duplicates are preserved.
pub fn tokenize(raw: &str, stopwords: &Stopwords) -> Vec<String> {
    tokenize_with(raw, stopwords, 1)
}

/// `tokenize` with a minimum token length applied after lowercasing.
pub fn tokenize_with(raw: &str, stopwords: &Stopwords, min_token_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            // Lowercasing can expand into sequences with combining marks
            // (e.g. U+0130); keep only the alphanumeric part so tokens
            // stay lowercase-alphanumeric and tokenization idempotent.
            for lc in ch.to_lowercase() {
                if lc.is_alphanumeric() {
                    current.push(lc);
                }
            }
        } else if !current.is_empty() {
            push_token(
                &mut out,
                std::mem::take(&mut current),
                stopwords,
                min_token_len,
            );
        }
    }
    if !current.is_empty() {
        push_token(&mut out, current, stopwords, min_token_len);
    }
    out
}

fn push_token(out: &mut Vec<String>, token: String, stopwords: &Stopwords, min_len: usize) {
    if token.chars().count() >= min_len && !stopwords.contains(&token) {
        out.push(token);
    }
}

/// One preprocessed, labeled document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub label: String,
    pub tokens: Vec<String>,
}

/// A preprocessed document collection with the term statistics used by the
/// weighting schemes: per-document counts f(w,d), document frequencies
/// df(w), corpus size N, and vocabulary size M.
///
/// Immutable after construction; all orderings (vocabulary, documents,
/// classes) are deterministic functions of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vec<String>,
    vocab_index: HashMap<String, u32>,
    /// Per document, sorted (token index, count) pairs.
    term_counts: Vec<Vec<(u32, u32)>>,
    doc_freq: Vec<u32>,
    doc_len: Vec<u32>,
    classes: Vec<String>,
    class_of: Vec<u32>,
}

impl Corpus {
    /// Builds a corpus from raw (id, label, text) records.
    ///
    /// The vocabulary is ordered by first occurrence; classes are sorted
    /// lexicographically. Documents that end up empty after preprocessing
    /// are kept so N and fold sizes stay faithful to the input.
    pub fn build(
        records: &[(String, String, String)],
        stopwords: &Stopwords,
        min_token_len: usize,
    ) -> Result<Self, CorpusError> {
        if records.is_empty() {
            return Err(CorpusError::NoDocuments);
        }
        let mut seen_ids = HashSet::new();
        let mut documents = Vec::with_capacity(records.len());
        for (id, label, text) in records {
            if label.is_empty() {
                return Err(CorpusError::EmptyLabel(id.clone()));
            }
            if !seen_ids.insert(id.clone()) {
                return Err(CorpusError::DuplicateId(id.clone()));
            }
            documents.push(Document {
                id: id.clone(),
                label: label.clone(),
                tokens: tokenize_with(text, stopwords, min_token_len),
            });
        }
        Self::from_documents(documents)
    }

    /// Builds a corpus from already-tokenized documents.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self, CorpusError> {
        if documents.is_empty() {
            return Err(CorpusError::NoDocuments);
        }
        let mut seen_ids = HashSet::new();
        for d in &documents {
            if d.label.is_empty() {
                return Err(CorpusError::EmptyLabel(d.id.clone()));
            }
            if !seen_ids.insert(d.id.clone()) {
                return Err(CorpusError::DuplicateId(d.id.clone()));
            }
        }

        let mut vocabulary: Vec<String> = Vec::new();
        let mut vocab_index: HashMap<String, u32> = HashMap::new();
        let mut term_counts: Vec<Vec<(u32, u32)>> = Vec::with_capacity(documents.len());
        let mut doc_len: Vec<u32> = Vec::with_capacity(documents.len());

        for doc in &documents {
            let mut counts: HashMap<u32, u32> = HashMap::new();
            for token in &doc.tokens {
                let idx = match vocab_index.get(token) {
                    Some(&i) => i,
                    None => {
                        let i = vocabulary.len() as u32;
                        vocabulary.push(token.clone());
                        vocab_index.insert(token.clone(), i);
                        i
                    }
                };
                *counts.entry(idx).or_insert(0) += 1;
            }
            let mut pairs: Vec<(u32, u32)> = counts.into_iter().collect();
            pairs.sort_unstable_by_key(|&(i, _)| i);
            doc_len.push(doc.tokens.len() as u32);
            term_counts.push(pairs);
        }

        let mut doc_freq = vec![0u32; vocabulary.len()];
        for pairs in &term_counts {
            for &(idx, _) in pairs {
                doc_freq[idx as usize] += 1;
            }
        }

        let mut classes: Vec<String> = documents
            .iter()
            .map(|d| d.label.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        classes.sort();
        let class_index: HashMap<&str, u32> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        let class_of = documents
            .iter()
            .map(|d| class_index[d.label.as_str()])
            .collect();

        Ok(Self {
            documents,
            vocabulary,
            vocab_index,
            term_counts,
            doc_freq,
            doc_len,
            classes,
            class_of,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn token(&self, idx: u32) -> &str {
        &self.vocabulary[idx as usize]
    }

    pub fn token_index(&self, token: &str) -> Option<u32> {
        self.vocab_index.get(token).copied()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, doc: usize) -> &Document {
        &self.documents[doc]
    }

    /// Sorted (token index, count) pairs for one document.
    pub fn term_counts(&self, doc: usize) -> &[(u32, u32)] {
        &self.term_counts[doc]
    }

    pub fn count(&self, doc: usize, token_idx: u32) -> u32 {
        match self.term_counts[doc].binary_search_by_key(&token_idx, |&(i, _)| i) {
            Ok(pos) => self.term_counts[doc][pos].1,
            Err(_) => 0,
        }
    }

    pub fn doc_freq(&self, token_idx: u32) -> u32 {
        self.doc_freq[token_idx as usize]
    }

    pub fn doc_freqs(&self) -> &[u32] {
        &self.doc_freq
    }

    /// Post-preprocessing token count of a document.
    pub fn doc_len(&self, doc: usize) -> u32 {
        self.doc_len[doc]
    }

    /// Distinct labels, sorted lexicographically.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_of(&self, doc: usize) -> u32 {
        self.class_of[doc]
    }

    pub fn label_of(&self, doc: usize) -> &str {
        &self.classes[self.class_of[doc] as usize]
    }

    /// SHA-256 over the length-prefixed vocabulary, in order. Propagation
    /// matrices carry this hash so they cannot silently be applied to a
    /// different corpus.
    pub fn vocab_hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for word in &self.vocabulary {
            hasher.update((word.len() as u64).to_le_bytes());
            hasher.update(word.as_bytes());
        }
        hasher.finalize().into()
    }
}

/// Loads raw (id, label, text) records from either a directory-per-class
/// tree (`root/<label>/<file>`) or a `label<TAB>text` file.
///
/// Ordering is deterministic: lexicographic by relative path for trees,
/// line number for delimited files.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<(String, String, String)>, CorpusError> {
    let path = path.as_ref();
    let meta = fs::metadata(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let records = if meta.is_dir() {
        load_class_dirs(path)?
    } else {
        load_tsv(path)?
    };
    if records.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    Ok(records)
}

fn load_class_dirs(root: &Path) -> Result<Vec<(String, String, String)>, CorpusError> {
    let io = |p: &Path, source| CorpusError::Io {
        path: p.display().to_string(),
        source,
    };
    let mut class_dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| io(root, e))? {
        let entry = entry.map_err(|e| io(root, e))?;
        let p = entry.path();
        if p.is_dir() {
            class_dirs.push(p);
        } else {
            return Err(CorpusError::NotClassLayout {
                path: root.display().to_string(),
                entry: entry.file_name().to_string_lossy().into_owned(),
            });
        }
    }
    class_dirs.sort();

    let mut records = Vec::new();
    for dir in class_dirs {
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files = Vec::new();
        collect_files(&dir, &mut files)?;
        files.sort();
        for file in files {
            let rel: String = file
                .strip_prefix(root)
                .unwrap_or(&file)
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            let text = fs::read_to_string(&file).map_err(|e| io(&file, e))?;
            records.push((rel, label.clone(), text));
        }
    }
    records.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(records)
}

fn collect_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<(), CorpusError> {
    let io = |p: &Path, source| CorpusError::Io {
        path: p.display().to_string(),
        source,
    };
    for entry in fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let entry = entry.map_err(|e| io(dir, e))?;
        let p = entry.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

fn load_tsv(path: &Path) -> Result<Vec<(String, String, String)>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let (label, body) = line.split_once('\t').ok_or(CorpusError::MissingSeparator {
            path: path.display().to_string(),
            line: line_no,
        })?;
        if label.is_empty() {
            return Err(CorpusError::EmptyLineLabel {
                path: path.display().to_string(),
                line: line_no,
            });
        }
        records.push((
            format!("line-{line_no}"),
            label.to_string(),
            body.to_string(),
        ));
    }
    Ok(records)
}
