//! Output formatting: significant-digit numbers, provenance headers, the
//! vector file format, and CSV emitters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use cptw_core::weighting::DocVector;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VECTOR_MAGIC: &[u8; 8] = b"CPTWVEC1";

/// Formats with 6 significant digits, the precision used for all numeric
/// console and CSV output.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 digest of the canonical JSON form of a resolved configuration.
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hex(&hasher.finalize())
}

/// Provenance carried by every output: tool version, seed, and the digest
/// of the resolved configuration.
pub struct Provenance {
    pub tool_version: &'static str,
    pub seed: u64,
    pub config_digest: String,
}

impl Provenance {
    pub fn csv_header(&self) -> String {
        format!(
            "# cptw {}\n# seed: {}\n# config: {}\n",
            self.tool_version, self.seed, self.config_digest
        )
    }
}

/// One document's vector plus its identity, as written to vector files.
pub struct LabeledVector<'a> {
    pub id: &'a str,
    pub label: &'a str,
    pub vector: &'a DocVector<f64>,
}

/// Writes the binary vector file: magic `CPTWVEC1`, a provenance header,
/// the scheme name, the vector kind and dimension, the vocabulary hash
/// (zeros for dense vectors), then per document its id, label, and
/// little-endian f64 components (sparse as index/value pairs).
pub fn write_vector_file(
    path: &Path,
    provenance: &Provenance,
    scheme: &str,
    vocab_hash: Option<[u8; 32]>,
    dim: usize,
    docs: &[LabeledVector<'_>],
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(VECTOR_MAGIC)?;
    write_str(&mut w, provenance.tool_version)?;
    let digest_bytes = digest_to_bytes(&provenance.config_digest);
    w.write_all(&digest_bytes)?;
    w.write_all(&provenance.seed.to_le_bytes())?;
    write_str(&mut w, scheme)?;
    let sparse = docs.first().map(|d| d.vector.is_sparse()).unwrap_or(true);
    w.write_all(&[u8::from(!sparse)])?;
    w.write_all(&(dim as u64).to_le_bytes())?;
    w.write_all(&vocab_hash.unwrap_or([0u8; 32]))?;
    w.write_all(&(docs.len() as u64).to_le_bytes())?;
    for doc in docs {
        write_str(&mut w, doc.id)?;
        write_str(&mut w, doc.label)?;
        if sparse {
            let (indices, values) = doc.vector.sparse_parts().expect("uniform vector kind");
            w.write_all(&(indices.len() as u64).to_le_bytes())?;
            for (i, v) in indices.iter().zip(values) {
                w.write_all(&(*i as u64).to_le_bytes())?;
                w.write_all(&v.to_le_bytes())?;
            }
        } else {
            for v in doc.vector.dense_values().expect("uniform vector kind") {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_str(w: &mut impl Write, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn digest_to_bytes(digest_hex: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, chunk) in digest_hex.as_bytes().chunks(2).take(32).enumerate() {
        let s = std::str::from_utf8(chunk).unwrap_or("00");
        out[i] = u8::from_str_radix(s, 16).unwrap_or(0);
    }
    out
}

/// Parsed contents of a vector file.
pub struct VectorFile {
    pub tool_version: String,
    pub seed: u64,
    pub scheme: String,
    pub dense: bool,
    pub dim: usize,
    pub vocab_hash: [u8; 32],
    pub docs: Vec<(String, String, DocVector<f64>)>,
}

pub fn read_vector_file(path: &Path) -> Result<VectorFile> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != VECTOR_MAGIC {
        bail!("{}: not a vector file", path.display());
    }
    let tool_version = read_str(&mut r)?;
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)?;
    let seed = read_u64(&mut r)?;
    let scheme = read_str(&mut r)?;
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    let dense = kind[0] == 1;
    let dim = read_u64(&mut r)? as usize;
    let mut vocab_hash = [0u8; 32];
    r.read_exact(&mut vocab_hash)?;
    let n_docs = read_u64(&mut r)? as usize;
    let mut docs = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let id = read_str(&mut r)?;
        let label = read_str(&mut r)?;
        let vector = if dense {
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                values.push(read_f64(&mut r)?);
            }
            DocVector::dense(values)
        } else {
            let nnz = read_u64(&mut r)? as usize;
            let mut pairs = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let idx = read_u64(&mut r)? as u32;
                pairs.push((idx, read_f64(&mut r)?));
            }
            DocVector::sparse(dim, pairs)
        };
        docs.push((id, label, vector));
    }
    Ok(VectorFile {
        tool_version,
        seed,
        scheme,
        dense,
        dim,
        vocab_hash,
        docs,
    })
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len)?;
    let mut buf = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// CSV form: provenance comments, a header line, then one row per
/// document with space-separated `idx:value` pairs.
pub fn write_vector_csv(
    path: &Path,
    provenance: &Provenance,
    docs: &[LabeledVector<'_>],
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(provenance.csv_header().as_bytes())?;
    writeln!(w, "doc_id,label,idx:value ...")?;
    for doc in docs {
        let pairs: Vec<String> = match doc.vector.sparse_parts() {
            Some((indices, values)) => indices
                .iter()
                .zip(values)
                .map(|(i, v)| format!("{i}:{}", sig6(*v)))
                .collect(),
            None => doc
                .vector
                .dense_values()
                .unwrap()
                .iter()
                .enumerate()
                .map(|(i, v)| format!("{i}:{}", sig6(*v)))
                .collect(),
        };
        writeln!(w, "{},{},{}", doc.id, doc.label, pairs.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep CSV: `tau,iicr,class,inter,intra,ratio` with one row per class
/// and an aggregate row using class `*`.
pub fn write_sweep_csv(
    path: &Path,
    provenance: &Provenance,
    rows: &[(f64, cptw_core::IicrResult64)],
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(provenance.csv_header().as_bytes())?;
    writeln!(w, "tau,iicr,class,inter,intra,ratio")?;
    for (tau, result) in rows {
        for class in &result.classes {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                sig6(*tau),
                sig6(result.iicr),
                class.class,
                sig6(class.inter),
                sig6(class.intra),
                sig6(class.ratio)
            )?;
        }
        let mean_inter =
            result.classes.iter().map(|c| c.inter).sum::<f64>() / result.classes.len() as f64;
        let mean_intra =
            result.classes.iter().map(|c| c.intra).sum::<f64>() / result.classes.len() as f64;
        writeln!(
            w,
            "{},{},*,{},{},{}",
            sig6(*tau),
            sig6(result.iicr),
            sig6(mean_inter),
            sig6(mean_intra),
            sig6(result.iicr)
        )?;
    }
    w.flush()?;
    Ok(())
}
