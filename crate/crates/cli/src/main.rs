//! `cptw`: build τ-thresholded propagation matrices from pretrained word
//! embeddings, represent documents under propagated and baseline
//! weighting schemes, evaluate them with a cross-validated kNN harness,
//! and sweep the inter-vs-intra class ratio over τ.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use cptw_core::eval::{CvConfig, Grids, Metric, Normalization, Scheme};
use cptw_core::iicr::SweepScheme;
use cptw_core::weighting::{
    bm25_vector, cptw_idf_vector, cptw_vector, tf_vector, tfidf_vector, we_avg_vector, Bm25Params,
    Bm25Stats, CptwIdfMode, DocVector, IdfTable, SifModel,
};
use cptw_core::{
    build_propagation, cross_validate, load_dataset, tau_sweep, Corpus, EmbeddingTable64,
    PropagationMatrix64, Stopwords,
};
use output::{
    config_digest, read_vector_file, sig6, write_sweep_csv, write_vector_csv, write_vector_file,
    LabeledVector, Provenance,
};
use serde::Serialize;

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors with an exit-code policy: usage mistakes exit 1, data and
/// format problems exit 2.
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser)]
#[command(
    name = "cptw",
    version,
    about = "Contextually propagated term weights toolkit"
)]
struct Cli {
    /// Cap on worker threads (default: all cores). Results are identical
    /// for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Stderr verbosity.
    #[arg(long, global = true, default_value = "info", value_parser = ["quiet", "info", "debug"])]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataOpts {
    /// Dataset: a directory-per-class tree or a `label<TAB>text` file.
    #[arg(long)]
    dataset: PathBuf,

    /// Stopword file, one token per line (default: the vendored SMART
    /// list; the CPTW_STOPWORDS environment variable overrides it).
    #[arg(long)]
    stopwords: Option<PathBuf>,

    /// Minimum token length kept by preprocessing.
    #[arg(long, default_value_t = 1)]
    min_token_len: usize,
}

#[derive(Args)]
struct EmbeddingOpts {
    /// Pretrained embedding file; `.bin` files are read as word2vec
    /// binary, everything else as whitespace-separated text.
    #[arg(long)]
    embeddings: PathBuf,

    /// Force the embedding file format instead of sniffing the extension.
    #[arg(long, value_parser = ["text", "binary"])]
    embedding_format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the τ-thresholded propagation matrix for a dataset's
    /// vocabulary and write it to a matrix file.
    BuildSim {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        emb: EmbeddingOpts,
        /// Cosine threshold in (0,1]; 0 is mapped to 1e-6.
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write document vectors under one weighting scheme.
    Represent {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        emb: EmbeddingOpts,
        /// bow | tfidf | bm25 | cptw | cptw-idf | we-avg | sif
        #[arg(long)]
        scheme: String,
        /// Cosine threshold for the propagated schemes (ignored when
        /// --matrix is given).
        #[arg(long)]
        tau: Option<f64>,
        /// Reuse a prebuilt propagation matrix (hash-checked).
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 1.2)]
        k1: f64,
        #[arg(long, default_value_t = 0.75)]
        b: f64,
        /// SIF smoothing parameter.
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        #[arg(long, default_value = "l2", value_parser = ["l2", "none"])]
        normalize: String,
        #[arg(long, default_value = "inside-log", value_parser = ["inside-log", "outside-log"])]
        idf_mode: String,
        #[arg(long, default_value = "bin", value_parser = ["bin", "csv"])]
        format: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated grid-search evaluation with kNN and micro/macro F1.
    Evaluate {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        emb: EmbeddingOpts,
        /// Comma-separated scheme list.
        #[arg(long)]
        schemes: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Explicit fold assignment file: `doc_id<TAB>fold` lines.
        #[arg(long)]
        split_file: Option<PathBuf>,
        #[arg(long, default_value = "l2", value_parser = ["l2", "none"])]
        normalize: String,
        #[arg(long, default_value = "euclidean", value_parser = ["euclidean", "cosine"])]
        metric: String,
        #[arg(long, default_value = "inside-log", value_parser = ["inside-log", "outside-log"])]
        idf_mode: String,
        /// kNN k grid, e.g. `1:19:1` or `1,3,5`.
        #[arg(long)]
        grid_k: Option<String>,
        /// τ grid, e.g. `0:1.0:0.05`.
        #[arg(long)]
        grid_tau: Option<String>,
        #[arg(long)]
        grid_k1: Option<String>,
        #[arg(long)]
        grid_b: Option<String>,
        #[arg(long)]
        grid_alpha: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inter-vs-intra class ratio swept over τ, written as CSV.
    IicrSweep {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        emb: EmbeddingOpts,
        #[arg(long, value_parser = ["cptw", "cptw-idf"])]
        scheme: String,
        /// τ values, e.g. `0.05:1.0:0.05` or `0.4,0.6`.
        #[arg(long)]
        taus: String,
        /// Neighbourhood size (the best k from a cross-validation run).
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "l2", value_parser = ["l2", "none"])]
        normalize: String,
        #[arg(long, default_value = "inside-log", value_parser = ["inside-log", "outside-log"])]
        idf_mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distances between the three demo sentences under BOW and CPTW.
    Fig1Demo {
        #[command(flatten)]
        emb: EmbeddingOpts,
        #[arg(long, default_value_t = 0.4)]
        tau: f64,
        /// Stopword file (default: vendored SMART list).
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Print summary information about a vector file.
    Inspect {
        #[arg(long)]
        vectors: PathBuf,
    },
}

struct Log {
    level: u8,
}

impl Log {
    fn new(level: &str) -> Self {
        let level = match level {
            "quiet" => 0,
            "debug" => 2,
            _ => 1,
        };
        Self { level }
    }

    fn info(&self, msg: impl AsRef<str>) {
        if self.level >= 1 {
            eprintln!("info: {}", msg.as_ref());
        }
    }

    fn debug(&self, msg: impl AsRef<str>) {
        if self.level >= 2 {
            eprintln!("debug: {}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let log = Log::new(&cli.log_level);
    match run(cli.command, &log) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn check_path(path: &Path, what: &str) -> CliResult<()> {
    if !path.exists() {
        return Err(CliError::Data(anyhow!(
            "{what} path does not exist: {}",
            path.display()
        )));
    }
    Ok(())
}

fn load_stopwords(explicit: Option<&PathBuf>) -> CliResult<(Stopwords, String)> {
    let env_path = std::env::var_os("CPTW_STOPWORDS").map(PathBuf::from);
    let path = explicit.cloned().or(env_path);
    match path {
        Some(p) => {
            check_path(&p, "stopwords")?;
            let sw = Stopwords::from_file(&p)
                .with_context(|| format!("reading stopwords {}", p.display()))
                .map_err(CliError::Data)?;
            Ok((sw, p.display().to_string()))
        }
        None => Ok((Stopwords::smart(), "vendored-smart".to_string())),
    }
}

fn load_embeddings(opts: &EmbeddingOpts, log: &Log) -> CliResult<EmbeddingTable64> {
    check_path(&opts.embeddings, "embeddings")?;
    let binary = match opts.embedding_format.as_deref() {
        Some("binary") => true,
        Some("text") => false,
        _ => opts
            .embeddings
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("bin")),
    };
    let table = if binary {
        EmbeddingTable64::load_binary(&opts.embeddings)
    } else {
        EmbeddingTable64::load_text(&opts.embeddings)
    }
    .with_context(|| format!("loading embeddings {}", opts.embeddings.display()))
    .map_err(CliError::Data)?;
    log.info(format!(
        "embeddings: {} vectors, dim {}",
        table.len(),
        table.dim()
    ));
    if table.duplicate_count() > 0 {
        log.info(format!(
            "embeddings: {} duplicate tokens kept first occurrence",
            table.duplicate_count()
        ));
    }
    if table.zero_norm_count() > 0 {
        log.info(format!(
            "embeddings: {} zero-norm vectors dropped",
            table.zero_norm_count()
        ));
    }
    Ok(table)
}

fn load_corpus(data: &DataOpts, log: &Log) -> CliResult<(Corpus, String)> {
    check_path(&data.dataset, "dataset")?;
    let (stopwords, stopwords_src) = load_stopwords(data.stopwords.as_ref())?;
    let records = load_dataset(&data.dataset)
        .with_context(|| format!("loading dataset {}", data.dataset.display()))
        .map_err(CliError::Data)?;
    let corpus = Corpus::build(&records, &stopwords, data.min_token_len)
        .context("building corpus")
        .map_err(CliError::Data)?;
    log.info(format!(
        "corpus: {} documents, {} unique words, {} classes",
        corpus.n_docs(),
        corpus.vocab_size(),
        corpus.classes().len()
    ));
    Ok((corpus, stopwords_src))
}

/// Parses `start:end:step`, a comma list, or a single number.
fn parse_f64_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || {
        usage(format!(
            "cannot parse grid {spec:?}: use start:end:step or a,b,c"
        ))
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let end: f64 = parts[1].parse().map_err(|_| bad())?;
        let step: f64 = parts[2].parse().map_err(|_| bad())?;
        if step <= 0.0 || end < start {
            return Err(bad());
        }
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let v = start + step * i as f64;
            if v > end + step * 1e-9 {
                break;
            }
            out.push(v.min(end));
            i += 1;
        }
        Ok(out)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

/// Parses τ values, mapping a requested 0 to the minimum supported τ and
/// rejecting anything outside [0, 1].
fn parse_tau_values(spec: &str) -> CliResult<Vec<f64>> {
    parse_f64_grid(spec)?
        .into_iter()
        .map(|t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(usage(format!("tau must be in [0, 1], got {t}")));
            }
            Ok(cptw_core::effective_tau(t).0)
        })
        .collect()
}

fn parse_usize_grid(spec: &str) -> CliResult<Vec<usize>> {
    let values = parse_f64_grid(spec)?;
    values
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(usage(format!("grid value {v} is not a positive integer")))
            }
        })
        .collect()
}

fn parse_normalize(s: &str) -> Normalization {
    Normalization::parse(s).expect("validated by clap")
}

fn parse_idf_mode(s: &str) -> CptwIdfMode {
    match s {
        "outside-log" => CptwIdfMode::WeightOutsideLog,
        _ => CptwIdfMode::WeightInsideLog,
    }
}

/// Resolved parameters embedded (as a digest) in every output.
#[derive(Serialize)]
struct ResolvedConfig<'a> {
    tool_version: &'a str,
    command: &'a str,
    dataset: Option<String>,
    embeddings: Option<String>,
    stopwords: Option<&'a str>,
    min_token_len: Option<usize>,
    scheme: Option<&'a str>,
    schemes: Option<&'a str>,
    tau: Option<f64>,
    k1: Option<f64>,
    b: Option<f64>,
    alpha: Option<f64>,
    k: Option<usize>,
    folds: Option<usize>,
    seed: u64,
    normalize: Option<&'a str>,
    metric: Option<&'a str>,
    idf_mode: Option<&'a str>,
    grids: Option<&'a Grids>,
    taus: Option<&'a [f64]>,
}

impl<'a> ResolvedConfig<'a> {
    fn new(command: &'a str, seed: u64) -> Self {
        Self {
            tool_version: TOOL_VERSION,
            command,
            dataset: None,
            embeddings: None,
            stopwords: None,
            min_token_len: None,
            scheme: None,
            schemes: None,
            tau: None,
            k1: None,
            b: None,
            alpha: None,
            k: None,
            folds: None,
            seed,
            normalize: None,
            metric: None,
            idf_mode: None,
            grids: None,
            taus: None,
        }
    }
}

fn run(command: Command, log: &Log) -> CliResult<()> {
    match command {
        Command::BuildSim {
            data,
            emb,
            tau,
            out,
        } => build_sim(data, emb, tau, out, log),
        Command::Represent {
            data,
            emb,
            scheme,
            tau,
            matrix,
            k1,
            b,
            alpha,
            normalize,
            idf_mode,
            format,
            seed,
            out,
        } => represent(
            data, emb, scheme, tau, matrix, k1, b, alpha, normalize, idf_mode, format, seed, out,
            log,
        ),
        Command::Evaluate {
            data,
            emb,
            schemes,
            seed,
            folds,
            split_file,
            normalize,
            metric,
            idf_mode,
            grid_k,
            grid_tau,
            grid_k1,
            grid_b,
            grid_alpha,
            out,
        } => evaluate(
            data, emb, schemes, seed, folds, split_file, normalize, metric, idf_mode, grid_k,
            grid_tau, grid_k1, grid_b, grid_alpha, out, log,
        ),
        Command::IicrSweep {
            data,
            emb,
            scheme,
            taus,
            k,
            normalize,
            idf_mode,
            seed,
            out,
        } => iicr_sweep(
            data, emb, scheme, taus, k, normalize, idf_mode, seed, out, log,
        ),
        Command::Fig1Demo {
            emb,
            tau,
            stopwords,
        } => fig1_demo(emb, tau, stopwords, log),
        Command::Inspect { vectors } => inspect(vectors),
    }
}

fn build_sim(
    data: DataOpts,
    emb: EmbeddingOpts,
    tau: f64,
    out: PathBuf,
    log: &Log,
) -> CliResult<()> {
    let (requested, mapped) = cptw_core::effective_tau(tau);
    if mapped {
        log.info(format!("tau 0 mapped to {requested}"));
    }
    if !(requested > 0.0 && requested <= 1.0) {
        return Err(usage(format!("tau must be in (0, 1], got {tau}")));
    }
    let (corpus, _) = load_corpus(&data, log)?;
    let table = load_embeddings(&emb, log)?;
    let matrix = build_propagation(&table, &corpus, requested)
        .context("building propagation matrix")
        .map_err(CliError::Data)?;
    log.info(format!(
        "matrix: {} rows, {} entries, tau {}",
        matrix.m(),
        matrix.nnz(),
        sig6(requested)
    ));
    matrix
        .save(&out)
        .with_context(|| format!("writing {}", out.display()))
        .map_err(CliError::Data)?;
    log.info(format!("wrote {}", out.display()));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn represent(
    data: DataOpts,
    emb_opts: EmbeddingOpts,
    scheme: String,
    tau: Option<f64>,
    matrix: Option<PathBuf>,
    k1: f64,
    b: f64,
    alpha: f64,
    normalize: String,
    idf_mode: String,
    format: String,
    seed: u64,
    out: PathBuf,
    log: &Log,
) -> CliResult<()> {
    let scheme = Scheme::parse(&scheme).map_err(|e| usage(e.to_string()))?;
    let (corpus, stopwords_src) = load_corpus(&data, log)?;
    let norm = parse_normalize(&normalize);
    let mode = parse_idf_mode(&idf_mode);

    let needs_matrix = matches!(scheme, Scheme::Cptw | Scheme::CptwIdf);
    let prop: Option<PropagationMatrix64> = if needs_matrix {
        Some(match &matrix {
            Some(path) => {
                check_path(path, "matrix")?;
                PropagationMatrix64::load_for(path, &corpus)
                    .context("loading propagation matrix")
                    .map_err(CliError::Data)?
            }
            None => {
                let t = tau
                    .ok_or_else(|| usage("propagated schemes need --tau or a prebuilt --matrix"))?;
                let (t, mapped) = cptw_core::effective_tau(t);
                if mapped {
                    log.info(format!("tau 0 mapped to {t}"));
                }
                let table = load_embeddings(&emb_opts, log)?;
                build_propagation(&table, &corpus, t)
                    .context("building propagation matrix")
                    .map_err(CliError::Data)?
            }
        })
    } else {
        None
    };
    let table = if scheme.needs_embeddings() && prop.is_none() {
        Some(load_embeddings(&emb_opts, log)?)
    } else {
        None
    };

    let docs: Vec<usize> = (0..corpus.n_docs()).collect();
    let idf = IdfTable::from_corpus(&corpus);
    let stats = Bm25Stats::from_corpus(&corpus);
    let vectors: Vec<DocVector<f64>> = match scheme {
        Scheme::Bow => docs.iter().map(|&d| tf_vector(&corpus, d)).collect(),
        Scheme::Tfidf => docs
            .iter()
            .map(|&d| tfidf_vector(&corpus, d, &idf))
            .collect(),
        Scheme::Bm25 => docs
            .iter()
            .map(|&d| bm25_vector(&corpus, d, &stats, Bm25Params { k1, b }))
            .collect(),
        Scheme::Cptw => {
            let p = prop.as_ref().unwrap();
            docs.iter()
                .map(|&d| cptw_vector(&corpus, d, p))
                .collect::<Result<_, _>>()
                .context("computing cptw vectors")
                .map_err(CliError::Data)?
        }
        Scheme::CptwIdf => {
            let p = prop.as_ref().unwrap();
            docs.iter()
                .map(|&d| cptw_idf_vector(&corpus, d, p, &idf, mode))
                .collect::<Result<_, _>>()
                .context("computing cptw-idf vectors")
                .map_err(CliError::Data)?
        }
        Scheme::WeAvg => {
            let t = table.as_ref().unwrap();
            docs.iter().map(|&d| we_avg_vector(&corpus, d, t)).collect()
        }
        Scheme::Sif => {
            let t = table.as_ref().unwrap();
            let model = SifModel::fit(&corpus, &docs, t, alpha)
                .context("fitting sif")
                .map_err(CliError::Data)?;
            docs.iter().map(|&d| model.embed(&corpus, d, t)).collect()
        }
    };
    let vectors: Vec<DocVector<f64>> = vectors
        .into_iter()
        .map(|mut v| {
            if norm == Normalization::L2 && v.is_sparse() {
                v.l2_normalize();
            }
            v
        })
        .collect();

    let resolved_tau = prop.as_ref().map(|p| p.tau()).or(tau);
    let mut config = ResolvedConfig::new("represent", seed);
    config.dataset = Some(data.dataset.display().to_string());
    config.embeddings = Some(emb_opts.embeddings.display().to_string());
    config.stopwords = Some(&stopwords_src);
    config.min_token_len = Some(data.min_token_len);
    config.scheme = Some(scheme.name());
    config.tau = resolved_tau;
    config.k1 = Some(k1);
    config.b = Some(b);
    config.alpha = Some(alpha);
    config.normalize = Some(norm.name());
    config.idf_mode = Some(&idf_mode);
    let provenance = Provenance {
        tool_version: TOOL_VERSION,
        seed,
        config_digest: config_digest(&config),
    };

    let labeled: Vec<LabeledVector> = docs
        .iter()
        .map(|&d| LabeledVector {
            id: &corpus.document(d).id,
            label: corpus.label_of(d),
            vector: &vectors[d],
        })
        .collect();
    let dim = vectors.first().map(|v| v.dim()).unwrap_or(0);
    match format.as_str() {
        "csv" => write_vector_csv(&out, &provenance, &labeled).map_err(CliError::Data)?,
        _ => {
            let hash = scheme.is_sparse().then(|| corpus.vocab_hash());
            write_vector_file(&out, &provenance, scheme.name(), hash, dim, &labeled)
                .map_err(CliError::Data)?
        }
    }
    log.info(format!(
        "wrote {} ({} vectors, scheme {})",
        out.display(),
        labeled.len(),
        scheme.name()
    ));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    data: DataOpts,
    emb_opts: EmbeddingOpts,
    schemes: String,
    seed: u64,
    folds: usize,
    split_file: Option<PathBuf>,
    normalize: String,
    metric: String,
    idf_mode: String,
    grid_k: Option<String>,
    grid_tau: Option<String>,
    grid_k1: Option<String>,
    grid_b: Option<String>,
    grid_alpha: Option<String>,
    out: PathBuf,
    log: &Log,
) -> CliResult<()> {
    let schemes: Vec<Scheme> = schemes
        .split(',')
        .map(|s| Scheme::parse(s.trim()).map_err(|e| usage(e.to_string())))
        .collect::<CliResult<_>>()?;
    if folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }
    let mut grids = Grids::default();
    if let Some(spec) = &grid_k {
        grids.k = parse_usize_grid(spec)?;
    }
    if let Some(spec) = &grid_tau {
        grids.tau = parse_tau_values(spec)?;
    }
    if let Some(spec) = &grid_k1 {
        grids.bm25_k1 = parse_f64_grid(spec)?;
    }
    if let Some(spec) = &grid_b {
        grids.bm25_b = parse_f64_grid(spec)?;
    }
    if let Some(spec) = &grid_alpha {
        grids.sif_alpha = parse_f64_grid(spec)?;
    }

    let (corpus, stopwords_src) = load_corpus(&data, log)?;
    let needs_emb = schemes.iter().any(|s| s.needs_embeddings());
    let table = if needs_emb {
        Some(load_embeddings(&emb_opts, log)?)
    } else {
        None
    };
    let split = match &split_file {
        Some(path) => {
            check_path(path, "split file")?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(CliError::Data)?;
            Some(
                cptw_core::parse_split_file(&text, &corpus, folds)
                    .context("parsing split file")
                    .map_err(CliError::Data)?,
            )
        }
        None => None,
    };

    let scheme_names = schemes
        .iter()
        .map(|s| s.name())
        .collect::<Vec<_>>()
        .join(",");
    let cfg = CvConfig {
        schemes,
        grids,
        seed,
        n_folds: folds,
        n_draws: 3,
        normalize: parse_normalize(&normalize),
        metric: match metric.as_str() {
            "cosine" => Metric::Cosine,
            _ => Metric::Euclidean,
        },
        idf_mode: parse_idf_mode(&idf_mode),
        split,
    };

    let mut config = ResolvedConfig::new("evaluate", seed);
    config.dataset = Some(data.dataset.display().to_string());
    config.embeddings = Some(emb_opts.embeddings.display().to_string());
    config.stopwords = Some(&stopwords_src);
    config.min_token_len = Some(data.min_token_len);
    config.schemes = Some(&scheme_names);
    config.folds = Some(folds);
    config.normalize = Some(cfg.normalize.name());
    config.metric = Some(cfg.metric.name());
    config.idf_mode = Some(&idf_mode);
    config.grids = Some(&cfg.grids);
    let digest = config_digest(&config);

    let report = cross_validate(&corpus, table.as_ref(), &cfg)
        .context("cross validation")
        .map_err(CliError::Data)?;
    for w in &report.fold_warnings {
        log.info(format!("folds: {w}"));
    }
    for (stage, seconds) in &report.stage_seconds {
        log.debug(format!("stage {stage}: {}s", sig6(*seconds)));
    }
    for scheme in &report.schemes {
        log.info(format!(
            "{}: micro F1 {}, macro F1 {}",
            scheme.scheme,
            sig6(scheme.mean_micro_f1),
            sig6(scheme.mean_macro_f1)
        ));
    }

    #[derive(Serialize)]
    struct ReportFile<'a> {
        tool_version: &'a str,
        config_digest: &'a str,
        #[serde(flatten)]
        report: &'a cptw_core::EvalReport,
    }
    let body = serde_json::to_string_pretty(&ReportFile {
        tool_version: TOOL_VERSION,
        config_digest: &digest,
        report: &report,
    })
    .context("serializing report")
    .map_err(CliError::Data)?;
    std::fs::write(&out, body + "\n")
        .with_context(|| format!("writing {}", out.display()))
        .map_err(CliError::Data)?;
    log.info(format!("wrote {}", out.display()));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn iicr_sweep(
    data: DataOpts,
    emb_opts: EmbeddingOpts,
    scheme: String,
    taus: String,
    k: usize,
    normalize: String,
    idf_mode: String,
    seed: u64,
    out: PathBuf,
    log: &Log,
) -> CliResult<()> {
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let sweep_scheme = match scheme.as_str() {
        "cptw" => SweepScheme::Cptw,
        _ => SweepScheme::CptwIdf,
    };
    let tau_values = parse_tau_values(&taus)?;
    if tau_values.is_empty() {
        return Err(usage("--taus produced an empty list"));
    }
    let (corpus, stopwords_src) = load_corpus(&data, log)?;
    let table = load_embeddings(&emb_opts, log)?;

    let rows = tau_sweep(
        &corpus,
        &table,
        sweep_scheme,
        &tau_values,
        k,
        parse_normalize(&normalize),
        parse_idf_mode(&idf_mode),
    );
    let mut ok_rows = Vec::new();
    for (tau, result) in rows {
        match result {
            Ok(r) => ok_rows.push((tau, r)),
            Err(e) => log.info(format!("tau {}: {e}", sig6(tau))),
        }
    }
    if ok_rows.is_empty() {
        return Err(CliError::Data(anyhow!(
            "every tau failed; nothing to write"
        )));
    }

    let mut config = ResolvedConfig::new("iicr-sweep", seed);
    config.dataset = Some(data.dataset.display().to_string());
    config.embeddings = Some(emb_opts.embeddings.display().to_string());
    config.stopwords = Some(&stopwords_src);
    config.min_token_len = Some(data.min_token_len);
    config.scheme = Some(sweep_scheme.name());
    config.k = Some(k);
    config.normalize = Some(&normalize);
    config.idf_mode = Some(&idf_mode);
    config.taus = Some(&tau_values);
    let provenance = Provenance {
        tool_version: TOOL_VERSION,
        seed,
        config_digest: config_digest(&config),
    };
    write_sweep_csv(&out, &provenance, &ok_rows).map_err(CliError::Data)?;
    log.info(format!(
        "wrote {} ({} tau values)",
        out.display(),
        ok_rows.len()
    ));
    Ok(())
}

const DEMO_SENTENCES: [&str; 3] = [
    "The boat is sailing on the sea",
    "The ship was cruising on the ocean",
    "The cat was relaxing on the couch",
];

fn fig1_demo(
    emb_opts: EmbeddingOpts,
    tau: f64,
    stopwords: Option<PathBuf>,
    log: &Log,
) -> CliResult<()> {
    let (requested, mapped) = cptw_core::effective_tau(tau);
    if mapped {
        log.info(format!("tau 0 mapped to {requested}"));
    }
    if !(requested > 0.0 && requested <= 1.0) {
        return Err(usage(format!("tau must be in (0, 1], got {tau}")));
    }
    let (sw, _) = load_stopwords(stopwords.as_ref())?;
    let table = load_embeddings(&emb_opts, log)?;

    let records: Vec<(String, String, String)> = DEMO_SENTENCES
        .iter()
        .enumerate()
        .map(|(i, s)| ((i + 1).to_string(), (i + 1).to_string(), s.to_string()))
        .collect();
    let corpus = Corpus::build(&records, &sw, 1)
        .context("building demo corpus")
        .map_err(CliError::Data)?;

    let missing: Vec<&str> = corpus
        .vocabulary()
        .iter()
        .filter(|w| table.get(w).is_none())
        .map(|w| w.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Data(anyhow!(
            "demo words missing from the embedding: {}",
            missing.join(", ")
        )));
    }

    let p = build_propagation(&table, &corpus, requested)
        .context("building propagation matrix")
        .map_err(CliError::Data)?;
    let bow: Vec<DocVector<f64>> = (0..3)
        .map(|d| tf_vector::<f64>(&corpus, d).l2_normalized())
        .collect();
    let cptw: Vec<DocVector<f64>> = (0..3)
        .map(|d| cptw_vector(&corpus, d, &p).map(|v| v.l2_normalized()))
        .collect::<Result<_, _>>()
        .context("computing cptw vectors")
        .map_err(CliError::Data)?;

    let dist = |vs: &[DocVector<f64>], a: usize, b: usize| vs[a].euclidean(&vs[b]).unwrap();
    println!("sentences:");
    for (i, s) in DEMO_SENTENCES.iter().enumerate() {
        println!("  {}: {s}", i + 1);
    }
    println!("tau: {}", sig6(requested));
    println!();
    println!("pair    bow       cptw");
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        println!(
            "{}<->{}  {:>9} {:>9}",
            a + 1,
            b + 1,
            sig6(dist(&bow, a, b)),
            sig6(dist(&cptw, a, b))
        );
    }
    println!();
    let check1 = dist(&cptw, 0, 1) < dist(&bow, 0, 1);
    let check2 = dist(&cptw, 0, 1) < dist(&cptw, 0, 2).min(dist(&cptw, 1, 2));
    println!(
        "check d_cptw(1,2) < d_bow(1,2): {}",
        if check1 { "PASS" } else { "FAIL" }
    );
    println!(
        "check d_cptw(1,2) < min(d_cptw(1,3), d_cptw(2,3)): {}",
        if check2 { "PASS" } else { "FAIL" }
    );
    Ok(())
}

fn inspect(vectors: PathBuf) -> CliResult<()> {
    check_path(&vectors, "vectors")?;
    let file = read_vector_file(&vectors).map_err(CliError::Data)?;
    println!("tool version: {}", file.tool_version);
    println!("seed: {}", file.seed);
    println!("scheme: {}", file.scheme);
    println!("kind: {}", if file.dense { "dense" } else { "sparse" });
    println!("dim: {}", file.dim);
    println!("vocab hash: {}", output::hex(&file.vocab_hash));
    println!("documents: {}", file.docs.len());
    Ok(())
}
