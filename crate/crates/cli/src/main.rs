//! `proofrank` command-line tool.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 on data errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;
use walkdir::WalkDir;

use proofrank_core::*;
use proofrank_service::{rank_similar, AppState, ServiceConfig, SimilarRequest, DEFAULT_PORT};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn data(e: impl std::fmt::Display) -> Self {
        Self::Data(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "proofrank", version, about = "Proof-similarity corpus tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Subproofs,
    AfterK,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorrScorer {
    Jaccard,
    Bm25,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RankScorer {
    Jaccard,
    Bm25,
    Embedding,
}

impl RankScorer {
    fn name(self) -> &'static str {
        match self {
            Self::Jaccard => "jaccard",
            Self::Bm25 => "bm25",
            Self::Embedding => "embedding",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse Rocq sources into a corpus directory.
    Parse {
        /// `.v` files or directories to scan.
        #[arg(required = true, env = "PROOFRANK_INPUTS", value_delimiter = ',')]
        inputs: Vec<PathBuf>,
        /// Write the corpus schema files here; otherwise print a summary.
        #[arg(long, env = "PROOFRANK_OUT")]
        out: Option<PathBuf>,
    },
    /// Mine sub-theorems from every original record.
    Mine {
        /// Corpus directory or directory of `.v` sources.
        #[arg(long, env = "PROOFRANK_CORPUS")]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "subproofs", env = "PROOFRANK_MODE")]
        mode: ModeArg,
        /// Steps for `after-k`.
        #[arg(long, env = "PROOFRANK_K")]
        k: Option<usize>,
        /// JSON array of `{theorem_id, node_path, goal}` entries.
        #[arg(long, env = "PROOFRANK_GOALS")]
        goals: Option<PathBuf>,
        /// Write the augmented corpus here.
        #[arg(long, env = "PROOFRANK_OUT")]
        out: Option<PathBuf>,
    },
    /// Label all record pairs and export the training dataset.
    Pairs {
        #[arg(long, env = "PROOFRANK_CORPUS")]
        corpus: PathBuf,
        #[arg(long, env = "PROOFRANK_OUT")]
        out: PathBuf,
        /// JSON file with mining-config overrides.
        #[arg(long, env = "PROOFRANK_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long, env = "PROOFRANK_SEED")]
        seed: Option<u64>,
    },
    /// Correlate statement similarity with proof distance.
    Correlate {
        #[arg(long, env = "PROOFRANK_CORPUS")]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "jaccard", env = "PROOFRANK_SCORER")]
        scorer: CorrScorer,
        /// Print JSON instead of a table.
        #[arg(long, env = "PROOFRANK_JSON")]
        json: bool,
    },
    /// Retrieve similar theorems, or evaluate a scorer over the corpus.
    Rank {
        #[arg(long, env = "PROOFRANK_CORPUS")]
        corpus: PathBuf,
        /// Target statement; required unless `--evaluate` is given.
        #[arg(long, env = "PROOFRANK_STATEMENT")]
        statement: Option<String>,
        #[arg(long, env = "PROOFRANK_K")]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "jaccard", env = "PROOFRANK_SCORER")]
        scorer: RankScorer,
        /// Embedding store (JSON lines) for the `embedding` scorer.
        #[arg(long, env = "PROOFRANK_EMBEDDINGS")]
        embeddings: Option<PathBuf>,
        /// Score pairs lacking embeddings with Jaccard.
        #[arg(long, env = "PROOFRANK_FALLBACK")]
        fallback: bool,
        /// Restrict the pool to one source file.
        #[arg(long, env = "PROOFRANK_FILE")]
        file: Option<String>,
        /// Run the same-file retrieval evaluation with a mock generator.
        #[arg(long, env = "PROOFRANK_EVALUATE")]
        evaluate: bool,
        /// Solve threshold of the mock generator.
        #[arg(long, default_value_t = 0.3, env = "PROOFRANK_DELTA")]
        delta: f64,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT, env = "PROOFRANK_PORT")]
        port: u16,
        #[arg(long, default_value = "127.0.0.1", env = "PROOFRANK_HOST")]
        host: String,
        #[arg(long, default_value_t = 64, env = "PROOFRANK_MAX_CORPORA")]
        max_corpora: usize,
        /// Default embedding store for all corpora.
        #[arg(long, env = "PROOFRANK_EMBEDDINGS")]
        embeddings: Option<PathBuf>,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = 60, env = "PROOFRANK_TIMEOUT_SECS")]
        timeout_secs: u64,
    },
}

fn print_json(value: &impl serde::Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

/// All `.v` files under the inputs, with paths relative to the input root.
fn collect_sources(inputs: &[PathBuf]) -> Result<Vec<SourceFile>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if !input.exists() {
            return Err(CliError::Usage(format!(
                "{} does not exist",
                input.display()
            )));
        }
        let root = if input.is_dir() {
            input.as_path()
        } else {
            input.parent().unwrap_or(Path::new(""))
        };
        let mut found: Vec<PathBuf> = WalkDir::new(input)
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "v"))
            .map(|e| e.into_path())
            .collect();
        found.sort();
        for path in found {
            let content = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let rel = path.strip_prefix(root).unwrap_or(&path);
            let name = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            files.push(SourceFile::new(name, content));
        }
    }
    Ok(files)
}

fn report_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

/// A corpus directory holds schema `.json` files; anything else is scanned
/// for `.v` sources.
fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    if !path.is_dir() {
        return Err(CliError::Usage(format!(
            "{} is not a directory",
            path.display()
        )));
    }
    let has_json = std::fs::read_dir(path)
        .map_err(CliError::data)?
        .filter_map(Result::ok)
        .any(|e| e.path().extension().is_some_and(|x| x == "json"));
    let corpus = if has_json {
        Corpus::load_dir(path).map_err(CliError::data)?
    } else {
        let sources = collect_sources(&[path.to_path_buf()])?;
        let corpus = Corpus::from_sources(&sources).map_err(CliError::data)?;
        report_diagnostics(corpus.diagnostics());
        corpus
    };
    if corpus.is_empty() {
        return Err(CliError::Data(format!("no theorems in {}", path.display())));
    }
    Ok(corpus)
}

fn parse_cmd(inputs: &[PathBuf], out: Option<&Path>) -> CliResult {
    let sources = collect_sources(inputs)?;
    if sources.is_empty() {
        return Err(CliError::Data("no .v files found".into()));
    }
    let corpus = Corpus::from_sources(&sources).map_err(CliError::data)?;
    report_diagnostics(corpus.diagnostics());
    if corpus.is_empty() {
        return Err(CliError::Data("no theorems found".into()));
    }
    if let Some(out) = out {
        corpus.write_dir(out).map_err(CliError::data)?;
    }
    let with_selectors = corpus
        .records()
        .iter()
        .filter(|r| r.has_goal_selectors)
        .count();
    print_json(&serde_json::json!({
        "files": sources.len(),
        "records": corpus.len(),
        "with_goal_selectors": with_selectors,
        "diagnostics": corpus.diagnostics().len(),
    }));
    Ok(())
}

fn mining_mode(mode: ModeArg, k: Option<usize>) -> Result<MiningMode, CliError> {
    match (mode, k) {
        (ModeArg::Subproofs, _) => Ok(MiningMode::Subproofs),
        (ModeArg::AfterK, Some(k)) => Ok(MiningMode::AfterK { k }),
        (ModeArg::AfterK, None) => Err(CliError::Usage("--mode after-k needs --k".into())),
    }
}

fn mine_cmd(
    corpus: &Path,
    mode: MiningMode,
    goals: Option<&Path>,
    out: Option<&Path>,
) -> CliResult {
    let mut corpus = load_corpus(corpus)?;
    let goals = goals
        .map(GoalOracle::load)
        .transpose()
        .map_err(CliError::data)?;
    let stats = corpus.mine(mode, goals.as_ref()).map_err(CliError::data)?;
    for (id, reason) in &stats.failures {
        eprintln!("{id}: {reason}");
    }
    if let Some(out) = out {
        corpus.write_dir(out).map_err(CliError::data)?;
    }
    print_json(&stats);
    Ok(())
}

fn pairs_cmd(corpus: &Path, out: &Path, config: Option<&Path>, seed: Option<u64>) -> CliResult {
    let corpus = load_corpus(corpus)?;
    let mut config: MiningConfig = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => MiningConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let pairs = mine_pairs(&corpus, &config).map_err(CliError::data)?;
    let (splits, warnings) = split_by_file(&corpus, &config).map_err(CliError::data)?;
    report_diagnostics(&warnings);
    let manifest =
        export_dataset(&corpus, &pairs, &splits, &config, out).map_err(CliError::data)?;
    print_json(&manifest);
    Ok(())
}

fn correlate_cmd(corpus: &Path, scorer: CorrScorer, json: bool) -> CliResult {
    let corpus = load_corpus(corpus)?;
    let bm25;
    let scorer: &dyn Scorer = match scorer {
        CorrScorer::Jaccard => &JaccardScorer,
        CorrScorer::Bm25 => {
            bm25 = Bm25Scorer::new(&corpus, Bm25Params::default()).map_err(CliError::data)?;
            &bm25
        }
    };
    let report = correlation_experiment(&corpus, scorer, &DistanceParams::default())
        .map_err(CliError::data)?;
    if json {
        print_json(&report);
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

struct RankArgs {
    statement: Option<String>,
    k: Option<usize>,
    scorer: RankScorer,
    embeddings: Option<PathBuf>,
    fallback: bool,
    file: Option<String>,
    evaluate: bool,
    delta: f64,
}

fn rank_cmd(corpus: &Path, args: RankArgs) -> CliResult {
    let corpus = load_corpus(corpus)?;
    let store = args
        .embeddings
        .as_deref()
        .map(load_embeddings)
        .transpose()
        .map_err(CliError::data)?
        .map(Arc::new);
    if matches!(args.scorer, RankScorer::Embedding) && store.is_none() {
        return Err(CliError::Usage(
            "--scorer embedding needs --embeddings".into(),
        ));
    }
    let bm25 = Bm25Scorer::new(&corpus, Bm25Params::default()).map_err(CliError::data)?;
    if args.evaluate {
        let generator =
            MockGenerator::new(args.delta).map_err(|e| CliError::Usage(e.to_string()))?;
        let embedding;
        let scorer: &dyn Scorer = match args.scorer {
            RankScorer::Jaccard => &JaccardScorer,
            RankScorer::Bm25 => &bm25,
            RankScorer::Embedding => {
                let s = EmbeddingScorer::new(store.clone().expect("checked above"));
                embedding = if args.fallback {
                    s.with_jaccard_fallback()
                } else {
                    s
                };
                &embedding
            }
        };
        let k = args.k.unwrap_or(DEFAULT_EVAL_K);
        let report = evaluate_ranker(&corpus, scorer, k, &DistanceParams::default(), generator)
            .map_err(CliError::data)?;
        print_json(&report);
        return Ok(());
    }
    let statement = args.statement.ok_or_else(|| {
        CliError::Usage("--statement is required unless --evaluate is given".into())
    })?;
    let req = SimilarRequest {
        statement,
        k: args.k.unwrap_or(15),
        scorer: args.scorer.name().into(),
        file: args.file,
        vector: None,
        fallback: args.fallback.then(|| "jaccard".into()),
    };
    let items = rank_similar(&corpus, &bm25, store, &req).map_err(|e| {
        if e.status.is_client_error() && e.status.as_u16() == 400 {
            CliError::Usage(e.message)
        } else {
            CliError::Data(e.message)
        }
    })?;
    print_json(&items);
    Ok(())
}

fn serve_cmd(
    host: &str,
    port: u16,
    max_corpora: usize,
    embeddings: Option<&Path>,
    timeout_secs: u64,
) -> CliResult {
    let embeddings = embeddings
        .map(load_embeddings)
        .transpose()
        .map_err(CliError::data)?
        .map(Arc::new);
    let config = ServiceConfig {
        max_corpora,
        request_timeout: Duration::from_secs(timeout_secs),
        embeddings,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::data)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Data(format!("bind {host}:{port}: {e}")))?;
        eprintln!(
            "listening on {}",
            listener.local_addr().map_err(CliError::data)?
        );
        let shutdown = async {
            tokio::signal::ctrl_c().await.ok();
        };
        proofrank_service::serve(listener, AppState::new(config), shutdown)
            .await
            .map_err(CliError::data)
    })
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Parse { inputs, out } => parse_cmd(&inputs, out.as_deref()),
        Command::Mine {
            corpus,
            mode,
            k,
            goals,
            out,
        } => mine_cmd(
            &corpus,
            mining_mode(mode, k)?,
            goals.as_deref(),
            out.as_deref(),
        ),
        Command::Pairs {
            corpus,
            out,
            config,
            seed,
        } => pairs_cmd(&corpus, &out, config.as_deref(), seed),
        Command::Correlate {
            corpus,
            scorer,
            json,
        } => correlate_cmd(&corpus, scorer, json),
        Command::Rank {
            corpus,
            statement,
            k,
            scorer,
            embeddings,
            fallback,
            file,
            evaluate,
            delta,
        } => rank_cmd(
            &corpus,
            RankArgs {
                statement,
                k,
                scorer,
                embeddings,
                fallback,
                file,
                evaluate,
                delta,
            },
        ),
        Command::Serve {
            port,
            host,
            max_corpora,
            embeddings,
            timeout_secs,
        } => serve_cmd(
            &host,
            port,
            max_corpora,
            embeddings.as_deref(),
            timeout_secs,
        ),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("PROOFRANK_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
