//! `mmsum` command line.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 retrieval
//! failure, 3 any other runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use mmsum_core::captioning::StubCaptioner;
use mmsum_core::domain::{builtin_presets, load_presets, DEFAULT_SEED};
use mmsum_core::embedding::clip::{ClipEmbedder, HttpClipRuntime, Preprocessor};
use mmsum_core::evaluation::{emit_report, evaluate_dataset, synthetic_rows, write_rows, EvaluateOptions, ReportFormat};
use mmsum_core::retrieval::{ByteCache, DiskCache, DuckDuckGoProvider, FixtureCorpus, HttpFetcher, NoCache};
use mmsum_core::summarizer::{export, ExportFormat};
use mmsum_core::{
    default_fixture_dir, normalize_topic, EmbeddingProvider, OutputFormat, Pipeline, PipelineError, Preset, StubEmbedder,
};

use crate::api::{resolve_config, router, AppState, PipelineFactory};
use crate::store::{RunStore, DEFAULT_CAPACITY};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_RETRIEVAL: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "mmsum", version, about = "Topic-driven multimodal web summarizer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a topic and print or write the result.
    Summarize(SummarizeArgs),
    /// Score a contrastive image-caption dataset and write a metrics report.
    Evaluate(EvaluateArgs),
    /// List available presets.
    Presets(PresetArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Write a synthetic, perfectly separable evaluation dataset.
    SynthDataset(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    Fixture,
    Live,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "fixture", env = "MMSUM_PROVIDER")]
    pub provider: ProviderKind,
    /// Recorded corpus for the fixture provider.
    #[arg(long, env = "MMSUM_FIXTURES")]
    pub fixtures: Option<PathBuf>,
    /// Byte cache directory for live fetches.
    #[arg(long, env = "MMSUM_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// CLIP-compatible inference server; the stub encoder is used when unset.
    #[arg(long, env = "MMSUM_CLIP_ENDPOINT")]
    pub clip_endpoint: Option<String>,
    #[arg(long, env = "MMSUM_CLIP_DIM", default_value_t = 512)]
    pub clip_dim: usize,
    /// Preset file replacing the built-in presets.
    #[arg(long, env = "MMSUM_PRESETS")]
    pub presets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub topic: String,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub segment_limit: Option<usize>,
    #[arg(long)]
    pub min_score: Option<f64>,
    #[arg(long)]
    pub fast: bool,
    /// Write summary.md / summary.json here instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSONL dataset (see docs/evaluation.md).
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub negative_ratio: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Report path; `.md` writes Markdown, anything else JSON.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
    pub top_k: Vec<usize>,
    #[arg(long, env = "MMSUM_CLIP_ENDPOINT")]
    pub clip_endpoint: Option<String>,
    #[arg(long, env = "MMSUM_CLIP_DIM", default_value_t = 512)]
    pub clip_dim: usize,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    #[arg(long, env = "MMSUM_PRESETS")]
    pub presets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080", env = "MMSUM_ADDR")]
    pub addr: String,
    #[arg(long, env = "MMSUM_RUN_STORE_DIR")]
    pub run_store_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    pub run_store_capacity: usize,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub positives: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Summarize(args) => summarize(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Presets(args) => list_presets(args),
        Command::Serve(args) => serve(args),
        Command::SynthDataset(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn presets_from(path: Option<&PathBuf>) -> Result<Vec<Preset>, Failure> {
    match path {
        Some(p) => load_presets(p).map_err(|e| Failure::config(e.to_string())),
        None => Ok(builtin_presets()),
    }
}

fn embedder(endpoint: Option<&str>, dim: usize, seed: u64) -> Arc<dyn EmbeddingProvider> {
    match endpoint {
        Some(url) => Arc::new(ClipEmbedder::new(
            HttpClipRuntime::new(url, dim, Duration::from_secs(30)),
            Preprocessor::default(),
        )),
        None => Arc::new(StubEmbedder::new(seed)),
    }
}

/// Pipeline constructor for the chosen backends.
pub fn pipeline_factory(backend: &BackendArgs) -> Result<PipelineFactory, Failure> {
    let clip = backend.clip_endpoint.clone();
    let dim = backend.clip_dim;
    match backend.provider {
        ProviderKind::Fixture => {
            let dir = backend.fixtures.clone().unwrap_or_else(default_fixture_dir);
            let corpus = Arc::new(
                FixtureCorpus::load_dir(&dir).map_err(|e| Failure::config(format!("fixture corpus: {e}")))?,
            );
            Ok(Arc::new(move |seed| {
                Pipeline::offline(corpus.clone(), seed).with_embedder(embedder(clip.as_deref(), dim, seed))
            }))
        }
        ProviderKind::Live => {
            let cache: Arc<dyn ByteCache> = match &backend.cache_dir {
                Some(dir) => Arc::new(DiskCache::new(dir, Duration::from_secs(24 * 3600))),
                None => Arc::new(NoCache),
            };
            let provider = Arc::new(DuckDuckGoProvider::new(Duration::from_secs(10)));
            let fetcher = Arc::new(HttpFetcher::default());
            Ok(Arc::new(move |seed| Pipeline {
                provider: provider.clone(),
                fetcher: fetcher.clone(),
                embedder: embedder(clip.as_deref(), dim, seed),
                captioner: Arc::new(StubCaptioner),
                cache: cache.clone(),
            }))
        }
    }
}

fn summarize(args: SummarizeArgs) -> Result<(), Failure> {
    let topic = normalize_topic(&args.topic)
        .map_err(|e| Failure::config(e.to_string()))?
        .with_seed(args.seed);
    let presets = presets_from(args.backend.presets.as_ref())?;
    let mut overrides = Map::new();
    if let Some(a) = args.alpha {
        overrides.insert("alpha".into(), Value::from(a));
    }
    if let Some(k) = args.segment_limit {
        overrides.insert("segment_limit".into(), Value::from(k));
    }
    if let Some(s) = args.min_score {
        overrides.insert("min_score".into(), Value::from(s));
    }
    if args.fast {
        overrides.insert("fast_mode".into(), Value::from(true));
    }
    let config =
        resolve_config(&presets, args.preset.as_deref(), &overrides).map_err(|e| Failure::config(e.message))?;
    let pipeline = pipeline_factory(&args.backend)?(topic.seed);
    let bundle = pipeline.run(&topic, config.clone(), &mut |ev| tracing::info!(?ev, "progress"));
    let bundle = match bundle {
        Ok(b) => b,
        Err(PipelineError::Retrieval(e)) => {
            return Err(Failure {
                code: EXIT_RETRIEVAL,
                message: e.to_string(),
            })
        }
        Err(PipelineError::Config(e)) => return Err(Failure::config(e.to_string())),
        Err(e) => return Err(Failure::runtime(e.to_string())),
    };
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    let formats: &[ExportFormat] = match config.output_format {
        OutputFormat::Markdown => &[ExportFormat::Markdown],
        OutputFormat::Json => &[ExportFormat::Json],
        OutputFormat::Both => &[ExportFormat::Markdown, ExportFormat::Json],
    };
    match args.out {
        Some(dir) => {
            std::fs::create_dir_all(&dir).map_err(|e| Failure::runtime(e.to_string()))?;
            for &f in formats {
                let path = dir.join(format!("summary.{}", f.extension()));
                export(&bundle, f, &path).map_err(|e| Failure::runtime(e.to_string()))?;
                println!("{}", path.display());
            }
        }
        None => {
            let f = formats[0];
            print!("{}", String::from_utf8_lossy(&mmsum_core::summarizer::render(&bundle, f)));
        }
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let provider = embedder(args.clip_endpoint.as_deref(), args.clip_dim, 0);
    let options = EvaluateOptions {
        negative_ratio: args.negative_ratio,
        seed: args.seed,
        top_k: args.top_k,
    };
    let report = evaluate_dataset(&args.dataset, provider.as_ref(), &options).map_err(|e| match e {
        mmsum_core::evaluation::EvaluationError::Io(e) => Failure::runtime(e.to_string()),
        other => Failure::config(other.to_string()),
    })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    emit_report(&report, ReportFormat::for_path(&args.report), &args.report)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let m = &report.metrics;
    println!(
        "roc_auc={:.4} pr_auc={:.4} f1={:.4} accuracy={:.4} all_negative_accuracy={:.6}",
        m.roc_auc, m.pr_auc, m.f1, m.accuracy, m.all_negative_accuracy
    );
    Ok(())
}

fn list_presets(args: PresetArgs) -> Result<(), Failure> {
    for p in presets_from(args.presets.as_ref())? {
        println!("{:<14} {}", p.name, p.description);
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    if args.positives < 2 {
        return Err(Failure::config("--positives must be at least 2"));
    }
    let rows = synthetic_rows(args.positives, args.seed, &StubEmbedder::default());
    write_rows(&rows, &args.out).map_err(|e| Failure::runtime(e.to_string()))?;
    println!("{}", args.out.display());
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let presets = presets_from(args.backend.presets.as_ref())?;
    let store = match &args.run_store_dir {
        Some(dir) => RunStore::persistent(args.run_store_capacity, dir).map_err(|e| Failure::runtime(e.to_string()))?,
        None => RunStore::in_memory(args.run_store_capacity),
    };
    let state = AppState {
        pipelines: pipeline_factory(&args.backend)?,
        presets: Arc::new(presets),
        store: Arc::new(store),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::runtime(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .map_err(|e| Failure::config(format!("bind {}: {e}", args.addr)))?;
        eprintln!("listening on http://{}", args.addr);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::runtime(e.to_string()))
    })
}
