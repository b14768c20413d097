//! Topic-driven multimodal web summarization.
//!
//! The crate is organized as a pipeline of independent stages:
//!
//! - [`domain`]: topic normalization, run configuration and presets
//! - [`retrieval`]: concurrent web/news/image search, page fetching and the
//!   content-addressed byte cache
//! - [`extraction`]: boilerplate stripping, paragraph segmentation,
//!   deduplication and image quality gates
//! - [`embedding`]: the encoder contract, a deterministic stub encoder and
//!   the CLIP adapter boundary
//! - [`captioning`]: optional image captioning
//! - [`alignment`]: α-weighted relevance scoring and MMR selection
//! - [`summarizer`]: Markdown / structured-record assembly and export
//! - [`evaluation`]: contrastive pair sets and alignment metrics
//! - [`pipeline`]: wires the stages together for one summarization run

pub mod alignment;
pub mod captioning;
pub mod domain;
pub mod embedding;
pub mod evaluation;
pub mod extraction;
pub mod hashing;
pub mod pipeline;
pub mod retrieval;
pub mod summarizer;

pub use alignment::{score_candidate, select_top, AlignmentError, AlignmentScore, SelectionParams};
pub use domain::{
    load_presets, normalize_topic, resolve_config, ConfigError, ConfigOverrides, OutputFormat, Preset, PresetError,
    ResolveError,
    SummaryConfig, SummaryStyle, TopicQuery,
};
pub use embedding::{cosine_similarity, Embedding, EmbeddingError, EmbeddingProvider, Modality, StubEmbedder};
pub use pipeline::{Pipeline, PipelineError, PipelineEvent, Stage};
pub use summarizer::SummaryBundle;

/// Directory holding the committed recorded-fixture corpus.
pub fn default_fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("corpus")
}
