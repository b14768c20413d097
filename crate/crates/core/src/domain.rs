//! Shared domain types: topics, run configuration and presets.

use std::collections::HashSet;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("topic is empty after normalization")]
    EmptyTopic,
}

/// A user topic in raw and normalized form, plus the seed for every
/// stochastic choice made during the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicQuery {
    pub raw: String,
    pub normalized: String,
    pub seed: u64,
}

impl TopicQuery {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Whitespace-separated terms of the normalized topic.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.normalized.split(' ')
    }
}

fn normalize_text(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercases, collapses internal whitespace and trims `raw`.
pub fn normalize_topic(raw: &str) -> Result<TopicQuery, DomainError> {
    let normalized = normalize_text(raw);
    if normalized.is_empty() {
        return Err(DomainError::EmptyTopic);
    }
    Ok(TopicQuery {
        raw: raw.to_string(),
        normalized,
        seed: DEFAULT_SEED,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Markdown,
    Json,
    #[default]
    Both,
}

/// Rendering template for the Markdown summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SummaryStyle {
    Compact,
    #[default]
    Detailed,
    ImageForward,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// Every knob of a summarization run.
///
/// Construct with [`SummaryConfig::default`] or [`ConfigOverrides::apply`]
/// and always pass through [`SummaryConfig::validated`] before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryConfig {
    /// Weight of text relevance against image relevance, in `[0, 1]`.
    pub alpha: f64,
    /// Maximum number of text segments in the summary.
    pub segment_limit: usize,
    /// Candidates whose combined score falls below this are discarded.
    pub min_score: f64,
    /// Page budget per text vertical (web, news).
    pub max_pages: usize,
    /// Image budget, both for retrieval and for the summary.
    pub max_images: usize,
    pub fast_mode: bool,
    pub captioning_enabled: bool,
    /// How many of the top-ranked images get captions.
    pub caption_limit: usize,
    pub image_min_width_px: u32,
    pub image_min_height_px: u32,
    pub image_min_bytes: u64,
    /// MMR trade-off: 1 is pure relevance, 0 pure diversity.
    pub diversity_lambda: f64,
    /// Shingle Jaccard similarity at which two segments count as duplicates.
    pub near_dup_threshold: f64,
    pub min_segment_chars: usize,
    pub output_format: OutputFormat,
    pub style: SummaryStyle,
    pub preset_name: Option<String>,
    pub fast_max_pages: usize,
    pub fast_max_images: usize,
    pub request_timeout_ms: u64,
    pub fetch_budget_ms: u64,
    pub fast_request_timeout_ms: u64,
    pub fast_fetch_budget_ms: u64,
    pub max_in_flight: usize,
    /// Include wall-clock stage timings in the structured record. Off by
    /// default because timings make otherwise identical runs differ.
    pub record_timing: bool,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            segment_limit: 8,
            min_score: 0.2,
            max_pages: 5,
            max_images: 8,
            fast_mode: false,
            captioning_enabled: true,
            caption_limit: 3,
            image_min_width_px: 128,
            image_min_height_px: 128,
            image_min_bytes: 8192,
            diversity_lambda: 0.7,
            near_dup_threshold: 0.85,
            min_segment_chars: 40,
            output_format: OutputFormat::Both,
            style: SummaryStyle::Detailed,
            preset_name: None,
            fast_max_pages: 3,
            fast_max_images: 5,
            request_timeout_ms: 10_000,
            fetch_budget_ms: 60_000,
            fast_request_timeout_ms: 4_000,
            fast_fetch_budget_ms: 20_000,
            max_in_flight: 4,
            record_timing: false,
        }
    }
}

/// Time and concurrency limits for one fetch stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchBudget {
    pub per_request: Duration,
    pub total: Duration,
    pub max_in_flight: usize,
}

impl SummaryConfig {
    /// Checks every range invariant and applies fast-mode clamping.
    pub fn validated(mut self) -> Result<Self, ConfigError> {
        unit_interval("alpha", self.alpha)?;
        unit_interval("diversity_lambda", self.diversity_lambda)?;
        unit_interval("near_dup_threshold", self.near_dup_threshold)?;
        if !self.min_score.is_finite() || !(-1.0..=1.0).contains(&self.min_score) {
            return Err(ConfigError::new("min_score", "must lie in [-1, 1]"));
        }
        positive("segment_limit", self.segment_limit as u64)?;
        positive("max_pages", self.max_pages as u64)?;
        positive("max_images", self.max_images as u64)?;
        positive("caption_limit", self.caption_limit as u64)?;
        positive("image_min_width_px", self.image_min_width_px as u64)?;
        positive("image_min_height_px", self.image_min_height_px as u64)?;
        positive("image_min_bytes", self.image_min_bytes)?;
        positive("min_segment_chars", self.min_segment_chars as u64)?;
        positive("fast_max_pages", self.fast_max_pages as u64)?;
        positive("fast_max_images", self.fast_max_images as u64)?;
        positive("request_timeout_ms", self.request_timeout_ms)?;
        positive("fetch_budget_ms", self.fetch_budget_ms)?;
        positive("fast_request_timeout_ms", self.fast_request_timeout_ms)?;
        positive("fast_fetch_budget_ms", self.fast_fetch_budget_ms)?;
        positive("max_in_flight", self.max_in_flight as u64)?;
        if self.fast_mode {
            self.captioning_enabled = false;
            self.max_pages = self.max_pages.min(self.fast_max_pages);
            self.max_images = self.max_images.min(self.fast_max_images);
        }
        Ok(self)
    }

    pub fn fetch_budget(&self) -> FetchBudget {
        let (per_request, total) = if self.fast_mode {
            (self.fast_request_timeout_ms, self.fast_fetch_budget_ms)
        } else {
            (self.request_timeout_ms, self.fetch_budget_ms)
        };
        FetchBudget {
            per_request: Duration::from_millis(per_request),
            total: Duration::from_millis(total),
            max_in_flight: self.max_in_flight,
        }
    }
}

fn unit_interval(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must lie in [0, 1]"))
    }
}

fn positive(field: &'static str, v: u64) -> Result<(), ConfigError> {
    if v > 0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be a positive integer"))
    }
}

macro_rules! overrides {
    ($($field:ident : $ty:ty),* $(,)?) => {
        /// A partial [`SummaryConfig`]: every field optional, unknown fields
        /// rejected. Used for preset entries and request overrides.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ConfigOverrides {
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl ConfigOverrides {
            /// Copies every present field over `base`. The result is not validated.
            pub fn apply(&self, base: &SummaryConfig) -> SummaryConfig {
                let mut out = base.clone();
                $(
                    if let Some(v) = &self.$field {
                        out.$field = v.clone().into();
                    }
                )*
                out
            }
        }
    };
}

overrides! {
    alpha: f64,
    segment_limit: usize,
    min_score: f64,
    max_pages: usize,
    max_images: usize,
    fast_mode: bool,
    captioning_enabled: bool,
    caption_limit: usize,
    image_min_width_px: u32,
    image_min_height_px: u32,
    image_min_bytes: u64,
    diversity_lambda: f64,
    near_dup_threshold: f64,
    min_segment_chars: usize,
    output_format: OutputFormat,
    style: SummaryStyle,
    preset_name: String,
    fast_max_pages: usize,
    fast_max_images: usize,
    request_timeout_ms: u64,
    fetch_budget_ms: u64,
    fast_request_timeout_ms: u64,
    fast_fetch_budget_ms: u64,
    max_in_flight: usize,
    record_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub config: SummaryConfig,
}

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("cannot read preset file: {0}")]
    Io(#[from] std::io::Error),
    #[error("preset parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate preset name `{0}`")]
    DuplicatePreset(String),
    #[error("preset `{preset}`: {source}")]
    InvalidConfig {
        preset: String,
        #[source]
        source: ConfigError,
    },
}

impl PresetError {
    /// The config field an `InvalidConfig` error names.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            PresetError::InvalidConfig { source, .. } => Some(source.field),
            _ => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    #[serde(default)]
    preset: Vec<PresetEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetEntry {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    config: ConfigOverrides,
}

/// Parses a preset document held in memory. See `docs/presets.md` for the format.
pub fn parse_presets(text: &str) -> Result<Vec<Preset>, PresetError> {
    let file: PresetFile = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        PresetError::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    let mut seen = HashSet::new();
    let mut presets = Vec::with_capacity(file.preset.len());
    for entry in file.preset {
        if !seen.insert(entry.name.clone()) {
            return Err(PresetError::DuplicatePreset(entry.name));
        }
        let mut config = entry.config.apply(&SummaryConfig::default());
        config.preset_name = Some(entry.name.clone());
        let config = config.validated().map_err(|source| PresetError::InvalidConfig {
            preset: entry.name.clone(),
            source,
        })?;
        presets.push(Preset {
            name: entry.name,
            description: entry.description,
            config,
        });
    }
    Ok(presets)
}

pub fn load_presets(path: impl AsRef<Path>) -> Result<Vec<Preset>, PresetError> {
    let text = std::fs::read_to_string(path)?;
    parse_presets(&text)
}

const BUILTIN_PRESETS: &str = include_str!("../presets/default.toml");

/// Presets shipped with the crate.
pub fn builtin_presets() -> Vec<Preset> {
    parse_presets(BUILTIN_PRESETS).expect("built-in presets are valid")
}

/// A resolution failure naming the offending request field.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid `{field}`: {message}")]
pub struct ResolveError {
    pub field: String,
    pub message: String,
}

/// Merges defaults, then the named preset, then `overrides`, and validates
/// the result. Overrides are applied one field at a time so a bad value is
/// reported under its own name.
pub fn resolve_config(
    presets: &[Preset],
    preset: Option<&str>,
    overrides: &serde_json::Map<String, serde_json::Value>,
) -> Result<SummaryConfig, ResolveError> {
    let mut config = match preset {
        None => SummaryConfig::default(),
        Some(name) => presets
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.config.clone())
            .ok_or_else(|| ResolveError {
                field: "preset".into(),
                message: format!("unknown preset `{name}`"),
            })?,
    };
    for (field, value) in overrides {
        let mut single = serde_json::Map::new();
        single.insert(field.clone(), value.clone());
        let parsed: ConfigOverrides = serde_json::from_value(serde_json::Value::Object(single)).map_err(|e| ResolveError {
            field: field.clone(),
            message: e.to_string(),
        })?;
        config = parsed.apply(&config);
    }
    config.validated().map_err(|e| ResolveError {
        field: e.field.to_string(),
        message: e.reason,
    })
}
