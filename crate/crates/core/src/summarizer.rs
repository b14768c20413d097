//! Extractive assembly of the selected content into Markdown and a
//! structured record.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::AlignmentScore;
use crate::domain::{SummaryConfig, SummaryStyle, TopicQuery};
use crate::extraction::{ImageCandidate, TextSegment};

/// Version of the structured record layout in `docs/summary.schema.json`.
pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("nothing selected: no segments and no images")]
    EmptySummary,
    #[error("export failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSegment {
    pub segment: TextSegment,
    pub score: AlignmentScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedImage {
    pub image: ImageCandidate,
    pub score: AlignmentScore,
}

/// Output of the alignment stage, in selection order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selections {
    pub segments: Vec<SelectedSegment>,
    pub images: Vec<SelectedImage>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordTopic {
    pub raw: String,
    pub normalized: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSegment {
    pub segment_id: String,
    pub doc_id: String,
    pub url: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub title: Option<String>,
    pub ordinal: usize,
    pub text: String,
    pub text_sim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image_sim: Option<f64>,
    pub combined: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordImage {
    pub image_id: String,
    pub url: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_doc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub caption: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alt_text: Option<String>,
    pub dims: Option<Dims>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text_sim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image_sim: Option<f64>,
    pub combined: f64,
}

/// The machine-readable summary record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub schema_version: u32,
    pub topic: RecordTopic,
    pub config: SummaryConfig,
    pub segments: Vec<RecordSegment>,
    pub images: Vec<RecordImage>,
    pub warnings: Vec<String>,
    pub seed: u64,
    /// Stage wall-clock milliseconds; only present when
    /// `config.record_timing` is set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing: Option<BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryBundle {
    pub topic: TopicQuery,
    pub selected_segments: Vec<SelectedSegment>,
    pub selected_images: Vec<SelectedImage>,
    pub rendered_markdown: String,
    pub structured: SummaryRecord,
    pub warnings: Vec<String>,
    pub config_used: SummaryConfig,
    pub run_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Markdown,
    Json,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Markdown => "md",
            ExportFormat::Json => "json",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext {
            "md" => Some(ExportFormat::Markdown),
            "json" => Some(ExportFormat::Json),
            _ => None,
        }
    }
}

/// Builds the bundle: Markdown plus structured record, in selection order.
pub fn assemble(
    topic: &TopicQuery,
    selections: Selections,
    config: &SummaryConfig,
    timing: Option<BTreeMap<String, u64>>,
) -> Result<SummaryBundle, SummarizeError> {
    if selections.segments.is_empty() && selections.images.is_empty() {
        return Err(SummarizeError::EmptySummary);
    }
    let structured = SummaryRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        topic: RecordTopic {
            raw: topic.raw.clone(),
            normalized: topic.normalized.clone(),
        },
        config: config.clone(),
        segments: selections
            .segments
            .iter()
            .map(|s| RecordSegment {
                segment_id: s.segment.segment_id.clone(),
                doc_id: s.segment.doc_id.clone(),
                url: s.segment.url.clone(),
                title: s.segment.title.clone(),
                ordinal: s.segment.ordinal,
                text: s.segment.text.clone(),
                text_sim: s.score.text_sim,
                image_sim: s.score.image_sim,
                combined: s.score.combined,
            })
            .collect(),
        images: selections
            .images
            .iter()
            .map(|s| RecordImage {
                image_id: s.image.image_id.clone(),
                url: s.image.url.clone(),
                source_doc: s.image.source_doc.clone(),
                caption: s.image.caption.clone(),
                alt_text: s.image.alt_text.clone(),
                dims: s.image.width_px.zip(s.image.height_px).map(|(width, height)| Dims { width, height }),
                text_sim: s.score.text_sim,
                image_sim: s.score.image_sim,
                combined: s.score.combined,
            })
            .collect(),
        warnings: selections.warnings.clone(),
        seed: topic.seed,
        timing: timing.filter(|_| config.record_timing),
    };
    let rendered_markdown = render_markdown(topic, &selections.segments, &selections.images, config.style);
    Ok(SummaryBundle {
        topic: topic.clone(),
        selected_segments: selections.segments,
        selected_images: selections.images,
        rendered_markdown,
        structured,
        warnings: selections.warnings,
        config_used: config.clone(),
        run_seed: topic.seed,
    })
}

fn source_label(seg: &TextSegment) -> &str {
    seg.title.as_deref().unwrap_or(&seg.url)
}

fn escape_md(text: &str) -> String {
    text.replace('[', "\\[").replace(']', "\\]")
}

fn render_segments(out: &mut String, segments: &[SelectedSegment], style: SummaryStyle) {
    if segments.is_empty() {
        return;
    }
    out.push_str("## Key points\n\n");
    for s in segments {
        match style {
            SummaryStyle::Compact => {
                let _ = writeln!(out, "- {} ([source]({}))", s.segment.text, s.segment.url);
            }
            _ => {
                let _ = writeln!(out, "{}\n", s.segment.text);
                let _ = writeln!(
                    out,
                    "*Source: [{}]({}) · relevance {:.3}*\n",
                    escape_md(source_label(&s.segment)),
                    s.segment.url,
                    s.score.combined
                );
            }
        }
    }
    if style == SummaryStyle::Compact {
        out.push('\n');
    }
}

fn image_label(img: &ImageCandidate) -> &str {
    img.caption.as_deref().or(img.alt_text.as_deref()).unwrap_or("image")
}

fn render_images(out: &mut String, images: &[SelectedImage], style: SummaryStyle) {
    if images.is_empty() {
        return;
    }
    out.push_str("## Images\n\n");
    for s in images {
        let label = escape_md(image_label(&s.image));
        match style {
            SummaryStyle::Compact => {
                let _ = writeln!(out, "- [{label}]({})", s.image.url);
            }
            _ => {
                let _ = writeln!(out, "![{label}]({})\n", s.image.url);
                let mut meta = Vec::new();
                if let Some(c) = &s.image.caption {
                    meta.push(format!("*{c}*"));
                }
                if let (Some(w), Some(h)) = (s.image.width_px, s.image.height_px) {
                    meta.push(format!("{w}×{h}"));
                }
                meta.push(format!("relevance {:.3}", s.score.combined));
                let _ = writeln!(out, "{}\n", meta.join(" · "));
            }
        }
    }
    if style == SummaryStyle::Compact {
        out.push('\n');
    }
}

/// Pure function of its inputs; the bytes are stable for identical bundles.
pub fn render_markdown(
    topic: &TopicQuery,
    segments: &[SelectedSegment],
    images: &[SelectedImage],
    style: SummaryStyle,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Summary: {}\n", topic.normalized);
    if segments.is_empty() {
        let captions: Vec<&str> = images.iter().filter_map(|s| s.image.caption.as_deref()).collect();
        if !captions.is_empty() {
            out.push_str("## Overview\n\n");
            for c in captions {
                let _ = writeln!(out, "- {c}");
            }
            out.push('\n');
        }
    }
    if style == SummaryStyle::ImageForward {
        render_images(&mut out, images, style);
        render_segments(&mut out, segments, style);
    } else {
        render_segments(&mut out, segments, style);
        render_images(&mut out, images, style);
    }
    let trimmed = out.trim_end().len();
    out.truncate(trimmed);
    out.push('\n');
    out
}

/// Serialized bytes of one export format.
pub fn render(bundle: &SummaryBundle, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Markdown => bundle.rendered_markdown.clone().into_bytes(),
        ExportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(&bundle.structured).expect("record serializes");
            bytes.push(b'\n');
            bytes
        }
    }
}

/// Writes [`render`] output to `path`.
pub fn export(bundle: &SummaryBundle, format: ExportFormat, path: impl AsRef<Path>) -> Result<(), SummarizeError> {
    std::fs::write(path, render(bundle, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::normalize_topic;
    use crate::extraction::GateStatus;
    use crate::retrieval::ImageOrigin;

    fn seg(i: usize, text: &str) -> SelectedSegment {
        let mut segment = TextSegment::new(&format!("web-{i}"), &format!("https://site{i}.example/a"), Some("Site"), 0, text.into());
        segment.title = Some(format!("Site {i}"));
        SelectedSegment {
            segment,
            score: AlignmentScore {
                target_id: format!("web-{i}#0"),
                text_sim: Some(0.5 + i as f64 / 10.0),
                image_sim: None,
                combined: 0.5 + i as f64 / 10.0,
                alpha_used: 0.5,
            },
        }
    }

    fn img(i: usize, caption: Option<&str>) -> SelectedImage {
        SelectedImage {
            image: ImageCandidate {
                image_id: format!("img-{i}"),
                url: format!("https://img.example/{i}.png"),
                origin: ImageOrigin::Search,
                source_doc: None,
                width_px: Some(512),
                height_px: Some(384),
                byte_size: 20_000,
                bytes: vec![1, 2, 3],
                alt_text: Some("alt".into()),
                caption: caption.map(str::to_string),
                gate_status: GateStatus::Accepted,
            },
            score: AlignmentScore {
                target_id: format!("img-{i}"),
                text_sim: Some(0.4),
                image_sim: Some(0.1),
                combined: 0.25,
                alpha_used: 0.5,
            },
        }
    }

    fn topic() -> TopicQuery {
        normalize_topic("Solar Eclipse").unwrap()
    }

    #[test]
    fn two_segments_and_one_captioned_image() {
        let sel = Selections {
            segments: vec![seg(1, "First paragraph about totality."), seg(0, "Second paragraph about safety.")],
            images: vec![img(0, Some("photograph of solar eclipse (abcd1234)"))],
            warnings: vec![],
        };
        let b = assemble(&topic(), sel, &SummaryConfig::default(), None).unwrap();
        let md = &b.rendered_markdown;
        assert!(md.starts_with("# Summary: solar eclipse\n"));
        let first = md.find("First paragraph").unwrap();
        let second = md.find("Second paragraph").unwrap();
        assert!(first < second, "selection order kept");
        assert_eq!(md.matches("*Source: [Site").count(), 2);
        assert!(md.contains("![photograph of solar eclipse (abcd1234)](https://img.example/0.png)"));
        assert!(md.contains("*photograph of solar eclipse (abcd1234)* · 512×384 · relevance 0.250"));
        assert_eq!(b.structured.segments.len(), 2);
        assert_eq!(b.structured.segments[0].url, "https://site1.example/a");
    }

    #[test]
    fn image_only_summary_uses_captions_as_body() {
        let sel = Selections {
            segments: vec![],
            images: vec![img(0, Some("caption one")), img(1, Some("caption two"))],
            warnings: vec![],
        };
        let b = assemble(&topic(), sel, &SummaryConfig::default(), None).unwrap();
        assert!(b.rendered_markdown.contains("## Overview\n\n- caption one\n- caption two\n"));
        assert!(!b.rendered_markdown.contains("## Key points"));
    }

    #[test]
    fn empty_selection_is_signalled() {
        let err = assemble(&topic(), Selections::default(), &SummaryConfig::default(), None).unwrap_err();
        assert!(matches!(err, SummarizeError::EmptySummary));
    }

    #[test]
    fn styles_change_layout() {
        let sel = Selections {
            segments: vec![seg(0, "Only paragraph in this summary.")],
            images: vec![img(0, None)],
            warnings: vec![],
        };
        let compact = SummaryConfig {
            style: SummaryStyle::Compact,
            ..Default::default()
        };
        let b = assemble(&topic(), sel.clone(), &compact, None).unwrap();
        assert!(b.rendered_markdown.contains("- Only paragraph in this summary. ([source](https://site0.example/a))"));
        let forward = SummaryConfig {
            style: SummaryStyle::ImageForward,
            ..Default::default()
        };
        let b = assemble(&topic(), sel, &forward, None).unwrap();
        assert!(b.rendered_markdown.find("## Images").unwrap() < b.rendered_markdown.find("## Key points").unwrap());
    }

    #[test]
    fn bundle_round_trips_through_json() {
        let sel = Selections {
            segments: vec![seg(0, "Round trip paragraph text.")],
            images: vec![img(0, Some("c"))],
            warnings: vec!["news: UnsupportedVertical".into()],
        };
        let b = assemble(&topic(), sel, &SummaryConfig::default(), None).unwrap();
        let text = serde_json::to_string(&b).unwrap();
        let back: SummaryBundle = serde_json::from_str(&text).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn timing_only_recorded_when_enabled() {
        let timing: BTreeMap<String, u64> = [("retrieval".to_string(), 12)].into();
        let sel = Selections {
            segments: vec![seg(0, "Timing paragraph text.")],
            ..Default::default()
        };
        let b = assemble(&topic(), sel.clone(), &SummaryConfig::default(), Some(timing.clone())).unwrap();
        assert!(b.structured.timing.is_none());
        let cfg = SummaryConfig {
            record_timing: true,
            ..Default::default()
        };
        let b = assemble(&topic(), sel, &cfg, Some(timing)).unwrap();
        assert_eq!(b.structured.timing.unwrap()["retrieval"], 12);
    }

    #[test]
    fn export_is_byte_stable_and_reports_io_errors() {
        let sel = Selections {
            segments: vec![seg(0, "Export paragraph text.")],
            ..Default::default()
        };
        let b = assemble(&topic(), sel, &SummaryConfig::default(), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.md");
        let p2 = dir.path().join("b.md");
        export(&b, ExportFormat::Markdown, &p1).unwrap();
        export(&b, ExportFormat::Markdown, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let bad = dir.path().join("missing").join("x.json");
        assert!(matches!(export(&b, ExportFormat::Json, bad), Err(SummarizeError::Io(_))));
    }
}
