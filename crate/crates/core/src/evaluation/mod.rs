//! Contrastive image-caption alignment evaluation.

mod dataset;
pub mod metrics;
mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, embed_image, embed_text, Embedding, EmbeddingError, EmbeddingProvider, Modality};

pub use dataset::{
    build_contrastive_set, load_contrastive_set, positives_and_pool, read_rows, synthetic_rows, write_rows, CaptionRef,
    DatasetError, DatasetRow, EvalPair, ImageRef, Label, PoolCaption, PositiveItem, SYNTHETIC_NOISE,
};
pub use metrics::{
    all_negative_baseline, best_threshold_metrics, pr_auc, pr_curve, ranking_metrics, roc_auc, roc_curve, Confusion,
    MetricsError, RankingMetrics, ThresholdMetrics,
};
pub use report::{emit_report, render_report, ReportFormat};

/// K values reported by default.
pub const DEFAULT_TOP_K: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPairs {
    pub pairs: Vec<EvalPair>,
    pub warnings: Vec<String>,
    pub dropped: usize,
}

fn image_embedding(provider: &dyn EmbeddingProvider, image: &ImageRef) -> Result<Embedding, EmbeddingError> {
    match image {
        ImageRef::Path(p) => {
            let bytes = std::fs::read(p).map_err(|e| EmbeddingError::DecodeFailure(format!("{}: {e}", p.display())))?;
            embed_image(provider, &bytes)
        }
        ImageRef::Embedding(v) => precomputed(Modality::Image, v),
    }
}

fn caption_embedding(provider: &dyn EmbeddingProvider, caption: &CaptionRef) -> Result<Embedding, EmbeddingError> {
    match caption {
        CaptionRef::Text(t) => embed_text(provider, t),
        CaptionRef::Embedding(v) => precomputed(Modality::Text, v),
    }
}

fn precomputed(modality: Modality, v: &[f32]) -> Result<Embedding, EmbeddingError> {
    let raw: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
    Embedding::normalized(modality, &raw, "precomputed")
}

/// Sets each pair's score to the image-caption cosine. Pairs whose
/// embeddings cannot be computed are dropped with a warning. Runs per pair
/// in parallel; output order follows input order.
pub fn score_pairs(pairs: Vec<EvalPair>, provider: &dyn EmbeddingProvider) -> ScoredPairs {
    let score = |pair: &EvalPair| -> Result<f64, EmbeddingError> {
        let img = image_embedding(provider, &pair.image)?;
        let cap = caption_embedding(provider, &pair.caption)?;
        cosine_similarity(&img, &cap)
    };
    let results: Vec<Result<f64, EmbeddingError>> = if provider.concurrent() {
        pairs.par_iter().map(score).collect()
    } else {
        pairs.iter().map(score).collect()
    };
    let mut out = ScoredPairs {
        pairs: Vec::with_capacity(pairs.len()),
        warnings: Vec::new(),
        dropped: 0,
    };
    for (mut pair, result) in pairs.into_iter().zip(results) {
        match result {
            Ok(s) => {
                pair.score = Some(s);
                out.pairs.push(pair);
            }
            Err(e) => {
                out.warnings.push(format!("dropped {}: {e}", pair.pair_id));
                out.dropped += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(with = "metrics::threshold_serde")]
    pub best_threshold: f64,
    pub top_k_accuracy: BTreeMap<usize, f64>,
    pub positional_recall: BTreeMap<usize, f64>,
    pub confusion_matrix_normalized: [[f64; 2]; 2],
    pub confusion_counts: Confusion,
    pub counts: Counts,
    /// Accuracy of predicting every pair negative.
    pub all_negative_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCell {
    pub actual: Label,
    pub predicted: Label,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    /// (false positive rate, true positive rate)
    pub roc: Vec<[f64; 2]>,
    /// (recall, precision)
    pub pr: Vec<[f64; 2]>,
    pub confusion: Vec<ConfusionCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metrics: MetricsReport,
    pub series: PlotSeries,
    pub dropped_pairs: usize,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

/// Computes the full metric suite over scored pairs. Pairs without a score
/// are ignored. Ranking metrics use groups that still hold exactly one
/// positive; others are skipped with a warning.
pub fn compute_report(scored: &ScoredPairs, ks: &[usize]) -> Result<EvaluationReport, EvaluationError> {
    let labeled: Vec<(f64, bool)> = scored
        .pairs
        .iter()
        .filter_map(|p| p.score.map(|s| (s, p.label.is_positive())))
        .collect();
    let best = best_threshold_metrics(&labeled)?;
    let floor = all_negative_baseline(&labeled)?;

    let mut warnings = scored.warnings.clone();
    let mut groups: Vec<(String, Vec<(f64, bool)>)> = Vec::new();
    for p in scored.pairs.iter().filter(|p| p.score.is_some()) {
        let entry = (p.score.unwrap_or_default(), p.label.is_positive());
        match groups.last_mut() {
            Some((id, g)) if *id == p.group_id => g.push(entry),
            _ => groups.push((p.group_id.clone(), vec![entry])),
        }
    }
    let (well_formed, malformed): (Vec<_>, Vec<_>) = groups
        .into_iter()
        .partition(|(_, g)| g.iter().filter(|(_, l)| *l).count() == 1);
    for (id, _) in &malformed {
        warnings.push(format!("group {id} skipped for ranking: needs exactly one positive"));
    }
    let well_formed: Vec<Vec<(f64, bool)>> = well_formed.into_iter().map(|(_, g)| g).collect();
    let ranking = ranking_metrics(&well_formed, ks)?;

    let cm = best.confusion_normalized;
    let cell = |actual, predicted, value| ConfusionCell { actual, predicted, value };
    let metrics = MetricsReport {
        roc_auc: roc_auc(&labeled)?,
        pr_auc: pr_auc(&labeled)?,
        accuracy: best.accuracy,
        precision: best.precision,
        recall: best.recall,
        f1: best.f1,
        best_threshold: best.threshold,
        top_k_accuracy: ranking.top_k_accuracy,
        positional_recall: ranking.positional_recall,
        confusion_matrix_normalized: cm,
        confusion_counts: best.confusion,
        counts: Counts {
            positives: best.confusion.tp + best.confusion.fn_,
            negatives: best.confusion.tn + best.confusion.fp,
        },
        all_negative_accuracy: floor.accuracy,
    };
    Ok(EvaluationReport {
        series: PlotSeries {
            roc: roc_curve(&labeled)?,
            pr: pr_curve(&labeled)?,
            confusion: vec![
                cell(Label::Negative, Label::Negative, cm[0][0]),
                cell(Label::Negative, Label::Positive, cm[0][1]),
                cell(Label::Positive, Label::Negative, cm[1][0]),
                cell(Label::Positive, Label::Positive, cm[1][1]),
            ],
        },
        metrics,
        dropped_pairs: scored.dropped,
        warnings,
        notes: vec![
            "accuracy, precision, recall, f1 and the confusion matrix are taken at the F1-maximizing threshold".into(),
            "all_negative_accuracy is the accuracy of labeling every pair negative".into(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub negative_ratio: usize,
    pub seed: u64,
    pub top_k: Vec<usize>,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            negative_ratio: 20,
            seed: crate::domain::DEFAULT_SEED,
            top_k: DEFAULT_TOP_K.to_vec(),
        }
    }
}

/// Dataset file → contrastive set → scores → report.
pub fn evaluate_dataset(
    path: impl AsRef<std::path::Path>,
    provider: &dyn EmbeddingProvider,
    options: &EvaluateOptions,
) -> Result<EvaluationReport, EvaluationError> {
    let pairs = load_contrastive_set(path, options.negative_ratio, options.seed)?;
    compute_report(&score_pairs(pairs, provider), &options.top_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{cosine_slices, StubEmbedder};

    fn pair(id: &str, group: &str, image: ImageRef, caption: CaptionRef, label: Label) -> EvalPair {
        EvalPair {
            pair_id: id.into(),
            group_id: group.into(),
            topic: "t".into(),
            image,
            caption,
            label,
            score: None,
        }
    }

    #[test]
    fn scores_are_direct_cosines() {
        let stub = StubEmbedder::default();
        let same = stub.text_vector("red planet rover").iter().map(|&x| x as f32).collect::<Vec<_>>();
        let pairs = vec![
            pair("a", "a", ImageRef::Embedding(same.clone()), CaptionRef::Text("red planet rover".into()), Label::Positive),
            pair("b", "a", ImageRef::Embedding(vec![1.0, 0.0]), CaptionRef::Embedding(vec![0.0, 3.0]), Label::Negative),
            pair("c", "a", ImageRef::Embedding(vec![1.0, 2.0]), CaptionRef::Embedding(vec![2.0, 1.0]), Label::Negative),
            pair("d", "a", ImageRef::Path("/nonexistent.png".into()), CaptionRef::Text("x".into()), Label::Negative),
        ];
        let out = score_pairs(pairs, &stub);
        assert_eq!(out.dropped, 1);
        assert!(out.warnings[0].contains("dropped d"));
        let s: Vec<f64> = out.pairs.iter().map(|p| p.score.unwrap()).collect();
        assert!((s[0] - 1.0).abs() < 1e-6);
        assert_eq!(s[1], 0.0);
        // Independent: (1·2 + 2·1) / (√5·√5) = 0.8
        assert!((s[2] - 0.8).abs() < 1e-6);
        assert!((s[2] - cosine_slices(&[1.0, 2.0], &[2.0, 1.0])).abs() < 1e-12);
    }

    #[test]
    fn report_on_synthetic_rows() {
        let stub = StubEmbedder::default();
        let rows = synthetic_rows(40, 3, &stub);
        let (pos, pool) = positives_and_pool(&rows, std::path::Path::new(".")).unwrap();
        let pairs = build_contrastive_set(&pos, 20, &pool, 3).unwrap();
        let report = compute_report(&score_pairs(pairs, &stub), &DEFAULT_TOP_K).unwrap();
        let m = &report.metrics;
        assert_eq!(m.roc_auc, 1.0);
        assert_eq!(m.top_k_accuracy[&1], 1.0);
        assert_eq!(m.counts, Counts { positives: 40, negatives: 800 });
        assert!((m.all_negative_accuracy - 800.0 / 840.0).abs() < 1e-12);
        for row in m.confusion_matrix_normalized {
            assert!((row[0] + row[1] - 1.0).abs() < 1e-9);
        }
        assert_eq!(report.series.roc.first(), Some(&[0.0, 0.0]));
        assert_eq!(report.series.roc.last(), Some(&[1.0, 1.0]));
    }
}
