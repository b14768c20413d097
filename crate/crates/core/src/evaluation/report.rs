use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvaluationError, EvaluationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl ReportFormat {
    /// `.md` → Markdown, anything else → JSON.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("md") | Some("markdown") => ReportFormat::Markdown,
            _ => ReportFormat::Json,
        }
    }
}

fn fmt_threshold(t: f64) -> String {
    if t.is_finite() {
        format!("{t:.4}")
    } else if t > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => markdown(report),
    }
}

fn markdown(r: &EvaluationReport) -> String {
    let m = &r.metrics;
    let mut s = String::new();
    let _ = writeln!(s, "# Alignment evaluation\n");
    let _ = writeln!(s, "Pairs: {} positive, {} negative", m.counts.positives, m.counts.negatives);
    if r.dropped_pairs > 0 {
        let _ = writeln!(s, "Dropped pairs: {}", r.dropped_pairs);
    }
    let _ = writeln!(s, "\n| metric | value |\n|---|---|");
    let rows = [
        ("ROC-AUC", format!("{:.4}", m.roc_auc)),
        ("PR-AUC", format!("{:.4}", m.pr_auc)),
        ("F1", format!("{:.4}", m.f1)),
        ("precision", format!("{:.4}", m.precision)),
        ("recall", format!("{:.4}", m.recall)),
        ("accuracy", format!("{:.4}", m.accuracy)),
        ("all-negative accuracy floor", format!("{:.6}", m.all_negative_accuracy)),
        ("best threshold", fmt_threshold(m.best_threshold)),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "| {k} | {v} |");
    }
    let _ = writeln!(
        s,
        "\nAccuracy {:.4} vs. all-negative floor {:.6} (margin {:+.4}).",
        m.accuracy,
        m.all_negative_accuracy,
        m.accuracy - m.all_negative_accuracy
    );

    let _ = writeln!(s, "\n## Top-K accuracy\n\n| K | accuracy |\n|---|---|");
    for (k, v) in &m.top_k_accuracy {
        let _ = writeln!(s, "| {k} | {v:.4} |");
    }

    let cm = m.confusion_matrix_normalized;
    let _ = writeln!(s, "\n## Confusion matrix (row-normalized)\n");
    let _ = writeln!(s, "| actual \\ predicted | negative | positive |\n|---|---|---|");
    let _ = writeln!(s, "| negative | {:.4} | {:.4} |", cm[0][0], cm[0][1]);
    let _ = writeln!(s, "| positive | {:.4} | {:.4} |", cm[1][0], cm[1][1]);

    if !r.notes.is_empty() || !r.warnings.is_empty() {
        let _ = writeln!(s, "\n## Notes\n");
        for n in r.notes.iter().chain(&r.warnings) {
            let _ = writeln!(s, "- {n}");
        }
    }
    s
}

pub fn emit_report(report: &EvaluationReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<(), EvaluationError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, render_report(report, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::*;
    use std::collections::BTreeMap;

    pub(crate) fn sample_report() -> EvaluationReport {
        EvaluationReport {
            metrics: MetricsReport {
                roc_auc: 0.9270,
                pr_auc: 0.5,
                accuracy: 0.9699,
                precision: 0.6,
                recall: 0.7,
                f1: 0.6504,
                best_threshold: f64::NEG_INFINITY,
                top_k_accuracy: BTreeMap::from([(1, 0.5)]),
                positional_recall: BTreeMap::from([(1, 0.5), (2, 1.0)]),
                confusion_matrix_normalized: [[0.977, 0.023], [0.241, 0.759]],
                confusion_counts: Confusion::default(),
                counts: Counts {
                    positives: 500,
                    negatives: 10_000,
                },
                all_negative_accuracy: 10_000.0 / 10_500.0,
            },
            series: PlotSeries {
                roc: vec![[0.0, 0.0], [1.0, 1.0]],
                pr: vec![[0.0, 1.0]],
                confusion: vec![],
            },
            dropped_pairs: 0,
            warnings: vec![],
            notes: vec![],
        }
    }

    #[test]
    fn json_preserves_values() {
        let r = sample_report();
        let json = render_report(&r, ReportFormat::Json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["metrics"]["roc_auc"].as_f64(), Some(0.9270));
        assert_eq!(v["metrics"]["best_threshold"], "-inf");
        assert_eq!(v["metrics"]["top_k_accuracy"]["1"].as_f64(), Some(0.5));
        let back: EvaluationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn markdown_prints_floor_next_to_accuracy() {
        let md = render_report(&sample_report(), ReportFormat::Markdown);
        assert!(md.contains("Accuracy 0.9699 vs. all-negative floor 0.952381"), "{md}");
        assert!(md.contains("| ROC-AUC | 0.9270 |"));
    }

    #[test]
    fn emit_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/report.md");
        emit_report(&sample_report(), ReportFormat::for_path(&path), &path).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("# Alignment evaluation"));
    }
}
