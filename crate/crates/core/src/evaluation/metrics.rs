//! Binary classification and ranking metrics over (score, label) pairs.
//!
//! Every function sorts once and sweeps; ties are handled explicitly:
//! ROC-AUC uses mid-ranks, threshold sweeps evaluate between distinct scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("metric needs both classes (positives {positives}, negatives {negatives})")]
    DegenerateLabels { positives: usize, negatives: usize },
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("group {0} does not contain exactly one positive")]
    MalformedGroup(usize),
}

fn class_counts(scores: &[(f64, bool)]) -> Result<(usize, usize), MetricsError> {
    if let Some(i) = scores.iter().position(|(s, _)| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }
    let positives = scores.iter().filter(|(_, l)| *l).count();
    Ok((positives, scores.len() - positives))
}

fn require_both(scores: &[(f64, bool)]) -> Result<(usize, usize), MetricsError> {
    let (positives, negatives) = class_counts(scores)?;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::DegenerateLabels { positives, negatives });
    }
    Ok((positives, negatives))
}

/// Tie groups in descending score order: (score, positives, negatives).
fn descending_groups(scores: &[(f64, bool)]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (s, l) in sorted {
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                if l {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((s, l as usize, (!l) as usize)),
        }
    }
    groups
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half (Mann–Whitney U with mid-ranks).
pub fn roc_auc(scores: &[(f64, bool)]) -> Result<f64, MetricsError> {
    let (p, n) = require_both(scores)?;
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        // 1-based ranks i+1 ..= j share their mean.
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = sorted[i..j].iter().filter(|(_, l)| *l).count();
        rank_sum += mid_rank * pos_in_group as f64;
        i = j;
    }
    let u = rank_sum - (p * (p + 1)) as f64 / 2.0;
    Ok(u / (p as f64 * n as f64))
}

/// ROC points (fpr, tpr) from (0, 0) to (1, 1), one per distinct score.
pub fn roc_curve(scores: &[(f64, bool)]) -> Result<Vec<[f64; 2]>, MetricsError> {
    let (p, n) = require_both(scores)?;
    let mut points = vec![[0.0, 0.0]];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (_, gp, gn) in descending_groups(scores) {
        tp += gp;
        fp += gn;
        points.push([fp as f64 / n as f64, tp as f64 / p as f64]);
    }
    Ok(points)
}

/// Area under the precision–recall step curve (average precision):
/// `Σ (Rᵢ − Rᵢ₋₁) · Pᵢ` over thresholds at each distinct score, descending.
pub fn pr_auc(scores: &[(f64, bool)]) -> Result<f64, MetricsError> {
    Ok(pr_sweep(scores)?.1)
}

/// PR points (recall, precision), starting at (0, 1).
pub fn pr_curve(scores: &[(f64, bool)]) -> Result<Vec<[f64; 2]>, MetricsError> {
    Ok(pr_sweep(scores)?.0)
}

fn pr_sweep(scores: &[(f64, bool)]) -> Result<(Vec<[f64; 2]>, f64), MetricsError> {
    let (p, n) = class_counts(scores)?;
    if p == 0 {
        return Err(MetricsError::DegenerateLabels { positives: p, negatives: n });
    }
    let mut points = vec![[0.0, 1.0]];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for (_, gp, gn) in descending_groups(scores) {
        tp += gp;
        fp += gn;
        let recall = tp as f64 / p as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push([recall, precision]);
    }
    Ok((points, area))
}

/// Confusion counts at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.tn) as f64 / total as f64
    }

    /// Rows are the actual class (negative, positive), columns the
    /// predicted class; each row sums to 1.
    pub fn row_normalized(&self) -> [[f64; 2]; 2] {
        let neg = (self.tn + self.fp) as f64;
        let pos = (self.tp + self.fn_) as f64;
        [
            [self.tn as f64 / neg, self.fp as f64 / neg],
            [self.fn_ as f64 / pos, self.tp as f64 / pos],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    /// Scores strictly above this are predicted positive. May be ±∞.
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub confusion_normalized: [[f64; 2]; 2],
}

impl ThresholdMetrics {
    fn at(threshold: f64, confusion: Confusion) -> Self {
        Self {
            threshold,
            accuracy: confusion.accuracy(),
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
            confusion,
            confusion_normalized: confusion.row_normalized(),
        }
    }
}

/// Sweeps −∞, every midpoint between consecutive distinct scores, and +∞;
/// returns the threshold maximizing F1, the lowest one on ties.
pub fn best_threshold_metrics(scores: &[(f64, bool)]) -> Result<ThresholdMetrics, MetricsError> {
    let (p, n) = require_both(scores)?;
    let mut groups = descending_groups(scores);
    groups.reverse(); // ascending
    // Start at −∞: everything predicted positive.
    let mut c = Confusion {
        tp: p,
        fp: n,
        tn: 0,
        fn_: 0,
    };
    let mut best = ThresholdMetrics::at(f64::NEG_INFINITY, c);
    for (k, &(score, gp, gn)) in groups.iter().enumerate() {
        // Moving the threshold above `score` flips this group to negative.
        c.tp -= gp;
        c.fn_ += gp;
        c.fp -= gn;
        c.tn += gn;
        let threshold = match groups.get(k + 1) {
            Some(&(next, _, _)) => score + (next - score) / 2.0,
            None => f64::INFINITY,
        };
        let candidate = ThresholdMetrics::at(threshold, c);
        if candidate.f1 > best.f1 {
            best = candidate;
        }
    }
    Ok(best)
}

/// Accuracy and F1 of the classifier that predicts every pair negative.
pub fn all_negative_baseline(scores: &[(f64, bool)]) -> Result<ThresholdMetrics, MetricsError> {
    let (p, n) = class_counts(scores)?;
    if p + n == 0 {
        return Err(MetricsError::DegenerateLabels { positives: 0, negatives: 0 });
    }
    Ok(ThresholdMetrics::at(
        f64::INFINITY,
        Confusion {
            tp: 0,
            fp: 0,
            tn: n,
            fn_: p,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    /// K → fraction of groups whose positive ranks within the top K.
    pub top_k_accuracy: BTreeMap<usize, f64>,
    /// rank r → fraction of groups whose positive ranks at r or better.
    pub positional_recall: BTreeMap<usize, f64>,
    /// 1-based rank of the positive in each group.
    pub ranks: Vec<usize>,
}

/// Ranks the single positive of each group among its negatives. Ties count
/// against the positive.
pub fn ranking_metrics(groups: &[Vec<(f64, bool)>], ks: &[usize]) -> Result<RankingMetrics, MetricsError> {
    let mut ranks = Vec::with_capacity(groups.len());
    let mut max_len = 0;
    for (g, group) in groups.iter().enumerate() {
        class_counts(group)?;
        let mut positives = group.iter().filter(|(_, l)| *l);
        let (Some(&(pos, _)), None) = (positives.next(), positives.next()) else {
            return Err(MetricsError::MalformedGroup(g));
        };
        let rank = 1 + group.iter().filter(|(s, l)| !*l && *s >= pos).count();
        ranks.push(rank);
        max_len = max_len.max(group.len());
    }
    let total = groups.len().max(1) as f64;
    let within = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / total;
    Ok(RankingMetrics {
        top_k_accuracy: ks.iter().map(|&k| (k, within(k))).collect(),
        positional_recall: (1..=max_len).map(|r| (r, within(r))).collect(),
        ranks,
    })
}

/// JSON has no infinities; encode them as strings.
pub(crate) mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Number(*v).serialize(s)
        } else if *v > 0.0 {
            Repr::Text("+inf".into()).serialize(s)
        } else {
            Repr::Text("-inf".into()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "+inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad threshold {t}"))),
        }
    }
}
