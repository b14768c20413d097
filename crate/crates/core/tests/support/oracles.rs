//! Brute-force reference implementations. Deliberately naive: quadratic or
//! exhaustive, no sorting tricks, no shared code with the library.

#![allow(dead_code)]

use std::collections::HashSet;

/// Fraction of (positive, negative) pairs ordered correctly, ties 1/2.
pub fn roc_auc_pairwise(scores: &[(f64, bool)]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for &(sp, lp) in scores {
        if !lp {
            continue;
        }
        for &(sn, ln) in scores {
            if ln {
                continue;
            }
            pairs += 1.0;
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn distinct_descending(scores: &[(f64, bool)]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &(s, _) in scores {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

/// Average precision by recounting the confusion at every cut `score ≥ t`.
pub fn pr_auc_exhaustive(scores: &[(f64, bool)]) -> f64 {
    let positives = scores.iter().filter(|(_, l)| *l).count() as f64;
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for t in distinct_descending(scores) {
        let tp = scores.iter().filter(|&&(s, l)| l && s >= t).count() as f64;
        let predicted = scores.iter().filter(|&&(s, _)| s >= t).count() as f64;
        let recall = tp / positives;
        area += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    area
}

/// (tp, fp, tn, fn) when scores strictly above `t` are predicted positive.
pub fn confusion_at(scores: &[(f64, bool)], t: f64) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for &(s, l) in scores {
        match (s > t, l) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, false) => c.2 += 1,
            (false, true) => c.3 += 1,
        }
    }
    c
}

pub fn f1_of(c: (usize, usize, usize, usize)) -> f64 {
    let (tp, fp, _, fn_) = c;
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    2.0 * p * r / (p + r)
}

pub fn accuracy_of(c: (usize, usize, usize, usize)) -> f64 {
    (c.0 + c.2) as f64 / (c.0 + c.1 + c.2 + c.3) as f64
}

/// Best-F1 cut over every possible partition, lowest cut first on ties.
/// Returns (confusion, f1, accuracy).
pub fn best_cut_exhaustive(scores: &[(f64, bool)]) -> ((usize, usize, usize, usize), f64, f64) {
    let mut cuts = vec![f64::NEG_INFINITY];
    let mut asc = distinct_descending(scores);
    asc.reverse();
    cuts.extend(asc);
    let mut best: Option<((usize, usize, usize, usize), f64)> = None;
    for t in cuts {
        let c = confusion_at(scores, t);
        let f = f1_of(c);
        if best.is_none_or(|(_, bf)| f > bf) {
            best = Some((c, f));
        }
    }
    let (c, f) = best.unwrap();
    (c, f, accuracy_of(c))
}

/// Word 5-shingles as strings, after the same normalization rule
/// (lowercase, alphanumerics only, whitespace-split).
pub fn shingles(text: &str) -> HashSet<String> {
    let words: Vec<String> = text
        .split_whitespace()
        .map(|w| w.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect::<String>())
        .filter(|w| !w.is_empty())
        .collect();
    if words.len() <= 5 {
        return HashSet::from([words.join(" ")]);
    }
    words.windows(5).map(|w| w.join(" ")).collect()
}

pub fn jaccard_sets(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    if union == 0.0 {
        1.0
    } else {
        inter / union
    }
}

/// Indices kept by first-occurrence dedup: a text is dropped when an earlier
/// kept text has identical shingles-normalized form or Jaccard ≥ threshold.
pub fn dedup_kept(texts: &[String], threshold: f64) -> Vec<usize> {
    let norm = |t: &str| {
        t.split_whitespace()
            .map(|w| w.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect::<String>())
            .filter(|w| !w.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut kept: Vec<usize> = Vec::new();
    for (i, t) in texts.iter().enumerate() {
        let dup = kept.iter().any(|&k| {
            norm(&texts[k]) == norm(t) || jaccard_sets(&shingles(&texts[k]), &shingles(t)) >= threshold
        });
        if !dup {
            kept.push(i);
        }
    }
    kept
}

/// All greedy-consistent pick sequences of length `min(k, n)`: every step's
/// pick maximizes `λ·rel − (1−λ)·max_sim_to_prefix` among the remaining
/// candidates, lowest index on ties. Enumerates every ordered subset.
pub fn greedy_trajectories(rel: &[f64], sim: &[Vec<f64>], k: usize, lambda: f64) -> Vec<Vec<usize>> {
    let n = rel.len();
    let len = k.min(n);
    let objective = |j: usize, prefix: &[usize]| {
        let penalty = if prefix.is_empty() {
            0.0
        } else {
            prefix.iter().map(|&p| sim[j][p]).fold(f64::NEG_INFINITY, f64::max)
        };
        lambda * rel[j] - (1.0 - lambda) * penalty
    };
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(seq) = stack.pop() {
        if seq.len() == len {
            let consistent = (0..len).all(|t| {
                let prefix = &seq[..t];
                let chosen = objective(seq[t], prefix);
                (0..n).filter(|j| !prefix.contains(j)).all(|j| {
                    let o = objective(j, prefix);
                    o < chosen || (o == chosen && j >= seq[t])
                })
            });
            if consistent {
                out.push(seq);
            }
            continue;
        }
        for j in 0..n {
            if !seq.contains(&j) {
                let mut next = seq.clone();
                next.push(j);
                stack.push(next);
            }
        }
    }
    out
}
