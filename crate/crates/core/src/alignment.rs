//! α-weighted relevance scoring and threshold / top-K / MMR selection.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, Embedding, EmbeddingError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AlignmentError {
    #[error("candidate has neither a text nor an image embedding")]
    NoModality,
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScore {
    /// Segment or image id.
    pub target_id: String,
    pub text_sim: Option<f64>,
    pub image_sim: Option<f64>,
    pub combined: f64,
    pub alpha_used: f64,
}

/// Blends text and image relevance to the topic.
///
/// With both modalities present, `combined = α·text + (1−α)·image`; α = 1
/// and α = 0 return the respective similarity unchanged. With one modality,
/// `combined` is that similarity whatever α is.
pub fn score_candidate(
    target_id: impl Into<String>,
    topic: &Embedding,
    text: Option<&Embedding>,
    image: Option<&Embedding>,
    alpha: f64,
) -> Result<AlignmentScore, AlignmentError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(AlignmentError::InvalidAlpha(alpha));
    }
    let text_sim = text.map(|t| cosine_similarity(topic, t)).transpose()?;
    let image_sim = image.map(|i| cosine_similarity(topic, i)).transpose()?;
    let combined = combine(text_sim, image_sim, alpha).ok_or(AlignmentError::NoModality)?;
    Ok(AlignmentScore {
        target_id: target_id.into(),
        text_sim,
        image_sim,
        combined,
        alpha_used: alpha,
    })
}

pub(crate) fn combine(text_sim: Option<f64>, image_sim: Option<f64>, alpha: f64) -> Option<f64> {
    match (text_sim, image_sim) {
        (Some(t), Some(_)) if alpha == 1.0 => Some(t),
        (Some(_), Some(i)) if alpha == 0.0 => Some(i),
        (Some(t), Some(i)) => Some((alpha * t + (1.0 - alpha) * i).clamp(-1.0, 1.0)),
        (Some(t), None) => Some(t),
        (None, Some(i)) => Some(i),
        (None, None) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    /// Maximum picks (K ≥ 1).
    pub limit: usize,
    /// Discard candidates with `combined` below this.
    pub min_score: f64,
    /// MMR trade-off λ in `[0, 1]`.
    pub lambda: f64,
}

/// Greedy maximal-marginal-relevance over precomputed relevance and a
/// pairwise similarity function. Returns picked indices in pick order.
///
/// Each step picks the candidate maximizing
/// `λ·relevance − (1−λ)·max_sim_to_picked` (the redundancy term is 0 before
/// the first pick). Ties go to the lowest index.
pub fn mmr_order(relevance: &[f64], similarity: impl Fn(usize, usize) -> f64, limit: usize, lambda: f64) -> Vec<usize> {
    let n = relevance.len();
    let mut picked: Vec<usize> = Vec::with_capacity(limit.min(n));
    let mut taken = vec![false; n];
    // Running max similarity to the picked set.
    let mut redundancy = vec![f64::NEG_INFINITY; n];
    while picked.len() < limit.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            let penalty = if picked.is_empty() { 0.0 } else { redundancy[i] };
            let objective = lambda * relevance[i] - (1.0 - lambda) * penalty;
            if best.is_none_or(|(_, b)| objective > b) {
                best = Some((i, objective));
            }
        }
        let Some((chosen, _)) = best else { break };
        taken[chosen] = true;
        picked.push(chosen);
        for i in (0..n).filter(|&i| !taken[i]) {
            redundancy[i] = redundancy[i].max(similarity(i, chosen));
        }
    }
    picked
}

/// Threshold, then MMR-select up to `params.limit` candidates.
///
/// `scored` must be in retrieval order, which breaks ties. Candidates whose
/// id is missing from `embeddings` carry no redundancy penalty.
pub fn select_top(
    scored: &[AlignmentScore],
    params: &SelectionParams,
    embeddings: &HashMap<String, Embedding>,
) -> Vec<AlignmentScore> {
    let pool: Vec<&AlignmentScore> = scored.iter().filter(|s| s.combined >= params.min_score).collect();
    let relevance: Vec<f64> = pool.iter().map(|s| s.combined).collect();
    let vectors: Vec<Option<&Embedding>> = pool.iter().map(|s| embeddings.get(&s.target_id)).collect();
    let similarity = |i: usize, j: usize| match (vectors[i], vectors[j]) {
        (Some(a), Some(b)) => cosine_similarity(a, b).unwrap_or(0.0),
        _ => 0.0,
    };
    mmr_order(&relevance, similarity, params.limit, params.lambda)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Modality;
    use proptest::prelude::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::normalized(Modality::Text, v, "t").unwrap()
    }

    fn score(id: &str, combined: f64) -> AlignmentScore {
        AlignmentScore {
            target_id: id.into(),
            text_sim: Some(combined),
            image_sim: None,
            combined,
            alpha_used: 0.5,
        }
    }

    #[test]
    fn blend_arithmetic() {
        assert!((combine(Some(0.6), Some(0.2), 0.5).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(combine(Some(0.6), Some(0.2), 1.0), Some(0.6));
        assert_eq!(combine(Some(0.6), Some(0.2), 0.0), Some(0.2));
        assert_eq!(combine(Some(-0.0), Some(0.3), 1.0).unwrap().to_bits(), (-0.0f64).to_bits());
        assert_eq!(combine(None, Some(0.3), 0.9), Some(0.3));
        assert_eq!(combine(None, None, 0.5), None);
    }

    #[test]
    fn score_candidate_uses_topic_cosine() {
        let topic = emb(&[1.0, 0.0, 0.0]);
        let text = emb(&[1.0, 1.0, 0.0]);
        let image = emb(&[0.0, 1.0, 0.0]);
        let s = score_candidate("c", &topic, Some(&text), Some(&image), 0.5).unwrap();
        assert!((s.text_sim.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert_eq!(s.image_sim, Some(0.0));
        assert!((s.combined - 0.5 * s.text_sim.unwrap()).abs() < 1e-12);
        assert_eq!(s.alpha_used, 0.5);
        assert_eq!(score_candidate("c", &topic, None, None, 0.5), Err(AlignmentError::NoModality));
        assert_eq!(
            score_candidate("c", &topic, Some(&text), None, 1.5),
            Err(AlignmentError::InvalidAlpha(1.5))
        );
    }

    #[test]
    fn lambda_one_is_top_k_by_score() {
        let scored = vec![score("a", 0.9), score("b", 0.5), score("c", 0.3)];
        let p = SelectionParams {
            limit: 2,
            min_score: 0.4,
            lambda: 1.0,
        };
        let out = select_top(&scored, &p, &HashMap::new());
        assert_eq!(out.iter().map(|s| s.target_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn everything_below_threshold_selects_nothing() {
        let scored = vec![score("a", 0.1), score("b", 0.05)];
        let p = SelectionParams {
            limit: 3,
            min_score: 0.2,
            lambda: 0.7,
        };
        assert!(select_top(&scored, &p, &HashMap::new()).is_empty());
    }

    /// Objective of a whole pick sequence, summed step by step.
    fn sequence_objective(seq: &[usize], rel: &[f64], sims: &[Vec<f64>], lambda: f64) -> f64 {
        let mut total = 0.0;
        for (step, &i) in seq.iter().enumerate() {
            let red = seq[..step].iter().map(|&j| sims[i][j]).fold(f64::NEG_INFINITY, f64::max);
            let red = if step == 0 { 0.0 } else { red };
            total += lambda * rel[i] - (1.0 - lambda) * red;
        }
        total
    }

    #[test]
    fn redundant_duplicate_is_passed_over() {
        let e1 = emb(&[1.0, 0.0, 0.0]);
        let e3 = emb(&[0.0, 0.0, 1.0]);
        let scored = vec![score("1", 0.9), score("2", 0.85), score("3", 0.6)];
        let embeddings: HashMap<_, _> = [("1", e1.clone()), ("2", e1.clone()), ("3", e3.clone())]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let p = SelectionParams {
            limit: 2,
            min_score: -1.0,
            lambda: 0.5,
        };
        let out = select_top(&scored, &p, &embeddings);
        assert_eq!(out.iter().map(|s| s.target_id.as_str()).collect::<Vec<_>>(), ["1", "3"]);

        // Brute force over every ordered pair: (1, 3) has the best objective.
        let rel = [0.9, 0.85, 0.6];
        let es = [&e1, &e1, &e3];
        let sims: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| cosine_similarity(es[i], es[j]).unwrap()).collect())
            .collect();
        let mut best = (f64::NEG_INFINITY, vec![]);
        for a in 0..3 {
            for b in (0..3).filter(|&b| b != a) {
                let v = sequence_objective(&[a, b], &rel, &sims, 0.5);
                if v > best.0 {
                    best = (v, vec![a, b]);
                }
            }
        }
        assert_eq!(best.1, vec![0, 2]);
    }

    #[test]
    fn ties_go_to_retrieval_order() {
        let scored = vec![score("x", 0.5), score("y", 0.5), score("z", 0.5)];
        let p = SelectionParams {
            limit: 3,
            min_score: 0.0,
            lambda: 0.6,
        };
        let out = select_top(&scored, &p, &HashMap::new());
        assert_eq!(out.iter().map(|s| s.target_id.as_str()).collect::<Vec<_>>(), ["x", "y", "z"]);
    }

    proptest! {
        #[test]
        fn selection_bounds(
            combined in prop::collection::vec(-1.0f64..1.0, 0..20),
            k in 1usize..6,
            tau in -1.0f64..1.0,
            lambda in 0.0f64..=1.0,
        ) {
            let scored: Vec<_> = combined.iter().enumerate().map(|(i, &c)| score(&i.to_string(), c)).collect();
            let p = SelectionParams { limit: k, min_score: tau, lambda };
            let out = select_top(&scored, &p, &HashMap::new());
            prop_assert!(out.len() <= k);
            prop_assert!(out.iter().all(|s| s.combined >= tau));
        }
    }
}
