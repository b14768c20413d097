use std::collections::HashSet;

use super::TextSegment;
use crate::hashing::hash64;

pub const SHINGLE_WORDS: usize = 5;

/// Lowercase, keep alphanumerics, collapse whitespace.
pub fn normalize_for_hash(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect::<String>())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Hashes of every run of [`SHINGLE_WORDS`] consecutive words. Texts shorter
/// than one shingle hash as a single shingle.
pub fn shingle_signature(normalized: &str) -> Vec<u64> {
    let words: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
    let mut sig: Vec<u64> = if words.len() <= SHINGLE_WORDS {
        vec![hash64(&[words.join(" ").as_bytes()])]
    } else {
        words
            .windows(SHINGLE_WORDS)
            .map(|w| hash64(&[w.join(" ").as_bytes()]))
            .collect()
    };
    sig.sort_unstable();
    sig.dedup();
    sig
}

/// Jaccard overlap of two sorted, deduplicated signatures.
pub fn jaccard(a: &[u64], b: &[u64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared as f64 / (a.len() + b.len() - shared) as f64
}

/// Collapses exact duplicates and near duplicates (Jaccard ≥ `threshold`)
/// onto their first occurrence. Survivors keep their input order.
pub fn dedupe_segments(segments: Vec<TextSegment>, threshold: f64) -> Vec<TextSegment> {
    let mut seen = HashSet::new();
    let mut kept: Vec<TextSegment> = Vec::with_capacity(segments.len());
    for seg in segments {
        if seen.contains(&seg.exact_hash) {
            continue;
        }
        if kept
            .iter()
            .any(|k| jaccard(&k.near_dup_signature, &seg.near_dup_signature) >= threshold)
        {
            continue;
        }
        seen.insert(seg.exact_hash.clone());
        kept.push(seg);
    }
    kept
}
