//! Evaluation rows, contrastive pair construction and the synthetic
//! separable generator.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::StubEmbedder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageRef {
    Path(PathBuf),
    Embedding(Vec<f32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionRef {
    Text(String),
    Embedding(Vec<f32>),
}

impl CaptionRef {
    /// Identity used for "same caption" checks.
    fn key(&self) -> String {
        match self {
            CaptionRef::Text(t) => format!("t:{t}"),
            CaptionRef::Embedding(v) => {
                let bits: Vec<String> = v.iter().map(|x| format!("{:08x}", x.to_bits())).collect();
                format!("e:{}", bits.join(""))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub pair_id: String,
    /// pair_id of the positive this pair was built around.
    pub group_id: String,
    pub topic: String,
    pub image: ImageRef,
    pub caption: CaptionRef,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveItem {
    pub pair_id: String,
    pub topic: String,
    pub image: ImageRef,
    pub caption: CaptionRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolCaption {
    pub topic: String,
    pub caption: CaptionRef,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("pool offers {available} eligible captions for {pair_id}, need {needed}")]
    InsufficientPool {
        pair_id: String,
        available: usize,
        needed: usize,
    },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pairs every positive with `negative_ratio` captions sampled uniformly
/// without replacement from the pool, excluding captions of the same topic
/// and the positive's own caption. Output order: each positive followed by
/// its negatives (`{pair_id}-neg{j}`).
pub fn build_contrastive_set(
    positives: &[PositiveItem],
    negative_ratio: usize,
    pool: &[PoolCaption],
    seed: u64,
) -> Result<Vec<EvalPair>, DatasetError> {
    // Distinct captions, first occurrence wins.
    let mut seen = HashSet::new();
    let pool: Vec<(&PoolCaption, String)> = pool
        .iter()
        .filter_map(|p| {
            let key = p.caption.key();
            seen.insert(key.clone()).then_some((p, key))
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(positives.len() * (1 + negative_ratio));
    for pos in positives {
        let own = pos.caption.key();
        let eligible: Vec<&PoolCaption> = pool
            .iter()
            .filter(|(p, key)| p.topic != pos.topic && *key != own)
            .map(|(p, _)| *p)
            .collect();
        if eligible.len() < negative_ratio {
            return Err(DatasetError::InsufficientPool {
                pair_id: pos.pair_id.clone(),
                available: eligible.len(),
                needed: negative_ratio,
            });
        }
        out.push(EvalPair {
            pair_id: pos.pair_id.clone(),
            group_id: pos.pair_id.clone(),
            topic: pos.topic.clone(),
            image: pos.image.clone(),
            caption: pos.caption.clone(),
            label: Label::Positive,
            score: None,
        });
        let picks = sample(&mut rng, eligible.len(), negative_ratio);
        for (j, idx) in picks.into_iter().enumerate() {
            out.push(EvalPair {
                pair_id: format!("{}-neg{j}", pos.pair_id),
                group_id: pos.pair_id.clone(),
                topic: pos.topic.clone(),
                image: pos.image.clone(),
                caption: eligible[idx].caption.clone(),
                label: Label::Negative,
                score: None,
            });
        }
    }
    Ok(out)
}

/// One line of a JSONL evaluation dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRow {
    pub pair_id: String,
    pub topic: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_embedding: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption_embedding: Option<Vec<f32>>,
    pub label: Label,
}

impl DatasetRow {
    fn image_ref(&self, base: &Path) -> Result<ImageRef, String> {
        match (&self.image_path, &self.image_embedding) {
            (Some(p), None) => Ok(ImageRef::Path(base.join(p))),
            (None, Some(v)) => Ok(ImageRef::Embedding(v.clone())),
            _ => Err("exactly one of image_path, image_embedding required".into()),
        }
    }

    fn caption_ref(&self) -> Result<CaptionRef, String> {
        match (&self.caption, &self.caption_embedding) {
            (_, Some(v)) => Ok(CaptionRef::Embedding(v.clone())),
            (Some(t), None) if !t.trim().is_empty() => Ok(CaptionRef::Text(t.clone())),
            _ => Err("caption or caption_embedding required".into()),
        }
    }
}

/// Reads JSONL rows. Blank lines and lines starting with `#` are skipped.
pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<DatasetRow>, DatasetError> {
    let file = std::fs::File::open(path)?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row: DatasetRow = serde_json::from_str(trimmed).map_err(|e| DatasetError::Row {
            line: i + 1,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_rows(rows: &[DatasetRow], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Splits rows into positives and a caption pool. Every row's caption joins
/// the pool; negative rows contribute nothing else. Image paths resolve
/// against `base`.
pub fn positives_and_pool(rows: &[DatasetRow], base: &Path) -> Result<(Vec<PositiveItem>, Vec<PoolCaption>), DatasetError> {
    let mut positives = Vec::new();
    let mut pool = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let err = |message: String| DatasetError::Row { line: i + 1, message };
        let caption = row.caption_ref().map_err(err)?;
        if row.label.is_positive() {
            positives.push(PositiveItem {
                pair_id: row.pair_id.clone(),
                topic: row.topic.clone(),
                image: row.image_ref(base).map_err(err)?,
                caption: caption.clone(),
            });
        }
        pool.push(PoolCaption {
            topic: row.topic.clone(),
            caption,
        });
    }
    Ok((positives, pool))
}

/// Loads a dataset file and builds its contrastive set.
pub fn load_contrastive_set(path: impl AsRef<Path>, negative_ratio: usize, seed: u64) -> Result<Vec<EvalPair>, DatasetError> {
    let path = path.as_ref();
    let rows = read_rows(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (positives, pool) = positives_and_pool(&rows, base)?;
    build_contrastive_set(&positives, negative_ratio, &pool, seed)
}

/// Per-coordinate noise amplitude for synthetic image embeddings.
pub const SYNTHETIC_NOISE: f64 = 0.02;

/// Positive rows whose image embedding is the stub caption embedding plus
/// small uniform noise, so each image sits much closer to its own caption
/// than to any other topic's caption.
pub fn synthetic_rows(n_positives: usize, seed: u64, embedder: &StubEmbedder) -> Vec<DatasetRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_positives)
        .map(|i| {
            let caption: String = (0..6).map(|j| format!("topic{i}term{j}")).collect::<Vec<_>>().join(" ");
            let base = unit(&embedder.text_vector(&caption));
            let noisy: Vec<f64> = base
                .iter()
                .map(|x| x + rng.random_range(-SYNTHETIC_NOISE..SYNTHETIC_NOISE))
                .collect();
            DatasetRow {
                pair_id: format!("syn-{i:04}"),
                topic: format!("topic-{i}"),
                image_path: None,
                image_embedding: Some(unit(&noisy).into_iter().map(|x| x as f32).collect()),
                caption: Some(caption),
                caption_embedding: None,
                label: Label::Positive,
            }
        })
        .collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn positives(n: usize) -> (Vec<PositiveItem>, Vec<PoolCaption>) {
        let pos: Vec<_> = (0..n)
            .map(|i| PositiveItem {
                pair_id: format!("p{i}"),
                topic: format!("topic{}", i % 7),
                image: ImageRef::Embedding(vec![i as f32, 1.0]),
                caption: CaptionRef::Text(format!("caption {i}")),
            })
            .collect();
        let pool = pos
            .iter()
            .map(|p| PoolCaption {
                topic: p.topic.clone(),
                caption: p.caption.clone(),
            })
            .collect();
        (pos, pool)
    }

    #[test]
    fn sizes_and_determinism() {
        let (pos, pool) = positives(50);
        let a = build_contrastive_set(&pos, 20, &pool, 7).unwrap();
        assert_eq!(a.len(), 50 * 21);
        assert_eq!(a, build_contrastive_set(&pos, 20, &pool, 7).unwrap());
        assert_ne!(a, build_contrastive_set(&pos, 20, &pool, 8).unwrap());
        assert_eq!(build_contrastive_set(&pos[..1], 0, &pool, 7).unwrap().len(), 1);
    }

    #[test]
    fn negatives_are_unrelated_and_distinct() {
        let (pos, pool) = positives(30);
        let pairs = build_contrastive_set(&pos, 10, &pool, 1).unwrap();
        for group in pairs.chunks(11) {
            let p = &group[0];
            assert!(p.label.is_positive());
            let mut seen = HashSet::new();
            for n in &group[1..] {
                assert_eq!(n.label, Label::Negative);
                assert_eq!(n.group_id, p.pair_id);
                assert_ne!(n.caption, p.caption);
                let src = pool.iter().find(|c| c.caption == n.caption).unwrap();
                assert_ne!(src.topic, p.topic);
                assert!(seen.insert(n.caption.key()));
            }
        }
    }

    #[test]
    fn small_pool_is_reported() {
        let (pos, pool) = positives(5);
        assert!(matches!(
            build_contrastive_set(&pos, 20, &pool, 1),
            Err(DatasetError::InsufficientPool { needed: 20, .. })
        ));
    }

    #[test]
    fn rows_round_trip_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let rows = synthetic_rows(3, 1, &StubEmbedder::default());
        write_rows(&rows, &path).unwrap();
        assert_eq!(read_rows(&path).unwrap(), rows);

        std::fs::write(&path, "# comment\n\n{\"pair_id\":\"a\",\"topic\":\"t\",\"label\":\"positive\",\"caption\":\"x\"}\n").unwrap();
        let rows = read_rows(&path).unwrap();
        assert!(matches!(positives_and_pool(&rows, dir.path()), Err(DatasetError::Row { line: 1, .. })));

        std::fs::write(&path, "{\"pair_id\":\"a\",\"oops\":1}\n").unwrap();
        assert!(matches!(read_rows(&path), Err(DatasetError::Row { line: 1, .. })));
    }
}
