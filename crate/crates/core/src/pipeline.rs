//! One summarization run: search, fetch, extract, gate, embed, caption,
//! score, select, assemble.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{score_candidate, select_top, AlignmentScore, SelectionParams};
use crate::captioning::{caption_images, Captioner, StubCaptioner};
use crate::domain::{ConfigError, SummaryConfig, TopicQuery};
use crate::embedding::{cosine_similarity, embed_image, embed_text, Embedding, EmbeddingError, EmbeddingProvider, StubEmbedder};
use crate::extraction::{
    declared_below_minimum, dedupe_segments, extract_segments, gate_images, FetchedImage, GateStatus, ImageCandidate,
};
use crate::retrieval::{
    fetch_all, fetch_documents, search_all, ByteCache, DocStatus, FetchOutcome, Fetcher, FixtureCorpus, FixtureFetcher,
    FixtureProvider, NoCache, RetrievalError, SearchProvider, Vertical,
};
use crate::summarizer::{assemble, SelectedImage, SelectedSegment, Selections, SummarizeError, SummaryBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Retrieval,
    Fetch,
    Extraction,
    Images,
    Embedding,
    Captioning,
    Alignment,
    Assembly,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Retrieval => "retrieval",
            Stage::Fetch => "fetch",
            Stage::Extraction => "extraction",
            Stage::Images => "images",
            Stage::Embedding => "embedding",
            Stage::Captioning => "captioning",
            Stage::Alignment => "alignment",
            Stage::Assembly => "assembly",
        }
    }
}

/// Progress notifications, emitted in order on the calling thread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PipelineEvent {
    StageStarted {
        stage: Stage,
    },
    StageCompleted {
        stage: Stage,
        /// Items produced by the stage (documents, segments, images...).
        items: usize,
    },
    /// Selection result before assembly.
    PartialSelection {
        segment_ids: Vec<String>,
        image_ids: Vec<String>,
    },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("topic embedding failed: {0}")]
    TopicEmbedding(EmbeddingError),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
}

/// The collaborators of a run. Cheap to clone.
#[derive(Clone)]
pub struct Pipeline {
    pub provider: Arc<dyn SearchProvider>,
    pub fetcher: Arc<dyn Fetcher>,
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub captioner: Arc<dyn Captioner>,
    pub cache: Arc<dyn ByteCache>,
}

struct Clock {
    timing: BTreeMap<String, u64>,
    started: Instant,
}

impl Clock {
    fn start(&mut self, stage: Stage, observer: &mut dyn FnMut(PipelineEvent)) {
        self.started = Instant::now();
        observer(PipelineEvent::StageStarted { stage });
    }

    fn done(&mut self, stage: Stage, items: usize, observer: &mut dyn FnMut(PipelineEvent)) {
        let ms = self.started.elapsed().as_millis() as u64;
        self.timing.insert(stage.as_str().to_string(), ms);
        observer(PipelineEvent::StageCompleted { stage, items });
    }
}

impl Pipeline {
    /// Fixture provider and fetcher over a recorded corpus, stub embedder
    /// seeded with `seed`, stub captioner, no byte cache.
    pub fn offline(corpus: Arc<FixtureCorpus>, seed: u64) -> Self {
        Self {
            provider: Arc::new(FixtureProvider::new(corpus.clone())),
            fetcher: Arc::new(FixtureFetcher::new(corpus)),
            embedder: Arc::new(StubEmbedder::new(seed)),
            captioner: Arc::new(StubCaptioner),
            cache: Arc::new(NoCache),
        }
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn EmbeddingProvider>) -> Self {
        self.embedder = embedder;
        self
    }

    /// Runs every stage for `topic`. `config` is validated first (fast mode
    /// clamps apply). Degradations become warnings on the bundle.
    pub fn run(
        &self,
        topic: &TopicQuery,
        config: SummaryConfig,
        observer: &mut dyn FnMut(PipelineEvent),
    ) -> Result<SummaryBundle, PipelineError> {
        let config = config.validated()?;
        let budget = config.fetch_budget();
        let mut warnings = Vec::new();
        let mut clock = Clock {
            timing: BTreeMap::new(),
            started: Instant::now(),
        };

        clock.start(Stage::Retrieval, observer);
        let results = search_all(topic, &config, self.provider.as_ref())?;
        warnings.extend(results.warnings.iter().cloned());
        clock.done(Stage::Retrieval, results.documents.len() + results.images.len(), observer);

        clock.start(Stage::Fetch, observer);
        let documents = fetch_documents(results.documents, &budget, self.fetcher.as_ref(), self.cache.as_ref());
        for d in documents.iter().filter(|d| d.status != DocStatus::Ok) {
            warnings.push(format!("{}: {}", d.doc_id, d.error.as_deref().unwrap_or("not fetched")));
        }
        clock.done(
            Stage::Fetch,
            documents.iter().filter(|d| d.status == DocStatus::Ok).count(),
            observer,
        );

        clock.start(Stage::Extraction, observer);
        let mut segments = Vec::new();
        let mut page_images = Vec::new();
        for doc in documents.iter().filter(|d| d.status == DocStatus::Ok) {
            let ex = extract_segments(doc, config.min_segment_chars);
            warnings.extend(ex.warning);
            segments.extend(ex.segments);
            page_images.extend(ex.page_images);
        }
        let segments = dedupe_segments(segments, config.near_dup_threshold);
        clock.done(Stage::Extraction, segments.len(), observer);

        clock.start(Stage::Images, observer);
        let mut hits = results.images;
        let room = config.max_images.saturating_sub(hits.len());
        hits.extend(page_images.into_iter().take(room));
        let wanted: Vec<usize> = (0..hits.len())
            .filter(|&i| !declared_below_minimum(&hits[i], &config))
            .collect();
        let requests: Vec<(String, Vertical)> = wanted.iter().map(|&i| (hits[i].url.clone(), Vertical::Images)).collect();
        let outcomes = fetch_all(&requests, &budget, self.fetcher.as_ref(), self.cache.as_ref());
        let mut payloads: Vec<Option<Vec<u8>>> = vec![None; hits.len()];
        for (&i, outcome) in wanted.iter().zip(outcomes) {
            match outcome {
                FetchOutcome::Fetched { bytes, .. } => payloads[i] = Some(bytes),
                FetchOutcome::Failed(e) => warnings.push(format!("{}: {e}", hits[i].image_id)),
                FetchOutcome::SkippedBudget => warnings.push(format!("{}: skipped, fetch budget exhausted", hits[i].image_id)),
            }
        }
        let fetched = hits
            .into_iter()
            .zip(payloads)
            .map(|(hit, bytes)| FetchedImage { hit, bytes })
            .collect();
        let candidates = gate_images(fetched, &config);
        let accepted = candidates.iter().filter(|c| c.gate_status == GateStatus::Accepted).count();
        clock.done(Stage::Images, accepted, observer);

        clock.start(Stage::Embedding, observer);
        let embedder = self.embedder.as_ref();
        let topic_emb = embed_text(embedder, &topic.normalized).map_err(PipelineError::TopicEmbedding)?;
        let segment_embs = self.embed_all(&segments, |s| embed_text(embedder, &s.text));
        let mut images: Vec<ImageCandidate> = candidates
            .into_iter()
            .filter(|c| c.gate_status == GateStatus::Accepted)
            .collect();
        let image_embs = self.embed_all(&images, |c| embed_image(embedder, &c.bytes));
        clock.done(Stage::Embedding, segments.len() + images.len(), observer);

        // Caption order: image-topic cosine, descending; ties keep retrieval order.
        let mut order: Vec<usize> = (0..images.len()).collect();
        let topic_sim = |i: usize| match &image_embs[i] {
            Ok(e) => cosine_similarity(&topic_emb, e).unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        };
        order.sort_by(|&a, &b| topic_sim(b).total_cmp(&topic_sim(a)));
        if config.captioning_enabled && !images.is_empty() {
            clock.start(Stage::Captioning, observer);
            let ranked: Vec<ImageCandidate> = order.iter().map(|&i| images[i].clone()).collect();
            let (captioned, caption_warnings) =
                caption_images(self.captioner.as_ref(), ranked, config.caption_limit, topic);
            warnings.extend(caption_warnings);
            let n = captioned.iter().filter(|c| c.caption.is_some()).count();
            for (&i, c) in order.iter().zip(captioned) {
                images[i] = c;
            }
            clock.done(Stage::Captioning, n, observer);
        }

        clock.start(Stage::Alignment, observer);
        let mut seg_scores = Vec::new();
        let mut seg_vectors = HashMap::new();
        for (seg, emb) in segments.iter().zip(segment_embs) {
            match emb.map_err(Into::into).and_then(|e| {
                let s = score_candidate(&seg.segment_id, &topic_emb, Some(&e), None, config.alpha)?;
                Ok::<_, crate::alignment::AlignmentError>((s, e))
            }) {
                Ok((s, e)) => {
                    seg_vectors.insert(seg.segment_id.clone(), e);
                    seg_scores.push(s);
                }
                Err(e) => warnings.push(format!("{}: dropped, {e}", seg.segment_id)),
            }
        }
        let mut img_scores = Vec::new();
        let mut img_vectors = HashMap::new();
        for (img, emb) in images.iter().zip(image_embs) {
            let text = img.caption.as_deref().or(img.alt_text.as_deref()).filter(|t| !t.trim().is_empty());
            let text_emb = text.and_then(|t| embed_text(embedder, t).ok());
            let image_emb = match emb {
                Ok(e) => Some(e),
                Err(e) => {
                    warnings.push(format!("{}: image embedding failed, {e}", img.image_id));
                    None
                }
            };
            match score_candidate(&img.image_id, &topic_emb, text_emb.as_ref(), image_emb.as_ref(), config.alpha) {
                Ok(s) => {
                    if let Some(e) = image_emb.or(text_emb) {
                        img_vectors.insert(img.image_id.clone(), e);
                    }
                    img_scores.push(s);
                }
                Err(e) => warnings.push(format!("{}: dropped, {e}", img.image_id)),
            }
        }
        let picked_segments = select_top(
            &seg_scores,
            &SelectionParams {
                limit: config.segment_limit,
                min_score: config.min_score,
                lambda: config.diversity_lambda,
            },
            &seg_vectors,
        );
        let picked_images = select_top(
            &img_scores,
            &SelectionParams {
                limit: config.max_images,
                min_score: config.min_score,
                lambda: config.diversity_lambda,
            },
            &img_vectors,
        );
        observer(PipelineEvent::PartialSelection {
            segment_ids: picked_segments.iter().map(|s| s.target_id.clone()).collect(),
            image_ids: picked_images.iter().map(|s| s.target_id.clone()).collect(),
        });
        clock.done(Stage::Alignment, picked_segments.len() + picked_images.len(), observer);

        clock.start(Stage::Assembly, observer);
        let selections = Selections {
            segments: attach(picked_segments, &segments, |s| &s.segment_id)
                .map(|(segment, score)| SelectedSegment { segment, score })
                .collect(),
            images: attach(picked_images, &images, |c| &c.image_id)
                .map(|(image, score)| SelectedImage { image, score })
                .collect(),
            warnings,
        };
        let timing = config.record_timing.then(|| clock.timing.clone());
        let bundle = assemble(topic, selections, &config, timing)?;
        clock.done(
            Stage::Assembly,
            bundle.selected_segments.len() + bundle.selected_images.len(),
            observer,
        );
        Ok(bundle)
    }

    /// Embeds items in parallel when the provider allows it; order preserved.
    fn embed_all<T: Sync>(
        &self,
        items: &[T],
        f: impl Fn(&T) -> Result<Embedding, EmbeddingError> + Sync + Send,
    ) -> Vec<Result<Embedding, EmbeddingError>> {
        if self.embedder.concurrent() {
            items.par_iter().map(f).collect()
        } else {
            items.iter().map(f).collect()
        }
    }
}

fn attach<'a, T: Clone + 'a>(
    picked: Vec<AlignmentScore>,
    items: &'a [T],
    id: impl Fn(&T) -> &String + 'a,
) -> impl Iterator<Item = (T, AlignmentScore)> + 'a {
    let index: HashMap<&String, &T> = items.iter().map(|t| (id(t), t)).collect();
    picked
        .into_iter()
        .filter_map(move |s| index.get(&s.target_id).map(|t| ((*t).clone(), s)))
}
