//! Adapter for CLIP-compatible encoders served by an external inference
//! runtime.
//!
//! The crate never links a model itself. [`ClipRuntime`] is the boundary:
//! it receives preprocessed pixel tensors or raw text and returns raw
//! feature vectors, which [`ClipEmbedder`] L2-normalizes.

use image::imageops::FilterType;

use super::{Embedding, EmbeddingError, EmbeddingProvider, Modality};

/// OpenAI CLIP channel statistics, digits as published.
#[allow(clippy::excessive_precision)]
pub const CLIP_MEAN: [f32; 3] = [0.481_454_66, 0.457_827_5, 0.408_210_73];
#[allow(clippy::excessive_precision)]
pub const CLIP_STD: [f32; 3] = [0.268_629_54, 0.261_302_58, 0.275_777_11];

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    pub input_size: u32,
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self {
            input_size: 224,
            mean: CLIP_MEAN,
            std: CLIP_STD,
        }
    }
}

impl Preprocessor {
    /// Resize the shortest side to `input_size`, centre-crop a square and
    /// normalize per channel. Output is CHW, `3 * input_size²` values.
    pub fn preprocess(&self, bytes: &[u8]) -> Result<Vec<f32>, EmbeddingError> {
        let img = image::load_from_memory(bytes).map_err(|e| EmbeddingError::DecodeFailure(e.to_string()))?;
        let size = self.input_size;
        let (w, h) = (img.width(), img.height());
        let scale = size as f64 / w.min(h) as f64;
        let nw = ((w as f64 * scale).round() as u32).max(size);
        let nh = ((h as f64 * scale).round() as u32).max(size);
        let resized = img.resize_exact(nw, nh, FilterType::CatmullRom);
        let left = (nw - size) / 2;
        let top = (nh - size) / 2;
        let rgb = resized.crop_imm(left, top, size, size).to_rgb8();
        let plane = (size * size) as usize;
        let mut out = vec![0.0f32; 3 * plane];
        for (i, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                out[c * plane + i] = (px.0[c] as f32 / 255.0 - self.mean[c]) / self.std[c];
            }
        }
        Ok(out)
    }
}

/// Inference boundary for a CLIP-style dual encoder.
pub trait ClipRuntime: Send + Sync {
    fn runtime_id(&self) -> &str;
    fn dim(&self) -> usize;
    fn encode_text(&self, text: &str) -> Result<Vec<f32>, EmbeddingError>;
    /// `pixels` is CHW with side `input_size`.
    fn encode_image(&self, pixels: &[f32], input_size: u32) -> Result<Vec<f32>, EmbeddingError>;
    fn concurrent(&self) -> bool {
        true
    }
}

pub struct ClipEmbedder<R> {
    runtime: R,
    preprocessor: Preprocessor,
    id: String,
}

impl<R: ClipRuntime> ClipEmbedder<R> {
    pub fn new(runtime: R, preprocessor: Preprocessor) -> Self {
        let id = format!("clip:{}", runtime.runtime_id());
        Self {
            runtime,
            preprocessor,
            id,
        }
    }

    fn finish(&self, modality: Modality, raw: Vec<f32>) -> Result<Embedding, EmbeddingError> {
        if raw.len() != self.runtime.dim() {
            return Err(EmbeddingError::DimensionMismatch(raw.len(), self.runtime.dim()));
        }
        let raw: Vec<f64> = raw.into_iter().map(f64::from).collect();
        Embedding::normalized(modality, &raw, self.id.clone())
    }
}

impl<R: ClipRuntime> EmbeddingProvider for ClipEmbedder<R> {
    fn provider_id(&self) -> &str {
        &self.id
    }
    fn dim(&self) -> usize {
        self.runtime.dim()
    }
    fn supports(&self, _modality: Modality) -> bool {
        true
    }
    fn concurrent(&self) -> bool {
        self.runtime.concurrent()
    }

    fn embed_text(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        let raw = self.runtime.encode_text(text)?;
        self.finish(Modality::Text, raw)
    }

    fn embed_image(&self, bytes: &[u8]) -> Result<Embedding, EmbeddingError> {
        let pixels = self.preprocessor.preprocess(bytes)?;
        let raw = self.runtime.encode_image(&pixels, self.preprocessor.input_size)?;
        self.finish(Modality::Image, raw)
    }
}

/// Talks JSON to an inference server exposing the exported model:
///
/// - `POST {endpoint}/embed/text`  `{"text": "..."}`
/// - `POST {endpoint}/embed/image` `{"pixels": [...], "shape": [3, S, S]}`
///
/// both answering `{"embedding": [...]}`.
#[cfg(feature = "live")]
pub struct HttpClipRuntime {
    agent: ureq::Agent,
    endpoint: String,
    dim: usize,
}

#[cfg(feature = "live")]
impl HttpClipRuntime {
    pub fn new(endpoint: impl Into<String>, dim: usize, timeout: std::time::Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self {
            agent,
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            dim,
        }
    }

    fn post(&self, path: &str, body: serde_json::Value) -> Result<Vec<f32>, EmbeddingError> {
        #[derive(serde::Deserialize)]
        struct Reply {
            embedding: Vec<f32>,
        }
        let reply: Reply = self
            .agent
            .post(&format!("{}{path}", self.endpoint))
            .send_json(body)
            .map_err(|e| EmbeddingError::ProviderFailure(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| EmbeddingError::ProviderFailure(e.to_string()))?;
        Ok(reply.embedding)
    }
}

#[cfg(feature = "live")]
impl ClipRuntime for HttpClipRuntime {
    fn runtime_id(&self) -> &str {
        &self.endpoint
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn encode_text(&self, text: &str) -> Result<Vec<f32>, EmbeddingError> {
        self.post("/embed/text", serde_json::json!({ "text": text }))
    }
    fn encode_image(&self, pixels: &[f32], input_size: u32) -> Result<Vec<f32>, EmbeddingError> {
        self.post(
            "/embed/image",
            serde_json::json!({ "pixels": pixels, "shape": [3, input_size, input_size] }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{embed_image, embed_text, NORM_TOLERANCE};
    use image::{ImageFormat, Rgb, RgbImage};
    use std::io::Cursor;

    fn png(img: RgbImage) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png).unwrap();
        out.into_inner()
    }

    #[test]
    fn preprocess_shape_and_normalization() {
        // Left half black, right half white, wide aspect ratio.
        let img = RgbImage::from_fn(400, 200, |x, _| if x < 200 { Rgb([0, 0, 0]) } else { Rgb([255, 255, 255]) });
        let p = Preprocessor {
            input_size: 32,
            ..Default::default()
        };
        let t = p.preprocess(&png(img)).unwrap();
        assert_eq!(t.len(), 3 * 32 * 32);
        // Top-left pixel of the centre crop is black, top-right is white.
        let black_r = (0.0 - CLIP_MEAN[0]) / CLIP_STD[0];
        let white_r = (1.0 - CLIP_MEAN[0]) / CLIP_STD[0];
        assert!((t[0] - black_r).abs() < 1e-3);
        assert!((t[31] - white_r).abs() < 1e-3);
    }

    struct Fake;
    impl ClipRuntime for Fake {
        fn runtime_id(&self) -> &str {
            "fake"
        }
        fn dim(&self) -> usize {
            4
        }
        fn encode_text(&self, text: &str) -> Result<Vec<f32>, EmbeddingError> {
            Ok(vec![text.len() as f32, 1.0, 2.0, 3.0])
        }
        fn encode_image(&self, pixels: &[f32], input_size: u32) -> Result<Vec<f32>, EmbeddingError> {
            assert_eq!(pixels.len(), (3 * input_size * input_size) as usize);
            Ok(vec![pixels.iter().sum(), 5.0, 0.0, -1.0])
        }
    }

    #[test]
    fn adapter_normalizes_runtime_output() {
        let e = ClipEmbedder::new(Fake, Preprocessor { input_size: 16, ..Default::default() });
        assert_eq!(e.provider_id(), "clip:fake");
        let t = embed_text(&e, "hello").unwrap();
        assert!((t.norm() - 1.0).abs() < NORM_TOLERANCE);
        let img = png(RgbImage::from_pixel(40, 30, Rgb([10, 200, 30])));
        let i = embed_image(&e, &img).unwrap();
        assert!((i.norm() - 1.0).abs() < NORM_TOLERANCE);
        assert!(matches!(embed_image(&e, b"nope"), Err(EmbeddingError::DecodeFailure(_))));
    }
}
