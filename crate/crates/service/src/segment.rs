use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vidcue_core::evidence::PointPrompt;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("retryable-error: {0}")]
    Retryable(String),
    #[error("segmentation failed: {0}")]
    Failed(String),
}

/// Row-major run lengths over the frame grid, starting with a background run
/// (possibly empty) and alternating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    pub counts: Vec<u64>,
}

impl Rle {
    pub fn encode(mask: &[bool]) -> Self {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u64;
        for &m in mask {
            if m == current {
                run += 1;
            } else {
                counts.push(run);
                current = m;
                run = 1;
            }
        }
        counts.push(run);
        Self { counts }
    }

    pub fn decode(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for (i, &c) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat_n(i % 2 == 1, c as usize));
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRequest {
    pub video_id: String,
    pub frame: u32,
    pub width: u32,
    pub height: u32,
    pub points: Vec<PointPrompt>,
}

impl SegmentRequest {
    pub fn check(&self) -> Result<(), SegmentError> {
        if self.points.is_empty() {
            return Err(SegmentError::Rejected("no points".into()));
        }
        if let Some(p) = self.points.iter().find(|p| p.x >= self.width || p.y >= self.height) {
            return Err(SegmentError::Rejected(format!(
                "point ({}, {}) outside {}x{} frame",
                p.x, p.y, self.width, self.height
            )));
        }
        if !self.points.iter().any(PointPrompt::is_positive) {
            return Err(SegmentError::Rejected("no positive point".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskResult {
    pub frame: u32,
    pub width: u32,
    pub height: u32,
    pub rle: Rle,
    pub client: String,
}

impl MaskResult {
    pub fn is_consistent(&self) -> bool {
        self.rle.total() == u64::from(self.width) * u64::from(self.height)
    }
}

#[async_trait]
pub trait SegmentationClient: Send + Sync {
    fn id(&self) -> &str;
    async fn segment(&self, req: &SegmentRequest) -> Result<MaskResult, SegmentError>;
}

/// Geometric stand-in for a point-to-mask model.
#[derive(Debug, Clone, Default)]
pub struct StubSegmenter;

pub const STUB_POSITIVE_DILATION: f64 = 0.05;
pub const STUB_NEGATIVE_DILATION: f64 = 0.03;

fn dilation(width: u32, height: u32, fraction: f64) -> i64 {
    let diag = (f64::from(width).powi(2) + f64::from(height).powi(2)).sqrt();
    (diag * fraction).round() as i64
}

struct Box2 {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

impl Box2 {
    fn around<'a>(points: impl Iterator<Item = &'a PointPrompt>, pad: i64) -> Option<Self> {
        let mut b: Option<Box2> = None;
        for p in points {
            let (x, y) = (i64::from(p.x), i64::from(p.y));
            b = Some(match b {
                None => Box2 { x0: x, y0: y, x1: x, y1: y },
                Some(b) => Box2 { x0: b.x0.min(x), y0: b.y0.min(y), x1: b.x1.max(x), y1: b.y1.max(y) },
            });
        }
        b.map(|b| Box2 { x0: b.x0 - pad, y0: b.y0 - pad, x1: b.x1 + pad, y1: b.y1 + pad })
    }

    fn contains(&self, x: i64, y: i64) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }
}

impl StubSegmenter {
    pub fn mask(req: &SegmentRequest) -> Result<Vec<bool>, SegmentError> {
        req.check()?;
        let pos = Box2::around(req.points.iter().filter(|p| p.is_positive()), dilation(req.width, req.height, STUB_POSITIVE_DILATION))
            .expect("checked for a positive point");
        let pad = dilation(req.width, req.height, STUB_NEGATIVE_DILATION);
        let negs: Vec<Box2> = req
            .points
            .iter()
            .filter(|p| !p.is_positive())
            .filter_map(|p| Box2::around(std::iter::once(p), pad))
            .collect();
        let mut mask = Vec::with_capacity(req.width as usize * req.height as usize);
        for y in 0..i64::from(req.height) {
            for x in 0..i64::from(req.width) {
                mask.push(pos.contains(x, y) && !negs.iter().any(|n| n.contains(x, y)));
            }
        }
        Ok(mask)
    }
}

#[async_trait]
impl SegmentationClient for StubSegmenter {
    fn id(&self) -> &str {
        "stub"
    }

    async fn segment(&self, req: &SegmentRequest) -> Result<MaskResult, SegmentError> {
        let mask = Self::mask(req)?;
        Ok(MaskResult { frame: req.frame, width: req.width, height: req.height, rle: Rle::encode(&mask), client: self.id().into() })
    }
}

/// Forwards requests as JSON to `{base_url}/segment`.
pub struct HttpSegmenter {
    base_url: String,
    client: reqwest::Client,
}

impl HttpSegmenter {
    pub fn new(base_url: impl Into<String>, timeout: Duration) -> Result<Self, SegmentError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| SegmentError::Failed(e.to_string()))?;
        Ok(Self { base_url: base_url.into().trim_end_matches('/').to_string(), client })
    }
}

#[async_trait]
impl SegmentationClient for HttpSegmenter {
    fn id(&self) -> &str {
        &self.base_url
    }

    async fn segment(&self, req: &SegmentRequest) -> Result<MaskResult, SegmentError> {
        req.check()?;
        let resp = self
            .client
            .post(format!("{}/segment", self.base_url))
            .json(req)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() || e.is_connect() {
                    SegmentError::Retryable(e.to_string())
                } else {
                    SegmentError::Failed(e.to_string())
                }
            })?;
        let status = resp.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(SegmentError::Retryable(format!("upstream status {status}")));
        }
        if !status.is_success() {
            return Err(SegmentError::Failed(format!("upstream status {status}")));
        }
        let mut mask: MaskResult = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                SegmentError::Retryable(e.to_string())
            } else {
                SegmentError::Failed(e.to_string())
            }
        })?;
        if mask.width != req.width || mask.height != req.height || !mask.is_consistent() {
            return Err(SegmentError::Failed("mask does not cover the frame grid".into()));
        }
        mask.client = self.base_url.clone();
        Ok(mask)
    }
}
