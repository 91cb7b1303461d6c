use std::future::Future;
use std::sync::Arc;
use std::time::{Duration, Instant};

use deixis_core::assembler::AssembledQuery;
use deixis_core::scene::{DetectedEntity, OcrText};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    BackendError, ChatCompleter, FaceRecognizer, Frame, ObjectDetector, OcrEngine,
};
use crate::config::DEFAULT_TIMEOUT_MS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Capture,
    MlFanout,
    PhraseGen,
    Completion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    /// Monotonic wall-clock milliseconds.
    pub elapsed_ms: f64,
}

impl StageTiming {
    pub fn new(stage: Stage, elapsed: Duration) -> Self {
        Self {
            stage,
            elapsed_ms: elapsed.as_secs_f64() * 1000.0,
        }
    }
}

/// Run `f` and time it.
pub(crate) async fn timed<T>(stage: Stage, f: impl Future<Output = T>) -> (T, StageTiming) {
    let start = Instant::now();
    let out = f.await;
    (out, StageTiming::new(stage, start.elapsed()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timeouts {
    pub detector: Duration,
    pub ocr: Duration,
    pub faces: Duration,
    pub chat: Duration,
}

impl Default for Timeouts {
    fn default() -> Self {
        let d = Duration::from_millis(DEFAULT_TIMEOUT_MS);
        Self {
            detector: d,
            ocr: d,
            faces: d,
            chat: d,
        }
    }
}

/// The four backends a session talks to. Cheap to clone.
#[derive(Clone)]
pub struct Backends {
    pub detector: Arc<dyn ObjectDetector>,
    pub ocr: Arc<dyn OcrEngine>,
    pub faces: Arc<dyn FaceRecognizer>,
    pub chat: Arc<dyn ChatCompleter>,
    pub timeouts: Timeouts,
    /// Simulated camera latency spent in the capture stage.
    pub capture_delay: Duration,
}

impl Backends {
    pub fn new(
        detector: Arc<dyn ObjectDetector>,
        ocr: Arc<dyn OcrEngine>,
        faces: Arc<dyn FaceRecognizer>,
        chat: Arc<dyn ChatCompleter>,
    ) -> Self {
        Self {
            detector,
            ocr,
            faces,
            chat,
            timeouts: Timeouts::default(),
            capture_delay: Duration::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisionChannel {
    Objects,
    Texts,
    Faces,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelWarning {
    pub channel: VisionChannel,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub entities: Vec<DetectedEntity>,
    pub texts: Vec<OcrText>,
    pub faces: Vec<DetectedEntity>,
    pub warnings: Vec<ChannelWarning>,
    pub timing: StageTiming,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("all vision backends failed: {warnings:?}")]
    AllBackendsFailed {
        warnings: Vec<ChannelWarning>,
        timing: StageTiming,
    },
}

async fn bounded<T>(
    limit: Duration,
    f: impl Future<Output = Result<T, BackendError>>,
) -> Result<T, BackendError> {
    match tokio::time::timeout(limit, f).await {
        Ok(r) => r,
        Err(_) => Err(BackendError::Timeout(limit.as_millis() as u64)),
    }
}

fn keep<T>(
    channel: VisionChannel,
    r: Result<T, BackendError>,
    warnings: &mut Vec<ChannelWarning>,
) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            tracing::warn!(?channel, error = %e, "vision channel degraded");
            warnings.push(ChannelWarning {
                channel,
                message: e.to_string(),
            });
            None
        }
    }
}

/// Query the three vision backends concurrently.
///
/// A failing channel contributes nothing and a warning; only when all three
/// fail is the analysis an error.
pub async fn analyze_frame(frame: &Frame, backends: &Backends) -> Result<Analysis, AnalyzeError> {
    let t = backends.timeouts;
    let ((objects, texts, faces), timing) = timed(Stage::MlFanout, async {
        tokio::join!(
            bounded(t.detector, backends.detector.detect(frame)),
            bounded(t.ocr, backends.ocr.read_text(frame)),
            bounded(t.faces, backends.faces.recognize(frame)),
        )
    })
    .await;

    let mut warnings = Vec::new();
    let entities = keep(VisionChannel::Objects, objects, &mut warnings);
    let texts = keep(VisionChannel::Texts, texts, &mut warnings);
    let faces = keep(VisionChannel::Faces, faces, &mut warnings);

    if entities.is_none() && texts.is_none() && faces.is_none() {
        return Err(AnalyzeError::AllBackendsFailed { warnings, timing });
    }
    Ok(Analysis {
        entities: entities.unwrap_or_default(),
        texts: texts.unwrap_or_default(),
        faces: faces.unwrap_or_default(),
        warnings,
        timing,
    })
}

pub const EXPLANATION_MARKER: &str = "Explanation:";

/// Split a reply at the first line starting with the explanation marker.
pub fn split_explanation(reply: &str) -> (String, Option<String>) {
    let mut offset = 0;
    for line in reply.split_inclusive('\n') {
        if let Some(rest) = line.trim_start().strip_prefix(EXPLANATION_MARKER) {
            let answer = reply[..offset].trim().to_string();
            let mut explanation = rest.to_string();
            explanation.push_str(&reply[offset + line.len()..]);
            let explanation = explanation.trim().to_string();
            return (answer, (!explanation.is_empty()).then_some(explanation));
        }
        offset += line.len();
    }
    (reply.trim().to_string(), None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub answer: String,
    pub explanation: Option<String>,
    pub timing: StageTiming,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CompletionError {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("completion failed: {0}")]
    CompletionFailed(BackendError),
    #[error("completion returned no answer")]
    EmptyAnswer,
}

pub async fn complete(
    assembled: &AssembledQuery,
    chat: &dyn ChatCompleter,
    limit: Duration,
) -> Result<Completion, CompletionError> {
    if assembled.payload.trim().is_empty() {
        return Err(CompletionError::EmptyPayload);
    }
    let (reply, timing) = timed(Stage::Completion, bounded(limit, chat.complete(&assembled.payload))).await;
    let reply = reply.map_err(CompletionError::CompletionFailed)?;
    let (answer, explanation) = split_explanation(&reply);
    if answer.is_empty() {
        return Err(CompletionError::EmptyAnswer);
    }
    Ok(Completion {
        answer,
        explanation,
        timing,
    })
}
