//! Backend clients: object detection, OCR, face recognition and chat.
//!
//! Every vision adapter returns results in the scene fixture vocabulary
//! ([`DetectedEntity`], [`OcrText`]) so nothing downstream sees a vendor
//! response shape.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use base64::Engine as _;
use deixis_core::assembler::payload_checksum;
use deixis_core::scene::{
    DetectedEntity, FixtureFace, FixtureObject, FixtureText, FrameMeta, OcrText, SceneFixture,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend is offline")]
    Offline,
    #[error("timed out after {0} ms")]
    Timeout(u64),
    #[error("frame has no attached annotations and the mock has no fixture")]
    NoScene,
    #[error("no scripted answer for payload {0}")]
    NoScript(String),
    #[error("request failed: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("could not decode response: {0}")]
    Decode(String),
}

/// One captured image. Pixels are reference-counted so that adapters can
/// borrow them for a request without copying; the session drops its handle
/// once the turn is answered.
#[derive(Debug, Clone)]
pub struct Frame {
    pub meta: FrameMeta,
    pub pixels: Arc<[u8]>,
    /// Ground-truth annotations travelling with a synthetic frame.
    pub annotations: Option<Arc<SceneFixture>>,
}

impl Frame {
    /// Blank single-channel image carrying a fixture's annotations.
    pub fn synthetic(meta: FrameMeta, annotations: Arc<SceneFixture>) -> Self {
        let len = meta.width as usize * meta.height as usize;
        Self {
            meta,
            pixels: vec![0u8; len].into(),
            annotations: Some(annotations),
        }
    }

    pub fn from_pixels(meta: FrameMeta, pixels: impl Into<Arc<[u8]>>) -> Self {
        Self {
            meta,
            pixels: pixels.into(),
            annotations: None,
        }
    }
}

#[async_trait]
pub trait ObjectDetector: Send + Sync {
    async fn detect(&self, frame: &Frame) -> Result<Vec<DetectedEntity>, BackendError>;
}

#[async_trait]
pub trait OcrEngine: Send + Sync {
    async fn read_text(&self, frame: &Frame) -> Result<Vec<OcrText>, BackendError>;
}

#[async_trait]
pub trait FaceRecognizer: Send + Sync {
    /// Recognised faces as entities of kind `Face`, labelled with the name.
    async fn recognize(&self, frame: &Frame) -> Result<Vec<DetectedEntity>, BackendError>;
}

#[async_trait]
pub trait ChatCompleter: Send + Sync {
    async fn complete(&self, payload: &str) -> Result<String, BackendError>;
}

/// Fixture-driven stand-in for any of the three vision backends.
///
/// Bound to a fixture it always answers with that fixture's content;
/// unbound it reads the annotations attached to each frame.
#[derive(Debug, Default)]
pub struct MockVision {
    fixture: Option<Arc<SceneFixture>>,
    delay: Duration,
    offline: bool,
    calls: AtomicUsize,
}

impl MockVision {
    pub fn attached() -> Self {
        Self::default()
    }

    pub fn bound(fixture: Arc<SceneFixture>) -> Self {
        Self {
            fixture: Some(fixture),
            ..Self::default()
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn offline(mut self) -> Self {
        self.offline = true;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    async fn scene(&self, frame: &Frame) -> Result<Arc<SceneFixture>, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        if self.offline {
            return Err(BackendError::Offline);
        }
        self.fixture
            .clone()
            .or_else(|| frame.annotations.clone())
            .ok_or(BackendError::NoScene)
    }
}

#[async_trait]
impl ObjectDetector for MockVision {
    async fn detect(&self, frame: &Frame) -> Result<Vec<DetectedEntity>, BackendError> {
        Ok(self.scene(frame).await?.objects())
    }
}

#[async_trait]
impl OcrEngine for MockVision {
    async fn read_text(&self, frame: &Frame) -> Result<Vec<OcrText>, BackendError> {
        Ok(self.scene(frame).await?.ocr_texts())
    }
}

#[async_trait]
impl FaceRecognizer for MockVision {
    async fn recognize(&self, frame: &Frame) -> Result<Vec<DetectedEntity>, BackendError> {
        Ok(self.scene(frame).await?.faces())
    }
}

/// On-disk form of a [`ScriptedChat`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatScript {
    /// Payload SHA-256 (hex) to answer.
    #[serde(default)]
    pub responses: HashMap<String, String>,
    /// Answer for unknown payloads. Without it they fail.
    #[serde(default)]
    pub default: Option<String>,
    /// Answer unknown payloads with the payload itself.
    #[serde(default)]
    pub echo: bool,
}

/// Chat mock keyed by payload checksum.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    script: ChatScript,
    delay: Duration,
    offline: bool,
    payloads: Mutex<Vec<String>>,
}

impl ScriptedChat {
    pub fn new(script: ChatScript) -> Self {
        Self {
            script,
            ..Self::default()
        }
    }

    pub fn echo() -> Self {
        Self::new(ChatScript {
            echo: true,
            ..ChatScript::default()
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, crate::config::ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::config::ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let script = serde_json::from_str(&text).map_err(|e| crate::config::ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self::new(script))
    }

    /// Register an answer for an exact payload.
    pub fn answer(mut self, payload: &str, answer: impl Into<String>) -> Self {
        self.script
            .responses
            .insert(payload_checksum(payload), answer.into());
        self
    }

    pub fn with_default(mut self, answer: impl Into<String>) -> Self {
        self.script.default = Some(answer.into());
        self
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn offline(mut self) -> Self {
        self.offline = true;
        self
    }

    pub fn calls(&self) -> usize {
        self.payloads.lock().unwrap().len()
    }

    /// Every payload received so far, oldest first.
    pub fn payloads(&self) -> Vec<String> {
        self.payloads.lock().unwrap().clone()
    }
}

#[async_trait]
impl ChatCompleter for ScriptedChat {
    async fn complete(&self, payload: &str) -> Result<String, BackendError> {
        self.payloads.lock().unwrap().push(payload.to_string());
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        if self.offline {
            return Err(BackendError::Offline);
        }
        let key = payload_checksum(payload);
        if let Some(answer) = self.script.responses.get(&key) {
            return Ok(answer.clone());
        }
        if let Some(answer) = &self.script.default {
            return Ok(answer.clone());
        }
        if self.script.echo {
            return Ok(payload.to_string());
        }
        Err(BackendError::NoScript(key))
    }
}

/// Request body sent to every vision endpoint.
#[derive(Debug, Serialize)]
struct VisionRequest<'a> {
    model: &'a str,
    width: u32,
    height: u32,
    /// Base64 of the raw pixel buffer.
    image: String,
}

/// Vision endpoints answer with a subset of the scene fixture schema.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct VisionResponse {
    objects: Vec<FixtureObject>,
    faces: Vec<FixtureFace>,
    texts: Vec<FixtureText>,
}

impl VisionResponse {
    fn into_fixture(self, meta: &FrameMeta) -> Result<SceneFixture, BackendError> {
        let mut f = SceneFixture::empty(meta.width, meta.height);
        f.objects = self.objects;
        f.faces = self.faces;
        f.texts = self.texts;
        f.validate().map_err(|e| BackendError::Decode(e.to_string()))?;
        Ok(f)
    }
}

/// JSON-over-HTTP client shared by the detector, OCR and face adapters.
#[derive(Debug, Clone)]
pub struct HttpVision {
    client: reqwest::Client,
    url: String,
    auth: Option<String>,
    model_id: String,
}

impl HttpVision {
    pub fn new(url: impl Into<String>, auth: Option<String>, model_id: impl Into<String>) -> Self {
        Self {
            client: reqwest::Client::new(),
            url: url.into(),
            auth,
            model_id: model_id.into(),
        }
    }

    async fn call(&self, frame: &Frame) -> Result<SceneFixture, BackendError> {
        let body = VisionRequest {
            model: &self.model_id,
            width: frame.meta.width,
            height: frame.meta.height,
            image: base64::engine::general_purpose::STANDARD.encode(&frame.pixels[..]),
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(token) = &self.auth {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(BackendError::Status(resp.status().as_u16()));
        }
        let parsed: VisionResponse = resp
            .json()
            .await
            .map_err(|e| BackendError::Decode(e.to_string()))?;
        parsed.into_fixture(&frame.meta)
    }
}

#[async_trait]
impl ObjectDetector for HttpVision {
    async fn detect(&self, frame: &Frame) -> Result<Vec<DetectedEntity>, BackendError> {
        Ok(self.call(frame).await?.objects())
    }
}

#[async_trait]
impl OcrEngine for HttpVision {
    async fn read_text(&self, frame: &Frame) -> Result<Vec<OcrText>, BackendError> {
        Ok(self.call(frame).await?.ocr_texts())
    }
}

#[async_trait]
impl FaceRecognizer for HttpVision {
    async fn recognize(&self, frame: &Frame) -> Result<Vec<DetectedEntity>, BackendError> {
        Ok(self.call(frame).await?.faces())
    }
}

/// Chat-completions style client (`messages` in, `choices[0].message` out).
#[derive(Debug, Clone)]
pub struct HttpChat {
    client: reqwest::Client,
    url: String,
    auth: Option<String>,
    model_id: String,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: String,
}

impl HttpChat {
    pub fn new(url: impl Into<String>, auth: Option<String>, model_id: impl Into<String>) -> Self {
        Self {
            client: reqwest::Client::new(),
            url: url.into(),
            auth,
            model_id: model_id.into(),
        }
    }
}

#[async_trait]
impl ChatCompleter for HttpChat {
    async fn complete(&self, payload: &str) -> Result<String, BackendError> {
        let body = ChatRequest {
            model: &self.model_id,
            messages: [ChatMessage {
                role: "user",
                content: payload,
            }],
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(token) = &self.auth {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(BackendError::Status(resp.status().as_u16()));
        }
        let parsed: ChatResponse = resp
            .json()
            .await
            .map_err(|e| BackendError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError::Decode("no choices".into()))
    }
}
