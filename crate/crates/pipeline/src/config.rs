//! Backend selection file and environment overrides.
//!
//! ```json
//! {
//!   "detector": {"transport": {"type": "http_endpoint", "url": "http://localhost:8001/detect", "timeout_ms": 5000}, "model_id": "yolov8n"},
//!   "ocr":      {"transport": {"type": "mock_fixture"}},
//!   "faces":    {"transport": {"type": "mock_fixture", "path": "fixtures/portrait.json"}},
//!   "chat":     {"transport": {"type": "mock_fixture", "path": "script.json"}}
//! }
//! ```
//!
//! A vision `mock_fixture` without a path answers from the annotations
//! attached to each frame. For the chat backend the path names a
//! [`ChatScript`](crate::backends::ChatScript) file; without one the mock
//! echoes its payload.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use deixis_core::scene::SceneFixture;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{HttpChat, HttpVision, MockVision, ScriptedChat};
use crate::pipeline::Backends;

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{kind:?} timeout must be positive")]
    ZeroTimeout { kind: BackendKind },
    #[error("{kind:?} fixture {path} is invalid: {message}")]
    Fixture {
        kind: BackendKind,
        path: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ObjectDetector,
    OcrEngine,
    FaceRecognizer,
    ChatCompleter,
}

impl BackendKind {
    pub const ALL: [BackendKind; 4] = [
        BackendKind::ObjectDetector,
        BackendKind::OcrEngine,
        BackendKind::FaceRecognizer,
        BackendKind::ChatCompleter,
    ];

    fn env_prefix(self) -> &'static str {
        match self {
            BackendKind::ObjectDetector => "DEIXIS_DETECTOR",
            BackendKind::OcrEngine => "DEIXIS_OCR",
            BackendKind::FaceRecognizer => "DEIXIS_FACE",
            BackendKind::ChatCompleter => "DEIXIS_CHAT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transport {
    MockFixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
    HttpEndpoint {
        url: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        auth: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_ms: u64,
    },
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub transport: Transport,
    #[serde(default = "default_model")]
    pub model_id: String,
    /// Applies to mock transports too; HTTP transports carry their own.
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    /// Artificial latency for mock transports.
    #[serde(default)]
    pub mock_delay_ms: u64,
}

fn default_model() -> String {
    "default".into()
}

impl BackendSpec {
    pub fn mock() -> Self {
        Self {
            transport: Transport::MockFixture { path: None },
            model_id: default_model(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            mock_delay_ms: 0,
        }
    }

    /// Effective per-call timeout.
    pub fn timeout(&self) -> Duration {
        match &self.transport {
            Transport::HttpEndpoint { timeout_ms, .. } => Duration::from_millis(*timeout_ms),
            Transport::MockFixture { .. } => Duration::from_millis(self.timeout_ms),
        }
    }

    fn validate(&self, kind: BackendKind) -> Result<(), ConfigError> {
        let zero = match &self.transport {
            Transport::HttpEndpoint { timeout_ms, .. } => *timeout_ms == 0,
            Transport::MockFixture { .. } => self.timeout_ms == 0,
        };
        if zero {
            return Err(ConfigError::ZeroTimeout { kind });
        }
        Ok(())
    }
}

impl Default for BackendSpec {
    fn default() -> Self {
        Self::mock()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    pub detector: BackendSpec,
    pub ocr: BackendSpec,
    pub faces: BackendSpec,
    pub chat: BackendSpec,
}

impl BackendsConfig {
    pub fn from_json(json: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(json).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file. Relative mock paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        if let Some(dir) = path.parent() {
            for kind in BackendKind::ALL {
                if let Transport::MockFixture { path: Some(p) } = &mut cfg.spec_mut(kind).transport {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for kind in BackendKind::ALL {
            self.spec(kind).validate(kind)?;
        }
        Ok(())
    }

    pub fn spec(&self, kind: BackendKind) -> &BackendSpec {
        match kind {
            BackendKind::ObjectDetector => &self.detector,
            BackendKind::OcrEngine => &self.ocr,
            BackendKind::FaceRecognizer => &self.faces,
            BackendKind::ChatCompleter => &self.chat,
        }
    }

    fn spec_mut(&mut self, kind: BackendKind) -> &mut BackendSpec {
        match kind {
            BackendKind::ObjectDetector => &mut self.detector,
            BackendKind::OcrEngine => &mut self.ocr,
            BackendKind::FaceRecognizer => &mut self.faces,
            BackendKind::ChatCompleter => &mut self.chat,
        }
    }

    /// Apply `DEIXIS_{DETECTOR,OCR,FACE,CHAT}_URL` and `..._API_KEY`.
    ///
    /// A URL switches that backend to HTTP, keeping any timeout already
    /// configured; a key sets the bearer token of an HTTP transport.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        for kind in BackendKind::ALL {
            let prefix = kind.env_prefix();
            let spec = self.spec_mut(kind);
            if let Some(url) = lookup(&format!("{prefix}_URL")).filter(|u| !u.is_empty()) {
                let (auth, timeout_ms) = match &spec.transport {
                    Transport::HttpEndpoint {
                        auth, timeout_ms, ..
                    } => (auth.clone(), *timeout_ms),
                    Transport::MockFixture { .. } => (None, spec.timeout_ms),
                };
                spec.transport = Transport::HttpEndpoint {
                    url,
                    auth,
                    timeout_ms,
                };
            }
            if let Some(key) = lookup(&format!("{prefix}_API_KEY")).filter(|k| !k.is_empty()) {
                if let Transport::HttpEndpoint { auth, .. } = &mut spec.transport {
                    *auth = Some(key);
                }
            }
        }
    }

    pub fn build(&self) -> Result<Backends, ConfigError> {
        self.validate()?;
        let vision = |kind: BackendKind| -> Result<VisionClient, ConfigError> {
            let spec = self.spec(kind);
            Ok(match &spec.transport {
                Transport::MockFixture { path } => {
                    let mut mock = match path {
                        None => MockVision::attached(),
                        Some(p) => {
                            let f = SceneFixture::load(p).map_err(|e| ConfigError::Fixture {
                                kind,
                                path: p.display().to_string(),
                                message: e.to_string(),
                            })?;
                            MockVision::bound(Arc::new(f))
                        }
                    };
                    mock = mock.with_delay(Duration::from_millis(spec.mock_delay_ms));
                    VisionClient::Mock(Arc::new(mock))
                }
                Transport::HttpEndpoint { url, auth, .. } => VisionClient::Http(Arc::new(
                    HttpVision::new(url.clone(), auth.clone(), spec.model_id.clone()),
                )),
            })
        };
        let detector = vision(BackendKind::ObjectDetector)?;
        let ocr = vision(BackendKind::OcrEngine)?;
        let faces = vision(BackendKind::FaceRecognizer)?;

        let chat: Arc<dyn crate::backends::ChatCompleter> = match &self.chat.transport {
            Transport::MockFixture { path } => {
                let chat = match path {
                    Some(p) => ScriptedChat::load(p)?,
                    None => ScriptedChat::echo(),
                };
                Arc::new(chat.with_delay(Duration::from_millis(self.chat.mock_delay_ms)))
            }
            Transport::HttpEndpoint { url, auth, .. } => Arc::new(HttpChat::new(
                url.clone(),
                auth.clone(),
                self.chat.model_id.clone(),
            )),
        };

        let mut b = Backends::new(detector.detector(), ocr.ocr(), faces.faces(), chat);
        b.timeouts.detector = self.detector.timeout();
        b.timeouts.ocr = self.ocr.timeout();
        b.timeouts.faces = self.faces.timeout();
        b.timeouts.chat = self.chat.timeout();
        Ok(b)
    }
}

enum VisionClient {
    Mock(Arc<MockVision>),
    Http(Arc<HttpVision>),
}

impl VisionClient {
    fn detector(&self) -> Arc<dyn crate::backends::ObjectDetector> {
        match self {
            VisionClient::Mock(m) => m.clone(),
            VisionClient::Http(h) => h.clone(),
        }
    }

    fn ocr(&self) -> Arc<dyn crate::backends::OcrEngine> {
        match self {
            VisionClient::Mock(m) => m.clone(),
            VisionClient::Http(h) => h.clone(),
        }
    }

    fn faces(&self) -> Arc<dyn crate::backends::FaceRecognizer> {
        match self {
            VisionClient::Mock(m) => m.clone(),
            VisionClient::Http(h) => h.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn empty_file_is_all_mocks() {
        let cfg = BackendsConfig::from_json("{}", "inline").unwrap();
        assert_eq!(cfg, BackendsConfig::default());
        assert_eq!(cfg.detector.timeout(), Duration::from_millis(10_000));
    }

    #[test]
    fn zero_timeout_rejected() {
        let json = r#"{"ocr":{"transport":{"type":"http_endpoint","url":"http://x","timeout_ms":0}}}"#;
        assert_eq!(
            BackendsConfig::from_json(json, "inline"),
            Err(ConfigError::ZeroTimeout {
                kind: BackendKind::OcrEngine
            })
        );
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(matches!(
            BackendsConfig::from_json(r#"{"speech":{}}"#, "inline"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn env_switches_to_http() {
        let mut cfg = BackendsConfig::default();
        cfg.chat.timeout_ms = 2500;
        let env: HashMap<&str, &str> = [
            ("DEIXIS_CHAT_URL", "https://chat.example/v1/chat/completions"),
            ("DEIXIS_CHAT_API_KEY", "sk-test"),
            ("DEIXIS_OCR_API_KEY", "ignored-without-url"),
        ]
        .into();
        cfg.apply_env(|k| env.get(k).map(|v| v.to_string()));
        assert_eq!(
            cfg.chat.transport,
            Transport::HttpEndpoint {
                url: "https://chat.example/v1/chat/completions".into(),
                auth: Some("sk-test".into()),
                timeout_ms: 2500,
            }
        );
        assert_eq!(cfg.ocr.transport, Transport::MockFixture { path: None });
    }

    #[test]
    fn relative_mock_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("scene.json"),
            r#"{"frame":{"width":10,"height":10}}"#,
        )
        .unwrap();
        let cfg_path = dir.path().join("backends.json");
        std::fs::write(
            &cfg_path,
            r#"{"detector":{"transport":{"type":"mock_fixture","path":"scene.json"}}}"#,
        )
        .unwrap();
        let cfg = BackendsConfig::load(&cfg_path).unwrap();
        assert_eq!(
            cfg.detector.transport,
            Transport::MockFixture {
                path: Some(dir.path().join("scene.json"))
            }
        );
        assert!(cfg.build().is_ok());
    }
}
