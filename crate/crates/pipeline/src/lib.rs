//! Runtime around `deixis-core`: backend clients, per-user sessions, a
//! replay harness and the HTTP service.

pub mod backends;
pub mod config;
pub mod pipeline;
pub mod replay;
pub mod service;
pub mod session;

pub use backends::{
    BackendError, ChatCompleter, ChatScript, FaceRecognizer, Frame, MockVision, ObjectDetector,
    OcrEngine, ScriptedChat,
};
pub use config::{BackendKind, BackendSpec, BackendsConfig, ConfigError, Transport};
pub use pipeline::{analyze_frame, complete, Backends, Stage, StageTiming, Timeouts};
pub use session::{Phase, SceneSource, Session, TurnRequest, TurnResult, TurnTrace, WAKE_REPLY};
