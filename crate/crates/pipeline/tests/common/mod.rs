#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, Mutex, Weak};
use std::time::Duration;

use async_trait::async_trait;
use deixis_core::scene::{DetectedEntity, PixelPoint, SceneFixture};
use deixis_pipeline::{
    BackendError, Backends, ChatCompleter, Frame, MockVision, ObjectDetector, ScriptedChat,
};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn fixture(name: &str) -> Arc<SceneFixture> {
    Arc::new(SceneFixture::load(fixtures_dir().join(format!("{name}.json"))).unwrap())
}

pub fn px(x: f64, y: f64) -> PixelPoint {
    PixelPoint::new(x, y)
}

/// Mock vision backends with their own handles, so tests can read counters.
pub struct Rig {
    pub detector: Arc<MockVision>,
    pub ocr: Arc<MockVision>,
    pub faces: Arc<MockVision>,
    pub chat: Arc<ScriptedChat>,
}

impl Rig {
    pub fn new(chat: ScriptedChat) -> Self {
        Self::with(MockVision::attached(), MockVision::attached(), MockVision::attached(), chat)
    }

    pub fn with(detector: MockVision, ocr: MockVision, faces: MockVision, chat: ScriptedChat) -> Self {
        Self {
            detector: Arc::new(detector),
            ocr: Arc::new(ocr),
            faces: Arc::new(faces),
            chat: Arc::new(chat),
        }
    }

    pub fn backends(&self) -> Backends {
        Backends::new(
            self.detector.clone(),
            self.ocr.clone(),
            self.faces.clone(),
            self.chat.clone() as Arc<dyn ChatCompleter>,
        )
    }

    pub fn ml_calls(&self) -> usize {
        self.detector.calls() + self.ocr.calls() + self.faces.calls()
    }
}

/// Detector that remembers a weak handle to every frame it was shown.
#[derive(Default)]
pub struct PeekingDetector {
    pub seen: Mutex<Vec<Weak<[u8]>>>,
}

impl PeekingDetector {
    pub fn live_frames(&self) -> usize {
        self.seen
            .lock()
            .unwrap()
            .iter()
            .filter(|w| w.upgrade().is_some())
            .count()
    }
}

#[async_trait]
impl ObjectDetector for PeekingDetector {
    async fn detect(&self, frame: &Frame) -> Result<Vec<DetectedEntity>, BackendError> {
        self.seen.lock().unwrap().push(Arc::downgrade(&frame.pixels));
        Ok(frame.annotations.as_ref().map(|f| f.objects()).unwrap_or_default())
    }
}

pub fn ms(n: u64) -> Duration {
    Duration::from_millis(n)
}
