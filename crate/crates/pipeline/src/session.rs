//! One user's conversation: wake word, turns and history.

use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use deixis_core::assembler::{assemble, assemble_passthrough, AssembleError, AssembledQuery};
use deixis_core::capture::InputSnapshot;
use deixis_core::history::{ConversationHistory, Exchange};
use deixis_core::resolver::{
    nearby_context, resolve, GeneratorMode, NearbyContext, Resolution, ResolverConfig,
};
use deixis_core::scene::{associate, FrameMeta, PixelPoint, SceneFixture, SceneGraph};
use deixis_core::taxonomy::{detect_pronouns_with, PronounMatch};
use deixis_core::FALLBACK_SENTENCE;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::backends::Frame;
use crate::pipeline::{
    analyze_frame, complete, timed, Analysis, AnalyzeError, Backends, ChannelWarning, Stage, StageTiming,
};

pub const WAKE_REPLY: &str = "Hi, I'm listening.";
const WAKE_TOKENS: [&str; 2] = ["hey", "glass"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Listening,
    Processing,
    Responding,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("session is {0:?}; say the wake phrase first")]
    NotListening(Phase),
}

/// True when `utterance` contains "hey glass" as two consecutive words.
pub fn is_wake_phrase(utterance: &str) -> bool {
    let words: Vec<String> = utterance
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    words.windows(2).any(|w| w[0] == WAKE_TOKENS[0] && w[1] == WAKE_TOKENS[1])
}

/// Where a turn's frame comes from.
#[derive(Debug, Clone)]
pub enum SceneSource {
    /// Synthesise a frame that carries the fixture as annotations.
    Fixture(Arc<SceneFixture>),
    /// A real captured frame. The session takes ownership and drops it once
    /// the turn is answered.
    Frame(Frame),
}

impl SceneSource {
    fn fixture(&self) -> Option<&SceneFixture> {
        match self {
            SceneSource::Fixture(f) => Some(f),
            SceneSource::Frame(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TurnRequest {
    pub query: String,
    pub scene: SceneSource,
    pub gaze_px: PixelPoint,
    pub point_px: Option<PixelPoint>,
    /// Overrides the session's generator mode for this turn.
    pub mode: Option<GeneratorMode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum FallbackReason {
    NoReferent,
    AnalysisFailed(String),
    CompletionFailed(String),
}

/// Everything needed to explain a turn after the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnTrace {
    pub turn_id: Uuid,
    pub session_id: Uuid,
    pub query: String,
    pub mode: GeneratorMode,
    pub config: ResolverConfig,
    pub pronouns: Vec<PronounMatch>,
    pub snapshot: Option<InputSnapshot>,
    pub frame: Option<FrameMeta>,
    /// Vision backend requests issued during the turn.
    pub ml_calls: usize,
    pub warnings: Vec<ChannelWarning>,
    /// Parent/child graph the resolver saw; the candidate set.
    pub scene: Option<SceneGraph>,
    pub resolutions: Vec<Resolution>,
    pub nearby: Option<NearbyContext>,
    pub assembled: Option<AssembledQuery>,
    pub fallback_reason: Option<FallbackReason>,
    /// Pixel data was released before the turn returned.
    pub frame_purged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub turn_id: Uuid,
    pub answer: String,
    pub explanation: Option<String>,
    pub fallback: bool,
    pub timings: Vec<StageTiming>,
    pub total_ms: f64,
    pub trace: TurnTrace,
}

impl TurnResult {
    pub fn stage_sum_ms(&self) -> f64 {
        self.timings.iter().map(|t| t.elapsed_ms).sum()
    }

    pub fn timing(&self, stage: Stage) -> Option<f64> {
        self.timings
            .iter()
            .find(|t| t.stage == stage)
            .map(|t| t.elapsed_ms)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    id: Uuid,
    phase: Phase,
    history: ConversationHistory,
    /// Stage timings of the most recent turn.
    timings: Vec<StageTiming>,
    pub config: ResolverConfig,
    pub mode: GeneratorMode,
}

impl Session {
    pub fn new(config: ResolverConfig, mode: GeneratorMode) -> Self {
        Self {
            id: Uuid::new_v4(),
            phase: Phase::Idle,
            history: ConversationHistory::new(),
            timings: Vec::new(),
            config,
            mode,
        }
    }

    pub fn id(&self) -> Uuid {
        self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn history(&self) -> &ConversationHistory {
        &self.history
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.history.iter().cloned().collect()
    }

    pub fn timings(&self) -> &[StageTiming] {
        &self.timings
    }

    /// Idle plus the wake phrase moves to Listening and returns the reply.
    pub fn wake(&mut self, utterance: &str) -> Option<&'static str> {
        if self.phase == Phase::Idle && is_wake_phrase(utterance) {
            self.phase = Phase::Listening;
            Some(WAKE_REPLY)
        } else {
            None
        }
    }

    pub async fn run_turn(
        &mut self,
        backends: &Backends,
        request: TurnRequest,
    ) -> Result<TurnResult, SessionError> {
        if self.phase != Phase::Listening {
            return Err(SessionError::NotListening(self.phase));
        }
        let start = Instant::now();
        self.phase = Phase::Processing;

        let mode = request.mode.unwrap_or(self.mode);
        let cfg = match request.scene.fixture() {
            Some(f) => self.config.for_fixture(f),
            None => self.config,
        };
        let pronouns = detect_pronouns_with(&request.query, &cfg.taxonomy);
        let mut trace = TurnTrace {
            turn_id: Uuid::new_v4(),
            session_id: self.id,
            query: request.query.clone(),
            mode,
            config: cfg,
            pronouns: pronouns.clone(),
            snapshot: None,
            frame: None,
            ml_calls: 0,
            warnings: Vec::new(),
            scene: None,
            resolutions: Vec::new(),
            nearby: None,
            assembled: None,
            fallback_reason: None,
            frame_purged: false,
        };
        let mut timings = Vec::new();

        let assembled = if pronouns.is_empty() {
            // scene analysis is gated on a referential pronoun
            let (a, t) = timed(Stage::PhraseGen, async {
                assemble_passthrough(&request.query, &self.history)
            })
            .await;
            timings.push(t);
            Ok(a)
        } else {
            let (frame, t) = timed(Stage::Capture, capture(request.scene, backends.capture_delay)).await;
            timings.push(t);
            let snap = InputSnapshot {
                captured_at_ms: frame.meta.captured_at_ms,
                ..InputSnapshot::at(request.gaze_px, request.point_px, &frame.meta)
            };
            trace.snapshot = Some(snap);
            trace.frame = Some(frame.meta);

            trace.ml_calls = 3;
            let analysis = analyze_frame(&frame, backends).await;
            // pixels are no longer needed once the backends have answered
            drop(frame);
            trace.frame_purged = true;

            match analysis {
                Err(e) => {
                    let AnalyzeError::AllBackendsFailed { warnings, timing } = &e;
                    trace.warnings = warnings.clone();
                    timings.push(*timing);
                    Err(FallbackReason::AnalysisFailed(e.to_string()))
                }
                Ok(analysis) => {
                    timings.push(analysis.timing);
                    trace.warnings = analysis.warnings.clone();
                    let frame_meta = trace.frame.expect("set above");
                    let (result, t) = timed(Stage::PhraseGen, async {
                        phrase_gen(&request.query, &pronouns, analysis, frame_meta, &snap, &self.history, &cfg, mode)
                    })
                    .await;
                    timings.push(t);
                    let (scene, resolutions, nearby, assembled) = result;
                    trace.scene = Some(scene);
                    trace.resolutions = resolutions;
                    trace.nearby = nearby;
                    assembled.map_err(|e| match e {
                        AssembleError::NothingToReplace => FallbackReason::NoReferent,
                        other => FallbackReason::CompletionFailed(other.to_string()),
                    })
                }
            }
        };

        let outcome = match assembled {
            Err(reason) => Err(reason),
            Ok(assembled) => {
                let r = complete(&assembled, backends.chat.as_ref(), backends.timeouts.chat).await;
                trace.assembled = Some(assembled);
                match r {
                    Ok(c) => {
                        timings.push(c.timing);
                        Ok((c.answer, c.explanation))
                    }
                    Err(e) => Err(FallbackReason::CompletionFailed(e.to_string())),
                }
            }
        };

        self.phase = Phase::Responding;
        let (answer, explanation, fallback) = match outcome {
            Ok((answer, explanation)) => {
                self.history.push(request.query.clone(), answer.clone());
                (answer, explanation, false)
            }
            Err(reason) => {
                tracing::info!(?reason, "turn fell back");
                trace.fallback_reason = Some(reason);
                (FALLBACK_SENTENCE.to_string(), None, true)
            }
        };
        self.timings = timings.clone();
        self.phase = Phase::Idle;

        Ok(TurnResult {
            turn_id: trace.turn_id,
            answer,
            explanation,
            fallback,
            timings,
            total_ms: start.elapsed().as_secs_f64() * 1000.0,
            trace,
        })
    }
}

async fn capture(scene: SceneSource, delay: Duration) -> Frame {
    if !delay.is_zero() {
        tokio::time::sleep(delay).await;
    }
    let mut frame = match scene {
        SceneSource::Fixture(f) => {
            let meta = f.frame_meta().expect("fixtures are validated on load");
            Frame::synthetic(meta, f)
        }
        SceneSource::Frame(frame) => frame,
    };
    frame.meta.captured_at_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    frame
}

#[allow(clippy::too_many_arguments)]
fn phrase_gen(
    query: &str,
    pronouns: &[PronounMatch],
    analysis: Analysis,
    frame: FrameMeta,
    snap: &InputSnapshot,
    history: &ConversationHistory,
    cfg: &ResolverConfig,
    mode: GeneratorMode,
) -> (
    SceneGraph,
    Vec<Resolution>,
    Option<NearbyContext>,
    Result<AssembledQuery, AssembleError>,
) {
    let mut entities = analysis.entities;
    entities.extend(analysis.faces);
    let scene = associate(&entities, &analysis.texts, frame, &cfg.scene);
    let resolutions = resolve(pronouns, &scene, snap, history, cfg, mode);
    let nearby = nearby_context(&scene, snap, cfg);
    let assembled = assemble(mode, query, &resolutions, snap, &frame, &nearby, history);
    let nearby = (mode == GeneratorMode::V2).then_some(nearby);
    (scene, resolutions, nearby, assembled)
}
