//! Replaying recorded sessions and bundled corpora through the pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use deixis_core::assembler::payload_checksum;
use deixis_core::corpus::CorpusEntry;
use deixis_core::resolver::{GeneratorMode, ReferentSource, ResolverConfig};
use deixis_core::scene::{PixelPoint, SceneFixture};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::Backends;
use crate::session::{SceneSource, Session, TurnRequest, TurnResult};

/// Scene name meaning "no fixture": an empty 1920x1080 frame.
pub const NO_SCENE: &str = "no-scene";

const NO_SCENE_SIZE: (u32, u32) = (1920, 1080);

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("turn {index}: fixture {path}: {message}")]
    Fixture {
        index: usize,
        path: String,
        message: String,
    },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ReplayError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReplayError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| ReplayError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Checks applied to a replayed turn. Absent fields are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub answer: Option<String>,
    pub fallback: Option<bool>,
    pub phrase: Option<String>,
    pub source: Option<ReferentSource>,
    pub payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayTurn {
    pub query: String,
    /// Fixture path relative to the session file, or `no-scene`.
    pub scene: String,
    pub gaze_px: PixelPoint,
    #[serde(default)]
    pub point_px: Option<PixelPoint>,
    #[serde(default)]
    pub mode: Option<GeneratorMode>,
    #[serde(default)]
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    #[serde(default)]
    pub mode: GeneratorMode,
    #[serde(default)]
    pub config: ResolverConfig,
    /// Chat script relative to the session file; replaces the configured
    /// chat backend for the replay.
    #[serde(default)]
    pub script: Option<PathBuf>,
    pub turns: Vec<ReplayTurn>,
}

impl SessionFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReplayError> {
        read_json(path.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnReport {
    pub index: usize,
    pub query: String,
    pub answer: String,
    pub fallback: bool,
    pub source: Option<ReferentSource>,
    pub phrase: Option<String>,
    pub payload_sha256: Option<String>,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub turns: Vec<TurnReport>,
    pub passed: bool,
}

fn resolve_scene(name: &str, base: &Path) -> Result<Arc<SceneFixture>, String> {
    if name == NO_SCENE {
        return Ok(Arc::new(SceneFixture::empty(NO_SCENE_SIZE.0, NO_SCENE_SIZE.1)));
    }
    SceneFixture::load(base.join(name))
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

/// First resolved referent of the turn, if any.
fn referent(result: &TurnResult) -> (Option<ReferentSource>, Option<String>) {
    result
        .trace
        .resolutions
        .iter()
        .find_map(|r| r.referent())
        .map(|r| (Some(r.source), Some(r.phrase.clone())))
        .unwrap_or((None, None))
}

fn check(expect: &Expectation, report: &TurnReport, payload: Option<&str>) -> Vec<String> {
    let mut out = Vec::new();
    let mut cmp = |what: &str, want: String, got: String| {
        if want != got {
            out.push(format!("{what}: expected {want:?}, got {got:?}"));
        }
    };
    if let Some(a) = &expect.answer {
        cmp("answer", a.clone(), report.answer.clone());
    }
    if let Some(f) = expect.fallback {
        cmp("fallback", f.to_string(), report.fallback.to_string());
    }
    if let Some(p) = &expect.phrase {
        cmp("phrase", p.clone(), report.phrase.clone().unwrap_or_default());
    }
    if let Some(s) = expect.source {
        let got = report.source.map_or("none".to_string(), |g| format!("{g:?}"));
        cmp("source", format!("{s:?}"), got);
    }
    if let Some(p) = &expect.payload {
        cmp("payload", p.clone(), payload.unwrap_or_default().to_string());
    }
    out
}

/// Run every turn of a session file, in order, in one session.
///
/// `base` is the directory fixture and script paths are relative to.
pub async fn replay_session(
    file: &SessionFile,
    base: &Path,
    backends: &Backends,
) -> Result<SessionReport, ReplayError> {
    let mut backends = backends.clone();
    if let Some(script) = &file.script {
        let chat = crate::backends::ScriptedChat::load(base.join(script)).map_err(|e| {
            ReplayError::Parse {
                path: script.display().to_string(),
                message: e.to_string(),
            }
        })?;
        backends.chat = Arc::new(chat);
    }

    let mut session = Session::new(file.config, file.mode);
    let mut turns = Vec::new();
    for (index, turn) in file.turns.iter().enumerate() {
        let fixture = resolve_scene(&turn.scene, base).map_err(|message| ReplayError::Fixture {
            index,
            path: turn.scene.clone(),
            message,
        })?;
        session.wake("hey glass");
        let result = session
            .run_turn(
                &backends,
                TurnRequest {
                    query: turn.query.clone(),
                    scene: SceneSource::Fixture(fixture),
                    gaze_px: turn.gaze_px,
                    point_px: turn.point_px,
                    mode: turn.mode,
                },
            )
            .await
            .expect("session was just woken");
        let (source, phrase) = referent(&result);
        let payload = result.trace.assembled.as_ref().map(|a| a.payload.as_str());
        let mut report = TurnReport {
            index,
            query: turn.query.clone(),
            answer: result.answer.clone(),
            fallback: result.fallback,
            source,
            phrase,
            payload_sha256: payload.map(payload_checksum),
            mismatches: Vec::new(),
        };
        report.mismatches = check(&turn.expect, &report, payload);
        turns.push(report);
    }
    let passed = turns.iter().all(|t| t.mismatches.is_empty());
    Ok(SessionReport { turns, passed })
}

/// Scene and inputs for one corpus entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusBinding {
    pub scene: String,
    pub gaze_px: PixelPoint,
    #[serde(default)]
    pub point_px: Option<PixelPoint>,
}

/// Entry index (0-based) to binding, plus an optional catch-all.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusBindings {
    #[serde(default)]
    pub entries: BTreeMap<usize, CorpusBinding>,
    #[serde(default)]
    pub default: Option<CorpusBinding>,
}

impl CorpusBindings {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReplayError> {
        read_json(path.as_ref())
    }

    /// Every entry against the empty scene, gazing at the centre.
    pub fn all_no_scene() -> Self {
        Self {
            entries: BTreeMap::new(),
            default: Some(CorpusBinding {
                scene: NO_SCENE.into(),
                gaze_px: PixelPoint::new(NO_SCENE_SIZE.0 as f64 / 2.0, NO_SCENE_SIZE.1 as f64 / 2.0),
                point_px: None,
            }),
        }
    }

    fn get(&self, index: usize) -> Option<&CorpusBinding> {
        self.entries.get(&index).or(self.default.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    pub answer: String,
    pub fallback: bool,
    pub source: Option<ReferentSource>,
    pub payload: Option<String>,
    pub unsupported: usize,
    pub deferred: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub index: usize,
    pub query: String,
    pub skipped: Option<String>,
    pub v1: Option<ModeOutcome>,
    pub v2: Option<ModeOutcome>,
    /// v1 sent a rewritten query.
    pub v1_rewritten: bool,
    /// The raw query appears unmodified in the v2 prompt.
    pub v2_verbatim: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub entries: Vec<EntryReport>,
    pub ran: usize,
    pub skipped: usize,
    pub fallback_rate_v1: f64,
    pub fallback_rate_v2: f64,
    /// v1 referent sources by name, plus `none` for unresolved turns.
    pub sources: BTreeMap<String, usize>,
}

impl CorpusReport {
    pub fn to_table(&self) -> String {
        let mut out = format!("{:>4}  {:<14} {:<5} {:<5}  query\n", "#", "v1 source", "fb1", "fb2");
        for e in &self.entries {
            let q: String = e.query.chars().take(60).collect();
            match (&e.skipped, &e.v1, &e.v2) {
                (Some(reason), _, _) => {
                    out.push_str(&format!("{:>4}  skipped ({reason})  {q}\n", e.index));
                }
                (None, Some(v1), Some(v2)) => {
                    let src = v1
                        .source
                        .map(|s| format!("{s:?}"))
                        .unwrap_or_else(|| "-".into());
                    out.push_str(&format!(
                        "{:>4}  {:<14} {:<5} {:<5}  {q}\n",
                        e.index, src, v1.fallback, v2.fallback
                    ));
                }
                _ => {}
            }
        }
        out.push_str(&format!(
            "ran {}  skipped {}  fallback v1 {:.3}  v2 {:.3}\n",
            self.ran, self.skipped, self.fallback_rate_v1, self.fallback_rate_v2
        ));
        out
    }
}

async fn run_single(
    backends: &Backends,
    config: ResolverConfig,
    mode: GeneratorMode,
    query: &str,
    fixture: Arc<SceneFixture>,
    binding: &CorpusBinding,
) -> TurnResult {
    let mut session = Session::new(config, mode);
    session.wake("hey glass");
    session
        .run_turn(
            backends,
            TurnRequest {
                query: query.to_string(),
                scene: SceneSource::Fixture(fixture),
                gaze_px: binding.gaze_px,
                point_px: binding.point_px,
                mode: None,
            },
        )
        .await
        .expect("session was just woken")
}

fn outcome(r: &TurnResult) -> ModeOutcome {
    let assembled = r.trace.assembled.as_ref();
    ModeOutcome {
        answer: r.answer.clone(),
        fallback: r.fallback,
        source: referent(r).0,
        payload: assembled.map(|a| a.payload.clone()),
        unsupported: assembled.map_or(0, |a| a.unsupported.len()),
        deferred: assembled.map_or(0, |a| a.deferred.len()),
    }
}

/// Run each bound entry once per generator mode, each in a fresh session.
///
/// Entries without a binding, or whose fixture cannot be loaded, are
/// reported as skipped and the run continues.
pub async fn replay_corpus(
    corpus: &[CorpusEntry],
    bindings: &CorpusBindings,
    fixtures_dir: &Path,
    backends: &Backends,
    config: ResolverConfig,
) -> CorpusReport {
    let mut entries = Vec::new();
    let mut sources: BTreeMap<String, usize> = BTreeMap::new();
    let (mut fb1, mut fb2) = (0usize, 0usize);
    for (index, entry) in corpus.iter().enumerate() {
        let mut report = EntryReport {
            index,
            query: entry.query.clone(),
            skipped: None,
            v1: None,
            v2: None,
            v1_rewritten: false,
            v2_verbatim: false,
        };
        let Some(binding) = bindings.get(index) else {
            report.skipped = Some("no binding".into());
            entries.push(report);
            continue;
        };
        let fixture = match resolve_scene(&binding.scene, fixtures_dir) {
            Ok(f) => f,
            Err(e) => {
                report.skipped = Some(format!("missing fixture {}: {e}", binding.scene));
                entries.push(report);
                continue;
            }
        };
        let r1 = run_single(backends, config, GeneratorMode::V1, &entry.query, fixture.clone(), binding).await;
        let r2 = run_single(backends, config, GeneratorMode::V2, &entry.query, fixture, binding).await;
        let (v1, v2) = (outcome(&r1), outcome(&r2));
        fb1 += v1.fallback as usize;
        fb2 += v2.fallback as usize;
        let key = v1
            .source
            .map(|s| serde_json::to_value(s).unwrap().as_str().unwrap().to_string())
            .unwrap_or_else(|| "none".into());
        *sources.entry(key).or_default() += 1;
        report.v1_rewritten = r1
            .trace
            .assembled
            .as_ref()
            .is_some_and(|a| a.query_text != entry.query);
        report.v2_verbatim = v2
            .payload
            .as_ref()
            .is_some_and(|p| p.contains(&entry.query));
        report.v1 = Some(v1);
        report.v2 = Some(v2);
        entries.push(report);
    }
    let skipped = entries.iter().filter(|e| e.skipped.is_some()).count();
    let ran = entries.len() - skipped;
    let rate = |n: usize| if ran == 0 { 0.0 } else { n as f64 / ran as f64 };
    CorpusReport {
        ran,
        skipped,
        fallback_rate_v1: rate(fb1),
        fallback_rate_v2: rate(fb2),
        sources,
        entries,
    }
}
