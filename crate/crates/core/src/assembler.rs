//! Final payload construction for the chat backend.
//!
//! v1 splices the resolved phrase over the pronoun and prepends the
//! conversation history. v2 leaves the query untouched and renders it,
//! together with the input coordinates and nearby scene context, into the
//! bundled prompt template.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::capture::InputSnapshot;
use crate::history::ConversationHistory;
use crate::resolver::{GeneratorMode, NearbyContext, Outcome, Resolution};
use crate::scene::{FrameMeta, PixelPoint};
use crate::taxonomy::{PronounMatch, Span};

/// Engineered prompt template, rendered byte-for-byte.
pub const PROMPT_V2_TEMPLATE: &str = include_str!("../resources/prompt_v2.txt");

/// SHA-256 of [`PROMPT_V2_TEMPLATE`]; goldens are pinned against it.
pub const PROMPT_V2_SHA256: &str = "69200400c8c9e48564a15f077b2d18e495cdc938cae277f923e95081f3734874";

pub const PROMPT_V2_VERSION: &str = "prompt_v2/1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssembleError {
    #[error("no referent could be resolved for the query")]
    NothingToReplace,
    #[error("replacement span {0:?} is out of bounds or overlaps another")]
    BadSpan(Span),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyMode {
    V1Replaced,
    V2Prompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub span: Span,
    pub pronoun: String,
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembledQuery {
    pub mode: AssemblyMode,
    /// Exact text sent to the chat backend.
    pub payload: String,
    /// The query as it appears inside the payload: modified for v1, raw for v2.
    pub query_text: String,
    pub replacements: Vec<Replacement>,
    /// Pronouns v1 could not replace.
    pub unsupported: Vec<PronounMatch>,
    /// Pronouns forwarded unresolved to the language model.
    pub deferred: Vec<PronounMatch>,
    pub history_included: usize,
}

impl AssembledQuery {
    /// Hex SHA-256 of the payload, used to key scripted chat responses.
    pub fn checksum(&self) -> String {
        payload_checksum(&self.payload)
    }
}

pub fn payload_checksum(payload: &str) -> String {
    hex::encode(Sha256::digest(payload.as_bytes()))
}

fn with_article(phrase: &str) -> String {
    let vowel = phrase
        .chars()
        .next()
        .is_some_and(|c| "aeiouAEIOU".contains(c));
    format!("{} {phrase}", if vowel { "an" } else { "a" })
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Splice resolved phrases over their pronoun spans.
pub fn assemble_v1(
    query: &str,
    resolutions: &[Resolution],
    history: &ConversationHistory,
) -> Result<AssembledQuery, AssembleError> {
    let mut replacements = Vec::new();
    let mut unsupported = Vec::new();
    let mut deferred = Vec::new();
    let mut attempted = 0;
    for r in resolutions {
        match &r.outcome {
            Outcome::Resolved(referent) => {
                attempted += 1;
                if referent.is_none() {
                    continue;
                }
                let mut phrase = if referent.is_single_object() {
                    with_article(&referent.phrase)
                } else {
                    referent.phrase.clone()
                };
                let original = query.get(r.pronoun.span.start..r.pronoun.span.end);
                let Some(original) = original else {
                    return Err(AssembleError::BadSpan(r.pronoun.span));
                };
                if original.chars().next().is_some_and(char::is_uppercase) {
                    phrase = capitalize_first(&phrase);
                }
                replacements.push(Replacement {
                    span: r.pronoun.span,
                    pronoun: original.to_string(),
                    phrase,
                });
            }
            Outcome::Unsupported => unsupported.push(r.pronoun.clone()),
            Outcome::Deferred => deferred.push(r.pronoun.clone()),
        }
    }
    if attempted > 0 && replacements.is_empty() {
        return Err(AssembleError::NothingToReplace);
    }

    replacements.sort_by_key(|r| r.span.start);
    let mut query_text = String::with_capacity(query.len() + 64);
    let mut cursor = 0;
    for r in &replacements {
        if r.span.start < cursor {
            return Err(AssembleError::BadSpan(r.span));
        }
        query_text.push_str(&query[cursor..r.span.start]);
        query_text.push_str(&r.phrase);
        cursor = r.span.end;
    }
    query_text.push_str(&query[cursor..]);

    let mut payload = history.serialize();
    payload.push_str(&query_text);
    Ok(AssembledQuery {
        mode: AssemblyMode::V1Replaced,
        payload,
        query_text,
        replacements,
        unsupported,
        deferred,
        history_included: history.len(),
    })
}

fn fmt_point(p: &PixelPoint) -> String {
    format!("({}, {})", p.x, p.y)
}

fn input_section(snap: &InputSnapshot) -> String {
    let pointing = snap
        .point_px
        .as_ref()
        .map(fmt_point)
        .unwrap_or_else(|| "none".to_string());
    format!("gaze: {}\npointing: {pointing}", fmt_point(&snap.gaze_px))
}

fn nearby_section(nearby: &NearbyContext) -> String {
    if nearby.is_empty() {
        return "none".to_string();
    }
    let target = nearby.target.as_deref().unwrap_or("none");
    let texts = if nearby.texts.is_empty() {
        "none".to_string()
    } else {
        nearby
            .texts
            .iter()
            .map(|t| format!("\"{t}\""))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("gaze target: {target}\nnearby text: {texts}")
}

/// Single-pass `{{name}}` substitution; inserted values are not rescanned.
fn render_template(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) => {
                let name = &after[..close];
                match vars.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push_str("{{");
                        out.push_str(name);
                        out.push_str("}}");
                    }
                }
                rest = &after[close + 2..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Render the engineered prompt. The query is embedded verbatim.
pub fn assemble_v2(
    query: &str,
    snap: &InputSnapshot,
    frame: &FrameMeta,
    nearby: &NearbyContext,
    history: &ConversationHistory,
    resolutions: &[Resolution],
) -> AssembledQuery {
    let history_text = if history.is_empty() {
        "none".to_string()
    } else {
        history.serialize().trim_end_matches('\n').to_string()
    };
    let width = frame.width.to_string();
    let height = frame.height.to_string();
    let inputs = input_section(snap);
    let context = nearby_section(nearby);
    let payload = render_template(
        PROMPT_V2_TEMPLATE,
        &[
            ("query", query),
            ("frame_width", &width),
            ("frame_height", &height),
            ("input_data", &inputs),
            ("nearby", &context),
            ("history", &history_text),
        ],
    );
    AssembledQuery {
        mode: AssemblyMode::V2Prompt,
        payload,
        query_text: query.to_string(),
        replacements: Vec::new(),
        unsupported: Vec::new(),
        deferred: resolutions.iter().map(|r| r.pronoun.clone()).collect(),
        history_included: history.len(),
    }
}

/// Pronoun-free queries skip scene analysis: raw query plus history.
pub fn assemble_passthrough(query: &str, history: &ConversationHistory) -> AssembledQuery {
    let mut payload = history.serialize();
    payload.push_str(query);
    AssembledQuery {
        mode: AssemblyMode::V1Replaced,
        payload,
        query_text: query.to_string(),
        replacements: Vec::new(),
        unsupported: Vec::new(),
        deferred: Vec::new(),
        history_included: history.len(),
    }
}

/// Convenience dispatch on the generator mode.
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    mode: GeneratorMode,
    query: &str,
    resolutions: &[Resolution],
    snap: &InputSnapshot,
    frame: &FrameMeta,
    nearby: &NearbyContext,
    history: &ConversationHistory,
) -> Result<AssembledQuery, AssembleError> {
    match mode {
        GeneratorMode::V1 => assemble_v1(query, resolutions, history),
        GeneratorMode::V2 => Ok(assemble_v2(query, snap, frame, nearby, history, resolutions)),
    }
}
