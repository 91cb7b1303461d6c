//! Detection and classification of the thirteen referential pronouns.
//!
//! Three groups are recognised:
//!
//! - nominal demonstratives: `this`, `that`, `these`, `those`
//! - adverbial demonstratives: `here`, `there`
//! - third person: `it`, `he`, `him`, `she`, `her`, `they`, `them`
//!
//! Gender-neutral slash forms such as `s/he` or `him/her` are folded into a
//! single third-person match. First and second person pronouns (`I`, `me`,
//! `my`, `you`) are reported separately as [`Mention::NonReferential`] so that
//! corpus statistics can count them; they never drive scene resolution.
//!
//! Matching is on word tokens: maximal runs of alphabetic characters,
//! compared case-insensitively. [`TaxonomyConfig::legacy_substring`] switches
//! to raw substring search, which misfires on words like "there" (contains
//! "her") or "item" (contains "it").

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Byte range `[start, end)` into the original query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PronounClass {
    NominalDemonstrative,
    AdverbialDemonstrative,
    ThirdPerson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plurality {
    Singular,
    Plural,
}

/// How the referent of a pronoun is looked up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionStrategy {
    /// Single scene element under the gaze or pointing coordinate.
    SceneSingular,
    /// Several scene elements inside an expanded region around the input.
    ScenePlural,
    /// Scene element if one is hit, otherwise the previous answer.
    SceneOrHistory,
    /// A person; only face detections qualify as direct hits.
    PersonEntity,
}

impl fmt::Display for ResolutionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::SceneSingular => "scene-singular",
            Self::ScenePlural => "scene-plural",
            Self::SceneOrHistory => "scene-or-history",
            Self::PersonEntity => "person-entity",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: PronounClass,
    pub plurality: Plurality,
    pub strategy: ResolutionStrategy,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("`{0}` is not one of the supported pronouns")]
    UnknownPronoun(String),
}

/// The thirteen taxonomy lexemes, grouped by class.
pub const TAXONOMY_LEXEMES: [&str; 13] = [
    "this", "that", "these", "those", "here", "there", "it", "he", "him", "she", "her", "they",
    "them",
];

/// First and second person pronouns tracked for corpus statistics only.
pub const NON_REFERENTIAL_LEXEMES: [&str; 4] = ["i", "me", "my", "you"];

/// Slash forms folded into one third-person match.
pub const SLASH_FORMS: [&str; 8] = [
    "s/he", "he/she", "she/he", "him/her", "her/him", "his/her", "her/his", "his/hers",
];

/// Classify one of the thirteen lexemes, or a recognised slash form.
pub fn classify(lexeme: &str) -> Result<Classification, TaxonomyError> {
    use PronounClass::*;
    use ResolutionStrategy::*;

    let lower = lexeme.to_lowercase();
    let (class, plurality, strategy) = match lower.as_str() {
        "this" | "that" => (NominalDemonstrative, Plurality::Singular, SceneSingular),
        "these" | "those" => (NominalDemonstrative, Plurality::Plural, ScenePlural),
        "here" | "there" => (AdverbialDemonstrative, Plurality::Singular, SceneSingular),
        "it" => (ThirdPerson, Plurality::Singular, SceneOrHistory),
        "he" | "him" | "she" | "her" => (ThirdPerson, Plurality::Singular, PersonEntity),
        "they" | "them" => (ThirdPerson, Plurality::Plural, PersonEntity),
        s if SLASH_FORMS.contains(&s) => (ThirdPerson, Plurality::Singular, PersonEntity),
        _ => return Err(TaxonomyError::UnknownPronoun(lexeme.to_string())),
    };
    Ok(Classification {
        class,
        plurality,
        strategy,
    })
}

/// A taxonomy pronoun found in a query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PronounMatch {
    /// Lowercased token, e.g. `this` or `s/he`.
    pub lexeme: String,
    pub class: PronounClass,
    pub plurality: Plurality,
    pub span: Span,
    pub strategy: ResolutionStrategy,
}

impl PronounMatch {
    pub fn is_plural(&self) -> bool {
        self.plurality == Plurality::Plural
    }

    /// True for slash forms such as `s/he`.
    pub fn is_combined_form(&self) -> bool {
        self.lexeme.contains('/')
    }
}

/// Any pronoun-like token found by [`scan`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mention {
    Taxonomy(PronounMatch),
    NonReferential { lexeme: String, span: Span },
}

impl Mention {
    pub fn span(&self) -> Span {
        match self {
            Mention::Taxonomy(m) => m.span,
            Mention::NonReferential { span, .. } => *span,
        }
    }

    pub fn lexeme(&self) -> &str {
        match self {
            Mention::Taxonomy(m) => &m.lexeme,
            Mention::NonReferential { lexeme, .. } => lexeme,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaxonomyConfig {
    /// Raw case-insensitive substring search instead of token matching.
    pub legacy_substring: bool,
}

/// Every taxonomy pronoun in `query`, in order of appearance.
pub fn detect_pronouns(query: &str) -> Vec<PronounMatch> {
    detect_pronouns_with(query, &TaxonomyConfig::default())
}

pub fn detect_pronouns_with(query: &str, config: &TaxonomyConfig) -> Vec<PronounMatch> {
    scan_with(query, config)
        .into_iter()
        .filter_map(|m| match m {
            Mention::Taxonomy(p) => Some(p),
            Mention::NonReferential { .. } => None,
        })
        .collect()
}

/// Taxonomy and non-referential mentions, sorted by start offset.
pub fn scan(query: &str) -> Vec<Mention> {
    scan_with(query, &TaxonomyConfig::default())
}

pub fn scan_with(query: &str, config: &TaxonomyConfig) -> Vec<Mention> {
    if config.legacy_substring {
        substring_scan(query)
    } else {
        token_scan(query)
    }
}

fn taxonomy_match(lexeme: String, span: Span) -> Option<PronounMatch> {
    let c = classify(&lexeme).ok()?;
    Some(PronounMatch {
        lexeme,
        class: c.class,
        plurality: c.plurality,
        span,
        strategy: c.strategy,
    })
}

fn mention_for(lexeme: String, span: Span) -> Option<Mention> {
    if NON_REFERENTIAL_LEXEMES.contains(&lexeme.as_str()) {
        return Some(Mention::NonReferential { lexeme, span });
    }
    taxonomy_match(lexeme, span).map(Mention::Taxonomy)
}

/// Maximal alphabetic runs as byte spans.
fn word_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_alphabetic(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push(Span::new(s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(Span::new(s, text.len()));
    }
    spans
}

fn token_scan(query: &str) -> Vec<Mention> {
    let words = word_spans(query);
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let w = words[i];
        // `s/he`: two words joined by a single slash
        if let Some(next) = words.get(i + 1) {
            if next.start == w.end + 1 && query.as_bytes()[w.end] == b'/' {
                let combined = query[w.start..next.end].to_lowercase();
                if SLASH_FORMS.contains(&combined.as_str()) {
                    if let Some(m) = mention_for(combined, Span::new(w.start, next.end)) {
                        out.push(m);
                    }
                    i += 2;
                    continue;
                }
            }
        }
        if let Some(m) = mention_for(query[w.start..w.end].to_lowercase(), w) {
            out.push(m);
        }
        i += 1;
    }
    out
}

fn substring_scan(query: &str) -> Vec<Mention> {
    // ASCII-only lowering keeps byte offsets aligned with `query`.
    let lower = query.to_ascii_lowercase();
    let mut hits: Vec<(Span, &str)> = Vec::new();
    // first/second person lexemes are too short to search for as substrings
    for lexeme in TAXONOMY_LEXEMES.iter().chain(SLASH_FORMS.iter()) {
        for (pos, _) in lower.match_indices(lexeme) {
            hits.push((Span::new(pos, pos + lexeme.len()), lexeme));
        }
    }
    // earliest first, longest first at the same offset; drop overlaps
    hits.sort_by(|a, b| a.0.start.cmp(&b.0.start).then(b.0.len().cmp(&a.0.len())));
    let mut out = Vec::new();
    let mut last_end = 0;
    for (span, lexeme) in hits {
        if span.start < last_end {
            continue;
        }
        if let Some(m) = mention_for(lexeme.to_string(), span) {
            last_end = span.end;
            out.push(m);
        }
    }
    out
}
