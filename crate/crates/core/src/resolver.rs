//! Heuristic referent resolution.
//!
//! Singular pronouns look for a parent box under the input coordinate and
//! describe it as `<label> with text that says <children>`; failing that, the
//! nearest OCR texts around each input channel are joined. Plural pronouns
//! expand each coordinate into a region a quarter of the frame in size and
//! collect every parent that falls mostly inside it.
//!
//! Every decision is recorded as [`Evidence`]; [`render`] rebuilds the phrase
//! from that evidence alone, and the resolver itself produces its phrase
//! through the same function.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::InputSnapshot;
use crate::history::ConversationHistory;
use crate::scene::{
    expand_region, overlap_ratio_with, BBox, EntityKind, OcrText, ParentNode, PixelPoint,
    SceneConfig, SceneFixture, SceneGraph,
};
use crate::taxonomy::{PronounMatch, ResolutionStrategy, TaxonomyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Gaze,
    Pointing,
}

/// Which input wins when gaze and pointing land on different parents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputPrecedence {
    #[default]
    PointingFirst,
    GazeFirst,
}

/// Phrase generation strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    /// Replace the first pronoun with a generated phrase.
    #[default]
    V1,
    /// Forward the raw query and scene context in an engineered prompt.
    V2,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("overlap threshold must be in (0, 1], got {0}")]
    Threshold(f64),
    #[error("{0} must be at least 1")]
    Count(&'static str),
    #[error("plural region fractions must be in (0, 1], got {0:?}")]
    Region((f64, f64)),
    #[error("minimum confidence must be in [0, 1], got {0}")]
    Confidence(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolverConfig {
    #[serde(flatten)]
    pub scene: SceneConfig,
    /// Texts taken per input channel, and kept after the union.
    pub nearest_k: usize,
    /// Plural region size as a fraction of frame width and height.
    pub plural_region: (f64, f64),
    pub input_precedence: InputPrecedence,
    /// Keep backend casing instead of lowercasing labels and texts.
    pub preserve_case: bool,
    #[serde(flatten)]
    pub taxonomy: TaxonomyConfig,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            nearest_k: 5,
            plural_region: (0.5, 0.5),
            input_precedence: InputPrecedence::PointingFirst,
            preserve_case: false,
            taxonomy: TaxonomyConfig::default(),
        }
    }
}

impl ResolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = self.scene.overlap_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ConfigError::Threshold(t));
        }
        if self.scene.max_children == 0 {
            return Err(ConfigError::Count("max_children"));
        }
        if self.nearest_k == 0 {
            return Err(ConfigError::Count("nearest_k"));
        }
        let (w, h) = self.plural_region;
        if !(w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0) {
            return Err(ConfigError::Region(self.plural_region));
        }
        if !(0.0..=1.0).contains(&self.scene.min_confidence) {
            return Err(ConfigError::Confidence(self.scene.min_confidence));
        }
        Ok(())
    }

    /// Apply per-fixture overrides (currently only casing).
    pub fn for_fixture(&self, fixture: &SceneFixture) -> Self {
        let mut cfg = *self;
        if let Some(keep) = fixture.preserve_case {
            cfg.preserve_case = keep;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferentSource {
    ParentHit,
    NearestTexts,
    History,
    PersonEntity,
    None,
}

/// One candidate considered during resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// An input coordinate fell inside a parent box.
    ParentContains {
        channel: Channel,
        point: PixelPoint,
        parent: usize,
        entity_kind: EntityKind,
        label: String,
        children: Vec<String>,
        bbox: BBox,
        area: f64,
        chosen: bool,
    },
    /// A parent overlapped an expanded plural region.
    RegionOverlap {
        channel: Channel,
        region: BBox,
        parent: usize,
        entity_kind: EntityKind,
        label: String,
        children: Vec<String>,
        bbox: BBox,
        ratio: f64,
        chosen: bool,
    },
    /// Distance from an input coordinate to an OCR text centre.
    TextDistance {
        channel: Channel,
        point: PixelPoint,
        text_index: usize,
        text: String,
        bbox: BBox,
        distance: f64,
        chosen: bool,
    },
    /// The previous answer, used as context for an unresolved `it`.
    PreviousAnswer { answer: String, chosen: bool },
}

impl Evidence {
    pub fn chosen(&self) -> bool {
        match self {
            Evidence::ParentContains { chosen, .. }
            | Evidence::RegionOverlap { chosen, .. }
            | Evidence::TextDistance { chosen, .. }
            | Evidence::PreviousAnswer { chosen, .. } => *chosen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedReferent {
    /// Empty exactly when `source` is [`ReferentSource::None`].
    pub phrase: String,
    pub source: ReferentSource,
    pub evidence: Vec<Evidence>,
}

impl ResolvedReferent {
    fn none(evidence: Vec<Evidence>) -> Self {
        Self {
            phrase: String::new(),
            source: ReferentSource::None,
            evidence,
        }
    }

    fn from_evidence(source: ReferentSource, evidence: Vec<Evidence>, cfg: &ResolverConfig) -> Self {
        let phrase = render(source, &evidence, cfg);
        if phrase.is_empty() {
            return Self::none(evidence);
        }
        Self {
            phrase,
            source,
            evidence,
        }
    }

    pub fn is_none(&self) -> bool {
        self.source == ReferentSource::None
    }

    /// True when the phrase describes exactly one object (not a person), so
    /// it reads naturally with an indefinite article in front.
    pub fn is_single_object(&self) -> bool {
        if !matches!(self.source, ReferentSource::ParentHit) {
            return false;
        }
        let mut parents = self.evidence.iter().filter_map(|e| match e {
            Evidence::ParentContains {
                parent,
                entity_kind,
                chosen: true,
                ..
            }
            | Evidence::RegionOverlap {
                parent,
                entity_kind,
                chosen: true,
                ..
            } => Some((*parent, *entity_kind)),
            _ => None,
        });
        let Some(first) = parents.next() else {
            return false;
        };
        first.1 == EntityKind::Object && parents.all(|p| p.0 == first.0)
    }
}

fn cased(s: &str, keep: bool) -> String {
    if keep {
        s.to_string()
    } else {
        s.to_lowercase()
    }
}

/// `<label> with text that says <t1> <t2> ...`, or just the label when the
/// parent carries no text. Person names keep their casing.
pub fn parent_phrase(kind: EntityKind, label: &str, children: &[String], preserve_case: bool) -> String {
    let mut phrase = cased(label, preserve_case || kind == EntityKind::Face);
    if !children.is_empty() {
        phrase.push_str(" with text that says ");
        let texts: Vec<String> = children.iter().map(|t| cased(t, preserve_case)).collect();
        phrase.push_str(&texts.join(" "));
    }
    phrase
}

/// Rebuild a phrase from the chosen evidence.
pub fn render(source: ReferentSource, evidence: &[Evidence], cfg: &ResolverConfig) -> String {
    let chosen = evidence.iter().filter(|e| e.chosen());
    match source {
        ReferentSource::None => String::new(),
        ReferentSource::History => chosen
            .filter_map(|e| match e {
                Evidence::PreviousAnswer { answer, .. } => Some(answer.clone()),
                _ => None,
            })
            .next_back()
            .unwrap_or_default(),
        ReferentSource::ParentHit | ReferentSource::PersonEntity => {
            // one entry per parent, left to right
            let mut parents: BTreeMap<usize, (&BBox, EntityKind, &str, &[String])> = BTreeMap::new();
            for e in chosen {
                match e {
                    Evidence::ParentContains {
                        parent,
                        entity_kind,
                        label,
                        children,
                        bbox,
                        ..
                    }
                    | Evidence::RegionOverlap {
                        parent,
                        entity_kind,
                        label,
                        children,
                        bbox,
                        ..
                    } => {
                        parents.insert(*parent, (bbox, *entity_kind, label, children));
                    }
                    _ => {}
                }
            }
            let mut parents: Vec<_> = parents.into_values().collect();
            parents.sort_by(|a, b| {
                a.0.x_min
                    .total_cmp(&b.0.x_min)
                    .then(a.0.y_min.total_cmp(&b.0.y_min))
            });
            parents
                .into_iter()
                .map(|(_, kind, label, children)| parent_phrase(kind, label, children, cfg.preserve_case))
                .collect::<Vec<_>>()
                .join("; ")
        }
        ReferentSource::NearestTexts => ordered_texts(evidence, cfg).join(" "),
    }
}

fn text_rank(a: (f64, &BBox, usize), b: (f64, &BBox, usize)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then_with(|| a.1.reading_order(b.1))
        .then(a.2.cmp(&b.2))
}

/// Present input channels in precedence order.
pub fn channels(snap: &InputSnapshot, precedence: InputPrecedence) -> Vec<(Channel, PixelPoint)> {
    let gaze = Some((Channel::Gaze, snap.gaze_px));
    let point = snap.point_px.map(|p| (Channel::Pointing, p));
    let ordered = match precedence {
        InputPrecedence::PointingFirst => [point, gaze],
        InputPrecedence::GazeFirst => [gaze, point],
    };
    ordered.into_iter().flatten().collect()
}

fn children_text(node: &ParentNode) -> Vec<String> {
    node.children.iter().map(|t| t.text.clone()).collect()
}

/// Smallest parent containing `point`, plus evidence for every container.
fn parent_under(
    scene: &SceneGraph,
    channel: Channel,
    point: PixelPoint,
    faces_only: bool,
) -> (Option<usize>, Vec<Evidence>) {
    let hits: Vec<usize> = scene
        .parents
        .iter()
        .enumerate()
        .filter(|(_, p)| !faces_only || p.entity.kind == EntityKind::Face)
        .filter(|(_, p)| p.entity.bbox.contains(&point))
        .map(|(i, _)| i)
        .collect();
    let best = hits.iter().copied().min_by(|&a, &b| {
        scene.parents[a]
            .entity
            .bbox
            .area()
            .total_cmp(&scene.parents[b].entity.bbox.area())
            .then(a.cmp(&b))
    });
    let evidence = hits
        .into_iter()
        .map(|i| {
            let p = &scene.parents[i];
            Evidence::ParentContains {
                channel,
                point,
                parent: i,
                entity_kind: p.entity.kind,
                label: p.entity.label.clone(),
                children: children_text(p),
                bbox: p.entity.bbox,
                area: p.entity.bbox.area(),
                chosen: false,
            }
        })
        .collect();
    (best, evidence)
}

fn mark_parent_chosen(evidence: &mut [Evidence], channel_hit: Channel, index: usize) {
    for e in evidence.iter_mut() {
        if let Evidence::ParentContains {
            channel,
            parent,
            chosen,
            ..
        } = e
        {
            if *channel == channel_hit && *parent == index {
                *chosen = true;
            }
        }
    }
}

/// Nearest texts per channel, unioned; the closest `nearest_k` are chosen.
fn nearest_text_evidence(scene: &SceneGraph, snap: &InputSnapshot, cfg: &ResolverConfig) -> Vec<Evidence> {
    let mut evidence = Vec::new();
    // per-text minimum distance across channels
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for (channel, point) in channels(snap, cfg.input_precedence) {
        let mut ranked: Vec<(usize, f64)> = scene
            .texts
            .iter()
            .enumerate()
            .map(|(i, t)| (i, t.bbox.center().distance(&point)))
            .collect();
        ranked.sort_by(|a, b| {
            text_rank(
                (a.1, &scene.texts[a.0].bbox, a.0),
                (b.1, &scene.texts[b.0].bbox, b.0),
            )
        });
        for &(i, d) in ranked.iter().take(cfg.nearest_k) {
            let t: &OcrText = &scene.texts[i];
            evidence.push(Evidence::TextDistance {
                channel,
                point,
                text_index: i,
                text: t.text.clone(),
                bbox: t.bbox,
                distance: d,
                chosen: false,
            });
            let e = best.entry(i).or_insert(d);
            if d < *e {
                *e = d;
            }
        }
    }
    let mut union: Vec<(usize, f64)> = best.into_iter().collect();
    union.sort_by(|a, b| {
        text_rank(
            (a.1, &scene.texts[a.0].bbox, a.0),
            (b.1, &scene.texts[b.0].bbox, b.0),
        )
    });
    union.truncate(cfg.nearest_k);
    for e in evidence.iter_mut() {
        if let Evidence::TextDistance {
            text_index,
            distance,
            chosen,
            ..
        } = e
        {
            *chosen = union.iter().any(|(i, d)| i == text_index && d == distance);
        }
    }
    evidence
}

/// Resolve a singular pronoun against the scene.
pub fn resolve_singular(
    m: &PronounMatch,
    scene: &SceneGraph,
    snap: &InputSnapshot,
    history: &ConversationHistory,
    cfg: &ResolverConfig,
) -> ResolvedReferent {
    let person = m.strategy == ResolutionStrategy::PersonEntity;
    let mut evidence = Vec::new();
    let mut hit = None;
    for (channel, point) in channels(snap, cfg.input_precedence) {
        let (best, ev) = parent_under(scene, channel, point, person);
        evidence.extend(ev);
        if hit.is_none() {
            hit = best.map(|i| (channel, i));
        }
    }
    if let Some((channel, index)) = hit {
        mark_parent_chosen(&mut evidence, channel, index);
        let source = if person {
            ReferentSource::PersonEntity
        } else {
            ReferentSource::ParentHit
        };
        return ResolvedReferent::from_evidence(source, evidence, cfg);
    }

    if m.strategy == ResolutionStrategy::SceneOrHistory {
        if let Some(last) = history.last() {
            evidence.push(Evidence::PreviousAnswer {
                answer: last.answer.clone(),
                chosen: true,
            });
            return ResolvedReferent::from_evidence(ReferentSource::History, evidence, cfg);
        }
    }

    evidence.extend(nearest_text_evidence(scene, snap, cfg));
    ResolvedReferent::from_evidence(ReferentSource::NearestTexts, evidence, cfg)
}

/// Resolve a plural pronoun: every parent mostly inside an expanded region.
pub fn resolve_plural(
    m: &PronounMatch,
    scene: &SceneGraph,
    snap: &InputSnapshot,
    cfg: &ResolverConfig,
) -> ResolvedReferent {
    let faces_only = m.strategy == ResolutionStrategy::PersonEntity;
    let mut evidence = Vec::new();
    let mut any = false;
    for (channel, point) in channels(snap, cfg.input_precedence) {
        let region = expand_region(point, &scene.frame, cfg.plural_region);
        for (i, p) in scene.parents.iter().enumerate() {
            if faces_only && p.entity.kind != EntityKind::Face {
                continue;
            }
            let ratio = overlap_ratio_with(&p.entity.bbox, &region, cfg.scene.overlap_mode).unwrap_or(0.0);
            if ratio <= 0.0 {
                continue;
            }
            let chosen = ratio >= cfg.scene.overlap_threshold;
            any |= chosen;
            evidence.push(Evidence::RegionOverlap {
                channel,
                region,
                parent: i,
                entity_kind: p.entity.kind,
                label: p.entity.label.clone(),
                children: children_text(p),
                bbox: p.entity.bbox,
                ratio,
                chosen,
            });
        }
    }
    if any {
        let source = if faces_only {
            ReferentSource::PersonEntity
        } else {
            ReferentSource::ParentHit
        };
        return ResolvedReferent::from_evidence(source, evidence, cfg);
    }
    evidence.extend(nearest_text_evidence(scene, snap, cfg));
    ResolvedReferent::from_evidence(ReferentSource::NearestTexts, evidence, cfg)
}

/// Route a single match to the singular or plural path.
pub fn resolve_one(
    m: &PronounMatch,
    scene: &SceneGraph,
    snap: &InputSnapshot,
    history: &ConversationHistory,
    cfg: &ResolverConfig,
) -> ResolvedReferent {
    if m.is_plural() {
        resolve_plural(m, scene, snap, cfg)
    } else {
        resolve_singular(m, scene, snap, history, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Resolved(ResolvedReferent),
    /// Only one pronoun per query is replaced in v1.
    Unsupported,
    /// Left for the language model (v2).
    Deferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub pronoun: PronounMatch,
    pub outcome: Outcome,
}

impl Resolution {
    pub fn referent(&self) -> Option<&ResolvedReferent> {
        match &self.outcome {
            Outcome::Resolved(r) => Some(r),
            _ => None,
        }
    }
}

/// v1 resolves the first match and flags the rest; v2 defers all of them.
pub fn resolve(
    matches: &[PronounMatch],
    scene: &SceneGraph,
    snap: &InputSnapshot,
    history: &ConversationHistory,
    cfg: &ResolverConfig,
    mode: GeneratorMode,
) -> Vec<Resolution> {
    matches
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let outcome = match (mode, i) {
                (GeneratorMode::V2, _) => Outcome::Deferred,
                (GeneratorMode::V1, 0) => Outcome::Resolved(resolve_one(m, scene, snap, history, cfg)),
                (GeneratorMode::V1, _) => Outcome::Unsupported,
            };
            Resolution {
                pronoun: m.clone(),
                outcome,
            }
        })
        .collect()
}

/// Scene context around the user's inputs, used by the v2 prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearbyContext {
    /// Phrase for the parent under the highest-precedence input, if any.
    pub target: Option<String>,
    /// Nearest texts, closest first.
    pub texts: Vec<String>,
}

impl NearbyContext {
    pub fn is_empty(&self) -> bool {
        self.target.is_none() && self.texts.is_empty()
    }
}

pub fn nearby_context(scene: &SceneGraph, snap: &InputSnapshot, cfg: &ResolverConfig) -> NearbyContext {
    let target = channels(snap, cfg.input_precedence)
        .into_iter()
        .find_map(|(channel, point)| parent_under(scene, channel, point, false).0)
        .map(|i| {
            let p = &scene.parents[i];
            parent_phrase(p.entity.kind, &p.entity.label, &children_text(p), cfg.preserve_case)
        });
    let texts = ordered_texts(&nearest_text_evidence(scene, snap, cfg), cfg);
    NearbyContext { target, texts }
}

/// Chosen texts, deduplicated, closest first.
fn ordered_texts(evidence: &[Evidence], cfg: &ResolverConfig) -> Vec<String> {
    let mut best: BTreeMap<usize, (f64, BBox, String)> = BTreeMap::new();
    for e in evidence.iter().filter(|e| e.chosen()) {
        if let Evidence::TextDistance {
            text_index,
            text,
            bbox,
            distance,
            ..
        } = e
        {
            let entry = best
                .entry(*text_index)
                .or_insert((*distance, *bbox, text.clone()));
            if *distance < entry.0 {
                entry.0 = *distance;
            }
        }
    }
    let mut ranked: Vec<_> = best.into_iter().collect();
    ranked.sort_by(|a, b| text_rank((a.1 .0, &a.1 .1, a.0), (b.1 .0, &b.1 .1, b.0)));
    ranked
        .into_iter()
        .take(cfg.nearest_k)
        .map(|(_, (_, _, t))| cased(&t, cfg.preserve_case))
        .collect()
}
