//! Scene representation for a captured frame.
//!
//! Object and face detections form the parent layer; OCR results are attached
//! to every parent they overlap by at least the configured ratio. Each parent
//! keeps at most [`SceneConfig::max_children`] texts, largest box first, since
//! product and brand names tend to be printed larger than fine print.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("degenerate box {0:?}: zero area")]
    DegenerateBox(BBox),
    #[error("invalid box {0:?}: min must be below max")]
    InvalidBox([f64; 4]),
    #[error("box {bbox:?} lies outside the {width}x{height} frame")]
    OutOfFrame { bbox: BBox, width: u32, height: u32 },
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyFrame { width: u32, height: u32 },
    #[error("confidence {0} outside [0, 1]")]
    Confidence(f64),
    #[error("OCR text must be non-empty")]
    EmptyText,
    #[error("reading fixture {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing fixture: {0}")]
    Json(#[from] serde_json::Error),
}

/// A point in frame pixel coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for PixelPoint {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<PixelPoint> for [f64; 2] {
    fn from(p: PixelPoint) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned box `[x_min, y_min, x_max, y_max]` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, SceneError> {
        let ok = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite())
            && x_min < x_max
            && y_min < y_max;
        if !ok {
            return Err(SceneError::InvalidBox([x_min, y_min, x_max, y_max]));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// Inclusive containment.
    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x_min >= self.x_min
            && other.y_min >= self.y_min
            && other.x_max <= self.x_max
            && other.y_max <= self.y_max
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Top-left-first ordering used for tie-breaks.
    pub fn reading_order(&self, other: &BBox) -> Ordering {
        self.y_min
            .total_cmp(&other.y_min)
            .then(self.x_min.total_cmp(&other.x_min))
            .then(self.y_max.total_cmp(&other.y_max))
            .then(self.x_max.total_cmp(&other.x_max))
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = SceneError;

    fn try_from([a, b, c, d]: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(a, b, c, d)
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// Denominator used by [`overlap_ratio_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// Intersection over the area of the first ("child") box.
    #[default]
    ChildArea,
    /// Intersection over union.
    Iou,
}

/// Fraction of `child` covered by `parent`.
pub fn overlap_ratio(child: &BBox, parent: &BBox) -> Result<f64, SceneError> {
    overlap_ratio_with(child, parent, OverlapMode::ChildArea)
}

pub fn overlap_ratio_with(child: &BBox, parent: &BBox, mode: OverlapMode) -> Result<f64, SceneError> {
    let child_area = child.area();
    if child_area <= 0.0 {
        return Err(SceneError::DegenerateBox(*child));
    }
    let inter = child.intersection_area(parent);
    let ratio = match mode {
        OverlapMode::ChildArea => inter / child_area,
        OverlapMode::Iou => inter / (child_area + parent.area() - inter),
    };
    Ok(ratio.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub width: u32,
    pub height: u32,
    /// Milliseconds since the Unix epoch.
    #[serde(default)]
    pub captured_at_ms: u64,
    /// Pixel data is purged once the query has been answered.
    #[serde(default = "default_true")]
    pub ephemeral: bool,
}

fn default_true() -> bool {
    true
}

impl FrameMeta {
    pub fn new(width: u32, height: u32) -> Result<Self, SceneError> {
        if width == 0 || height == 0 {
            return Err(SceneError::EmptyFrame { width, height });
        }
        Ok(Self {
            width,
            height,
            captured_at_ms: 0,
            ephemeral: true,
        })
    }

    pub fn bounds(&self) -> BBox {
        BBox {
            x_min: 0.0,
            y_min: 0.0,
            x_max: self.width as f64,
            y_max: self.height as f64,
        }
    }

    pub fn clamp(&self, p: PixelPoint) -> PixelPoint {
        PixelPoint::new(
            p.x.clamp(0.0, self.width as f64),
            p.y.clamp(0.0, self.height as f64),
        )
    }

    fn check(&self, bbox: &BBox) -> Result<(), SceneError> {
        if self.bounds().contains_box(bbox) {
            Ok(())
        } else {
            Err(SceneError::OutOfFrame {
                bbox: *bbox,
                width: self.width,
                height: self.height,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Object,
    Face,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedEntity {
    pub kind: EntityKind,
    /// Object class, or the recognised person's name for faces.
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrText {
    pub text: String,
    pub confidence: f64,
    pub bbox: BBox,
}

fn canonical_entity_order(a: &DetectedEntity, b: &DetectedEntity) -> Ordering {
    a.bbox
        .reading_order(&b.bbox)
        .then(a.kind.cmp(&b.kind))
        .then_with(|| a.label.cmp(&b.label))
        .then(a.confidence.total_cmp(&b.confidence))
}

fn canonical_text_order(a: &OcrText, b: &OcrText) -> Ordering {
    a.bbox
        .reading_order(&b.bbox)
        .then_with(|| a.text.cmp(&b.text))
        .then(a.confidence.total_cmp(&b.confidence))
}

/// Larger area first, reading order on ties.
fn child_rank(a: &OcrText, b: &OcrText) -> Ordering {
    b.bbox
        .area()
        .total_cmp(&a.bbox.area())
        .then_with(|| canonical_text_order(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub overlap_threshold: f64,
    pub max_children: usize,
    pub overlap_mode: OverlapMode,
    /// Attach each text only to its best-overlapping parent.
    pub exclusive_children: bool,
    /// Detections and texts below this confidence are dropped.
    pub min_confidence: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            overlap_threshold: 0.70,
            max_children: 5,
            overlap_mode: OverlapMode::ChildArea,
            exclusive_children: false,
            min_confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentNode {
    pub entity: DetectedEntity,
    /// Largest area first, at most `max_children` long.
    pub children: Vec<OcrText>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub frame: FrameMeta,
    /// Parents in canonical reading order.
    pub parents: Vec<ParentNode>,
    /// Texts that ended up under no parent, in reading order.
    pub orphan_texts: Vec<OcrText>,
    /// Every accepted OCR result in reading order, attached or not.
    pub texts: Vec<OcrText>,
}

impl SceneGraph {
    pub fn empty(frame: FrameMeta) -> Self {
        Self {
            frame,
            parents: Vec::new(),
            orphan_texts: Vec::new(),
            texts: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty() && self.texts.is_empty()
    }
}

/// Build the parent/child hierarchy.
///
/// Inputs are sorted into a canonical order first, so the result does not
/// depend on the order the backends returned them in.
pub fn associate(
    entities: &[DetectedEntity],
    texts: &[OcrText],
    frame: FrameMeta,
    config: &SceneConfig,
) -> SceneGraph {
    let mut entities: Vec<DetectedEntity> = entities
        .iter()
        .filter(|e| e.confidence >= config.min_confidence && e.bbox.area() > 0.0)
        .cloned()
        .collect();
    entities.sort_by(canonical_entity_order);
    let mut texts: Vec<OcrText> = texts
        .iter()
        .filter(|t| t.confidence >= config.min_confidence && t.bbox.area() > 0.0)
        .cloned()
        .collect();
    texts.sort_by(canonical_text_order);

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); entities.len()];
    for (ti, text) in texts.iter().enumerate() {
        let ratios = entities.iter().map(|e| {
            overlap_ratio_with(&text.bbox, &e.bbox, config.overlap_mode).unwrap_or(0.0)
        });
        let qualifying: Vec<(usize, f64)> = ratios
            .enumerate()
            .filter(|(_, r)| *r >= config.overlap_threshold)
            .collect();
        if config.exclusive_children {
            // first (canonical) parent wins on equal overlap
            let best = qualifying
                .iter()
                .copied()
                .reduce(|best, cur| if cur.1 > best.1 { cur } else { best });
            if let Some((pi, _)) = best {
                buckets[pi].push(ti);
            }
        } else {
            for (pi, _) in qualifying {
                buckets[pi].push(ti);
            }
        }
    }

    let mut attached = vec![false; texts.len()];
    let parents = entities
        .into_iter()
        .zip(buckets)
        .map(|(entity, mut idx)| {
            idx.sort_by(|&a, &b| child_rank(&texts[a], &texts[b]));
            idx.truncate(config.max_children);
            for &i in &idx {
                attached[i] = true;
            }
            ParentNode {
                entity,
                children: idx.into_iter().map(|i| texts[i].clone()).collect(),
            }
        })
        .collect();

    let orphan_texts = texts
        .iter()
        .zip(&attached)
        .filter(|(_, a)| !**a)
        .map(|(t, _)| t.clone())
        .collect();

    SceneGraph {
        frame,
        parents,
        orphan_texts,
        texts,
    }
}

/// Up to `k` texts whose box centres are nearest to `origin`, ascending.
pub fn nearest_texts(origin: PixelPoint, texts: &[OcrText], k: usize) -> Vec<&OcrText> {
    let mut ranked: Vec<(f64, &OcrText)> = texts
        .iter()
        .map(|t| (t.bbox.center().distance(&origin), t))
        .collect();
    ranked.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| canonical_text_order(a.1, b.1))
    });
    ranked.into_iter().take(k).map(|(_, t)| t).collect()
}

/// Half-width by half-height box centred on `origin`, clipped to the frame.
pub fn expand_plural_region(origin: PixelPoint, frame: &FrameMeta) -> BBox {
    expand_region(origin, frame, (0.5, 0.5))
}

/// Box of `fraction` times the frame size centred on `origin`, clipped to
/// the frame.
pub fn expand_region(origin: PixelPoint, frame: &FrameMeta, fraction: (f64, f64)) -> BBox {
    let origin = frame.clamp(origin);
    let half_w = frame.width as f64 * fraction.0 / 2.0;
    let half_h = frame.height as f64 * fraction.1 / 2.0;
    BBox {
        x_min: (origin.x - half_w).max(0.0),
        y_min: (origin.y - half_h).max(0.0),
        x_max: (origin.x + half_w).min(frame.width as f64),
        y_max: (origin.y + half_h).min(frame.height as f64),
    }
}

/// On-disk scene fixture: frame size plus detector, face and OCR output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFixture {
    pub frame: FixtureFrame,
    #[serde(default)]
    pub objects: Vec<FixtureObject>,
    #[serde(default)]
    pub faces: Vec<FixtureFace>,
    #[serde(default)]
    pub texts: Vec<FixtureText>,
    /// Keep backend casing in generated phrases for this scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preserve_case: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureFrame {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureObject {
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFace {
    pub name: String,
    pub confidence: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureText {
    pub text: String,
    pub confidence: f64,
    pub bbox: BBox,
}

impl SceneFixture {
    pub fn from_json(json: &str) -> Result<Self, SceneError> {
        let fixture: SceneFixture = serde_json::from_str(json)?;
        fixture.validate()?;
        Ok(fixture)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&json)
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            frame: FixtureFrame { width, height },
            objects: Vec::new(),
            faces: Vec::new(),
            texts: Vec::new(),
            preserve_case: None,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let frame = self.frame_meta()?;
        let boxes = self
            .objects
            .iter()
            .map(|o| (o.confidence, &o.bbox))
            .chain(self.faces.iter().map(|f| (f.confidence, &f.bbox)))
            .chain(self.texts.iter().map(|t| (t.confidence, &t.bbox)));
        for (confidence, bbox) in boxes {
            if !(0.0..=1.0).contains(&confidence) {
                return Err(SceneError::Confidence(confidence));
            }
            frame.check(bbox)?;
        }
        if self.texts.iter().any(|t| t.text.is_empty()) {
            return Err(SceneError::EmptyText);
        }
        Ok(())
    }

    pub fn frame_meta(&self) -> Result<FrameMeta, SceneError> {
        FrameMeta::new(self.frame.width, self.frame.height)
    }

    pub fn objects(&self) -> Vec<DetectedEntity> {
        self.objects
            .iter()
            .map(|o| DetectedEntity {
                kind: EntityKind::Object,
                label: o.label.clone(),
                confidence: o.confidence,
                bbox: o.bbox,
            })
            .collect()
    }

    pub fn faces(&self) -> Vec<DetectedEntity> {
        self.faces
            .iter()
            .map(|f| DetectedEntity {
                kind: EntityKind::Face,
                label: f.name.clone(),
                confidence: f.confidence,
                bbox: f.bbox,
            })
            .collect()
    }

    pub fn ocr_texts(&self) -> Vec<OcrText> {
        self.texts
            .iter()
            .map(|t| OcrText {
                text: t.text.clone(),
                confidence: t.confidence,
                bbox: t.bbox,
            })
            .collect()
    }

    /// Associate the fixture's detections directly, bypassing any backend.
    pub fn to_scene(&self, config: &SceneConfig) -> Result<SceneGraph, SceneError> {
        let mut entities = self.objects();
        entities.extend(self.faces());
        Ok(associate(&entities, &self.ocr_texts(), self.frame_meta()?, config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(a: f64, b: f64, c: f64, d: f64) -> BBox {
        BBox::new(a, b, c, d).unwrap()
    }

    fn text(t: &str, b: BBox) -> OcrText {
        OcrText {
            text: t.into(),
            confidence: 0.9,
            bbox: b,
        }
    }

    fn object(label: &str, b: BBox) -> DetectedEntity {
        DetectedEntity {
            kind: EntityKind::Object,
            label: label.into(),
            confidence: 0.9,
            bbox: b,
        }
    }

    fn frame() -> FrameMeta {
        FrameMeta::new(1920, 1080).unwrap()
    }

    #[test]
    fn overlap_contained_and_disjoint() {
        assert_eq!(overlap_ratio(&bb(2., 2., 4., 4.), &bb(0., 0., 10., 10.)).unwrap(), 1.0);
        assert_eq!(overlap_ratio(&bb(0., 0., 1., 1.), &bb(5., 5., 6., 6.)).unwrap(), 0.0);
        assert_eq!(overlap_ratio(&bb(0., 0., 10., 10.), &bb(0., 0., 5., 10.)).unwrap(), 0.5);
    }

    #[test]
    fn overlap_degenerate_child() {
        let flat = BBox {
            x_min: 0.,
            y_min: 0.,
            x_max: 0.,
            y_max: 5.,
        };
        assert!(matches!(
            overlap_ratio(&flat, &bb(0., 0., 1., 1.)),
            Err(SceneError::DegenerateBox(_))
        ));
    }

    #[test]
    fn iou_mode() {
        let r = overlap_ratio_with(&bb(0., 0., 10., 10.), &bb(0., 0., 5., 10.), OverlapMode::Iou)
            .unwrap();
        assert_eq!(r, 0.5);
        let r = overlap_ratio_with(&bb(0., 0., 2., 2.), &bb(0., 0., 4., 4.), OverlapMode::Iou)
            .unwrap();
        assert_eq!(r, 0.25);
    }

    #[test]
    fn invalid_box_rejected() {
        assert!(BBox::new(5., 0., 5., 1.).is_err());
        assert!(serde_json::from_str::<BBox>("[10, 0, 0, 5]").is_err());
    }

    #[test]
    fn associate_caps_children_by_area() {
        let parent = object("shelf", bb(0., 0., 1000., 1000.));
        let texts: Vec<_> = (0..7)
            .map(|i| {
                let s = 10.0 + i as f64 * 10.0;
                text(&format!("t{i}"), bb(i as f64 * 100., 0., i as f64 * 100. + s, s))
            })
            .collect();
        let g = associate(&[parent], &texts, frame(), &SceneConfig::default());
        let kids: Vec<_> = g.parents[0].children.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(kids, ["t6", "t5", "t4", "t3", "t2"]);
        let orphans: Vec<_> = g.orphan_texts.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(orphans, ["t0", "t1"]);
        assert_eq!(g.texts.len(), 7);
    }

    #[test]
    fn below_threshold_is_orphan() {
        // 69 of 100 pixels inside
        let parent = object("box", bb(0., 0., 69., 100.));
        let t = text("label", bb(0., 0., 100., 1.));
        let g = associate(&[parent], &[t], frame(), &SceneConfig::default());
        assert!(g.parents[0].children.is_empty());
        assert_eq!(g.orphan_texts.len(), 1);
    }

    #[test]
    fn exactly_at_threshold_attaches() {
        let parent = object("box", bb(0., 0., 70., 100.));
        let t = text("label", bb(0., 0., 100., 1.));
        let g = associate(&[parent], &[t], frame(), &SceneConfig::default());
        assert_eq!(g.parents[0].children.len(), 1);
    }

    #[test]
    fn multi_and_exclusive_assignment() {
        let person = object("person", bb(0., 0., 1000., 1000.));
        let bottle = object("bottle", bb(100., 100., 300., 500.));
        let t = text("Mango", bb(150., 200., 250., 240.));
        let g = associate(&[person.clone(), bottle.clone()], std::slice::from_ref(&t), frame(), &SceneConfig::default());
        assert!(g.parents.iter().all(|p| p.children.len() == 1));

        let cfg = SceneConfig {
            exclusive_children: true,
            ..Default::default()
        };
        let g = associate(&[person, bottle], &[t], frame(), &cfg);
        let with_kids: Vec<_> = g
            .parents
            .iter()
            .filter(|p| !p.children.is_empty())
            .map(|p| p.entity.label.as_str())
            .collect();
        // both contain the text fully; canonical order puts the person first
        assert_eq!(with_kids, ["person"]);
    }

    #[test]
    fn confidence_filter() {
        let cfg = SceneConfig {
            min_confidence: 0.5,
            ..Default::default()
        };
        let mut weak = object("ghost", bb(0., 0., 10., 10.));
        weak.confidence = 0.2;
        let g = associate(&[weak], &[], frame(), &cfg);
        assert!(g.parents.is_empty());
    }

    #[test]
    fn nearest_texts_order_and_supply() {
        let texts = vec![
            text("far", bb(900., 900., 910., 910.)),
            text("near", bb(95., 95., 105., 105.)),
            text("mid", bb(300., 300., 310., 310.)),
        ];
        let got: Vec<_> = nearest_texts(PixelPoint::new(100., 100.), &texts, 5)
            .into_iter()
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(got, ["near", "mid", "far"]);
        assert_eq!(nearest_texts(PixelPoint::new(100., 100.), &texts, 1).len(), 1);
    }

    #[test]
    fn nearest_ties_use_reading_order() {
        let texts = vec![
            text("right", bb(110., 90., 130., 110.)),
            text("left", bb(70., 90., 90., 110.)),
            text("above", bb(90., 70., 110., 90.)),
        ];
        let got: Vec<_> = nearest_texts(PixelPoint::new(100., 100.), &texts, 3)
            .into_iter()
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(got, ["above", "left", "right"]);
    }

    #[test]
    fn plural_region_examples() {
        let f = frame();
        assert_eq!(
            expand_plural_region(PixelPoint::new(960., 540.), &f),
            bb(480., 270., 1440., 810.)
        );
        assert_eq!(
            expand_plural_region(PixelPoint::new(0., 0.), &f),
            bb(0., 0., 480., 270.)
        );
        let small = FrameMeta::new(100, 100).unwrap();
        assert_eq!(
            expand_plural_region(PixelPoint::new(50., 50.), &small),
            bb(25., 25., 75., 75.)
        );
        // outside the frame: clamped to the corner first
        assert_eq!(
            expand_plural_region(PixelPoint::new(-50., 5000.), &f),
            bb(0., 810., 480., 1080.)
        );
    }

    #[test]
    fn fixture_validation() {
        let bad = r#"{"frame":{"width":100,"height":100},"texts":[{"text":"x","confidence":0.5,"bbox":[0,0,200,10]}]}"#;
        assert!(matches!(SceneFixture::from_json(bad), Err(SceneError::OutOfFrame { .. })));
        let bad = r#"{"frame":{"width":100,"height":100},"objects":[{"label":"x","confidence":1.5,"bbox":[0,0,20,10]}]}"#;
        assert!(matches!(SceneFixture::from_json(bad), Err(SceneError::Confidence(_))));
        let bad = r#"{"frame":{"width":0,"height":100}}"#;
        assert!(matches!(SceneFixture::from_json(bad), Err(SceneError::EmptyFrame { .. })));
    }
}
