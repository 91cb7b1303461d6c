//! Gaze- and pointing-aware pronoun disambiguation for voice queries.
//!
//! A query such as "How much is this?" is scanned for referential pronouns
//! ([`taxonomy`]). The captured frame's detections are organised into a
//! parent/child [`scene`] graph, the user's gaze and pointing are reduced to
//! pixel coordinates ([`capture`]), and the [`resolver`] turns those into a
//! phrase describing the referent. The [`assembler`] then builds the payload
//! for a chat backend, either by splicing the phrase into the query (v1) or by
//! rendering an engineered prompt (v2).

pub mod assembler;
pub mod capture;
pub mod corpus;
pub mod history;
pub mod resolver;
pub mod scene;
pub mod taxonomy;

pub use assembler::{assemble_v1, assemble_v2, AssembledQuery, AssemblyMode};
pub use capture::{project, snapshot, CameraModel, GazeSample, InputSnapshot, PointingSample};
pub use corpus::{compute_stats, load_corpus, CorpusEntry, CorpusStats};
pub use history::{push_history, ConversationHistory, HISTORY_CAPACITY};
pub use resolver::{
    resolve, resolve_plural, resolve_singular, GeneratorMode, ReferentSource, ResolvedReferent,
    ResolverConfig,
};
pub use scene::{
    associate, expand_plural_region, nearest_texts, overlap_ratio, BBox, DetectedEntity,
    FrameMeta, OcrText, PixelPoint, SceneFixture, SceneGraph,
};
pub use taxonomy::{classify, detect_pronouns, PronounMatch};

/// Reply used whenever no referent or completion is available.
pub const FALLBACK_SENTENCE: &str = "Sorry, I did not understand your question.";
