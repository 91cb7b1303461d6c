//! Bundled query corpora and pronoun usage statistics.
//!
//! Corpus files are JSON lines, one entry per line:
//!
//! ```json
//! {"source":"diary","speaker":"researcher","context":"Cafe","text":"Is this decaf?","satisfactory":false}
//! ```
//!
//! Bracketed annotations in `text` (`"Who wrote it [book]?"`) describe the
//! referent for the reader; they were not spoken and are excluded from
//! pronoun counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{scan, Mention, ResolutionStrategy, NON_REFERENTIAL_LEXEMES, TAXONOMY_LEXEMES};

/// Bucket that all slash forms (`s/he`, `him/her`, ...) are counted under.
pub const COMBINED_THIRD_PERSON: &str = "s/he|him/her";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusSource {
    Part1,
    Part2,
    Part3,
    Diary,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    source: CorpusSource,
    speaker: String,
    #[serde(default)]
    context: Option<String>,
    text: String,
    #[serde(default)]
    satisfactory: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub source: CorpusSource,
    pub speaker: String,
    /// Location, task or system the query was recorded under.
    pub context: Option<String>,
    /// Transcribed text including bracketed annotations.
    pub text: String,
    /// Spoken text with annotations removed.
    pub query: String,
    pub annotations: Vec<String>,
    pub satisfactory: Option<bool>,
}

/// Split `[...]` annotations out of a transcribed query.
pub fn split_annotations(text: &str) -> (String, Vec<String>) {
    let mut spoken = String::with_capacity(text.len());
    let mut notes = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let Some(close) = rest[open..].find(']') else {
            break;
        };
        spoken.push_str(&rest[..open]);
        notes.push(rest[open + 1..open + close].trim().to_string());
        rest = &rest[open + close + 1..];
    }
    spoken.push_str(rest);

    // collapse the gaps left behind
    let words: Vec<&str> = spoken.split_whitespace().collect();
    let mut out = String::with_capacity(spoken.len());
    for w in words {
        let punct_only = w.chars().all(|c| ".,!?;:".contains(c));
        if !out.is_empty() && !punct_only {
            out.push(' ');
        }
        out.push_str(w);
    }
    (out, notes)
}

/// Parse JSON-lines corpus text. Blank lines are ignored.
pub fn parse_corpus(jsonl: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut entries = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEntry = serde_json::from_str(line).map_err(|e| CorpusError::SchemaViolation {
            line: line_no,
            message: e.to_string(),
        })?;
        if raw.text.trim().is_empty() {
            return Err(CorpusError::SchemaViolation {
                line: line_no,
                message: "empty query text".into(),
            });
        }
        let (query, annotations) = split_annotations(&raw.text);
        entries.push(CorpusEntry {
            source: raw.source,
            speaker: raw.speaker,
            context: raw.context,
            text: raw.text,
            query,
            annotations,
            satisfactory: raw.satisfactory,
        });
    }
    Ok(entries)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// Corpora shipped with the crate.
pub mod bundled {
    use super::{parse_corpus, CorpusEntry, CorpusSource};

    pub const PART1: &str = include_str!("../corpus/part1.jsonl");
    pub const PART2: &str = include_str!("../corpus/part2.jsonl");
    pub const PART3: &str = include_str!("../corpus/part3.jsonl");
    pub const DIARY: &str = include_str!("../corpus/diary.jsonl");

    pub const PART1_ORACLE: &str = include_str!("../corpus/part1.oracle.json");
    pub const PART2_ORACLE: &str = include_str!("../corpus/part2.oracle.json");
    pub const PART3_ORACLE: &str = include_str!("../corpus/part3.oracle.json");
    pub const DIARY_ORACLE: &str = include_str!("../corpus/diary.oracle.json");

    pub const CHECKSUMS: &str = include_str!("../corpus/SHA256SUMS");

    /// Raw JSON-lines text of a bundled corpus.
    pub fn raw(source: CorpusSource) -> &'static str {
        match source {
            CorpusSource::Part1 => PART1,
            CorpusSource::Part2 => PART2,
            CorpusSource::Part3 => PART3,
            CorpusSource::Diary => DIARY,
        }
    }

    /// Hand-audited expected statistics for a bundled corpus.
    pub fn oracle(source: CorpusSource) -> &'static str {
        match source {
            CorpusSource::Part1 => PART1_ORACLE,
            CorpusSource::Part2 => PART2_ORACLE,
            CorpusSource::Part3 => PART3_ORACLE,
            CorpusSource::Diary => DIARY_ORACLE,
        }
    }

    pub fn file_name(source: CorpusSource) -> &'static str {
        match source {
            CorpusSource::Part1 => "part1.jsonl",
            CorpusSource::Part2 => "part2.jsonl",
            CorpusSource::Part3 => "part3.jsonl",
            CorpusSource::Diary => "diary.jsonl",
        }
    }

    pub fn load(source: CorpusSource) -> Vec<CorpusEntry> {
        parse_corpus(raw(source)).expect("bundled corpus is well-formed")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub entries: usize,
    /// Taxonomy lexemes, the combined slash bucket and the first/second
    /// person lexemes. Every key is present, zero counts included.
    pub lexemes: BTreeMap<String, usize>,
    pub strategies: BTreeMap<ResolutionStrategy, usize>,
    /// Queries with more than one taxonomy pronoun.
    pub multi_pronoun_queries: usize,
    /// Same, counting first and second person pronouns too.
    pub multi_pronoun_queries_incl_nonreferential: usize,
    /// Queries with no taxonomy pronoun at all.
    pub no_taxonomy_pronoun: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfactory: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unsatisfactory: Option<usize>,
}

impl CorpusStats {
    pub fn count(&self, lexeme: &str) -> usize {
        self.lexemes.get(lexeme).copied().unwrap_or(0)
    }

    /// Plain-text table, one lexeme per row.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16} {:>6}\n", "lexeme", "count");
        for (k, v) in &self.lexemes {
            out.push_str(&format!("{k:<16} {v:>6}\n"));
        }
        out.push_str(&format!("{:<16} {:>6}\n", "entries", self.entries));
        out.push_str(&format!("{:<16} {:>6}\n", "multi-pronoun", self.multi_pronoun_queries));
        out.push_str(&format!("{:<16} {:>6}\n", "no-pronoun", self.no_taxonomy_pronoun));
        if let (Some(s), Some(u)) = (self.satisfactory, self.unsatisfactory) {
            out.push_str(&format!("{:<16} {:>6}\n", "satisfactory", s));
            out.push_str(&format!("{:<16} {:>6}\n", "unsatisfactory", u));
        }
        out
    }
}

pub fn compute_stats(corpus: &[CorpusEntry]) -> CorpusStats {
    let mut lexemes: BTreeMap<String, usize> = TAXONOMY_LEXEMES
        .iter()
        .chain(NON_REFERENTIAL_LEXEMES.iter())
        .chain(std::iter::once(&COMBINED_THIRD_PERSON))
        .map(|k| (k.to_string(), 0))
        .collect();
    let mut strategies = BTreeMap::new();
    let mut multi = 0;
    let mut multi_all = 0;
    let mut none = 0;
    let mut sat = 0;
    let mut unsat = 0;
    let mut any_flag = false;

    for entry in corpus {
        let mentions = scan(&entry.query);
        let mut taxonomy = 0;
        for m in &mentions {
            let key = match m {
                Mention::Taxonomy(p) => {
                    taxonomy += 1;
                    *strategies.entry(p.strategy).or_insert(0) += 1;
                    if p.is_combined_form() {
                        COMBINED_THIRD_PERSON.to_string()
                    } else {
                        p.lexeme.clone()
                    }
                }
                Mention::NonReferential { lexeme, .. } => lexeme.clone(),
            };
            *lexemes.entry(key).or_insert(0) += 1;
        }
        multi += usize::from(taxonomy > 1);
        multi_all += usize::from(mentions.len() > 1);
        none += usize::from(taxonomy == 0);
        match entry.satisfactory {
            Some(true) => {
                sat += 1;
                any_flag = true;
            }
            Some(false) => {
                unsat += 1;
                any_flag = true;
            }
            None => {}
        }
    }

    CorpusStats {
        entries: corpus.len(),
        lexemes,
        strategies,
        multi_pronoun_queries: multi,
        multi_pronoun_queries_incl_nonreferential: multi_all,
        no_taxonomy_pronoun: none,
        satisfactory: any_flag.then_some(sat),
        unsatisfactory: any_flag.then_some(unsat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotations_are_split() {
        let (q, notes) = split_annotations("Can I put this [trash] in here [recyling trash bin]?");
        assert_eq!(q, "Can I put this in here?");
        assert_eq!(notes, ["trash", "recyling trash bin"]);
        let (q, notes) = split_annotations("What [dog] breed is s/he?");
        assert_eq!(q, "What breed is s/he?");
        assert_eq!(notes, ["dog"]);
        let (q, _) = split_annotations("no brackets here");
        assert_eq!(q, "no brackets here");
    }

    #[test]
    fn single_query_stats() {
        let c = parse_corpus(r#"{"source":"part2","speaker":"P3","text":"Is this correct?"}"#).unwrap();
        let s = compute_stats(&c);
        assert_eq!(s.count("this"), 1);
        assert_eq!(s.lexemes.values().sum::<usize>(), 1);
        assert_eq!(s.satisfactory, None);
    }

    #[test]
    fn annotation_pronouns_not_counted() {
        let c = parse_corpus(
            r#"{"source":"part3","speaker":"P1","text":"What is this [that thing I saw]?","satisfactory":true}"#,
        )
        .unwrap();
        let s = compute_stats(&c);
        assert_eq!(s.count("this"), 1);
        assert_eq!(s.count("that"), 0);
        assert_eq!(s.count("i"), 0);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let text = "{\"source\":\"diary\",\"speaker\":\"r\",\"text\":\"ok\"}\n\n{\"source\":\"diary\",\"text\":\"missing speaker\"}";
        match parse_corpus(text) {
            Err(CorpusError::SchemaViolation { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected schema violation, got {other:?}"),
        }
        let text = r#"{"source":"part9","speaker":"r","text":"ok"}"#;
        assert!(matches!(parse_corpus(text), Err(CorpusError::SchemaViolation { line: 1, .. })));
        let text = r#"{"source":"diary","speaker":"r","text":"  "}"#;
        assert!(matches!(parse_corpus(text), Err(CorpusError::SchemaViolation { line: 1, .. })));
    }

    #[test]
    fn bundled_sizes() {
        assert_eq!(bundled::load(CorpusSource::Part1).len(), 36);
        assert_eq!(bundled::load(CorpusSource::Part2).len(), 36);
        assert_eq!(bundled::load(CorpusSource::Part3).len(), 32);
        assert_eq!(bundled::load(CorpusSource::Diary).len(), 48);
    }
}
