//! Bounded query/answer history for one session.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Number of query/answer pairs kept per session.
pub const HISTORY_CAPACITY: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub query: String,
    pub answer: String,
}

/// Oldest-first ring of at most [`HISTORY_CAPACITY`] exchanges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConversationHistory {
    turns: VecDeque<Exchange>,
}

impl ConversationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, query: impl Into<String>, answer: impl Into<String>) {
        if self.turns.len() == HISTORY_CAPACITY {
            self.turns.pop_front();
        }
        self.turns.push_back(Exchange {
            query: query.into(),
            answer: answer.into(),
        });
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Exchange> {
        self.turns.iter()
    }

    pub fn last(&self) -> Option<&Exchange> {
        self.turns.back()
    }

    /// `Q: ...` / `A: ...` lines, oldest first. Line breaks inside a
    /// query or answer are folded to spaces so each pair stays two lines.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for t in &self.turns {
            out.push_str("Q: ");
            out.push_str(&single_line(&t.query));
            out.push_str("\nA: ");
            out.push_str(&single_line(&t.answer));
            out.push('\n');
        }
        out
    }
}

/// Functional form of [`ConversationHistory::push`].
pub fn push_history(
    mut history: ConversationHistory,
    query: impl Into<String>,
    answer: impl Into<String>,
) -> ConversationHistory {
    history.push(query, answer);
    history
}

fn single_line(s: &str) -> String {
    s.split(['\r', '\n'])
        .filter(|part| !part.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}
