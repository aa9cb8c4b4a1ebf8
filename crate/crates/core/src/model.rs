//! Shared domain types.
//!
//! Every type here is an immutable value object with a canonical JSON form
//! (snake_case field names). The store, the HTTP API and the exports all use
//! these encodings.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// UTC epoch milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn millis(self) -> i64 {
        self.0
    }

    /// Milliseconds elapsed since `earlier`; negative when `self` precedes it.
    pub fn since(self, earlier: Timestamp) -> i64 {
        self.0 - earlier.0
    }
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(
    /// Opaque script identifier.
    ScriptId
);
string_id!(
    /// Pseudonymized participant token issued at enrollment.
    ParticipantId
);
string_id!(SessionId);
string_id!(EntryId);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} '{value}'")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub value: String,
}

/// Production phase that steers what the daily questions focus on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RehearsalStage {
    ScriptAnalysis,
    StandingReading,
    SceneDetail,
    RunThrough,
    PerformanceOther,
}

impl RehearsalStage {
    pub const ALL: [RehearsalStage; 5] = [
        RehearsalStage::ScriptAnalysis,
        RehearsalStage::StandingReading,
        RehearsalStage::SceneDetail,
        RehearsalStage::RunThrough,
        RehearsalStage::PerformanceOther,
    ];

    /// Human label, matching the branch names of the question prompt.
    pub fn label(self) -> &'static str {
        match self {
            RehearsalStage::ScriptAnalysis => "Script Analysis / Table Work",
            RehearsalStage::StandingReading => "Standing Reading / Pre-blocking",
            RehearsalStage::SceneDetail => "Scene Detail Work",
            RehearsalStage::RunThrough => "Run-through",
            RehearsalStage::PerformanceOther => "Performance / Other",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RehearsalStage::ScriptAnalysis => "script_analysis",
            RehearsalStage::StandingReading => "standing_reading",
            RehearsalStage::SceneDetail => "scene_detail",
            RehearsalStage::RunThrough => "run_through",
            RehearsalStage::PerformanceOther => "performance_other",
        }
    }
}

impl FromStr for RehearsalStage {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RehearsalStage::ALL
            .into_iter()
            .find(|stage| stage.as_str() == s)
            .ok_or_else(|| ParseEnumError {
                kind: "rehearsal stage",
                value: s.to_string(),
            })
    }
}

impl fmt::Display for RehearsalStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub id: ScriptId,
    pub title: String,
    pub raw_text: String,
    pub summary: Option<String>,
    pub ingested_at: Timestamp,
}

/// A character as named in the script, with a short description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleProfile {
    pub script_id: ScriptId,
    /// Verbatim spelling from the script; never case-folded.
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterProfile {
    pub role: RoleProfile,
    pub profile_text: String,
    pub generated_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionContext {
    pub script_id: ScriptId,
    pub role_name: String,
    pub stage: RehearsalStage,
    /// Performance date.
    pub d_day: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThemeCategory {
    Concretization,
    EmotionalExploration,
    BackstoryCompletion,
    RelationshipsChange,
    ExtremeScenarios,
    Unlabeled,
}

impl fmt::Display for ThemeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ThemeCategory::Concretization => "concretization",
            ThemeCategory::EmotionalExploration => "emotional_exploration",
            ThemeCategory::BackstoryCompletion => "backstory_completion",
            ThemeCategory::RelationshipsChange => "relationships_change",
            ThemeCategory::ExtremeScenarios => "extreme_scenarios",
            ThemeCategory::Unlabeled => "unlabeled",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionCard {
    pub text: String,
    pub theme: ThemeCategory,
    pub generated_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub cards: Vec<QuestionCard>,
    pub context_fingerprint: String,
}

impl QuestionSet {
    pub const SIZE: usize = 3;

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.cards.iter().map(|c| c.text.as_str())
    }

    pub fn normalized_texts(&self) -> Vec<String> {
        self.texts().map(normalize_question_text).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "ai")]
    AiAssisted,
    #[serde(rename = "unassisted")]
    Unassisted,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::AiAssisted => "ai",
            Condition::Unassisted => "unassisted",
        }
    }
}

impl FromStr for Condition {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ai" => Ok(Condition::AiAssisted),
            "unassisted" => Ok(Condition::Unassisted),
            _ => Err(ParseEnumError {
                kind: "condition",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-session telemetry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub session_id: SessionId,
    pub participant_id: ParticipantId,
    pub date: NaiveDate,
    pub condition: Condition,
    pub questions_presented: Option<QuestionSet>,
    pub selected_index: Option<u8>,
    pub edited: bool,
    pub opened_at: Timestamp,
    pub first_keystroke_at: Option<Timestamp>,
    pub saved_at: Option<Timestamp>,
    pub start_delay_ms: Option<u64>,
    pub duration_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogViolation {
    ConditionWithoutQuestions,
    QuestionsWithoutCondition,
    SelectionWithoutQuestions,
    SelectionOutOfRange(u8),
    StartDelayMismatch,
    DurationMismatch,
    NegativeDelay,
}

impl SessionLog {
    pub fn is_closed(&self) -> bool {
        self.saved_at.is_some()
    }

    /// Checks the cross-field invariants; empty means valid.
    pub fn violations(&self) -> Vec<LogViolation> {
        let mut out = Vec::new();
        match (self.condition, &self.questions_presented) {
            (Condition::AiAssisted, None) => out.push(LogViolation::ConditionWithoutQuestions),
            (Condition::Unassisted, Some(_)) => out.push(LogViolation::QuestionsWithoutCondition),
            _ => {}
        }
        if let Some(idx) = self.selected_index {
            match &self.questions_presented {
                None => out.push(LogViolation::SelectionWithoutQuestions),
                Some(qs) if usize::from(idx) >= qs.cards.len() => {
                    out.push(LogViolation::SelectionOutOfRange(idx))
                }
                Some(_) => {}
            }
        }
        match (self.first_keystroke_at, self.start_delay_ms) {
            (Some(t), Some(d)) => {
                let delta = t.since(self.opened_at);
                if delta < 0 {
                    out.push(LogViolation::NegativeDelay);
                } else if delta as u64 != d {
                    out.push(LogViolation::StartDelayMismatch);
                }
            }
            (None, None) => {}
            _ => out.push(LogViolation::StartDelayMismatch),
        }
        match (self.saved_at, self.duration_ms) {
            (Some(t), Some(d)) => {
                let delta = t.since(self.opened_at);
                if delta < 0 {
                    out.push(LogViolation::NegativeDelay);
                } else if delta as u64 != d {
                    out.push(LogViolation::DurationMismatch);
                }
            }
            (None, None) => {}
            _ => out.push(LogViolation::DurationMismatch),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub entry_id: EntryId,
    pub session_id: SessionId,
    pub final_text: String,
    pub selected_question: Option<String>,
    pub created_at: Timestamp,
    pub updated_at: Timestamp,
}

/// Ways a question set can break its contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuestionViolation {
    WrongCount(usize),
    EmptyCard(usize),
    DuplicateCard(usize, usize),
    MultiLineCard(usize),
}

impl fmt::Display for QuestionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuestionViolation::WrongCount(n) => write!(f, "WrongCount({n})"),
            QuestionViolation::EmptyCard(i) => write!(f, "EmptyCard({i})"),
            QuestionViolation::DuplicateCard(i, j) => write!(f, "DuplicateCard({i},{j})"),
            QuestionViolation::MultiLineCard(i) => write!(f, "MultiLineCard({i})"),
        }
    }
}

pub fn validate_question_set(qs: &QuestionSet) -> Result<(), Vec<QuestionViolation>> {
    let mut out = Vec::new();
    if qs.cards.len() != QuestionSet::SIZE {
        out.push(QuestionViolation::WrongCount(qs.cards.len()));
    }
    let normalized = qs.normalized_texts();
    for (i, card) in qs.cards.iter().enumerate() {
        if card.text.trim().is_empty() {
            out.push(QuestionViolation::EmptyCard(i));
        }
        if card.text.contains(['\n', '\r']) {
            out.push(QuestionViolation::MultiLineCard(i));
        }
        for j in 0..i {
            if !normalized[i].is_empty() && normalized[i] == normalized[j] {
                out.push(QuestionViolation::DuplicateCard(j, i));
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn is_terminal_punct(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | '…' | '。' | '？' | '！')
}

/// Canonical form used for question equality: lowercase, trimmed, single
/// spaces, no terminal punctuation.
pub fn normalize_question_text(text: &str) -> String {
    let collapsed = text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    collapsed
        .trim_end_matches(|c: char| is_terminal_punct(c) || c.is_whitespace())
        .to_string()
}
