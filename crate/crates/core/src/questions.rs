//! Stage-aware question generation with history-based dedup.

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::llm::{parse_question_response, Gateway, GatewayError, ProviderConfig, QuestionParseError, TemplateSet};
use crate::model::{
    normalize_question_text, CharacterProfile, ParticipantId, QuestionSet, RehearsalStage, RoleProfile, Script,
    Timestamp,
};
use crate::text::{tokenize, DefaultTokenizer, Lexicon};

/// Most recent questions sent back to the model per participant and role.
pub const HISTORY_WINDOW: usize = 60;
/// Regeneration rounds after the first attempt.
pub const MAX_REGENERATIONS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationContext {
    pub script_summary: String,
    pub role: RoleProfile,
    pub stage: RehearsalStage,
    pub d_day: NaiveDate,
    pub profile: CharacterProfile,
    /// Normalized prior question texts, most recent first.
    pub history: Vec<String>,
}

impl GenerationContext {
    /// Hex SHA-256 of the canonical JSON of the context.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("context serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Source of previously presented questions.
pub trait QuestionHistory {
    /// Normalized texts, most recent first, at most `limit`.
    fn recent_questions(&self, participant: &ParticipantId, role_name: &str, limit: usize) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuestionError {
    #[error("script has no summary yet; analyze it first")]
    MissingSummary,
    #[error("no character profile for role '{0}'")]
    MissingProfile(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Malformed(QuestionParseError),
}

pub fn assemble_context(
    script: &Script,
    role: &RoleProfile,
    stage: RehearsalStage,
    d_day: NaiveDate,
    profile: Option<&CharacterProfile>,
    participant: &ParticipantId,
    history: &dyn QuestionHistory,
) -> Result<GenerationContext, QuestionError> {
    let summary = script
        .summary
        .as_deref()
        .filter(|s| !s.trim().is_empty())
        .ok_or(QuestionError::MissingSummary)?;
    let profile = profile
        .filter(|p| p.role.name == role.name)
        .ok_or_else(|| QuestionError::MissingProfile(role.name.clone()))?;
    Ok(GenerationContext {
        script_summary: summary.to_string(),
        role: role.clone(),
        stage,
        d_day,
        profile: profile.clone(),
        history: history.recent_questions(participant, &role.name, HISTORY_WINDOW),
    })
}

/// The stage branch of the question prompt.
pub fn stage_focus(stage: RehearsalStage) -> &'static str {
    match stage {
        RehearsalStage::ScriptAnalysis => "facts, backstory, motivations, relationships, and given circumstances",
        RehearsalStage::StandingReading => "psychological reactions, justification for actions, and relational dynamics",
        RehearsalStage::SceneDetail => {
            "speech patterns, habits, attitudes, subtle emotional shifts, and external behaviors"
        }
        RehearsalStage::RunThrough => "emotional continuity, plausibility of backstory, and internal consistency",
        RehearsalStage::PerformanceOther => "Integrated reflection across emotion, history, relationships, and action",
    }
}

/// True when any token of the question is in the second-person lexicon.
pub fn check_second_person(question: &str, lexicon: &Lexicon) -> bool {
    let ts = tokenize(question, &DefaultTokenizer).expect("default tokenizer is infallible");
    ts.tokens.iter().any(|t| lexicon.contains(&t.surface))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenerationWarning {
    /// Every round collided with history; the last set is returned anyway.
    DuplicateAfterRetries { colliding: Vec<String> },
    /// A card without a second-person token (advisory only).
    SecondPersonViolation { card_index: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub set: QuestionSet,
    pub regenerations: u32,
    pub provider_calls: u32,
    pub warnings: Vec<GenerationWarning>,
}

#[derive(Debug, Clone)]
pub struct QuestionEngine {
    pub gateway: Gateway,
    pub templates: TemplateSet,
    pub second_person: Lexicon,
}

impl QuestionEngine {
    pub fn new(gateway: Gateway) -> Self {
        Self {
            gateway,
            templates: TemplateSet::default(),
            second_person: Lexicon::second_person(),
        }
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    /// Three questions none of which repeats `ctx.history`, regenerating the
    /// whole set up to [`MAX_REGENERATIONS`] times.
    pub fn generate_daily_questions(
        &self,
        ctx: &GenerationContext,
        cfg: &ProviderConfig,
        now: Timestamp,
    ) -> Result<Generated, QuestionError> {
        self.generate_avoiding(ctx.clone(), cfg, now)
    }

    /// A new set sharing no card with `current`. The replaced cards join the
    /// history sent to the model.
    pub fn refresh(
        &self,
        ctx: &GenerationContext,
        current: Option<&QuestionSet>,
        cfg: &ProviderConfig,
        now: Timestamp,
    ) -> Result<Generated, QuestionError> {
        let mut ctx = ctx.clone();
        if let Some(current) = current {
            for norm in current.normalized_texts() {
                if !ctx.history.contains(&norm) {
                    ctx.history.push(norm);
                }
            }
        }
        self.generate_avoiding(ctx, cfg, now)
    }

    fn generate_avoiding(
        &self,
        mut ctx: GenerationContext,
        cfg: &ProviderConfig,
        now: Timestamp,
    ) -> Result<Generated, QuestionError> {
        let avoid: HashSet<String> = ctx.history.iter().map(|h| normalize_question_text(h)).collect();
        let fingerprint = ctx.fingerprint();
        let mut last_colliding: Option<(QuestionSet, Vec<String>)> = None;
        let mut last_malformed = None;
        let mut calls = 0;
        for round in 0..=MAX_REGENERATIONS {
            let bundle = self.templates.render_question_prompt(&ctx);
            let completion = self.gateway.complete(&bundle, cfg)?;
            calls += 1;
            match parse_question_response(&completion.text, &fingerprint, now) {
                Ok(set) => {
                    let colliding: Vec<String> = set
                        .normalized_texts()
                        .into_iter()
                        .filter(|n| avoid.contains(n))
                        .collect();
                    if colliding.is_empty() {
                        let warnings = self.second_person_warnings(&set);
                        return Ok(Generated {
                            set,
                            regenerations: round,
                            provider_calls: calls,
                            warnings,
                        });
                    }
                    for c in &colliding {
                        if !ctx.history.contains(c) {
                            ctx.history.push(c.clone());
                        }
                    }
                    last_colliding = Some((set, colliding));
                }
                Err(e) => last_malformed = Some(e),
            }
        }
        match (last_colliding, last_malformed) {
            (Some((set, colliding)), _) => {
                let mut warnings = vec![GenerationWarning::DuplicateAfterRetries { colliding }];
                warnings.extend(self.second_person_warnings(&set));
                Ok(Generated {
                    set,
                    regenerations: MAX_REGENERATIONS,
                    provider_calls: calls,
                    warnings,
                })
            }
            (None, Some(e)) => Err(QuestionError::Malformed(e)),
            (None, None) => unreachable!("loop runs at least once"),
        }
    }

    fn second_person_warnings(&self, set: &QuestionSet) -> Vec<GenerationWarning> {
        set.cards
            .iter()
            .enumerate()
            .filter(|(_, c)| !check_second_person(&c.text, &self.second_person))
            .map(|(card_index, c)| GenerationWarning::SecondPersonViolation {
                card_index,
                text: c.text.clone(),
            })
            .collect()
    }
}
