//! Application layer: the operations behind the HTTP API and the simulator.
//!
//! The service owns no state beyond the store. Condition, opened/saved times
//! and identifiers are decided here, never by the client.

use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, IdSource};
use crate::ingest::{
    ingest_document, parse_character_list, DocumentUpload, IngestError, NoExtractor, ParseWarning, TextExtractor,
};
use crate::llm::{Gateway, GatewayError, GatewaySettings, Purpose, TemplateSet};
use crate::model::{
    CharacterProfile, Condition, EntryId, JournalEntry, ParticipantId, ProductionContext, QuestionSet,
    RehearsalStage, RoleProfile, Script, ScriptId, SessionId, SessionLog, Timestamp,
};
use crate::questions::{assemble_context, GenerationWarning, QuestionEngine, QuestionError, MAX_REGENERATIONS};
use crate::store::{
    EntryDraft, ExportFormat, Participant, Sequence, Store, StoreError, StudySchedule,
};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("role '{0}' is not among the analyzed roles of this script")]
    UnknownRole(String),
    #[error("script {0} has not been analyzed yet")]
    NotAnalyzed(ScriptId),
    #[error("session {0} is unassisted and has no questions")]
    NotAiSession(SessionId),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl From<QuestionError> for ServiceError {
    fn from(e: QuestionError) -> Self {
        match e {
            QuestionError::Gateway(g) => ServiceError::Gateway(g),
            QuestionError::Malformed(m) => ServiceError::MalformedResponse(m.reason()),
            other => ServiceError::MalformedResponse(other.to_string()),
        }
    }
}

impl ServiceError {
    /// Machine-readable code from the closed set the API documents.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownRole(_) => "UnknownRole",
            ServiceError::NotAnalyzed(_) => "NotAnalyzed",
            ServiceError::NotAiSession(_) => "NotAiSession",
            ServiceError::MalformedResponse(_) => "MalformedResponse",
            ServiceError::Ingest(e) => match e {
                IngestError::UnsupportedFormat(_) => "UnsupportedFormat",
                IngestError::ExtractionFailed(_) => "ExtractionFailed",
                IngestError::EmptyAfterExtraction => "EmptyAfterExtraction",
                IngestError::EmptyUpload => "EmptyUpload",
            },
            ServiceError::Gateway(e) => match e {
                GatewayError::InvalidConfig(_) => "InvalidConfig",
                _ => "ProviderError",
            },
            ServiceError::Store(e) => match e {
                StoreError::ScriptNotFound(_) => "ScriptNotFound",
                StoreError::ParticipantNotFound(_) => "ParticipantNotFound",
                StoreError::SessionNotFound(_) => "SessionNotFound",
                StoreError::EntryNotFound(_) => "EntryNotFound",
                StoreError::OutOfStudyWindow(_) => "OutOfStudyWindow",
                StoreError::ConditionMismatch { .. } => "ConditionMismatch",
                StoreError::ClockSkew { .. } => "ClockSkew",
                StoreError::EmptyText => "EmptyText",
                StoreError::BadSelection(_) => "BadSelection",
                StoreError::SessionClosed(_) => "SessionClosed",
                StoreError::NoQuestions(_) => "NotAiSession",
                StoreError::ScheduleLocked(_) => "ScheduleLocked",
                StoreError::Invariant { .. } | StoreError::Corrupt { .. } | StoreError::Io(_) => "StoreFailure",
            },
        }
    }

    pub fn is_provider_error(&self) -> bool {
        matches!(self, ServiceError::Gateway(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis {
    pub summary: String,
    pub roles: Vec<RoleProfile>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetupRequest {
    pub script_id: ScriptId,
    pub role_name: String,
    pub stage: RehearsalStage,
    pub d_day: NaiveDate,
    pub sequence: Sequence,
    pub day1: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenedSession {
    pub log: SessionLog,
    pub warnings: Vec<GenerationWarning>,
}

/// Everything a save carries from the client.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SaveRequest {
    pub text: String,
    #[serde(default)]
    pub selected_index: Option<u8>,
    #[serde(default)]
    pub edited: bool,
    /// Question text as used; differing from the presented card implies an edit.
    #[serde(default)]
    pub question_text: Option<String>,
}

pub struct Service {
    store: Arc<Store>,
    engine: QuestionEngine,
    settings: GatewaySettings,
    clock: Arc<dyn Clock>,
    ids: Arc<dyn IdSource>,
    extractor: Arc<dyn TextExtractor>,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service")
            .field("settings", &self.settings)
            .finish_non_exhaustive()
    }
}

impl Service {
    pub fn new(
        store: Arc<Store>,
        gateway: Gateway,
        settings: GatewaySettings,
        clock: Arc<dyn Clock>,
        ids: Arc<dyn IdSource>,
    ) -> Self {
        Self {
            store,
            engine: QuestionEngine::new(gateway),
            settings,
            clock,
            ids,
            extractor: Arc::new(NoExtractor),
        }
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.engine = self.engine.with_templates(templates);
        self
    }

    pub fn with_extractor(mut self, extractor: Arc<dyn TextExtractor>) -> Self {
        self.extractor = extractor;
        self
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn settings(&self) -> &GatewaySettings {
        &self.settings
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    // Scripts ---------------------------------------------------------------

    pub fn ingest_script(&self, upload: &DocumentUpload) -> Result<Script, ServiceError> {
        let id = ScriptId::new(self.ids.next_id("sc"));
        let script = ingest_document(upload, self.extractor.as_ref(), id, self.clock.now())?;
        self.store.put_script(script.clone())?;
        Ok(script)
    }

    pub fn script(&self, id: &ScriptId) -> Result<Script, ServiceError> {
        Ok(self.store.script(id)?)
    }

    /// Summary plus character extraction. A malformed character list is
    /// re-requested up to the regeneration budget before giving up.
    pub fn analyze_script(&self, id: &ScriptId) -> Result<Analysis, ServiceError> {
        let script = self.store.script(id)?;
        let cfg = self.settings.config_for(Purpose::ScriptSummary);
        let templates = &self.engine.templates;
        let summary = self
            .engine
            .gateway
            .complete(&templates.render_summary_prompt(&script), cfg)?
            .text
            .trim()
            .to_string();
        if summary.is_empty() {
            return Err(ServiceError::MalformedResponse("empty summary".into()));
        }
        let bundle = templates.render_character_extraction_prompt(&script);
        let cfg = self.settings.config_for(Purpose::CharacterExtraction);
        let mut last_err = None;
        for _ in 0..=MAX_REGENERATIONS {
            let raw = self.engine.gateway.complete(&bundle, cfg)?.text;
            match parse_character_list(&raw, id) {
                Ok(parsed) => {
                    self.store.record_analysis(id, summary.clone(), parsed.roles.clone())?;
                    return Ok(Analysis {
                        summary,
                        roles: parsed.roles,
                        warnings: parsed.warnings.iter().map(ParseWarning::to_string).collect(),
                    });
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(ServiceError::MalformedResponse(
            last_err.map(|e| e.0).unwrap_or_default(),
        ))
    }

    // Participants ----------------------------------------------------------

    /// Enrolls (or re-configures) a participant and generates the character
    /// profile. The profile is reused when script and role are unchanged.
    pub fn setup_participant(&self, pid: &ParticipantId, req: &SetupRequest) -> Result<Participant, ServiceError> {
        let script = self.store.script(&req.script_id)?;
        let summary = script
            .summary
            .clone()
            .ok_or_else(|| ServiceError::NotAnalyzed(req.script_id.clone()))?;
        let role = self
            .store
            .roles(&req.script_id)?
            .into_iter()
            .find(|r| r.name == req.role_name)
            .ok_or_else(|| ServiceError::UnknownRole(req.role_name.clone()))?;
        let existing = self.store.participant(pid).ok();
        let profile = match &existing {
            Some(p) if p.profile.role == role => p.profile.clone(),
            _ => {
                let bundle = self
                    .engine
                    .templates
                    .render_profile_prompt(&role.name, &role.description, &summary);
                let text = self
                    .engine
                    .gateway
                    .complete(&bundle, self.settings.config_for(Purpose::ProfileGeneration))?
                    .text
                    .trim()
                    .to_string();
                if text.is_empty() {
                    return Err(ServiceError::MalformedResponse("empty profile".into()));
                }
                CharacterProfile {
                    role: role.clone(),
                    profile_text: text,
                    generated_at: self.clock.now(),
                }
            }
        };
        let participant = Participant {
            participant_id: pid.clone(),
            token: existing
                .map(|p| p.token)
                .unwrap_or_else(|| self.ids.next_id("tok")),
            production: ProductionContext {
                script_id: req.script_id.clone(),
                role_name: role.name.clone(),
                stage: req.stage,
                d_day: req.d_day,
            },
            schedule: StudySchedule::new(pid.clone(), req.sequence, req.day1),
            profile,
        };
        self.store.setup_participant(participant.clone())?;
        Ok(participant)
    }

    pub fn participant(&self, pid: &ParticipantId) -> Result<Participant, ServiceError> {
        Ok(self.store.participant(pid)?)
    }

    // Sessions --------------------------------------------------------------

    fn generation_context(&self, p: &Participant) -> Result<crate::questions::GenerationContext, ServiceError> {
        let script = self.store.script(&p.production.script_id)?;
        if script.summary.is_none() {
            return Err(ServiceError::NotAnalyzed(script.id));
        }
        Ok(assemble_context(
            &script,
            &p.profile.role,
            p.production.stage,
            p.production.d_day,
            Some(&p.profile),
            &p.participant_id,
            self.store.as_ref(),
        )?)
    }

    /// Opens a session for `date`. The condition comes from the schedule;
    /// AI days get a fresh question set.
    pub fn open_session(&self, pid: &ParticipantId, date: NaiveDate) -> Result<OpenedSession, ServiceError> {
        let participant = self.store.participant(pid)?;
        let condition = self.store.condition_on(pid, date)?;
        let (questions, warnings) = match condition {
            Condition::Unassisted => (None, Vec::new()),
            Condition::AiAssisted => {
                let ctx = self.generation_context(&participant)?;
                let generated = self
                    .engine
                    .generate_daily_questions(&ctx, &self.settings.questions, self.clock.now())?;
                (Some(generated.set), generated.warnings)
            }
        };
        let sid = SessionId::new(self.ids.next_id("s"));
        let log = self.store.open_session(sid.clone(), pid, date, questions, self.clock.now())?;
        self.store.add_warnings(&sid, warnings.clone())?;
        Ok(OpenedSession { log, warnings })
    }

    pub fn session(&self, sid: &SessionId) -> Result<SessionLog, ServiceError> {
        Ok(self.store.session(sid)?)
    }

    /// Replaces the session's questions with a set disjoint from everything
    /// already shown to this participant for this role.
    pub fn refresh(&self, sid: &SessionId) -> Result<(QuestionSet, Vec<GenerationWarning>), ServiceError> {
        let log = self.store.session(sid)?;
        let current = match &log.questions_presented {
            Some(qs) => qs.clone(),
            None => return Err(ServiceError::NotAiSession(sid.clone())),
        };
        if log.is_closed() {
            return Err(StoreError::SessionClosed(sid.clone()).into());
        }
        let participant = self.store.participant(&log.participant_id)?;
        let ctx = self.generation_context(&participant)?;
        let generated = self
            .engine
            .refresh(&ctx, Some(&current), &self.settings.questions, self.clock.now())?;
        self.store.replace_questions(sid, generated.set.clone())?;
        self.store.add_warnings(sid, generated.warnings.clone())?;
        Ok((generated.set, generated.warnings))
    }

    /// Records the first keystroke. A client-reported time is clamped into
    /// `[opened_at, now]`; without one the server time is used.
    pub fn keystroke(&self, sid: &SessionId, client_at: Option<Timestamp>) -> Result<SessionLog, ServiceError> {
        let log = self.store.session(sid)?;
        let now = self.clock.now().max(log.opened_at);
        let at = client_at.unwrap_or(now).clamp(log.opened_at, now);
        Ok(self.store.record_first_keystroke(sid, at)?)
    }

    pub fn save_entry(&self, sid: &SessionId, req: SaveRequest) -> Result<JournalEntry, ServiceError> {
        let log = self.store.session(sid)?;
        let presented = match (req.selected_index, &log.questions_presented) {
            (Some(i), Some(qs)) => qs.cards.get(usize::from(i)).map(|c| c.text.clone()),
            _ => None,
        };
        let question_text = req
            .question_text
            .map(|q| q.trim().to_string())
            .filter(|q| !q.is_empty());
        let edited = req.edited
            || matches!((&question_text, &presented), (Some(q), Some(p)) if q != p);
        let draft = EntryDraft {
            text: req.text,
            selected_index: req.selected_index,
            edited,
            question_text,
        };
        let entry_id = EntryId::new(self.ids.next_id("e"));
        Ok(self.store.save_entry(sid, draft, entry_id, self.clock.now())?)
    }

    pub fn archive(&self, pid: &ParticipantId) -> Result<Vec<JournalEntry>, ServiceError> {
        self.store.participant(pid)?;
        Ok(self.store.list_archive(pid))
    }

    pub fn update_entry(&self, id: &EntryId, text: String) -> Result<JournalEntry, ServiceError> {
        Ok(self.store.update_entry(id, text, self.clock.now())?)
    }

    /// Owner of a session, for authorization.
    pub fn session_owner(&self, sid: &SessionId) -> Result<ParticipantId, ServiceError> {
        Ok(self.store.session(sid)?.participant_id)
    }

    pub fn entry_owner(&self, id: &EntryId) -> Result<ParticipantId, ServiceError> {
        let entry = self.store.entry(id)?;
        self.session_owner(&entry.session_id)
    }

    pub fn export(&self, format: ExportFormat) -> Vec<u8> {
        self.store.export_logs(format)
    }
}
