//! Journal store: scripts, participants, sessions, entries and question
//! history, kept in memory and optionally made durable by an append-only
//! log that is replayed on open.

pub mod export;
pub mod schedule;
mod wal;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use export::{ExportFormat, ExportRow, ImportError, EXPORT_COLUMNS};
pub use schedule::{condition_for, OutOfStudyWindow, Sequence, StudySchedule};

use crate::model::{
    CharacterProfile, Condition, EntryId, JournalEntry, LogViolation, ParticipantId, ProductionContext, QuestionSet,
    RoleProfile, Script, ScriptId, SessionId, SessionLog, Timestamp,
};
use crate::questions::{GenerationWarning, QuestionHistory};
use crate::text::word_count;
use wal::Wal;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("script {0} not found")]
    ScriptNotFound(ScriptId),
    #[error("participant {0} not found")]
    ParticipantNotFound(ParticipantId),
    #[error("session {0} not found")]
    SessionNotFound(SessionId),
    #[error("entry {0} not found")]
    EntryNotFound(EntryId),
    #[error(transparent)]
    OutOfStudyWindow(#[from] OutOfStudyWindow),
    #[error("condition mismatch: {date} is {expected} for this participant")]
    ConditionMismatch { date: NaiveDate, expected: Condition },
    #[error("first keystroke at {at} precedes session open at {opened_at}")]
    ClockSkew { at: i64, opened_at: i64 },
    #[error("entry text is empty")]
    EmptyText,
    #[error("selected index {0} is not valid for this session")]
    BadSelection(u8),
    #[error("session {0} is already closed")]
    SessionClosed(SessionId),
    #[error("session {0} presented no questions")]
    NoQuestions(SessionId),
    #[error("participant {0} already has sessions under a different schedule")]
    ScheduleLocked(ParticipantId),
    #[error("invariant violated for session {session}: {violations:?}")]
    Invariant {
        session: SessionId,
        violations: Vec<LogViolation>,
    },
    #[error("store log {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("store I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// A participant's production, schedule, profile and access token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: ParticipantId,
    pub token: String,
    pub production: ProductionContext,
    pub schedule: StudySchedule,
    pub profile: CharacterProfile,
}

/// One durable state change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum Record {
    ScriptPut {
        script: Script,
    },
    ScriptAnalyzed {
        script_id: ScriptId,
        summary: String,
        roles: Vec<RoleProfile>,
    },
    ParticipantSetup {
        participant: Participant,
    },
    SessionOpened {
        log: SessionLog,
    },
    Keystroke {
        session_id: SessionId,
        at: Timestamp,
    },
    QuestionsReplaced {
        session_id: SessionId,
        questions: QuestionSet,
    },
    SessionSaved {
        session_id: SessionId,
        saved_at: Timestamp,
        selected_index: Option<u8>,
        edited: bool,
        entry: JournalEntry,
    },
    EntryUpdated {
        entry_id: EntryId,
        text: String,
        updated_at: Timestamp,
    },
    Warnings {
        session_id: SessionId,
        warnings: Vec<GenerationWarning>,
    },
}

#[derive(Debug, Default)]
struct State {
    scripts: BTreeMap<ScriptId, Script>,
    roles: BTreeMap<ScriptId, Vec<RoleProfile>>,
    participants: BTreeMap<ParticipantId, Participant>,
    sessions: BTreeMap<SessionId, SessionLog>,
    entries: BTreeMap<EntryId, JournalEntry>,
    entry_by_session: BTreeMap<SessionId, EntryId>,
    /// Presented question texts per participant and role, oldest first.
    history: BTreeMap<(ParticipantId, String), Vec<String>>,
    warnings: BTreeMap<SessionId, Vec<GenerationWarning>>,
}

impl State {
    fn role_key(&self, pid: &ParticipantId) -> Option<(ParticipantId, String)> {
        self.participants
            .get(pid)
            .map(|p| (pid.clone(), p.production.role_name.clone()))
    }

    fn push_history(&mut self, pid: &ParticipantId, qs: &QuestionSet) {
        if let Some(key) = self.role_key(pid) {
            self.history.entry(key).or_default().extend(qs.normalized_texts());
        }
    }

    fn apply(&mut self, rec: Record) {
        match rec {
            Record::ScriptPut { script } => {
                self.scripts.insert(script.id.clone(), script);
            }
            Record::ScriptAnalyzed {
                script_id,
                summary,
                roles,
            } => {
                if let Some(s) = self.scripts.get_mut(&script_id) {
                    s.summary = Some(summary);
                }
                self.roles.insert(script_id, roles);
            }
            Record::ParticipantSetup { participant } => {
                self.participants.insert(participant.participant_id.clone(), participant);
            }
            Record::SessionOpened { log } => {
                if let Some(qs) = &log.questions_presented {
                    self.push_history(&log.participant_id, qs);
                }
                self.sessions.insert(log.session_id.clone(), log);
            }
            Record::Keystroke { session_id, at } => {
                if let Some(log) = self.sessions.get_mut(&session_id) {
                    log.first_keystroke_at = Some(at);
                    log.start_delay_ms = Some(at.since(log.opened_at) as u64);
                }
            }
            Record::QuestionsReplaced { session_id, questions } => {
                let pid = match self.sessions.get_mut(&session_id) {
                    Some(log) => {
                        log.questions_presented = Some(questions.clone());
                        log.participant_id.clone()
                    }
                    None => return,
                };
                self.push_history(&pid, &questions);
            }
            Record::SessionSaved {
                session_id,
                saved_at,
                selected_index,
                edited,
                entry,
            } => {
                if let Some(log) = self.sessions.get_mut(&session_id) {
                    log.saved_at = Some(saved_at);
                    log.duration_ms = Some(saved_at.since(log.opened_at) as u64);
                    log.selected_index = selected_index;
                    log.edited = edited;
                }
                self.entry_by_session.insert(session_id, entry.entry_id.clone());
                self.entries.insert(entry.entry_id.clone(), entry);
            }
            Record::EntryUpdated {
                entry_id,
                text,
                updated_at,
            } => {
                if let Some(e) = self.entries.get_mut(&entry_id) {
                    e.final_text = text;
                    e.updated_at = updated_at;
                }
            }
            Record::Warnings { session_id, warnings } => {
                self.warnings.entry(session_id).or_default().extend(warnings);
            }
        }
    }

    fn export_rows(&self) -> Vec<ExportRow> {
        let mut logs: Vec<&SessionLog> = self.sessions.values().collect();
        logs.sort_by(|a, b| {
            (&a.participant_id, a.date, a.opened_at, &a.session_id).cmp(&(
                &b.participant_id,
                b.date,
                b.opened_at,
                &b.session_id,
            ))
        });
        logs.into_iter()
            .filter_map(|log| {
                let participant = self.participants.get(&log.participant_id)?;
                let schedule = &participant.schedule;
                let study_day = schedule.study_day(log.date).ok()?;
                let entry = self
                    .entry_by_session
                    .get(&log.session_id)
                    .and_then(|id| self.entries.get(id));
                let q = |i: usize| {
                    log.questions_presented
                        .as_ref()
                        .and_then(|qs| qs.cards.get(i))
                        .map(|c| c.text.clone())
                };
                let text = entry.map(|e| e.final_text.clone()).unwrap_or_default();
                Some(ExportRow {
                    session_id: log.session_id.to_string(),
                    participant_id: log.participant_id.to_string(),
                    date: log.date,
                    study_day,
                    period: schedule.period_of_day(study_day),
                    sequence: schedule.sequence,
                    condition: log.condition,
                    q1: q(0),
                    q2: q(1),
                    q3: q(2),
                    selected_index: log.selected_index,
                    selected_question: entry.and_then(|e| e.selected_question.clone()),
                    edited: log.edited,
                    start_delay_ms: log.start_delay_ms,
                    start_delay_s: log.start_delay_ms.map(export::ms_to_s),
                    duration_ms: log.duration_ms,
                    duration_s: log.duration_ms.map(export::ms_to_s),
                    char_count: text.chars().count(),
                    word_count: word_count(&text),
                    text,
                })
            })
            .collect()
    }
}

struct Inner {
    state: State,
    wal: Option<Wal>,
}

impl Inner {
    fn commit(&mut self, rec: Record) -> Result<(), StoreError> {
        if let Some(wal) = &mut self.wal {
            wal.append(&rec)?;
        }
        self.state.apply(rec);
        Ok(())
    }
}

/// What the author submits when saving an entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntryDraft {
    pub text: String,
    pub selected_index: Option<u8>,
    pub edited: bool,
    /// The question as the author used it; defaults to the presented card.
    pub question_text: Option<String>,
}

pub struct Store {
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").finish_non_exhaustive()
    }
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            inner: Mutex::new(Inner {
                state: State::default(),
                wal: None,
            }),
        }
    }

    /// Opens (or creates) a durable store at `path`, replaying its log.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let (wal, records) = Wal::open(path)?;
        let mut state = State::default();
        for rec in records {
            state.apply(rec);
        }
        Ok(Self {
            inner: Mutex::new(Inner { state, wal: Some(wal) }),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    // Scripts ---------------------------------------------------------------

    pub fn put_script(&self, script: Script) -> Result<(), StoreError> {
        self.lock().commit(Record::ScriptPut { script })
    }

    pub fn script(&self, id: &ScriptId) -> Result<Script, StoreError> {
        self.lock()
            .state
            .scripts
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::ScriptNotFound(id.clone()))
    }

    pub fn record_analysis(&self, id: &ScriptId, summary: String, roles: Vec<RoleProfile>) -> Result<(), StoreError> {
        let mut inner = self.lock();
        if !inner.state.scripts.contains_key(id) {
            return Err(StoreError::ScriptNotFound(id.clone()));
        }
        inner.commit(Record::ScriptAnalyzed {
            script_id: id.clone(),
            summary,
            roles,
        })
    }

    pub fn roles(&self, id: &ScriptId) -> Result<Vec<RoleProfile>, StoreError> {
        let inner = self.lock();
        if !inner.state.scripts.contains_key(id) {
            return Err(StoreError::ScriptNotFound(id.clone()));
        }
        Ok(inner.state.roles.get(id).cloned().unwrap_or_default())
    }

    // Participants ----------------------------------------------------------

    /// Records (or replaces) a participant's production and schedule. The
    /// schedule cannot change once sessions exist.
    pub fn setup_participant(&self, participant: Participant) -> Result<(), StoreError> {
        let mut inner = self.lock();
        let pid = &participant.participant_id;
        if let Some(existing) = inner.state.participants.get(pid) {
            let has_sessions = inner.state.sessions.values().any(|s| &s.participant_id == pid);
            if has_sessions && existing.schedule != participant.schedule {
                return Err(StoreError::ScheduleLocked(pid.clone()));
            }
        }
        inner.commit(Record::ParticipantSetup { participant })
    }

    pub fn participant(&self, id: &ParticipantId) -> Result<Participant, StoreError> {
        self.lock()
            .state
            .participants
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::ParticipantNotFound(id.clone()))
    }

    pub fn participants(&self) -> Vec<Participant> {
        self.lock().state.participants.values().cloned().collect()
    }

    pub fn condition_on(&self, id: &ParticipantId, date: NaiveDate) -> Result<Condition, StoreError> {
        let p = self.participant(id)?;
        Ok(condition_for(&p.schedule, date)?)
    }

    // Sessions --------------------------------------------------------------

    pub fn open_session(
        &self,
        session_id: SessionId,
        participant: &ParticipantId,
        date: NaiveDate,
        questions: Option<QuestionSet>,
        now: Timestamp,
    ) -> Result<SessionLog, StoreError> {
        let mut inner = self.lock();
        let p = inner
            .state
            .participants
            .get(participant)
            .ok_or_else(|| StoreError::ParticipantNotFound(participant.clone()))?;
        let expected = condition_for(&p.schedule, date)?;
        if (expected == Condition::AiAssisted) != questions.is_some() {
            return Err(StoreError::ConditionMismatch { date, expected });
        }
        let log = SessionLog {
            session_id: session_id.clone(),
            participant_id: participant.clone(),
            date,
            condition: expected,
            questions_presented: questions,
            selected_index: None,
            edited: false,
            opened_at: now,
            first_keystroke_at: None,
            saved_at: None,
            start_delay_ms: None,
            duration_ms: None,
        };
        check(&log)?;
        inner.commit(Record::SessionOpened { log: log.clone() })?;
        Ok(log)
    }

    pub fn session(&self, id: &SessionId) -> Result<SessionLog, StoreError> {
        self.lock()
            .state
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::SessionNotFound(id.clone()))
    }

    pub fn sessions(&self) -> Vec<SessionLog> {
        self.lock().state.sessions.values().cloned().collect()
    }

    /// First keystroke wins; later calls return the log unchanged.
    pub fn record_first_keystroke(&self, id: &SessionId, at: Timestamp) -> Result<SessionLog, StoreError> {
        let mut inner = self.lock();
        let log = inner
            .state
            .sessions
            .get(id)
            .ok_or_else(|| StoreError::SessionNotFound(id.clone()))?;
        if log.first_keystroke_at.is_some() {
            return Ok(log.clone());
        }
        if log.is_closed() {
            return Err(StoreError::SessionClosed(id.clone()));
        }
        if at < log.opened_at {
            return Err(StoreError::ClockSkew {
                at: at.0,
                opened_at: log.opened_at.0,
            });
        }
        inner.commit(Record::Keystroke {
            session_id: id.clone(),
            at,
        })?;
        Ok(inner.state.sessions[id].clone())
    }

    pub fn replace_questions(&self, id: &SessionId, questions: QuestionSet) -> Result<SessionLog, StoreError> {
        let mut inner = self.lock();
        let log = inner
            .state
            .sessions
            .get(id)
            .ok_or_else(|| StoreError::SessionNotFound(id.clone()))?;
        if log.is_closed() {
            return Err(StoreError::SessionClosed(id.clone()));
        }
        if log.questions_presented.is_none() {
            return Err(StoreError::NoQuestions(id.clone()));
        }
        inner.commit(Record::QuestionsReplaced {
            session_id: id.clone(),
            questions,
        })?;
        Ok(inner.state.sessions[id].clone())
    }

    /// Saves the entry and closes the session. The save time is never
    /// earlier than the recorded first keystroke.
    pub fn save_entry(
        &self,
        id: &SessionId,
        draft: EntryDraft,
        entry_id: EntryId,
        now: Timestamp,
    ) -> Result<JournalEntry, StoreError> {
        let mut inner = self.lock();
        let log = inner
            .state
            .sessions
            .get(id)
            .ok_or_else(|| StoreError::SessionNotFound(id.clone()))?;
        if log.is_closed() {
            return Err(StoreError::SessionClosed(id.clone()));
        }
        if draft.text.trim().is_empty() {
            return Err(StoreError::EmptyText);
        }
        let selected_question = match (draft.selected_index, &log.questions_presented) {
            (None, _) => None,
            (Some(i), Some(qs)) if usize::from(i) < qs.cards.len() => {
                Some(draft.question_text.clone().unwrap_or_else(|| qs.cards[usize::from(i)].text.clone()))
            }
            (Some(i), _) => return Err(StoreError::BadSelection(i)),
        };
        let edited = draft.edited && draft.selected_index.is_some();
        let saved_at = [Some(now), Some(log.opened_at), log.first_keystroke_at]
            .into_iter()
            .flatten()
            .max()
            .expect("non-empty");
        let mut closed = log.clone();
        closed.saved_at = Some(saved_at);
        closed.duration_ms = Some(saved_at.since(closed.opened_at) as u64);
        closed.selected_index = draft.selected_index;
        closed.edited = edited;
        check(&closed)?;
        let entry = JournalEntry {
            entry_id,
            session_id: id.clone(),
            final_text: draft.text,
            selected_question,
            created_at: saved_at,
            updated_at: saved_at,
        };
        inner.commit(Record::SessionSaved {
            session_id: id.clone(),
            saved_at,
            selected_index: draft.selected_index,
            edited,
            entry: entry.clone(),
        })?;
        Ok(entry)
    }

    pub fn entry(&self, id: &EntryId) -> Result<JournalEntry, StoreError> {
        self.lock()
            .state
            .entries
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::EntryNotFound(id.clone()))
    }

    /// Entries newest first by creation time.
    pub fn list_archive(&self, participant: &ParticipantId) -> Vec<JournalEntry> {
        let inner = self.lock();
        let st = &inner.state;
        let mut out: Vec<JournalEntry> = st
            .entries
            .values()
            .filter(|e| {
                st.sessions
                    .get(&e.session_id)
                    .is_some_and(|s| &s.participant_id == participant)
            })
            .cloned()
            .collect();
        out.sort_by(|a, b| (b.created_at, &b.entry_id).cmp(&(a.created_at, &a.entry_id)));
        out
    }

    /// Replaces the text. `updated_at` always moves forward, even when the
    /// text is unchanged.
    pub fn update_entry(&self, id: &EntryId, text: String, now: Timestamp) -> Result<JournalEntry, StoreError> {
        let mut inner = self.lock();
        let entry = inner
            .state
            .entries
            .get(id)
            .ok_or_else(|| StoreError::EntryNotFound(id.clone()))?;
        if text.trim().is_empty() {
            return Err(StoreError::EmptyText);
        }
        let updated_at = now.max(Timestamp(entry.updated_at.0 + 1));
        inner.commit(Record::EntryUpdated {
            entry_id: id.clone(),
            text,
            updated_at,
        })?;
        Ok(inner.state.entries[id].clone())
    }

    pub fn add_warnings(&self, id: &SessionId, warnings: Vec<GenerationWarning>) -> Result<(), StoreError> {
        if warnings.is_empty() {
            return Ok(());
        }
        let mut inner = self.lock();
        if !inner.state.sessions.contains_key(id) {
            return Err(StoreError::SessionNotFound(id.clone()));
        }
        inner.commit(Record::Warnings {
            session_id: id.clone(),
            warnings,
        })
    }

    pub fn warnings(&self, id: &SessionId) -> Vec<GenerationWarning> {
        self.lock().state.warnings.get(id).cloned().unwrap_or_default()
    }

    // Export ----------------------------------------------------------------

    pub fn export_rows(&self) -> Vec<ExportRow> {
        self.lock().state.export_rows()
    }

    pub fn export_logs(&self, format: ExportFormat) -> Vec<u8> {
        export::encode(&self.export_rows(), format)
    }
}

fn check(log: &SessionLog) -> Result<(), StoreError> {
    let violations = log.violations();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(StoreError::Invariant {
            session: log.session_id.clone(),
            violations,
        })
    }
}

impl QuestionHistory for Store {
    fn recent_questions(&self, participant: &ParticipantId, role_name: &str, limit: usize) -> Vec<String> {
        let inner = self.lock();
        inner
            .state
            .history
            .get(&(participant.clone(), role_name.to_string()))
            .map(|h| h.iter().rev().take(limit).cloned().collect())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests;
