//! Core library for a stage-aware character-journaling service: domain
//! model, script ingestion, model gateway, question engine, journal store,
//! text analytics and the statistics used to analyze a crossover study.

pub mod clock;
pub mod ingest;
pub mod llm;
pub mod model;
pub mod questions;
pub mod report;
pub mod service;
pub mod simulate;
pub mod stats;
pub mod store;
pub mod text;

pub use clock::{Clock, IdSource, ManualClock, RandomIds, SeededIds, SystemClock};
pub use model::*;
pub use store::{
    condition_for, EntryDraft, ExportFormat, ExportRow, Participant, Sequence, Store, StoreError, StudySchedule,
};
pub use service::{Analysis, OpenedSession, SaveRequest, Service, ServiceError, SetupRequest};
pub use report::{analyze, Report, ReportError, ReportOptions};
pub use simulate::{run_simulation, SimulationConfig, SimulationError, SimulationOutput};
