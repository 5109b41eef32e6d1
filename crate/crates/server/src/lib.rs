//! HTTP service hosting paired-comparison experiments.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/experiments` | `{design, asset_dir}` | 201 `{experiment_id, stimuli, pairs, created}` |
//! | POST | `/experiments/{id}/sessions` | `{seed?, participant?}` or empty | 201 `{session_id, seed, status, …}` |
//! | GET | `/sessions/{id}/current` | | next view |
//! | POST | `/sessions/{id}/choices` | `{presentation_id, chosen, response_time}` | next view |
//! | POST | `/sessions/{id}/questionnaire` | `{realism_most_preferred, realism_least_preferred, confidence}` | `{status, session_id, duration_s}` |
//! | GET | `/experiments/{id}/report?group_by=none\|shading\|confidence` | | report |
//! | GET | `/experiments/{id}/events` | | JSON Lines event log |
//! | GET | `/assets/{exp}/{stimulus}/mesh\|texture` | | file |
//!
//! A "next view" is tagged by `status`: `presentation` (with `presentation`),
//! `questionnaire` (with `questionnaire`) or `complete`. Errors are
//! `{error, message}` with 400 for malformed input, 404 for unknown ids, 409
//! for stale or out-of-phase requests and 422 for unusable assets.

mod error;
mod http;
mod service;
mod views;

pub use error::ServiceError;
pub use http::{router, serve};
pub use service::{AssetKind, Clock, ExperimentRecord, Service, StimulusAsset};
pub use views::{
    ChoiceRequest, Completion, CreateExperiment, ExperimentCreated, IncompleteSession, NextView, PresentationView, QuestionnaireView,
    ReportResponse, SessionCreated, StartSession, StimulusView,
};
