//! Request and response bodies.
//!
//! Participant-facing payloads identify stimuli by per-experiment opaque
//! tokens and never carry triangle counts.

use std::path::PathBuf;

use meshpref_core::analysis::{Grouping, SessionReport};
use meshpref_core::protocol::{Phase, QuestionnaireResponse, Shading, Timestamp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
pub struct CreateExperiment {
    /// Design document; validated separately so that problems map to 400.
    pub design: serde_json::Value,
    /// Directory that relative `mesh_ref` and `texture_ref` paths resolve against.
    pub asset_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCreated {
    pub experiment_id: String,
    pub stimuli: usize,
    pub pairs: usize,
    pub created: Timestamp,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct StartSession {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub participant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub experiment_id: String,
    pub seed: u64,
    #[serde(flatten)]
    pub next: NextView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusView {
    pub stimulus_id: String,
    pub mesh_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture_url: Option<String>,
    pub shading: Shading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresentationView {
    pub presentation_id: u32,
    pub prompt: String,
    pub left: StimulusView,
    pub right: StimulusView,
    /// Choices recorded so far.
    pub answered: usize,
    /// Presentations still queued, including this one.
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireView {
    pub realism_prompt: String,
    pub confidence_prompt: String,
    pub confidence_anchors: [String; 2],
    pub scale_min: u8,
    pub scale_max: u8,
    pub most_preferred: StimulusView,
    pub least_preferred: StimulusView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextView {
    Presentation { presentation: PresentationView },
    Questionnaire { questionnaire: QuestionnaireView },
    Complete,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChoiceRequest {
    pub presentation_id: u32,
    /// Opaque stimulus token from the presentation payload.
    pub chosen: String,
    pub response_time: f64,
}

pub type QuestionnaireRequest = QuestionnaireResponse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub status: String,
    pub session_id: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncompleteSession {
    pub session_id: String,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportResponse {
    pub experiment_id: String,
    pub group_by: Grouping,
    pub complete_sessions: usize,
    pub incomplete: Vec<IncompleteSession>,
    pub report: Option<SessionReport>,
}
