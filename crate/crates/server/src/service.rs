//! Transport-independent experiment service.
//!
//! All state lives in append-only files under one data directory:
//!
//! ```text
//! <data>/experiments.jsonl                  one ExperimentRecord per line
//! <data>/sessions/<experiment>/<session>.jsonl   session event log
//! ```
//!
//! Every accepted mutation is appended and synced before the caller sees a
//! result, and [`Service::open`] rebuilds the in-memory state by replaying
//! those files. Each session has its own mutex, so requests for different
//! sessions never wait on each other.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use meshpref_core::analysis::{aggregate_report, Grouping};
use meshpref_core::mesh::parse_obj;
use meshpref_core::protocol::{
    read_jsonl, write_jsonl, EventKind, ExperimentDesign, Phase, QuestionnaireResponse, SessionEvent, SessionLog, Timestamp,
    CONFIDENCE_HIGH_ANCHOR, CONFIDENCE_LOW_ANCHOR, CONFIDENCE_PROMPT, REALISM_PROMPT, SCALE_MAX, SCALE_MIN,
};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::ServiceError;
use crate::views::{
    ChoiceRequest, Completion, CreateExperiment, ExperimentCreated, IncompleteSession, NextView, PresentationView, QuestionnaireView,
    ReportResponse, SessionCreated, StartSession, StimulusView,
};

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusAsset {
    /// Opaque id shown to participants.
    pub token: String,
    pub mesh: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub id: String,
    pub design: ExperimentDesign,
    /// Indexed like the design's stimuli.
    pub assets: Vec<StimulusAsset>,
    pub created: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssetKind {
    Mesh,
    Texture,
}

struct Experiment {
    record: ExperimentRecord,
    design: Arc<ExperimentDesign>,
    tokens: HashMap<String, usize>,
    sessions: Mutex<Vec<String>>,
}

impl Experiment {
    fn new(record: ExperimentRecord) -> Self {
        let tokens = record.assets.iter().enumerate().map(|(i, a)| (a.token.clone(), i)).collect();
        Self {
            design: Arc::new(record.design.clone()),
            record,
            tokens,
            sessions: Mutex::new(Vec::new()),
        }
    }

    fn stimulus_view(&self, index: usize) -> StimulusView {
        let asset = &self.record.assets[index];
        let base = format!("/assets/{}/{}", self.record.id, asset.token);
        StimulusView {
            stimulus_id: asset.token.clone(),
            mesh_url: format!("{base}/mesh"),
            texture_url: asset.texture.as_ref().map(|_| format!("{base}/texture")),
            shading: self.design.stimulus(index).shading,
        }
    }
}

struct Session {
    experiment: Arc<Experiment>,
    log: SessionLog,
    file: File,
}

impl Session {
    /// Applies `kinds` to a copy of the log, appends the new events durably,
    /// then commits the copy.
    fn commit(&mut self, kinds: Vec<EventKind>) -> Result<(), ServiceError> {
        let mut next = self.log.clone();
        for k in kinds {
            next.apply(k)?;
        }
        let fresh = &next.events()[self.log.events().len()..];
        append_events(&mut self.file, fresh)?;
        self.log = next;
        Ok(())
    }

    /// Announces the current head if it has not been announced yet.
    fn ensure_shown(&mut self, now: Timestamp) -> Result<(), ServiceError> {
        if let Some(show) = self.log.show_current(now) {
            self.commit(vec![show])?;
        }
        Ok(())
    }

    fn presentation_view(&self) -> Option<PresentationView> {
        let state = self.log.state();
        let head = state.current()?;
        Some(PresentationView {
            presentation_id: head.id,
            prompt: state.design().prompt().to_string(),
            left: self.experiment.stimulus_view(head.left_stimulus()),
            right: self.experiment.stimulus_view(head.right_stimulus()),
            answered: state.history().len(),
            remaining: state.pending().len(),
        })
    }

    fn questionnaire_view(&self) -> Result<QuestionnaireView, ServiceError> {
        let (most, _, least, _) = self.log.state().extremes()?;
        Ok(QuestionnaireView {
            realism_prompt: REALISM_PROMPT.into(),
            confidence_prompt: CONFIDENCE_PROMPT.into(),
            confidence_anchors: [CONFIDENCE_LOW_ANCHOR.into(), CONFIDENCE_HIGH_ANCHOR.into()],
            scale_min: SCALE_MIN,
            scale_max: SCALE_MAX,
            most_preferred: self.experiment.stimulus_view(most),
            least_preferred: self.experiment.stimulus_view(least),
        })
    }

    fn current_view(&self) -> Result<NextView, ServiceError> {
        Ok(match self.log.state().phase() {
            Phase::Comparing => NextView::Presentation {
                presentation: self.presentation_view().expect("comparing phase has a head"),
            },
            Phase::Questionnaire => NextView::Questionnaire {
                questionnaire: self.questionnaire_view()?,
            },
            Phase::Complete => NextView::Complete,
        })
    }

    /// What a choice request is answered with: the next presentation, or the
    /// questionnaire once the schedule is empty (even if already submitted,
    /// so that retried choices get the same body).
    fn view_after_choice(&self) -> Result<NextView, ServiceError> {
        Ok(match self.presentation_view() {
            Some(presentation) => NextView::Presentation { presentation },
            None => NextView::Questionnaire {
                questionnaire: self.questionnaire_view()?,
            },
        })
    }
}

fn append_events(file: &mut File, events: &[SessionEvent]) -> std::io::Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, events)?;
    file.write_all(&buf)?;
    file.sync_data()
}

/// Drops a torn final line left by an interrupted append.
fn trim_partial_tail(path: &Path) -> std::io::Result<()> {
    let bytes = fs::read(path)?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    tracing::warn!(path = %path.display(), dropped = bytes.len() - keep, "discarding partial log line");
    OpenOptions::new().write(true).open(path)?.set_len(keep as u64)
}

fn resolve(asset_dir: &Path, reference: &str) -> PathBuf {
    let p = Path::new(reference);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        asset_dir.join(p)
    }
}

fn new_token() -> String {
    Uuid::new_v4().simple().to_string()[..12].to_string()
}

pub struct Service {
    data_dir: PathBuf,
    clock: Clock,
    index: Mutex<File>,
    experiments: RwLock<HashMap<String, Arc<Experiment>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Service {
    /// Opens (or creates) a data directory and replays everything in it.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        Self::open_with_clock(data_dir, Arc::new(Utc::now))
    }

    pub fn open_with_clock(data_dir: impl Into<PathBuf>, clock: Clock) -> Result<Self, ServiceError> {
        let data_dir = data_dir.into();
        fs::create_dir_all(data_dir.join("sessions"))?;
        let index_path = data_dir.join("experiments.jsonl");
        let index = OpenOptions::new().create(true).append(true).open(&index_path)?;
        trim_partial_tail(&index_path)?;

        let mut experiments = HashMap::new();
        for (i, line) in BufReader::new(File::open(&index_path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ExperimentRecord =
                serde_json::from_str(&line).map_err(|e| ServiceError::Internal(format!("experiments.jsonl line {}: {e}", i + 1)))?;
            experiments.insert(record.id.clone(), Arc::new(Experiment::new(record)));
        }

        let mut sessions = HashMap::new();
        for exp in experiments.values() {
            let dir = data_dir.join("sessions").join(&exp.record.id);
            if !dir.is_dir() {
                continue;
            }
            let mut found: Vec<(Timestamp, String)> = Vec::new();
            for entry in fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                    continue;
                }
                trim_partial_tail(&path)?;
                let events = read_jsonl(BufReader::new(File::open(&path)?))?;
                if events.is_empty() {
                    continue;
                }
                let log = match SessionLog::replay(&events) {
                    Ok(log) => log,
                    Err(e) => {
                        tracing::warn!(path = %path.display(), error = %e, "skipping unreadable session log");
                        continue;
                    }
                };
                let file = OpenOptions::new().append(true).open(&path)?;
                found.push((log.state().started_at(), log.id().to_string()));
                sessions.insert(
                    log.id().to_string(),
                    Arc::new(Mutex::new(Session {
                        experiment: exp.clone(),
                        log,
                        file,
                    })),
                );
            }
            found.sort();
            *exp.sessions.lock().unwrap() = found.into_iter().map(|(_, id)| id).collect();
        }

        Ok(Self {
            data_dir,
            clock,
            index: Mutex::new(index),
            experiments: RwLock::new(experiments),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn experiment(&self, id: &str) -> Result<Arc<Experiment>, ServiceError> {
        self.experiments
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("unknown experiment `{id}`")))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("unknown session `{id}`")))
    }

    pub fn create_experiment(&self, req: CreateExperiment) -> Result<ExperimentCreated, ServiceError> {
        let design: ExperimentDesign =
            serde_json::from_value(req.design).map_err(|e| ServiceError::BadRequest(format!("invalid design: {e}")))?;
        let mut assets = Vec::with_capacity(design.len());
        for s in design.stimuli() {
            let mesh = resolve(&req.asset_dir, &s.mesh_ref);
            let bytes = fs::read(&mesh)
                .map_err(|e| ServiceError::Unprocessable(format!("stimulus `{}`: cannot read {}: {e}", s.id, mesh.display())))?;
            let parsed = parse_obj::<f64>(&bytes, &s.id)
                .map_err(|e| ServiceError::Unprocessable(format!("stimulus `{}`: {}: {e}", s.id, mesh.display())))?;
            if parsed.triangle_count() == 0 {
                return Err(ServiceError::Unprocessable(format!(
                    "stimulus `{}`: {} has no faces",
                    s.id,
                    mesh.display()
                )));
            }
            let texture = match &s.texture_ref {
                Some(t) => {
                    let path = resolve(&req.asset_dir, t);
                    File::open(&path)
                        .map_err(|e| ServiceError::Unprocessable(format!("stimulus `{}`: cannot read {}: {e}", s.id, path.display())))?;
                    Some(path)
                }
                None => None,
            };
            assets.push(StimulusAsset {
                token: new_token(),
                mesh,
                texture,
            });
        }
        let record = ExperimentRecord {
            id: Uuid::new_v4().to_string(),
            design,
            assets,
            created: (self.clock)(),
        };
        {
            let mut index = self.index.lock().unwrap();
            let mut line = serde_json::to_vec(&record).map_err(|e| ServiceError::Internal(e.to_string()))?;
            line.push(b'\n');
            index.write_all(&line)?;
            index.sync_data()?;
        }
        fs::create_dir_all(self.data_dir.join("sessions").join(&record.id))?;
        let created = ExperimentCreated {
            experiment_id: record.id.clone(),
            stimuli: record.design.len(),
            pairs: record.design.pairs().len(),
            created: record.created,
        };
        self.experiments
            .write()
            .unwrap()
            .insert(record.id.clone(), Arc::new(Experiment::new(record)));
        Ok(created)
    }

    pub fn start_session(&self, experiment_id: &str, req: StartSession) -> Result<SessionCreated, ServiceError> {
        let exp = self.experiment(experiment_id)?;
        let seed = req.seed.unwrap_or_else(rand::random);
        let id = Uuid::new_v4().to_string();
        let now = (self.clock)();
        let log = SessionLog::start(id.clone(), exp.design.clone(), seed, now, req.participant);
        let path = self.data_dir.join("sessions").join(experiment_id).join(format!("{id}.jsonl"));
        let mut file = OpenOptions::new().create_new(true).append(true).open(&path)?;
        append_events(&mut file, log.events())?;
        let mut session = Session {
            experiment: exp.clone(),
            log,
            file,
        };
        session.ensure_shown(now)?;
        let next = session.current_view()?;
        exp.sessions.lock().unwrap().push(id.clone());
        self.sessions.write().unwrap().insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(SessionCreated {
            session_id: id,
            experiment_id: experiment_id.to_string(),
            seed,
            next,
        })
    }

    pub fn current(&self, session_id: &str) -> Result<NextView, ServiceError> {
        let handle = self.session(session_id)?;
        let mut s = handle.lock().unwrap();
        s.ensure_shown((self.clock)())?;
        s.current_view()
    }

    pub fn submit_choice(&self, session_id: &str, req: ChoiceRequest) -> Result<NextView, ServiceError> {
        let handle = self.session(session_id)?;
        let mut s = handle.lock().unwrap();
        let chosen = *s
            .experiment
            .tokens
            .get(&req.chosen)
            .ok_or_else(|| ServiceError::Conflict(format!("unknown stimulus `{}`", req.chosen)))?;

        if let Some(last) = s.log.state().history().last() {
            if last.presentation.id == req.presentation_id {
                return if last.chosen == chosen {
                    s.view_after_choice()
                } else {
                    Err(ServiceError::Conflict(format!(
                        "presentation {} was already answered with a different stimulus",
                        req.presentation_id
                    )))
                };
            }
        }

        let now = (self.clock)();
        let mut kinds = Vec::new();
        if let Some(show) = s.log.show_current(now) {
            kinds.push(show);
        }
        kinds.push(EventKind::ChoiceMade {
            presentation_id: req.presentation_id,
            chosen: s.experiment.design.stimulus(chosen).id.clone(),
            response_time: req.response_time,
            at: now,
        });
        // announce the next head in the same durable write
        let mut probe = s.log.clone();
        for k in &kinds {
            probe.apply(k.clone())?;
        }
        if let Some(show) = probe.show_current(now) {
            kinds.push(show);
        }
        s.commit(kinds)?;
        s.view_after_choice()
    }

    pub fn submit_questionnaire(&self, session_id: &str, response: QuestionnaireResponse) -> Result<Completion, ServiceError> {
        response.validate().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let handle = self.session(session_id)?;
        let mut s = handle.lock().unwrap();
        let events = s.log.completion_events(response, (self.clock)())?;
        s.commit(events.into())?;
        Ok(Completion {
            status: "complete".into(),
            session_id: session_id.to_string(),
            duration_s: s.log.state().duration()?,
        })
    }

    /// Snapshot of one session's log.
    pub fn session_log(&self, session_id: &str) -> Result<SessionLog, ServiceError> {
        Ok(self.session(session_id)?.lock().unwrap().log.clone())
    }

    /// Logs of an experiment's sessions in creation order.
    pub fn session_logs(&self, experiment_id: &str) -> Result<Vec<SessionLog>, ServiceError> {
        let exp = self.experiment(experiment_id)?;
        let ids = exp.sessions.lock().unwrap().clone();
        ids.iter().map(|id| self.session_log(id)).collect()
    }

    pub fn experiment_record(&self, experiment_id: &str) -> Result<ExperimentRecord, ServiceError> {
        Ok(self.experiment(experiment_id)?.record.clone())
    }

    pub fn report(&self, experiment_id: &str, grouping: Grouping) -> Result<ReportResponse, ServiceError> {
        let logs = self.session_logs(experiment_id)?;
        let (complete, incomplete): (Vec<SessionLog>, Vec<SessionLog>) =
            logs.into_iter().partition(|l| l.state().phase() == Phase::Complete);
        let report = if complete.is_empty() {
            None
        } else {
            Some(aggregate_report(&complete, grouping).map_err(|e| ServiceError::Internal(e.to_string()))?)
        };
        Ok(ReportResponse {
            experiment_id: experiment_id.to_string(),
            group_by: grouping,
            complete_sessions: complete.len(),
            incomplete: incomplete
                .iter()
                .map(|l| IncompleteSession {
                    session_id: l.id().to_string(),
                    phase: l.state().phase(),
                })
                .collect(),
            report,
        })
    }

    /// Every event of an experiment as JSON Lines, session by session.
    pub fn export_events(&self, experiment_id: &str) -> Result<Vec<u8>, ServiceError> {
        let mut out = Vec::new();
        for log in self.session_logs(experiment_id)? {
            write_jsonl(&mut out, log.events())?;
        }
        Ok(out)
    }

    pub fn asset(&self, experiment_id: &str, token: &str, kind: AssetKind) -> Result<PathBuf, ServiceError> {
        let exp = self.experiment(experiment_id)?;
        let index = *exp
            .tokens
            .get(token)
            .ok_or_else(|| ServiceError::NotFound(format!("unknown stimulus `{token}`")))?;
        let asset = &exp.record.assets[index];
        match kind {
            AssetKind::Mesh => Ok(asset.mesh.clone()),
            AssetKind::Texture => asset
                .texture
                .clone()
                .ok_or_else(|| ServiceError::NotFound(format!("stimulus `{token}` has no texture"))),
        }
    }
}
