//! Append-only session event log and its replay.
//!
//! Every state change of a session is one [`SessionEvent`]. A log is a
//! sequence of events with consecutive `seq` numbers starting at 0; the
//! first event is always `session_started`. Logs are stored as JSON Lines and
//! several sessions may share one file.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::design::ExperimentDesign;
use super::questionnaire::QuestionnaireResponse;
use super::session::{build_schedule, Phase, ProtocolError, SessionState, Timestamp};

/// Version written into every event's `v` field.
pub const EVENT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    SessionStarted {
        seed: u64,
        design: ExperimentDesign,
        at: Timestamp,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        participant: Option<String>,
    },
    PresentationShown {
        presentation_id: u32,
        round: u8,
        left: String,
        right: String,
        at: Timestamp,
    },
    ChoiceMade {
        presentation_id: u32,
        chosen: String,
        response_time: f64,
        at: Timestamp,
    },
    QuestionnaireSubmitted {
        response: QuestionnaireResponse,
        most_preferred: String,
        least_preferred: String,
        most_tied: bool,
        least_tied: bool,
        at: Timestamp,
    },
    SessionCompleted {
        at: Timestamp,
        duration_s: f64,
        repetitions: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub v: u32,
    pub session: String,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("session `{session}`: expected seq {expected}, found {found}")]
    Sequence { session: String, expected: u64, found: u64 },
    #[error("session `{0}`: log must begin with session_started")]
    MissingStart(String),
    #[error("session `{0}`: session_started may only appear first")]
    DuplicateStart(String),
    #[error("event for session `{found}` in log of `{expected}`")]
    WrongSession { expected: String, found: String },
    #[error("unsupported event schema version {0}")]
    Version(u32),
    #[error("event does not match replayed state: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A session together with the events that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    id: String,
    state: SessionState,
    events: Vec<SessionEvent>,
    shown: Option<u32>,
}

impl SessionLog {
    /// Starts a new session; the returned log holds its `session_started` event.
    pub fn start(id: impl Into<String>, design: Arc<ExperimentDesign>, seed: u64, at: Timestamp, participant: Option<String>) -> Self {
        let id = id.into();
        let event = SessionEvent {
            v: EVENT_SCHEMA_VERSION,
            session: id.clone(),
            seq: 0,
            kind: EventKind::SessionStarted {
                seed,
                design: (*design).clone(),
                at,
                participant,
            },
        };
        Self {
            id,
            state: build_schedule(design, seed, at),
            events: vec![event],
            shown: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn participant(&self) -> Option<&str> {
        match &self.events[0].kind {
            EventKind::SessionStarted { participant, .. } => participant.as_deref(),
            _ => None,
        }
    }

    /// Builds the `presentation_shown` event for the current head, or `None`
    /// if it was already announced or there is nothing to show.
    pub fn show_current(&self, at: Timestamp) -> Option<EventKind> {
        let head = self.state.current()?;
        if self.shown == Some(head.id) {
            return None;
        }
        let design = self.state.design();
        Some(EventKind::PresentationShown {
            presentation_id: head.id,
            round: head.round,
            left: design.stimulus(head.left_stimulus()).id.clone(),
            right: design.stimulus(head.right_stimulus()).id.clone(),
            at,
        })
    }

    /// Builds the two closing events for a questionnaire submission without
    /// mutating the log.
    pub fn completion_events(&self, response: QuestionnaireResponse, at: Timestamp) -> Result<[EventKind; 2], ProtocolError> {
        let mut probe = self.state.clone();
        let outcome = probe.complete(response, at)?.clone();
        let design = probe.design();
        Ok([
            EventKind::QuestionnaireSubmitted {
                response,
                most_preferred: design.stimulus(outcome.most_preferred).id.clone(),
                least_preferred: design.stimulus(outcome.least_preferred).id.clone(),
                most_tied: outcome.most_tied,
                least_tied: outcome.least_tied,
                at,
            },
            EventKind::SessionCompleted {
                at,
                duration_s: probe.duration()?,
                repetitions: probe.repetition_count(),
            },
        ])
    }

    /// Applies one event to the state and appends it to the log. On error
    /// neither the state nor the log changes.
    pub fn apply(&mut self, kind: EventKind) -> Result<&SessionEvent, LogError> {
        match &kind {
            EventKind::SessionStarted { .. } => return Err(LogError::DuplicateStart(self.id.clone())),
            EventKind::PresentationShown {
                presentation_id,
                left,
                right,
                round,
                ..
            } => {
                let expected = self.show_current(chrono::DateTime::UNIX_EPOCH);
                let matches = matches!(
                    &expected,
                    Some(EventKind::PresentationShown { presentation_id: p, left: l, right: r, round: k, .. })
                        if p == presentation_id && l == left && r == right && k == round
                );
                if !matches {
                    return Err(LogError::Mismatch(format!(
                        "presentation {presentation_id} is not the next one to show"
                    )));
                }
                self.shown = Some(*presentation_id);
            }
            EventKind::ChoiceMade {
                presentation_id,
                chosen,
                response_time,
                at,
            } => {
                self.state.record_choice(*presentation_id, chosen, *response_time, *at)?;
            }
            EventKind::QuestionnaireSubmitted {
                response,
                most_preferred,
                least_preferred,
                most_tied,
                least_tied,
                at,
            } => {
                let mut next = self.state.clone();
                let outcome = next.complete(*response, *at)?;
                let design = self.state.design();
                if design.stimulus(outcome.most_preferred).id != *most_preferred
                    || design.stimulus(outcome.least_preferred).id != *least_preferred
                    || outcome.most_tied != *most_tied
                    || outcome.least_tied != *least_tied
                {
                    return Err(LogError::Mismatch(
                        "most/least preferred stimuli differ from the replayed scores".into(),
                    ));
                }
                self.state = next;
            }
            EventKind::SessionCompleted { repetitions, .. } => {
                if self.state.phase() != Phase::Complete {
                    return Err(ProtocolError::Phase {
                        expected: Phase::Complete,
                        actual: self.state.phase(),
                    }
                    .into());
                }
                if *repetitions != self.state.repetition_count() {
                    return Err(LogError::Mismatch(format!("repetition count {repetitions} differs from replay")));
                }
            }
        }
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent {
            v: EVENT_SCHEMA_VERSION,
            session: self.id.clone(),
            seq,
            kind,
        });
        Ok(self.events.last().unwrap())
    }

    /// Rebuilds a session by folding its events in order.
    pub fn replay(events: &[SessionEvent]) -> Result<Self, LogError> {
        let first = events.first().ok_or_else(|| LogError::MissingStart(String::new()))?;
        check_version(first)?;
        let EventKind::SessionStarted {
            seed,
            design,
            at,
            participant,
        } = &first.kind
        else {
            return Err(LogError::MissingStart(first.session.clone()));
        };
        if first.seq != 0 {
            return Err(LogError::Sequence {
                session: first.session.clone(),
                expected: 0,
                found: first.seq,
            });
        }
        let mut log = SessionLog::start(first.session.clone(), Arc::new(design.clone()), *seed, *at, participant.clone());
        for (expected, event) in events.iter().enumerate().skip(1) {
            check_version(event)?;
            if event.session != log.id {
                return Err(LogError::WrongSession {
                    expected: log.id.clone(),
                    found: event.session.clone(),
                });
            }
            if event.seq != expected as u64 {
                return Err(LogError::Sequence {
                    session: log.id.clone(),
                    expected: expected as u64,
                    found: event.seq,
                });
            }
            log.apply(event.kind.clone())?;
        }
        Ok(log)
    }
}

fn check_version(event: &SessionEvent) -> Result<(), LogError> {
    if event.v != EVENT_SCHEMA_VERSION {
        return Err(LogError::Version(event.v));
    }
    Ok(())
}

/// Writes one JSON object per line.
pub fn write_jsonl<'a, W: Write>(mut out: W, events: impl IntoIterator<Item = &'a SessionEvent>) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads events from JSON Lines, skipping blank lines.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<SessionEvent>, LogError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|source| LogError::Json { line: i + 1, source })?);
    }
    Ok(events)
}

/// Splits a mixed event stream into per-session streams, in order of each
/// session's first appearance.
pub fn group_by_session(events: Vec<SessionEvent>) -> Vec<Vec<SessionEvent>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<SessionEvent>> = Default::default();
    for e in events {
        if !groups.contains_key(&e.session) {
            order.push(e.session.clone());
        }
        groups.entry(e.session.clone()).or_default().push(e);
    }
    order.into_iter().map(|id| groups.remove(&id).unwrap()).collect()
}
