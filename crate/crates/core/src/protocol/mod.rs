//! Forced-choice paired-comparison protocol.
//!
//! Every pair of stimuli is shown twice in random order with random
//! left/right placement. If the two choices disagree, a third presentation of
//! that pair is inserted at a random later slot. Each finished pair yields a
//! preference score `(t_a − t_b) / (t_a + t_b)`, one of ±1 or ±1/3.

mod design;
mod events;
mod questionnaire;
pub mod rng;
mod session;

pub use design::{
    full_factorial, generate_pairs, max_presentations, pair_count, DesignError, ExperimentDesign, MeshLevel, Pair, Shading, Stimulus,
    DEFAULT_PROMPT,
};
pub use events::{group_by_session, read_jsonl, write_jsonl, EventKind, LogError, SessionEvent, SessionLog, EVENT_SCHEMA_VERSION};
pub use questionnaire::{
    QuestionnaireResponse, ScaleError, CONFIDENCE_HIGH_ANCHOR, CONFIDENCE_LOW_ANCHOR, CONFIDENCE_PROMPT, REALISM_PROMPT, SCALE_MAX,
    SCALE_MIN,
};
pub use session::{
    build_schedule, pair_outcome, ChoiceRecord, PairOutcome, Phase, Presentation, ProtocolError, QuestionnaireOutcome, SessionState, Side,
    Timestamp,
};
