use std::collections::VecDeque;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::design::{ExperimentDesign, Pair};
use super::questionnaire::{QuestionnaireResponse, ScaleError};
use super::rng::{below, shuffle, stream, Stream};
use crate::scalar::Rational;

pub type Timestamp = DateTime<Utc>;

/// Which member of a pair is drawn on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

/// One scheduled display of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub id: u32,
    /// Index into the design's pair list.
    pub pair_index: usize,
    pub pair: Pair,
    /// Member of the pair rendered on the left.
    pub left: Side,
    /// 1 and 2 for the two regular rounds, 3 for a tie-break.
    pub round: u8,
}

impl Presentation {
    pub fn left_stimulus(&self) -> usize {
        match self.left {
            Side::A => self.pair.a,
            Side::B => self.pair.b,
        }
    }

    pub fn right_stimulus(&self) -> usize {
        self.pair.other(self.left_stimulus())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub presentation: Presentation,
    /// Position of this presentation in the realized session, from 0.
    pub sequence_index: usize,
    /// Design index of the chosen stimulus.
    pub chosen: usize,
    /// Seconds from display to choice.
    pub response_time: f64,
    pub at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Comparing,
    Questionnaire,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("operation needs phase {expected:?}, session is in {actual:?}")]
    Phase { expected: Phase, actual: Phase },
    #[error("presentation {got} is not the current presentation ({expected:?})")]
    OutOfOrder { expected: Option<u32>, got: u32 },
    #[error("stimulus `{0}` is not part of the presented pair")]
    NotInPair(String),
    #[error("unknown stimulus `{0}`")]
    UnknownStimulus(String),
    #[error("response time must be a finite, non-negative number of seconds, got {0}")]
    ResponseTime(f64),
    #[error("tally ({0}, {1}) is not a finished pair: the winner needs exactly two votes")]
    Tally(u32, u32),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

/// Running count for one pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct PairTally {
    wins_a: u8,
    wins_b: u8,
    /// First two choices, `true` when A won.
    first: Option<bool>,
    tie_break: bool,
}

/// Answers plus the stimuli they refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireOutcome {
    pub response: QuestionnaireResponse,
    pub most_preferred: usize,
    pub least_preferred: usize,
    /// Several stimuli shared the top score; the lowest index was taken.
    pub most_tied: bool,
    /// Several stimuli shared the bottom score; the highest index was taken.
    pub least_tied: bool,
}

/// Final tally of one pair and its preference score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair: Pair,
    pub t_a: u32,
    pub t_b: u32,
    pub ps: Rational,
}

/// Preference score `(t_a − t_b) / (t_a + t_b)` of a finished pair.
pub fn pair_outcome(t_a: u32, t_b: u32) -> Result<Rational, ProtocolError> {
    if !matches!((t_a, t_b), (2, 0) | (0, 2) | (2, 1) | (1, 2)) {
        return Err(ProtocolError::Tally(t_a, t_b));
    }
    Ok(Rational::new(t_a as i64 - t_b as i64, (t_a + t_b) as i64))
}

/// State of one participant's session.
///
/// Only [`SessionState::record_choice`] and [`SessionState::complete`]
/// mutate it, and both are deterministic given the seed, so folding the same
/// choices over [`build_schedule`] always reproduces the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    design: Arc<ExperimentDesign>,
    seed: u64,
    pending: VecDeque<Presentation>,
    history: Vec<ChoiceRecord>,
    phase: Phase,
    started_at: Timestamp,
    ended_at: Option<Timestamp>,
    questionnaire: Option<QuestionnaireOutcome>,
    tallies: Vec<PairTally>,
    next_id: u32,
    sides: ChaCha8Rng,
    insertions: ChaCha8Rng,
}

fn draw_side(rng: &mut ChaCha8Rng) -> Side {
    if below(rng, 2) == 0 {
        Side::A
    } else {
        Side::B
    }
}

/// Schedules every pair twice in seed-determined random order, each
/// presentation with an independently drawn left/right placement.
pub fn build_schedule(design: Arc<ExperimentDesign>, seed: u64, started_at: Timestamp) -> SessionState {
    let mut order = stream(seed, Stream::Order);
    let mut sides = stream(seed, Stream::Sides);
    let insertions = stream(seed, Stream::Insertions);

    let mut slots: Vec<usize> = (0..design.pairs().len()).flat_map(|p| [p, p]).collect();
    shuffle(&mut order, &mut slots);

    let mut seen = vec![false; design.pairs().len()];
    let pending: VecDeque<Presentation> = slots
        .into_iter()
        .enumerate()
        .map(|(i, pair_index)| {
            let round = if seen[pair_index] { 2 } else { 1 };
            seen[pair_index] = true;
            Presentation {
                id: i as u32,
                pair_index,
                pair: design.pairs()[pair_index],
                left: draw_side(&mut sides),
                round,
            }
        })
        .collect();

    SessionState {
        tallies: vec![PairTally::default(); design.pairs().len()],
        next_id: pending.len() as u32,
        design,
        seed,
        pending,
        history: Vec::new(),
        phase: Phase::Comparing,
        started_at,
        ended_at: None,
        questionnaire: None,
        sides,
        insertions,
    }
}

impl SessionState {
    pub fn design(&self) -> &Arc<ExperimentDesign> {
        &self.design
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn history(&self) -> &[ChoiceRecord] {
        &self.history
    }

    pub fn pending(&self) -> impl ExactSizeIterator<Item = &Presentation> {
        self.pending.iter()
    }

    pub fn current(&self) -> Option<&Presentation> {
        self.pending.front()
    }

    pub fn started_at(&self) -> Timestamp {
        self.started_at
    }

    pub fn ended_at(&self) -> Option<Timestamp> {
        self.ended_at
    }

    pub fn questionnaire(&self) -> Option<&QuestionnaireOutcome> {
        self.questionnaire.as_ref()
    }

    /// Presentations shown so far plus those still pending.
    pub fn scheduled_total(&self) -> usize {
        self.history.len() + self.pending.len()
    }

    fn require(&self, expected: Phase) -> Result<(), ProtocolError> {
        if self.phase != expected {
            return Err(ProtocolError::Phase {
                expected,
                actual: self.phase,
            });
        }
        Ok(())
    }

    /// Records the participant's pick for the current presentation.
    ///
    /// When this is a pair's second choice and it disagrees with the first,
    /// a tie-break presentation is inserted at a uniformly random slot among
    /// the remaining ones (slot 0 to `pending.len()` inclusive).
    pub fn record_choice(
        &mut self,
        presentation_id: u32,
        chosen_id: &str,
        response_time: f64,
        at: Timestamp,
    ) -> Result<&ChoiceRecord, ProtocolError> {
        self.require(Phase::Comparing)?;
        let head = *self.pending.front().expect("comparing phase has a pending presentation");
        if head.id != presentation_id {
            return Err(ProtocolError::OutOfOrder {
                expected: Some(head.id),
                got: presentation_id,
            });
        }
        let chosen = self
            .design
            .index_of(chosen_id)
            .ok_or_else(|| ProtocolError::UnknownStimulus(chosen_id.to_string()))?;
        if !head.pair.contains(chosen) {
            return Err(ProtocolError::NotInPair(chosen_id.to_string()));
        }
        if !(response_time.is_finite() && response_time >= 0.0) {
            return Err(ProtocolError::ResponseTime(response_time));
        }

        self.pending.pop_front();
        let a_won = chosen == head.pair.a;
        let tally = &mut self.tallies[head.pair_index];
        if a_won {
            tally.wins_a += 1;
        } else {
            tally.wins_b += 1;
        }
        let needs_tie_break = match (head.round, tally.first) {
            (1, _) => {
                tally.first = Some(a_won);
                false
            }
            (2, Some(first)) => first != a_won,
            _ => false,
        };
        if needs_tie_break {
            tally.tie_break = true;
            let presentation = Presentation {
                id: self.next_id,
                pair_index: head.pair_index,
                pair: head.pair,
                left: draw_side(&mut self.sides),
                round: 3,
            };
            self.next_id += 1;
            let slot = below(&mut self.insertions, self.pending.len() as u64 + 1) as usize;
            self.pending.insert(slot, presentation);
        }

        self.history.push(ChoiceRecord {
            presentation: head,
            sequence_index: self.history.len(),
            chosen,
            response_time,
            at,
        });
        if self.pending.is_empty() {
            self.phase = Phase::Questionnaire;
        }
        Ok(self.history.last().unwrap())
    }

    /// Final outcome of every pair, in design pair order.
    pub fn outcomes(&self) -> Result<Vec<PairOutcome>, ProtocolError> {
        if self.phase == Phase::Comparing {
            return Err(ProtocolError::Phase {
                expected: Phase::Questionnaire,
                actual: self.phase,
            });
        }
        self.design
            .pairs()
            .iter()
            .zip(&self.tallies)
            .map(|(&pair, t)| {
                let (t_a, t_b) = (t.wins_a as u32, t.wins_b as u32);
                Ok(PairOutcome {
                    pair,
                    t_a,
                    t_b,
                    ps: pair_outcome(t_a, t_b)?,
                })
            })
            .collect()
    }

    /// Σps per stimulus, indexed like the design's stimuli.
    pub fn scores(&self) -> Result<Vec<Rational>, ProtocolError> {
        let mut totals = vec![Rational::from_integer(0); self.design.len()];
        for o in self.outcomes()? {
            totals[o.pair.a] += o.ps;
            totals[o.pair.b] -= o.ps;
        }
        Ok(totals)
    }

    /// Number of tie-break presentations scheduled so far.
    pub fn repetition_count(&self) -> usize {
        self.tallies.iter().filter(|t| t.tie_break).count()
    }

    /// Seconds between start and completion.
    pub fn duration(&self) -> Result<f64, ProtocolError> {
        self.require(Phase::Complete)?;
        let elapsed = self.ended_at.expect("complete session has an end time") - self.started_at;
        Ok(elapsed
            .num_nanoseconds()
            .map_or(elapsed.num_milliseconds() as f64 / 1e3, |n| n as f64 / 1e9))
    }

    /// Most and least preferred stimuli by Σps. Ties go to the lowest index
    /// for "most" and the highest index for "least".
    pub fn extremes(&self) -> Result<(usize, bool, usize, bool), ProtocolError> {
        let scores = self.scores()?;
        let max = *scores.iter().max().unwrap();
        let min = *scores.iter().min().unwrap();
        let most = scores.iter().position(|s| *s == max).unwrap();
        let least = scores.iter().rposition(|s| *s == min).unwrap();
        let count = |v: Rational| scores.iter().filter(|s| **s == v).count();
        Ok((most, count(max) > 1, least, count(min) > 1))
    }

    /// Stores the questionnaire and closes the session.
    pub fn complete(&mut self, response: QuestionnaireResponse, at: Timestamp) -> Result<&QuestionnaireOutcome, ProtocolError> {
        self.require(Phase::Questionnaire)?;
        response.validate()?;
        let (most_preferred, most_tied, least_preferred, least_tied) = self.extremes()?;
        self.questionnaire = Some(QuestionnaireOutcome {
            response,
            most_preferred,
            least_preferred,
            most_tied,
            least_tied,
        });
        self.ended_at = Some(at);
        self.phase = Phase::Complete;
        Ok(self.questionnaire.as_ref().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::design::{Shading, Stimulus, DEFAULT_PROMPT};
    use chrono::TimeZone;

    fn design(n: usize) -> Arc<ExperimentDesign> {
        let stimuli = (0..n)
            .map(|i| Stimulus {
                id: format!("s{i}"),
                mesh_ref: format!("m{i}.obj"),
                texture_ref: None,
                quality: 1000 * (i as u32 + 1),
                shading: Shading::Unlit,
            })
            .collect();
        Arc::new(ExperimentDesign::new(stimuli, DEFAULT_PROMPT).unwrap())
    }

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
    }

    /// Answers every presentation with `pick(presentation)`.
    fn run(state: &mut SessionState, mut pick: impl FnMut(&Presentation) -> usize) {
        while let Some(p) = state.current().copied() {
            let id = state.design().stimulus(pick(&p)).id.clone();
            state.record_choice(p.id, &id, 1.0, t0()).unwrap();
        }
    }

    #[test]
    fn eq3_worked_values() {
        assert_eq!(pair_outcome(2, 0).unwrap(), Rational::from_integer(1));
        assert_eq!(pair_outcome(2, 1).unwrap(), Rational::new(1, 3));
        assert_eq!(pair_outcome(0, 2).unwrap(), Rational::from_integer(-1));
        assert_eq!(pair_outcome(1, 2).unwrap(), -pair_outcome(2, 1).unwrap());
        for bad in [(1, 1), (3, 0), (1, 0), (2, 2)] {
            assert!(pair_outcome(bad.0, bad.1).is_err());
        }
    }

    #[test]
    fn schedule_has_each_pair_twice() {
        let s = build_schedule(design(4), 9, t0());
        assert_eq!(s.pending().len(), 12);
        let mut counts = [0; 6];
        for p in s.pending() {
            counts[p.pair_index] += 1;
        }
        assert_eq!(counts, [2; 6]);
        assert_eq!(s.phase(), Phase::Comparing);
        assert_eq!(build_schedule(design(4), 9, t0()), s);
    }

    #[test]
    fn consistent_pair_needs_no_tie_break() {
        let mut s = build_schedule(design(4), 1, t0());
        run(&mut s, |p| p.pair.a);
        assert_eq!(s.history().len(), 12);
        assert_eq!(s.repetition_count(), 0);
        assert!(s.outcomes().unwrap().iter().all(|o| (o.t_a, o.t_b) == (2, 0)));
        assert_eq!(s.phase(), Phase::Questionnaire);
    }

    #[test]
    fn inconsistent_pair_gets_third_presentation() {
        let mut s = build_schedule(design(2), 3, t0());
        let first = *s.current().unwrap();
        s.record_choice(first.id, "s0", 0.5, t0()).unwrap();
        let second = *s.current().unwrap();
        s.record_choice(second.id, "s1", 0.5, t0()).unwrap();
        let third = *s.current().unwrap();
        assert_eq!(third.round, 3);
        s.record_choice(third.id, "s0", 0.5, t0()).unwrap();
        let o = s.outcomes().unwrap()[0];
        assert_eq!((o.t_a, o.t_b), (2, 1));
        assert_eq!(o.ps, Rational::new(1, 3));
        assert_eq!(s.repetition_count(), 1);
    }

    #[test]
    fn all_inconsistent_reaches_upper_bound() {
        let mut s = build_schedule(design(4), 5, t0());
        // pick A in round 1 and B in rounds 2 and 3
        run(&mut s, |p| if p.round == 1 { p.pair.a } else { p.pair.b });
        assert_eq!(s.history().len(), 18);
        assert_eq!(s.repetition_count(), 6);
    }

    #[test]
    fn protocol_errors() {
        let mut s = build_schedule(design(3), 2, t0());
        let head = *s.current().unwrap();
        assert!(matches!(
            s.record_choice(head.id + 1, "s0", 1.0, t0()),
            Err(ProtocolError::OutOfOrder { .. })
        ));
        let outsider = (0..3).find(|i| !head.pair.contains(*i)).unwrap();
        let outsider_id = format!("s{outsider}");
        assert_eq!(
            s.record_choice(head.id, &outsider_id, 1.0, t0()).unwrap_err(),
            ProtocolError::NotInPair(outsider_id)
        );
        assert!(matches!(
            s.record_choice(head.id, "zz", 1.0, t0()),
            Err(ProtocolError::UnknownStimulus(_))
        ));
        assert!(matches!(
            s.record_choice(head.id, "s0", -1.0, t0()),
            Err(ProtocolError::ResponseTime(_)) | Err(ProtocolError::NotInPair(_))
        ));
        assert!(matches!(s.scores(), Err(ProtocolError::Phase { .. })));
        assert!(matches!(s.duration(), Err(ProtocolError::Phase { .. })));
        run(&mut s, |p| p.pair.a);
        assert!(matches!(s.record_choice(0, "s0", 1.0, t0()), Err(ProtocolError::Phase { .. })));
    }

    #[test]
    fn completion_and_duration() {
        let mut s = build_schedule(design(4), 11, t0());
        run(&mut s, |p| p.pair.b);
        let response = QuestionnaireResponse {
            realism_most_preferred: 7,
            realism_least_preferred: 2,
            confidence: 3,
        };
        let end = t0() + chrono::Duration::milliseconds(83_240);
        let outcome = s.complete(response, end).unwrap().clone();
        assert_eq!(outcome.most_preferred, 3);
        assert_eq!(outcome.least_preferred, 0);
        assert!(!outcome.most_tied);
        assert_eq!(s.phase(), Phase::Complete);
        assert!((s.duration().unwrap() - 83.24).abs() < 1e-12);
        assert!(s.complete(response, end).is_err());
    }

    #[test]
    fn scores_hit_the_maximum_and_sum_to_zero() {
        let mut s = build_schedule(design(4), 4, t0());
        // highest index always wins
        run(&mut s, |p| p.pair.b);
        let scores = s.scores().unwrap();
        assert_eq!(scores, [-3, -1, 1, 3].map(Rational::from_integer).to_vec());
        assert_eq!(scores.iter().sum::<Rational>(), Rational::from_integer(0));
    }
}
