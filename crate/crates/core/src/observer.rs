//! Simulated participants.
//!
//! An observer sees the two stimuli of a presentation and picks the higher
//! quality one with probability `p`, which depends on the model and on the
//! quality difference `Δq = log2(q_hi / q_lo)` (one unit per doubling of the
//! triangle count). Each choice consumes exactly one uniform draw from the
//! session's choice stream, so models that yield the same `p` make the same
//! choices under the same seed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{circular_triads, pearson, preference_matrix, Tournament};
use crate::protocol::rng::{derive_seed, stream, Stream};
use crate::protocol::{EventKind, ExperimentDesign, Presentation, QuestionnaireResponse, SessionLog, Shading, Timestamp};
use crate::scalar::rational_to_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObserverModel {
    /// Always picks the higher quality stimulus; equal qualities go to A.
    Deterministic,
    /// Fair coin.
    Guesser,
    /// Picks the higher quality stimulus with probability σ(β·Δq).
    Logistic { beta: f64 },
    /// Logistic with β scaled by the geometric mean of the two stimuli's
    /// shading factors.
    ShadingMasked { beta: f64, unlit: f64, lambert: f64 },
}

impl ObserverModel {
    /// Probability of picking the higher quality stimulus.
    pub fn p_higher(&self, delta_q: f64, shadings: (Shading, Shading)) -> f64 {
        match *self {
            Self::Deterministic => 1.0,
            Self::Guesser => 0.5,
            Self::Logistic { beta } => logistic(beta, delta_q),
            Self::ShadingMasked { beta, unlit, lambert } => {
                let factor = |s: Shading| match s {
                    Shading::Unlit => unlit,
                    Shading::LambertDiffuse => lambert,
                };
                logistic(beta * (factor(shadings.0) * factor(shadings.1)).sqrt(), delta_q)
            }
        }
    }

    /// Same family with a different β; models without β are returned as is.
    pub fn with_beta(self, beta: f64) -> Self {
        match self {
            Self::Logistic { .. } => Self::Logistic { beta },
            Self::ShadingMasked { unlit, lambert, .. } => Self::ShadingMasked { beta, unlit, lambert },
            other => other,
        }
    }
}

fn logistic(beta: f64, delta_q: f64) -> f64 {
    if delta_q == 0.0 {
        0.5
    } else if beta.is_infinite() {
        1.0
    } else {
        1.0 / (1.0 + (-beta * delta_q).exp())
    }
}

impl fmt::Display for ObserverModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Deterministic => f.write_str("deterministic"),
            Self::Guesser => f.write_str("guesser"),
            Self::Logistic { beta } => write!(f, "logistic(beta={beta})"),
            Self::ShadingMasked { beta, unlit, lambert } => {
                write!(f, "shading_masked(beta={beta}, unlit={unlit}, lambert={lambert})")
            }
        }
    }
}

/// Parses a model name; β defaults to 1 and masking factors to 1.
pub fn parse_model(name: &str, beta: Option<f64>, unlit: Option<f64>, lambert: Option<f64>) -> Result<ObserverModel, String> {
    let beta = beta.unwrap_or(1.0);
    if beta.is_nan() || beta < 0.0 {
        return Err(format!("beta must be ≥ 0, got {beta}"));
    }
    match name {
        "deterministic" => Ok(ObserverModel::Deterministic),
        "guesser" => Ok(ObserverModel::Guesser),
        "logistic" => Ok(ObserverModel::Logistic { beta }),
        "shading_masked" | "shading-masked" => Ok(ObserverModel::ShadingMasked {
            beta,
            unlit: unlit.unwrap_or(1.0),
            lambert: lambert.unwrap_or(1.0),
        }),
        other => Err(format!(
            "unknown model `{other}` (expected deterministic, guesser, logistic or shading_masked)"
        )),
    }
}

impl FromStr for ObserverModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_model(s, None, None, None)
    }
}

/// Timing of simulated sessions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// Median response time in seconds.
    pub median_response_s: f64,
    /// Log-scale spread of response times.
    pub response_sigma: f64,
    /// Time spent on the questionnaire.
    pub questionnaire_s: f64,
    /// Start time of every simulated session.
    pub epoch: Timestamp,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            median_response_s: 4.0,
            response_sigma: 0.5,
            questionnaire_s: 30.0,
            epoch: DateTime::<Utc>::from_timestamp(1_600_000_000, 0).expect("valid epoch"),
        }
    }
}

fn seconds(s: f64) -> Duration {
    Duration::nanoseconds((s * 1e9).round() as i64)
}

fn choose(model: &ObserverModel, design: &ExperimentDesign, p: &Presentation, rng: &mut ChaCha8Rng) -> usize {
    let (a, b) = (p.pair.a, p.pair.b);
    let (sa, sb) = (design.stimulus(a), design.stimulus(b));
    let (hi, lo) = if sa.quality >= sb.quality { (a, b) } else { (b, a) };
    let delta = (design.stimulus(hi).quality as f64 / design.stimulus(lo).quality as f64).log2();
    let u: f64 = rng.random();
    if u < model.p_higher(delta, (sa.shading, sb.shading)) {
        hi
    } else {
        lo
    }
}

/// Maps a stimulus' quality onto 1..=10 by its log position between the
/// design's extreme levels.
fn realism_of(design: &ExperimentDesign, stimulus: usize, rng: &mut ChaCha8Rng) -> u8 {
    let levels = design.quality_levels();
    let (lo, hi) = (levels[0] as f64, levels[levels.len() - 1] as f64);
    let q = design.stimulus(stimulus).quality as f64;
    let position = if hi > lo { (q / lo).ln() / (hi / lo).ln() } else { 0.5 };
    let jitter = rng.random_range(0..3u64) as f64 - 1.0;
    (1.0 + (9.0 * position).round() + jitter).clamp(1.0, 10.0) as u8
}

/// Runs one session to completion. The session id is derived from the seed.
pub fn simulate_session(model: &ObserverModel, design: Arc<ExperimentDesign>, seed: u64, config: &SimulationConfig) -> SessionLog {
    simulate_session_with_id(model, design, seed, config, format!("sim-{seed:016x}"))
}

pub fn simulate_session_with_id(
    model: &ObserverModel,
    design: Arc<ExperimentDesign>,
    seed: u64,
    config: &SimulationConfig,
    id: String,
) -> SessionLog {
    let mut choices = stream(seed, Stream::Choices);
    let mut times = stream(seed, Stream::ResponseTimes);
    let mut answers = stream(seed, Stream::Questionnaire);
    let rt = LogNormal::new(config.median_response_s.ln(), config.response_sigma).expect("valid lognormal");

    let mut now = config.epoch;
    let mut log = SessionLog::start(id, design.clone(), seed, now, Some(model.to_string()));
    while let Some(head) = log.state().current().cloned() {
        let shown = log.show_current(now).expect("head not yet shown");
        log.apply(shown).expect("simulated show is valid");
        let response_time: f64 = rt.sample(&mut times);
        now += seconds(response_time);
        let chosen = choose(model, &design, &head, &mut choices);
        log.apply(EventKind::ChoiceMade {
            presentation_id: head.id,
            chosen: design.stimulus(chosen).id.clone(),
            response_time,
            at: now,
        })
        .expect("simulated choice is valid");
    }

    let (most, _, least, _) = log.state().extremes().expect("all pairs finished");
    let guessing = log.state().repetition_count() as f64 / design.pairs().len() as f64;
    let response = QuestionnaireResponse {
        realism_most_preferred: realism_of(&design, most, &mut answers),
        realism_least_preferred: realism_of(&design, least, &mut answers),
        // a pure guesser repeats half of the pairs
        confidence: (1.0 + (9.0 * (2.0 * guessing).min(1.0)).round()) as u8,
    };
    now += seconds(config.questionnaire_s);
    for event in log.completion_events(response, now).expect("questionnaire phase") {
        log.apply(event).expect("simulated completion is valid");
    }
    log
}

/// `count` sessions with seeds derived from `seed`, in index order.
pub fn simulate_many(
    model: &ObserverModel,
    design: Arc<ExperimentDesign>,
    count: usize,
    seed: u64,
    config: &SimulationConfig,
) -> Vec<SessionLog> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_session(model, design.clone(), derive_seed(seed, i), config))
        .collect()
}

/// Observables of one session used by [`power_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionObservables {
    /// Quality rank against Σps; `None` when Σps is constant.
    pub r: Option<f64>,
    /// Share of pairs that needed a third presentation.
    pub repetition_rate: f64,
    pub zeta: f64,
}

pub fn observe(log: &SessionLog) -> SessionObservables {
    let state = log.state();
    let design = state.design();
    let levels = design.quality_levels();
    let ids: Vec<String> = design.stimuli().iter().map(|s| s.id.clone()).collect();
    let matrix = preference_matrix(&state.outcomes().expect("finished session"), &ids).expect("every pair has an outcome");
    let x: Vec<f64> = design
        .stimuli()
        .iter()
        .map(|s| (levels.binary_search(&s.quality).unwrap() + 1) as f64)
        .collect();
    let y: Vec<f64> = matrix.totals().iter().map(|v| rational_to_f64(*v)).collect();
    SessionObservables {
        r: pearson(&x, &y).ok().map(|t| t.value),
        repetition_rate: state.repetition_count() as f64 / design.pairs().len() as f64,
        zeta: circular_triads(&Tournament::from_matrix(&matrix).expect("no zero scores")).zeta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRow {
    pub beta: f64,
    /// Mean per-session correlation over sessions where it is defined.
    pub mean_r: f64,
    pub repetition_rate: f64,
    pub mean_zeta: f64,
    /// Sessions whose correlation was undefined and left out of `mean_r`.
    pub undefined_r: usize,
}

/// Simulates `replications` sessions per β of `family` and averages the
/// observables. Replication `i` uses seed `derive_seed(seed, i)` for every β.
pub fn power_sweep(
    family: ObserverModel,
    betas: &[f64],
    design: Arc<ExperimentDesign>,
    replications: usize,
    seed: u64,
    config: &SimulationConfig,
) -> Vec<PowerRow> {
    assert!(replications >= 1, "power_sweep needs at least one replication");
    betas
        .iter()
        .map(|&beta| {
            let model = family.with_beta(beta);
            let obs: Vec<SessionObservables> = (0..replications as u64)
                .into_par_iter()
                .map(|i| observe(&simulate_session(&model, design.clone(), derive_seed(seed, i), config)))
                .collect();
            let rs: Vec<f64> = obs.iter().filter_map(|o| o.r).collect();
            let n = obs.len() as f64;
            PowerRow {
                beta,
                mean_r: if rs.is_empty() {
                    0.0
                } else {
                    rs.iter().sum::<f64>() / rs.len() as f64
                },
                repetition_rate: obs.iter().map(|o| o.repetition_rate).sum::<f64>() / n,
                mean_zeta: obs.iter().map(|o| o.zeta).sum::<f64>() / n,
                undefined_r: obs.len() - rs.len(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Stimulus, DEFAULT_PROMPT};
    use crate::Rational;

    fn ladder(shading: Shading) -> Arc<ExperimentDesign> {
        let stimuli = [20_000, 10_000, 5_000, 1_000]
            .iter()
            .map(|&q| Stimulus {
                id: format!("m{q}"),
                mesh_ref: format!("m{q}.obj"),
                texture_ref: None,
                quality: q,
                shading,
            })
            .collect();
        Arc::new(ExperimentDesign::new(stimuli, DEFAULT_PROMPT).unwrap())
    }

    fn choices(log: &SessionLog) -> Vec<usize> {
        log.state().history().iter().map(|c| c.chosen).collect()
    }

    #[test]
    fn deterministic_observer_scores() {
        let log = simulate_session(
            &ObserverModel::Deterministic,
            ladder(Shading::Unlit),
            11,
            &SimulationConfig::default(),
        );
        let scores = log.state().scores().unwrap();
        let expect: Vec<Rational> = [3, 1, -1, -3].iter().map(|&v| Rational::from_integer(v)).collect();
        assert_eq!(scores, expect);
        assert_eq!(log.state().repetition_count(), 0);
        assert_eq!(log.state().history().len(), 12);
    }

    #[test]
    fn zero_beta_is_guessing() {
        let design = ladder(Shading::Unlit);
        let cfg = SimulationConfig::default();
        for seed in 0..20 {
            let g = simulate_session(&ObserverModel::Guesser, design.clone(), seed, &cfg);
            let l = simulate_session(&ObserverModel::Logistic { beta: 0.0 }, design.clone(), seed, &cfg);
            assert_eq!(choices(&g), choices(&l));
        }
    }

    #[test]
    fn unit_masking_is_logistic() {
        let design = ladder(Shading::LambertDiffuse);
        let cfg = SimulationConfig::default();
        let masked = ObserverModel::ShadingMasked {
            beta: 1.3,
            unlit: 1.0,
            lambert: 1.0,
        };
        for seed in 0..20 {
            let a = simulate_session(&masked, design.clone(), seed, &cfg);
            let b = simulate_session(&ObserverModel::Logistic { beta: 1.3 }, design.clone(), seed, &cfg);
            assert_eq!(a.state().history(), b.state().history());
        }
    }

    #[test]
    fn infinite_beta_is_deterministic() {
        let design = ladder(Shading::Unlit);
        let cfg = SimulationConfig::default();
        let inf = simulate_session(&ObserverModel::Logistic { beta: f64::INFINITY }, design.clone(), 5, &cfg);
        let det = simulate_session(&ObserverModel::Deterministic, design, 5, &cfg);
        assert_eq!(choices(&inf), choices(&det));
    }

    #[test]
    fn adjacent_ladder_step_is_one_unit() {
        let m = ObserverModel::Logistic { beta: 2.0 };
        let p = m.p_higher((10_000f64 / 5_000.0).log2(), (Shading::Unlit, Shading::Unlit));
        assert!((p - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn sessions_are_reproducible_and_timed() {
        let design = ladder(Shading::Unlit);
        let cfg = SimulationConfig::default();
        let model = ObserverModel::Logistic { beta: 0.7 };
        let a = simulate_session(&model, design.clone(), 99, &cfg);
        let b = simulate_session(&model, design, 99, &cfg);
        assert_eq!(a, b);
        let d = a.state().duration().unwrap();
        let rts: f64 = a.state().history().iter().map(|c| c.response_time).sum();
        assert!((d - rts - cfg.questionnaire_s).abs() < 1e-6);
    }

    #[test]
    fn parses_models() {
        assert_eq!("guesser".parse::<ObserverModel>(), Ok(ObserverModel::Guesser));
        assert_eq!(
            parse_model("logistic", Some(1.5), None, None),
            Ok(ObserverModel::Logistic { beta: 1.5 })
        );
        assert!(parse_model("logistic", Some(-1.0), None, None).is_err());
        assert!("bayesian".parse::<ObserverModel>().is_err());
    }

    #[test]
    fn sweep_limits() {
        let design = ladder(Shading::Unlit);
        let rows = power_sweep(
            ObserverModel::Logistic { beta: 0.0 },
            &[0.0, f64::INFINITY],
            design,
            400,
            3,
            &SimulationConfig::default(),
        );
        let (null, sure) = (rows[0], rows[1]);
        assert!((null.repetition_rate - 0.5).abs() < 0.05);
        assert!(null.mean_r.abs() < 0.1);
        assert!(null.mean_zeta < 0.9);
        assert_eq!(sure.repetition_rate, 0.0);
        assert_eq!(sure.mean_r, 1.0);
        assert_eq!(sure.mean_zeta, 1.0);
    }
}
