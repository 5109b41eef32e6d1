//! Multi-session report.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::confidence::ConfidenceCluster;
use super::matrix::{mean_matrix, preference_matrix, AggregationError, MatrixView, PreferenceMatrix};
use super::stats::{kruskal_wallis, pearson, ranksum_z, wilcoxon_signed_rank, Method, TestResult};
use super::triads::{circular_triads, Tournament, TriadSummary};
use crate::protocol::{ExperimentDesign, Phase, ProtocolError, SessionLog, Shading};
use crate::scalar::{rational_to_f64, Rational};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    #[default]
    None,
    Shading,
    Confidence,
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Shading => "shading",
            Self::Confidence => "confidence",
        })
    }
}

impl FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "" | "none" | "all" => Ok(Self::None),
            "shading" => Ok(Self::Shading),
            "confidence" => Ok(Self::Confidence),
            other => Err(format!("unknown grouping `{other}` (expected none, shading or confidence)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no sessions to aggregate")]
    Empty,
    #[error("session `{0}` is not complete")]
    Incomplete(String),
    #[error("session `{0}` uses a different design than the first session")]
    IncompatibleDesign(String),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Count, mean, sample standard deviation and range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: 0.0,
                sd: 0.0,
                min: 0.0,
                max: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n,
            mean,
            sd,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusInfo {
    pub id: String,
    pub quality: u32,
    /// 1-based position of `quality` among the design's distinct levels.
    pub quality_rank: usize,
    pub shading: Shading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
    pub seed: u64,
    pub presentations: usize,
    pub repetitions: usize,
    pub duration_s: f64,
    pub confidence: u8,
    pub cluster: ConfidenceCluster,
    pub most_preferred: String,
    pub least_preferred: String,
    pub realism_most_preferred: u8,
    pub realism_least_preferred: u8,
    pub triads: TriadSummary,
    pub matrix: MatrixView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelComparison {
    pub lower: u32,
    pub higher: u32,
    /// Σps at `lower` against Σps at `higher`; negative Z means the lower
    /// level scored lower.
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTriads {
    pub session: String,
    #[serde(flatten)]
    pub triads: TriadSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTest {
    pub name: String,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub key: String,
    pub sessions: Vec<String>,
    pub stimuli: Vec<String>,
    pub mean_matrix: Option<MatrixView>,
    /// Quality rank against Σps over (session × stimulus) rows.
    pub pearson: Option<TestResult>,
    pub kruskal_wallis: Option<TestResult>,
    pub ranksum: Vec<LevelComparison>,
    /// Realism of the most against the least preferred stimulus, paired by session.
    pub realism: Option<TestResult>,
    pub triads: Vec<SessionTriads>,
    pub mean_zeta: Option<f64>,
    pub duration_s: Summary,
    pub repetitions: Summary,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub grouping: Grouping,
    pub stimuli: Vec<StimulusInfo>,
    pub sessions: Vec<SessionSummary>,
    pub groups: Vec<GroupReport>,
    /// Paired tests between groups, where every participant contributes to both.
    pub comparisons: Vec<NamedTest>,
}

/// Per-session data the group reports draw on.
struct Prepared {
    id: String,
    matrix: PreferenceMatrix<Rational>,
    /// Per design pair: whether a third presentation was needed.
    repeated: Vec<bool>,
    duration: f64,
    realism: (u8, u8),
    cluster: ConfidenceCluster,
}

fn prepare(log: &SessionLog, ids: &[String]) -> Result<(Prepared, SessionSummary), ReportError> {
    let state = log.state();
    if state.phase() != Phase::Complete {
        return Err(ReportError::Incomplete(log.id().to_string()));
    }
    let outcomes = state.outcomes()?;
    let matrix = preference_matrix(&outcomes, ids)?;
    let q = state.questionnaire().expect("complete session has a questionnaire");
    let cluster = ConfidenceCluster::classify(q.response.confidence).map_err(ProtocolError::from)?;
    let duration = state.duration()?;
    let triads = circular_triads(&Tournament::from_matrix(&matrix).expect("protocol scores are never zero"));
    let design = state.design();
    let summary = SessionSummary {
        session: log.id().to_string(),
        participant: log.participant().map(str::to_string),
        seed: state.seed(),
        presentations: state.history().len(),
        repetitions: state.repetition_count(),
        duration_s: duration,
        confidence: q.response.confidence,
        cluster,
        most_preferred: design.stimulus(q.most_preferred).id.clone(),
        least_preferred: design.stimulus(q.least_preferred).id.clone(),
        realism_most_preferred: q.response.realism_most_preferred,
        realism_least_preferred: q.response.realism_least_preferred,
        triads,
        matrix: MatrixView::from(&matrix),
    };
    let prepared = Prepared {
        id: log.id().to_string(),
        matrix,
        repeated: outcomes.iter().map(|o| o.t_a + o.t_b == 3).collect(),
        duration,
        realism: (q.response.realism_most_preferred, q.response.realism_least_preferred),
        cluster,
    };
    Ok((prepared, summary))
}

fn note_err<T, E: fmt::Display>(notes: &mut Vec<String>, what: &str, r: Result<T, E>) -> Option<T> {
    r.map_err(|e| notes.push(format!("{what}: {e}"))).ok()
}

fn group_report(
    key: String,
    design: &ExperimentDesign,
    ranks: &[usize],
    sessions: &[&Prepared],
    stimuli: &[usize],
    with_realism: bool,
) -> GroupReport {
    let mut notes = Vec::new();
    let subs: Vec<PreferenceMatrix<Rational>> = sessions.iter().map(|s| s.matrix.restrict(stimuli)).collect();
    let mean = note_err(&mut notes, "mean matrix", mean_matrix(&subs)).map(|m| MatrixView::from(&m));

    let mut x = Vec::new();
    let mut y = Vec::new();
    for m in &subs {
        for (k, &s) in stimuli.iter().enumerate() {
            x.push(ranks[s] as f64);
            y.push(rational_to_f64(m.totals()[k]));
        }
    }
    let pearson = note_err(&mut notes, "pearson", pearson(&x, &y));

    let mut levels: Vec<u32> = stimuli.iter().map(|&s| design.stimulus(s).quality).collect();
    levels.sort_unstable();
    levels.dedup();
    let by_level: Vec<Vec<f64>> = levels
        .iter()
        .map(|&q| {
            subs.iter()
                .flat_map(|m| {
                    stimuli
                        .iter()
                        .enumerate()
                        .filter(move |(_, &s)| design.stimulus(s).quality == q)
                        .map(move |(k, _)| rational_to_f64(m.totals()[k]))
                })
                .collect()
        })
        .collect();
    let kw = note_err(&mut notes, "kruskal-wallis", kruskal_wallis(&by_level));
    let mut ranksum = Vec::new();
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            if let Some(result) = note_err(&mut notes, "ranksum", ranksum_z(&by_level[i], &by_level[j])) {
                ranksum.push(LevelComparison {
                    lower: levels[i],
                    higher: levels[j],
                    result,
                });
            }
        }
    }

    let realism = if with_realism {
        let most: Vec<f64> = sessions.iter().map(|s| s.realism.0 as f64).collect();
        let least: Vec<f64> = sessions.iter().map(|s| s.realism.1 as f64).collect();
        note_err(&mut notes, "realism", wilcoxon_signed_rank(&most, &least))
    } else {
        None
    };

    let triads: Vec<SessionTriads> = sessions
        .iter()
        .zip(&subs)
        .map(|(s, m)| SessionTriads {
            session: s.id.clone(),
            triads: circular_triads(&Tournament::from_matrix(m).expect("protocol scores are never zero")),
        })
        .collect();
    let mean_zeta = (!triads.is_empty()).then(|| triads.iter().map(|t| t.triads.zeta).sum::<f64>() / triads.len() as f64);

    let durations: Vec<f64> = sessions.iter().map(|s| s.duration).collect();
    let repetitions: Vec<f64> = sessions.iter().map(|s| repetitions_within(design, s, stimuli) as f64).collect();

    GroupReport {
        key,
        sessions: sessions.iter().map(|s| s.id.clone()).collect(),
        stimuli: stimuli.iter().map(|&s| design.stimulus(s).id.clone()).collect(),
        mean_matrix: mean,
        pearson,
        kruskal_wallis: kw,
        ranksum,
        realism,
        triads,
        mean_zeta,
        duration_s: Summary::of(&durations),
        repetitions: Summary::of(&repetitions),
        notes,
    }
}

/// Third presentations among pairs whose both stimuli lie in `stimuli`.
fn repetitions_within(design: &ExperimentDesign, session: &Prepared, stimuli: &[usize]) -> usize {
    design
        .pairs()
        .iter()
        .zip(&session.repeated)
        .filter(|(p, r)| **r && stimuli.contains(&p.a) && stimuli.contains(&p.b))
        .count()
}

/// Aggregates completed sessions of one design.
pub fn aggregate_report(sessions: &[SessionLog], grouping: Grouping) -> Result<SessionReport, ReportError> {
    let first = sessions.first().ok_or(ReportError::Empty)?;
    let design = first.state().design().clone();
    for s in sessions {
        if s.state().design().stimuli() != design.stimuli() {
            return Err(ReportError::IncompatibleDesign(s.id().to_string()));
        }
    }
    let ids: Vec<String> = design.stimuli().iter().map(|s| s.id.clone()).collect();
    let levels = design.quality_levels();
    let ranks: Vec<usize> = design
        .stimuli()
        .iter()
        .map(|s| levels.binary_search(&s.quality).expect("level present") + 1)
        .collect();

    let mut prepared = Vec::with_capacity(sessions.len());
    let mut summaries = Vec::with_capacity(sessions.len());
    for s in sessions {
        let (p, summary) = prepare(s, &ids)?;
        prepared.push(p);
        summaries.push(summary);
    }

    let all_stimuli: Vec<usize> = (0..design.len()).collect();
    let everyone: Vec<&Prepared> = prepared.iter().collect();
    let mut groups = Vec::new();
    let mut comparisons = Vec::new();
    match grouping {
        Grouping::None => groups.push(group_report("all".into(), &design, &ranks, &everyone, &all_stimuli, true)),
        Grouping::Shading => {
            let shadings = design.shadings();
            let mut members = Vec::new();
            for shading in &shadings {
                let subset: Vec<usize> = all_stimuli
                    .iter()
                    .copied()
                    .filter(|&i| design.stimulus(i).shading == *shading)
                    .collect();
                groups.push(group_report(shading.to_string(), &design, &ranks, &everyone, &subset, false));
                members.push(subset);
            }
            for i in 0..shadings.len() {
                for j in i + 1..shadings.len() {
                    let a: Vec<f64> = everyone
                        .iter()
                        .map(|s| repetitions_within(&design, s, &members[i]) as f64)
                        .collect();
                    let b: Vec<f64> = everyone
                        .iter()
                        .map(|s| repetitions_within(&design, s, &members[j]) as f64)
                        .collect();
                    let name = format!("repetitions {} vs {}", shadings[i], shadings[j]);
                    let result = wilcoxon_signed_rank(&a, &b).unwrap_or_else(|_| TestResult {
                        statistic: "V".into(),
                        value: 0.0,
                        p_value: 1.0,
                        method: Method::Exact,
                        n: 0,
                        df: None,
                        dropped: a.len(),
                    });
                    comparisons.push(NamedTest { name, result });
                }
            }
        }
        Grouping::Confidence => {
            for cluster in [ConfidenceCluster::High, ConfidenceCluster::Low] {
                let members: Vec<&Prepared> = prepared.iter().filter(|p| p.cluster == cluster).collect();
                groups.push(group_report(cluster.label().into(), &design, &ranks, &members, &all_stimuli, true));
            }
        }
    }

    Ok(SessionReport {
        grouping,
        stimuli: design
            .stimuli()
            .iter()
            .zip(&ranks)
            .map(|(s, &quality_rank)| StimulusInfo {
                id: s.id.clone(),
                quality: s.quality,
                quality_rank,
                shading: s.shading,
            })
            .collect(),
        sessions: summaries,
        groups,
        comparisons,
    })
}

/// Column names of [`SessionReport::to_csv`].
pub const CSV_HEADER: [&str; 7] = ["group", "statistic", "label", "value", "p_value", "method", "n"];

fn method_name(m: Method) -> &'static str {
    match m {
        Method::StudentT => "student_t",
        Method::ChiSquare => "chi_square",
        Method::Normal => "normal",
        Method::Exact => "exact",
    }
}

impl SessionReport {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per statistic.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        let mut row = |group: &str, statistic: &str, label: &str, value: f64, test: Option<&TestResult>, n: usize| {
            let p = test.map(|t| t.p_value.to_string()).unwrap_or_default();
            let method = test.map(|t| method_name(t.method)).unwrap_or_default();
            w.write_record([group, statistic, label, &value.to_string(), &p, method, &n.to_string()])
                .expect("in-memory write");
        };
        for g in &self.groups {
            let k = g.key.as_str();
            row(k, "sessions", "", g.sessions.len() as f64, None, g.sessions.len());
            if let Some(m) = &g.mean_matrix {
                for (id, total) in m.stimuli.iter().zip(&m.totals) {
                    row(k, "mean_score", id, *total, None, g.sessions.len());
                }
            }
            if let Some(t) = &g.pearson {
                row(k, "pearson_quality_score", "", t.value, Some(t), t.n);
            }
            if let Some(t) = &g.kruskal_wallis {
                row(k, "kruskal_wallis", "", t.value, Some(t), t.n);
            }
            for c in &g.ranksum {
                let label = format!("{} vs {}", c.lower, c.higher);
                row(k, "ranksum", &label, c.result.value, Some(&c.result), c.result.n);
            }
            if let Some(t) = &g.realism {
                row(k, "wilcoxon_realism", "most vs least", t.value, Some(t), t.n);
            }
            if let Some(z) = g.mean_zeta {
                row(k, "mean_zeta", "", z, None, g.triads.len());
            }
            row(k, "duration_mean", "", g.duration_s.mean, None, g.duration_s.n);
            row(k, "repetitions_mean", "", g.repetitions.mean, None, g.repetitions.n);
        }
        for c in &self.comparisons {
            row("*", "wilcoxon", &c.name, c.result.value, Some(&c.result), c.result.n);
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
    }

    /// Plain-text summary for reading at a terminal.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let test = |t: &TestResult| {
            format!(
                "{} = {:.4}, p = {:.4} ({}, n = {})",
                t.statistic,
                t.value,
                t.p_value,
                method_name(t.method),
                t.n
            )
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} sessions, {} stimuli, grouped by {}",
            self.sessions.len(),
            self.stimuli.len(),
            self.grouping
        );
        for g in &self.groups {
            let _ = writeln!(out, "\n[{}] {} sessions", g.key, g.sessions.len());
            if let Some(m) = &g.mean_matrix {
                let _ = writeln!(out, "  mean Σps:");
                for (id, total) in m.stimuli.iter().zip(&m.totals) {
                    let _ = writeln!(out, "    {id:<24} {total:>8.3}");
                }
            }
            if let Some(t) = &g.pearson {
                let _ = writeln!(out, "  quality vs score: {}", test(t));
            }
            if let Some(t) = &g.kruskal_wallis {
                let _ = writeln!(out, "  across levels: {}", test(t));
            }
            for c in &g.ranksum {
                let _ = writeln!(out, "  {} vs {}: {}", c.lower, c.higher, test(&c.result));
            }
            if let Some(t) = &g.realism {
                let _ = writeln!(out, "  realism most vs least: {}", test(t));
            }
            if let Some(z) = g.mean_zeta {
                let _ = writeln!(out, "  mean ζ: {z:.4}");
            }
            let _ = writeln!(
                out,
                "  duration: mean {:.1} s (sd {:.1}); repetitions: mean {:.2}",
                g.duration_s.mean, g.duration_s.sd, g.repetitions.mean
            );
            for note in &g.notes {
                let _ = writeln!(out, "  note: {note}");
            }
        }
        for c in &self.comparisons {
            let _ = writeln!(out, "\n{}: {}", c.name, test(&c.result));
        }
        out
    }
}
