//! Preference matrices, consistency and the statistical tests run on
//! finished sessions.

mod confidence;
mod matrix;
mod report;
pub mod stats;
mod triads;

pub use confidence::{cluster_confidence, ConfidenceCluster, ConfidencePartition, HIGH_CONFIDENCE_MAX};
pub use matrix::{mean_matrix, preference_matrix, AggregationError, MatrixView, PreferenceMatrix};
pub use report::{
    aggregate_report, GroupReport, Grouping, LevelComparison, NamedTest, ReportError, SessionReport, SessionSummary, SessionTriads,
    StimulusInfo, Summary, CSV_HEADER,
};
pub use stats::{
    kruskal_wallis, mann_whitney_u, pearson, ranksum_z, wilcoxon_signed_rank, wilcoxon_signed_rank_with, Method, SignedRankMethod,
    StatsError, TestResult, WILCOXON_EXACT_MAX,
};
pub use triads::{circular_triads, max_circular_triads, Tournament, TournamentError, TriadSummary};
