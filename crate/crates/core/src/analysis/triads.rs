use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::matrix::PreferenceMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TournamentError {
    #[error("relation is not {n}×{n}")]
    Shape { n: usize },
    #[error("stimulus {0} beats itself")]
    Reflexive(usize),
    #[error("pair ({0}, {1}) needs exactly one winner")]
    Incomplete(usize, usize),
}

/// Complete win relation: `beats(i, j)` holds for exactly one of each pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tournament {
    n: usize,
    beats: Vec<bool>,
}

impl Tournament {
    /// Builds a tournament from a row-major `n × n` relation.
    pub fn new(n: usize, beats: Vec<bool>) -> Result<Self, TournamentError> {
        if beats.len() != n * n {
            return Err(TournamentError::Shape { n });
        }
        for i in 0..n {
            if beats[i * n + i] {
                return Err(TournamentError::Reflexive(i));
            }
            for j in i + 1..n {
                if beats[i * n + j] == beats[j * n + i] {
                    return Err(TournamentError::Incomplete(i, j));
                }
            }
        }
        Ok(Self { n, beats })
    }

    /// Winner of each pair is the stimulus with the positive score.
    pub fn from_matrix<S: Signed + Copy>(m: &PreferenceMatrix<S>) -> Result<Self, TournamentError> {
        let n = m.len();
        let beats = (0..n * n).map(|k| m.get(k / n, k % n).is_positive()).collect();
        Self::new(n, beats)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn beats(&self, i: usize, j: usize) -> bool {
        self.beats[i * self.n + j]
    }

    pub fn wins(&self) -> Vec<usize> {
        (0..self.n).map(|i| (0..self.n).filter(|&j| self.beats(i, j)).count()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriadSummary {
    pub count: u64,
    pub max: u64,
    /// Consistency coefficient ζ = 1 − count / max.
    pub zeta: f64,
}

fn choose2(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// Largest possible number of circular triads among `n` stimuli.
pub fn max_circular_triads(n: usize) -> u64 {
    let n = n as u64;
    if n < 3 {
        0
    } else if n % 2 == 1 {
        n * (n * n - 1) / 24
    } else {
        n * (n * n - 4) / 24
    }
}

/// Number of circular triads, from the win counts alone.
pub fn circular_triads(t: &Tournament) -> TriadSummary {
    let n = t.len() as u64;
    let all = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
    let transitive: u64 = t.wins().into_iter().map(|a| choose2(a as u64)).sum();
    let count = all - transitive;
    let max = max_circular_triads(t.len());
    let zeta = if count == 0 { 1.0 } else { 1.0 - count as f64 / max as f64 };
    TriadSummary { count, max, zeta }
}
