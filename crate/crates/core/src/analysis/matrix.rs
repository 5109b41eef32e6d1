use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Pair, PairOutcome};
use crate::scalar::{rational_to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregationError {
    #[error("pair ({0}, {1}) has no outcome")]
    MissingPair(usize, usize),
    #[error("pair ({0}, {1}) has more than one outcome")]
    DuplicatePair(usize, usize),
    #[error("pair ({0}, {1}) refers to a stimulus outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("matrices cover different stimuli")]
    IncompatibleMatrices,
    #[error("nothing to aggregate")]
    Empty,
}

/// Antisymmetric matrix of preference scores. Entry `(i, j)` is the score of
/// stimulus `i` over `j`; `totals[i]` is the row sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceMatrix<S> {
    ids: Vec<String>,
    entries: Vec<S>,
    totals: Vec<S>,
}

impl<S: Signed + Copy> PreferenceMatrix<S> {
    fn zeros(ids: Vec<String>) -> Self {
        let n = ids.len();
        Self {
            ids,
            entries: vec![S::zero(); n * n],
            totals: vec![S::zero(); n],
        }
    }

    fn set(&mut self, i: usize, j: usize, v: S) {
        let n = self.ids.len();
        self.entries[i * n + j] = v;
        self.entries[j * n + i] = -v;
    }

    fn recompute_totals(&mut self) {
        let n = self.ids.len();
        self.totals = (0..n)
            .map(|i| self.entries[i * n..(i + 1) * n].iter().fold(S::zero(), |acc, v| acc + *v))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries[i * self.ids.len() + j]
    }

    pub fn row(&self, i: usize) -> &[S] {
        let n = self.ids.len();
        &self.entries[i * n..(i + 1) * n]
    }

    /// Σps per stimulus.
    pub fn totals(&self) -> &[S] {
        &self.totals
    }

    /// Matrix restricted to `indices`, totals recomputed over the subset.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut sub = Self::zeros(indices.iter().map(|&i| self.ids[i].clone()).collect());
        for (x, &i) in indices.iter().enumerate() {
            for (y, &j) in indices.iter().enumerate().skip(x + 1) {
                sub.set(x, y, self.get(i, j));
            }
        }
        sub.recompute_totals();
        sub
    }

    pub fn map<U: Signed + Copy>(&self, f: impl Fn(S) -> U) -> PreferenceMatrix<U> {
        PreferenceMatrix {
            ids: self.ids.clone(),
            entries: self.entries.iter().map(|v| f(*v)).collect(),
            totals: self.totals.iter().map(|v| f(*v)).collect(),
        }
    }
}

impl PreferenceMatrix<Rational> {
    pub fn to_f64(&self) -> PreferenceMatrix<f64> {
        self.map(rational_to_f64)
    }
}

impl PreferenceMatrix<f64> {
    /// Rows as nested vectors, for serialization.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Serializable form of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixView {
    pub stimuli: Vec<String>,
    pub scores: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
}

impl From<&PreferenceMatrix<Rational>> for MatrixView {
    fn from(m: &PreferenceMatrix<Rational>) -> Self {
        let f = m.to_f64();
        Self {
            stimuli: f.ids().to_vec(),
            scores: f.rows(),
            totals: f.totals().to_vec(),
        }
    }
}

/// Builds the matrix of one session from its pair outcomes. Every pair of
/// `ids` must appear exactly once.
pub fn preference_matrix(outcomes: &[PairOutcome], ids: &[String]) -> Result<PreferenceMatrix<Rational>, AggregationError> {
    let n = ids.len();
    let mut seen = vec![false; n * n];
    let mut m = PreferenceMatrix::zeros(ids.to_vec());
    for o in outcomes {
        let Pair { a, b } = o.pair;
        if a >= n || b >= n || a == b {
            return Err(AggregationError::OutOfRange(a, b, n));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        if std::mem::replace(&mut seen[lo * n + hi], true) {
            return Err(AggregationError::DuplicatePair(lo, hi));
        }
        m.set(a, b, o.ps);
    }
    for i in 0..n {
        for j in i + 1..n {
            if !seen[i * n + j] {
                return Err(AggregationError::MissingPair(i, j));
            }
        }
    }
    m.recompute_totals();
    Ok(m)
}

/// Entry-wise mean of several matrices over the same stimuli, exact.
pub fn mean_matrix(matrices: &[PreferenceMatrix<Rational>]) -> Result<PreferenceMatrix<Rational>, AggregationError> {
    let first = matrices.first().ok_or(AggregationError::Empty)?;
    if matrices.iter().any(|m| m.ids != first.ids) {
        return Err(AggregationError::IncompatibleMatrices);
    }
    let count = Rational::from_integer(matrices.len() as i64);
    let mut mean = PreferenceMatrix::zeros(first.ids.clone());
    for (k, slot) in mean.entries.iter_mut().enumerate() {
        let sum = matrices.iter().fold(Rational::from_integer(0), |acc, m| acc + m.entries[k]);
        *slot = sum / count;
    }
    mean.recompute_totals();
    Ok(mean)
}
