use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Forced-choice question shown with every presentation.
pub const DEFAULT_PROMPT: &str = "Which polygonal mesh had higher quality?";

/// Render-time shading condition of a stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shading {
    #[serde(rename = "unlit")]
    Unlit,
    #[serde(rename = "lambert")]
    LambertDiffuse,
}

impl Shading {
    pub fn as_str(self) -> &'static str {
        match self {
            Shading::Unlit => "unlit",
            Shading::LambertDiffuse => "lambert",
        }
    }
}

impl fmt::Display for Shading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Shading {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unlit" => Ok(Shading::Unlit),
            "lambert" | "lambertdiffuse" | "lambert_diffuse" | "diffuse" => Ok(Shading::LambertDiffuse),
            other => Err(DesignError::UnknownShading(other.to_string())),
        }
    }
}

/// One cell of the quality × shading design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    pub id: String,
    pub mesh_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture_ref: Option<String>,
    /// Triangle count.
    pub quality: u32,
    pub shading: Shading,
}

/// Unordered stimulus pair as design indices, `a < b`. `a` is the canonical
/// "A" side of the preference score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
}

impl Pair {
    pub fn contains(&self, stimulus: usize) -> bool {
        self.a == stimulus || self.b == stimulus
    }

    pub fn other(&self, stimulus: usize) -> usize {
        if stimulus == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("a design needs at least two stimuli, got {0}")]
    TooFewStimuli(usize),
    #[error("duplicate stimulus id `{0}`")]
    DuplicateId(String),
    #[error("stimulus `{0}` has zero quality")]
    ZeroQuality(String),
    #[error("unknown shading mode `{0}`")]
    UnknownShading(String),
}

/// Number of unordered pairs among `n` stimuli: `n(n−1)/2`.
pub const fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Upper bound on presentations when every pair needs a third round: `3n(n−1)/2`.
pub const fn max_presentations(n: usize) -> usize {
    3 * pair_count(n)
}

/// All unordered pairs in lexicographic index order.
pub fn generate_pairs(stimuli: &[Stimulus]) -> Result<Vec<Pair>, DesignError> {
    if stimuli.len() < 2 {
        return Err(DesignError::TooFewStimuli(stimuli.len()));
    }
    let mut seen = HashSet::with_capacity(stimuli.len());
    for s in stimuli {
        if !seen.insert(s.id.as_str()) {
            return Err(DesignError::DuplicateId(s.id.clone()));
        }
    }
    let n = stimuli.len();
    Ok((0..n).flat_map(|a| (a + 1..n).map(move |b| Pair { a, b })).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DesignDocument {
    stimuli: Vec<Stimulus>,
    #[serde(default = "default_prompt")]
    prompt: String,
}

fn default_prompt() -> String {
    DEFAULT_PROMPT.to_string()
}

/// A validated set of stimuli and the pairs compared between them.
///
/// Serialized as `{"stimuli": [...], "prompt": "..."}`; pairs are derived
/// again on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DesignDocument", into = "DesignDocument")]
pub struct ExperimentDesign {
    stimuli: Vec<Stimulus>,
    prompt: String,
    pairs: Vec<Pair>,
}

impl TryFrom<DesignDocument> for ExperimentDesign {
    type Error = DesignError;

    fn try_from(doc: DesignDocument) -> Result<Self, Self::Error> {
        ExperimentDesign::new(doc.stimuli, doc.prompt)
    }
}

impl From<ExperimentDesign> for DesignDocument {
    fn from(d: ExperimentDesign) -> Self {
        DesignDocument {
            stimuli: d.stimuli,
            prompt: d.prompt,
        }
    }
}

impl ExperimentDesign {
    pub fn new(stimuli: Vec<Stimulus>, prompt: impl Into<String>) -> Result<Self, DesignError> {
        let pairs = generate_pairs(&stimuli)?;
        if let Some(s) = stimuli.iter().find(|s| s.quality == 0) {
            return Err(DesignError::ZeroQuality(s.id.clone()));
        }
        Ok(Self {
            stimuli,
            prompt: prompt.into(),
            pairs,
        })
    }

    pub fn stimuli(&self) -> &[Stimulus] {
        &self.stimuli
    }

    pub fn stimulus(&self, index: usize) -> &Stimulus {
        &self.stimuli[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.stimuli.iter().position(|s| s.id == id)
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }

    /// Index of `pair` in [`Self::pairs`].
    pub fn pair_index(&self, pair: Pair) -> usize {
        let n = self.stimuli.len();
        // offset of row `a` in the upper triangle, then column
        pair.a * (2 * n - pair.a - 1) / 2 + (pair.b - pair.a - 1)
    }

    /// Distinct quality levels in ascending order.
    pub fn quality_levels(&self) -> Vec<u32> {
        let mut q: Vec<u32> = self.stimuli.iter().map(|s| s.quality).collect();
        q.sort_unstable();
        q.dedup();
        q
    }

    /// Shading modes present, in enum order.
    pub fn shadings(&self) -> Vec<Shading> {
        let mut s: Vec<Shading> = self.stimuli.iter().map(|s| s.shading).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// A mesh asset entering a factorial design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshLevel {
    /// Stem used to build stimulus ids.
    pub name: String,
    pub mesh_ref: String,
    pub texture_ref: Option<String>,
    pub quality: u32,
}

/// Crosses every mesh level with every shading mode. Stimuli are ordered by
/// shading, then by the order of `levels`; ids are `<name>_<shading>`.
pub fn full_factorial(levels: &[MeshLevel], shadings: &[Shading]) -> Vec<Stimulus> {
    shadings
        .iter()
        .flat_map(|&shading| {
            levels.iter().map(move |l| Stimulus {
                id: format!("{}_{}", l.name, shading),
                mesh_ref: l.mesh_ref.clone(),
                texture_ref: l.texture_ref.clone(),
                quality: l.quality,
                shading,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn stimuli(n: usize) -> Vec<Stimulus> {
        (0..n)
            .map(|i| Stimulus {
                id: format!("s{i}"),
                mesh_ref: format!("m{i}.obj"),
                texture_ref: None,
                quality: 1000 * (i as u32 + 1),
                shading: Shading::Unlit,
            })
            .collect()
    }

    #[test]
    fn pair_counts() {
        assert_eq!(generate_pairs(&stimuli(2)).unwrap().len(), 1);
        assert_eq!(generate_pairs(&stimuli(4)).unwrap().len(), 6);
        assert_eq!(generate_pairs(&stimuli(8)).unwrap().len(), 28);
        assert_eq!(max_presentations(4), 18);
        assert_eq!(max_presentations(8), 84);
    }

    #[test]
    fn pairs_are_unique_and_irreflexive() {
        let pairs = generate_pairs(&stimuli(6)).unwrap();
        let set: HashSet<Pair> = pairs.iter().copied().collect();
        assert_eq!(set.len(), pairs.len());
        assert!(pairs.iter().all(|p| p.a < p.b));
    }

    #[test]
    fn pair_index_matches_position() {
        let d = ExperimentDesign::new(stimuli(7), DEFAULT_PROMPT).unwrap();
        for (i, p) in d.pairs().iter().enumerate() {
            assert_eq!(d.pair_index(*p), i);
        }
    }

    #[test]
    fn rejects_bad_designs() {
        let mut s = stimuli(3);
        s[2].id = "s0".into();
        assert_eq!(generate_pairs(&s), Err(DesignError::DuplicateId("s0".into())));
        assert_eq!(ExperimentDesign::new(vec![], "").unwrap_err(), DesignError::TooFewStimuli(0));
        let mut z = stimuli(2);
        z[1].quality = 0;
        assert!(matches!(ExperimentDesign::new(z, ""), Err(DesignError::ZeroQuality(_))));
    }

    #[test]
    fn factorial_design_has_eight_stimuli() {
        let levels: Vec<MeshLevel> = [1000, 5000, 10000, 20000]
            .iter()
            .map(|&q| MeshLevel {
                name: format!("scan_{q}"),
                mesh_ref: format!("scan_{q}.obj"),
                texture_ref: None,
                quality: q,
            })
            .collect();
        let stimuli = full_factorial(&levels, &[Shading::Unlit, Shading::LambertDiffuse]);
        let d = ExperimentDesign::new(stimuli, DEFAULT_PROMPT).unwrap();
        assert_eq!(d.len(), 8);
        assert_eq!(d.pairs().len(), 28);
        assert_eq!(d.stimulus(4).id, "scan_1000_lambert");
    }

    #[test]
    fn json_round_trip_revalidates() {
        let d = ExperimentDesign::new(stimuli(3), "q").unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert!(!text.contains("pairs"));
        let back: ExperimentDesign = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        let dup = text.replace("\"s1\"", "\"s0\"");
        assert!(serde_json::from_str::<ExperimentDesign>(&dup).is_err());
    }
}
