use serde::{Deserialize, Serialize};

use crate::protocol::{QuestionnaireResponse, ScaleError, SCALE_MAX, SCALE_MIN};

/// Last self-reported confidence score counted as high confidence.
pub const HIGH_CONFIDENCE_MAX: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfidenceCluster {
    #[serde(rename = "HC")]
    High,
    #[serde(rename = "LC")]
    Low,
}

impl ConfidenceCluster {
    pub fn classify(confidence: u8) -> Result<Self, ScaleError> {
        if !(SCALE_MIN..=SCALE_MAX).contains(&confidence) {
            return Err(ScaleError {
                field: "confidence",
                value: confidence,
            });
        }
        Ok(if confidence <= HIGH_CONFIDENCE_MAX { Self::High } else { Self::Low })
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::High => "HC",
            Self::Low => "LC",
        }
    }
}

/// Indices of responses in each cluster, in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConfidencePartition {
    pub high: Vec<usize>,
    pub low: Vec<usize>,
}

pub fn cluster_confidence(responses: &[QuestionnaireResponse]) -> Result<ConfidencePartition, ScaleError> {
    let mut out = ConfidencePartition::default();
    for (i, r) in responses.iter().enumerate() {
        match ConfidenceCluster::classify(r.confidence)? {
            ConfidenceCluster::High => out.high.push(i),
            ConfidenceCluster::Low => out.low.push(i),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(confidence: u8) -> QuestionnaireResponse {
        QuestionnaireResponse {
            realism_most_preferred: 5,
            realism_least_preferred: 5,
            confidence,
        }
    }

    #[test]
    fn boundary() {
        assert_eq!(ConfidenceCluster::classify(4), Ok(ConfidenceCluster::High));
        assert_eq!(ConfidenceCluster::classify(5), Ok(ConfidenceCluster::Low));
        assert!(ConfidenceCluster::classify(0).is_err());
        assert!(ConfidenceCluster::classify(11).is_err());
    }

    #[test]
    fn all_certain() {
        let p = cluster_confidence(&[response(1); 6]).unwrap();
        assert_eq!(p.high.len(), 6);
        assert!(p.low.is_empty());
    }

    #[test]
    fn paper_roster() {
        // 21 participants: 8 scored 1–4, 13 scored 5–8
        let scores = [1, 2, 2, 3, 3, 4, 4, 4, 5, 5, 5, 6, 6, 6, 6, 7, 7, 7, 8, 8, 8];
        let roster: Vec<_> = scores.iter().map(|&c| response(c)).collect();
        let p = cluster_confidence(&roster).unwrap();
        assert_eq!((p.high.len(), p.low.len()), (8, 13));
    }
}
