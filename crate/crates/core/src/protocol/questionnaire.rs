use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Asked once for the most and once for the least preferred mesh.
pub const REALISM_PROMPT: &str = "How much from 1 to 10 does this mesh look like the real object?";
pub const CONFIDENCE_PROMPT: &str = "How often were you certain of the answers or were you guessing?";
pub const CONFIDENCE_LOW_ANCHOR: &str = "1 always certain";
pub const CONFIDENCE_HIGH_ANCHOR: &str = "10 always guessing";

pub const SCALE_MIN: u8 = 1;
pub const SCALE_MAX: u8 = 10;

/// Post-session answers, each on a 1–10 scale. For `confidence`, 1 means
/// always certain and 10 always guessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub realism_most_preferred: u8,
    pub realism_least_preferred: u8,
    pub confidence: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field} must be between {SCALE_MIN} and {SCALE_MAX}, got {value}")]
pub struct ScaleError {
    pub field: &'static str,
    pub value: u8,
}

impl QuestionnaireResponse {
    pub fn validate(&self) -> Result<(), ScaleError> {
        for (field, value) in [
            ("realism_most_preferred", self.realism_most_preferred),
            ("realism_least_preferred", self.realism_least_preferred),
            ("confidence", self.confidence),
        ] {
            if !(SCALE_MIN..=SCALE_MAX).contains(&value) {
                return Err(ScaleError { field, value });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        let ok = QuestionnaireResponse {
            realism_most_preferred: 7,
            realism_least_preferred: 2,
            confidence: 3,
        };
        assert!(ok.validate().is_ok());
        let zero = QuestionnaireResponse {
            realism_most_preferred: 0,
            ..ok
        };
        assert_eq!(
            zero.validate(),
            Err(ScaleError {
                field: "realism_most_preferred",
                value: 0
            })
        );
        let high = QuestionnaireResponse {
            realism_least_preferred: 11,
            ..ok
        };
        assert!(high.validate().is_err());
    }
}
