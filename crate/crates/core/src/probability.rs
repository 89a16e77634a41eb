//! Class-probability estimates from a trained ensemble.
//!
//! Two estimators are available:
//!
//! * **product**: `Π p_t(x) / (Π p_t(x) + Π (1 - p_t(x)))` over the clamped
//!   leaf probabilities of every stage. It treats each stage as a unit step and
//!   ignores `α_t`, so it is the framework's estimator rather than a calibrated
//!   probability.
//! * **inverse link**: the loss's population link inverted at `F_T(x)`, e.g.
//!   `1 / (1 + e^{-2F})` for the exponential loss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::booster::Ensemble;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityMode {
    Product,
    InverseLink,
}

impl fmt::Display for ProbabilityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbabilityMode::Product => "product",
            ProbabilityMode::InverseLink => "inverse_link",
        })
    }
}

impl FromStr for ProbabilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" | "product_formula" => Ok(ProbabilityMode::Product),
            "inverse_link" => Ok(ProbabilityMode::InverseLink),
            other => Err(Error::InvalidConfig(format!("unknown probability mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProbabilityEstimator<'a> {
    ensemble: &'a Ensemble,
    mode: ProbabilityMode,
}

impl<'a> ProbabilityEstimator<'a> {
    pub fn new(ensemble: &'a Ensemble, mode: ProbabilityMode) -> Result<Self> {
        match mode {
            ProbabilityMode::Product if ensemble.is_empty() => Err(Error::EstimatorUnavailable(
                "the product estimator needs the per-iteration trees".into(),
            )),
            ProbabilityMode::InverseLink if ensemble.loss().inverse_link(0.0).is_none() => {
                Err(Error::EstimatorUnavailable(format!(
                    "loss `{}` has no inverse link",
                    ensemble.loss()
                )))
            }
            _ => Ok(Self { ensemble, mode }),
        }
    }

    pub fn mode(&self) -> ProbabilityMode {
        self.mode
    }

    /// Estimated `P(Y = 1 | x)`.
    pub fn estimate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.ensemble.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.ensemble.n_features(),
                actual: x.len(),
            });
        }
        Ok(match self.mode {
            ProbabilityMode::Product => product_formula(
                self.ensemble
                    .stages()
                    .iter()
                    .map(|s| s.tree.leaf(x).clamped_p),
            ),
            ProbabilityMode::InverseLink => {
                let f = self.ensemble.score(x);
                self.ensemble
                    .loss()
                    .inverse_link(f)
                    .expect("checked at construction")
                    .clamp(0.0, 1.0)
            }
        })
    }
}

/// `Π p_t / (Π p_t + Π (1 - p_t))` evaluated in log space.
///
/// Exactly symmetric: when every `1 - p_t` is representable, replacing each
/// `p_t` by `1 - p_t` yields `1 -` the original value bit for bit. An empty
/// product gives ½.
pub fn product_formula(ps: impl IntoIterator<Item = f64>) -> f64 {
    let (mut log_pos, mut log_neg) = (0.0, 0.0);
    for p in ps {
        log_pos += p.ln();
        log_neg += (1.0 - p).ln();
    }
    let d = log_pos - log_neg;
    if d.is_nan() {
        // both products vanish (some p_t = 0 and another = 1)
        return 0.5;
    }
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        1.0 - 1.0 / (1.0 + d.exp())
    }
}
