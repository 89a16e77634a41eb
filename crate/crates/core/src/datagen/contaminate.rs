use rand::seq::index;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng;
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContaminationKind {
    /// Negate the label.
    LabelFlip,
    /// Add iid Student-t noise to every feature.
    FeatureTNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Exactly `⌊εn⌋` samples chosen uniformly without replacement.
    #[default]
    Subset,
    /// Each sample independently with probability `ε`.
    Bernoulli,
}

fn default_t_df() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    pub epsilon: f64,
    #[serde(default = "default_t_df")]
    pub t_df: f64,
    #[serde(default)]
    pub mode: SelectionMode,
    #[serde(default)]
    pub seed: u64,
}

impl ContaminationSpec {
    pub fn label_flip(epsilon: f64, seed: u64) -> Self {
        Self {
            kind: ContaminationKind::LabelFlip,
            epsilon,
            t_df: default_t_df(),
            mode: SelectionMode::Subset,
            seed,
        }
    }

    pub fn feature_noise(epsilon: f64, seed: u64) -> Self {
        Self {
            kind: ContaminationKind::FeatureTNoise,
            ..Self::label_flip(epsilon, seed)
        }
    }

    pub fn with_mode(self, mode: SelectionMode) -> Self {
        Self { mode, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "contamination fraction must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.t_df > 2.0 && self.t_df.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t degrees of freedom must exceed 2, got {}",
                self.t_df
            )));
        }
        Ok(())
    }
}

/// Applies `spec` to a copy of `data`. Affected samples are flagged in the
/// mask (existing flags are kept); every other sample is left bit-identical.
pub fn contaminate(data: &Dataset, spec: &ContaminationSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut out = data.clone();
    let n = data.len();
    let mut rng = rng(spec.seed);
    let chosen: Vec<usize> = match spec.mode {
        SelectionMode::Subset => {
            let k = (spec.epsilon * n as f64).floor() as usize;
            let mut idx = index::sample(&mut rng, n, k).into_vec();
            idx.sort_unstable();
            idx
        }
        SelectionMode::Bernoulli => (0..n).filter(|_| rng.random_bool(spec.epsilon)).collect(),
    };
    if chosen.is_empty() {
        return Ok(out);
    }
    match spec.kind {
        ContaminationKind::LabelFlip => {
            let labels = out.labels_mut();
            for &i in &chosen {
                labels[i] = -labels[i];
            }
        }
        ContaminationKind::FeatureTNoise => {
            let chi = ChiSquared::new(spec.t_df).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let d = out.n_features();
            let features = out.features_mut();
            for &i in &chosen {
                for x in &mut features[i * d..(i + 1) * d] {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let v: f64 = chi.sample(&mut rng);
                    *x += z / (v / spec.t_df).sqrt();
                }
            }
        }
    }
    let mask = out.mask_mut();
    for &i in &chosen {
        mask[i] = true;
    }
    Ok(out)
}
