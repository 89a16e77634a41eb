//! The Arch Boost training loop.
//!
//! Each iteration normalizes the sample weights, fits a [`RegionTree`] to the
//! weighted labels, turns leaf probabilities into hypothesis values through the
//! loss's rule, picks a step `α_t`, updates `F_t = F_{t-1} + α_t h_t` and
//! resets the weights to `w_i ∝ -φ'(y_i F_t(x_i))`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::numeric::{bisect, golden_section_min, kahan_sum};
use crate::tree::{fit_tree_presorted, HypothesisSolver, RegionTree, SortedFeatures, TreeConfig};

pub const DEFAULT_ALPHA_MAX: f64 = 4.0;
const LINE_SEARCH_GRID: usize = 64;
/// Weight vectors whose largest entry falls below this are treated as collapsed.
pub const WEIGHT_COLLAPSE: f64 = 1e-300;
/// Relative tolerance of the advisory first-order check after an interior step.
pub const HARDNESS_TOL: f64 = 1e-4;
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Grid plus golden-section minimization of the empirical risk on
    /// `[0, alpha_max]`.
    LineSearch { alpha_max: f64 },
    /// Fixed step; `None` picks [`Loss::default_constant_step`].
    Constant(Option<f64>),
    /// `α_t = initial · t^{-power}`, `t = 1, 2, …`.
    Schedule { initial: f64, power: f64 },
}

impl Default for StepMode {
    fn default() -> Self {
        StepMode::LineSearch {
            alpha_max: DEFAULT_ALPHA_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    /// Run `max_iter` iterations.
    #[default]
    Fixed,
    /// `T = min(max_iter, ceil(n^{1-ε}))`.
    Consistency { epsilon: f64 },
    /// Keep the prefix with the lowest validation error; stop after `patience`
    /// iterations without improvement. Needs [`train_with_validation`].
    EarlyStop { patience: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub loss: Loss,
    pub max_iter: usize,
    pub step: StepMode,
    pub stopping: Stopping,
    pub tree: TreeConfig,
    pub solver: HypothesisSolver,
    /// Recorded with the model. Training itself is deterministic.
    pub seed: u64,
    /// Keep per-iteration misclassification indicators (needed for outlier
    /// detection).
    pub retain_indicators: bool,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            loss: Loss::arb(2.0).expect("valid default"),
            max_iter: 200,
            step: StepMode::default(),
            stopping: Stopping::Fixed,
            tree: TreeConfig::default(),
            solver: HypothesisSolver::Auto,
            seed: 0,
            retain_indicators: true,
        }
    }
}

impl BoostConfig {
    pub fn new(loss: Loss) -> Self {
        Self {
            loss,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.loss.is_training_grade() {
            return Err(Error::NoHypothesisRule(self.loss.id()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        match self.step {
            StepMode::LineSearch { alpha_max } if !(alpha_max > 0.0 && alpha_max.is_finite()) => {
                return Err(Error::InvalidConfig(format!("alpha_max must be positive, got {alpha_max}")));
            }
            StepMode::Constant(Some(a)) if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::InvalidConfig(format!("constant step must be positive, got {a}")));
            }
            StepMode::Schedule { initial, power } if !(initial > 0.0 && power >= 0.0) => {
                return Err(Error::InvalidConfig("schedule needs initial > 0 and power >= 0".into()));
            }
            _ => {}
        }
        if let Stopping::Consistency { epsilon } = self.stopping {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(Error::InvalidConfig(format!("epsilon must lie in (0,1), got {epsilon}")));
            }
        }
        self.tree.validate()
    }

    /// Iteration budget for `n` training samples.
    pub fn iteration_budget(&self, n: usize) -> usize {
        match self.stopping {
            Stopping::Consistency { epsilon } => {
                let t = (n as f64).powf(1.0 - epsilon).ceil() as usize;
                t.clamp(1, self.max_iter)
            }
            _ => self.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// No step on the search interval lowered the risk.
    Stalled { iteration: usize },
    /// All weights underflowed.
    WeightCollapse { iteration: usize },
    /// Validation error did not improve; the model was cut back to `best`
    /// iterations.
    EarlyStopped { best: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// `R̂(F_t)`.
    pub risk: f64,
    /// `μ̂(h_t, w_t)` under the normalized weights used to fit `h_t`.
    pub margin: f64,
    pub alpha: f64,
    /// Shannon entropy of the normalized weights used to fit `h_t`.
    pub entropy: f64,
    pub n_leaves: usize,
    pub train_error: f64,
    /// `|Σ w' y α h| / Σ w' |α h|` under the updated weights, when the line
    /// search ended strictly inside its interval.
    pub hardness_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// `R̂(F_0) = φ(0)`.
    pub initial_risk: f64,
    pub records: Vec<IterationRecord>,
    /// `misclassified[t][i]`: `sign(F_{t+1}(x_i)) != y_i`.
    pub misclassified: Option<Vec<Vec<bool>>>,
    pub stop: StopReason,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn risks(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.risk).collect()
    }

    /// Number of iterations after which each sample was misclassified.
    pub fn misclassification_counts(&self) -> Result<Vec<usize>> {
        let m = self.misclassified.as_ref().ok_or(Error::TraceNotRetained)?;
        let n = m.first().map_or(0, Vec::len);
        let mut counts = vec![0; n];
        for row in m {
            for (c, &b) in counts.iter_mut().zip(row) {
                *c += b as usize;
            }
        }
        Ok(counts)
    }

    fn truncate(&mut self, t: usize) {
        self.records.truncate(t);
        if let Some(m) = self.misclassified.as_mut() {
            m.truncate(t);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub alpha: f64,
    pub tree: RegionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    format_version: u32,
    loss: Loss,
    n_features: usize,
    stages: Vec<Stage>,
    #[serde(skip)]
    trace: Option<TrainTrace>,
    #[serde(skip)]
    train_scores: Vec<f64>,
}

/// Sign with the tie rule `sign(0) = +1`.
#[inline]
pub fn sign(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl Ensemble {
    pub fn from_stages(loss: Loss, n_features: usize, stages: Vec<Stage>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            loss,
            n_features,
            stages,
            trace: None,
            train_scores: Vec::new(),
        }
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn trace(&self) -> Option<&TrainTrace> {
        self.trace.as_ref()
    }

    /// `F_T(x_i)` on the training rows, as accumulated during training.
    pub fn train_scores(&self) -> &[f64] {
        &self.train_scores
    }

    /// `F_T(x)` without dimension checks.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.stages
            .iter()
            .fold(0.0, |f, s| f + s.alpha * s.tree.predict_region_value(x))
    }

    /// Returns `(F_T(x), sign(F_T(x)))`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let s = self.score(x);
        Ok((s, sign(s)))
    }

    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(data)?;
        Ok(data.rows().map(|x| self.score(x)).collect())
    }

    /// Scores after every prefix: `out[t][i] = F_{t+1}(x_i)`.
    pub fn staged_scores(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check_dim(data)?;
        let mut f = vec![0.0; data.len()];
        let mut out = Vec::with_capacity(self.stages.len());
        for s in &self.stages {
            for (fi, x) in f.iter_mut().zip(data.rows()) {
                *fi += s.alpha * s.tree.predict_region_value(x);
            }
            out.push(f.clone());
        }
        Ok(out)
    }

    /// Misclassification rate on `data`.
    pub fn error_rate(&self, data: &Dataset) -> Result<f64> {
        let scores = self.scores(data)?;
        Ok(misclassification_rate(&scores, data.labels()))
    }

    fn check_dim(&self, data: &Dataset) -> Result<()> {
        if data.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: data.n_features(),
            });
        }
        Ok(())
    }

    /// Keeps the first `t` stages.
    pub fn truncate(&mut self, t: usize) {
        self.stages.truncate(t);
        if let Some(tr) = self.trace.as_mut() {
            tr.truncate(t);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: Ensemble = serde_json::from_str(s)?;
        if e.format_version != FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model format version {}",
                e.format_version
            )));
        }
        Ok(e)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

pub fn misclassification_rate(scores: &[f64], labels: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let wrong = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| sign(s) != y)
        .count();
    wrong as f64 / scores.len() as f64
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// `R̂(F) = (1/n) Σ φ(y_i F_i)`, summed in index order.
pub fn empirical_risk(scores: &[f64], labels: &[f64], loss: &Loss) -> Result<f64> {
    check_len(scores.len(), labels.len())?;
    if scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(risk_unchecked(scores, labels, loss))
}

fn risk_unchecked(scores: &[f64], labels: &[f64], loss: &Loss) -> f64 {
    kahan_sum(scores.iter().zip(labels).map(|(&f, &y)| loss.phi(y * f))) / scores.len() as f64
}

/// `μ̂(h, w) = Σ w_i y_i h_i`, summed in index order.
pub fn empirical_margin(h_values: &[f64], labels: &[f64], weights: &[f64]) -> Result<f64> {
    check_len(h_values.len(), labels.len())?;
    check_len(h_values.len(), weights.len())?;
    Ok(kahan_sum(
        h_values
            .iter()
            .zip(labels)
            .zip(weights)
            .map(|((&h, &y), &w)| w * y * h),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub risk: f64,
    /// Risk at `α = 0`.
    pub initial_risk: f64,
    /// Minimizer lies strictly inside `(0, alpha_max)`.
    pub interior: bool,
}

impl LineSearchResult {
    pub fn stalled(&self) -> bool {
        self.alpha == 0.0
    }
}

/// Minimizes `α ↦ R̂(F + α h)` on `[0, alpha_max]`: 64 uniform grid points,
/// then golden-section on the bracket around the best one. Returns `α = 0`
/// when nothing beats the current risk, so the risk never increases.
pub fn line_search(
    scores: &[f64],
    h_values: &[f64],
    labels: &[f64],
    loss: &Loss,
    alpha_max: f64,
) -> Result<LineSearchResult> {
    check_len(scores.len(), labels.len())?;
    check_len(scores.len(), h_values.len())?;
    if scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(alpha_max > 0.0 && alpha_max.is_finite()) {
        return Err(Error::InvalidConfig(format!("alpha_max must be positive, got {alpha_max}")));
    }
    let n = scores.len() as f64;
    let risk = |alpha: f64| {
        kahan_sum(
            scores
                .iter()
                .zip(h_values)
                .zip(labels)
                .map(|((&f, &h), &y)| loss.phi(y * (f + alpha * h))),
        ) / n
    };
    let r0 = risk(0.0);
    let step = alpha_max / (LINE_SEARCH_GRID - 1) as f64;
    let grid: Vec<f64> = (0..LINE_SEARCH_GRID)
        .map(|k| if k == LINE_SEARCH_GRID - 1 { alpha_max } else { step * k as f64 })
        .collect();
    let values: Vec<f64> = grid.iter().enumerate().map(|(k, &a)| if k == 0 { r0 } else { risk(a) }).collect();
    let mut best = 0;
    for k in 1..LINE_SEARCH_GRID {
        if values[k] < values[best] {
            best = k;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(LINE_SEARCH_GRID - 1)];
    let (mut alpha, mut value) = (grid[best], values[best]);
    let (ga, gv) = golden_section_min(risk, lo, hi, 1e-10 * alpha_max.max(1.0));
    if gv < value && ga > 0.0 {
        alpha = ga;
        value = gv;
    }
    // Function values only locate the minimum to about sqrt(eps); when the
    // bracket holds a sign change of the slope, solve for it directly.
    if alpha > 0.0 && hi > lo {
        let slope = |a: f64| {
            kahan_sum(
                scores
                    .iter()
                    .zip(h_values)
                    .zip(labels)
                    .map(|((&f, &h), &y)| loss.phi_prime(y * (f + a * h)) * y * h),
            )
        };
        if slope(lo) < 0.0 && slope(hi) > 0.0 {
            let a = bisect(slope, lo, hi, 0.0);
            let r = risk(a);
            // the two risks agree to the evaluation error; prefer the exact
            // stationary point
            if r <= value + 1e-12 * r0.abs() && r < r0 {
                alpha = a;
                value = r;
            }
        }
    }
    // a decrease below the evaluation error of the risk is not a descent step
    if !(value < r0 - 1e-12 * r0.abs()) {
        return Ok(LineSearchResult {
            alpha: 0.0,
            risk: r0,
            initial_risk: r0,
            interior: false,
        });
    }
    Ok(LineSearchResult {
        alpha,
        risk: value,
        initial_risk: r0,
        // a minimizer on a numerically flat plateau is not a stationary point
        interior: alpha > 0.0
            && alpha < alpha_max * (1.0 - 1e-9)
            && values[LINE_SEARCH_GRID - 1] - value > 1e-12 * r0,
    })
}

/// Normalized weights `w_i ∝ weight(y_i F_i)` computed in log space, or `None`
/// when every weight is below [`WEIGHT_COLLAPSE`].
pub fn normalized_weights(scores: &[f64], labels: &[f64], loss: &Loss) -> Option<Vec<f64>> {
    let ln_w: Vec<f64> = scores
        .iter()
        .zip(labels)
        .map(|(&f, &y)| loss.ln_weight(y * f))
        .collect();
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max >= WEIGHT_COLLAPSE.ln()) {
        return None;
    }
    let w: Vec<f64> = ln_w.iter().map(|&l| (l - max).exp()).collect();
    let total = kahan_sum(w.iter().copied());
    Some(w.into_iter().map(|x| x / total).collect())
}

fn entropy(weights: &[f64]) -> f64 {
    -kahan_sum(
        weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| w * w.ln()),
    )
}

/// Trains an ensemble on `data`.
pub fn train(data: &Dataset, config: &BoostConfig) -> Result<Ensemble> {
    if matches!(config.stopping, Stopping::EarlyStop { .. }) {
        return Err(Error::InvalidConfig(
            "early stopping needs a validation set".into(),
        ));
    }
    run(data, None, config)
}

/// Trains with a validation set. Under [`Stopping::EarlyStop`] the returned
/// ensemble is the prefix with the lowest validation error (earliest on ties).
pub fn train_with_validation(data: &Dataset, validation: &Dataset, config: &BoostConfig) -> Result<Ensemble> {
    if validation.n_features() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            actual: validation.n_features(),
        });
    }
    run(data, Some(validation), config)
}

fn run(data: &Dataset, validation: Option<&Dataset>, config: &BoostConfig) -> Result<Ensemble> {
    config.validate()?;
    if data.len() < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 training samples, got {}",
            data.len()
        )));
    }
    let loss = &config.loss;
    let n = data.len();
    let labels = data.labels();
    let sorted = SortedFeatures::new(data);
    let budget = config.iteration_budget(n);

    let mut f = vec![0.0; n];
    let mut weights = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    let mut trace = TrainTrace {
        initial_risk: risk_unchecked(&f, labels, loss),
        records: Vec::new(),
        misclassified: config.retain_indicators.then(Vec::new),
        stop: StopReason::Completed,
    };
    let patience = match config.stopping {
        Stopping::EarlyStop { patience } => Some(patience.max(1)),
        _ => None,
    };
    let mut val_scores = validation.map(|v| vec![0.0; v.len()]);
    let mut best_val = (f64::INFINITY, 0usize);

    for t in 1..=budget {
        let mut tree = fit_tree_presorted(data, &sorted, &weights, &config.tree)?;
        let assignment = tree.assign(data);
        let region_scores = loss
            .needs_current_score()
            .then(|| tree.region_means(&assignment, &f));
        tree.assign_hypothesis(loss, region_scores.as_deref(), config.solver, config.tree.clamp)?;
        let leaf_values: Vec<f64> = tree.regions().iter().map(|r| r.h_value).collect();
        let h: Vec<f64> = assignment.iter().map(|&r| leaf_values[r]).collect();
        let margin = empirical_margin(&h, labels, &weights)?;
        let weight_entropy = entropy(&weights);

        let (alpha, interior) = match config.step {
            StepMode::LineSearch { alpha_max } => {
                let ls = line_search(&f, &h, labels, loss, alpha_max)?;
                if ls.stalled() {
                    trace.stop = StopReason::Stalled { iteration: t };
                    break;
                }
                (ls.alpha, ls.interior)
            }
            StepMode::Constant(a) => (a.unwrap_or_else(|| loss.default_constant_step()), false),
            StepMode::Schedule { initial, power } => (initial * (t as f64).powf(-power), false),
        };

        for (fi, hi) in f.iter_mut().zip(&h) {
            *fi += alpha * hi;
        }
        let risk = risk_unchecked(&f, labels, loss);
        let new_weights = normalized_weights(&f, labels, loss);
        let hardness_residual = match (&new_weights, interior) {
            (Some(w), true) => {
                // Stationarity involves -φ' itself, which the floored least-squares
                // weights do not reproduce past v = 1. For the square losses that
                // gradient is O(1) and vanishes at v = 1, so entries below 1e-9 are
                // rounding of a zero slope.
                let (signed, floor) = if loss.needs_current_score() {
                    (f.iter().zip(labels).map(|(&s, &y)| -loss.phi_prime(y * s)).collect(), 1e-9)
                } else {
                    (w.clone(), 0.0)
                };
                let num = kahan_sum(signed.iter().zip(labels).zip(&h).map(|((&w, &y), &h)| w * y * alpha * h));
                let den = kahan_sum(signed.iter().zip(&h).map(|(&w, &h)| w.abs().max(floor) * (alpha * h).abs()));
                let r = if den > 0.0 { num.abs() / den } else { 0.0 };
                if r > HARDNESS_TOL {
                    log::warn!("iteration {t}: first-order residual {r:.2e} after interior step {alpha}");
                }
                Some(r)
            }
            _ => None,
        };
        let wrong: Vec<bool> = f.iter().zip(labels).map(|(&s, &y)| sign(s) != y).collect();
        let train_error = wrong.iter().filter(|&&b| b).count() as f64 / n as f64;
        if let Some(m) = trace.misclassified.as_mut() {
            m.push(wrong);
        }
        trace.records.push(IterationRecord {
            iteration: t,
            risk,
            margin,
            alpha,
            entropy: weight_entropy,
            n_leaves: tree.n_leaves(),
            train_error,
            hardness_residual,
        });
        if let (Some(v), Some(vs)) = (validation, val_scores.as_mut()) {
            for (s, x) in vs.iter_mut().zip(v.rows()) {
                *s += alpha * tree.predict_region_value(x);
            }
            let err = misclassification_rate(vs, v.labels());
            if err < best_val.0 {
                best_val = (err, t);
            }
        }
        stages.push(Stage { alpha, tree });

        match new_weights {
            Some(w) => weights = w,
            None => {
                log::warn!("iteration {t}: all sample weights underflowed; stopping");
                trace.stop = StopReason::WeightCollapse { iteration: t };
                break;
            }
        }
        if let Some(p) = patience {
            if t - best_val.1 >= p {
                break;
            }
        }
    }

    let mut ensemble = Ensemble::from_stages(*loss, data.n_features(), stages);
    if patience.is_some() && best_val.1 < ensemble.len() {
        let best = best_val.1;
        // replay the kept prefix so the stored scores match the model
        f = vec![0.0; n];
        for s in &ensemble.stages[..best] {
            for (fi, x) in f.iter_mut().zip(data.rows()) {
                *fi += s.alpha * s.tree.predict_region_value(x);
            }
        }
        ensemble.stages.truncate(best);
        trace.truncate(best);
        trace.stop = StopReason::EarlyStopped { best };
    }
    ensemble.trace = Some(trace);
    ensemble.train_scores = f;
    Ok(ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn risk_and_margin_basics() {
        let loss = Loss::arb(2.0).unwrap();
        assert_eq!(empirical_risk(&[0.0; 4], &[1.0, -1.0, 1.0, 1.0], &loss).unwrap(), 1.0);
        let y = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(empirical_margin(&y, &y, &[0.25; 4]).unwrap(), 1.0);
        assert!(matches!(
            empirical_margin(&y, &y, &[0.5; 2]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn sign_tie_rule() {
        assert_eq!(sign(0.0), 1.0);
        assert_eq!(sign(-0.0), 1.0);
        assert_eq!(sign(-1e-300), -1.0);
    }

    #[test]
    fn line_search_recovers_quadratic_minimum() {
        // least squares with y = 1, F = 0, h = 1: risk (α - 1)², minimum at 1
        let r = line_search(&[0.0], &[1.0], &[1.0], &Loss::LeastSquares, 4.0).unwrap();
        assert!((r.alpha - 1.0).abs() < 1e-6);
        assert!(r.interior);
    }

    #[test]
    fn line_search_stalls_on_bad_direction() {
        let r = line_search(&[0.0], &[-1.0], &[1.0], &Loss::Exponential, 4.0).unwrap();
        assert!(r.stalled());
        assert_eq!(r.risk, r.initial_risk);
    }

    #[test]
    fn all_positive_dataset() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![1.0; 3]).unwrap();
        let cfg = BoostConfig {
            max_iter: 1,
            ..BoostConfig::default()
        };
        let e = train(&d, &cfg).unwrap();
        let s = e.train_scores();
        assert!(s[0] > 0.0 && s.iter().all(|&x| x == s[0]));
        let risk = e.trace().unwrap().records[0].risk;
        assert!(risk < cfg.loss.phi(0.0));
    }

    #[test]
    fn stored_scores_match_recomputation() {
        let d = line(40);
        let e = train(&d, &BoostConfig { max_iter: 30, ..BoostConfig::default() }).unwrap();
        let s = e.scores(&d).unwrap();
        for (a, b) in s.iter().zip(e.train_scores()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn predict_single_stage() {
        use crate::tree::Region;
        let tree = RegionTree::single_leaf(
            Region {
                id: 0,
                p: 0.9,
                clamped_p: 0.9,
                h_value: 2.0,
                total_weight: 1.0,
            },
            1,
        );
        let e = Ensemble::from_stages(Loss::Exponential, 1, vec![Stage { alpha: 0.5, tree }]);
        assert_eq!(e.predict(&[3.0]).unwrap(), (1.0, 1.0));
        assert!(matches!(e.predict(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        let empty = Ensemble::from_stages(Loss::Exponential, 1, vec![]);
        assert_eq!(empty.predict(&[0.0]).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let d = line(25);
        let e = train(&d, &BoostConfig { max_iter: 10, ..BoostConfig::default() }).unwrap();
        let back = Ensemble::from_json(&e.to_json().unwrap()).unwrap();
        assert_eq!(back.stages(), e.stages());
        assert_eq!(back.loss(), e.loss());
        for x in d.rows() {
            assert_eq!(back.score(x).to_bits(), e.score(x).to_bits());
        }
    }

    #[test]
    fn consistency_budget() {
        let cfg = BoostConfig {
            max_iter: 1000,
            stopping: Stopping::Consistency { epsilon: 0.5 },
            ..BoostConfig::default()
        };
        assert_eq!(cfg.iteration_budget(100), 10);
        assert_eq!(cfg.iteration_budget(101), 11);
        assert_eq!(cfg.iteration_budget(10_000_000), 1000);
    }

    #[test]
    fn config_errors() {
        let d = line(10);
        let bad = BoostConfig::new(Loss::Sigmoid);
        assert!(matches!(train(&d, &bad), Err(Error::NoHypothesisRule(_))));
        let early = BoostConfig {
            stopping: Stopping::EarlyStop { patience: 5 },
            ..BoostConfig::default()
        };
        assert!(matches!(train(&d, &early), Err(Error::InvalidConfig(_))));
        let zero = BoostConfig {
            step: StepMode::Constant(Some(0.0)),
            ..BoostConfig::default()
        };
        assert!(train(&d, &zero).is_err());
    }

    #[test]
    fn early_stop_keeps_best_prefix() {
        let d = line(60);
        let v = line(30);
        let cfg = BoostConfig {
            max_iter: 50,
            stopping: Stopping::EarlyStop { patience: 5 },
            ..BoostConfig::default()
        };
        let e = train_with_validation(&d, &v, &cfg).unwrap();
        let tr = e.trace().unwrap();
        assert_eq!(tr.len(), e.len());
        let s = e.scores(&d).unwrap();
        for (a, b) in s.iter().zip(e.train_scores()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn weights_collapse_is_detected() {
        assert!(normalized_weights(&[1e4, 1e4], &[1.0, 1.0], &Loss::Exponential).is_none());
        let w = normalized_weights(&[-1e4, 0.0], &[1.0, 1.0], &Loss::Exponential).unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
    }
}
