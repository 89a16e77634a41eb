//! Robustness instrumentation: the breakdown condition on a fitted tree, the
//! influence bound, the invex rewrite of the two-robust risk, and outlier
//! detection from misclassification counts.

use std::path::Path;

use serde::Serialize;

use crate::booster::TrainTrace;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::numeric::{kahan_sum, sigmoid, softplus};
use crate::tree::RegionTree;

/// Default share of iterations a sample must be misclassified in to be flagged.
pub const DEFAULT_OUTLIER_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionBreakdown {
    pub region: usize,
    pub p: f64,
    /// `|p - ½| / min(p, 1-p)`; infinite for pure regions, `None` when `p = ½`.
    pub eta: Option<f64>,
    pub h_value: f64,
    pub outlier_weight: f64,
    pub inlier_weight: f64,
    pub satisfied: bool,
    /// `p = ½`: the region carries no direction.
    pub neutral: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownReport {
    pub regions: Vec<RegionBreakdown>,
    /// `⟨-g_o, h⟩ = Σ_{i ∉ O} w_i y_i h(x_i)`.
    pub inner_product: f64,
    /// The per-region inequality holds in every region.
    pub condition_holds: bool,
    /// `inner_product >= 0`.
    pub direction_preserved: bool,
}

impl BreakdownReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evaluates the breakdown condition of a fitted, hypothesis-filled tree on
/// `data` under `weights`, with `mask` marking the outliers.
pub fn check_breakdown(tree: &RegionTree, data: &Dataset, weights: &[f64], mask: &[bool]) -> Result<BreakdownReport> {
    let regions = tree.regions();
    let p: Vec<f64> = regions.iter().map(|r| r.p).collect();
    let h: Vec<f64> = regions.iter().map(|r| r.h_value).collect();
    check_breakdown_regions(&p, &h, &tree.assign(data), weights, data.labels(), mask)
}

/// Region-level form of [`check_breakdown`]: `p[j]`, `h[j]` describe region
/// `j` and `assignment[i]` is the region of sample `i`.
pub fn check_breakdown_regions(
    p: &[f64],
    h: &[f64],
    assignment: &[usize],
    weights: &[f64],
    labels: &[f64],
    mask: &[bool],
) -> Result<BreakdownReport> {
    let n = assignment.len();
    for len in [weights.len(), labels.len(), mask.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, actual: len });
        }
    }
    if p.len() != h.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            actual: h.len(),
        });
    }
    if let Some(&r) = assignment.iter().find(|&&r| r >= p.len()) {
        return Err(Error::InvalidData(format!("sample assigned to unknown region {r}")));
    }
    let mut outlier = vec![0.0; p.len()];
    let mut inlier = vec![0.0; p.len()];
    for i in 0..n {
        let r = assignment[i];
        if mask[i] {
            outlier[r] += weights[i];
        } else {
            inlier[r] += weights[i];
        }
    }
    let regions: Vec<RegionBreakdown> = (0..p.len())
        .map(|j| {
            let neutral = p[j] == 0.5;
            let eta = (!neutral).then(|| (p[j] - 0.5).abs() / p[j].min(1.0 - p[j]));
            RegionBreakdown {
                region: j,
                p: p[j],
                eta,
                h_value: h[j],
                outlier_weight: outlier[j],
                inlier_weight: inlier[j],
                satisfied: eta.is_none_or(|e| outlier[j] <= e * inlier[j]),
                neutral,
            }
        })
        .collect();
    let inner_product = kahan_sum(
        (0..n)
            .filter(|&i| !mask[i])
            .map(|i| weights[i] * labels[i] * h[assignment[i]]),
    );
    Ok(BreakdownReport {
        condition_holds: regions.iter().all(|r| r.satisfied),
        direction_preserved: inner_product >= 0.0,
        regions,
        inner_product,
    })
}

/// `√(φ(0)/λ) + M_k |φ'(m)| / (2λ)`.
pub fn influence_bound(loss: &Loss, lambda: f64, kernel_bound: f64, margin: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    if !(kernel_bound > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "kernel bound must be positive, got {kernel_bound}"
        )));
    }
    Ok((loss.phi(0.0) / lambda).sqrt() + kernel_bound * loss.phi_prime(margin).abs() / (2.0 * lambda))
}

/// `A_i = y_i ln(1 + e^{y_i F_i})`, the trimmed scores of the invex rewrite.
pub fn invex_scores(scores: &[f64], labels: &[f64]) -> Result<Vec<f64>> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    Ok(scores
        .iter()
        .zip(labels)
        .map(|(&f, &y)| y * softplus(y * f))
        .collect())
}

/// `max_i |(1 + e^{y_i F_i})^{-1} - e^{-y_i A_i}|`.
pub fn invex_transform_check(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let a = invex_scores(scores, labels)?;
    Ok(scores
        .iter()
        .zip(labels)
        .zip(&a)
        .map(|((&f, &y), &a)| (sigmoid(-y * f) - (-y * a).exp()).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierScore {
    pub iterations: usize,
    /// Samples misclassified in strictly more than `cutoff` iterations are flagged.
    pub cutoff: f64,
    pub counts: Vec<usize>,
    pub flagged: Vec<usize>,
    /// Flagged samples that are true outliers (`T_o`), when a mask is known.
    pub true_outliers_flagged: Option<usize>,
    /// `T_o / T`; `None` without a mask or when nothing is flagged.
    pub recovery_ratio: Option<f64>,
}

impl OutlierScore {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `sample,count,flagged` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["sample", "count", "flagged"]).map_err(|e| Error::csv(path, e))?;
        let mut flagged = self.flagged.iter().peekable();
        for (i, c) in self.counts.iter().enumerate() {
            let f = flagged.next_if_eq(&&i).is_some();
            w.write_record([i.to_string(), c.to_string(), (f as u8).to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Flags samples misclassified in more than `threshold_fraction · T` of the
/// `T` recorded iterations.
pub fn outlier_detect(trace: &TrainTrace, threshold_fraction: f64, mask: Option<&[bool]>) -> Result<OutlierScore> {
    if !(0.0..=1.0).contains(&threshold_fraction) {
        return Err(Error::InvalidConfig(format!(
            "threshold fraction must lie in [0,1], got {threshold_fraction}"
        )));
    }
    let counts = trace.misclassification_counts()?;
    if let Some(m) = mask {
        if m.len() != counts.len() {
            return Err(Error::LengthMismatch {
                expected: counts.len(),
                actual: m.len(),
            });
        }
    }
    let iterations = trace.len();
    let cutoff = threshold_fraction * iterations as f64;
    let flagged: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] as f64 > cutoff).collect();
    let true_outliers_flagged = mask.map(|m| flagged.iter().filter(|&&i| m[i]).count());
    let recovery_ratio = true_outliers_flagged
        .filter(|_| !flagged.is_empty())
        .map(|t| t as f64 / flagged.len() as f64);
    Ok(OutlierScore {
        iterations,
        cutoff,
        counts,
        flagged,
        true_outliers_flagged,
        recovery_ratio,
    })
}
