//! Grid-based checks of the Arch boosting loss conditions.

use serde::Serialize;

use super::Loss;
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_section_min, linspace};

/// Margin grid: 4001 uniform points on `[-30, 30]`.
pub const DEFAULT_GRID: (f64, f64, usize) = (-30.0, 30.0, 4001);

/// Mixing weights `0.05, 0.10, …, 0.95`.
pub const DEFAULT_ALPHAS: [f64; 19] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75,
    0.80, 0.85, 0.90, 0.95,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchCondition {
    /// (i) `φ >= 0` with infimum 0.
    NonNegative,
    /// (ii) `αφ(v) + (1-α)φ(-v)` has a single critical point, a minimum.
    UniqueCriticalPoint,
    /// (iii) classification calibration.
    Calibrated,
    /// Sufficient condition for (ii): `φ'(v)/φ'(-v)` strictly decreasing on
    /// `v > 0`. Informational; failing it does not imply failing (ii).
    DerivativeRatioDecreasing,
}

impl ArchCondition {
    pub fn is_definition_condition(self) -> bool {
        !matches!(self, ArchCondition::DerivativeRatioDecreasing)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub condition: ArchCondition,
    pub passed: bool,
    /// Margin at which the condition was decided or violated.
    pub witness_v: Option<f64>,
    /// Mixing weight involved, for the α-indexed conditions.
    pub witness_alpha: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub loss: String,
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    /// True when conditions (i)–(iii) all hold on the grid.
    pub fn is_arch_loss(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.condition.is_definition_condition())
            .all(|c| c.passed)
    }

    /// Failed conditions among (i)–(iii).
    pub fn failed_conditions(&self) -> Vec<ArchCondition> {
        self.checks
            .iter()
            .filter(|c| c.condition.is_definition_condition() && !c.passed)
            .map(|c| c.condition)
            .collect()
    }

    pub fn check(&self, condition: ArchCondition) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }
}

pub fn validate_arch_loss_default(loss: &Loss) -> ValidationReport {
    let (lo, hi, n) = DEFAULT_GRID;
    validate_arch_loss(loss, &linspace(lo, hi, n), &DEFAULT_ALPHAS)
}

/// Numerically checks conditions (i)–(iii) on `grid` for every mixing weight in
/// `alphas`, plus the monotone derivative-ratio criterion.
pub fn validate_arch_loss(loss: &Loss, grid: &[f64], alphas: &[f64]) -> ValidationReport {
    let checks = vec![
        check_non_negative(loss, grid),
        check_unique_critical_point(loss, grid, alphas),
        check_calibrated(loss, grid, alphas),
        check_ratio_decreasing(loss, grid),
    ];
    ValidationReport {
        loss: loss.id(),
        checks,
    }
}

const INFIMUM_TOL: f64 = 1e-6;

fn check_non_negative(loss: &Loss, grid: &[f64]) -> ConditionCheck {
    let mut min = (f64::INFINITY, f64::NAN);
    let mut argmin = 0;
    for (k, &v) in grid.iter().enumerate() {
        let phi = loss.phi(v);
        if !(phi >= 0.0) {
            return ConditionCheck {
                condition: ArchCondition::NonNegative,
                passed: false,
                witness_v: Some(v),
                witness_alpha: None,
                detail: format!("phi({v}) = {phi} is negative"),
            };
        }
        if phi < min.0 {
            min = (phi, v);
            argmin = k;
        }
    }
    // an interior minimum may sit between grid points
    if argmin > 0 && argmin + 1 < grid.len() {
        let (v, phi) = golden_section_min(|v| loss.phi(v), grid[argmin - 1], grid[argmin + 1], 1e-12);
        if phi < min.0 {
            min = (phi, v);
        }
    }
    let passed = min.0 <= INFIMUM_TOL;
    ConditionCheck {
        condition: ArchCondition::NonNegative,
        passed,
        witness_v: Some(min.1),
        witness_alpha: None,
        detail: format!("grid infimum {:.3e} at v = {}", min.0, min.1),
    }
}

fn check_unique_critical_point(loss: &Loss, grid: &[f64], alphas: &[f64]) -> ConditionCheck {
    let mut last_crossing = None;
    for &alpha in alphas {
        // sign changes of d/dv [αφ(v) + (1-α)φ(-v)] = αφ'(v) - (1-α)φ'(-v)
        let mut prev_sign = 0i8;
        let mut crossings = Vec::new();
        for &v in grid {
            let d = alpha * loss.phi_prime(v) - (1.0 - alpha) * loss.phi_prime(-v);
            let s = if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                0
            };
            if s != 0 {
                if prev_sign != 0 && s != prev_sign {
                    crossings.push((v, s));
                }
                prev_sign = s;
            }
        }
        let ok = crossings.len() == 1 && crossings[0].1 == 1;
        if !ok {
            let detail = match crossings.len() {
                0 => "derivative never changes sign: no interior critical point".to_string(),
                1 => "single critical point is a maximum".to_string(),
                k => format!("{k} critical points"),
            };
            return ConditionCheck {
                condition: ArchCondition::UniqueCriticalPoint,
                passed: false,
                witness_v: crossings.first().map(|c| c.0),
                witness_alpha: Some(alpha),
                detail,
            };
        }
        last_crossing = Some((crossings[0].0, alpha));
    }
    ConditionCheck {
        condition: ArchCondition::UniqueCriticalPoint,
        passed: true,
        witness_v: last_crossing.map(|c| c.0),
        witness_alpha: last_crossing.map(|c| c.1),
        detail: format!("one minimum for each of {} mixing weights", alphas.len()),
    }
}

fn check_calibrated(loss: &Loss, grid: &[f64], alphas: &[f64]) -> ConditionCheck {
    let mut worst: Option<(f64, f64, f64)> = None;
    for &alpha in alphas.iter().filter(|&&a| a != 0.5) {
        let mut global = f64::INFINITY;
        let mut wrong_side = f64::INFINITY;
        for &v in grid {
            let c = alpha * loss.phi(v) + (1.0 - alpha) * loss.phi(-v);
            global = global.min(c);
            if v * (2.0 * alpha - 1.0) <= 0.0 {
                wrong_side = wrong_side.min(c);
            }
        }
        let gap = wrong_side - global;
        let tol = 1e-12 * global.abs().max(1.0);
        if !(gap > tol) {
            return ConditionCheck {
                condition: ArchCondition::Calibrated,
                passed: false,
                witness_v: None,
                witness_alpha: Some(alpha),
                detail: format!("wrong-side infimum {wrong_side} does not exceed infimum {global}"),
            };
        }
        if worst.is_none_or(|w| gap < w.1) {
            worst = Some((alpha, gap, global));
        }
    }
    ConditionCheck {
        condition: ArchCondition::Calibrated,
        passed: true,
        witness_v: None,
        witness_alpha: worst.map(|w| w.0),
        detail: worst.map_or_else(
            || "no mixing weight other than 1/2".to_string(),
            |w| format!("smallest gap {:.3e}", w.1),
        ),
    }
}

fn check_ratio_decreasing(loss: &Loss, grid: &[f64]) -> ConditionCheck {
    let mut prev: Option<(f64, f64)> = None;
    for &v in grid.iter().filter(|&&v| v > 0.0) {
        let Some(log_ratio) = loss
            .ln_neg_phi_prime(v)
            .zip(loss.ln_neg_phi_prime(-v))
            .map(|(a, b)| a - b)
        else {
            continue;
        };
        if let Some((pv, pr)) = prev {
            if !(log_ratio < pr) {
                return ConditionCheck {
                    condition: ArchCondition::DerivativeRatioDecreasing,
                    passed: false,
                    witness_v: Some(v),
                    witness_alpha: None,
                    detail: format!("ratio does not decrease between v = {pv} and v = {v}"),
                };
            }
        }
        prev = Some((v, log_ratio));
    }
    ConditionCheck {
        condition: ArchCondition::DerivativeRatioDecreasing,
        passed: prev.is_some(),
        witness_v: prev.map(|p| p.0),
        witness_alpha: None,
        detail: "strictly decreasing where both derivatives are negative".to_string(),
    }
}

/// Location of the maximum of the weight rule, found by a grid scan on
/// `[-30, 30]` followed by bisection on the slope of the log-weight.
pub fn weight_peak(loss: &Loss) -> Result<f64> {
    let not_unimodal = || Error::NotUnimodal(loss.id());
    let grid = linspace(-30.0, 30.0, 6001);
    let log_w: Vec<f64> = grid.iter().map(|&v| loss.weight(v).ln()).collect();
    let (best, _) = log_w
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
    if best == 0 || best == grid.len() - 1 || !log_w[best].is_finite() {
        return Err(not_unimodal());
    }
    let rising = log_w[..=best].windows(2).all(|w| w[1] >= w[0]);
    let falling = log_w[best..].windows(2).all(|w| w[1] <= w[0]);
    if !(rising && falling) {
        return Err(not_unimodal());
    }
    // d/dv ln w = φ''/φ' changes sign from + to - at the peak
    let (lo, hi) = (grid[best - 1], grid[best + 1]);
    let slope = |v: f64| loss.phi_double_prime(v) / loss.phi_prime(v);
    if !(slope(lo) >= 0.0 && slope(hi) <= 0.0) {
        let (v, _) = golden_section_min(|v| -loss.weight(v).ln(), lo, hi, 1e-12);
        return Ok(v);
    }
    Ok(bisect(slope, lo, hi, 1e-15))
}
