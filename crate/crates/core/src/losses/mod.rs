//! Margin losses for the Arch Boost framework.
//!
//! Every loss is a function of the margin `v = y F(x)`. Besides the value and
//! its first two derivatives, each loss carries the pieces the booster needs:
//!
//! * the weight rule `w(v) = -φ'(v) / c` for a fixed positive constant `c`
//!   ([`Loss::weight_scale`]),
//! * the closed-form weak hypothesis for a region with weighted class
//!   probability `p` (and, for the square losses, the current score `F`),
//! * the θ map whose sign agrees with `2p - 1`,
//! * the population minimizer `F*(p)` and its inverse link.
//!
//! The γ-robust family `φ(v) = 2^γ / (1 + e^{av})^γ` is bounded by `2^γ` and its
//! weight rule vanishes on both tails, which is what lets the booster abandon
//! points that sit far on the wrong side of the boundary.

mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, logit, sigmoid, softplus};

pub use validate::{
    validate_arch_loss, validate_arch_loss_default, weight_peak, ArchCondition, ConditionCheck,
    ValidationReport, DEFAULT_ALPHAS, DEFAULT_GRID,
};

/// Default truncation point of the truncated exponential loss.
pub const DEFAULT_TRUNCATION: f64 = -2.0;

/// Index of a member of the γ-robust family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaRobustParams {
    pub a: f64,
    pub gamma: f64,
}

impl GammaRobustParams {
    /// Training-grade parameters: `a > 0`, `γ > 1`.
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidLoss(format!("scale a must be positive, got {a}")));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::InvalidLoss(format!(
                "gamma must exceed 1 for training, got {gamma}"
            )));
        }
        Ok(Self { a, gamma })
    }

    /// Allows the `γ = 1` member (a rescaled sigmoid). Only meant for the
    /// validator and the weight-peak study; it has no weak-hypothesis rule.
    pub fn including_sigmoid_limit(a: f64, gamma: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) || !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::InvalidLoss(format!("need a > 0 and gamma >= 1, got a={a}, gamma={gamma}")));
        }
        Ok(Self { a, gamma })
    }

    pub fn is_training_grade(&self) -> bool {
        self.gamma > 1.0
    }
}

impl Default for GammaRobustParams {
    fn default() -> Self {
        Self { a: 1.0, gamma: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Loss {
    GammaRobust(GammaRobustParams),
    Exponential,
    Logistic,
    LeastSquares,
    ModifiedLeastSquares,
    /// `e^{-v}` for `v >= t0`, held at `e^{-t0}` below.
    TruncatedExponential { t0: f64 },
    /// `(1 + e^v)^{-1}`. Not an Arch boosting loss; kept as a counterexample.
    Sigmoid,
}

impl Loss {
    /// ARB-γ loss with `a = 1`.
    pub fn arb(gamma: f64) -> Result<Self> {
        GammaRobustParams::new(1.0, gamma).map(Loss::GammaRobust)
    }

    pub fn gamma_robust(params: GammaRobustParams) -> Self {
        Loss::GammaRobust(params)
    }

    /// Looks up a reference loss by its long name (`exponential`, `logistic`,
    /// `least_squares`, `modified_least_squares`, `truncated_exponential`,
    /// `sigmoid`) or by any identifier accepted by [`FromStr`].
    pub fn reference(name: &str) -> Result<Self> {
        match name {
            "exponential" => Ok(Loss::Exponential),
            "logistic" => Ok(Loss::Logistic),
            "least_squares" => Ok(Loss::LeastSquares),
            "modified_least_squares" => Ok(Loss::ModifiedLeastSquares),
            "truncated_exponential" => Ok(Loss::TruncatedExponential {
                t0: DEFAULT_TRUNCATION,
            }),
            "sigmoid" => Ok(Loss::Sigmoid),
            other => other.parse(),
        }
    }

    /// Short identifier, e.g. `arb:2`, `exp`, `trunc_exp:-2`.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn is_training_grade(&self) -> bool {
        match self {
            Loss::GammaRobust(p) => p.is_training_grade(),
            Loss::Sigmoid => false,
            _ => true,
        }
    }

    /// Whether the weak hypothesis depends on the current score `F`.
    pub fn needs_current_score(&self) -> bool {
        matches!(self, Loss::LeastSquares | Loss::ModifiedLeastSquares)
    }

    pub fn phi(&self, v: f64) -> f64 {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => {
                // factor kept separate so that φ <= 2^γ holds exactly
                2f64.powf(gamma) * (-gamma * softplus(a * v)).exp()
            }
            Loss::Exponential => (-v).exp(),
            Loss::Logistic => softplus(-v),
            Loss::LeastSquares => (v - 1.0) * (v - 1.0),
            Loss::ModifiedLeastSquares => {
                let r = (1.0 - v).max(0.0);
                r * r
            }
            Loss::TruncatedExponential { t0 } => (-v.max(t0)).exp(),
            Loss::Sigmoid => sigmoid(-v),
        }
    }

    pub fn phi_prime(&self, v: f64) -> f64 {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => {
                -(a * gamma) * (gamma * std::f64::consts::LN_2 + log_weight_gamma(a, gamma, v)).exp()
            }
            Loss::Exponential => -(-v).exp(),
            Loss::Logistic => -sigmoid(-v),
            Loss::LeastSquares => 2.0 * (v - 1.0),
            Loss::ModifiedLeastSquares => -2.0 * (1.0 - v).max(0.0),
            Loss::TruncatedExponential { t0 } => {
                if v >= t0 {
                    -(-v).exp()
                } else {
                    0.0
                }
            }
            Loss::Sigmoid => -sigmoid(v) * sigmoid(-v),
        }
    }

    pub fn phi_double_prime(&self, v: f64) -> f64 {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => {
                // a²γ2^γ s^γ (1-s) [γ(1-s) - s] with s = 1/(1+e^{av})
                let s = sigmoid(-a * v);
                let one_minus_s = sigmoid(a * v);
                a * a
                    * gamma
                    * (gamma * std::f64::consts::LN_2 + log_weight_gamma(a, gamma, v)).exp()
                    * (gamma * one_minus_s - s)
            }
            Loss::Exponential => (-v).exp(),
            Loss::Logistic => sigmoid(v) * sigmoid(-v),
            Loss::LeastSquares => 2.0,
            Loss::ModifiedLeastSquares => {
                if v < 1.0 {
                    2.0
                } else {
                    0.0
                }
            }
            Loss::TruncatedExponential { t0 } => {
                if v >= t0 {
                    (-v).exp()
                } else {
                    0.0
                }
            }
            Loss::Sigmoid => {
                let (sp, sm) = (sigmoid(v), sigmoid(-v));
                sp * sm * (sp - sm)
            }
        }
    }

    /// `ln(-φ'(v))`, or `None` where `φ'(v) >= 0`.
    pub fn ln_neg_phi_prime(&self, v: f64) -> Option<f64> {
        let value = match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => {
                (a * gamma).ln() + gamma * std::f64::consts::LN_2 + log_weight_gamma(a, gamma, v)
            }
            Loss::Exponential => -v,
            Loss::Logistic => -softplus(v),
            Loss::LeastSquares | Loss::ModifiedLeastSquares => {
                if v < 1.0 {
                    (2.0 * (1.0 - v)).ln()
                } else {
                    return None;
                }
            }
            Loss::TruncatedExponential { t0 } => {
                if v >= t0 {
                    -v
                } else {
                    return None;
                }
            }
            Loss::Sigmoid => -softplus(v) - softplus(-v),
        };
        Some(value)
    }

    /// Positive constant `c` with `weight(v) = -φ'(v) / c`.
    pub fn weight_scale(&self) -> f64 {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => a * gamma * 2f64.powf(gamma),
            Loss::LeastSquares | Loss::ModifiedLeastSquares => 2.0,
            _ => 1.0,
        }
    }

    /// Hardness-condition weight for a sample with margin `v`.
    ///
    /// For least squares this is `1 - v` and goes negative past `v = 1`; the
    /// booster floors weights at zero.
    pub fn weight(&self, v: f64) -> f64 {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => log_weight_gamma(a, gamma, v).exp(),
            Loss::Exponential => (-v).exp(),
            Loss::Logistic => sigmoid(-v),
            Loss::LeastSquares => 1.0 - v,
            Loss::ModifiedLeastSquares => (1.0 - v).max(0.0),
            Loss::TruncatedExponential { t0 } => {
                if v >= t0 {
                    (-v).exp()
                } else {
                    0.0
                }
            }
            Loss::Sigmoid => sigmoid(v) * sigmoid(-v),
        }
    }

    /// `ln weight(v)`, or `-inf` where the weight is zero (or, for least
    /// squares, negative). Lets the booster normalize weights without overflow.
    pub fn ln_weight(&self, v: f64) -> f64 {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => log_weight_gamma(a, gamma, v),
            Loss::Exponential => -v,
            Loss::Logistic => -softplus(v),
            Loss::TruncatedExponential { t0 } if v >= t0 => -v,
            Loss::Sigmoid => -softplus(v) - softplus(-v),
            _ => {
                let w = self.weight(v);
                if w > 0.0 {
                    w.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// θ map applied to a (clamped) class probability `t`; `f` is the current
    /// score and only matters for the square losses, where it must lie in
    /// `(-1, 1)`.
    pub fn theta(&self, t: f64, f: f64) -> Option<f64> {
        match self {
            Loss::GammaRobust(p) if p.is_training_grade() => Some(logit(t)),
            Loss::Exponential | Loss::Logistic | Loss::TruncatedExponential { .. } => Some(logit(t)),
            Loss::LeastSquares | Loss::ModifiedLeastSquares => {
                let c = 2.0 * t - 1.0;
                Some(c * (1.0 - f * f) / (c * f + 1.0))
            }
            _ => None,
        }
    }

    /// Closed-form solution of the weak-hypothesis equation on a region with
    /// weighted probability `p` and current score `f`. For ARB-γ the factor
    /// `1/(a(γ-1))` is absorbed into the step size.
    pub fn weak_hypothesis(&self, p: f64, f: f64) -> Option<f64> {
        match self {
            Loss::Exponential | Loss::TruncatedExponential { .. } => Some(0.5 * logit(p)),
            _ => self.theta(p, f),
        }
    }

    /// Population minimizer `F*(p)` of `p φ(F) + (1-p) φ(-F)`.
    pub fn optimal_f(&self, p: f64) -> Option<f64> {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) if gamma > 1.0 => {
                Some(logit(p) / (a * (gamma - 1.0)))
            }
            Loss::Exponential | Loss::TruncatedExponential { .. } => Some(0.5 * logit(p)),
            Loss::Logistic => Some(logit(p)),
            Loss::LeastSquares | Loss::ModifiedLeastSquares => Some(2.0 * p - 1.0),
            _ => None,
        }
    }

    /// Inverse of [`Loss::optimal_f`]: the class probability implied by a score.
    pub fn inverse_link(&self, f: f64) -> Option<f64> {
        match *self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) if gamma > 1.0 => {
                Some(sigmoid(a * (gamma - 1.0) * f))
            }
            Loss::Exponential | Loss::TruncatedExponential { .. } => Some(sigmoid(2.0 * f)),
            Loss::Logistic => Some(sigmoid(f)),
            Loss::LeastSquares | Loss::ModifiedLeastSquares => Some((0.5 * (1.0 + f)).clamp(0.0, 1.0)),
            _ => None,
        }
    }

    /// Constant step size used when none is configured. The γ-robust values
    /// follow the cross-validated constants for γ ∈ {1.5, 2, …, 6}; other γ use
    /// `0.45 / (γ - 1)`.
    pub fn default_constant_step(&self) -> f64 {
        match *self {
            Loss::GammaRobust(GammaRobustParams { gamma, .. }) => {
                const TABLE: [(f64, f64); 6] =
                    [(1.5, 0.78), (2.0, 0.45), (3.0, 0.28), (4.0, 0.20), (5.0, 0.14), (6.0, 0.10)];
                TABLE
                    .iter()
                    .find(|(g, _)| *g == gamma)
                    .map_or(0.45 / (gamma - 1.0), |&(_, s)| s)
            }
            Loss::Exponential | Loss::TruncatedExponential { .. } => 0.8,
            _ => 0.5,
        }
    }

    /// Solves the weak-hypothesis equation
    ///
    /// `φ'(F) φ'(-F-h) / (φ'(-F) φ'(F+h)) = p / (1-p)`
    ///
    /// for `h` numerically, working with `ln(-φ')`. `region` is only used for
    /// error reporting.
    pub fn solve_hypothesis(&self, p: f64, f: f64, region: usize) -> Result<f64> {
        let fail = || Error::RootNotBracketed { region };
        let base = self
            .ln_neg_phi_prime(f)
            .zip(self.ln_neg_phi_prime(-f))
            .map(|(l_f, l_mf)| l_f - l_mf)
            .ok_or_else(fail)?;
        let target = logit(p);
        let residual = |h: f64| -> Option<f64> {
            let num = self.ln_neg_phi_prime(-f - h)?;
            let den = self.ln_neg_phi_prime(f + h)?;
            let r = base + num - den - target;
            r.is_finite().then_some(r)
        };
        let r0 = residual(0.0).ok_or_else(fail)?;
        if r0 == 0.0 {
            return Ok(0.0);
        }
        // The log-ratio is increasing in h for Arch losses, so search upward when
        // the residual starts negative.
        let dir = if r0 < 0.0 { 1.0 } else { -1.0 };
        let mut inside = 0.0;
        let mut step = 0.125;
        let mut outside = None;
        for _ in 0..200 {
            let trial = inside + dir * step;
            match residual(trial) {
                Some(r) if (r < 0.0) != (r0 < 0.0) || r == 0.0 => {
                    outside = Some(trial);
                    break;
                }
                Some(_) => {
                    inside = trial;
                    if step < 1e3 {
                        step *= 2.0;
                    } else {
                        return Err(fail());
                    }
                }
                // left the domain where the equation is defined: shrink
                None => {
                    step *= 0.5;
                    if step < 1e-14 {
                        return Err(fail());
                    }
                }
            }
        }
        let outside = outside.ok_or_else(fail)?;
        let (lo, hi) = if inside < outside {
            (inside, outside)
        } else {
            (outside, inside)
        };
        let root = bisect(
            |h| residual(h).unwrap_or(if (h - inside) * dir > 0.0 { -r0 } else { r0 }),
            lo,
            hi,
            1e-13,
        );
        Ok(root)
    }
}

/// `ln( e^{av} / (1 + e^{av})^{γ+1} )`, the log of the γ-robust weight rule.
#[inline]
fn log_weight_gamma(a: f64, gamma: f64, v: f64) -> f64 {
    // e^{av}/(1+e^{av}) = σ(av), (1+e^{av})^{-γ} = σ(-av)^γ
    -softplus(-a * v) - gamma * softplus(a * v)
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::GammaRobust(GammaRobustParams { a, gamma }) => {
                if *a == 1.0 {
                    write!(f, "arb:{}", fmt_num(*gamma))
                } else {
                    write!(f, "arb:{}:{}", fmt_num(*gamma), fmt_num(*a))
                }
            }
            Loss::Exponential => f.write_str("exp"),
            Loss::Logistic => f.write_str("logit"),
            Loss::LeastSquares => f.write_str("ls"),
            Loss::ModifiedLeastSquares => f.write_str("mls"),
            Loss::TruncatedExponential { t0 } => write!(f, "trunc_exp:{}", fmt_num(*t0)),
            Loss::Sigmoid => f.write_str("sigmoid"),
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    /// Accepts `arb:<gamma>[:<a>]`, `exp`, `logit`, `ls`, `mls`,
    /// `trunc_exp[:<t0>]`, `sigmoid`. `arb:1` yields the sigmoid-limit member.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::UnknownLoss(s.to_string());
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| unknown());
        let mut parts = s.split(':');
        let head = parts.next().ok_or_else(unknown)?;
        let args: Vec<&str> = parts.collect();
        match (head, args.as_slice()) {
            ("arb", [g]) => {
                GammaRobustParams::including_sigmoid_limit(1.0, num(g)?).map(Loss::GammaRobust)
            }
            ("arb", [g, a]) => {
                GammaRobustParams::including_sigmoid_limit(num(a)?, num(g)?).map(Loss::GammaRobust)
            }
            ("exp" | "exponential", []) => Ok(Loss::Exponential),
            ("logit" | "logistic", []) => Ok(Loss::Logistic),
            ("ls" | "least_squares", []) => Ok(Loss::LeastSquares),
            ("mls" | "modified_least_squares", []) => Ok(Loss::ModifiedLeastSquares),
            ("trunc_exp" | "truncated_exponential", []) => Ok(Loss::TruncatedExponential {
                t0: DEFAULT_TRUNCATION,
            }),
            ("trunc_exp" | "truncated_exponential", [t]) => {
                Ok(Loss::TruncatedExponential { t0: num(t)? })
            }
            ("sigmoid", []) => Ok(Loss::Sigmoid),
            _ => Err(unknown()),
        }
    }
}

impl From<Loss> for String {
    fn from(loss: Loss) -> String {
        loss.to_string()
    }
}

impl TryFrom<String> for Loss {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arb2() -> Loss {
        Loss::arb(2.0).unwrap()
    }

    #[test]
    fn gamma_robust_is_one_at_zero() {
        for &g in &[1.5, 2.0, 3.0, 6.0] {
            for &a in &[0.5, 1.0, 2.0] {
                let loss = Loss::GammaRobust(GammaRobustParams::new(a, g).unwrap());
                assert!((loss.phi(0.0) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_invalid_gamma_robust_parameters() {
        assert!(GammaRobustParams::new(1.0, 1.0).is_err());
        assert!(GammaRobustParams::new(0.0, 2.0).is_err());
        assert!(GammaRobustParams::new(-1.0, 2.0).is_err());
        assert!(GammaRobustParams::including_sigmoid_limit(1.0, 1.0).is_ok());
    }

    #[test]
    fn derivative_ratio_at_one() {
        let loss = arb2();
        let ratio = loss.phi_prime(-1.0) / loss.phi_prime(1.0);
        assert!((ratio - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn closed_form_derivative_matches() {
        // φ'(v) = -aγ2^γ e^{av}/(1+e^{av})^{γ+1}
        let (a, g) = (1.3, 2.5);
        let loss = Loss::GammaRobust(GammaRobustParams::new(a, g).unwrap());
        for &v in &[-3.0, -0.2, 0.0, 0.7, 4.0] {
            let e: f64 = (a * v).exp();
            let expected = -a * g * 2f64.powf(g) * e / (1.0 + e).powf(g + 1.0);
            assert!((loss.phi_prime(v) - expected).abs() <= 1e-12 * expected.abs());
            let w = e / (1.0 + e).powf(g + 1.0);
            assert!((loss.weight(v) - w).abs() <= 1e-12 * w);
        }
    }

    #[test]
    fn gamma_robust_is_bounded_and_redescending() {
        let loss = Loss::arb(2.0).unwrap();
        assert!((loss.phi(-40.0) - 4.0).abs() < 1e-9);
        assert!(loss.weight(40.0) < 1e-12);
        assert!(loss.weight(-40.0) < 1e-12);
        assert!(loss.phi(-1e4).is_finite() && loss.phi(1e4) >= 0.0);
    }

    #[test]
    fn reference_values() {
        let exp = Loss::reference("exponential").unwrap();
        assert_eq!(exp.phi(0.0), 1.0);
        assert_eq!(exp.phi_prime(0.0), -1.0);
        assert_eq!(Loss::reference("logistic").unwrap().optimal_f(0.5), Some(0.0));
        assert_eq!(Loss::reference("least_squares").unwrap().phi(1.0), 0.0);
        assert!(Loss::reference("hinge").is_err());
    }

    #[test]
    fn truncated_exponential_is_flat_below_truncation() {
        let loss = Loss::reference("truncated_exponential").unwrap();
        assert_eq!(loss.phi(-5.0), 2f64.exp());
        assert_eq!(loss.phi_prime(-5.0), 0.0);
        assert_eq!(loss.weight(-2.5), 0.0);
        assert_eq!(loss.phi(1.0), (-1f64).exp());
    }

    #[test]
    fn weight_is_proportional_to_negative_derivative() {
        let losses = [
            arb2(),
            Loss::arb(1.5).unwrap(),
            Loss::Exponential,
            Loss::Logistic,
            Loss::LeastSquares,
            Loss::ModifiedLeastSquares,
            Loss::Sigmoid,
        ];
        for loss in losses {
            let c = loss.weight_scale();
            for i in 0..=200 {
                let v = -10.0 + 0.1 * i as f64;
                let lhs = loss.weight(v) * c;
                let rhs = -loss.phi_prime(v);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300),
                    "{loss} at {v}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn hypothesis_rules() {
        let loss = arb2();
        assert_eq!(loss.weak_hypothesis(0.5, 0.0), Some(0.0));
        let h = loss.weak_hypothesis(0.731_058_578_630_004_9, 0.0).unwrap();
        assert!((h - 1.0).abs() < 1e-9);
        let ls = Loss::LeastSquares.weak_hypothesis(0.75, 0.0).unwrap();
        assert!((ls - 0.5).abs() < 1e-15);
        assert_eq!(Loss::Sigmoid.weak_hypothesis(0.7, 0.0), None);
    }

    #[test]
    fn root_solver_agrees_with_closed_forms() {
        let cases = [
            (arb2(), 0.0),
            (Loss::arb(3.0).unwrap(), 0.4),
            (Loss::Exponential, -0.7),
            (Loss::Logistic, 1.3),
            (Loss::LeastSquares, 0.3),
            (Loss::ModifiedLeastSquares, -0.6),
        ];
        for (loss, f) in cases {
            for &p in &[0.02, 0.2, 0.5, 0.64, 0.93, 0.9995] {
                let numeric = loss.solve_hypothesis(p, f, 0).unwrap();
                let closed = match loss {
                    // closed form absorbs 1/(a(γ-1)); undo that here
                    Loss::GammaRobust(GammaRobustParams { a, gamma }) => {
                        loss.weak_hypothesis(p, f).unwrap() / (a * (gamma - 1.0))
                    }
                    _ => loss.weak_hypothesis(p, f).unwrap(),
                };
                assert!(
                    (numeric - closed).abs() < 1e-8 * (1.0 + closed.abs()),
                    "{loss} p={p} f={f}: {numeric} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn root_solver_reports_region_for_sigmoid() {
        match Loss::Sigmoid.solve_hypothesis(0.7, 0.0, 7) {
            Err(Error::RootNotBracketed { region }) => assert_eq!(region, 7),
            other => panic!("expected bracket failure, got {other:?}"),
        }
    }

    #[test]
    fn identifiers_round_trip() {
        for id in ["arb:2", "arb:1.5", "arb:2:0.5", "exp", "logit", "ls", "mls", "trunc_exp:-2", "sigmoid"] {
            let loss: Loss = id.parse().unwrap();
            assert_eq!(loss.to_string(), id);
        }
        assert!("arb:x".parse::<Loss>().is_err());
        assert!("arb:0.5".parse::<Loss>().is_err());
        let json = serde_json::to_string(&Loss::arb(2.0).unwrap()).unwrap();
        assert_eq!(json, "\"arb:2\"");
    }

    #[test]
    fn inverse_link_inverts_optimal_f() {
        for loss in [arb2(), Loss::Exponential, Loss::Logistic, Loss::LeastSquares] {
            for &p in &[0.1, 0.5, 0.8] {
                let f = loss.optimal_f(p).unwrap();
                assert!((loss.inverse_link(f).unwrap() - p).abs() < 1e-12);
            }
        }
    }
}
