//! Conformal calibration with finite-sample false-alarm guarantees.
//!
//! Given a validation set of v statistics drawn under the inlier hypothesis
//! (independent of everything used to design the statistic), the conformal
//! p-value of a test statistic t is
//!
//! ```text
//! q̂(t) = (1 + #{validation statistics ≤ t}) / (1 + v)
//! ```
//!
//! Rejecting when q̂ ≤ a controls the false-alarm rate at a on average over
//! validation draws, and for one concrete validation set the realized
//! false-alarm rate is Beta(⌊(v+1)a⌋, v+1-⌊(v+1)a⌋)-distributed. The
//! threshold search exploits that law: it picks the largest interval index
//! l such that the Beta(l, v+1-l) upper 1-δ quantile stays at or below the
//! target α, so the realized rate exceeds α with probability at most δ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{beta_quantile, Probability};

/// Sorted inlier statistics from the validation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationBank {
    sorted: Vec<f64>,
}

impl ValidationBank {
    pub fn new(mut statistics: Vec<f64>) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::EmptyInput("validation bank needs at least one statistic"));
        }
        if let Some(v) = statistics.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "validation statistics must be finite, got {v}"
            )));
        }
        statistics.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: statistics })
    }

    /// Validation size v.
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Target false-alarm rate α and failure rate δ, both in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeConfig {
    alpha: f64,
    delta: f64,
}

impl GuaranteeConfig {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("delta", delta)] {
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie strictly inside (0, 1), got {v}"
                )));
            }
        }
        Ok(Self { alpha, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// The Beta law of the realized false-alarm rate at conformal level `a`:
/// shapes `(⌊(v+1)a⌋, v+1-⌊(v+1)a⌋)`.
pub fn beta_far_law(v: usize, a: Probability) -> Result<FarLaw> {
    if v == 0 {
        return Err(Error::InvalidArgument("validation size must be >= 1".into()));
    }
    let a = a.get();
    if a <= 0.0 || a >= 1.0 {
        return Err(Error::Domain(format!(
            "conformal level must lie in (0, 1), got {a}"
        )));
    }
    let alpha_shape = ((v as f64 + 1.0) * a).floor() as u64;
    Ok(FarLaw {
        alpha_shape,
        beta_shape: (v as u64 + 1) - alpha_shape,
    })
}

/// Shape pair of the realized-FAR Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarLaw {
    pub alpha_shape: u64,
    pub beta_shape: u64,
}

impl FarLaw {
    /// A zero first shape means the detector never rejects: the law is a
    /// point mass at zero.
    pub fn is_degenerate(&self) -> bool {
        self.alpha_shape == 0
    }
}

/// Result of the threshold search: the conformal level `a`, its interval
/// index l (so `a ∈ [l/(v+1), (l+1)/(v+1))`), and the achieved rate bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalThreshold {
    pub a: f64,
    pub l: usize,
    /// The 1-δ quantile of the realized-FAR law at this l; the realized
    /// false-alarm rate stays at or below this with probability ≥ 1-δ.
    pub alpha_min: f64,
    /// True when even l = 1 would violate the guarantee; the returned
    /// threshold never rejects and the guarantee holds vacuously.
    pub degenerate: bool,
}

/// The 1-δ Beta quantile for interval index l, with the degenerate l = 0
/// (point mass at zero) and l = v+1 (point mass at one) cases
/// short-circuited so Beta shapes of zero are never evaluated.
fn alpha_delta(l: usize, v: usize, delta: f64) -> Result<f64> {
    if l == 0 {
        Ok(0.0)
    } else if l > v {
        Ok(1.0)
    } else {
        Ok(beta_quantile(
            Probability::new(1.0 - delta)?,
            l as f64,
            (v + 1 - l) as f64,
        )?
        .get())
    }
}

/// Bisection search for the conformal level guaranteeing a false-alarm rate
/// of at most α with probability at least 1-δ over the validation draw.
///
/// Bisects on a ∈ (0, 1); because the Beta parameters only change when
/// ⌊(v+1)a⌋ does, the loop stops once the bracket endpoints sit in adjacent
/// intervals, then recomputes l from the feasible endpoint and returns
/// `a = (l + 0.99)/(v+1)`, a point close to the right edge of interval l.
pub fn find_threshold(v: usize, g: &GuaranteeConfig) -> Result<ConformalThreshold> {
    if v == 0 {
        return Err(Error::InvalidArgument("validation size must be >= 1".into()));
    }
    let vp1 = v as f64 + 1.0;
    let mut a_min = 0.0_f64;
    let mut a_max = 1.0_f64;
    let mut guard = 0;
    while ((vp1 * a_max).floor() - (vp1 * a_min).floor()) > 1.0 {
        let a = 0.5 * (a_min + a_max);
        let l = (vp1 * a).floor() as usize;
        if alpha_delta(l, v, g.delta)? > g.alpha {
            a_max = a;
        } else {
            a_min = a;
        }
        guard += 1;
        if guard > 200 {
            return Err(Error::Numeric {
                what: "find_threshold bisection",
                residual: a_max - a_min,
            });
        }
    }
    let l = (vp1 * a_min).floor() as usize;
    let a = (l as f64 + 0.99) / vp1;
    let alpha_min = alpha_delta(l, v, g.delta)?;
    Ok(ConformalThreshold {
        a,
        l,
        alpha_min,
        degenerate: l == 0,
    })
}

/// Conformal p-value of one test statistic against the bank (Eq. form:
/// `(1 + #{t_i ≤ t}) / (1 + v)`, counted by binary search).
pub fn conformal_p(bank: &ValidationBank, t: f64) -> Result<Probability> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "test statistic must be finite, got {t}"
        )));
    }
    let count = bank.sorted.partition_point(|&ti| ti <= t);
    Probability::new((1.0 + count as f64) / (1.0 + bank.len() as f64))
}

/// Detector output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Ood,
    Inlier,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Ood => "ood",
            Decision::Inlier => "inlier",
        })
    }
}

/// A calibrated conformal detector: validation bank plus threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibration {
    bank: ValidationBank,
    threshold: ConformalThreshold,
    guarantee: GuaranteeConfig,
}

impl ConformalCalibration {
    pub fn calibrate(bank: ValidationBank, guarantee: GuaranteeConfig) -> Result<Self> {
        let threshold = find_threshold(bank.len(), &guarantee)?;
        Ok(Self {
            bank,
            threshold,
            guarantee,
        })
    }

    pub fn bank(&self) -> &ValidationBank {
        &self.bank
    }

    pub fn threshold(&self) -> &ConformalThreshold {
        &self.threshold
    }

    pub fn guarantee(&self) -> &GuaranteeConfig {
        &self.guarantee
    }

    /// Conformal p-value of one statistic.
    pub fn p_value(&self, t: f64) -> Result<Probability> {
        conformal_p(&self.bank, t)
    }
}

/// OOD iff the conformal p-value is at or below the calibrated level.
pub fn detect(t_statistic: f64, cal: &ConformalCalibration) -> Result<Decision> {
    let p = conformal_p(&cal.bank, t_statistic)?;
    Ok(if p.get() <= cal.threshold.a {
        Decision::Ood
    } else {
        Decision::Inlier
    })
}

/// Plain fixed-threshold rule: OOD iff t ≤ τ (inclusive). A τ of negative
/// infinity never rejects.
pub fn fixed_threshold_detect(t_statistic: f64, tau: f64) -> Decision {
    if t_statistic <= tau {
        Decision::Ood
    } else {
        Decision::Inlier
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank4() -> ValidationBank {
        ValidationBank::new(vec![-3.0, -1.0, 0.0, 2.0]).unwrap()
    }

    #[test]
    fn conformal_p_counts() {
        assert_eq!(conformal_p(&bank4(), -2.0).unwrap().get(), 0.4);
        assert_eq!(conformal_p(&bank4(), -5.0).unwrap().get(), 0.2);
        assert_eq!(conformal_p(&bank4(), 3.0).unwrap().get(), 1.0);
        // Ties count as <=.
        assert_eq!(conformal_p(&bank4(), -1.0).unwrap().get(), 0.6);
    }

    #[test]
    fn conformal_p_rejects_non_finite() {
        assert!(conformal_p(&bank4(), f64::NAN).is_err());
    }

    #[test]
    fn empty_bank_is_rejected() {
        assert!(ValidationBank::new(vec![]).is_err());
    }

    #[test]
    fn beta_law_examples() {
        let p = |v| Probability::new(v).unwrap();
        let law = beta_far_law(100, p(0.03)).unwrap();
        assert_eq!((law.alpha_shape, law.beta_shape), (3, 98));
        let law = beta_far_law(100, p(0.0295)).unwrap();
        assert_eq!((law.alpha_shape, law.beta_shape), (2, 99));
        let law = beta_far_law(4, p(0.1)).unwrap();
        assert_eq!((law.alpha_shape, law.beta_shape), (0, 5));
        assert!(law.is_degenerate());
    }

    #[test]
    fn find_threshold_v100_pinned() {
        // Exhaustive scan with a 30-digit quadrature oracle gives l = 2:
        // Beta(2, 99) q0.9 = 0.03834 <= 0.05 < Beta(3, 98) q0.9 = 0.05235.
        let g = GuaranteeConfig::new(0.05, 0.1).unwrap();
        let t = find_threshold(100, &g).unwrap();
        assert_eq!(t.l, 2);
        assert!(!t.degenerate);
        assert!((t.a - 2.99 / 101.0).abs() < 1e-12);
        assert!((t.alpha_min - 0.038_339_497_495_386_964).abs() < 1e-9);
    }

    #[test]
    fn find_threshold_v10000_approaches_alpha() {
        let g = GuaranteeConfig::new(0.05, 0.1).unwrap();
        let t = find_threshold(10_000, &g).unwrap();
        assert_eq!(t.l, 472);
        assert!(t.alpha_min > 0.045 && t.alpha_min <= 0.05);
        assert!((t.alpha_min - 0.049_931_366_079_016_1).abs() < 1e-9);
    }

    #[test]
    fn find_threshold_v1_is_degenerate() {
        // Beta(1, 1) 90th percentile is 0.9 > 0.05.
        let g = GuaranteeConfig::new(0.05, 0.1).unwrap();
        let t = find_threshold(1, &g).unwrap();
        assert_eq!(t.l, 0);
        assert!(t.degenerate);
        assert_eq!(t.alpha_min, 0.0);
        assert!(t.a < 1.0 / 2.0);
    }

    #[test]
    fn degenerate_calibration_never_rejects() {
        let bank = ValidationBank::new(vec![0.5]).unwrap();
        let g = GuaranteeConfig::new(0.05, 0.1).unwrap();
        let cal = ConformalCalibration::calibrate(bank, g).unwrap();
        assert!(cal.threshold().degenerate);
        for t in [-10.0, 0.0, 0.5, 10.0] {
            assert_eq!(detect(t, &cal).unwrap(), Decision::Inlier);
        }
    }

    #[test]
    fn detect_extremes() {
        let bank = ValidationBank::new((0..99).map(|i| i as f64).collect()).unwrap();
        let g = GuaranteeConfig::new(0.2, 0.5).unwrap();
        let cal = ConformalCalibration::calibrate(bank, g).unwrap();
        assert!(cal.threshold().a >= 1.0 / 100.0);
        // Below every validation statistic: q = 1/(1+v) <= a.
        assert_eq!(detect(-1.0, &cal).unwrap(), Decision::Ood);
        // Above every validation statistic: q = 1.
        assert_eq!(detect(1000.0, &cal).unwrap(), Decision::Inlier);
    }

    #[test]
    fn fixed_threshold_boundary_is_inclusive() {
        assert_eq!(fixed_threshold_detect(1.0, 1.0), Decision::Ood);
        assert_eq!(fixed_threshold_detect(1.0 + 1e-9, 1.0), Decision::Inlier);
        assert_eq!(
            fixed_threshold_detect(-1e300, f64::NEG_INFINITY),
            Decision::Inlier
        );
    }

    #[test]
    fn guarantee_config_validates() {
        assert!(GuaranteeConfig::new(0.0, 0.1).is_err());
        assert!(GuaranteeConfig::new(0.05, 1.0).is_err());
        assert!(GuaranteeConfig::new(f64::NAN, 0.1).is_err());
    }
}
