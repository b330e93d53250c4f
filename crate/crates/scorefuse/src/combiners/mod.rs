//! Combining rules: map one sample's z-vector (or p-vector, or raw grouped
//! scores) to a single scalar inlier statistic.
//!
//! Every rule follows the same orientation: **higher = more inlier**, and a
//! detector rejects when the statistic falls at or below its threshold. The
//! p-value combiners consume left-tail inlier p-values (small q = extreme
//! sample), which is exactly what the clamped empirical cdf produces.

mod alr;
mod csi;
mod glrt;
mod sigma;

pub use alr::alr_statistic;
pub use csi::{csi_heuristic_statistic, fit_csi_weights, CsiGroup, CsiGrouping, CsiWeights, ResolvedCsi};
pub use glrt::{glrt_statistic, GlrtConfig, DEFAULT_EPSILON};
pub use sigma::{cov_glrt_statistic, project_mu, sample_covariance, CovGlrtConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::std_normal_cdf;
use crate::ztransform::{ScoreMatrix, ZTransform};

/// Identifies a combining rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Glrt,
    Stouffer,
    Fisher,
    Bonferroni,
    Simes,
    Alr,
    Csi,
    GlrtCov,
}

impl RuleKind {
    pub const ALL: [RuleKind; 8] = [
        RuleKind::Glrt,
        RuleKind::Stouffer,
        RuleKind::Fisher,
        RuleKind::Bonferroni,
        RuleKind::Simes,
        RuleKind::Alr,
        RuleKind::Csi,
        RuleKind::GlrtCov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Glrt => "glrt",
            RuleKind::Stouffer => "stouffer",
            RuleKind::Fisher => "fisher",
            RuleKind::Bonferroni => "bonferroni",
            RuleKind::Simes => "simes",
            RuleKind::Alr => "alr",
            RuleKind::Csi => "csi",
            RuleKind::GlrtCov => "glrt-cov",
        }
    }
}

impl std::str::FromStr for RuleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RuleKind::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = RuleKind::ALL.iter().map(|r| r.name()).collect();
                Error::InvalidArgument(format!("unknown rule `{s}`; valid rules: {valid:?}"))
            })
    }
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One combined statistic; higher means more inlier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedStatistic {
    pub value: f64,
    pub rule: RuleKind,
}

pub(crate) fn check_finite_vector(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput("combiner input vector is empty"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what} contains non-finite value {v}"
        )));
    }
    Ok(())
}

/// Stouffer's statistic `t = (1/sqrt(m)) * sum z_l`.
pub fn stouffer_statistic(z: &[f64]) -> Result<CombinedStatistic> {
    check_finite_vector(z, "z-vector")?;
    let value = z.iter().sum::<f64>() / (z.len() as f64).sqrt();
    Ok(CombinedStatistic {
        value,
        rule: RuleKind::Stouffer,
    })
}

/// Fisher's statistic `t = sum ln q_l` over inlier p-values in (0, 1].
///
/// A q of exactly 0 is a domain error; upstream clamping guarantees the
/// empirical pipeline never produces one.
pub fn fisher_statistic(q: &[f64]) -> Result<CombinedStatistic> {
    check_finite_vector(q, "p-vector")?;
    let mut value = 0.0;
    for &ql in q {
        if ql <= 0.0 || ql > 1.0 {
            return Err(Error::Domain(format!(
                "fisher requires p-values in (0, 1], got {ql}"
            )));
        }
        value += ql.ln();
    }
    Ok(CombinedStatistic {
        value,
        rule: RuleKind::Fisher,
    })
}

/// Bonferroni's statistic `t = min q_l`.
pub fn bonferroni_statistic(q: &[f64]) -> Result<CombinedStatistic> {
    check_finite_vector(q, "p-vector")?;
    check_unit_range(q)?;
    let value = q.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CombinedStatistic {
        value,
        rule: RuleKind::Bonferroni,
    })
}

/// Simes / Benjamini-Hochberg statistic `t = min_l q_(l) / l` over the
/// ascending order statistics. Ties are harmless: the value depends only on
/// the multiset.
pub fn simes_statistic(q: &[f64]) -> Result<CombinedStatistic> {
    check_finite_vector(q, "p-vector")?;
    check_unit_range(q)?;
    let mut sorted = q.to_vec();
    sorted.sort_by(f64::total_cmp);
    let value = sorted
        .iter()
        .enumerate()
        .map(|(i, &ql)| ql / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(CombinedStatistic {
        value,
        rule: RuleKind::Simes,
    })
}

fn check_unit_range(q: &[f64]) -> Result<()> {
    for &ql in q {
        if !(0.0..=1.0).contains(&ql) {
            return Err(Error::Domain(format!(
                "p-values must lie in [0, 1], got {ql}"
            )));
        }
    }
    Ok(())
}

/// A configured combining rule, applicable to z-vectors or p-vectors.
///
/// The CSI heuristic is not representable here because it consumes raw
/// grouped score columns rather than a z- or p-vector; see
/// [`csi_heuristic_statistic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Combiner {
    Glrt(GlrtConfig),
    Stouffer,
    Fisher,
    Bonferroni,
    Simes,
    Alr,
    GlrtCov(CovGlrtConfig),
}

impl Combiner {
    pub fn kind(&self) -> RuleKind {
        match self {
            Combiner::Glrt(_) => RuleKind::Glrt,
            Combiner::Stouffer => RuleKind::Stouffer,
            Combiner::Fisher => RuleKind::Fisher,
            Combiner::Bonferroni => RuleKind::Bonferroni,
            Combiner::Simes => RuleKind::Simes,
            Combiner::Alr => RuleKind::Alr,
            Combiner::GlrtCov(_) => RuleKind::GlrtCov,
        }
    }

    /// Apply to a z-vector. p-value rules recover q_l = Φ(z_l) first.
    pub fn apply_z(&self, z: &[f64]) -> Result<CombinedStatistic> {
        match self {
            Combiner::Glrt(cfg) => glrt_statistic(z, cfg),
            Combiner::Stouffer => stouffer_statistic(z),
            Combiner::GlrtCov(cfg) => cov_glrt_statistic(z, cfg),
            Combiner::Fisher | Combiner::Bonferroni | Combiner::Simes | Combiner::Alr => {
                check_finite_vector(z, "z-vector")?;
                let q = z
                    .iter()
                    .map(|&zl| std_normal_cdf(zl).map(|p| p.get()))
                    .collect::<Result<Vec<f64>>>()?;
                self.apply_p(&q)
            }
        }
    }

    /// Apply to a vector of inlier p-values. z-value rules map through
    /// `Φ⁻¹` first, so p must already be clamped away from {0, 1}.
    pub fn apply_p(&self, q: &[f64]) -> Result<CombinedStatistic> {
        match self {
            Combiner::Fisher => fisher_statistic(q),
            Combiner::Bonferroni => bonferroni_statistic(q),
            Combiner::Simes => simes_statistic(q),
            Combiner::Alr => alr_statistic(q),
            Combiner::Glrt(_) | Combiner::Stouffer | Combiner::GlrtCov(_) => {
                check_finite_vector(q, "p-vector")?;
                let z = q
                    .iter()
                    .map(|&ql| {
                        crate::numerics::std_normal_quantile(crate::numerics::Probability::new(
                            ql,
                        )?)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                self.apply_z(&z)
            }
        }
    }

    /// Canonical pipeline entry: transform a raw score matrix and combine
    /// each row. z-value rules use the z-matrix, p-value rules use the
    /// clamped p-matrix directly.
    pub fn apply_transformed(
        &self,
        transform: &ZTransform,
        test: &ScoreMatrix,
    ) -> Result<Vec<CombinedStatistic>> {
        match self {
            Combiner::Glrt(_) | Combiner::Stouffer | Combiner::GlrtCov(_) => {
                let z = transform.transform_matrix(test)?;
                z.rows().map(|row| self.apply_z(row)).collect()
            }
            Combiner::Fisher | Combiner::Bonferroni | Combiner::Simes | Combiner::Alr => {
                let q = transform.p_matrix(test)?;
                q.iter().map(|row| self.apply_p(row)).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stouffer_examples() {
        assert_eq!(stouffer_statistic(&[1.0, -1.0]).unwrap().value, 0.0);
        assert_eq!(stouffer_statistic(&[1.0, 1.0, 1.0, 1.0]).unwrap().value, 2.0);
        assert_eq!(stouffer_statistic(&[0.43073]).unwrap().value, 0.43073);
        assert!(stouffer_statistic(&[]).is_err());
    }

    #[test]
    fn fisher_examples() {
        let t = fisher_statistic(&[0.5, 0.5]).unwrap().value;
        assert!((t - (-1.386_294_361_119_890_6)).abs() < 1e-12);
        assert_eq!(fisher_statistic(&[1.0]).unwrap().value, 0.0);
        let t = fisher_statistic(&[0.1, 0.9]).unwrap().value;
        assert!((t - 0.09_f64.ln()).abs() < 1e-12);
        assert!(matches!(fisher_statistic(&[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni_statistic(&[0.1, 0.5]).unwrap().value, 0.1);
        assert_eq!(bonferroni_statistic(&[0.7]).unwrap().value, 0.7);
        assert_eq!(bonferroni_statistic(&[0.3, 0.3]).unwrap().value, 0.3);
        assert!(bonferroni_statistic(&[]).is_err());
    }

    #[test]
    fn simes_examples() {
        let t = simes_statistic(&[0.04, 0.06]).unwrap().value;
        assert!((t - 0.03).abs() < 1e-15);
        assert_eq!(simes_statistic(&[0.5]).unwrap().value, 0.5);
        let t = simes_statistic(&[0.9, 0.9, 0.9]).unwrap().value;
        assert!((t - 0.3).abs() < 1e-15);
    }

    #[test]
    fn simes_equals_bonferroni_for_m1() {
        for q in [0.01, 0.2, 0.5, 0.99] {
            assert_eq!(
                simes_statistic(&[q]).unwrap().value,
                bonferroni_statistic(&[q]).unwrap().value
            );
        }
    }

    #[test]
    fn rule_kind_roundtrip() {
        for kind in RuleKind::ALL {
            assert_eq!(kind.name().parse::<RuleKind>().unwrap(), kind);
        }
        assert!("nope".parse::<RuleKind>().is_err());
    }

    #[test]
    fn apply_z_matches_direct_calls() {
        let z = [0.3, -1.2, 0.8];
        let q: Vec<f64> = z
            .iter()
            .map(|&v| std_normal_cdf(v).unwrap().get())
            .collect();
        assert_eq!(
            Combiner::Stouffer.apply_z(&z).unwrap().value,
            stouffer_statistic(&z).unwrap().value
        );
        assert_eq!(
            Combiner::Fisher.apply_z(&z).unwrap().value,
            fisher_statistic(&q).unwrap().value
        );
        assert_eq!(
            Combiner::Simes.apply_z(&z).unwrap().value,
            simes_statistic(&q).unwrap().value
        );
    }
}
