//! The CSI heuristic combiner, reimplemented over ingested score matrices.
//!
//! Base scores arrive in column triples (cos_j, norm_j, shift_j), one per
//! distribution shift j, and fuse as
//!
//! ```text
//! t = Σ_j [ λ_con_j · s_cos,j · s_norm,j  +  λ_shift_j · s_shift,j ]
//! ```
//!
//! with weights fitted as reciprocals of the training means of the norm and
//! shift columns.

use serde::{Deserialize, Serialize};

use crate::combiners::{CombinedStatistic, RuleKind};
use crate::error::{Error, Result};
use crate::ztransform::ScoreMatrix;

/// The column triple for one distribution shift.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsiGroup {
    pub cos: String,
    pub norm: String,
    pub shift: String,
}

/// Which columns form the (cos, norm, shift) triples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsiGrouping {
    pub groups: Vec<CsiGroup>,
}

impl CsiGrouping {
    /// Every listed column must appear exactly once across all triples.
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::EmptyInput("csi grouping has no shift triples"));
        }
        let mut seen: Vec<&str> = Vec::new();
        for g in &self.groups {
            for name in [&g.cos, &g.norm, &g.shift] {
                if seen.contains(&name.as_str()) {
                    return Err(Error::InvalidArgument(format!(
                        "column `{name}` appears more than once in the csi grouping"
                    )));
                }
                seen.push(name);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GroupWeights {
    group: CsiGroup,
    lambda_con: f64,
    lambda_shift: f64,
}

/// Fitted per-shift weights plus the grouping they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiWeights {
    groups: Vec<GroupWeights>,
}

impl CsiWeights {
    /// Construct from explicit weights (one `(lambda_con, lambda_shift)`
    /// pair per triple, in grouping order).
    pub fn from_weights(grouping: &CsiGrouping, weights: &[(f64, f64)]) -> Result<Self> {
        grouping.validate()?;
        if weights.len() != grouping.groups.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weight pairs for {} groups",
                weights.len(),
                grouping.groups.len()
            )));
        }
        let groups = grouping
            .groups
            .iter()
            .zip(weights)
            .map(|(g, &(lambda_con, lambda_shift))| {
                if !(lambda_con > 0.0 && lambda_con.is_finite())
                    || !(lambda_shift > 0.0 && lambda_shift.is_finite())
                {
                    return Err(Error::InvalidArgument(format!(
                        "csi weights must be positive and finite, got ({lambda_con}, {lambda_shift})"
                    )));
                }
                Ok(GroupWeights {
                    group: g.clone(),
                    lambda_con,
                    lambda_shift,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { groups })
    }

    pub fn lambdas(&self) -> Vec<(f64, f64)> {
        self.groups
            .iter()
            .map(|g| (g.lambda_con, g.lambda_shift))
            .collect()
    }

    pub fn grouping(&self) -> CsiGrouping {
        CsiGrouping {
            groups: self.groups.iter().map(|g| g.group.clone()).collect(),
        }
    }
}

fn column_mean(train: &ScoreMatrix, name: &str) -> Result<f64> {
    let idx = train.column_index(name)?;
    if train.nrows() == 0 {
        return Err(Error::EmptyInput("cannot fit csi weights on an empty matrix"));
    }
    Ok(train.rows().map(|r| r[idx]).sum::<f64>() / train.nrows() as f64)
}

/// Fit `λ_con_j = 1 / mean(norm_j)` and `λ_shift_j = 1 / mean(shift_j)` on
/// training data. Nonpositive training means are rejected: the heuristic
/// assumes norm and shift scores are positive magnitudes.
pub fn fit_csi_weights(train: &ScoreMatrix, grouping: &CsiGrouping) -> Result<CsiWeights> {
    grouping.validate()?;
    let mut groups = Vec::with_capacity(grouping.groups.len());
    for g in &grouping.groups {
        // cos columns carry no weight but must exist for the statistic.
        train.column_index(&g.cos)?;
        let norm_mean = column_mean(train, &g.norm)?;
        let shift_mean = column_mean(train, &g.shift)?;
        if norm_mean <= 0.0 {
            return Err(Error::Domain(format!(
                "training mean of `{}` is {norm_mean}; csi weights need a positive mean",
                g.norm
            )));
        }
        if shift_mean <= 0.0 {
            return Err(Error::Domain(format!(
                "training mean of `{}` is {shift_mean}; csi weights need a positive mean",
                g.shift
            )));
        }
        groups.push(GroupWeights {
            group: g.clone(),
            lambda_con: 1.0 / norm_mean,
            lambda_shift: 1.0 / shift_mean,
        });
    }
    Ok(CsiWeights { groups })
}

/// Index-resolved weights for batch application to one matrix schema.
#[derive(Debug, Clone)]
pub struct ResolvedCsi {
    terms: Vec<(usize, usize, usize, f64, f64)>, // (cos, norm, shift, l_con, l_shift)
    rule_width: usize,
}

impl ResolvedCsi {
    pub fn new(weights: &CsiWeights, schema: &ScoreMatrix) -> Result<Self> {
        let terms = weights
            .groups
            .iter()
            .map(|g| {
                Ok((
                    schema.column_index(&g.group.cos)?,
                    schema.column_index(&g.group.norm)?,
                    schema.column_index(&g.group.shift)?,
                    g.lambda_con,
                    g.lambda_shift,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            terms,
            rule_width: schema.ncols(),
        })
    }

    pub fn statistic(&self, row: &[f64]) -> Result<CombinedStatistic> {
        if row.len() != self.rule_width {
            return Err(Error::InvalidArgument(format!(
                "row has {} values, schema expects {}",
                row.len(),
                self.rule_width
            )));
        }
        let value = self
            .terms
            .iter()
            .map(|&(c, n, s, lc, ls)| lc * row[c] * row[n] + ls * row[s])
            .sum();
        Ok(CombinedStatistic {
            value,
            rule: RuleKind::Csi,
        })
    }
}

/// Evaluate the CSI heuristic on one row of a score matrix.
pub fn csi_heuristic_statistic(
    scores: &ScoreMatrix,
    row: usize,
    weights: &CsiWeights,
) -> Result<CombinedStatistic> {
    ResolvedCsi::new(weights, scores)?.statistic(scores.row(row))
}
