//! Detection metrics and analyses: AUROC, detection rate at a false-alarm
//! budget, eigen-score decomposition of the GLRT, and calibrated statistic
//! curves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::combiners::{project_mu, sample_covariance, CovGlrtConfig};
use crate::error::{Error, Result};
use crate::numerics::{std_normal_quantile, Probability};
use crate::ztransform::ZMatrix;

/// Test statistics split by ground-truth label; higher = more inlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledStatistics {
    inliers: Vec<f64>,
    oods: Vec<f64>,
}

impl LabeledStatistics {
    pub fn new(inliers: Vec<f64>, oods: Vec<f64>) -> Result<Self> {
        for v in inliers.iter().chain(&oods) {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "statistics must be finite, got {v}"
                )));
            }
        }
        Ok(Self { inliers, oods })
    }

    pub fn inliers(&self) -> &[f64] {
        &self.inliers
    }

    pub fn oods(&self) -> &[f64] {
        &self.oods
    }

    fn require_both_classes(&self) -> Result<()> {
        if self.inliers.is_empty() {
            return Err(Error::EmptyInput("no inlier statistics"));
        }
        if self.oods.is_empty() {
            return Err(Error::EmptyInput("no ood statistics"));
        }
        Ok(())
    }
}

/// AUROC: the probability that a random inlier statistic exceeds a random
/// OOD statistic, ties counted half. Computed by the rank-sum identity, so
/// it also equals the trapezoidal area under the DR-versus-FAR curve.
pub fn auroc(d: &LabeledStatistics) -> Result<Probability> {
    d.require_both_classes()?;
    let n1 = d.inliers.len();
    let n0 = d.oods.len();
    let mut all: Vec<(f64, bool)> = d
        .inliers
        .iter()
        .map(|&v| (v, true))
        .chain(d.oods.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Average ranks over tie runs, accumulate the inlier rank sum.
    let mut rank_sum_inliers = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1..=j
        let inliers_in_run = all[i..j].iter().filter(|(_, is_in)| *is_in).count();
        rank_sum_inliers += avg_rank * inliers_in_run as f64;
        i = j;
    }
    let u = rank_sum_inliers - (n1 * (n1 + 1)) as f64 / 2.0;
    Probability::new((u / (n1 as f64 * n0 as f64)).clamp(0.0, 1.0))
}

/// Detection rate at a false-alarm budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrAtFar {
    /// Fraction of OOD statistics at or below the chosen threshold.
    pub dr: f64,
    /// The chosen threshold τ*; negative infinity in the degenerate case.
    pub threshold: f64,
    /// Empirical inlier false-alarm rate at τ*.
    pub achieved_far: f64,
    /// True when no candidate threshold meets FAR ≤ α; dr is then 0.
    pub degenerate: bool,
}

/// Detection rate at false-alarm budget α under the rule "reject iff
/// t ≤ τ": sweeps the sorted union of all statistics and picks the largest
/// threshold whose empirical inlier FAR stays within the budget.
pub fn dr_at_far(d: &LabeledStatistics, alpha: Probability) -> Result<DrAtFar> {
    d.require_both_classes()?;
    let alpha = alpha.get();
    if alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::Domain(format!(
            "far budget must lie in (0, 1), got {alpha}"
        )));
    }
    let mut inliers = d.inliers.clone();
    inliers.sort_unstable_by(f64::total_cmp);
    let mut oods = d.oods.clone();
    oods.sort_unstable_by(f64::total_cmp);

    let mut candidates: Vec<f64> = inliers.iter().chain(oods.iter()).copied().collect();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();

    let n1 = inliers.len() as f64;
    let mut best: Option<f64> = None;
    for &tau in candidates.iter().rev() {
        let far = inliers.partition_point(|&v| v <= tau) as f64 / n1;
        if far <= alpha {
            best = Some(tau);
            break;
        }
    }
    match best {
        Some(tau) => {
            let far = inliers.partition_point(|&v| v <= tau) as f64 / n1;
            let dr = oods.partition_point(|&v| v <= tau) as f64 / oods.len() as f64;
            Ok(DrAtFar {
                dr,
                threshold: tau,
                achieved_far: far,
                degenerate: false,
            })
        }
        None => Ok(DrAtFar {
            dr: 0.0,
            threshold: f64::NEG_INFINITY,
            achieved_far: 0.0,
            degenerate: true,
        }),
    }
}

/// DR-versus-FAR curve over the sorted union of statistics, with the (0, 0)
/// and (1, 1) endpoints. Suitable for CSV emission and trapezoidal AUROC.
pub fn roc_points(d: &LabeledStatistics) -> Result<Vec<(f64, f64)>> {
    d.require_both_classes()?;
    let mut inliers = d.inliers.clone();
    inliers.sort_unstable_by(f64::total_cmp);
    let mut oods = d.oods.clone();
    oods.sort_unstable_by(f64::total_cmp);
    let mut candidates: Vec<f64> = inliers.iter().chain(oods.iter()).copied().collect();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();

    let mut points = vec![(0.0, 0.0)];
    for &tau in &candidates {
        let far = inliers.partition_point(|&v| v <= tau) as f64 / inliers.len() as f64;
        let dr = oods.partition_point(|&v| v <= tau) as f64 / oods.len() as f64;
        points.push((far, dr));
    }
    if *points.last().unwrap() != (1.0, 1.0) {
        points.push((1.0, 1.0));
    }
    Ok(points)
}

/// Which metric defines the constrained mean μ*(z) inside the eigen-scores.
///
/// `Identity` uses the componentwise clamp (the plain-GLRT μ*), under which
/// the eigen-scores sum exactly to the GLRT statistic for any orthonormal
/// basis. `SampleCovariance` uses the Σ̂-metric projection, which is the
/// decomposition of the covariance-aware statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMetric {
    Identity,
    SampleCovariance,
}

/// One eigen direction of the inlier z-covariance with its per-sample
/// scores and AUROC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenComponent {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    pub auroc: f64,
    pub inlier_scores: Vec<f64>,
    pub ood_scores: Vec<f64>,
}

/// Eigen-score table: components sorted by nonincreasing eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenScoreTable {
    pub components: Vec<EigenComponent>,
}

impl EigenScoreTable {
    /// Sum of per-sample eigen-scores across components, inlier rows first.
    /// With the identity metric this reproduces the GLRT statistic.
    pub fn score_sums(&self) -> (Vec<f64>, Vec<f64>) {
        let n_in = self.components[0].inlier_scores.len();
        let n_ood = self.components[0].ood_scores.len();
        let mut inl = vec![0.0; n_in];
        let mut ood = vec![0.0; n_ood];
        for c in &self.components {
            for (acc, v) in inl.iter_mut().zip(&c.inlier_scores) {
                *acc += v;
            }
            for (acc, v) in ood.iter_mut().zip(&c.ood_scores) {
                *acc += v;
            }
        }
        (inl, ood)
    }
}

fn eigen_scores_for(
    z: &[f64],
    mu: &[f64],
    basis: &DMatrix<f64>,
) -> Vec<f64> {
    let m = z.len();
    let zv = DVector::from_column_slice(z);
    let muv = DVector::from_column_slice(mu);
    let a = muv.scale(0.5) - &zv; // ½μ* - z
    (0..m)
        .map(|k| {
            let vk = basis.column(k);
            a.dot(&vk) * vk.dot(&muv)
        })
        .collect()
}

/// Eigen-analysis of the GLRT: fit Σ̂ on training z-values, decompose it,
/// and score each test sample along every eigen direction via
/// `t_eig,k(z) = (½μ*(z) - z)ᵀ v_k · v_kᵀ μ*(z)`.
pub fn eigen_analysis(
    train_z: &ZMatrix,
    test_inlier_z: &ZMatrix,
    test_ood_z: &ZMatrix,
    epsilon: f64,
    sigma_ridge: f64,
    metric: ProjectionMetric,
) -> Result<EigenScoreTable> {
    let m = train_z.ncols();
    if m == 0 {
        return Err(Error::EmptyInput("eigen analysis needs at least one column"));
    }
    if train_z.nrows() < m {
        return Err(Error::TooFewSamples {
            need: m,
            got: train_z.nrows(),
        });
    }
    for other in [test_inlier_z, test_ood_z] {
        if other.column_names() != train_z.column_names() {
            return Err(Error::SchemaMismatch {
                missing: train_z
                    .column_names()
                    .iter()
                    .filter(|c| !other.column_names().contains(c))
                    .cloned()
                    .collect(),
                extra: other
                    .column_names()
                    .iter()
                    .filter(|c| !train_z.column_names().contains(c))
                    .cloned()
                    .collect(),
            });
        }
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }

    let sigma = sample_covariance(train_z, sigma_ridge)?;
    let eig = SymmetricEigen::new(sigma.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let basis = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
    if eigenvalues.iter().any(|&l| !l.is_finite()) {
        return Err(Error::Numeric {
            what: "eigen decomposition",
            residual: f64::NAN,
        });
    }

    let cov_cfg = match metric {
        ProjectionMetric::Identity => None,
        ProjectionMetric::SampleCovariance => Some(CovGlrtConfig::new(
            epsilon,
            sigma,
            CovGlrtConfig::DEFAULT_SOLVER_TOL,
        )?),
    };
    let project = |z: &[f64]| -> Result<Vec<f64>> {
        match &cov_cfg {
            None => Ok(z.iter().map(|&v| v.min(-epsilon)).collect()),
            Some(cfg) => project_mu(z, cfg),
        }
    };

    let mut per_class_scores: Vec<Vec<Vec<f64>>> = Vec::with_capacity(2); // [class][sample][k]
    for class in [test_inlier_z, test_ood_z] {
        let mut scores = Vec::with_capacity(class.nrows());
        for z in class.rows() {
            let mu = project(z)?;
            scores.push(eigen_scores_for(z, &mu, &basis));
        }
        per_class_scores.push(scores);
    }

    let mut components = Vec::with_capacity(m);
    for k in 0..m {
        let inlier_scores: Vec<f64> = per_class_scores[0].iter().map(|s| s[k]).collect();
        let ood_scores: Vec<f64> = per_class_scores[1].iter().map(|s| s[k]).collect();
        let auc = auroc(&LabeledStatistics::new(
            inlier_scores.clone(),
            ood_scores.clone(),
        )?)?;
        components.push(EigenComponent {
            eigenvalue: eigenvalues[k],
            eigenvector: basis.column(k).iter().copied().collect(),
            auroc: auc.get(),
            inlier_scores,
            ood_scores,
        });
    }
    Ok(EigenScoreTable { components })
}

/// Shift and scale a monotone scalar statistic so that its false-alarm rate
/// under a standard normal input is `far_target` at the value 0 and its
/// slope there is 1: emits `C · (t(z) - τ)` over the grid with
/// `τ = t(Φ⁻¹(far_target))` and `C = 1/t'(z₀)` (central difference).
pub fn calibrated_curve<F: Fn(f64) -> f64>(
    statistic: F,
    far_target: Probability,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "calibration grid needs at least two points".into(),
        ));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("grid must be finite".into()));
    }
    let values: Vec<f64> = grid.iter().map(|&z| statistic(z)).collect();
    for (w, zw) in values.windows(2).zip(grid.windows(2)) {
        if !(w[0].is_finite() && w[1].is_finite()) {
            return Err(Error::InvalidArgument("statistic non-finite on grid".into()));
        }
        if zw[1] <= zw[0] {
            return Err(Error::InvalidArgument(
                "grid must be strictly increasing".into(),
            ));
        }
        if w[1] < w[0] {
            return Err(Error::Domain(
                "statistic is not monotone nondecreasing on the grid".into(),
            ));
        }
    }
    let z0 = std_normal_quantile(far_target)?;
    let tau = statistic(z0);
    let h = 1e-6;
    let slope = (statistic(z0 + h) - statistic(z0 - h)) / (2.0 * h);
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::Domain(format!(
            "statistic slope at the false-alarm point is {slope}; cannot normalize"
        )));
    }
    let c = 1.0 / slope;
    Ok(grid
        .iter()
        .zip(values)
        .map(|(&z, t)| (z, c * (t - tau)))
        .collect())
}
