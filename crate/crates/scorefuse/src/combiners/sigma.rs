//! GLRT for the negative-means problem under a shared covariance Σ.
//!
//! The constrained maximum-likelihood mean is no longer a clamp: it is the
//! box-constrained quadratic program
//!
//! ```text
//! μ*(z) = argmin over {μ : μ_l ≤ -ε ∀l} of (z - μ)ᵀ Σ⁻¹ (z - μ)
//! ```
//!
//! solved here by a primal active-set method specialized to the upper-bound
//! box: start from the clamped point min{z_l, -ε}, alternate solving the
//! equality-constrained system on the free set with clamping blockers and
//! releasing constraints with negative multipliers, until the KKT residual
//! is at or below the solver tolerance. The statistic is then
//! `ln GLR(z; Σ) = (½ μ*(z) - z)ᵀ Σ⁻¹ μ*(z)`, which reduces to the plain
//! GLRT when Σ = I.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::combiners::{check_finite_vector, CombinedStatistic, RuleKind};
use crate::error::{Error, Result};
use crate::ztransform::ZMatrix;

/// Configuration of the covariance-aware GLRT: margin ε, a symmetric
/// positive-definite Σ, and the KKT tolerance for the projection solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovGlrtConfigRepr", into = "CovGlrtConfigRepr")]
pub struct CovGlrtConfig {
    epsilon: f64,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    solver_tol: f64,
}

#[derive(Serialize, Deserialize)]
struct CovGlrtConfigRepr {
    epsilon: f64,
    sigma: Vec<Vec<f64>>,
    solver_tol: f64,
}

impl From<CovGlrtConfig> for CovGlrtConfigRepr {
    fn from(cfg: CovGlrtConfig) -> Self {
        let m = cfg.sigma.nrows();
        let sigma = (0..m)
            .map(|i| (0..m).map(|j| cfg.sigma[(i, j)]).collect())
            .collect();
        Self {
            epsilon: cfg.epsilon,
            sigma,
            solver_tol: cfg.solver_tol,
        }
    }
}

impl TryFrom<CovGlrtConfigRepr> for CovGlrtConfig {
    type Error = Error;
    fn try_from(repr: CovGlrtConfigRepr) -> Result<Self> {
        let m = repr.sigma.len();
        if repr.sigma.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidArgument("sigma must be square".into()));
        }
        let sigma = DMatrix::from_fn(m, m, |i, j| repr.sigma[i][j]);
        CovGlrtConfig::new(repr.epsilon, sigma, repr.solver_tol)
    }
}

impl CovGlrtConfig {
    pub const DEFAULT_SOLVER_TOL: f64 = 1e-8;

    pub fn new(epsilon: f64, sigma: DMatrix<f64>, solver_tol: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        if !(solver_tol > 0.0 && solver_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must be positive, got {solver_tol}"
            )));
        }
        let m = sigma.nrows();
        if m == 0 || sigma.ncols() != m {
            return Err(Error::InvalidArgument(format!(
                "sigma must be square and non-empty, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sigma must be finite".into()));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "sigma is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = sigma.clone().cholesky().ok_or_else(|| {
            Error::InvalidArgument("sigma is not positive definite".into())
        })?;
        let sigma_inv = chol.inverse();
        Ok(Self {
            epsilon,
            sigma,
            sigma_inv,
            solver_tol,
        })
    }

    /// Identity covariance of dimension m (reduces the statistic to the
    /// plain GLRT).
    pub fn identity(epsilon: f64, m: usize) -> Result<Self> {
        Self::new(epsilon, DMatrix::identity(m, m), Self::DEFAULT_SOLVER_TOL)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn solver_tol(&self) -> f64 {
        self.solver_tol
    }
}

/// KKT residual of a candidate solution: max of stationarity on the free
/// set, dual feasibility on the active set, and primal feasibility.
fn kkt_residual(z: &DVector<f64>, mu: &DVector<f64>, cfg: &CovGlrtConfig) -> f64 {
    let grad_half = &cfg.sigma_inv * (z - mu); // = -∇f / 2
    let mut residual: f64 = 0.0;
    for l in 0..z.len() {
        residual = residual.max(mu[l] + cfg.epsilon); // primal: mu_l <= -eps
        if mu[l] >= -cfg.epsilon - 1e-14 {
            // active: multiplier 2 [Σ⁻¹ (z - μ)]_l must be >= 0
            residual = residual.max(-2.0 * grad_half[l]);
        } else {
            residual = residual.max(grad_half[l].abs());
        }
    }
    residual
}

/// Solve the equality-constrained subproblem: μ fixed at -ε on the active
/// set, stationary on the free set.
fn solve_on_active_set(
    z: &DVector<f64>,
    active: &[bool],
    cfg: &CovGlrtConfig,
) -> Result<DVector<f64>> {
    let m = z.len();
    let free: Vec<usize> = (0..m).filter(|&l| !active[l]).collect();
    let mut mu = DVector::from_element(m, -cfg.epsilon);
    if free.is_empty() {
        return Ok(mu);
    }
    // With d = z - μ: A_FF d_F = -A_FW d_W where d_W = z_W + ε.
    let a = &cfg.sigma_inv;
    let mut rhs = DVector::zeros(free.len());
    for (fi, &l) in free.iter().enumerate() {
        let mut s = 0.0;
        for w in 0..m {
            if active[w] {
                s += a[(l, w)] * (z[w] + cfg.epsilon);
            }
        }
        rhs[fi] = -s;
    }
    let a_ff = DMatrix::from_fn(free.len(), free.len(), |i, j| a[(free[i], free[j])]);
    let chol = a_ff.cholesky().ok_or(Error::Numeric {
        what: "active-set subproblem",
        residual: f64::NAN,
    })?;
    let d_f = chol.solve(&rhs);
    for (fi, &l) in free.iter().enumerate() {
        mu[l] = z[l] - d_f[fi];
    }
    Ok(mu)
}

/// Project z onto the feasible set {μ : μ_l ≤ -ε} in the Σ⁻¹ metric.
///
/// For Σ = I this is exactly the componentwise clamp min{z_l, -ε}. Fails
/// with a numeric error carrying the residual if the active-set loop does
/// not reach the KKT tolerance within 10·m iterations (does not happen for
/// positive-definite Σ; the cap guards against pathological conditioning).
pub fn project_mu(z: &[f64], cfg: &CovGlrtConfig) -> Result<Vec<f64>> {
    check_finite_vector(z, "z-vector")?;
    let m = cfg.m();
    if z.len() != m {
        return Err(Error::InvalidArgument(format!(
            "z-vector has length {}, config expects {m}",
            z.len()
        )));
    }
    let z = DVector::from_column_slice(z);
    let eps = cfg.epsilon;

    // Feasible start: the clamp, with its natural active set.
    let mut mu = z.map(|v| v.min(-eps));
    let mut active: Vec<bool> = (0..m).map(|l| z[l] >= -eps).collect();

    for _ in 0..(10 * m).max(20) {
        let cand = solve_on_active_set(&z, &active, cfg)?;
        // Blocking constraints among free coordinates.
        let mut alpha = 1.0_f64;
        let mut blockers: Vec<usize> = Vec::new();
        for l in 0..m {
            if !active[l] && cand[l] > -eps {
                let step = cand[l] - mu[l];
                if step > 0.0 {
                    let ratio = (-eps - mu[l]) / step;
                    if ratio < alpha - 1e-15 {
                        alpha = ratio;
                        blockers.clear();
                        blockers.push(l);
                    } else if (ratio - alpha).abs() <= 1e-15 {
                        blockers.push(l);
                    }
                }
            }
        }
        if blockers.is_empty() {
            mu = cand;
            // Candidate solves the subproblem; release the most negative
            // multiplier if there is one, otherwise we are optimal.
            let grad_half = &cfg.sigma_inv * (&z - &mu);
            let mut worst: Option<(usize, f64)> = None;
            for l in 0..m {
                if active[l] {
                    let lambda = 2.0 * grad_half[l];
                    if lambda < worst.map_or(0.0, |(_, w)| w) {
                        worst = Some((l, lambda));
                    }
                }
            }
            match worst {
                Some((l, lambda)) if lambda < -cfg.solver_tol => active[l] = false,
                _ => {
                    let residual = kkt_residual(&z, &mu, cfg);
                    if residual <= cfg.solver_tol {
                        return Ok(mu.iter().copied().collect());
                    }
                    return Err(Error::Numeric {
                        what: "project_mu",
                        residual,
                    });
                }
            }
        } else {
            mu = &mu + (cand - &mu) * alpha;
            for l in blockers {
                mu[l] = -eps;
                active[l] = true;
            }
        }
    }
    Err(Error::Numeric {
        what: "project_mu",
        residual: kkt_residual(&z, &mu, cfg),
    })
}

/// `ln GLR(z; Σ) = (½ μ*(z) - z)ᵀ Σ⁻¹ μ*(z)` with μ* from [`project_mu`].
/// Higher means more inlier, matching the Σ = I statistic.
pub fn cov_glrt_statistic(z: &[f64], cfg: &CovGlrtConfig) -> Result<CombinedStatistic> {
    let mu = project_mu(z, cfg)?;
    let mu = DVector::from_vec(mu);
    let zv = DVector::from_column_slice(z);
    let value = (mu.scale(0.5) - zv).dot(&(&cfg.sigma_inv * &mu));
    Ok(CombinedStatistic {
        value,
        rule: RuleKind::GlrtCov,
    })
}

/// Inlier z-covariance with a ridge: `Σ̂ = (1/(n-1)) Σ_i z_i z_iᵀ + σ I`.
///
/// No mean is subtracted: under the inlier hypothesis the z-values are
/// centered by construction. The ridge keeps Σ̂ full rank (the smallest
/// eigenvalue is at least σ).
pub fn sample_covariance(zmatrix: &ZMatrix, sigma_ridge: f64) -> Result<DMatrix<f64>> {
    let n = zmatrix.nrows();
    let m = zmatrix.ncols();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    if !sigma_ridge.is_finite() || sigma_ridge < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ridge must be finite and >= 0, got {sigma_ridge}"
        )));
    }
    let mut acc: DMatrix<f64> = DMatrix::zeros(m, m);
    for row in zmatrix.rows() {
        for i in 0..m {
            for j in i..m {
                acc[(i, j)] += row[i] * row[j];
            }
        }
    }
    let scale = 1.0 / (n as f64 - 1.0);
    let mut out: DMatrix<f64> = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = acc[(i, j)] * scale;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
        out[(i, i)] += sigma_ridge;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiners::{glrt_statistic, GlrtConfig};
    use rand::Rng;

    fn ar1(m: usize, rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(m, m, |i, j| rho.powi((i as i32 - j as i32).abs()))
    }

    #[test]
    fn identity_sigma_reduces_to_clamp() {
        let cfg = CovGlrtConfig::identity(0.25, 3).unwrap();
        let z = [1.0, -0.5, -2.0];
        let mu = project_mu(&z, &cfg).unwrap();
        assert_eq!(mu, vec![-0.25, -0.5, -2.0]);
    }

    #[test]
    fn feasible_point_is_fixed() {
        let cfg = CovGlrtConfig::new(0.25, ar1(3, 0.6), 1e-8).unwrap();
        let z = [-0.3, -1.0, -2.0];
        let mu = project_mu(&z, &cfg).unwrap();
        for (a, b) in mu.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
        // And the statistic is -½ zᵀ Σ⁻¹ z there.
        let t = cov_glrt_statistic(&z, &cfg).unwrap().value;
        let zv = DVector::from_column_slice(&z);
        let want = -0.5 * zv.dot(&(cfg.sigma_inv.clone() * &zv));
        assert!((t - want).abs() < 1e-12);
    }

    #[test]
    fn correlated_m2_matches_exact_solution() {
        // Grid search over [-4, -0.25]² at step 1e-3 lands on (-0.25, -1.625);
        // the KKT system gives that point exactly.
        let cfg = CovGlrtConfig::new(0.25, ar1(2, 0.5), 1e-10).unwrap();
        let mu = project_mu(&[1.0, -1.0], &cfg).unwrap();
        assert!((mu[0] - (-0.25)).abs() < 1e-12);
        assert!((mu[1] - (-1.625)).abs() < 1e-12);
        let t = cov_glrt_statistic(&[1.0, -1.0], &cfg).unwrap().value;
        assert!((t - (-1.21875)).abs() < 1e-12);
    }

    #[test]
    fn identity_agrees_with_plain_glrt_on_random_inputs() {
        let mut rng = crate::numerics::RngStream::new(77, 0).rng();
        for m in [1usize, 2, 5, 12] {
            let cov = CovGlrtConfig::identity(0.25, m).unwrap();
            let plain = GlrtConfig::new(0.25, m).unwrap();
            for _ in 0..200 {
                let z: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
                let a = cov_glrt_statistic(&z, &cov).unwrap().value;
                let b = glrt_statistic(&z, &plain).unwrap().value;
                assert!((a - b).abs() < 1e-9, "m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kkt_residual_small_on_random_correlated_inputs() {
        let mut rng = crate::numerics::RngStream::new(78, 0).rng();
        let cfg = CovGlrtConfig::new(0.25, ar1(6, 0.7), 1e-8).unwrap();
        for _ in 0..300 {
            let z: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
            let mu = project_mu(&z, &cfg).unwrap();
            let r = kkt_residual(
                &DVector::from_column_slice(&z),
                &DVector::from_vec(mu),
                &cfg,
            );
            assert!(r <= 1e-8, "residual {r}");
        }
    }

    #[test]
    fn sample_covariance_small_cases() {
        let z = ZMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        let s = sample_covariance(&z, 1e-6).unwrap();
        assert!((s[(0, 0)] - (2.0 + 1e-6)).abs() < 1e-15);
        assert_eq!(s[(0, 1)], 0.0);
        assert!((s[(1, 1)] - 1e-6).abs() < 1e-20);

        let zeros = ZMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let s = sample_covariance(&zeros, 1e-6).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1e-6 } else { 0.0 };
                assert_eq!(s[(i, j)], want);
            }
        }
    }

    #[test]
    fn sample_covariance_needs_two_rows() {
        let z = ZMatrix::new(vec!["a".into()], vec![vec![1.0]]).unwrap();
        assert!(matches!(
            sample_covariance(&z, 1e-6),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn config_rejects_asymmetric_and_indefinite() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(CovGlrtConfig::new(0.25, asym, 1e-8).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CovGlrtConfig::new(0.25, indef, 1e-8).is_err());
    }
}
