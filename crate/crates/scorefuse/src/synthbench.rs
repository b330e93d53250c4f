//! Synthetic negative-means benchmarks and Monte Carlo harnesses.
//!
//! Scenarios draw z-matrices directly from the negative-means model:
//! N(0, C) under the null and N(μ, C) under the alternative, with a fixed
//! seed so that every run (and every worker layout) produces byte-identical
//! matrices. All combiners in a sweep see the same samples, which makes the
//! comparisons paired.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::combiners::Combiner;
use crate::conformal::{conformal_p, find_threshold, GuaranteeConfig, ValidationBank};
use crate::error::{Error, Result};
use crate::evaluation::{auroc, dr_at_far, LabeledStatistics};
use crate::numerics::{sample_gaussian_vector, std_normal_cdf, Probability, RngStream};
use crate::ztransform::ZMatrix;

/// Stream indices reserved per scenario seed.
const STREAM_H0: u64 = 0;
const STREAM_H1: u64 = 1;
const STREAM_BOOTSTRAP: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Every coordinate of μ satisfies μ_l ≤ -ε: the model the GLRT assumes.
    Dense,
    /// Only some coordinates are shifted; deliberately violates the
    /// negative-means constraint to probe the sparse-alternative regime.
    Sparse,
}

/// One synthetic negative-means scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmScenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub m: usize,
    /// Mean under the alternative (length m).
    pub mu: Vec<f64>,
    /// Optional m x m correlation/covariance; identity when absent.
    pub correlation: Option<Vec<Vec<f64>>>,
    pub epsilon: f64,
    pub n_h0: usize,
    pub n_h1: usize,
    pub seed: u64,
}

impl NmScenario {
    pub fn dense(name: &str, m: usize, shift: f64, epsilon: f64, n: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            kind: ScenarioKind::Dense,
            m,
            mu: vec![shift; m],
            correlation: None,
            epsilon,
            n_h0: n,
            n_h1: n,
            seed,
        }
    }

    /// k of m coordinates shifted, the rest left at zero.
    pub fn sparse(
        name: &str,
        m: usize,
        k: usize,
        shift: f64,
        epsilon: f64,
        n: usize,
        seed: u64,
    ) -> Self {
        let mut mu = vec![0.0; m];
        for slot in mu.iter_mut().take(k) {
            *slot = shift;
        }
        Self {
            name: name.to_string(),
            kind: ScenarioKind::Sparse,
            m,
            mu,
            correlation: None,
            epsilon,
            n_h0: n,
            n_h1: n,
            seed,
        }
    }

    /// Replace the correlation with an AR(1) matrix `C_ij = rho^|i-j|`.
    pub fn with_ar1(mut self, rho: f64) -> Self {
        let m = self.m;
        self.correlation = Some(
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| rho.powi((i as i32 - j as i32).abs()))
                        .collect()
                })
                .collect(),
        );
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("scenario dimension must be >= 1".into()));
        }
        if self.mu.len() != self.m {
            return Err(Error::InvalidArgument(format!(
                "mu has length {}, expected {}",
                self.mu.len(),
                self.m
            )));
        }
        if self.mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("mu must be finite".into()));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::InvalidArgument("epsilon must be finite and >= 0".into()));
        }
        if self.n_h0 == 0 || self.n_h1 == 0 {
            return Err(Error::InvalidArgument("sample counts must be >= 1".into()));
        }
        if self.kind == ScenarioKind::Dense {
            if let Some(&bad) = self.mu.iter().find(|&&v| v > -self.epsilon) {
                return Err(Error::InvalidArgument(format!(
                    "dense scenario requires mu_l <= -epsilon for all l, found {bad} > {}",
                    -self.epsilon
                )));
            }
        }
        if let Some(c) = &self.correlation {
            if c.len() != self.m || c.iter().any(|row| row.len() != self.m) {
                return Err(Error::InvalidArgument(format!(
                    "correlation must be {0}x{0}",
                    self.m
                )));
            }
        }
        Ok(())
    }

    fn chol_lower(&self) -> Result<Vec<f64>> {
        let m = self.m;
        match &self.correlation {
            None => {
                let mut c = vec![0.0; m * m];
                for i in 0..m {
                    c[i * m + i] = 1.0;
                }
                Ok(c)
            }
            Some(rows) => {
                let mat = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
                if mat.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("correlation must be finite".into()));
                }
                let chol = mat.cholesky().ok_or_else(|| {
                    Error::InvalidArgument(
                        "scenario correlation is not positive definite".into(),
                    )
                })?;
                let l = chol.l();
                let mut c = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..=i {
                        c[i * m + j] = l[(i, j)];
                    }
                }
                Ok(c)
            }
        }
    }

    fn column_names(&self) -> Vec<String> {
        (0..self.m).map(|j| format!("z{:02}", j)).collect()
    }
}

fn draw_matrix(
    names: Vec<String>,
    mean: &[f64],
    chol: &[f64],
    n: usize,
    stream: RngStream,
) -> Result<ZMatrix> {
    let mut rng = stream.rng();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        rows.push(sample_gaussian_vector(mean, chol, &mut rng)?);
    }
    ZMatrix::new(names, rows)
}

/// Draw the (H0, H1) z-matrices of a scenario. Deterministic in the
/// scenario seed.
pub fn generate(scn: &NmScenario) -> Result<(ZMatrix, ZMatrix)> {
    scn.validate()?;
    let chol = scn.chol_lower()?;
    let zero = vec![0.0; scn.m];
    let h0 = draw_matrix(
        scn.column_names(),
        &zero,
        &chol,
        scn.n_h0,
        RngStream::new(scn.seed, STREAM_H0),
    )?;
    let h1 = draw_matrix(
        scn.column_names(),
        &scn.mu,
        &chol,
        scn.n_h1,
        RngStream::new(scn.seed, STREAM_H1),
    )?;
    Ok((h0, h1))
}

/// One (scenario, combiner) cell of a power sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub scenario: String,
    pub rule: String,
    pub auroc: f64,
    /// Bootstrap standard error of the AUROC (200 resamples).
    pub auroc_se: f64,
    pub dr_at_far: f64,
    pub dr_se: f64,
    pub far_level: f64,
    pub degenerate_dr: bool,
}

const BOOTSTRAP_RESAMPLES: usize = 200;

fn bootstrap_se<F: Fn(&[f64], &[f64]) -> f64>(
    inl: &[f64],
    ood: &[f64],
    stream: RngStream,
    metric: F,
) -> f64 {
    use rand::Rng;
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut ri = vec![0.0; inl.len()];
    let mut ro = vec![0.0; ood.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for slot in ri.iter_mut() {
            *slot = inl[rng.random_range(0..inl.len())];
        }
        for slot in ro.iter_mut() {
            *slot = ood[rng.random_range(0..ood.len())];
        }
        values.push(metric(&ri, &ro));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    var.sqrt()
}

/// Evaluate every combiner on every scenario with shared samples per
/// scenario (paired comparisons). `far_level` is the budget used for the
/// DR column.
pub fn power_sweep(
    scenarios: &[NmScenario],
    combiners: &[Combiner],
    far_level: Probability,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::with_capacity(scenarios.len() * combiners.len());
    for scn in scenarios {
        let (h0, h1) = generate(scn)?;
        for (ci, combiner) in combiners.iter().enumerate() {
            let stat = |m: &ZMatrix| -> Result<Vec<f64>> {
                m.rows()
                    .map(|z| combiner.apply_z(z).map(|s| s.value))
                    .collect()
            };
            let inl = stat(&h0)?;
            let ood = stat(&h1)?;
            let d = LabeledStatistics::new(inl.clone(), ood.clone())?;
            let a = auroc(&d)?.get();
            let dr = dr_at_far(&d, far_level)?;
            // Shared resample indices per scenario would pair the SEs too;
            // a per-cell substream keeps cells independent of sweep order.
            let boot = RngStream::new(scn.seed, STREAM_BOOTSTRAP).substream(ci as u64);
            let auroc_se = bootstrap_se(&inl, &ood, boot.substream(0), |a, b| {
                auroc(&LabeledStatistics::new(a.to_vec(), b.to_vec()).unwrap())
                    .map(|p| p.get())
                    .unwrap_or(f64::NAN)
            });
            let dr_se = bootstrap_se(&inl, &ood, boot.substream(1), |a, b| {
                dr_at_far(
                    &LabeledStatistics::new(a.to_vec(), b.to_vec()).unwrap(),
                    far_level,
                )
                .map(|r| r.dr)
                .unwrap_or(f64::NAN)
            });
            cells.push(SweepCell {
                scenario: scn.name.clone(),
                rule: combiner.kind().name().to_string(),
                auroc: a,
                auroc_se,
                dr_at_far: dr.dr,
                dr_se,
                far_level: far_level.get(),
                degenerate_dr: dr.degenerate,
            });
        }
    }
    Ok(cells)
}

/// GLRT AUROC across a grid of ε values on one scenario, with shared
/// samples (the ε comparison is paired).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweepRow {
    pub epsilon: f64,
    pub auroc: f64,
}

pub fn epsilon_sweep(scn: &NmScenario, eps_grid: &[f64]) -> Result<Vec<EpsilonSweepRow>> {
    use crate::combiners::{glrt_statistic, GlrtConfig};
    if eps_grid.is_empty() {
        return Err(Error::EmptyInput("epsilon grid is empty"));
    }
    let (h0, h1) = generate(scn)?;
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let cfg = GlrtConfig::new(eps, scn.m)?;
        let stat = |m: &ZMatrix| -> Result<Vec<f64>> {
            m.rows()
                .map(|z| glrt_statistic(z, &cfg).map(|s| s.value))
                .collect()
        };
        let d = LabeledStatistics::new(stat(&h0)?, stat(&h1)?)?;
        rows.push(EpsilonSweepRow {
            epsilon: eps,
            auroc: auroc(&d)?.get(),
        });
    }
    Ok(rows)
}

/// Outcome of a guarantee Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeOutcome {
    /// Fraction of trials whose estimated false-alarm rate exceeded α.
    pub violation_rate: f64,
    /// Mean estimated false-alarm rate across trials.
    pub mean_far: f64,
    /// The conformal level used (identical across trials; it depends only
    /// on v, α, δ).
    pub a: f64,
    pub l: usize,
    pub alpha_min: f64,
    pub degenerate: bool,
}

/// Per trial: draw a fresh size-v validation bank under H0 (standard normal
/// statistics), calibrate with the (v, α, δ) threshold, and compute the
/// realized false-alarm rate of the resulting detector. Returns the
/// fraction of trials whose realized rate exceeded α.
///
/// The realized rate is computed exactly: the rule "conformal p ≤ a"
/// rejects precisely when t falls below the l-th smallest bank statistic
/// (l = ⌊(v+1)a⌋), so under the standard-normal harness the rate is
/// Φ(t_(l)). Estimating it on fresh draws instead would add measurement
/// noise on the same scale as the Beta law's spread once v is large,
/// inflating the apparent violation rate well past δ even though the
/// detector itself honors the guarantee.
pub fn guarantee_trial(
    v: usize,
    g: &GuaranteeConfig,
    trials: usize,
    seed: u64,
) -> Result<GuaranteeOutcome> {
    use rand::Rng;
    use rand_distr::StandardNormal;

    if trials < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 trials for a meaningful rate, got {trials}"
        )));
    }
    let threshold = find_threshold(v, g)?;
    let mut violations = 0usize;
    let mut far_sum = 0.0;
    for trial in 0..trials {
        let mut bank_rng = RngStream::new(seed, trial as u64).rng();
        let bank: Vec<f64> = (0..v).map(|_| bank_rng.sample(StandardNormal)).collect();
        let bank = ValidationBank::new(bank)?;

        let far = if threshold.l == 0 {
            0.0
        } else {
            let boundary = bank.sorted()[threshold.l - 1];
            debug_assert!(conformal_p(&bank, boundary)?.get() > threshold.a);
            std_normal_cdf(boundary)?.get()
        };
        far_sum += far;
        if far > g.alpha() {
            violations += 1;
        }
    }
    Ok(GuaranteeOutcome {
        violation_rate: violations as f64 / trials as f64,
        mean_far: far_sum / trials as f64,
        a: threshold.a,
        l: threshold.l,
        alpha_min: threshold.alpha_min,
        degenerate: threshold.degenerate,
    })
}

/// The default scenario suite: dense and sparse alternatives at the
/// dimensionalities of typical score ensembles (12 and 24 columns), plus an
/// AR(1)-correlated dense case.
pub fn default_suite(seed: u64) -> Vec<NmScenario> {
    vec![
        NmScenario::dense("dense_m12", 12, -0.5, 0.25, 10_000, seed),
        NmScenario::sparse("sparse_k1_m12", 12, 1, -3.0, 0.25, 10_000, seed.wrapping_add(1)),
        NmScenario::sparse("sparse_k3_m12", 12, 3, -3.0, 0.25, 10_000, seed.wrapping_add(2)),
        NmScenario::dense("ar1_dense_m12", 12, -0.5, 0.25, 10_000, seed.wrapping_add(3))
            .with_ar1(0.5),
        NmScenario::dense("dense_m24", 24, -0.5, 0.25, 10_000, seed.wrapping_add(4)),
    ]
}
