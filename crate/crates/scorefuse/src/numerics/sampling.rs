//! Seeded Gaussian sampling.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Draw one sample from N(mean, L Lᵀ) as `mean + L w` with `w` i.i.d.
/// standard normal, where `chol_lower` is the lower-triangular factor L in
/// row-major order (m x m). A zero factor is allowed and returns `mean`.
pub fn sample_gaussian_vector<R: Rng>(
    mean: &[f64],
    chol_lower: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let m = mean.len();
    if chol_lower.len() != m * m {
        return Err(Error::InvalidArgument(format!(
            "cholesky factor has {} entries, expected {}x{}",
            chol_lower.len(),
            m,
            m
        )));
    }
    if mean.iter().any(|v| !v.is_finite()) || chol_lower.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "mean and cholesky factor must be finite".into(),
        ));
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if chol_lower[i * m + j] != 0.0 {
                return Err(Error::InvalidArgument(
                    "cholesky factor must be lower triangular".into(),
                ));
            }
        }
    }

    let w: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = mean.to_vec();
    for i in 0..m {
        let row = &chol_lower[i * m..i * m + i + 1];
        out[i] += row.iter().zip(&w).map(|(l, wi)| l * wi).sum::<f64>();
    }
    Ok(out)
}
