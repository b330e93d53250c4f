//! Independent-oracle checks: brute-force grids and pairwise counts against
//! the library's closed forms and fast paths.

mod common;

use common::{auroc_pairwise, beta_cdf_quadrature, dr_sweep_oracle};
use nalgebra::DMatrix;
use rand::Rng;
use scorefuse::combiners::{
    cov_glrt_statistic, glrt_statistic, project_mu, CovGlrtConfig, GlrtConfig,
};
use scorefuse::evaluation::{auroc, dr_at_far, LabeledStatistics};
use scorefuse::numerics::{reg_inc_beta, Probability, RngStream};

/// Exhaustive grid maximization of the constrained likelihood for m <= 2:
/// confirms the componentwise clamp is the argmax (the grid never beats it).
#[test]
fn glrt_clamp_is_grid_argmax_m1_m2() {
    let mut rng = RngStream::new(2001, 0).rng();
    for _ in 0..40 {
        let eps = rng.random::<f64>() * 0.6;
        let z1 = rng.random::<f64>() * 6.0 - 3.0;
        let z2 = rng.random::<f64>() * 6.0 - 3.0;

        // Objective to minimize: ||z - mu||^2 over mu <= -eps.
        for z in [vec![z1], vec![z1, z2]] {
            let clamp: Vec<f64> = z.iter().map(|&v| v.min(-eps)).collect();
            let obj = |mu: &[f64]| -> f64 {
                z.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum()
            };
            let at_clamp = obj(&clamp);
            let lo = -5.0_f64;
            let step = 1e-2;
            let steps = ((-eps - lo) / step) as usize + 1;
            let mut grid_best = f64::INFINITY;
            if z.len() == 1 {
                for i in 0..steps {
                    grid_best = grid_best.min(obj(&[lo + i as f64 * step]));
                }
            } else {
                for i in 0..steps {
                    for j in 0..steps {
                        grid_best =
                            grid_best.min(obj(&[lo + i as f64 * step, lo + j as f64 * step]));
                    }
                }
            }
            assert!(
                at_clamp <= grid_best + 1e-12,
                "clamp beaten by grid: {at_clamp} vs {grid_best} (z = {z:?}, eps = {eps})"
            );
        }
    }
}

/// The statistic equals the norm expansion with the closed-form maximizer,
/// across dimensions.
#[test]
fn glrt_matches_norm_expansion() {
    let mut rng = RngStream::new(2002, 0).rng();
    for m in [1usize, 2, 12, 24] {
        let cfg = GlrtConfig::new(0.25, m).unwrap();
        for _ in 0..250 {
            let z: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
            let t = glrt_statistic(&z, &cfg).unwrap().value;
            let mu_hat: Vec<f64> = z.iter().map(|&v| v.min(-0.25)).collect();
            let alt = -0.5 * z.iter().map(|v| v * v).sum::<f64>()
                + 0.5
                    * z.iter()
                        .zip(&mu_hat)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
            assert!((t - alt).abs() <= 1e-9, "m = {m}: {t} vs {alt}");
        }
    }
}

/// The m = 2 correlated projection matches an exhaustive grid search over
/// [-4, -0.25]^2 at step 1e-3.
#[test]
fn project_mu_matches_grid_oracle() {
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let cfg = CovGlrtConfig::new(0.25, sigma.clone(), 1e-10).unwrap();
    let z = [1.0, -1.0];
    let mu = project_mu(&z, &cfg).unwrap();

    // Grid oracle with the explicit inverse of [[1, .5], [.5, 1]].
    let inv = [4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 4.0 / 3.0];
    let obj = |m1: f64, m2: f64| -> f64 {
        let d1 = z[0] - m1;
        let d2 = z[1] - m2;
        inv[0] * d1 * d1 + (inv[1] + inv[2]) * d1 * d2 + inv[3] * d2 * d2
    };
    let step = 1e-3;
    let n = ((4.0 - 0.25) / step) as usize + 1;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let m1 = -4.0 + i as f64 * step;
        for j in 0..n {
            let m2 = -4.0 + j as f64 * step;
            let o = obj(m1, m2);
            if o < best.0 {
                best = (o, m1, m2);
            }
        }
    }
    assert!((mu[0] - best.1).abs() <= 1e-3, "{} vs {}", mu[0], best.1);
    assert!((mu[1] - best.2).abs() <= 1e-3, "{} vs {}", mu[1], best.2);

    let t = cov_glrt_statistic(&z, &cfg).unwrap().value;
    let grid_mu = nalgebra::DVector::from_vec(vec![best.1, best.2]);
    let zv = nalgebra::DVector::from_column_slice(&z);
    let sigma_inv = DMatrix::from_row_slice(2, 2, &inv);
    let t_grid = (grid_mu.scale(0.5) - zv).dot(&(&sigma_inv * &grid_mu));
    assert!((t - t_grid).abs() <= 1e-4, "{t} vs {t_grid}");
}

/// AUROC agrees exactly with the O(n^2) pairwise count on random small
/// instances, ties included.
#[test]
fn auroc_agrees_with_pairwise_oracle() {
    let mut rng = RngStream::new(2003, 0).rng();
    for _ in 0..100 {
        let n1 = 1 + rng.random_range(0..50usize);
        let n0 = 1 + rng.random_range(0..50usize);
        // Values on a small integer grid to force plenty of ties.
        let inl: Vec<f64> = (0..n1).map(|_| rng.random_range(0..12) as f64).collect();
        let ood: Vec<f64> = (0..n0).map(|_| rng.random_range(0..12) as f64).collect();
        let d = LabeledStatistics::new(inl.clone(), ood.clone()).unwrap();
        let fast = auroc(&d).unwrap().get();
        let slow = auroc_pairwise(&inl, &ood);
        assert_eq!(fast, slow, "inl = {inl:?}, ood = {ood:?}");
    }
}

/// dr_at_far agrees with the exhaustive threshold sweep on the same
/// instances.
#[test]
fn dr_at_far_agrees_with_sweep_oracle() {
    let mut rng = RngStream::new(2004, 0).rng();
    for case in 0..100 {
        let n1 = 2 + rng.random_range(0..48usize);
        let n0 = 1 + rng.random_range(0..50usize);
        let inl: Vec<f64> = (0..n1).map(|_| rng.random_range(0..12) as f64).collect();
        let ood: Vec<f64> = (0..n0).map(|_| rng.random_range(0..12) as f64).collect();
        let alpha = 0.02 + 0.7 * rng.random::<f64>();
        let d = LabeledStatistics::new(inl.clone(), ood.clone()).unwrap();
        let fast = dr_at_far(&d, Probability::new(alpha).unwrap()).unwrap();
        let slow = dr_sweep_oracle(&inl, &ood, alpha);
        assert_eq!(fast.degenerate, slow.degenerate, "case {case}");
        assert_eq!(fast.dr, slow.dr, "case {case}");
        assert_eq!(fast.threshold, slow.threshold, "case {case}");
        assert_eq!(fast.achieved_far, slow.achieved_far, "case {case}");
    }
}

/// The continued-fraction incomplete beta agrees with plain Simpson
/// quadrature of the density.
#[test]
fn incomplete_beta_agrees_with_quadrature() {
    for &(a, b) in &[(2.0, 99.0), (3.0, 98.0), (5.0, 5.0), (1.0, 7.0), (2.5, 1.5)] {
        for &x in &[0.01, 0.05, 0.2, 0.5, 0.9] {
            let fast = reg_inc_beta(a, b, x).unwrap();
            let slow = beta_cdf_quadrature(a, b, x, 20_000);
            assert!(
                (fast - slow).abs() < 1e-7,
                "I_{x}({a},{b}): {fast} vs {slow}"
            );
        }
    }
}
