//! Shared oracles for integration tests: deliberately simple, independent
//! re-implementations used to check the library's fast paths.

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
/// Sorts a copy; returns sup |F_n - F|.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-14 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Average ranks (1-based, ties averaged).
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            out[k] = avg;
        }
        i = j;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    num / (va.sqrt() * vb.sqrt())
}

/// O(n^2) pairwise AUROC oracle: P(inlier > ood) with half credit for ties.
pub fn auroc_pairwise(inliers: &[f64], oods: &[f64]) -> f64 {
    let mut score = 0.0;
    for &a in inliers {
        for &b in oods {
            if a > b {
                score += 1.0;
            } else if a == b {
                score += 0.5;
            }
        }
    }
    score / (inliers.len() * oods.len()) as f64
}

/// Exhaustive threshold-sweep oracle for detection rate at a false-alarm
/// budget under "reject iff t <= tau": scans every candidate threshold.
pub struct SweepOracle {
    pub dr: f64,
    pub threshold: f64,
    pub achieved_far: f64,
    pub degenerate: bool,
}

pub fn dr_sweep_oracle(inliers: &[f64], oods: &[f64], alpha: f64) -> SweepOracle {
    let mut candidates: Vec<f64> = inliers.iter().chain(oods.iter()).copied().collect();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();
    let far_at = |tau: f64| {
        inliers.iter().filter(|&&v| v <= tau).count() as f64 / inliers.len() as f64
    };
    let dr_at =
        |tau: f64| oods.iter().filter(|&&v| v <= tau).count() as f64 / oods.len() as f64;
    let mut best: Option<f64> = None;
    for &tau in &candidates {
        if far_at(tau) <= alpha {
            best = Some(tau);
        }
    }
    match best {
        Some(tau) => SweepOracle {
            dr: dr_at(tau),
            threshold: tau,
            achieved_far: far_at(tau),
            degenerate: false,
        },
        None => SweepOracle {
            dr: 0.0,
            threshold: f64::NEG_INFINITY,
            achieved_far: 0.0,
            degenerate: true,
        },
    }
}

/// Simpson-rule quadrature of the Beta(a, b) density over [0, x]: a slow,
/// independent route to the regularized incomplete beta.
pub fn beta_cdf_quadrature(a: f64, b: f64, x: f64, panels: usize) -> f64 {
    // ln B(a, b) via direct product-free Stirling-series-free route:
    // use the library only for nothing; integrate the *unnormalized*
    // density and divide by the full integral so no gamma function is
    // needed at all.
    assert!(a >= 1.0 && b >= 1.0, "quadrature oracle assumes bounded density");
    let density = |t: f64| -> f64 {
        if t <= 0.0 {
            if a > 1.0 { 0.0 } else { 1.0 } // a == 1: t^0 = 1
        } else if t >= 1.0 {
            if b > 1.0 { 0.0 } else { 1.0 }
        } else {
            ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln()).exp()
        }
    };
    let simpson = |lo: f64, hi: f64| -> f64 {
        let n = panels * 2;
        let h = (hi - lo) / n as f64;
        let mut s = density(lo) + density(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * density(lo + i as f64 * h);
        }
        s * h / 3.0
    };
    simpson(0.0, x) / (simpson(0.0, x) + simpson(x, 1.0))
}
