//! Shared helpers for the acceptance suite: independent oracles kept
//! deliberately simple.

use rand::Rng;

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
    let far_at =
        |tau: f64| inliers.iter().filter(|&&v| v <= tau).count() as f64 / inliers.len() as f64;
    let dr_at = |tau: f64| oods.iter().filter(|&&v| v <= tau).count() as f64 / oods.len() as f64;
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

/// Uniform draw in (lo, hi).
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
