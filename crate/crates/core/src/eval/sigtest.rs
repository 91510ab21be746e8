//! Paired sign-flip randomization test and a Kolmogorov-Smirnov uniformity check.

use rand::Rng as _;
use thiserror::Error;

use crate::rng::seeded;

#[derive(Debug, Error, PartialEq)]
pub enum SigTestError {
    #[error("paired inputs differ in length: {a} vs {b}")]
    Length { a: usize, b: usize },
    #[error("no paired observations")]
    Empty,
    #[error("exact enumeration supports at most {max} pairs, got {n}")]
    TooLarge { n: usize, max: usize },
}

const MAX_EXACT: usize = 24;

fn differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>, SigTestError> {
    if a.len() != b.len() {
        return Err(SigTestError::Length {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.is_empty() {
        return Err(SigTestError::Empty);
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

// Permuted sums equal to the observed one up to rounding must count as ties.
fn tolerance(d: &[f64]) -> f64 {
    1e-12 * d.iter().map(|x| x.abs()).sum::<f64>()
}

/// Two-sided paired randomization test on the mean difference.
///
/// Each iteration flips the sign of every pair's difference with probability
/// one half; the p-value is `(count + 1) / (iterations + 1)` where `count` is
/// the number of permuted |mean| at least as large as the observed one.
pub fn permutation_test(a: &[f64], b: &[f64], iterations: usize, seed: u64) -> Result<f64, SigTestError> {
    let d = differences(a, b)?;
    let observed = d.iter().sum::<f64>().abs();
    let tol = tolerance(&d);
    let mut rng = seeded(seed);
    let mut count = 0usize;
    for _ in 0..iterations {
        let s: f64 = d
            .iter()
            .map(|&x| if rng.gen::<bool>() { x } else { -x })
            .sum();
        if s.abs() >= observed - tol {
            count += 1;
        }
    }
    Ok((count + 1) as f64 / (iterations + 1) as f64)
}

/// Exact two-sided p-value over all `2^n` sign patterns.
pub fn exact_permutation_p(a: &[f64], b: &[f64]) -> Result<f64, SigTestError> {
    let d = differences(a, b)?;
    if d.len() > MAX_EXACT {
        return Err(SigTestError::TooLarge {
            n: d.len(),
            max: MAX_EXACT,
        });
    }
    let observed = d.iter().sum::<f64>().abs();
    let tol = tolerance(&d);
    let patterns = 1u64 << d.len();
    let count = (0..patterns)
        .filter(|&mask| {
            let s: f64 = d
                .iter()
                .enumerate()
                .map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x })
                .sum();
            s.abs() >= observed - tol
        })
        .count();
    Ok(count as f64 / patterns as f64)
}

/// One-sample KS test of `samples` against Uniform(0, 1); returns the
/// asymptotic p-value.
pub fn ks_uniform_pvalue(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 1.0;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            f64::max((i + 1) as f64 / nf - x, x - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

/// `P(K > x)` for the Kolmogorov distribution.
fn kolmogorov_survival(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
