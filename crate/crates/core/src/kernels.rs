//! Gaussian kernel pooling over cosine similarities, with exact gradients.
//!
//! For a target vector `t` and a context set `C`, kernel `k` produces the
//! soft count
//!
//! ```text
//! phi_k(t, C) = sum_{c in C} exp(-(cos(t, c) - mu_k)^2 / (2 sigma_k^2))
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{cosine_unchecked, dot};
use crate::numeric::Real;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: target has {expected}, context vector {index} has {found}")]
    Dim {
        expected: usize,
        index: usize,
        found: usize,
    },
    #[error("upstream gradient has {found} entries, bank has {expected} kernels")]
    Upstream { expected: usize, found: usize },
    #[error("invalid kernel bank: {0}")]
    Bank(String),
}

/// Kernel means and standard deviations. `sigmas` are standard deviations;
/// the variance in the exponent is `sigma^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBank {
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
}

/// One exact-match kernel followed by ten soft-match kernels at -0.9..0.9.
pub fn default_bank() -> KernelBank {
    let mut means = vec![1.0];
    means.extend_from_slice(&[-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9]);
    let mut sigmas = vec![1e-3];
    sigmas.extend_from_slice(&[0.1; 10]);
    KernelBank { means, sigmas }
}

impl Default for KernelBank {
    fn default() -> Self {
        default_bank()
    }
}

impl KernelBank {
    pub fn new(means: Vec<f64>, sigmas: Vec<f64>) -> Result<Self, KernelError> {
        let bank = KernelBank { means, sigmas };
        bank.validate()?;
        Ok(bank)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if self.means.len() != self.sigmas.len() {
            return Err(KernelError::Bank(format!(
                "{} means vs {} sigmas",
                self.means.len(),
                self.sigmas.len()
            )));
        }
        if self.sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(KernelError::Bank("sigmas must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Adds the kernel responses to one cosine value into `acc`.
    #[inline]
    pub(crate) fn accumulate<T: Real>(&self, cos: T, acc: &mut [T]) {
        for (k, a) in acc.iter_mut().enumerate() {
            let d = cos - T::from_f64(self.means[k]);
            let s = self.sigmas[k];
            *a += (-(d * d) / T::from_f64(2.0 * s * s)).exp();
        }
    }

    /// `d/dcos sum_k upstream_k * exp(-(cos - mu_k)^2 / (2 sigma_k^2))`.
    #[inline]
    pub(crate) fn dcos(&self, cos: f64, upstream: &[f64]) -> f64 {
        let mut g = 0.0;
        for k in 0..self.len() {
            if upstream[k] == 0.0 {
                continue;
            }
            let d = cos - self.means[k];
            let var = self.sigmas[k] * self.sigmas[k];
            let phi = (-(d * d) / (2.0 * var)).exp();
            g -= upstream[k] * phi * d / var;
        }
        g
    }
}

fn check_dims(target: &[f64], context: &[&[f64]]) -> Result<(), KernelError> {
    for (i, c) in context.iter().enumerate() {
        if c.len() != target.len() {
            return Err(KernelError::Dim {
                expected: target.len(),
                index: i,
                found: c.len(),
            });
        }
    }
    Ok(())
}

/// Kernel-pooled features of `target` against `context`. Empty context gives zeros.
pub fn kernel_features(
    target: &[f64],
    context: &[&[f64]],
    bank: &KernelBank,
) -> Result<Vec<f64>, KernelError> {
    check_dims(target, context)?;
    Ok(kernel_features_unchecked(target, context, bank))
}

pub(crate) fn kernel_features_unchecked<T: Real, V: AsRef<[T]>>(
    target: &[T],
    context: &[V],
    bank: &KernelBank,
) -> Vec<T> {
    let mut phi = vec![T::zero(); bank.len()];
    for c in context {
        bank.accumulate(cosine_unchecked(target, c.as_ref()), &mut phi);
    }
    phi
}

/// Cosine with its gradients in both arguments. Zero-norm inputs give a zero
/// cosine and zero gradients.
pub fn cosine_with_grad(u: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    // Both partials vanish exactly at u == v; the general formula leaves rounding residue.
    if u == v && u.iter().any(|&x| x != 0.0) {
        return (1.0, vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return (0.0, vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    let inv = 1.0 / (nu * nv);
    let s = dot(u, v) * inv;
    let du = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| b * inv - s * a / (nu * nu))
        .collect();
    let dv = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| a * inv - s * b / (nv * nv))
        .collect();
    (s, du, dv)
}

/// Gradient of `sum_k upstream_k * phi_k(target, context)` with respect to
/// the target and to each context vector.
pub fn kernel_backward(
    target: &[f64],
    context: &[&[f64]],
    bank: &KernelBank,
    upstream: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), KernelError> {
    check_dims(target, context)?;
    if upstream.len() != bank.len() {
        return Err(KernelError::Upstream {
            expected: bank.len(),
            found: upstream.len(),
        });
    }
    let mut d_target = vec![0.0; target.len()];
    let mut d_context = Vec::with_capacity(context.len());
    for c in context {
        let (s, du, dv) = cosine_with_grad(target, c);
        let g = bank.dcos(s, upstream);
        for (a, b) in d_target.iter_mut().zip(&du) {
            *a += g * b;
        }
        d_context.push(dv.into_iter().map(|x| g * x).collect());
    }
    Ok((d_target, d_context))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bank_shape() {
        let b = default_bank();
        assert_eq!(b.len(), 11);
        assert_eq!(b.means[0], 1.0);
        assert_eq!(b.sigmas[0], 1e-3);
        assert_eq!(
            &b.means[1..],
            &[-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9]
        );
        assert!(b.sigmas[1..].iter().all(|&s| s == 0.1));
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                assert_ne!(b.means[i], b.means[j]);
            }
        }
    }

    #[test]
    fn empty_context_is_zero() {
        let b = default_bank();
        let t = [1.0, 2.0];
        assert_eq!(kernel_features(&t, &[], &b).unwrap(), vec![0.0; 11]);
        let (dt, dc) = kernel_backward(&t, &[], &b, &[1.0; 11]).unwrap();
        assert_eq!(dt, vec![0.0; 2]);
        assert!(dc.is_empty());
    }

    #[test]
    fn matching_mean_gives_unit_response() {
        let b = default_bank();
        let t = [1.0, 0.0];
        let theta = 0.9f64.acos();
        let c = [theta.cos(), theta.sin()];
        let phi = kernel_features(&t, &[&c], &b).unwrap();
        assert!((phi[10] - 1.0).abs() < 1e-12, "{}", phi[10]);
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let b = default_bank();
        let (dt, dc) = kernel_backward(&[1.0, 0.5], &[&[0.2, 0.9]], &b, &[0.0; 11]).unwrap();
        assert!(dt.iter().chain(dc[0].iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn shape_errors() {
        let b = default_bank();
        assert!(matches!(
            kernel_features(&[1.0, 2.0], &[&[1.0]], &b),
            Err(KernelError::Dim { index: 0, .. })
        ));
        assert!(matches!(
            kernel_backward(&[1.0], &[&[1.0]], &b, &[0.0; 3]),
            Err(KernelError::Upstream { .. })
        ));
        assert!(KernelBank::new(vec![0.0], vec![0.0]).is_err());
        assert!(KernelBank::new(vec![0.0, 1.0], vec![0.1]).is_err());
    }

    #[test]
    fn zero_norm_context_contributes_cos_zero() {
        let b = default_bank();
        let phi = kernel_features(&[1.0, 0.0], &[&[0.0, 0.0]], &b).unwrap();
        // cos 0 sits between the -0.1 and 0.1 kernels
        assert!((phi[5] - (-0.5f64).exp()).abs() < 1e-15);
        let (dt, dc) = kernel_backward(&[1.0, 0.0], &[&[0.0, 0.0]], &b, &[1.0; 11]).unwrap();
        assert!(dt.iter().chain(dc[0].iter()).all(|&x| x == 0.0));
    }
}
