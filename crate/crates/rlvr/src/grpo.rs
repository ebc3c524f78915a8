//! Gaussian denoising transitions, group-relative advantages and the clipped
//! policy and KL terms.

use crate::error::{Result, RlError};
use crate::schedule::DenoiseSchedule;

pub const ADVANTAGE_EPS: f64 = 1e-8;

/// Mean of the transition: one Euler step of the velocity field.
pub fn transition_mean(x: &[f64], v: &[f64], t: f64, t_next: f64) -> Vec<f64> {
    x.iter().zip(v).map(|(x, v)| x + (t_next - t) * v).collect()
}

/// `mu + sigma * noise`, or exactly `mu` when `sigma` is zero.
pub fn gaussian_step(x: &[f64], v: &[f64], t: f64, t_next: f64, sigma: f64, noise: &[f64]) -> Vec<f64> {
    let mu = transition_mean(x, v, t, t_next);
    if sigma == 0.0 {
        return mu;
    }
    mu.iter().zip(noise).map(|(m, e)| m + sigma * e).collect()
}

/// Step `k` (1-based) of the sampler.
pub fn sde_step(x: &[f64], k: usize, v: &[f64], schedule: &DenoiseSchedule, noise: &[f64]) -> Vec<f64> {
    gaussian_step(x, v, schedule.t(k), schedule.t(k + 1), schedule.sigma(k), noise)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 {
        Ok(())
    } else {
        Err(RlError::ZeroSigma { step: 0 })
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(RlError::DimensionMismatch(format!("{a} vs {b}")))
    }
}

/// Dimension-normalised log-ratio of two Gaussian transitions that share
/// `sigma`, evaluated at `x_next`.
pub fn log_ratio(x_next: &[f64], mu_new: &[f64], mu_old: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_len(x_next.len(), mu_new.len())?;
    check_len(x_next.len(), mu_old.len())?;
    let d = x_next.len() as f64;
    let s: f64 = x_next
        .iter()
        .zip(mu_new.iter().zip(mu_old))
        .map(|(x, (n, o))| (x - n).powi(2) - (x - o).powi(2))
        .sum();
    Ok(-s / (2.0 * sigma * sigma * d))
}

/// Group-normalised advantages with the population standard deviation.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    let g = rewards.len();
    if g < 2 {
        return Err(RlError::GroupTooSmall(g));
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
    let std = var.sqrt();
    if std == 0.0 {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards
        .iter()
        .map(|r| (r - mean) / (std + ADVANTAGE_EPS))
        .collect())
}

/// `-min(rho * A, clip(rho) * A)` for one term.
pub fn clipped_term(log_ratio: f64, advantage: f64, eps: f64) -> Result<f64> {
    let rho = log_ratio.exp();
    if !rho.is_finite() {
        return Err(RlError::NonFiniteRatio(log_ratio));
    }
    let clipped = rho.clamp(1.0 - eps, 1.0 + eps);
    Ok(-(rho * advantage).min(clipped * advantage))
}

/// Derivative of [`clipped_term`] with respect to the log-ratio. Zero where
/// the clipped branch is active.
pub fn clipped_term_grad(log_ratio: f64, advantage: f64, eps: f64) -> Result<f64> {
    let rho = log_ratio.exp();
    if !rho.is_finite() {
        return Err(RlError::NonFiniteRatio(log_ratio));
    }
    let clipped = rho.clamp(1.0 - eps, 1.0 + eps);
    if rho * advantage <= clipped * advantage {
        Ok(-advantage * rho)
    } else {
        Ok(0.0)
    }
}

/// Mean clipped surrogate over every `(i, k)` term; `log_ratios[i]` holds
/// sample `i`'s per-step log-ratios.
pub fn policy_loss(log_ratios: &[Vec<f64>], advantages: &[f64], eps: f64) -> Result<f64> {
    check_len(log_ratios.len(), advantages.len())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (row, a) in log_ratios.iter().zip(advantages) {
        for r in row {
            sum += clipped_term(*r, *a, eps)?;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Closed-form KL between two Gaussians with shared `sigma`, per dimension.
pub fn kl_penalty(mu_new: &[f64], mu_ref: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_len(mu_new.len(), mu_ref.len())?;
    let d = mu_new.len() as f64;
    let sq: f64 = mu_new.iter().zip(mu_ref).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(sq / (2.0 * sigma * sigma * d))
}

pub fn combined_objective(policy_loss: f64, kl: f64, beta: f64) -> f64 {
    policy_loss + beta * kl
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions() {
        assert_eq!(gaussian_step(&[0.3], &[0.0], 1.0, 0.95, 0.0, &[5.0]), vec![0.3]);
        let mu = transition_mean(&[0.0], &[2.0], 1.0, 0.95);
        assert!((mu[0] + 0.1).abs() < 1e-15);
        let next = gaussian_step(&[0.0], &[2.0], 1.0, 0.95, 0.5, &[1.0]);
        assert!((next[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_sigma_rejected() {
        assert!(matches!(
            log_ratio(&[0.0], &[0.0], &[0.0], 0.0),
            Err(RlError::ZeroSigma { .. })
        ));
        assert!(matches!(
            kl_penalty(&[0.0], &[0.0], 0.0),
            Err(RlError::ZeroSigma { .. })
        ));
    }

    #[test]
    fn advantages_small_cases() {
        assert_eq!(group_advantages(&[1.0; 4]).unwrap(), vec![0.0; 4]);
        assert!(matches!(group_advantages(&[1.0]), Err(RlError::GroupTooSmall(1))));
        let a = group_advantages(&[0.0, 1.0]).unwrap();
        assert!((a[0] + 1.0).abs() < 1e-7 && (a[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            clipped_term(1e4, 1.0, 0.2),
            Err(RlError::NonFiniteRatio(_))
        ));
    }
}
