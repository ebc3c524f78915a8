//! Denoising time grid and per-step noise levels.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RlError};

pub const DEFAULT_STEPS: usize = 20;
pub const DEFAULT_CUTOFF: usize = 10;
pub const DEFAULT_ETA: f64 = 0.7;
pub const DEFAULT_CLIP: f64 = 0.2;
pub const DEFAULT_BETA: f64 = 0.04;

/// Steps are 1-based: step `k` moves from `t(k)` to `t(k + 1)`, with
/// `t(1) = 1` (noise) and `t(K + 1) = 0` (data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSchedule {
    pub steps: usize,
    pub times: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub early_cutoff: usize,
    pub clip_eps: f64,
    pub kl_beta: f64,
}

impl Default for DenoiseSchedule {
    fn default() -> Self {
        Self::new(DEFAULT_STEPS, DEFAULT_CUTOFF, DEFAULT_ETA).expect("defaults are valid")
    }
}

impl DenoiseSchedule {
    /// Linear times with `sigma_k = eta * sqrt(t_k) * sqrt(t_k - t_{k+1})` for
    /// `k <= cutoff` and zero afterwards.
    pub fn new(steps: usize, cutoff: usize, eta: f64) -> Result<Self> {
        if steps == 0 {
            return Err(RlError::InvalidConfig("need at least one denoising step".into()));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(RlError::InvalidConfig(format!(
                "eta must be finite and >= 0, got {eta}"
            )));
        }
        let times: Vec<f64> = (0..=steps).map(|i| 1.0 - i as f64 / steps as f64).collect();
        let sigmas = (1..=steps)
            .map(|k| {
                if k <= cutoff {
                    let (t, next) = (times[k - 1], times[k]);
                    eta * t.sqrt() * (t - next).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        Self::with_sigmas(times, sigmas, cutoff)
    }

    pub fn with_sigmas(times: Vec<f64>, sigmas: Vec<f64>, cutoff: usize) -> Result<Self> {
        let s = Self {
            steps: sigmas.len(),
            times,
            sigmas,
            early_cutoff: cutoff,
            clip_eps: DEFAULT_CLIP,
            kl_beta: DEFAULT_BETA,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_clip(mut self, eps: f64) -> Self {
        self.clip_eps = eps;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.kl_beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RlError::InvalidConfig(m));
        if self.times.len() != self.steps + 1 {
            return bad(format!("{} times for {} steps", self.times.len(), self.steps));
        }
        if self.times.windows(2).any(|w| w[1] >= w[0]) {
            return bad("times must be strictly decreasing".into());
        }
        if self.early_cutoff > self.steps {
            return bad(format!(
                "cutoff {} exceeds {} steps",
                self.early_cutoff, self.steps
            ));
        }
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sigmas must be finite and non-negative".into());
        }
        if self.sigmas[self.early_cutoff..].iter().any(|s| *s != 0.0) {
            return bad("sigmas after the cutoff must be zero".into());
        }
        if !(0.0..1.0).contains(&self.clip_eps) {
            return bad(format!("clip epsilon {} outside [0, 1)", self.clip_eps));
        }
        if self.kl_beta.is_nan() || self.kl_beta < 0.0 {
            return bad(format!("KL coefficient {} is negative", self.kl_beta));
        }
        Ok(())
    }

    pub fn t(&self, k: usize) -> f64 {
        self.times[k - 1]
    }

    pub fn dt(&self, k: usize) -> f64 {
        self.times[k] - self.times[k - 1]
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.sigmas[k - 1]
    }

    /// Steps that carry noise, log-probabilities and gradients.
    pub fn stochastic_steps(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.early_cutoff
    }
}
