//! Clipped-surrogate PPO update with KL early stopping and fixed exploration noise.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};
use crate::policy::{gaussian_log_prob, ActorCritic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub clip_ratio: f64,
    pub pi_lr: f64,
    pub v_lr: f64,
    pub pi_iters: usize,
    pub v_iters: usize,
    pub target_kl: f64,
    pub steps_per_task: usize,
    pub total_steps_per_task: usize,
    pub gae_lambda: f64,
    pub hidden_single: usize,
    pub hidden_multi: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            clip_ratio: 0.2,
            pi_lr: 1e-4,
            v_lr: 1e-4,
            pi_iters: 128,
            v_iters: 128,
            target_kl: 0.02,
            steps_per_task: 16_000,
            total_steps_per_task: 10_000_000,
            gae_lambda: 0.97,
            hidden_single: 64,
            hidden_multi: 256,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.gamma, self.pi_lr, self.v_lr, self.target_kl, self.gae_lambda];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(AgentError::InvalidConfig("gamma, learning rates, target_kl and gae_lambda must be positive".into()));
        }
        if !(self.clip_ratio > 0.0 && self.clip_ratio < 1.0) {
            return Err(AgentError::InvalidConfig(format!("clip_ratio {} outside (0, 1)", self.clip_ratio)));
        }
        if self.gamma > 1.0 || self.gae_lambda > 1.0 {
            return Err(AgentError::InvalidConfig("gamma and gae_lambda must be at most 1".into()));
        }
        let counts = [self.pi_iters, self.v_iters, self.steps_per_task, self.total_steps_per_task, self.hidden_single, self.hidden_multi];
        if counts.contains(&0) {
            return Err(AgentError::InvalidConfig("iteration counts, step counts and widths must be positive".into()));
        }
        Ok(())
    }

    /// Number of updates needed to reach `total_steps_per_task`.
    /// Whole updates that fit in the step budget, at least one.
    pub fn num_updates(&self) -> usize {
        (self.total_steps_per_task / self.steps_per_task).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// One update's worth of experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub act: Array2<f64>,
    pub logp_old: Array1<f64>,
    pub adv: Array1<f64>,
    pub ret: Array1<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Policy loss before the first gradient step.
    pub pi_loss: f64,
    /// Value loss before the first gradient step.
    pub v_loss: f64,
    /// Approximate KL at the last evaluated policy iteration.
    pub kl: f64,
    pub clip_frac: f64,
    /// Number of policy gradient steps taken.
    pub stop_iter: usize,
}

/// Clipped surrogate loss `-mean(min(r A, clip(r, 1-c, 1+c) A))` and its
/// derivative with respect to each new log-probability.
pub fn clipped_surrogate(logp: &[f64], logp_old: &[f64], adv: &[f64], clip: f64) -> (f64, Vec<f64>, f64) {
    let n = logp.len() as f64;
    let mut loss = 0.0;
    let mut clipped = 0usize;
    let grad = (0..logp.len())
        .map(|i| {
            let ratio = (logp[i] - logp_old[i]).exp();
            let unclipped = ratio * adv[i];
            let bounded = ratio.clamp(1.0 - clip, 1.0 + clip) * adv[i];
            if ratio > 1.0 + clip || ratio < 1.0 - clip {
                clipped += 1;
            }
            if unclipped <= bounded {
                loss -= unclipped / n;
                -unclipped / n
            } else {
                loss -= bounded / n;
                0.0
            }
        })
        .collect();
    (loss, grad, clipped as f64 / n)
}

/// Log-probabilities of the batch actions under the current policy, with the
/// forward cache and means kept for the backward pass.
fn log_probs(model: &ActorCritic, batch: &Batch) -> Result<(crate::nn::Cache, Vec<f64>)> {
    let cache = model.pi.forward_cached(&model.pi_params, batch.obs.view())?;
    let mean = cache.output();
    let logp = mean
        .axis_iter(Axis(0))
        .zip(batch.act.axis_iter(Axis(0)))
        .map(|(m, a)| gaussian_log_prob(m.as_slice().unwrap(), &model.log_std, a.as_slice().unwrap()))
        .collect();
    Ok((cache, logp))
}

/// Policy loss, approximate KL, clip fraction and the parameter gradient.
pub fn policy_loss_and_grad(model: &ActorCritic, batch: &Batch, clip: f64) -> Result<(f64, f64, f64, Vec<f64>)> {
    let (cache, logp) = log_probs(model, batch)?;
    let logp_old = batch.logp_old.as_slice().unwrap();
    let (loss, dlogp, clip_frac) = clipped_surrogate(&logp, logp_old, batch.adv.as_slice().unwrap(), clip);
    let kl = logp_old.iter().zip(&logp).map(|(o, n)| o - n).sum::<f64>() / logp.len() as f64;
    let mean = cache.output();
    let mut dmean = Array2::zeros(mean.raw_dim());
    for i in 0..batch.len() {
        for j in 0..mean.ncols() {
            let var = (2.0 * model.log_std[j]).exp();
            dmean[[i, j]] = dlogp[i] * (batch.act[[i, j]] - mean[[i, j]]) / var;
        }
    }
    let mut grad = vec![0.0; model.pi_params.len()];
    model.pi.backward(&model.pi_params, &cache, &dmean, &mut grad);
    Ok((loss, kl, clip_frac, grad))
}

/// Mean squared error of the value net against the returns, and its gradient.
pub fn value_loss_and_grad(model: &ActorCritic, batch: &Batch) -> Result<(f64, Vec<f64>)> {
    let cache = model.v.forward_cached(&model.v_params, batch.obs.view())?;
    let v = cache.output().column(0).to_owned();
    let n = batch.len() as f64;
    let diff = &v - &batch.ret;
    let loss = diff.mapv(|d| d * d).sum() / n;
    let dout = diff.mapv(|d| 2.0 * d / n).insert_axis(Axis(1));
    let mut grad = vec![0.0; model.v_params.len()];
    model.v.backward(&model.v_params, &cache, &dout, &mut grad);
    Ok((loss, grad))
}

fn finite(what: &str, loss: f64, grad: &[f64]) -> Result<()> {
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(AgentError::Divergence(format!("non-finite {what} (loss {loss})")));
    }
    Ok(())
}

/// Full-batch PPO update: up to `pi_iters` policy steps, stopping early once
/// the approximate KL exceeds `target_kl`, then `v_iters` value steps.
pub fn ppo_update(model: &mut ActorCritic, pi_opt: &mut Adam, v_opt: &mut Adam, batch: &Batch, cfg: &PpoConfig) -> Result<UpdateStats> {
    if batch.is_empty() {
        return Err(AgentError::EmptyRollout);
    }
    let mut stats = UpdateStats { pi_loss: 0.0, v_loss: 0.0, kl: 0.0, clip_frac: 0.0, stop_iter: 0 };
    for i in 0..cfg.pi_iters {
        let (loss, kl, clip_frac, grad) = policy_loss_and_grad(model, batch, cfg.clip_ratio)?;
        finite("policy loss", loss, &grad)?;
        if i == 0 {
            stats.pi_loss = loss;
        }
        stats.kl = kl;
        stats.clip_frac = clip_frac;
        if kl > cfg.target_kl {
            break;
        }
        pi_opt.step(&mut model.pi_params, &grad);
        stats.stop_iter = i + 1;
    }
    for i in 0..cfg.v_iters {
        let (loss, grad) = value_loss_and_grad(model, batch)?;
        finite("value loss", loss, &grad)?;
        if i == 0 {
            stats.v_loss = loss;
        }
        v_opt.step(&mut model.v_params, &grad);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_policy_loss_is_negative_mean_advantage() {
        let lp = [-1.0, -2.0, -0.5];
        let adv = [0.5, -1.0, 2.0];
        let (loss, _, frac) = clipped_surrogate(&lp, &lp, &adv, 0.2);
        assert!((loss + (0.5 - 1.0 + 2.0) / 3.0).abs() < 1e-15);
        assert_eq!(frac, 0.0);
    }

    #[test]
    fn clipping_caps_positive_advantage() {
        let old = [0.0];
        let new = [1.5f64.ln()];
        let (loss, grad, frac) = clipped_surrogate(&new, &old, &[1.0], 0.2);
        assert!((loss + 1.2).abs() < 1e-12);
        assert_eq!(grad[0], 0.0);
        assert_eq!(frac, 1.0);
        // Negative advantage keeps the unclipped (smaller) term.
        let (loss, grad, _) = clipped_surrogate(&new, &old, &[-1.0], 0.2);
        assert!((loss - 1.5).abs() < 1e-12);
        assert!((grad[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn defaults_validate() {
        let c = PpoConfig::default();
        c.validate().unwrap();
        assert_eq!(c.num_updates(), 625);
        assert!(PpoConfig { clip_ratio: 1.0, ..c.clone() }.validate().is_err());
        assert!(PpoConfig { pi_iters: 0, ..c }.validate().is_err());
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut p = vec![1.0, -1.0];
        let mut opt = Adam::new(2, 0.1);
        opt.step(&mut p, &[3.0, -0.01]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }
}
