use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{log_softmax, PolicyParams};
use super::{PpoError, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub epochs_per_batch: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub hidden_width: usize,
    /// Episodes between checkpoints.
    pub checkpoint_every: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 3e-4,
            epochs_per_batch: 4,
            minibatch_size: 32,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            hidden_width: 64,
            checkpoint_every: 100,
        }
    }
}

impl PpoConfig {
    /// Returns the offending key on failure.
    pub fn check(&self) -> Result<(), &'static str> {
        let unit_open = |v: f64| v > 0.0 && v < 1.0;
        let unit_half = |v: f64| v > 0.0 && v <= 1.0;
        if !unit_open(self.clip_epsilon) {
            return Err("ppo.clip_epsilon");
        }
        if !unit_half(self.gamma) {
            return Err("ppo.gamma");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err("ppo.gae_lambda");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err("ppo.learning_rate");
        }
        if self.epochs_per_batch == 0 {
            return Err("ppo.epochs_per_batch");
        }
        if !(1..=96).contains(&self.minibatch_size) {
            return Err("ppo.minibatch_size");
        }
        if !(self.entropy_coef >= 0.0 && self.entropy_coef.is_finite()) {
            return Err("ppo.entropy_coef");
        }
        if !(self.value_coef >= 0.0 && self.value_coef.is_finite()) {
            return Err("ppo.value_coef");
        }
        if !(self.max_grad_norm > 0.0) {
            return Err("ppo.max_grad_norm");
        }
        if self.hidden_width == 0 {
            return Err("ppo.hidden_width");
        }
        if self.checkpoint_every == 0 {
            return Err("ppo.checkpoint_every");
        }
        Ok(())
    }
}

/// Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..theta.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            theta[i] -= lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Loss terms of one minibatch, averaged over its samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MinibatchLoss {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Largest `|ratio − 1|` in the minibatch.
    pub max_ratio_deviation: f64,
}

/// Clipped-surrogate loss of the samples `batch` and, when `grad` is given,
/// its gradient with respect to `params.theta` (overwritten).
pub fn minibatch_loss(
    params: &PolicyParams,
    traj: &Trajectory,
    batch: &[usize],
    cfg: &PpoConfig,
    mut grad: Option<&mut [f64]>,
) -> Result<MinibatchLoss, PpoError> {
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let b = batch.len() as f64;
    let eps = cfg.clip_epsilon;
    let mut out = MinibatchLoss::default();
    for &t in batch {
        let x = &traj.states[t];
        let cache = params.forward_cached(x)?;
        let adv = traj.advantages[t];
        let log_ps: Vec<Vec<f64>> = cache.out.logits.iter().map(|z| log_softmax(z)).collect();
        let logp: f64 = log_ps
            .iter()
            .zip(&traj.actions[t])
            .map(|(lp, &a)| lp[a])
            .sum();
        let ratio = (logp - traj.log_probs[t]).exp();
        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        let unclipped = surr1 <= surr2;
        out.policy_loss -= surr1.min(surr2) / b;
        if (ratio - 1.0).abs() > eps {
            out.clip_fraction += 1.0 / b;
        }
        out.max_ratio_deviation = out.max_ratio_deviation.max((ratio - 1.0).abs());

        let mut head_entropy = Vec::with_capacity(log_ps.len());
        for lp in &log_ps {
            let h: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
            head_entropy.push(h);
            out.entropy += h / b;
        }
        let err = cache.out.value - traj.returns[t];
        out.value_loss += err * err / b;

        if let Some(g) = grad.as_deref_mut() {
            // d(-surrogate)/d logp
            let g_logp = if unclipped { -ratio * adv } else { 0.0 };
            let dlogits: Vec<Vec<f64>> = log_ps
                .iter()
                .zip(&traj.actions[t])
                .zip(&head_entropy)
                .map(|((lp, &a), &h)| {
                    lp.iter()
                        .enumerate()
                        .map(|(j, &l)| {
                            let p = l.exp();
                            let onehot = if j == a { 1.0 } else { 0.0 };
                            (g_logp * (onehot - p) + cfg.entropy_coef * p * (l + h)) / b
                        })
                        .collect()
                })
                .collect();
            let dvalue = 2.0 * cfg.value_coef * err / b;
            params.backward(x, &cache, &dlogits, dvalue, g);
        }
    }
    out.total = out.policy_loss + cfg.value_coef * out.value_loss - cfg.entropy_coef * out.entropy;
    Ok(out)
}

/// Summary of one `ppo_update` call.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Mean `(r − 1) − ln r` over the trajectory after the update.
    pub approx_kl: f64,
    /// Largest `|ratio − 1|` of the first minibatch of the first epoch.
    pub first_minibatch_ratio_deviation: f64,
    pub first_minibatch_clip_fraction: f64,
    pub minibatches: usize,
}

/// Runs the configured epochs of minibatch Adam steps on one finished
/// trajectory. On a non-finite gradient the parameters and optimizer state
/// are restored and an error is returned.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    opt: &mut Adam,
    traj: &Trajectory,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateDiagnostics, PpoError> {
    if traj.is_empty() {
        return Err(PpoError::EmptyTrajectory);
    }
    if traj.advantages.len() != traj.len() || traj.returns.len() != traj.len() {
        return Err(PpoError::IncompleteTrajectory);
    }
    let saved = (params.clone(), opt.clone());
    let mut diag = UpdateDiagnostics::default();
    let mut grad = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..traj.len()).collect();
    for _ in 0..cfg.epochs_per_batch {
        order.shuffle(rng);
        for batch in order.chunks(cfg.minibatch_size) {
            let loss = minibatch_loss(params, traj, batch, cfg, Some(&mut grad))?;
            if diag.minibatches == 0 {
                diag.first_minibatch_ratio_deviation = loss.max_ratio_deviation;
                diag.first_minibatch_clip_fraction = loss.clip_fraction;
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                *params = saved.0;
                *opt = saved.1;
                return Err(PpoError::NonFiniteGradient);
            }
            if norm > cfg.max_grad_norm {
                let s = cfg.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            opt.step(&mut params.theta, &grad, cfg.learning_rate);
            diag.policy_loss += loss.policy_loss;
            diag.value_loss += loss.value_loss;
            diag.entropy += loss.entropy;
            diag.clip_fraction += loss.clip_fraction;
            diag.minibatches += 1;
        }
    }
    let n = diag.minibatches as f64;
    diag.policy_loss /= n;
    diag.value_loss /= n;
    diag.entropy /= n;
    diag.clip_fraction /= n;
    diag.approx_kl = approx_kl(params, traj)?;
    if !params.is_finite() {
        *params = saved.0;
        *opt = saved.1;
        return Err(PpoError::NonFiniteGradient);
    }
    Ok(diag)
}

/// Mean `(r − 1) − ln r` of the trajectory's actions under `params`.
pub fn approx_kl(params: &PolicyParams, traj: &Trajectory) -> Result<f64, PpoError> {
    let mut kl = 0.0;
    for t in 0..traj.len() {
        let out = params.forward_cached(&traj.states[t])?.out;
        let logp = super::joint_log_prob(&out.logits, &traj.actions[t]);
        let log_ratio = logp - traj.log_probs[t];
        kl += log_ratio.exp_m1() - log_ratio;
    }
    Ok(kl / traj.len() as f64)
}
