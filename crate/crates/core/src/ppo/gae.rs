use super::PpoError;

/// One episode of experience.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<usize>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    /// Normalized; filled by `finish`.
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Trajectory {
    pub fn push(
        &mut self,
        state: Vec<f64>,
        actions: Vec<usize>,
        log_prob: f64,
        reward: f64,
        value: f64,
        done: bool,
    ) {
        self.states.push(state);
        self.actions.push(actions);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.dones.last() == Some(&true)
    }

    /// Computes and stores advantages and returns.
    pub fn finish(&mut self, gamma: f64, lambda: f64) -> Result<(), PpoError> {
        let out = compute_gae(self, gamma, lambda)?;
        self.advantages = out.advantages;
        self.returns = out.returns;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaeOutput {
    /// Normalized to zero mean and unit variance.
    pub advantages: Vec<f64>,
    /// `raw advantage + value`, unnormalized.
    pub returns: Vec<f64>,
    pub raw_advantages: Vec<f64>,
}

/// Generalized advantage estimation over one complete episode.
pub fn compute_gae(traj: &Trajectory, gamma: f64, lambda: f64) -> Result<GaeOutput, PpoError> {
    let n = traj.len();
    if n == 0 {
        return Err(PpoError::EmptyTrajectory);
    }
    if !traj.is_complete() {
        return Err(PpoError::IncompleteTrajectory);
    }
    let mut raw = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let (next_value, live) = if traj.dones[t] {
            (0.0, 0.0)
        } else {
            (traj.values[t + 1], 1.0)
        };
        let delta = traj.rewards[t] + gamma * next_value * live - traj.values[t];
        acc = delta + gamma * lambda * live * acc;
        raw[t] = acc;
    }
    let returns: Vec<f64> = raw.iter().zip(&traj.values).map(|(a, v)| a + v).collect();
    Ok(GaeOutput {
        advantages: normalize(&raw),
        returns,
        raw_advantages: raw,
    })
}

/// Zero-mean, unit-variance rescaling.
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    xs.iter().map(|x| (x - mean) / (std + 1e-8)).collect()
}
