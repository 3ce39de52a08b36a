use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::env::ObsNormalization;
use crate::fleet::TACTIC_COUNT;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Straight-from-the-definition advantage: discounted sum of TD residuals.
fn gae_oracle(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let delta: Vec<f64> = (0..n)
        .map(|t| {
            let next = if t + 1 < n { values[t + 1] } else { 0.0 };
            rewards[t] + gamma * next - values[t]
        })
        .collect();
    (0..n)
        .map(|t| {
            (t..n)
                .map(|k| (gamma * lambda).powi((k - t) as i32) * delta[k])
                .sum()
        })
        .collect()
}

fn episode(rewards: &[f64], values: &[f64]) -> Trajectory {
    let mut tr = Trajectory::default();
    let n = rewards.len();
    for t in 0..n {
        tr.push(vec![0.0], vec![0], 0.0, rewards[t], values[t], t + 1 == n);
    }
    tr
}

#[test]
fn gae_single_step() {
    let out = compute_gae(&episode(&[0.3], &[0.1]), 0.99, 0.95).unwrap();
    assert!((out.raw_advantages[0] - 0.2).abs() < 1e-15);
    assert!((out.returns[0] - 0.3).abs() < 1e-15);
    assert_eq!(out.advantages, vec![0.0]);
}

#[test]
fn gae_lambda_zero_is_td_residual() {
    let r = [0.1, -0.2, 0.05];
    let v = [0.5, 0.4, 0.3];
    let out = compute_gae(&episode(&r, &v), 0.9, 0.0).unwrap();
    let expected = [0.1 + 0.9 * 0.4 - 0.5, -0.2 + 0.9 * 0.3 - 0.4, 0.05 - 0.3];
    for (a, e) in out.raw_advantages.iter().zip(expected) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn gae_lambda_one_is_monte_carlo() {
    let r = [0.1, -0.2, 0.05, 0.3];
    let v = [0.5, 0.4, 0.3, 0.2];
    let out = compute_gae(&episode(&r, &v), 1.0, 1.0).unwrap();
    for t in 0..4 {
        let mc: f64 = r[t..].iter().sum();
        assert!((out.raw_advantages[t] - (mc - v[t])).abs() < 1e-12);
        assert!((out.returns[t] - mc).abs() < 1e-12);
    }
}

#[test]
fn gae_rejects_incomplete_and_empty() {
    let mut tr = episode(&[0.1, 0.2], &[0.0, 0.0]);
    tr.dones[1] = false;
    assert_eq!(
        compute_gae(&tr, 0.99, 0.95),
        Err(PpoError::IncompleteTrajectory)
    );
    assert_eq!(
        compute_gae(&Trajectory::default(), 0.99, 0.95),
        Err(PpoError::EmptyTrajectory)
    );
}

proptest! {
    #[test]
    fn gae_matches_oracle(
        data in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..96),
        gamma in 0.5f64..1.0,
        lambda in 0.0f64..1.0,
    ) {
        let (r, v): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
        let out = compute_gae(&episode(&r, &v), gamma, lambda).unwrap();
        let oracle = gae_oracle(&r, &v, gamma, lambda);
        for (a, o) in out.raw_advantages.iter().zip(&oracle) {
            prop_assert!((a - o).abs() < 1e-9);
        }
        let n = out.advantages.len() as f64;
        let mean = out.advantages.iter().sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
    }
}

#[test]
fn forward_shapes_and_dimension_check() {
    let p = PolicyParams::init(28, 64, 2, &mut rng(1));
    let out = policy_forward(&p, &[0.5; 28]).unwrap();
    assert_eq!(out.logits.len(), 2);
    assert!(out.logits.iter().all(|h| h.len() == TACTIC_COUNT));
    assert!(out.value.is_finite());
    assert_eq!(
        policy_forward(&p, &[0.5; 27]),
        Err(PpoError::DimensionMismatch {
            expected: 28,
            got: 27
        })
    );
}

#[test]
fn init_rows_are_orthogonal() {
    let p = PolicyParams::init(10, 16, 1, &mut rng(2));
    let l = p.layers()[1];
    let w = &p.theta[l.offset..l.offset + 16 * 16];
    for i in 0..16 {
        for j in 0..16 {
            let d: f64 = (0..16).map(|k| w[i * 16 + k] * w[j * 16 + k]).sum();
            let e = if i == j { 2.0 } else { 0.0 };
            assert!((d - e).abs() < 1e-9, "{i} {j} {d}");
        }
    }
    // initial policy is close to uniform
    let out = policy_forward(&p, &[1.0; 10]).unwrap();
    for pr in softmax(&out.logits[0]) {
        assert!((pr - 1.0 / 24.0).abs() < 0.01);
    }
}

#[test]
fn saturated_logit_is_always_chosen() {
    let mut head = vec![0.0; TACTIC_COUNT];
    head[5] = 1e6;
    let logits = vec![head.clone(), head];
    let mut r = rng(3);
    for _ in 0..1000 {
        let (a, lp) = sample_actions(&logits, &mut r).unwrap();
        assert_eq!(a, vec![5, 5]);
        assert!(lp.abs() < 1e-12);
    }
}

#[test]
fn sample_rejects_nan_logits() {
    let mut head = vec![0.0; TACTIC_COUNT];
    head[0] = f64::NAN;
    assert_eq!(
        sample_actions(&[head], &mut rng(0)),
        Err(PpoError::NonFiniteLogits)
    );
}

#[test]
fn sampling_frequencies_follow_softmax() {
    let head: Vec<f64> = (0..TACTIC_COUNT).map(|j| (j % 4) as f64 * 0.5).collect();
    let probs = softmax(&head);
    let n = 200_000;
    let mut counts = [0usize; TACTIC_COUNT];
    let mut r = rng(4);
    for _ in 0..n {
        counts[sample_actions(std::slice::from_ref(&head), &mut r)
            .unwrap()
            .0[0]] += 1;
    }
    for j in 0..TACTIC_COUNT {
        let f = counts[j] as f64 / n as f64;
        let sigma = (probs[j] * (1.0 - probs[j]) / n as f64).sqrt();
        assert!(
            (f - probs[j]).abs() < 5.0 * sigma,
            "{j}: {f} vs {}",
            probs[j]
        );
    }
}

#[test]
fn argmax_breaks_ties_low() {
    let mut head = vec![0.0; TACTIC_COUNT];
    head[3] = 2.0;
    head[9] = 2.0;
    assert_eq!(argmax_actions(&[head, vec![1.0; TACTIC_COUNT]]), vec![3, 0]);
}

/// A random trajectory on a small network whose behaviour log-probs are
/// perturbed so that some ratios differ from one.
fn random_batch(p: &PolicyParams, n: usize, r: &mut ChaCha8Rng) -> Trajectory {
    let mut tr = Trajectory::default();
    for t in 0..n {
        let x: Vec<f64> = (0..p.input_dim)
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        let out = policy_forward(p, &x).unwrap();
        let (a, lp) = sample_actions(&out.logits, r).unwrap();
        let old = lp + r.random_range(-0.1..0.1);
        tr.push(x, a, old, r.random_range(-0.2..0.2), out.value, t + 1 == n);
    }
    tr.finish(0.99, 0.95).unwrap();
    tr
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut r = rng(5);
    let p = PolicyParams::init(12, 16, 2, &mut r);
    let tr = random_batch(&p, 16, &mut r);
    let cfg = PpoConfig::default();
    let batch: Vec<usize> = (0..16).collect();
    let mut grad = vec![0.0; p.len()];
    minibatch_loss(&p, &tr, &batch, &cfg, Some(&mut grad)).unwrap();
    let h = 1e-6;
    for _ in 0..100 {
        let i = r.random_range(0..p.len());
        let mut plus = p.clone();
        plus.theta[i] += h;
        let mut minus = p.clone();
        minus.theta[i] -= h;
        let fp = minibatch_loss(&plus, &tr, &batch, &cfg, None)
            .unwrap()
            .total;
        let fm = minibatch_loss(&minus, &tr, &batch, &cfg, None)
            .unwrap()
            .total;
        let numeric = (fp - fm) / (2.0 * h);
        let err = (grad[i] - numeric).abs() / (grad[i].abs() + numeric.abs()).max(1e-7);
        assert!(err < 1e-4, "param {i}: {} vs {numeric}", grad[i]);
    }
}

#[test]
fn zero_advantage_leaves_policy_heads_untouched() {
    let mut r = rng(6);
    let mut p = PolicyParams::init(8, 16, 2, &mut r);
    let mut tr = random_batch(&p, 40, &mut r);
    tr.advantages.iter_mut().for_each(|a| *a = 0.0);
    let cfg = PpoConfig {
        entropy_coef: 0.0,
        ..PpoConfig::default()
    };
    let before = p.clone();
    let mut opt = Adam::new(p.len());
    ppo_update(&mut p, &mut opt, &tr, &cfg, &mut r).unwrap();
    let heads = p.policy_head_range();
    assert_eq!(p.theta[heads.clone()], before.theta[heads]);
    // the value head still learns
    assert_ne!(p.theta, before.theta);
}

#[test]
fn first_minibatch_ratios_are_one_on_fresh_rollout() {
    let mut r = rng(7);
    let mut p = PolicyParams::init(8, 16, 2, &mut r);
    let mut tr = Trajectory::default();
    for t in 0..50 {
        let x: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let out = policy_forward(&p, &x).unwrap();
        let (a, lp) = sample_actions(&out.logits, &mut r).unwrap();
        tr.push(x, a, lp, r.random_range(-0.1..0.1), out.value, t == 49);
    }
    tr.finish(0.99, 0.95).unwrap();
    let mut opt = Adam::new(p.len());
    let d = ppo_update(&mut p, &mut opt, &tr, &PpoConfig::default(), &mut r).unwrap();
    assert!(d.first_minibatch_ratio_deviation < 1e-12);
    assert_eq!(d.first_minibatch_clip_fraction, 0.0);
    assert!(d.approx_kl >= 0.0 && d.approx_kl < 0.05, "{}", d.approx_kl);
    assert_eq!(d.minibatches, 4 * 2);
}

#[test]
fn non_finite_gradient_restores_parameters() {
    let mut r = rng(8);
    let mut p = PolicyParams::init(4, 8, 1, &mut r);
    let mut tr = random_batch(&p, 10, &mut r);
    tr.returns[3] = f64::INFINITY;
    let before = p.clone();
    let mut opt = Adam::new(p.len());
    let err = ppo_update(&mut p, &mut opt, &tr, &PpoConfig::default(), &mut r);
    assert_eq!(err, Err(PpoError::NonFiniteGradient));
    assert_eq!(p, before);
    assert_eq!(opt, Adam::new(p.len()));
}

#[test]
fn update_requires_finished_trajectory() {
    let mut r = rng(9);
    let mut p = PolicyParams::init(4, 8, 1, &mut r);
    let mut tr = random_batch(&p, 5, &mut r);
    tr.advantages.clear();
    let mut opt = Adam::new(p.len());
    assert_eq!(
        ppo_update(&mut p, &mut opt, &tr, &PpoConfig::default(), &mut r),
        Err(PpoError::IncompleteTrajectory)
    );
}

#[test]
fn config_validation() {
    assert!(PpoConfig::default().check().is_ok());
    let bad = PpoConfig {
        clip_epsilon: 0.0,
        ..PpoConfig::default()
    };
    assert_eq!(bad.check(), Err("ppo.clip_epsilon"));
    let bad = PpoConfig {
        minibatch_size: 0,
        ..PpoConfig::default()
    };
    assert_eq!(bad.check(), Err("ppo.minibatch_size"));
}

fn norm() -> ObsNormalization {
    ObsNormalization::from_slice(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0])
        .unwrap()
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let ck = Checkpoint {
        params: PolicyParams::init(28, 64, 2, &mut rng(10)),
        norm: norm(),
    };
    let bytes = ck.to_bytes();
    assert_eq!(&bytes[..4], b"EMBR");
    let back = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back, ck);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.bin");
    ck.save(&path).unwrap();
    assert_eq!(Checkpoint::load(&path).unwrap(), ck);
}

#[test]
fn checkpoint_rejects_corruption() {
    let ck = Checkpoint {
        params: PolicyParams::init(6, 4, 1, &mut rng(11)),
        norm: norm(),
    };
    let mut bytes = ck.to_bytes();
    assert!(matches!(
        Checkpoint::from_bytes(&bytes[..bytes.len() - 3]),
        Err(CheckpointError::Truncated)
    ));
    bytes[4] = 9;
    assert!(matches!(
        Checkpoint::from_bytes(&bytes),
        Err(CheckpointError::UnsupportedVersion(9))
    ));
    bytes[0] = b'X';
    assert!(matches!(
        Checkpoint::from_bytes(&bytes),
        Err(CheckpointError::BadMagic)
    ));
}
