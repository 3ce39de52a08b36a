//! Shared-trunk actor-critic MLP with one categorical head per aircraft.

use rand::Rng;
use rand_distr::StandardNormal;

use super::PpoError;
use crate::fleet::TACTIC_COUNT;

/// Flat parameter vector plus its layer layout.
///
/// Layer order: trunk 1 (input → hidden), trunk 2 (hidden → hidden), one
/// policy head per aircraft (hidden → 24), value head (hidden → 1). Each
/// layer stores its weight matrix row-major (`out × in`) then its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub fleet_size: usize,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Offset of the weight block in `theta`; the bias follows it.
    pub offset: usize,
}

impl Layer {
    fn w(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }
    fn b(&self) -> std::ops::Range<usize> {
        let s = self.offset + self.inputs * self.outputs;
        s..s + self.outputs
    }
    fn len(&self) -> usize {
        (self.inputs + 1) * self.outputs
    }
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    /// `[fleet_size][24]`.
    pub logits: Vec<Vec<f64>>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub out: PolicyOutput,
}

pub fn layer_layout(input_dim: usize, hidden: usize, fleet_size: usize) -> Vec<Layer> {
    let mut dims = vec![(input_dim, hidden), (hidden, hidden)];
    dims.extend(std::iter::repeat_n((hidden, TACTIC_COUNT), fleet_size));
    dims.push((hidden, 1));
    let mut offset = 0;
    dims.into_iter()
        .map(|(inputs, outputs)| {
            let l = Layer {
                inputs,
                outputs,
                offset,
            };
            offset += l.len();
            l
        })
        .collect()
}

fn dense(theta: &[f64], l: &Layer, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let w = &theta[l.w()];
    let b = &theta[l.b()];
    for o in 0..l.outputs {
        let row = &w[o * l.inputs..(o + 1) * l.inputs];
        out.push(b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
    }
}

impl PolicyParams {
    pub fn zeros(input_dim: usize, hidden: usize, fleet_size: usize) -> Self {
        let n: usize = layer_layout(input_dim, hidden, fleet_size)
            .iter()
            .map(Layer::len)
            .sum();
        PolicyParams {
            input_dim,
            hidden,
            fleet_size,
            theta: vec![0.0; n],
        }
    }

    /// Orthogonal initialization: gain √2 on the trunk, 0.01 on policy heads
    /// (near-uniform initial policy) and 1 on the value head; zero biases.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        fleet_size: usize,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(input_dim, hidden, fleet_size);
        let layers = p.layers();
        let last = layers.len() - 1;
        for (k, l) in layers.iter().enumerate() {
            let gain = match k {
                0 | 1 => std::f64::consts::SQRT_2,
                k if k == last => 1.0,
                _ => 0.01,
            };
            let w = orthogonal(l.outputs, l.inputs, gain, rng);
            p.theta[l.w()].copy_from_slice(&w);
        }
        p
    }

    pub fn layers(&self) -> Vec<Layer> {
        layer_layout(self.input_dim, self.hidden, self.fleet_size)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Index range of policy-head parameters (all heads).
    pub fn policy_head_range(&self) -> std::ops::Range<usize> {
        let layers = self.layers();
        let first = layers[2].offset;
        let value = layers[layers.len() - 1].offset;
        first..value
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }

    pub(crate) fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, PpoError> {
        if x.len() != self.input_dim {
            return Err(PpoError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let layers = self.layers();
        let mut h1 = Vec::with_capacity(self.hidden);
        dense(&self.theta, &layers[0], x, &mut h1);
        h1.iter_mut().for_each(|v| *v = v.tanh());
        let mut h2 = Vec::with_capacity(self.hidden);
        dense(&self.theta, &layers[1], &h1, &mut h2);
        h2.iter_mut().for_each(|v| *v = v.tanh());
        let mut logits = Vec::with_capacity(self.fleet_size);
        for l in &layers[2..2 + self.fleet_size] {
            let mut z = Vec::with_capacity(TACTIC_COUNT);
            dense(&self.theta, l, &h2, &mut z);
            logits.push(z);
        }
        let mut v = Vec::with_capacity(1);
        dense(&self.theta, &layers[layers.len() - 1], &h2, &mut v);
        Ok(ForwardCache {
            h1,
            h2,
            out: PolicyOutput {
                logits,
                value: v[0],
            },
        })
    }

    /// Accumulates into `grad` the gradient given output sensitivities.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        cache: &ForwardCache,
        dlogits: &[Vec<f64>],
        dvalue: f64,
        grad: &mut [f64],
    ) {
        let layers = self.layers();
        let h = self.hidden;
        let mut dh2 = vec![0.0; h];

        let mut head_back = |l: &Layer, dz: &[f64], grad: &mut [f64]| {
            let w = &self.theta[l.w()];
            for (o, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let gw = &mut grad[l.offset + o * l.inputs..l.offset + (o + 1) * l.inputs];
                for (g, &a) in gw.iter_mut().zip(&cache.h2) {
                    *g += d * a;
                }
                grad[l.b().start + o] += d;
                for (dh, &wv) in dh2.iter_mut().zip(&w[o * l.inputs..(o + 1) * l.inputs]) {
                    *dh += d * wv;
                }
            }
        };
        for (l, dz) in layers[2..2 + self.fleet_size].iter().zip(dlogits) {
            head_back(l, dz, grad);
        }
        head_back(&layers[layers.len() - 1], &[dvalue], grad);

        let dz2: Vec<f64> = dh2
            .iter()
            .zip(&cache.h2)
            .map(|(d, a)| d * (1.0 - a * a))
            .collect();
        let l2 = &layers[1];
        let mut dh1 = vec![0.0; h];
        {
            let w = &self.theta[l2.w()];
            for (o, &d) in dz2.iter().enumerate() {
                let row = o * l2.inputs;
                for i in 0..l2.inputs {
                    grad[l2.offset + row + i] += d * cache.h1[i];
                    dh1[i] += d * w[row + i];
                }
                grad[l2.b().start + o] += d;
            }
        }
        let l1 = &layers[0];
        for o in 0..h {
            let d = dh1[o] * (1.0 - cache.h1[o] * cache.h1[o]);
            let row = l1.offset + o * l1.inputs;
            for (g, &xi) in grad[row..row + l1.inputs].iter_mut().zip(x) {
                *g += d * xi;
            }
            grad[l1.b().start + o] += d;
        }
    }
}

/// Random `rows × cols` matrix with orthonormal rows (or columns, whichever
/// is the smaller set), scaled by `gain`.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let (n, m, transpose) = if rows <= cols {
        (rows, cols, false)
    } else {
        (cols, rows, true)
    };
    // n vectors of length m, Gram-Schmidt orthonormalized
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    while vs.len() < n {
        let mut v: Vec<f64> = (0..m)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        for u in &vs {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            vs.push(v);
        }
    }
    let mut w = vec![0.0; rows * cols];
    for (k, v) in vs.iter().enumerate() {
        for (j, &a) in v.iter().enumerate() {
            let (r, c) = if transpose { (j, k) } else { (k, j) };
            w[r * cols + c] = gain * a;
        }
    }
    w
}

pub fn policy_forward(params: &PolicyParams, state: &[f64]) -> Result<PolicyOutput, PpoError> {
    Ok(params.forward_cached(state)?.out)
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Draws one action per head; returns the actions and their joint log-probability.
pub fn sample_actions<R: Rng + ?Sized>(
    logits: &[Vec<f64>],
    rng: &mut R,
) -> Result<(Vec<usize>, f64), PpoError> {
    if logits.iter().flatten().any(|z| !z.is_finite()) {
        return Err(PpoError::NonFiniteLogits);
    }
    let mut actions = Vec::with_capacity(logits.len());
    let mut log_prob = 0.0;
    for head in logits {
        let lp = log_softmax(head);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (j, l) in lp.iter().enumerate() {
            let p = l.exp();
            if p <= 0.0 {
                continue;
            }
            acc += p;
            chosen = Some(j);
            if u < acc {
                break;
            }
        }
        let j = chosen.expect("softmax has positive mass");
        actions.push(j);
        log_prob += lp[j];
    }
    Ok((actions, log_prob))
}

/// Most likely action of each head, lowest index on ties.
pub fn argmax_actions(logits: &[Vec<f64>]) -> Vec<usize> {
    logits
        .iter()
        .map(|head| {
            head.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                    if v > bv {
                        (i, v)
                    } else {
                        (bi, bv)
                    }
                })
                .0
        })
        .collect()
}

/// Joint log-probability of `actions` under `logits`.
pub fn joint_log_prob(logits: &[Vec<f64>], actions: &[usize]) -> f64 {
    logits
        .iter()
        .zip(actions)
        .map(|(head, &a)| log_softmax(head)[a])
        .sum()
}
