//! Shallow fusion network: `k(k−1) → 8 → 4 → k`, ReLU hidden layers,
//! softmax output, trained by full-batch gradient descent on cross-entropy.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const HIDDEN1: usize = 8;
pub const HIDDEN2: usize = 4;

/// Fully connected layer; `weights` is row-major `inputs × outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn he<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive std");
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| normal.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (i, xi) in x.iter().enumerate() {
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
        out
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionNet {
    pub k: usize,
    pub layers: [Layer; 3],
    /// Mean training loss after each epoch.
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Independent initializations tried by [`FusionNet::fit`].
    pub restarts: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            lr: 0.05,
            restarts: 5,
        }
    }
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

struct Activations {
    x: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    z3: Vec<f64>,
    p: Vec<f64>,
}

impl FusionNet {
    pub fn input_len(k: usize) -> usize {
        k * (k - 1)
    }

    pub fn zeros(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            k,
            layers: [
                Layer::zeros(Self::input_len(k), HIDDEN1),
                Layer::zeros(HIDDEN1, HIDDEN2),
                Layer::zeros(HIDDEN2, k),
            ],
            loss_curve: Vec::new(),
        })
    }

    /// He-scaled Gaussian weights, zero biases.
    pub fn init(k: usize, seed_value: u64) -> Result<Self> {
        check_k(k)?;
        let mut rng = seed::rng(seed::derive(seed_value, seed::stage::FUSION_INIT));
        Ok(Self {
            k,
            layers: [
                Layer::he(Self::input_len(k), HIDDEN1, &mut rng),
                Layer::he(HIDDEN1, HIDDEN2, &mut rng),
                Layer::he(HIDDEN2, k, &mut rng),
            ],
            loss_curve: Vec::new(),
        })
    }

    fn activations(&self, d: &[f64]) -> Result<Activations> {
        if d.len() != Self::input_len(self.k) {
            return Err(Error::invalid(format!(
                "fusion input must have length {}, got {}",
                Self::input_len(self.k),
                d.len()
            )));
        }
        let z1 = self.layers[0].forward(d);
        let a1 = relu(z1.clone());
        let z2 = self.layers[1].forward(&a1);
        let a2 = relu(z2.clone());
        let z3 = self.layers[2].forward(&a2);
        if z3.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite fusion-net activation"));
        }
        Ok(Activations {
            x: d.to_vec(),
            z1,
            a1,
            z2,
            a2,
            p: softmax(&z3),
            z3,
        })
    }

    /// Output-layer pre-activations.
    pub fn logits(&self, d: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(d)?.z3)
    }

    pub fn forward(&self, d: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(d)?.p)
    }

    pub fn predict(&self, d: &[f64]) -> Result<usize> {
        let p = self.forward(d)?;
        Ok(argmax(&p))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.bias);
        }
        v
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                p.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, inputs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        check_batch(self.k, inputs, labels)?;
        let mut total = 0.0;
        for (x, &y) in inputs.iter().zip(labels) {
            let p = self.forward(x)?;
            total -= p[y].max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / inputs.len() as f64)
    }

    /// Mean cross-entropy and its gradient in [`FusionNet::params`] order.
    pub fn loss_and_gradient(
        &self,
        inputs: &[Vec<f64>],
        labels: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        check_batch(self.k, inputs, labels)?;
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.inputs, l.outputs))
            .collect();
        let mut total = 0.0;
        for (x, &y) in inputs.iter().zip(labels) {
            let a = self.activations(x)?;
            total -= a.p[y].max(f64::MIN_POSITIVE).ln();
            let mut delta3 = a.p.clone();
            delta3[y] -= 1.0;
            let delta2 = backprop(&self.layers[2], &mut grads[2], &a.a2, &delta3, &a.z2);
            let delta1 = backprop(&self.layers[1], &mut grads[1], &a.a1, &delta2, &a.z1);
            accumulate(&mut grads[0], &a.x, &delta1);
        }
        let n = inputs.len() as f64;
        let mut g = Vec::with_capacity(self.param_count());
        for l in &grads {
            g.extend(l.weights.iter().map(|v| v / n));
            g.extend(l.bias.iter().map(|v| v / n));
        }
        Ok((total / n, g))
    }

    /// Full-batch gradient descent; appends the loss of each epoch to
    /// `loss_curve`.
    pub fn train(
        mut self,
        inputs: &[Vec<f64>],
        labels: &[usize],
        config: &FusionConfig,
    ) -> Result<Self> {
        if !(config.lr > 0.0 && config.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                config.lr
            )));
        }
        if inputs.is_empty() {
            return Err(Error::invalid("fusion training set is empty"));
        }
        check_batch(self.k, inputs, labels)?;
        let mut p = self.params();
        for epoch in 0..config.epochs {
            let (loss, g) = self.loss_and_gradient(inputs, labels)?;
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::numerical(format!(
                    "fusion training diverged at epoch {epoch} (loss {loss}); lower the learning rate"
                )));
            }
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= config.lr * gi;
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::numerical(format!(
                    "fusion parameters overflowed at epoch {epoch}; lower the learning rate"
                )));
            }
            self.set_params(&p)?;
            self.loss_curve.push(loss);
        }
        Ok(self)
    }
}

impl FusionNet {
    /// Trains `config.restarts` nets (the first from `init(k, seed)`, the rest
    /// from derived seeds) and keeps the one with the lowest final training
    /// loss. The narrow hidden layers make single runs prone to stalling with
    /// dead units.
    pub fn fit(
        k: usize,
        inputs: &[Vec<f64>],
        labels: &[usize],
        config: &FusionConfig,
        seed_value: u64,
    ) -> Result<Self> {
        let restart_base = seed::derive(seed_value, seed::stage::FUSION_RESTART);
        let mut best: Option<(f64, FusionNet)> = None;
        for r in 0..config.restarts.max(1) as u64 {
            let s = if r == 0 {
                seed_value
            } else {
                seed::derive(restart_base, r)
            };
            let net = FusionNet::init(k, s)?.train(inputs, labels, config)?;
            let loss = net.loss(inputs, labels)?;
            if best.as_ref().is_none_or(|(b, _)| loss < *b) {
                best = Some((loss, net));
            }
        }
        Ok(best.expect("at least one restart").1)
    }
}

/// Accumulates the layer gradient and returns the delta of the previous
/// layer's pre-activation.
fn backprop(
    layer: &Layer,
    grad: &mut Layer,
    input: &[f64],
    delta: &[f64],
    prev_z: &[f64],
) -> Vec<f64> {
    accumulate(grad, input, delta);
    (0..layer.inputs)
        .map(|i| {
            if prev_z[i] <= 0.0 {
                return 0.0;
            }
            let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
            row.iter().zip(delta).map(|(w, d)| w * d).sum()
        })
        .collect()
}

fn accumulate(grad: &mut Layer, input: &[f64], delta: &[f64]) {
    for (i, xi) in input.iter().enumerate() {
        let row = &mut grad.weights[i * grad.outputs..(i + 1) * grad.outputs];
        for (g, d) in row.iter_mut().zip(delta) {
            *g += xi * d;
        }
    }
    for (b, d) in grad.bias.iter_mut().zip(delta) {
        *b += d;
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(format!("fusion net needs k >= 2, got {k}")));
    }
    Ok(())
}

fn check_batch(k: usize, inputs: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if inputs.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!(
            "label {l} out of range for k = {k}"
        )));
    }
    Ok(())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn fusion_forward(net: &FusionNet, d: &[f64]) -> Result<Vec<f64>> {
    net.forward(d)
}

pub fn fusion_train(
    net: FusionNet,
    inputs: &[Vec<f64>],
    labels: &[usize],
    config: &FusionConfig,
) -> Result<FusionNet> {
    net.train(inputs, labels, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn random_batch(k: usize, n: usize, seed_value: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = seed::rng(seed_value);
        let xs = (0..n)
            .map(|_| {
                (0..k * (k - 1))
                    .map(|_| rng.sample(StandardNormal))
                    .collect()
            })
            .collect();
        let ys = (0..n).map(|_| rng.random_range(0..k)).collect();
        (xs, ys)
    }

    #[test]
    fn shapes() {
        let net = FusionNet::init(6, 1).unwrap();
        assert_eq!(net.layers[0].weights.len(), 30 * 8);
        assert_eq!(net.layers[1].weights.len(), 8 * 4);
        assert_eq!(net.layers[2].weights.len(), 4 * 6);
        assert_eq!(net.layers[2].bias.len(), 6);
        assert!(FusionNet::init(1, 1).is_err());
    }

    #[test]
    fn zero_net_is_uniform() {
        let net = FusionNet::zeros(4).unwrap();
        let p = net.forward(&[0.3; 12]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(net.forward(&[0.0; 3]).is_err());
    }

    #[test]
    fn softmax_shift_invariance() {
        let z = [0.5, -1.0, 2.0, 0.0];
        let a = softmax(&z);
        let b = softmax(&z.map(|v| v + 123.4));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut net = FusionNet::init(4, 2).unwrap();
        let x = vec![0.7; 12];
        let before = net.predict(&x).unwrap();
        for b in &mut net.layers[2].bias {
            *b += 5.0;
        }
        assert_eq!(net.predict(&x).unwrap(), before);
    }

    #[test]
    fn probability_vectors() {
        let mut rng = seed::rng(3);
        for draw in 0..1000 {
            let k = 2 + draw % 5;
            let net = FusionNet::init(k, draw as u64).unwrap();
            let x: Vec<f64> = (0..k * (k - 1))
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let p = net.forward(&x).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (k, s) in [(2, 10), (3, 11), (6, 12)] {
            let net = FusionNet::init(k, s).unwrap();
            let (xs, ys) = random_batch(k, 7, s + 100);
            let (_, g) = net.loss_and_gradient(&xs, &ys).unwrap();
            let p = net.params();
            let h = 1e-5;
            let mut probe = net.clone();
            for i in 0..p.len() {
                let mut q = p.clone();
                q[i] = p[i] + h;
                probe.set_params(&q).unwrap();
                let up = probe.loss(&xs, &ys).unwrap();
                q[i] = p[i] - h;
                probe.set_params(&q).unwrap();
                let down = probe.loss(&xs, &ys).unwrap();
                let fd = (up - down) / (2.0 * h);
                let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
                assert!(rel <= 1e-4, "k={k} param {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn separable_data_is_learned() {
        let mut rng = seed::rng(8);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let y = i % 2;
            let s = if y == 0 { 1.0 } else { -1.0 };
            xs.push(vec![
                s * (1.0 + rng.random_range(0.0..1.0)),
                -s * rng.random_range(0.5..1.5),
            ]);
            ys.push(y);
        }
        let net = FusionNet::init(2, 5)
            .unwrap()
            .train(&xs, &ys, &FusionConfig::default())
            .unwrap();
        assert!(*net.loss_curve.last().unwrap() < 0.05);
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(net.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let net = FusionNet::init(3, 4).unwrap();
        let (xs, ys) = random_batch(3, 5, 6);
        let cfg = FusionConfig {
            epochs: 0,
            ..Default::default()
        };
        let trained = net.clone().train(&xs, &ys, &cfg).unwrap();
        assert_eq!(trained, net);
    }

    #[test]
    fn fit_is_no_worse_than_first_restart() {
        let (xs, ys) = random_batch(3, 30, 8);
        let cfg = FusionConfig {
            epochs: 100,
            restarts: 3,
            ..Default::default()
        };
        let single = FusionNet::init(3, 2)
            .unwrap()
            .train(&xs, &ys, &cfg)
            .unwrap();
        let best = FusionNet::fit(3, &xs, &ys, &cfg, 2).unwrap();
        assert!(best.loss(&xs, &ys).unwrap() <= single.loss(&xs, &ys).unwrap());
        assert_eq!(best, FusionNet::fit(3, &xs, &ys, &cfg, 2).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let (xs, ys) = random_batch(3, 5, 7);
        let xs: Vec<Vec<f64>> = xs
            .into_iter()
            .map(|r| r.into_iter().map(|v| v * 1e200).collect())
            .collect();
        let cfg = FusionConfig {
            epochs: 50,
            lr: 1e200,
            ..Default::default()
        };
        let err = FusionNet::init(3, 4)
            .unwrap()
            .train(&xs, &ys, &cfg)
            .unwrap_err();
        assert!(err.is_numerical());
    }
}
