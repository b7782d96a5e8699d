//! Fully connected ReLU network with a softmax output.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{softmax_in_place, sqrt};
use crate::rng::AuditRng;
use crate::scores::ModelOracle;
use crate::{Error, Result};

/// Layer `l` maps `layer_dims[l]` inputs to `layer_dims[l + 1]` outputs;
/// `weights[l]` is row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Gradient with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

fn check_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(Error::InvalidConfig("layer dims need an input and an output size, all positive".into()));
    }
    if *layer_dims.last().unwrap() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

impl MlpModel {
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        check_dims(layer_dims)?;
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights: layer_dims.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: layer_dims[1..].iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    /// He-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
    pub fn init(layer_dims: &[usize], rng: &mut AuditRng) -> Result<Self> {
        let mut model = Self::zeros(layer_dims)?;
        for (l, w) in model.weights.iter_mut().enumerate() {
            let bound = sqrt(6.0 / layer_dims[l] as f64);
            w.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
        }
        Ok(model)
    }

    pub fn from_parts(layer_dims: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>) -> Result<Self> {
        check_dims(&layer_dims)?;
        let layers = layer_dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::DimensionMismatch {
                expected: layers,
                found: weights.len().min(biases.len()),
            });
        }
        for l in 0..layers {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            if weights[l].len() != fan_in * fan_out {
                return Err(Error::DimensionMismatch {
                    expected: fan_in * fan_out,
                    found: weights[l].len(),
                });
            }
            if biases[l].len() != fan_out {
                return Err(Error::DimensionMismatch {
                    expected: fan_out,
                    found: biases[l].len(),
                });
            }
        }
        if !weights.iter().chain(&biases).flatten().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("model parameters must be finite".into()));
        }
        Ok(Self { layer_dims, weights, biases })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [Vec<f64>], &mut [Vec<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    pub fn zero_gradient(&self) -> MlpGradient {
        MlpGradient {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Activations of every layer; the last entry holds the probabilities.
    pub(crate) fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layer_dims.len());
        acts.push(x.to_vec());
        let last = self.num_layers() - 1;
        for l in 0..=last {
            let input = &acts[l];
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let w = &self.weights[l];
            let mut out: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + self.biases[l][o]
                })
                .collect();
            if l == last {
                softmax_in_place(&mut out);
            } else {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(self.activations(x).pop().unwrap())
    }

    /// Adds `scale * d(soft CE)/d(params)` for one example to `grad`.
    ///
    /// The logit gradient is `(sum t) p - t`, the exact derivative of
    /// `-sum_c t_c ln p_c`. Returns the probabilities.
    pub(crate) fn accumulate_gradient(&self, x: &[f64], target: &[f64], scale: f64, grad: &mut MlpGradient) -> Vec<f64> {
        let acts = self.activations(x);
        let probs = acts.last().unwrap();
        let mass: f64 = target.iter().sum();
        let mut delta: Vec<f64> = probs.iter().zip(target).map(|(p, t)| scale * (mass * p - t)).collect();
        for l in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let input = &acts[l];
            let gw = &mut grad.weights[l];
            for o in 0..fan_out {
                let d = delta[o];
                if d != 0.0 {
                    for (g, &a) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                grad.biases[l][o] += d;
            }
            if l > 0 {
                let w = &self.weights[l];
                let mut next = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d != 0.0 {
                        for (n, &wv) in next.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                            *n += d * wv;
                        }
                    }
                }
                // ReLU derivative, taken as 0 at 0.
                for (n, &a) in next.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
        }
        acts.into_iter().next_back().unwrap()
    }
}

impl ModelOracle for MlpModel {
    fn num_classes(&self) -> usize {
        MlpModel::num_classes(self)
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x)
    }
}

/// The model as a [`ModelOracle`] for Mixup scores.
pub fn model_oracle(model: &MlpModel) -> &dyn ModelOracle {
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::exp;
    use crate::rng;

    #[test]
    fn zero_model_is_uniform() {
        let m = MlpModel::zeros(&[4, 5, 3]).unwrap();
        let p = m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn huge_logits_do_not_overflow() {
        let m = MlpModel::from_parts(vec![1, 2], vec![vec![1000.0, 0.0]], vec![vec![0.0, 0.0]]).unwrap();
        let p = m.forward(&[1.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1] >= 0.0 && p[1] < 1e-300);
    }

    #[test]
    fn hand_set_two_layer_network() {
        // hidden = relu(W1 x + b1), logits = W2 hidden + b2
        let m = MlpModel::from_parts(
            vec![2, 2, 2],
            vec![vec![1.0, -1.0, 0.5, 2.0], vec![1.0, 0.0, -1.0, 3.0]],
            vec![vec![0.0, -1.0], vec![0.5, 0.0]],
        )
        .unwrap();
        let x = [2.0, 1.0];
        // h = relu(2 - 1, 1 + 2 - 1) = (1, 2); logits = (1 + 0.5, -1 + 6) = (1.5, 5)
        let (z0, z1) = (1.5f64, 5.0f64);
        let e0 = exp(z0 - z1);
        let expected = [e0 / (1.0 + e0), 1.0 / (1.0 + e0)];
        let p = m.forward(&x).unwrap();
        assert!((p[0] - expected[0]).abs() < 1e-15);
        assert!((p[1] - expected[1]).abs() < 1e-15);
        assert!((p[0] - 0.029_312_230_751_356_32).abs() < 1e-12);
    }

    #[test]
    fn outputs_sum_to_one_and_shapes_are_checked() {
        let mut r = rng::seeded(1);
        let m = MlpModel::init(&[8, 16, 16, 3], &mut r).unwrap();
        let p = m.forward(&[0.3; 8]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.forward(&[0.3; 7]).is_err());
        assert!(MlpModel::zeros(&[3]).is_err());
        assert!(MlpModel::zeros(&[3, 1]).is_err());
        assert!(MlpModel::from_parts(vec![2, 2], vec![vec![0.0; 3]], vec![vec![0.0; 2]]).is_err());
    }
}
