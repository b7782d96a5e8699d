//! Minibatch SGD for the audit targets: plain cross-entropy, Mixup and
//! RelaxLoss.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpGradient, MlpModel};
use super::synth::RawDataset;
use crate::math::{argmax, clamped_ln};
use crate::rng::{self, AuditRng};
use crate::scores::{soft_cross_entropy, soft_label};
use crate::{Error, Result, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum TrainMethod {
    Vanilla,
    Mixup,
    RelaxLoss { alpha: f64, mu: f64 },
}

impl TrainMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TrainMethod::Vanilla => "vanilla",
            TrainMethod::Mixup => "mixup",
            TrainMethod::RelaxLoss { .. } => "relaxloss",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(flatten)]
    pub method: TrainMethod,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: TrainMethod::Vanilla,
            hidden: vec![64],
            epochs: 300,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning rate must be finite and >= 0");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if let TrainMethod::RelaxLoss { alpha, mu } = self.method {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return bad("relaxloss alpha must be finite and >= 0");
            }
            if !(mu > 0.0 && mu <= 1.0) {
                return bad("relaxloss mu must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

/// One term of a batch loss: `weight * softCE(f(x), target)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedExample {
    pub x: Vec<f64>,
    pub target: Vec<f64>,
    pub weight: f64,
}

fn one_hot(classes: usize, label: usize) -> Vec<f64> {
    let mut t = vec![0.0; classes];
    t[label] = 1.0;
    t
}

/// Mean weighted loss over `batch` and its gradient.
pub fn batch_loss_and_gradient(model: &MlpModel, batch: &[WeightedExample]) -> (f64, MlpGradient) {
    let mut grad = model.zero_gradient();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for ex in batch {
        let probs = model.accumulate_gradient(&ex.x, &ex.target, scale * ex.weight, &mut grad);
        loss += scale * ex.weight * soft_cross_entropy(&probs, &ex.target);
    }
    (loss, grad)
}

/// Mean weighted loss over `batch` without gradients.
pub fn batch_loss(model: &MlpModel, batch: &[WeightedExample]) -> f64 {
    let scale = 1.0 / batch.len() as f64;
    batch
        .iter()
        .map(|ex| {
            let probs = model.activations(&ex.x).pop().unwrap();
            scale * ex.weight * soft_cross_entropy(&probs, &ex.target)
        })
        .sum()
}

/// Pairs every example with a shuffled partner and mixes inputs and
/// one-hot labels with `lambda ~ U[0, 1]` per pair.
pub fn mixup_batch(data: &RawDataset, rows: &[usize], rng: &mut AuditRng) -> Vec<WeightedExample> {
    let classes = data.classes();
    let mut partners = rows.to_vec();
    partners.shuffle(rng);
    rows.iter()
        .zip(&partners)
        .map(|(&i, &j)| {
            let lambda: f64 = rng.random_range(0.0..=1.0);
            let (xi, xj) = (&data.features()[i], &data.features()[j]);
            let (yi, yj) = (data.labels()[i], data.labels()[j]);
            WeightedExample {
                x: xi.iter().zip(xj).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect(),
                target: (0..classes)
                    .map(|c| lambda * f64::from(u8::from(c == yi)) + (1.0 - lambda) * f64::from(u8::from(c == yj)))
                    .collect(),
                weight: 1.0,
            }
        })
        .collect()
}

/// Per example: descend on CE when it exceeds `alpha`; otherwise ascend if
/// the prediction is correct, or descend towards the softened label
/// (frozen from the current output) if it is not.
pub fn relaxloss_batch(model: &MlpModel, data: &RawDataset, rows: &[usize], alpha: f64, mu: f64) -> Result<Vec<WeightedExample>> {
    let classes = data.classes();
    rows.iter()
        .map(|&i| {
            let (x, y) = (&data.features()[i], data.labels()[i]);
            let probs = model.forward(x)?;
            let ce = -clamped_ln(probs[y]);
            let (target, weight) = if ce > alpha {
                (one_hot(classes, y), 1.0)
            } else if argmax(&probs) == y {
                (one_hot(classes, y), -1.0)
            } else {
                (soft_label(&probs, y, mu)?, 1.0)
            };
            Ok(WeightedExample { x: x.clone(), target, weight })
        })
        .collect()
}

fn plain_batch(data: &RawDataset, rows: &[usize]) -> Vec<WeightedExample> {
    rows.iter()
        .map(|&i| WeightedExample {
            x: data.features()[i].clone(),
            target: one_hot(data.classes(), data.labels()[i]),
            weight: 1.0,
        })
        .collect()
}

fn sgd_step(model: &mut MlpModel, grad: &MlpGradient, lr: f64) {
    let (weights, biases) = model.params_mut();
    for (p, g) in weights.iter_mut().zip(&grad.weights).chain(biases.iter_mut().zip(&grad.biases)) {
        p.iter_mut().zip(g).for_each(|(a, b)| *a -= lr * b);
    }
}

/// Trains on the member rows of `data`. Initialization and batching use
/// two streams derived from `cfg.seed`.
pub fn train_model(data: &RawDataset, cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let rows = data.rows_with(Split::Member);
    if rows.is_empty() {
        return Err(Error::Empty("member rows"));
    }
    let mut dims = vec![data.dim()];
    dims.extend_from_slice(&cfg.hidden);
    dims.push(data.classes());
    let mut model = MlpModel::init(&dims, &mut rng::derived(cfg.seed, &[0]))?;
    let mut rng = rng::derived(cfg.seed, &[1]);
    let mut order = rows;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_ce = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = match cfg.method {
                TrainMethod::Vanilla => plain_batch(data, chunk),
                TrainMethod::Mixup => mixup_batch(data, chunk, &mut rng),
                TrainMethod::RelaxLoss { alpha, mu } => relaxloss_batch(&model, data, chunk, alpha, mu)?,
            };
            let (loss, grad) = batch_loss_and_gradient(&model, &batch);
            epoch_ce += loss;
            sgd_step(&mut model, &grad, cfg.learning_rate);
        }
        if !epoch_ce.is_finite() || !model.weights().iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::synth::{gen_synthetic, GenConfig};

    fn small_data() -> RawDataset {
        gen_synthetic(&GenConfig {
            members: 40,
            nonmembers: 40,
            dim: 4,
            ..Default::default()
        })
        .unwrap()
    }

    fn small_cfg(method: TrainMethod) -> TrainConfig {
        TrainConfig {
            method,
            hidden: vec![6],
            epochs: 20,
            batch_size: 8,
            learning_rate: 0.1,
            seed: 7,
        }
    }

    fn mean_ce(model: &MlpModel, data: &RawDataset, split: Split) -> f64 {
        let rows = data.rows_with(split);
        let total: f64 = rows
            .iter()
            .map(|&i| -clamped_ln(model.forward(&data.features()[i]).unwrap()[data.labels()[i]]))
            .sum();
        total / rows.len() as f64
    }

    #[test]
    fn training_is_deterministic() {
        let data = small_data();
        for method in [TrainMethod::Vanilla, TrainMethod::Mixup, TrainMethod::RelaxLoss { alpha: 0.5, mu: 0.8 }] {
            let cfg = small_cfg(method);
            assert_eq!(train_model(&data, &cfg).unwrap(), train_model(&data, &cfg).unwrap());
        }
    }

    #[test]
    fn relaxloss_with_zero_alpha_matches_vanilla() {
        let data = small_data();
        let vanilla = train_model(&data, &small_cfg(TrainMethod::Vanilla)).unwrap();
        let relax = train_model(&data, &small_cfg(TrainMethod::RelaxLoss { alpha: 0.0, mu: 0.5 })).unwrap();
        assert_eq!(vanilla, relax);
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let data = small_data();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..small_cfg(TrainMethod::Vanilla)
        };
        let trained = train_model(&data, &cfg).unwrap();
        let init = MlpModel::init(&[4, 6, 3], &mut rng::derived(cfg.seed, &[0])).unwrap();
        assert_eq!(trained, init);
    }

    #[test]
    fn relaxloss_requires_valid_parameters() {
        let data = small_data();
        assert!(train_model(&data, &small_cfg(TrainMethod::RelaxLoss { alpha: -1.0, mu: 0.5 })).is_err());
        assert!(train_model(&data, &small_cfg(TrainMethod::RelaxLoss { alpha: 1.0, mu: 0.0 })).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let data = small_data();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            ..small_cfg(TrainMethod::Vanilla)
        };
        assert!(matches!(train_model(&data, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn vanilla_overfits_members() {
        let data = gen_synthetic(&GenConfig {
            members: 60,
            nonmembers: 300,
            separation: 1.5,
            ..Default::default()
        })
        .unwrap();
        let cfg = TrainConfig {
            hidden: vec![32],
            epochs: 200,
            batch_size: 16,
            learning_rate: 0.1,
            ..Default::default()
        };
        let model = train_model(&data, &cfg).unwrap();
        assert!(mean_ce(&model, &data, Split::Member) < mean_ce(&model, &data, Split::Nonmember));
    }

    /// Central differences of the batch loss against backprop.
    fn check_gradient(model: &MlpModel, batch: &[WeightedExample]) {
        let (_, grad) = batch_loss_and_gradient(model, batch);
        let h = 1e-5;
        for l in 0..model.num_layers() {
            for (is_bias, len) in [(false, model.weights()[l].len()), (true, model.biases()[l].len())] {
                for k in 0..len {
                    let bump = |delta: f64| {
                        let mut m = model.clone();
                        let (w, b) = m.params_mut();
                        if is_bias {
                            b[l][k] += delta;
                        } else {
                            w[l][k] += delta;
                        }
                        batch_loss(&m, batch)
                    };
                    let fd = (bump(h) - bump(-h)) / (2.0 * h);
                    let an = if is_bias { grad.biases[l][k] } else { grad.weights[l][k] };
                    let denom = fd.abs().max(an.abs()).max(1e-6);
                    assert!((fd - an).abs() / denom <= 1e-4, "layer {l} bias {is_bias} index {k}: fd {fd} vs {an}");
                }
            }
        }
    }

    fn fd_fixture() -> (MlpModel, RawDataset, Vec<usize>) {
        let data = gen_synthetic(&GenConfig {
            classes: 2,
            dim: 2,
            members: 8,
            nonmembers: 2,
            separation: 1.0,
            seed: 9,
            ..Default::default()
        })
        .unwrap();
        // 2-4-3 network: three outputs over two-class data would waste a class,
        // so the fixture relabels into three classes.
        let labels: Vec<usize> = (0..data.len()).map(|i| i % 3).collect();
        let data = RawDataset::new(3, data.features().to_vec(), labels, data.splits().to_vec()).unwrap();
        let model = MlpModel::init(&[2, 4, 3], &mut rng::seeded(21)).unwrap();
        (model, data, (0..8).collect())
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (model, data, rows) = fd_fixture();
        check_gradient(&model, &plain_batch(&data, &rows));
        check_gradient(&model, &mixup_batch(&data, &rows, &mut rng::seeded(3)));
        let relax = relaxloss_batch(&model, &data, &rows, 5.0, 0.3).unwrap();
        assert!(relax.iter().any(|e| e.weight < 0.0) || relax.iter().any(|e| e.target.iter().all(|&t| t < 1.0)));
        check_gradient(&model, &relax);
    }
}
