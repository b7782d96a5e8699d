//! Desk-scale audit targets: synthetic Gaussian-mixture data and small MLPs
//! trained with plain cross-entropy, Mixup or RelaxLoss.

mod mlp;
mod synth;
mod train;

use alloc::vec::Vec;

use rand::seq::SliceRandom;

pub use mlp::{model_oracle, MlpGradient, MlpModel};
pub use synth::{gen_synthetic, GenConfig, RawDataset};
pub use train::{
    batch_loss, batch_loss_and_gradient, mixup_batch, relaxloss_batch, train_model, TrainConfig, TrainMethod,
    WeightedExample,
};

use crate::rng;
use crate::scores::{mixup_score_with_lambdas, MixupScoreConfig, RawExample};
use crate::{Error, PredictionRecord, Result, Split};

/// One prediction record per row of `data`, in row order.
pub fn predictions_from_model(model: &MlpModel, data: &RawDataset) -> Result<Vec<PredictionRecord>> {
    if model.num_classes() != data.classes() {
        return Err(Error::ClassCountMismatch {
            expected: data.classes(),
            found: model.num_classes(),
        });
    }
    data.features()
        .iter()
        .zip(data.labels())
        .zip(data.splits())
        .map(|((x, &y), &split)| PredictionRecord::new(model.forward(x)?, y, split))
        .collect()
}

/// Rows of `split` used as the Mixup auxiliary set: a seeded shuffle of
/// that split's rows, truncated to `size`.
pub fn sample_aux_rows(data: &RawDataset, split: Split, size: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rows = data.rows_with(split);
    if rows.is_empty() || size == 0 {
        return Err(Error::Empty("mixup auxiliary set"));
    }
    rows.shuffle(&mut rng::seeded(seed));
    rows.truncate(size);
    Ok(rows)
}

/// Mixup score of every row of `data` against the auxiliary rows, sharing
/// one λ sequence across queries.
pub fn mixup_scores(model: &MlpModel, data: &RawDataset, aux_rows: &[usize], cfg: &MixupScoreConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let lambdas = cfg.lambdas();
    let ex = |i: usize| RawExample {
        x: &data.features()[i],
        label: data.labels()[i],
    };
    let aux: Vec<RawExample<'_>> = aux_rows.iter().map(|&i| ex(i)).collect();
    (0..data.len())
        .map(|i| mixup_score_with_lambdas(ex(i), &aux, model, &lambdas))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::ce_score;

    fn fixture() -> (MlpModel, RawDataset) {
        let data = gen_synthetic(&GenConfig {
            members: 12,
            nonmembers: 9,
            dim: 3,
            ..Default::default()
        })
        .unwrap();
        let model = MlpModel::init(&[3, 5, 3], &mut rng::seeded(2)).unwrap();
        (model, data)
    }

    #[test]
    fn export_preserves_rows_and_normalization() {
        let (model, data) = fixture();
        let preds = predictions_from_model(&model, &data).unwrap();
        assert_eq!(preds.len(), 21);
        assert_eq!(preds.iter().filter(|r| r.split() == Split::Member).count(), 12);
        for (r, x) in preds.iter().zip(data.features()) {
            assert!((r.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            assert_eq!(model_oracle(&model).predict(x).unwrap(), model.forward(x).unwrap());
        }
    }

    #[test]
    fn identity_mix_reduces_to_cross_entropy() {
        let (model, data) = fixture();
        let aux = sample_aux_rows(&data, Split::Nonmember, 4, 1).unwrap();
        let cfg = MixupScoreConfig {
            draws: 3,
            lambda_low: 1.0,
            lambda_high: 1.0,
            seed: 0,
        };
        let scores = mixup_scores(&model, &data, &aux, &cfg).unwrap();
        for (i, s) in scores.iter().enumerate() {
            let p = model.forward(&data.features()[i]).unwrap();
            assert!((s - ce_score(&p, data.labels()[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn half_mix_matches_manual_forward_pass() {
        let (model, data) = fixture();
        let (a, b) = (&data.features()[0], &data.features()[1]);
        let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * x + 0.5 * y).collect();
        let oracle = model_oracle(&model);
        assert_eq!(oracle.predict(&mid).unwrap(), model.forward(&mid).unwrap());
    }

    #[test]
    fn aux_sampling_is_seeded() {
        let (_, data) = fixture();
        let a = sample_aux_rows(&data, Split::Member, 5, 3).unwrap();
        assert_eq!(a, sample_aux_rows(&data, Split::Member, 5, 3).unwrap());
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|&i| data.splits()[i] == Split::Member));
        assert!(sample_aux_rows(&data, Split::Member, 0, 3).is_err());
    }
}
