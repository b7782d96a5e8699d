//! Gaussian-mixture classification data.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::math::sqrt;
use crate::rng;
use crate::{Error, Result, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub classes: usize,
    pub dim: usize,
    pub members: usize,
    pub nonmembers: usize,
    /// Pairwise distance between class means.
    pub separation: f64,
    /// Per-coordinate standard deviation around each mean.
    pub covariance_scale: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            dim: 8,
            members: 300,
            nonmembers: 600,
            separation: 3.0,
            covariance_scale: 1.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.classes < 2 {
            return bad("at least 2 classes are required");
        }
        if self.dim < 2 {
            return bad("dimension must be >= 2");
        }
        if self.classes > self.dim {
            return bad("class means sit on coordinate axes, so classes must not exceed dimension");
        }
        if self.members == 0 || self.nonmembers == 0 {
            return bad("member and nonmember counts must be positive");
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return bad("separation must be finite and >= 0");
        }
        if !(self.covariance_scale.is_finite() && self.covariance_scale >= 0.0) {
            return bad("covariance scale must be finite and >= 0");
        }
        Ok(())
    }
}

/// Feature rows with labels and membership flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    classes: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    splits: Vec<Split>,
    gen_config: Option<GenConfig>,
}

impl RawDataset {
    pub fn new(classes: usize, features: Vec<Vec<f64>>, labels: Vec<usize>, splits: Vec<Split>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("dataset rows"));
        }
        if labels.len() != features.len() || splits.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                found: labels.len().min(splits.len()),
            });
        }
        let dim = features[0].len();
        for row in &features {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        Ok(Self {
            classes,
            features,
            labels,
            splits,
            gen_config: None,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn gen_config(&self) -> Option<&GenConfig> {
        self.gen_config.as_ref()
    }

    /// Row indices with the given split, in file order.
    pub fn rows_with(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }
}

/// Draws members then nonmembers from the same mixture. Class `c` has mean
/// `(separation / sqrt 2) e_c`, so means are `separation` apart pairwise,
/// and labels cycle `0, 1, ..., C-1` within each block.
pub fn gen_synthetic(cfg: &GenConfig) -> Result<RawDataset> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    let offset = cfg.separation / sqrt(2.0);
    let n = cfg.members + cfg.nonmembers;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut splits = Vec::with_capacity(n);
    for (split, count) in [(Split::Member, cfg.members), (Split::Nonmember, cfg.nonmembers)] {
        for i in 0..count {
            let label = i % cfg.classes;
            let row = (0..cfg.dim)
                .map(|k| {
                    let z: f64 = rng.sample(StandardNormal);
                    let mean = if k == label { offset } else { 0.0 };
                    mean + cfg.covariance_scale * z
                })
                .collect();
            features.push(row);
            labels.push(label);
            splits.push(split);
        }
    }
    let mut data = RawDataset::new(cfg.classes, features, labels, splits)?;
    data.gen_config = Some(cfg.clone());
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest_mean_accuracy(data: &RawDataset, offset: f64) -> f64 {
        let mut correct = 0;
        for (x, &y) in data.features().iter().zip(data.labels()) {
            let dist = |c: usize| -> f64 {
                x.iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let m = if k == c { offset } else { 0.0 };
                        (v - m) * (v - m)
                    })
                    .sum()
            };
            let pred = (0..data.classes()).min_by(|&a, &b| dist(a).total_cmp(&dist(b))).unwrap();
            correct += usize::from(pred == y);
        }
        correct as f64 / data.len() as f64
    }

    #[test]
    fn far_clusters_are_perfectly_classified() {
        let cfg = GenConfig {
            separation: 100.0,
            seed: 4,
            ..Default::default()
        };
        let data = gen_synthetic(&cfg).unwrap();
        assert_eq!(nearest_mean_accuracy(&data, 100.0 / 2f64.sqrt()), 1.0);
    }

    #[test]
    fn zero_separation_carries_no_signal() {
        let cfg = GenConfig {
            separation: 0.0,
            members: 1000,
            nonmembers: 1000,
            seed: 5,
            ..Default::default()
        };
        let data = gen_synthetic(&cfg).unwrap();
        // Nearest mean with unit offsets just to make a decision; labels are
        // independent of features.
        let acc = nearest_mean_accuracy(&data, 1.0);
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / 2000.0f64).sqrt();
        assert!((acc - 1.0 / 3.0).abs() <= 3.0 * sigma, "{acc}");
    }

    #[test]
    fn generation_is_deterministic_and_balanced() {
        let cfg = GenConfig::default();
        let a = gen_synthetic(&cfg).unwrap();
        assert_eq!(a, gen_synthetic(&cfg).unwrap());
        assert_eq!(a.len(), 900);
        assert_eq!(a.rows_with(Split::Member).len(), 300);
        for c in 0..3 {
            assert_eq!(a.labels().iter().filter(|&&l| l == c).count(), 300);
        }
        let b = gen_synthetic(&GenConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.features(), b.features());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(gen_synthetic(&GenConfig { classes: 1, ..Default::default() }).is_err());
        assert!(gen_synthetic(&GenConfig { dim: 1, ..Default::default() }).is_err());
        assert!(gen_synthetic(&GenConfig { classes: 9, ..Default::default() }).is_err());
        assert!(gen_synthetic(&GenConfig { separation: -1.0, ..Default::default() }).is_err());
    }
}
