//! Membership scores over a softmax vector and label.
//!
//! Convention throughout: a lower score means "more likely a member", so a
//! threshold attack predicts member when `score < tau`. Every logarithm
//! clamps its argument to `[EPS_CLAMP, 1]`, which keeps all scores finite.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{argmax, clamped_ln, clamped_ln_complement, xlogx};
use crate::rng;
use crate::{Error, Result};

/// Negative maximum softmax probability.
pub fn msp_score(probs: &[f64]) -> f64 {
    -probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Prediction entropy.
pub fn ent_score(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| -p * clamped_ln(p)).sum()
}

/// Cross-entropy loss of the true label.
pub fn ce_score(probs: &[f64], label: usize) -> f64 {
    -clamped_ln(probs[label])
}

/// Modified entropy: `-(1 - p_y) ln p_y - sum_{c != y} p_c ln(1 - p_c)`.
pub fn me_score(probs: &[f64], label: usize) -> f64 {
    let mut total = 0.0;
    for (c, &p) in probs.iter().enumerate() {
        if c == label {
            total -= (1.0 - p) * clamped_ln(p);
        } else {
            total -= p * clamped_ln_complement(p);
        }
    }
    total
}

/// Cross-entropy extended to relaxed labels `y ∈ [0,1]^C` by adding the
/// negative label entropy; jointly convex in `(p, y)` and equal to
/// [`ce_score`] on one-hot labels.
pub fn ce_convexified(probs: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&p, &yc) in probs.iter().zip(y) {
        total += -yc * clamped_ln(p);
    }
    for &yc in y {
        if yc != 0.0 {
            total += xlogx(yc);
        }
    }
    total
}

/// Modified entropy extended to relaxed labels; jointly convex in `(p, y)`
/// and equal to [`me_score`] on one-hot labels.
pub fn me_convexified(probs: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&p, &yc) in probs.iter().zip(y) {
        total -= (1.0 - p) * clamped_ln(p) * yc + p * clamped_ln_complement(p) * (1.0 - yc);
    }
    for &yc in y {
        if yc != 0.0 {
            total += 5.0 * xlogx(yc);
        }
        if yc != 1.0 {
            total += 5.0 * xlogx(1.0 - yc);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxLossScoreConfig {
    /// Loss target.
    pub alpha: f64,
    /// Cap on the true-class mass of the softened label.
    pub mu: f64,
}

impl RelaxLossScoreConfig {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        let cfg = Self { alpha, mu };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidConfig("relaxloss alpha must be finite and >= 0".to_string()));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidConfig("relaxloss mu must lie in (0, 1]".to_string()));
        }
        Ok(())
    }
}

/// Softened label: the true class keeps `min(p_y, mu)` and the remainder is
/// spread evenly over the other classes.
pub fn soft_label(probs: &[f64], label: usize, mu: f64) -> Result<Vec<f64>> {
    let c = probs.len();
    if c < 2 {
        return Err(Error::SingleClass);
    }
    let keep = probs[label].min(mu);
    let rest = (1.0 - keep) / (c - 1) as f64;
    Ok((0..c).map(|i| if i == label { keep } else { rest }).collect())
}

/// Cross-entropy `-sum_c y_c ln p_c` against an arbitrary target vector.
pub fn soft_cross_entropy(probs: &[f64], target: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&p, &t) in probs.iter().zip(target) {
        total -= t * clamped_ln(p);
    }
    total
}

/// Score aligned with RelaxLoss training:
/// `|CE - alpha| + (1.5 - e) CE + (0.5 + e) CE_soft`, where `e` is the 0/1
/// error of the argmax prediction (ties to the lowest class).
pub fn relaxloss_score(probs: &[f64], label: usize, cfg: &RelaxLossScoreConfig) -> Result<f64> {
    let soft = soft_label(probs, label, cfg.mu)?;
    let ce = ce_score(probs, label);
    let err = if argmax(probs) == label { 0.0 } else { 1.0 };
    let ce_soft = soft_cross_entropy(probs, &soft);
    Ok((ce - cfg.alpha).abs() + (1.5 - err) * ce + (0.5 + err) * ce_soft)
}

/// Evaluates the audited model on arbitrary raw inputs.
pub trait ModelOracle {
    fn num_classes(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// A raw example: input features and class label.
#[derive(Debug, Clone, Copy)]
pub struct RawExample<'a> {
    pub x: &'a [f64],
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixupScoreConfig {
    /// Number of mixing coefficients drawn.
    pub draws: usize,
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub seed: u64,
}

impl Default for MixupScoreConfig {
    fn default() -> Self {
        Self {
            draws: 10,
            lambda_low: 0.5,
            lambda_high: 1.0,
            seed: 0,
        }
    }
}

impl MixupScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::InvalidConfig("mixup draws must be >= 1".to_string()));
        }
        let ok = self.lambda_low.is_finite()
            && self.lambda_high.is_finite()
            && 0.0 <= self.lambda_low
            && self.lambda_low <= self.lambda_high
            && self.lambda_high <= 1.0;
        if !ok {
            return Err(Error::InvalidConfig(
                "mixup lambdas must satisfy 0 <= low <= high <= 1".to_string(),
            ));
        }
        Ok(())
    }

    /// The λ sequence shared by every query, drawn i.i.d. uniform on
    /// `[lambda_low, lambda_high]`.
    pub fn lambdas(&self) -> Vec<f64> {
        if self.lambda_low == self.lambda_high {
            return alloc::vec![self.lambda_low; self.draws];
        }
        let mut rng = rng::seeded(self.seed);
        (0..self.draws)
            .map(|_| rng.random_range(self.lambda_low..=self.lambda_high))
            .collect()
    }
}

fn one_hot_mix(classes: usize, lambda: f64, label: usize, aux_label: usize) -> Vec<f64> {
    (0..classes)
        .map(|c| {
            let y = if c == label { 1.0 } else { 0.0 };
            let ya = if c == aux_label { 1.0 } else { 0.0 };
            lambda * y + (1.0 - lambda) * ya
        })
        .collect()
}

/// Mixup score: mean cross-entropy between the model's output on
/// `λ x + (1-λ) x_aux` and the mixed label, over all λ draws and auxiliary
/// points.
pub fn mixup_score<M: ModelOracle + ?Sized>(
    query: RawExample<'_>,
    aux: &[RawExample<'_>],
    model: &M,
    cfg: &MixupScoreConfig,
) -> Result<f64> {
    mixup_score_with_lambdas(query, aux, model, &cfg.lambdas())
}

/// [`mixup_score`] with an explicit λ sequence.
pub fn mixup_score_with_lambdas<M: ModelOracle + ?Sized>(
    query: RawExample<'_>,
    aux: &[RawExample<'_>],
    model: &M,
    lambdas: &[f64],
) -> Result<f64> {
    if aux.is_empty() {
        return Err(Error::Empty("mixup auxiliary set"));
    }
    if lambdas.is_empty() {
        return Err(Error::Empty("mixup lambda sequence"));
    }
    let classes = model.num_classes();
    let mut total = 0.0;
    let mut mixed = Vec::with_capacity(query.x.len());
    for &lambda in lambdas {
        for a in aux {
            if a.x.len() != query.x.len() {
                return Err(Error::DimensionMismatch {
                    expected: query.x.len(),
                    found: a.x.len(),
                });
            }
            mixed.clear();
            mixed.extend(query.x.iter().zip(a.x).map(|(&x, &xa)| lambda * x + (1.0 - lambda) * xa));
            let probs = model.predict(&mixed)?;
            let target = one_hot_mix(classes, lambda, query.label, a.label);
            total += soft_cross_entropy(&probs, &target);
        }
    }
    Ok(total / (lambdas.len() * aux.len()) as f64)
}

/// One row of a mixed-prediction file: the model's output on the mix of a
/// query and an auxiliary point with coefficient `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPrediction {
    pub query_id: usize,
    pub draw: usize,
    pub aux_id: usize,
    pub lambda: f64,
    pub probs: Vec<f64>,
}

/// File-based Mixup score. `labels[i]` is the label of example `i`; query
/// and auxiliary ids index into it. Returns the score per query id.
pub fn mixup_scores_from_mixed(rows: &[MixedPrediction], labels: &[usize]) -> Result<BTreeMap<usize, f64>> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for row in rows {
        let classes = row.probs.len();
        for id in [row.query_id, row.aux_id] {
            if id >= labels.len() {
                return Err(Error::InvalidConfig(alloc::format!(
                    "mixed prediction references example {id}, but only {} labels are known",
                    labels.len()
                )));
            }
        }
        let (label, aux_label) = (labels[row.query_id], labels[row.aux_id]);
        if label >= classes || aux_label >= classes {
            return Err(Error::LabelOutOfRange {
                label: label.max(aux_label),
                classes,
            });
        }
        let target = one_hot_mix(classes, row.lambda, label, aux_label);
        let entry = acc.entry(row.query_id).or_insert((0.0, 0));
        entry.0 += soft_cross_entropy(&row.probs, &target);
        entry.1 += 1;
    }
    Ok(acc.into_iter().map(|(q, (sum, n))| (q, sum / n as f64)).collect())
}
