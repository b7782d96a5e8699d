//! Audit workflows shared by the command line and the end-to-end tests.

use cpm_audit_core::cpm::{train_cpm_with, CpmProblem, CpmResult, CpmTrainConfig, RunExecutor};
use cpm_audit_core::lab::{
    gen_synthetic, mixup_scores, predictions_from_model, sample_aux_rows, train_model, GenConfig, MlpModel, RawDataset,
    TrainConfig, TrainMethod,
};
use cpm_audit_core::predictions::make_audit_dataset;
use cpm_audit_core::scores::{MixedPrediction, MixupScoreConfig, RelaxLossScoreConfig};
use cpm_audit_core::threshold::{run_threshold_attack, run_threshold_attack_by_row, AttackResult, ScoreSpec, TABLE_SCORES};
use cpm_audit_core::{AuditDataset, PredictionRecord, Split};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Threshold attacks for each score over one shared split.
pub fn score_attacks(dataset: &AuditDataset, scores: &[ScoreSpec]) -> Result<Vec<AttackResult>> {
    Ok(scores.iter().map(|s| run_threshold_attack(dataset, s)).collect::<cpm_audit_core::Result<_>>()?)
}

/// Mixup threshold attack; `dataset` must be built from the records of
/// `data` in row order.
pub fn mixup_attack(
    dataset: &AuditDataset,
    model: &MlpModel,
    data: &RawDataset,
    aux_rows: &[usize],
    cfg: &MixupScoreConfig,
) -> Result<AttackResult> {
    let scores = mixup_scores(model, data, aux_rows, cfg)?;
    Ok(run_threshold_attack_by_row(dataset, "mixup", &scores)?)
}

/// Rows of a mixed-prediction file for every query row of `data`.
pub fn mixed_predictions(
    model: &MlpModel,
    data: &RawDataset,
    aux_rows: &[usize],
    cfg: &MixupScoreConfig,
) -> Result<Vec<MixedPrediction>> {
    cfg.validate()?;
    let lambdas = cfg.lambdas();
    let mut rows = Vec::with_capacity(data.len() * lambdas.len() * aux_rows.len());
    for (q, x) in data.features().iter().enumerate() {
        for (r, &lambda) in lambdas.iter().enumerate() {
            for &a in aux_rows {
                let xa = &data.features()[a];
                let mixed: Vec<f64> = x.iter().zip(xa).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
                rows.push(MixedPrediction {
                    query_id: q,
                    draw: r,
                    aux_id: a,
                    lambda,
                    probs: model.forward(&mixed)?,
                });
            }
        }
    }
    Ok(rows)
}

/// End-to-end desk-scale audit settings: data, the three training recipes,
/// score parameters and the CPM fit.
///
/// The defaults use a larger sample than [`GenConfig::default`] so that
/// evaluation advantages are less noisy, and a smaller, longer-trained CPM
/// than [`CpmTrainConfig::default`] to keep the run short on one core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub gen: GenConfig,
    /// Shared training settings; the method is set per target.
    pub train: TrainConfig,
    pub relax_alpha: f64,
    pub relax_mu: f64,
    pub mixup: MixupScoreConfig,
    pub aux_from: Split,
    pub aux_size: usize,
    pub split_seed: u64,
    pub cpm: CpmTrainConfig,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            gen: GenConfig {
                members: 1000,
                nonmembers: 2000,
                ..GenConfig::default()
            },
            train: TrainConfig::default(),
            relax_alpha: 0.5,
            relax_mu: 0.8,
            mixup: MixupScoreConfig::default(),
            aux_from: Split::Nonmember,
            aux_size: 30,
            split_seed: 0,
            cpm: CpmTrainConfig {
                facets: 64,
                epochs: 1000,
                ..CpmTrainConfig::default()
            },
        }
    }
}

impl LabConfig {
    pub fn methods(&self) -> [TrainMethod; 3] {
        [
            TrainMethod::Vanilla,
            TrainMethod::Mixup,
            TrainMethod::RelaxLoss {
                alpha: self.relax_alpha,
                mu: self.relax_mu,
            },
        ]
    }

    pub fn relax_score(&self) -> RelaxLossScoreConfig {
        RelaxLossScoreConfig {
            alpha: self.relax_alpha,
            mu: self.relax_mu,
        }
    }

    pub fn data(&self) -> Result<RawDataset> {
        Ok(gen_synthetic(&self.gen)?)
    }
}

/// Everything measured on one trained target.
#[derive(Debug, Clone)]
pub struct TargetAudit {
    pub method: TrainMethod,
    pub model: MlpModel,
    pub records: Vec<PredictionRecord>,
    pub dataset: AuditDataset,
    /// MSP, ENT, CE, ME, RelaxLoss and Mixup attacks, in that order.
    pub attacks: Vec<AttackResult>,
    pub cpm: CpmResult,
}

impl TargetAudit {
    pub fn attack(&self, name: &str) -> Option<&AttackResult> {
        self.attacks.iter().find(|a| a.score_name == name)
    }

    /// Largest evaluation advantage among the score attacks.
    pub fn best_attack(&self) -> &AttackResult {
        self.attacks
            .iter()
            .max_by(|a, b| a.evaluation_advantage.total_cmp(&b.evaluation_advantage))
            .expect("at least one attack")
    }
}

/// Trains one target on `data` and runs every score attack and the CPM.
pub fn audit_target<E: RunExecutor + ?Sized>(
    data: &RawDataset,
    cfg: &LabConfig,
    method: TrainMethod,
    exec: &E,
) -> Result<TargetAudit> {
    let train = TrainConfig {
        method,
        ..cfg.train.clone()
    };
    let model = train_model(data, &train)?;
    let records = predictions_from_model(&model, data)?;
    let dataset = make_audit_dataset(&records, cfg.split_seed)?;
    let mut specs = TABLE_SCORES.to_vec();
    specs.push(ScoreSpec::RelaxLoss(cfg.relax_score()));
    let mut attacks = score_attacks(&dataset, &specs)?;
    let aux = sample_aux_rows(data, cfg.aux_from, cfg.aux_size, cfg.mixup.seed)?;
    attacks.push(mixup_attack(&dataset, &model, data, &aux, &cfg.mixup)?);
    let cpm = train_cpm_with(&CpmProblem::from_dataset(&dataset), &cfg.cpm, exec)?;
    Ok(TargetAudit {
        method,
        model,
        records,
        dataset,
        attacks,
        cpm,
    })
}
