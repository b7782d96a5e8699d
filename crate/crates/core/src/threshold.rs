//! Threshold attacks `member iff score < tau` and their empirical advantage.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::predictions::{AuditDataset, PredictionRecord};
use crate::scores::{self, RelaxLossScoreConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub score_name: String,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub tau: f64,
    pub selection_advantage: f64,
    pub evaluation_advantage: f64,
}

/// A score computable from a single [`PredictionRecord`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreSpec {
    Msp,
    Ent,
    Ce,
    Me,
    RelaxLoss(RelaxLossScoreConfig),
}

impl ScoreSpec {
    /// Parses a score name. `relaxloss` needs `relax` to be supplied.
    pub fn parse(name: &str, relax: Option<RelaxLossScoreConfig>) -> Result<Self> {
        match name {
            "msp" => Ok(ScoreSpec::Msp),
            "ent" => Ok(ScoreSpec::Ent),
            "ce" => Ok(ScoreSpec::Ce),
            "me" => Ok(ScoreSpec::Me),
            "relaxloss" => relax
                .map(ScoreSpec::RelaxLoss)
                .ok_or_else(|| Error::MissingScoreConfig("relaxloss".to_string())),
            other => Err(Error::UnknownScore(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoreSpec::Msp => "msp",
            ScoreSpec::Ent => "ent",
            ScoreSpec::Ce => "ce",
            ScoreSpec::Me => "me",
            ScoreSpec::RelaxLoss(_) => "relaxloss",
        }
    }

    pub fn score(&self, record: &PredictionRecord) -> Result<f64> {
        let (p, y) = (record.probs(), record.label());
        Ok(match self {
            ScoreSpec::Msp => scores::msp_score(p),
            ScoreSpec::Ent => scores::ent_score(p),
            ScoreSpec::Ce => scores::ce_score(p, y),
            ScoreSpec::Me => scores::me_score(p, y),
            ScoreSpec::RelaxLoss(cfg) => scores::relaxloss_score(p, y, cfg)?,
        })
    }
}

/// The four scores from the literature every audit reports.
pub const TABLE_SCORES: [ScoreSpec; 4] = [ScoreSpec::Msp, ScoreSpec::Ent, ScoreSpec::Ce, ScoreSpec::Me];

fn fraction_below(sorted: &[f64], tau: f64) -> f64 {
    sorted.partition_point(|&s| s < tau) as f64 / sorted.len() as f64
}

/// Fraction of members with `score < tau` minus the same fraction for
/// nonmembers.
pub fn empirical_advantage(member_scores: &[f64], nonmember_scores: &[f64], tau: f64) -> Result<f64> {
    if member_scores.is_empty() {
        return Err(Error::Empty("member scores"));
    }
    if nonmember_scores.is_empty() {
        return Err(Error::Empty("nonmember scores"));
    }
    let below = |xs: &[f64]| xs.iter().filter(|&&s| s < tau).count() as f64 / xs.len() as f64;
    Ok(below(member_scores) - below(nonmember_scores))
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mut mid = 0.5 * (lo + hi);
    if !mid.is_finite() {
        mid = 0.5 * lo + 0.5 * hi;
    }
    // `< mid` must include `lo` and exclude `hi`.
    if mid <= lo {
        hi
    } else {
        mid
    }
}

/// Threshold maximizing [`empirical_advantage`] over `-inf`, `+inf` and the
/// midpoints between consecutive distinct pooled scores. Ties go to the
/// smaller threshold, so the result is `(-inf, 0)` when nothing beats zero.
pub fn best_threshold(member_scores: &[f64], nonmember_scores: &[f64]) -> Result<(f64, f64)> {
    if member_scores.is_empty() {
        return Err(Error::Empty("member scores"));
    }
    if nonmember_scores.is_empty() {
        return Err(Error::Empty("nonmember scores"));
    }
    let sort = |xs: &[f64]| {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let members = sort(member_scores);
    let nonmembers = sort(nonmember_scores);
    let mut pooled: Vec<f64> = members.iter().chain(&nonmembers).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let advantage = |tau: f64| fraction_below(&members, tau) - fraction_below(&nonmembers, tau);
    let mut best = (f64::NEG_INFINITY, advantage(f64::NEG_INFINITY));
    let candidates = pooled
        .windows(2)
        .map(|w| midpoint(w[0], w[1]))
        .chain(core::iter::once(f64::INFINITY));
    for tau in candidates {
        let adv = advantage(tau);
        if adv > best.1 {
            best = (tau, adv);
        }
    }
    Ok(best)
}

/// Fits a threshold on (members, selection) and reports it on
/// (members, evaluation), given precomputed score lists.
pub fn threshold_attack_on_scores(
    name: &str,
    member_scores: &[f64],
    selection_scores: &[f64],
    evaluation_scores: &[f64],
) -> Result<AttackResult> {
    let (tau, selection_advantage) = best_threshold(member_scores, selection_scores)?;
    let evaluation_advantage = empirical_advantage(member_scores, evaluation_scores, tau)?;
    Ok(AttackResult {
        score_name: name.to_string(),
        tau,
        selection_advantage,
        evaluation_advantage,
    })
}

pub fn run_threshold_attack(dataset: &AuditDataset, score: &ScoreSpec) -> Result<AttackResult> {
    let eval = |records: &[PredictionRecord]| records.iter().map(|r| score.score(r)).collect::<Result<Vec<_>>>();
    threshold_attack_on_scores(
        score.name(),
        &eval(dataset.members())?,
        &eval(dataset.selection())?,
        &eval(dataset.evaluation())?,
    )
}

/// Runs a threshold attack from scores indexed by the rows of the record
/// list the dataset was built from.
pub fn run_threshold_attack_by_row(dataset: &AuditDataset, name: &str, scores_by_row: &[f64]) -> Result<AttackResult> {
    let pick = |rows: &[usize]| -> Result<Vec<f64>> {
        rows.iter()
            .map(|&i| {
                scores_by_row.get(i).copied().ok_or(Error::DimensionMismatch {
                    expected: i + 1,
                    found: scores_by_row.len(),
                })
            })
            .collect()
    };
    threshold_attack_on_scores(
        name,
        &pick(dataset.member_rows())?,
        &pick(dataset.selection_rows())?,
        &pick(dataset.evaluation_rows())?,
    )
}
