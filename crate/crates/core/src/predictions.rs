//! Audit data model: per-example softmax outputs, their feature-space view,
//! and the member / selection / evaluation split used by every attack.

use alloc::vec::Vec;
use core::ops::Deref;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// Tolerance on `|sum(probs) - 1|` accepted when a record is built.
pub const PROB_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Member,
    Nonmember,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Member => "member",
            Split::Nonmember => "nonmember",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "member" => Some(Split::Member),
            "nonmember" => Some(Split::Nonmember),
            _ => None,
        }
    }
}

/// One example's softmax vector, label and membership flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    probs: Vec<f64>,
    label: usize,
    split: Split,
}

impl PredictionRecord {
    /// Validates `probs` and renormalizes them to sum to one.
    ///
    /// Every entry must be finite and non-negative, the sum must be within
    /// [`PROB_SUM_TOLERANCE`] of one, and `label < probs.len()`.
    pub fn new(probs: Vec<f64>, label: usize, split: Split) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyProbabilities);
        }
        for (class, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidProbability { class, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::ProbabilitySum { sum });
        }
        if label >= probs.len() {
            return Err(Error::LabelOutOfRange {
                label,
                classes: probs.len(),
            });
        }
        // Already-normalized vectors are kept bit-exact so that files
        // round-trip.
        let probs = if (sum - 1.0).abs() <= 8.0 * f64::EPSILON {
            probs
        } else {
            probs.into_iter().map(|p| p / sum).collect()
        };
        Ok(Self { probs, label, split })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn feature_vector(&self) -> FeatureVector {
        to_feature_vector(self)
    }
}

/// `(probs, one_hot(label))`, a point in `R^{2C}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn to_feature_vector(record: &PredictionRecord) -> FeatureVector {
    let c = record.num_classes();
    let mut a = Vec::with_capacity(2 * c);
    a.extend_from_slice(record.probs());
    a.extend((0..c).map(|i| if i == record.label() { 1.0 } else { 0.0 }));
    FeatureVector(a)
}

/// Members plus the nonmember pool split into a selection half (used to fit
/// thresholds and polytopes) and an evaluation half (used for reporting).
///
/// The `*_rows` vectors hold each record's position in the input passed to
/// [`make_audit_dataset`], so scores computed outside this type (e.g. the
/// Mixup score) can be routed to the same split.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditDataset {
    num_classes: usize,
    members: Vec<PredictionRecord>,
    selection: Vec<PredictionRecord>,
    evaluation: Vec<PredictionRecord>,
    member_rows: Vec<usize>,
    selection_rows: Vec<usize>,
    evaluation_rows: Vec<usize>,
    split_seed: u64,
}

/// Builds an [`AuditDataset`], shuffling the nonmembers with a ChaCha8
/// stream seeded by `split_seed` and assigning the first `ceil(n/2)` to the
/// selection half.
pub fn make_audit_dataset(records: &[PredictionRecord], split_seed: u64) -> Result<AuditDataset> {
    let num_classes = match records.first() {
        Some(r) => r.num_classes(),
        None => return Err(Error::TooFewRecords { members: 0, nonmembers: 0 }),
    };
    let mut member_rows = Vec::new();
    let mut pool = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.num_classes() != num_classes {
            return Err(Error::ClassCountMismatch {
                expected: num_classes,
                found: r.num_classes(),
            });
        }
        match r.split() {
            Split::Member => member_rows.push(i),
            Split::Nonmember => pool.push(i),
        }
    }
    if member_rows.is_empty() || pool.len() < 2 {
        return Err(Error::TooFewRecords {
            members: member_rows.len(),
            nonmembers: pool.len(),
        });
    }
    let mut rng = rng::seeded(split_seed);
    pool.shuffle(&mut rng);
    let half = pool.len().div_ceil(2);
    let evaluation_rows = pool.split_off(half);
    let selection_rows = pool;
    let pick = |rows: &[usize]| rows.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok(AuditDataset {
        num_classes,
        members: pick(&member_rows),
        selection: pick(&selection_rows),
        evaluation: pick(&evaluation_rows),
        member_rows,
        selection_rows,
        evaluation_rows,
        split_seed,
    })
}

impl AuditDataset {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn members(&self) -> &[PredictionRecord] {
        &self.members
    }

    pub fn selection(&self) -> &[PredictionRecord] {
        &self.selection
    }

    pub fn evaluation(&self) -> &[PredictionRecord] {
        &self.evaluation
    }

    pub fn member_rows(&self) -> &[usize] {
        &self.member_rows
    }

    pub fn selection_rows(&self) -> &[usize] {
        &self.selection_rows
    }

    pub fn evaluation_rows(&self) -> &[usize] {
        &self.evaluation_rows
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(probs: &[f64], label: usize, split: Split) -> PredictionRecord {
        PredictionRecord::new(probs.to_vec(), label, split).unwrap()
    }

    fn pool(n_members: usize, n_nonmembers: usize) -> Vec<PredictionRecord> {
        let mut out = Vec::new();
        for i in 0..n_members {
            let p = 0.5 + 0.01 * i as f64;
            out.push(rec(&[p, 1.0 - p], 0, Split::Member));
        }
        for i in 0..n_nonmembers {
            let p = 0.1 + 0.01 * i as f64;
            out.push(rec(&[p, 1.0 - p], 1, Split::Nonmember));
        }
        out
    }

    #[test]
    fn near_unit_sums_are_renormalized() {
        let r = rec(&[0.5, 0.5001], 0, Split::Member);
        let sum: f64 = r.probs().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sum_violation_is_rejected() {
        let err = PredictionRecord::new(vec![0.5, 0.6], 0, Split::Member).unwrap_err();
        assert!(matches!(err, Error::ProbabilitySum { .. }));
    }

    #[test]
    fn invalid_entries_and_labels_are_rejected() {
        assert!(matches!(
            PredictionRecord::new(vec![1.5, -0.5], 0, Split::Member),
            Err(Error::InvalidProbability { class: 1, .. })
        ));
        assert!(matches!(
            PredictionRecord::new(vec![f64::NAN, 1.0], 0, Split::Member),
            Err(Error::InvalidProbability { class: 0, .. })
        ));
        assert!(matches!(
            PredictionRecord::new(vec![0.5, 0.5], 2, Split::Member),
            Err(Error::LabelOutOfRange { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn feature_vectors_concatenate_one_hot() {
        assert_eq!(&*rec(&[0.7, 0.3], 0, Split::Member).feature_vector(), &[0.7, 0.3, 1.0, 0.0]);
        assert_eq!(&*rec(&[0.2, 0.8], 1, Split::Member).feature_vector(), &[0.2, 0.8, 0.0, 1.0]);
        let third = 1.0 / 3.0;
        let fv = rec(&[third, third, third], 2, Split::Member).feature_vector();
        assert_eq!(fv.len(), 6);
        assert_eq!(&fv[3..], &[0.0, 0.0, 1.0]);
        for i in 0..3 {
            assert!((fv[i] - third).abs() < 1e-15);
        }
    }

    #[test]
    fn even_pool_splits_in_halves() {
        let ds = make_audit_dataset(&pool(1, 4), 0).unwrap();
        assert_eq!(ds.selection().len(), 2);
        assert_eq!(ds.evaluation().len(), 2);
        let mut rows: Vec<usize> = ds.selection_rows().to_vec();
        rows.extend_from_slice(ds.evaluation_rows());
        rows.sort_unstable();
        assert_eq!(rows, vec![1, 2, 3, 4]);
    }

    #[test]
    fn odd_pool_splits_disjoint_and_covering() {
        let ds = make_audit_dataset(&pool(2, 5), 3).unwrap();
        let sizes = (ds.selection().len(), ds.evaluation().len());
        assert!(sizes == (3, 2) || sizes == (2, 3));
        let mut rows: Vec<usize> = ds.selection_rows().to_vec();
        rows.extend_from_slice(ds.evaluation_rows());
        rows.sort_unstable();
        assert_eq!(rows, vec![2, 3, 4, 5, 6]);
        assert_eq!(ds.member_rows(), &[0, 1]);
    }

    #[test]
    fn split_is_deterministic_in_seed() {
        let records = pool(3, 40);
        let a = make_audit_dataset(&records, 11).unwrap();
        let b = make_audit_dataset(&records, 11).unwrap();
        assert_eq!(a, b);
        let c = make_audit_dataset(&records, 12).unwrap();
        assert_ne!(a.selection_rows(), c.selection_rows());
    }

    #[test]
    fn too_few_records_is_an_error() {
        assert!(matches!(
            make_audit_dataset(&pool(1, 1), 0),
            Err(Error::TooFewRecords { members: 1, nonmembers: 1 })
        ));
        assert!(matches!(
            make_audit_dataset(&pool(0, 4), 0),
            Err(Error::TooFewRecords { .. })
        ));
    }

    #[test]
    fn mixed_class_counts_are_rejected() {
        let mut records = pool(1, 2);
        records.push(rec(&[0.2, 0.3, 0.5], 0, Split::Nonmember));
        assert!(matches!(
            make_audit_dataset(&records, 0),
            Err(Error::ClassCountMismatch { expected: 2, found: 3 })
        ));
    }
}
