//! Convex polytope machine: fits a K-facet polytope to separate members from
//! the selection half by minimizing the logistic surrogate with minibatch
//! Adam, then reports the polytope's advantage on the evaluation half.
//!
//! One fit runs a grid of jobs, one per (orientation, learning rate,
//! restart). Each job owns its random stream, derived from the base seed and
//! its grid coordinates, and the job with the smallest final objective wins
//! (first in grid order on ties). Jobs are independent, so a
//! [`RunExecutor`] may run them in any order or in parallel without
//! changing the result.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::polytope::{accumulate_subgradient, cpm_advantage, objective_unchecked, Orientation, Polytope, PolytopeGradient};
use crate::predictions::{AuditDataset, FeatureVector};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpmTrainConfig {
    /// Facet count `K`.
    pub facets: usize,
    pub learning_rates: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub restarts: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Initial facet weights are uniform on `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for CpmTrainConfig {
    fn default() -> Self {
        Self {
            facets: 1000,
            learning_rates: vec![0.1, 0.01, 0.001],
            epochs: 200,
            batch_size: 10_000,
            restarts: 1,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            init_scale: 0.1,
        }
    }
}

impl CpmTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.facets == 0 {
            return bad("facet count must be >= 1");
        }
        if self.learning_rates.is_empty() {
            return bad("at least one learning rate is required");
        }
        if !self.learning_rates.iter().all(|&lr| lr.is_finite() && lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.restarts == 0 {
            return bad("epochs, batch size and restarts must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps <= 0.0 {
            return bad("adam betas must lie in [0, 1) and eps must be positive");
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return bad("init scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpmResult {
    pub polytope: Polytope,
    /// Surrogate objective on (members, selection) at the chosen run's last
    /// iterate.
    pub final_objective: f64,
    pub selection_advantage: f64,
    pub evaluation_advantage: f64,
    pub lr_chosen: f64,
}

/// Feature vectors of the three parts of an [`AuditDataset`].
#[derive(Debug, Clone)]
pub struct CpmProblem {
    dim: usize,
    members: Vec<FeatureVector>,
    selection: Vec<FeatureVector>,
    evaluation: Vec<FeatureVector>,
}

impl CpmProblem {
    pub fn from_dataset(dataset: &AuditDataset) -> Self {
        let fv = |rs: &[crate::PredictionRecord]| rs.iter().map(|r| r.feature_vector()).collect();
        Self {
            dim: 2 * dataset.num_classes(),
            members: fv(dataset.members()),
            selection: fv(dataset.selection()),
            evaluation: fv(dataset.evaluation()),
        }
    }

    /// Builds a problem from raw feature lists; all vectors must share one
    /// dimension.
    pub fn new(members: Vec<FeatureVector>, selection: Vec<FeatureVector>, evaluation: Vec<FeatureVector>) -> Result<Self> {
        let dim = match members.first() {
            Some(m) => m.len(),
            None => return Err(Error::Empty("member features")),
        };
        if selection.is_empty() {
            return Err(Error::Empty("selection features"));
        }
        if evaluation.is_empty() {
            return Err(Error::Empty("evaluation features"));
        }
        for v in members.iter().chain(&selection).chain(&evaluation) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
        }
        Ok(Self { dim, members, selection, evaluation })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[FeatureVector] {
        &self.members
    }

    pub fn selection(&self) -> &[FeatureVector] {
        &self.selection
    }

    pub fn evaluation(&self) -> &[FeatureVector] {
        &self.evaluation
    }

    /// Surrogate objective on the fitting split (members, selection).
    pub fn objective(&self, polytope: &Polytope) -> Result<f64> {
        crate::polytope::cpm_objective(polytope, &self.members, &self.selection)
    }
}

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmJob {
    pub orientation: Orientation,
    pub lr: f64,
    /// Random-stream coordinates.
    pub stream: [u64; 4],
    pub epochs: usize,
    pub warm_start: Option<Polytope>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpmRun {
    pub polytope: Polytope,
    pub objective: f64,
    pub lr: f64,
}

/// Grid order: orientation (+1 then -1), learning rate, restart.
pub fn cpm_jobs(cfg: &CpmTrainConfig) -> Vec<CpmJob> {
    let mut jobs = Vec::new();
    for orientation in [Orientation::Positive, Orientation::Negative] {
        for (lr_index, &lr) in cfg.learning_rates.iter().enumerate() {
            for restart in 0..cfg.restarts {
                let o = if orientation == Orientation::Positive { 0 } else { 1 };
                jobs.push(CpmJob {
                    orientation,
                    lr,
                    stream: [o, lr_index as u64, restart as u64, cfg.facets as u64],
                    epochs: cfg.epochs,
                    warm_start: None,
                });
            }
        }
    }
    jobs
}

fn init_polytope(dim: usize, cfg: &CpmTrainConfig, orientation: Orientation, rng: &mut rng::AuditRng) -> Polytope {
    let k = cfg.facets;
    let weights = (0..k * dim)
        .map(|_| rng.random_range(-cfg.init_scale..=cfg.init_scale))
        .collect();
    Polytope::from_flat(dim, weights, vec![0.0; k], orientation).expect("initial polytope is well formed")
}

/// Trains one job to completion and scores its last iterate.
pub fn run_job(problem: &CpmProblem, cfg: &CpmTrainConfig, job: &CpmJob) -> Result<CpmRun> {
    let (nm, nn) = (problem.members.len(), problem.selection.len());
    if nm == 0 {
        return Err(Error::Empty("member features"));
    }
    if nn == 0 {
        return Err(Error::Empty("nonmember features"));
    }
    let mut rng = rng::derived(cfg.seed, &job.stream);
    let mut polytope = match &job.warm_start {
        Some(p) => {
            if p.dim() != problem.dim {
                return Err(Error::DimensionMismatch { expected: problem.dim, found: p.dim() });
            }
            p.clone().with_orientation(job.orientation)
        }
        None => init_polytope(problem.dim, cfg, job.orientation, &mut rng),
    };
    let (nw, nb) = (polytope.weights_flat().len(), polytope.facets());
    let mut adam_w = Adam::new(nw, job.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut adam_b = Adam::new(nb, job.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut grad = PolytopeGradient {
        weights: vec![0.0; nw],
        biases: vec![0.0; nb],
    };

    // Members and nonmembers are batched separately so both class means keep
    // equal weight.
    let (bm, bn) = (cfg.batch_size.min(nm), cfg.batch_size.min(nn));
    let steps = nm.div_ceil(bm).max(nn.div_ceil(bn));
    let mut perm_m: Vec<usize> = (0..nm).collect();
    let mut perm_n: Vec<usize> = (0..nn).collect();
    for _ in 0..job.epochs {
        if bm < nm {
            perm_m.shuffle(&mut rng);
        }
        if bn < nn {
            perm_n.shuffle(&mut rng);
        }
        for step in 0..steps {
            grad.weights.iter_mut().for_each(|g| *g = 0.0);
            grad.biases.iter_mut().for_each(|g| *g = 0.0);
            let members = (0..bm).map(|j| &*problem.members[perm_m[(step * bm + j) % nm]]);
            accumulate_subgradient(&polytope, members, bm, -1.0, &mut grad);
            let nonmembers = (0..bn).map(|j| &*problem.selection[perm_n[(step * bn + j) % nn]]);
            accumulate_subgradient(&polytope, nonmembers, bn, 1.0, &mut grad);
            let (w, b) = polytope.params_mut();
            adam_w.step(w, &grad.weights);
            adam_b.step(b, &grad.biases);
        }
    }
    let objective = objective_unchecked(&polytope, &problem.members, &problem.selection);
    Ok(CpmRun { polytope, objective, lr: job.lr })
}

/// Executes a batch of jobs, returning results in job order.
pub trait RunExecutor {
    fn execute(&self, problem: &CpmProblem, cfg: &CpmTrainConfig, jobs: &[CpmJob]) -> Vec<Result<CpmRun>>;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl RunExecutor for Sequential {
    fn execute(&self, problem: &CpmProblem, cfg: &CpmTrainConfig, jobs: &[CpmJob]) -> Vec<Result<CpmRun>> {
        jobs.iter().map(|job| run_job(problem, cfg, job)).collect()
    }
}

/// Minimum objective, first in order on ties.
pub fn select_best(runs: Vec<Result<CpmRun>>) -> Result<CpmRun> {
    let mut best: Option<CpmRun> = None;
    for run in runs {
        let run = run?;
        let better = match &best {
            None => true,
            Some(b) => run.objective < b.objective,
        };
        if better {
            best = Some(run);
        }
    }
    best.ok_or(Error::Empty("cpm job grid"))
}

fn finish(problem: &CpmProblem, run: CpmRun) -> Result<CpmResult> {
    let selection_advantage = cpm_advantage(&run.polytope, &problem.members, &problem.selection)?;
    let evaluation_advantage = cpm_advantage(&run.polytope, &problem.members, &problem.evaluation)?;
    Ok(CpmResult {
        polytope: run.polytope,
        final_objective: run.objective,
        selection_advantage,
        evaluation_advantage,
        lr_chosen: run.lr,
    })
}

pub fn train_cpm(dataset: &AuditDataset, cfg: &CpmTrainConfig) -> Result<CpmResult> {
    train_cpm_with(&CpmProblem::from_dataset(dataset), cfg, &Sequential)
}

pub fn train_cpm_with<E: RunExecutor + ?Sized>(problem: &CpmProblem, cfg: &CpmTrainConfig, exec: &E) -> Result<CpmResult> {
    cfg.validate()?;
    let runs = exec.execute(problem, cfg, &cpm_jobs(cfg));
    finish(problem, select_best(runs)?)
}

pub fn k_ablation(dataset: &AuditDataset, base: &CpmTrainConfig, k_values: &[usize]) -> Result<Vec<(usize, CpmResult)>> {
    k_ablation_with(&CpmProblem::from_dataset(dataset), base, k_values, &Sequential)
}

/// Fits one CPM per facet count. From the second K on, the grid gains two
/// candidates built from the previous winner padded with duplicated facets:
/// the padded polytope itself (same `g`, so the same objective) and a
/// restart warm-started from it. The chosen objective therefore never
/// increases with K.
pub fn k_ablation_with<E: RunExecutor + ?Sized>(
    problem: &CpmProblem,
    base: &CpmTrainConfig,
    k_values: &[usize],
    exec: &E,
) -> Result<Vec<(usize, CpmResult)>> {
    if k_values.is_empty() {
        return Err(Error::Empty("facet counts"));
    }
    if k_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("facet counts must be ascending".to_string()));
    }
    let mut out = Vec::with_capacity(k_values.len());
    let mut donor: Option<CpmRun> = None;
    for &k in k_values {
        let cfg = CpmTrainConfig { facets: k, ..base.clone() };
        cfg.validate()?;
        let mut jobs = cpm_jobs(&cfg);
        if let Some(d) = &donor {
            let padded = d.polytope.padded_to(k);
            let orientation = padded.orientation();
            let warm = |epochs: usize, tag: u64| CpmJob {
                orientation,
                lr: d.lr,
                stream: [2 + tag, 0, cfg.restarts as u64, k as u64],
                epochs,
                warm_start: Some(padded.clone()),
            };
            jobs.push(warm(0, 0));
            jobs.push(warm(cfg.epochs, 1));
        }
        let best = select_best(exec.execute(problem, &cfg, &jobs))?;
        donor = Some(best.clone());
        out.push((k, finish(problem, best)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictions::{make_audit_dataset, PredictionRecord, Split};

    fn small_cfg(k: usize) -> CpmTrainConfig {
        CpmTrainConfig {
            facets: k,
            learning_rates: vec![0.1, 0.01],
            epochs: 150,
            batch_size: 64,
            restarts: 1,
            seed: 3,
            ..Default::default()
        }
    }

    /// Members have p_0 in a narrow band around 0.5; nonmembers are confident
    /// either way. Separating them needs two facets.
    fn band_dataset() -> AuditDataset {
        let mut records = Vec::new();
        for i in 0..20 {
            let p = 0.45 + 0.005 * i as f64;
            records.push(PredictionRecord::new(vec![p, 1.0 - p], i % 2, Split::Member).unwrap());
        }
        for i in 0..40 {
            let p = if i % 2 == 0 { 0.02 + 0.002 * i as f64 } else { 0.98 - 0.002 * i as f64 };
            records.push(PredictionRecord::new(vec![p, 1.0 - p], (i / 2) % 2, Split::Nonmember).unwrap());
        }
        make_audit_dataset(&records, 1).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CpmTrainConfig::default().validate().is_ok());
        assert!(CpmTrainConfig { facets: 0, ..Default::default() }.validate().is_err());
        assert!(CpmTrainConfig { learning_rates: vec![], ..Default::default() }.validate().is_err());
        assert!(CpmTrainConfig { learning_rates: vec![-0.1], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn job_grid_order_and_size() {
        let cfg = CpmTrainConfig { restarts: 2, ..Default::default() };
        let jobs = cpm_jobs(&cfg);
        assert_eq!(jobs.len(), 2 * 3 * 2);
        assert_eq!(jobs[0].orientation, Orientation::Positive);
        assert_eq!(jobs[6].orientation, Orientation::Negative);
        assert_eq!(jobs[2].lr, 0.01);
    }

    #[test]
    fn separable_band_is_fully_separated() {
        let ds = band_dataset();
        let res = train_cpm(&ds, &small_cfg(4)).unwrap();
        assert!((res.selection_advantage - 1.0).abs() <= 1e-6, "{res:?}");
        assert!((res.evaluation_advantage - 1.0).abs() <= 1e-6, "{res:?}");
    }

    #[test]
    fn identical_members_and_nonmembers_give_zero() {
        let pts: Vec<FeatureVector> = (0..6)
            .map(|i| {
                let p = 0.1 + 0.1 * i as f64;
                PredictionRecord::new(vec![p, 1.0 - p], i % 2, Split::Member).unwrap().feature_vector()
            })
            .collect();
        let problem = CpmProblem::new(pts.clone(), pts.clone(), pts).unwrap();
        let res = train_cpm_with(&problem, &small_cfg(2), &Sequential).unwrap();
        assert_eq!(res.selection_advantage, 0.0);
        assert_eq!(res.evaluation_advantage, 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = band_dataset();
        let a = train_cpm(&ds, &small_cfg(3)).unwrap();
        let b = train_cpm(&ds, &small_cfg(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.final_objective.to_bits(), b.final_objective.to_bits());
    }

    #[test]
    fn padded_donor_keeps_its_objective() {
        let ds = band_dataset();
        let problem = CpmProblem::from_dataset(&ds);
        let cfg = small_cfg(2);
        let best = select_best(Sequential.execute(&problem, &cfg, &cpm_jobs(&cfg))).unwrap();
        let padded = best.polytope.padded_to(8);
        let obj = problem.objective(&padded).unwrap();
        assert!((obj - best.objective).abs() <= 1e-9);
        let carried = run_job(
            &problem,
            &cfg,
            &CpmJob {
                orientation: padded.orientation(),
                lr: 0.1,
                stream: [9, 9, 9, 9],
                epochs: 0,
                warm_start: Some(padded),
            },
        )
        .unwrap();
        assert!((carried.objective - best.objective).abs() <= 1e-9);
    }

    #[test]
    fn ablation_objective_never_increases() {
        let ds = band_dataset();
        let res = k_ablation(&ds, &small_cfg(1), &[1, 2, 4]).unwrap();
        assert_eq!(res.iter().map(|(k, _)| *k).collect::<Vec<_>>(), vec![1, 2, 4]);
        for w in res.windows(2) {
            assert!(w[1].1.final_objective <= w[0].1.final_objective);
        }
        assert!((res[2].1.evaluation_advantage - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn singleton_ablation_matches_train_cpm() {
        let ds = band_dataset();
        let cfg = small_cfg(3);
        let res = k_ablation(&ds, &cfg, &[3]).unwrap();
        assert_eq!(res[0].1, train_cpm(&ds, &cfg).unwrap());
        assert!(k_ablation(&ds, &cfg, &[]).is_err());
        assert!(k_ablation(&ds, &cfg, &[4, 2]).is_err());
    }
}
