//! Parallel execution of CPM job grids.

use cpm_audit_core::cpm::{run_job, CpmJob, CpmProblem, CpmRun, CpmTrainConfig, RunExecutor};
use rayon::prelude::*;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CPM_AUDIT_THREADS";

/// Runs jobs on a rayon pool. Results come back in job order, so the
/// selected run does not depend on scheduling.
pub struct ParallelExecutor {
    pool: rayon::ThreadPool,
}

impl ParallelExecutor {
    /// A pool sized by `CPM_AUDIT_THREADS` when set to a positive integer,
    /// otherwise by rayon's default.
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        Self::with_threads(threads)
    }

    pub fn with_threads(threads: Option<usize>) -> Self {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        Self {
            pool: builder.build().expect("thread pool construction"),
        }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl RunExecutor for ParallelExecutor {
    fn execute(&self, problem: &CpmProblem, cfg: &CpmTrainConfig, jobs: &[CpmJob]) -> Vec<cpm_audit_core::Result<CpmRun>> {
        self.pool
            .install(|| jobs.par_iter().map(|job| run_job(problem, cfg, job)).collect())
    }
}
