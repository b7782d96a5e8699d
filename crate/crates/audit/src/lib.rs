//! File formats, parallel CPM execution and the `cpm-audit` command line on
//! top of `cpm-audit-core`.

pub mod cli;
pub mod error;
pub mod exec;
pub mod formats;
pub mod io;
pub mod pipeline;

pub use error::{AuditError, Result};
pub use exec::ParallelExecutor;
