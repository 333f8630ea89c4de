//! Worker count for parallel sweeps.

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{AppError, AppResult};

/// Environment variable read when no explicit worker count is given.
pub const WORKERS_ENV: &str = "SIXVERTEX_WORKERS";

/// Explicit count, else `SIXVERTEX_WORKERS`, else rayon's default (one per core).
pub fn worker_count(explicit: Option<usize>) -> AppResult<Option<usize>> {
    if let Some(n) = explicit {
        return check(n).map(Some);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => {
            let n = s
                .trim()
                .parse::<usize>()
                .map_err(|_| AppError::Invalid(format!("{WORKERS_ENV}={s:?} is not a positive integer")))?;
            check(n).map(Some)
        }
        Err(_) => Ok(None),
    }
}

fn check(n: usize) -> AppResult<usize> {
    if n == 0 {
        return Err(AppError::Invalid("worker count must be at least 1".into()));
    }
    Ok(n)
}

pub fn build_pool(explicit: Option<usize>) -> AppResult<ThreadPool> {
    let mut b = ThreadPoolBuilder::new();
    if let Some(n) = worker_count(explicit)? {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| AppError::Invalid(format!("thread pool: {e}")))
}
