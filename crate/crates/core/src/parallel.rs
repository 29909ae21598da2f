//! Deterministic fan-out over independent tasks.
//!
//! Tasks are indexed `0..n`; results land in a slot per index and are
//! returned in index order, so any reduction the caller performs is
//! sequential and independent of how many workers ran or in which order.

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Environment variable consulted when no worker count is given.
pub const WORKERS_ENV: &str = "LONGARM_WORKERS";

/// Samples per task; fixed so task boundaries never depend on the worker count.
pub const CHUNK: u64 = 4096;

/// Resolves a worker count: explicit value, else `LONGARM_WORKERS`, else the number of CPUs.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    let w = match explicit {
        Some(w) => w,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| crate::Error::InvalidParameter(format!("{WORKERS_ENV}={v:?} is not a positive integer")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if w == 0 {
        return invalid("worker count must be >= 1");
    }
    Ok(w)
}

/// Runs `f(i)` for `i in 0..n` on `workers` threads and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers <= 1 || n <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Splits `samples` into fixed-size chunks `(start, end)`.
pub fn chunks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(samples))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let a = map_indexed(1000, 1, |i| i * i).unwrap();
        let b = map_indexed(1000, 4, |i| i * i).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chunk_cover() {
        let c = chunks(10_000);
        assert_eq!(c.first(), Some(&(0, 4096)));
        assert_eq!(c.last(), Some(&(8192, 10_000)));
        assert!(chunks(0).is_empty());
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(resolve_workers(Some(0)).is_err());
        assert_eq!(resolve_workers(Some(3)).unwrap(), 3);
    }
}
