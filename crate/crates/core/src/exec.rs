//! Ordered block execution across workers.

#[cfg(feature = "parallel")]
use crate::error::Error;
use crate::error::Result;
use crate::qmc::partition;

/// Evaluate `f` on blocks `0..num_blocks`, with contiguous runs of blocks
/// assigned to `workers` threads. Results come back in block order, so the
/// caller's merge sequence is independent of `workers`.
pub(crate) fn ordered_blocks<T, F>(num_blocks: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let ranges = partition(num_blocks, workers.max(1));
    let worker = |&(first, count): &(u64, u64)| -> Result<Vec<T>> { (first..first + count).map(&f).collect() };

    #[cfg(feature = "parallel")]
    let per_worker: Vec<Result<Vec<T>>> = {
        use rayon::prelude::*;
        if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
            pool.install(|| ranges.par_iter().map(worker).collect())
        } else {
            ranges.iter().map(worker).collect()
        }
    };
    #[cfg(not(feature = "parallel"))]
    let per_worker: Vec<Result<Vec<T>>> = ranges.iter().map(worker).collect();

    let mut out = Vec::with_capacity(num_blocks as usize);
    for w in per_worker {
        out.extend(w?);
    }
    Ok(out)
}
