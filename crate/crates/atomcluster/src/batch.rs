//! Seeded trial batches. Trials are cut into fixed-size blocks; block `b`
//! of a run with seed `s` always draws from ChaCha stream `b` of seed `s`,
//! so results do not depend on how many workers run them.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const BLOCK_TRIALS: u64 = 4096;

/// Worker count: `SIM_THREADS` when set, else the available cores.
pub fn thread_count() -> CliResult<usize> {
    match std::env::var("SIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("SIM_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `trials` trials as blocks on a worker pool and returns the
/// per-block results in block order. `stream_base` separates independent
/// batches that share a seed (e.g. sweep points).
pub fn run_blocks<T, F>(seed: u64, stream_base: u64, trials: u64, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> CliResult<T> + Sync,
{
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let work = || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
                let mut rng = block_rng(seed, stream_base + b);
                f(&mut rng, n)
            })
            .collect()
    };
    // Already on a worker (e.g. one sweep point of many): share that pool.
    if rayon::current_thread_index().is_some() {
        return work();
    }
    with_pool(work)
}

/// Runs `f` on a pool sized by [`thread_count`].
pub fn with_pool<T: Send>(f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Resource(format!("cannot start workers: {e}")))?;
    pool.install(f)
}
