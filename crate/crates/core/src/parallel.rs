//! Deterministic fan-out of Monte-Carlo work over independent RNG streams.
//!
//! Work is split into fixed-size tasks; task `i` draws from stream `i` of a
//! ChaCha generator keyed by one value taken from the caller's RNG, and the
//! per-task results are returned in task order. Results therefore do not
//! depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIMS_PER_TASK: usize = 512;

pub fn task_rngs<R: Rng + ?Sized>(rng: &mut R, tasks: usize) -> Vec<ChaCha8Rng> {
    let key: u64 = rng.gen();
    (0..tasks)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(key);
            r.set_stream(i as u64);
            r
        })
        .collect()
}

/// Splits `total` simulations into `(rng, count)` tasks and maps `f` over them.
pub fn map_sims<R, T, F>(rng: &mut R, total: usize, f: F) -> Vec<T>
where
    R: Rng + ?Sized,
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let tasks = total.div_ceil(SIMS_PER_TASK);
    let rngs = task_rngs(rng, tasks);
    let jobs: Vec<(ChaCha8Rng, usize)> = rngs
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, SIMS_PER_TASK.min(total - i * SIMS_PER_TASK)))
        .collect();
    map_ordered(jobs, |(mut r, count)| f(&mut r, count))
}

#[cfg(feature = "parallel")]
pub fn map_ordered<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    items.into_iter().map(f).collect()
}
