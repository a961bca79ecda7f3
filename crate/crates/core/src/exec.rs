//! Deterministic chunked execution over subjects.
//!
//! Work is split into fixed chunks of [`CHUNK`] subjects. Each chunk gets its
//! own random stream keyed by `(step_seed, chunk index)` and results come back
//! in chunk order, so the output does not depend on the thread count or on
//! whether the parallel backend is used at all.

use std::ops::Range;

use crate::stats::RandomStream;

pub const CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

pub fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

fn chunk_range(c: usize, n: usize) -> Range<usize> {
    c * CHUNK..((c + 1) * CHUNK).min(n)
}

/// Runs `f(range, stream)` for every chunk of `0..n` and returns the results in
/// chunk order.
pub fn map_chunks<T, F>(mode: Parallelism, n: usize, step_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>, &mut RandomStream) -> T + Sync,
{
    let run = |c: usize| {
        let mut rng = RandomStream::keyed(step_seed, c as u64 + 1);
        f(chunk_range(c, n), &mut rng)
    };
    let chunks = chunk_count(n);
    match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel if chunks > 1 => {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(run).collect()
        }
        _ => (0..chunks).map(run).collect(),
    }
}

/// Like [`map_chunks`] without randomness.
pub fn map_chunks_det<T, F>(mode: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    map_chunks(mode, n, 0, |r, _| f(r))
}

/// Configures the global worker pool from `FATREAT_THREADS` when set.
/// Returns the requested count, if any.
pub fn init_thread_pool_from_env() -> Option<usize> {
    let threads = std::env::var("FATREAT_THREADS").ok()?.trim().parse::<usize>().ok()?;
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Some(threads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn chunk_results_ignore_backend() {
        let n = 3 * CHUNK + 17;
        let go = |mode| {
            map_chunks(mode, n, 99, |r, rng| r.map(|i| i as u64 ^ rng.next_u64()).collect::<Vec<_>>())
        };
        let a = go(Parallelism::Sequential);
        let b = go(Parallelism::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(a.iter().map(Vec::len).sum::<usize>(), n);
    }

    #[test]
    fn empty_input_has_no_chunks() {
        let out = map_chunks_det(Parallelism::Parallel, 0, |r| r.len());
        assert!(out.is_empty());
    }
}
