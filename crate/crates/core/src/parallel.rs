//! Shared worker pool for per-face evaluation.
//!
//! The pool size is read once from `PACKING_FORGE_THREADS`; unset or invalid
//! values fall back to the available parallelism.

use std::sync::OnceLock;

use rayon::prelude::*;

pub const THREADS_ENV: &str = "PACKING_FORGE_THREADS";

/// Below this many items the work runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 512;

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .thread_name(|i| format!("packing-forge-{i}"))
            .build()
            .expect("thread pool")
    })
}

pub fn thread_count() -> usize {
    pool().current_num_threads()
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if n < PARALLEL_THRESHOLD {
        (0..n).map(f).collect()
    } else {
        pool().install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let v = map_indexed(10_000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, x)| *x == 2 * i));
        assert!(thread_count() >= 1);
    }
}
