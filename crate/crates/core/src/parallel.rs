//! Deterministic parallel reductions and worker-pool setup.
//!
//! Every reduction over particles is split into fixed-size chunks, each chunk
//! summed pairwise, and the chunk sums combined pairwise in index order. The
//! chunk boundaries never depend on the number of workers, so results are
//! bit-identical for any pool size.

use rayon::prelude::*;

/// Number of particles handled per parallel task.
pub const CHUNK: usize = 4096;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MEANREFLECT_THREADS";

const PAIRWISE_BASE: usize = 32;

fn pairwise_by<F: Fn(f64) -> f64>(values: &[f64], f: &F) -> f64 {
    if values.len() <= PAIRWISE_BASE {
        let mut acc = 0.0;
        for &v in values {
            acc += f(v);
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_by(&values[..mid], f) + pairwise_by(&values[mid..], f)
}

/// Pairwise sum of a slice, sequential.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_by(values, &|v| v)
}

/// Sum of `f(v)` over `values` with a fixed summation tree.
pub fn det_sum_by<F>(values: &[f64], f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    if values.len() <= CHUNK {
        return pairwise_by(values, &f);
    }
    let partial: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|chunk| pairwise_by(chunk, &f))
        .collect();
    pairwise_sum(&partial)
}

pub fn det_sum(values: &[f64]) -> f64 {
    det_sum_by(values, |v| v)
}

pub fn det_mean(values: &[f64]) -> f64 {
    det_sum(values) / values.len() as f64
}

/// Mean and population variance, two-pass.
pub fn det_mean_var(values: &[f64]) -> (f64, f64) {
    let mean = det_mean(values);
    let var = det_sum_by(values, |v| (v - mean) * (v - mean)) / values.len() as f64;
    (mean, var)
}

/// Worker count from `MEANREFLECT_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Builds a pool with `threads` workers (hardware parallelism when `None`).
pub fn build_pool(threads: Option<usize>) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder.build().expect("failed to build worker pool")
}
