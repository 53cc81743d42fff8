//! Data-parallel execution of independent seeded runs.
//!
//! Estimator runs are pure functions of `(instance, params, seed)` over
//! immutable shared instances, so seed sweeps parallelize trivially. With
//! the `parallel` feature (default) [`run_seeded`] fans out over rayon;
//! without it the same call degrades to the sequential loop.
//! [`run_seeded_serial`] is always sequential and exists so benchmarks can
//! compare the two paths.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn run_seeded<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    seeds.par_iter().map(|&s| f(s)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_seeded<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    run_seeded_serial(seeds, f)
}

pub fn run_seeded_serial<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    seeds.iter().map(|&s| f(s)).collect()
}
