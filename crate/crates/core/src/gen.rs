//! Deterministic instance generators. Every instance is a pure function of
//! `(kind, sizes, seed)`.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::oracle::{MetricInstance, SetSystem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetKind {
    /// Each (element, set) pair included independently with probability `p`.
    UniformRandom { p: f64 },
    /// A planted partition of the universe into `cover_size` blocks plus
    /// random block-aligned noise sets; `overlap` controls how much noise
    /// sets leak outside their block.
    PlantedCover { cover_size: usize, overlap: f64 },
    /// Singletons only; beyond the first `k` exact singletons, extra sets are
    /// duplicate singletons of random elements.
    SingletonHeavy,
    /// All `k` singletons plus random 2- and 3-element sets.
    PairsAndTriples,
    /// A few dense planted sets behind a background of singletons and sparse
    /// random sets; the dense sets come last in family order, so the
    /// sparsifier pays the full sequential sampling cost before removing
    /// them.
    DenseAndSparse { dense_sets: usize, dense_p: f64, sparse_mean: f64 },
    /// `k * degree / 2` uniform random pairs as 2-element sets: the
    /// auxiliary multigraph is a random multigraph of the given mean degree.
    /// `n` is ignored (the family size is the edge count).
    RandomMultigraph { degree: f64 },
}

#[derive(Clone, Debug)]
pub struct GeneratedSets {
    pub system: SetSystem,
    /// Upper bound on the optimal cover recorded by planted generators.
    pub planted_cover_upper: Option<usize>,
}

pub fn generate_set_system(kind: &SetKind, k: usize, n: usize, seed: u64) -> Result<GeneratedSets> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut planted = None;
    let sets: Vec<Vec<usize>> = match kind {
        SetKind::UniformRandom { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(CoreError::Config(format!("p = {p} out of [0,1]")));
            }
            (0..n)
                .map(|_| (0..k).filter(|_| rng.random::<f64>() < *p).collect())
                .collect()
        }
        SetKind::PlantedCover { cover_size, overlap } => {
            if *cover_size == 0 || *cover_size > k.max(1) || *cover_size > n {
                return Err(CoreError::Config(format!(
                    "planted cover_size {cover_size} infeasible for k={k}, n={n}"
                )));
            }
            planted = Some(*cover_size);
            let blocks: Vec<Vec<usize>> = (0..*cover_size)
                .map(|b| (0..k).filter(|e| e % cover_size == b).collect())
                .collect();
            let mut sets: Vec<Vec<usize>> = blocks.clone();
            for _ in *cover_size..n {
                let b = rng.random_range(0..*cover_size);
                let mut s: Vec<usize> = blocks[b]
                    .iter()
                    .copied()
                    .filter(|_| rng.random::<f64>() < 0.7)
                    .collect();
                if k > blocks[b].len() {
                    let p_out = (overlap * 0.7 * blocks[b].len() as f64
                        / (k - blocks[b].len()) as f64)
                        .min(1.0);
                    for e in 0..k {
                        if e % cover_size != b && rng.random::<f64>() < p_out {
                            s.push(e);
                        }
                    }
                }
                sets.push(s);
            }
            sets
        }
        SetKind::SingletonHeavy => {
            if n < k {
                return Err(CoreError::Config(format!(
                    "singleton_heavy needs n >= k, got n={n}, k={k}"
                )));
            }
            planted = Some(k);
            let mut sets: Vec<Vec<usize>> = (0..k).map(|e| vec![e]).collect();
            for _ in k..n {
                sets.push(vec![rng.random_range(0..k.max(1))]);
            }
            sets
        }
        SetKind::PairsAndTriples => {
            if n < k || k < 3 {
                return Err(CoreError::Config(format!(
                    "pairs_and_triples needs n >= k >= 3, got n={n}, k={k}"
                )));
            }
            planted = Some(k);
            let mut sets: Vec<Vec<usize>> = (0..k).map(|e| vec![e]).collect();
            for _ in k..n {
                let size = if rng.random::<bool>() { 2 } else { 3 };
                let mut s = Vec::with_capacity(size);
                while s.len() < size {
                    let e = rng.random_range(0..k);
                    if !s.contains(&e) {
                        s.push(e);
                    }
                }
                sets.push(s);
            }
            sets
        }
        SetKind::DenseAndSparse {
            dense_sets,
            dense_p,
            sparse_mean,
        } => {
            let d = (*dense_sets).min(n);
            let singles = k.min(n - d);
            let sparse = n - d - singles;
            let p_sparse = (sparse_mean / k.max(1) as f64).min(1.0);
            let mut sets: Vec<Vec<usize>> = (0..singles).map(|e| vec![e]).collect();
            for _ in 0..sparse {
                sets.push((0..k).filter(|_| rng.random::<f64>() < p_sparse).collect());
            }
            for _ in 0..d {
                sets.push((0..k).filter(|_| rng.random::<f64>() < *dense_p).collect());
            }
            sets
        }
        SetKind::RandomMultigraph { degree } => {
            if k < 2 || *degree < 0.0 {
                return Err(CoreError::Config(format!(
                    "random_multigraph needs k >= 2 and degree >= 0, got k={k}"
                )));
            }
            let m = (k as f64 * degree / 2.0).round() as usize;
            (0..m)
                .map(|_| {
                    let a = rng.random_range(0..k);
                    let mut b = rng.random_range(0..k);
                    while b == a {
                        b = rng.random_range(0..k);
                    }
                    vec![a, b]
                })
                .collect()
        }
    };
    Ok(GeneratedSets {
        system: SetSystem::new(k, sets)?,
        planted_cover_upper: planted,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    /// Points uniform in the unit cube of the given dimension.
    Euclidean { dim: usize },
    /// Shortest-path closure of a complete graph with uniform random base
    /// weights in [1, 4); cubic in `n_pts`.
    RandomClosure,
}

pub fn generate_metric(
    kind: &MetricKind,
    n_pts: usize,
    terminal_fraction: f64,
    seed: u64,
) -> Result<MetricInstance> {
    if n_pts < 2 {
        return Err(CoreError::Config(format!("n_pts = {n_pts} < 2")));
    }
    if !(0.0..=1.0).contains(&terminal_fraction) {
        return Err(CoreError::Config(format!(
            "terminal_fraction = {terminal_fraction} out of [0,1]"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let t_count = ((terminal_fraction * n_pts as f64).ceil() as usize).clamp(1, n_pts);
    let mut idx: Vec<usize> = (0..n_pts).collect();
    idx.shuffle(&mut rng);
    let terminals: Vec<usize> = idx[..t_count].to_vec();
    match kind {
        MetricKind::Euclidean { dim } => {
            if *dim == 0 {
                return Err(CoreError::Config("dimension must be positive".into()));
            }
            let coords: Vec<Vec<f64>> = (0..n_pts)
                .map(|_| (0..*dim).map(|_| rng.random::<f64>()).collect())
                .collect();
            MetricInstance::from_coords(&coords, terminals)
        }
        MetricKind::RandomClosure => {
            let round6 = |x: f64| (x * 1e6).round() / 1e6;
            let mut w = vec![0.0f64; n_pts * n_pts];
            for i in 0..n_pts {
                for j in (i + 1)..n_pts {
                    let d = round6(1.0 + 3.0 * rng.random::<f64>());
                    w[i * n_pts + j] = d;
                    w[j * n_pts + i] = d;
                }
            }
            for z in 0..n_pts {
                for i in 0..n_pts {
                    for j in 0..n_pts {
                        let via = w[i * n_pts + z] + w[z * n_pts + j];
                        if via < w[i * n_pts + j] {
                            w[i * n_pts + j] = via;
                        }
                    }
                }
            }
            let matrix: Vec<Vec<f64>> = (0..n_pts)
                .map(|i| w[i * n_pts..(i + 1) * n_pts].to_vec())
                .collect();
            MetricInstance::from_matrix(matrix, terminals)
        }
    }
}
