//! Instance sparsification: sequential set removal so each surviving set has
//! few surviving elements, followed by a low/high element split so each
//! low element lies in few surviving sets.
//!
//! All thresholds use natural log of the family size; sampling is with
//! replacement and duplicate samples count per draw.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::oracle::Membership;

/// Outcome of the set-sparsification pass: surviving set indices, surviving
/// elements, and the number of removed sets.
#[derive(Clone, Debug)]
pub struct SetSparsifyResult {
    pub surviving_sets: Vec<usize>,
    pub surviving_elements: Vec<usize>,
    pub removed_sets: usize,
    /// Set indices that were removed, in removal order.
    pub removed_set_indices: Vec<usize>,
    /// `|S ∩ U_hat|` of each removed set, measured at removal time.
    pub removed_overlaps: Vec<usize>,
}

/// Disjoint partition of the surviving elements by sampled set-degree.
#[derive(Clone, Debug)]
pub struct ElementPartition {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
}

/// Iterates the family in order. For each set, samples `r1 = ceil(|U|/alpha)`
/// elements of the current universe with replacement and queries them against
/// the set; on at least `10 ln n` hits the set is removed together with all
/// of its surviving elements (found by querying the whole current universe).
/// Processing stops early once the universe drops below `10 alpha ln n`.
pub fn sparsify_sets<M: Membership>(oracle: &mut M, alpha: f64, seed: u64) -> SetSparsifyResult {
    assert!(alpha >= 1.0, "alpha must be at least 1");
    let n = oracle.family_size();
    let k = oracle.universe_size();
    let ln_n = (n.max(1) as f64).ln();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    oracle.ledger_mut().begin_phase("sparsify_sets");

    // current universe with O(1) removal by swap
    let mut universe: Vec<usize> = (0..k).collect();
    let mut position: Vec<usize> = (0..k).collect();
    let mut alive = vec![true; k];
    let remove_element = |universe: &mut Vec<usize>, position: &mut Vec<usize>, e: usize| {
        let pos = position[e];
        let last = *universe.last().unwrap();
        universe.swap_remove(pos);
        if pos < universe.len() {
            position[last] = pos;
        }
    };

    let mut surviving_sets = Vec::with_capacity(n);
    let mut removed_set_indices = Vec::new();
    let mut removed_overlaps = Vec::new();
    let mut stopped_at = n;
    for s in 0..n {
        if (universe.len() as f64) < 10.0 * alpha * ln_n {
            stopped_at = s;
            break;
        }
        let r1 = (universe.len() as f64 / alpha).ceil() as usize;
        let mut hits = 0usize;
        for _ in 0..r1 {
            let e = universe[rng.random_range(0..universe.len())];
            if oracle.query(e, s) {
                hits += 1;
            }
        }
        if (hits as f64) >= 10.0 * ln_n {
            removed_set_indices.push(s);
            // remove every surviving element of the set, discovered by
            // querying the whole current universe
            let snapshot: Vec<usize> = universe.clone();
            let mut overlap = 0usize;
            for e in snapshot {
                if oracle.query(e, s) {
                    alive[e] = false;
                    overlap += 1;
                    remove_element(&mut universe, &mut position, e);
                }
            }
            removed_overlaps.push(overlap);
        } else {
            surviving_sets.push(s);
        }
    }
    // sets after an early stop survive unprocessed
    surviving_sets.extend(stopped_at..n);
    oracle.ledger_mut().end_phase();

    let mut surviving_elements: Vec<usize> = (0..k).filter(|&e| alive[e]).collect();
    surviving_elements.sort_unstable();
    SetSparsifyResult {
        surviving_sets,
        surviving_elements,
        removed_sets: removed_set_indices.len(),
        removed_set_indices,
        removed_overlaps,
    }
}

/// Samples `r2 = ceil(|U|/beta)` surviving sets with replacement and queries
/// every surviving element against each; elements hit by at most
/// `20 ln(n)/eps` sampled sets are low, the rest high. When `r2` is below
/// that threshold no sampling happens and everything is low. An empty
/// surviving family also puts everything in low.
pub fn sparsify_elements<M: Membership>(
    oracle: &mut M,
    surviving_sets: &[usize],
    surviving_elements: &[usize],
    beta: f64,
    eps: f64,
    seed: u64,
) -> ElementPartition {
    assert!(beta >= 1.0, "beta must be at least 1");
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    let n = oracle.family_size();
    let ln_n = (n.max(1) as f64).ln();
    let threshold = 20.0 * ln_n / eps;
    let r2 = (surviving_elements.len() as f64 / beta).ceil() as usize;
    if (r2 as f64) < threshold || surviving_sets.is_empty() {
        return ElementPartition {
            low: surviving_elements.to_vec(),
            high: Vec::new(),
        };
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    oracle.ledger_mut().begin_phase("sparsify_elements");
    let mut hit_counts = vec![0usize; surviving_elements.len()];
    for _ in 0..r2 {
        let s = surviving_sets[rng.random_range(0..surviving_sets.len())];
        for (i, &e) in surviving_elements.iter().enumerate() {
            if oracle.query(e, s) {
                hit_counts[i] += 1;
            }
        }
    }
    oracle.ledger_mut().end_phase();
    let mut low = Vec::new();
    let mut high = Vec::new();
    for (i, &e) in surviving_elements.iter().enumerate() {
        if (hit_counts[i] as f64) <= threshold {
            low.push(e);
        } else {
            high.push(e);
        }
    }
    ElementPartition { low, high }
}
