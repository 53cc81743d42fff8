use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Identity of one parallel edge of the auxiliary multigraph: an unordered
/// element pair together with the index of the set that produced it.
///
/// Canonical form has `u < v`; the only constructor enforces this, so a
/// non-canonical value cannot be built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId {
    u: u32,
    v: u32,
    set: u32,
}

impl EdgeId {
    #[inline]
    pub fn new(a: u32, b: u32, set: u32) -> Result<Self> {
        if a == b {
            return Err(CoreError::Contract(format!(
                "edge endpoints must differ, got ({a}, {b})"
            )));
        }
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Ok(EdgeId { u, v, set })
    }

    #[inline]
    pub fn u(&self) -> u32 {
        self.u
    }

    #[inline]
    pub fn v(&self) -> u32 {
        self.v
    }

    #[inline]
    pub fn set(&self) -> u32 {
        self.set
    }

    /// The endpoint that is not `a`. Panics if `a` is not an endpoint.
    #[inline]
    pub fn other(&self, a: u32) -> u32 {
        if a == self.u {
            self.v
        } else {
            assert_eq!(a, self.v, "vertex {a} is not an endpoint of {self:?}");
            self.u
        }
    }
}

/// Lazy realization of a uniformly random permutation over the edges of an
/// implicit multigraph: each edge gets an i.i.d. rank in `[0, 1)` derived
/// from a keyed 64-bit mixing function of `(seed, u, v, set)`. Sorting by
/// `(rank, EdgeId)` induces a uniformly random total order; the id tiebreak
/// handles hash collisions.
#[derive(Clone, Copy, Debug)]
pub struct RankFunction {
    seed: u64,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RankFunction {
    pub fn new(seed: u64) -> Self {
        RankFunction { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Raw 64 rank bits for an edge; deterministic in `(seed, e)`.
    #[inline]
    pub fn rank_bits(&self, e: EdgeId) -> u64 {
        let mut h = mix64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        h = mix64(h ^ (u64::from(e.u)).wrapping_mul(0xff51_afd7_ed55_8ccd));
        h = mix64(h ^ (u64::from(e.v)).wrapping_mul(0xc4ce_b9fe_1a85_ec53));
        h = mix64(h ^ (u64::from(e.set)).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        h
    }

    /// Rank as a real in `[0, 1)`.
    #[inline]
    pub fn rank(&self, e: EdgeId) -> f64 {
        self.rank_bits(e) as f64 / 18_446_744_073_709_551_616.0
    }

    /// Fully ordered key: rank bits with the canonical id as tiebreak.
    #[inline]
    pub fn key(&self, e: EdgeId) -> RankKey {
        RankKey {
            bits: self.rank_bits(e),
            id: e,
        }
    }
}

/// Total order on edges under a fixed rank function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RankKey {
    pub bits: u64,
    pub id: EdgeId,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_and_rejects_loops() {
        let e = EdgeId::new(7, 3, 1).unwrap();
        assert_eq!((e.u(), e.v(), e.set()), (3, 7, 1));
        assert!(EdgeId::new(4, 4, 0).is_err());
        assert_eq!(e.other(3), 7);
        assert_eq!(e.other(7), 3);
    }

    #[test]
    fn rank_is_deterministic() {
        let rf = RankFunction::new(42);
        let e = EdgeId::new(1, 2, 3).unwrap();
        assert_eq!(rf.rank_bits(e), rf.rank_bits(e));
        let r = rf.rank(e);
        assert!((0.0..1.0).contains(&r));
        assert_eq!(r, rf.rank(e));
    }

    #[test]
    fn distinct_seeds_give_distinct_ranks() {
        let a = RankFunction::new(1);
        let b = RankFunction::new(2);
        let mut collisions = 0;
        for i in 0..10_000u32 {
            let e = EdgeId::new(i, i + 1 + i % 53, i % 17).unwrap();
            if a.rank_bits(e) == b.rank_bits(e) {
                collisions += 1;
            }
        }
        assert_eq!(collisions, 0, "two seeds collided on {collisions} of 10^4 edges");
    }

    #[test]
    fn ranks_are_uniform_by_ks_test() {
        // Kolmogorov-Smirnov statistic against U[0,1) over 1e5 distinct edges.
        let rf = RankFunction::new(0xdead_beef);
        let m = 100_000u32;
        let mut ranks: Vec<f64> = (0..m)
            .map(|i| rf.rank(EdgeId::new(i, i + 1_000_000, i % 17).unwrap()))
            .collect();
        ranks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = ranks.len() as f64;
        let mut d: f64 = 0.0;
        for (i, r) in ranks.iter().enumerate() {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            d = d.max((r - lo).abs()).max((hi - r).abs());
        }
        assert!(d < 0.01, "KS statistic {d} too large for uniform ranks");
    }

    #[test]
    fn rank_order_law_three_edges() {
        // Sorting three fixed edges by (rank, id) over many seeds must hit all
        // 3! = 6 orders with equal frequency; chi-square with 5 dof at p=0.001
        // has critical value 20.515.
        let edges = [
            EdgeId::new(0, 1, 0).unwrap(),
            EdgeId::new(1, 2, 0).unwrap(),
            EdgeId::new(0, 2, 0).unwrap(),
        ];
        let trials = 100_000u64;
        let mut counts = [0u64; 6];
        for seed in 0..trials {
            let rf = RankFunction::new(seed);
            let mut order = [0usize, 1, 2];
            order.sort_by_key(|&i| rf.key(edges[i]));
            let idx = match order {
                [0, 1, 2] => 0,
                [0, 2, 1] => 1,
                [1, 0, 2] => 2,
                [1, 2, 0] => 3,
                [2, 0, 1] => 4,
                [2, 1, 0] => 5,
                _ => unreachable!(),
            };
            counts[idx] += 1;
        }
        let expected = trials as f64 / 6.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 20.515, "chi-square {chi2} rejects uniform edge orders: {counts:?}");
    }
}
