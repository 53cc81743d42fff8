//! Local vertex/edge oracles for random greedy maximal matching, generic
//! over how incident edges are discovered.
//!
//! The greedy matching under a fixed rank order is fully determined by edge
//! ranks: an edge is matched iff no lower-ranked adjacent edge is matched.
//! The oracles explore only lower-ranked incident edges, in increasing rank
//! order, memoizing per-edge results. Edge discovery is abstracted behind
//! [`EdgeAccess`]: the explicit adapter serves materialized adjacency lists,
//! while [`ImplicitMultigraph`] discovers edges of the auxiliary multigraph
//! of a set system by scanning (element, set) candidate pairs in rank order
//! under membership queries.

mod explicit_access;
mod implicit;

pub use explicit_access::ExplicitAccess;
pub use implicit::ImplicitMultigraph;

use std::collections::HashMap;

use serde::Serialize;

use crate::oracle::{EdgeId, Membership, RankKey};

/// Per-run memo of edge membership in the greedy matching. Entries never
/// change once written.
#[derive(Clone, Debug, Default)]
pub struct OracleMemo {
    map: HashMap<EdgeId, bool>,
}

impl OracleMemo {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> Option<bool> {
        self.map.get(&e).copied()
    }

    #[inline]
    pub fn insert(&mut self, e: EdgeId, matched: bool) {
        let prev = self.map.insert(e, matched);
        debug_assert!(
            prev.is_none() || prev == Some(matched),
            "memo entry for {e:?} changed within a run"
        );
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Exploration counters: per-edge oracle calls, per-vertex neighbor
/// discovery requests, and a recursion depth histogram.
#[derive(Clone, Debug, Default)]
pub struct QueryStats {
    edge_calls: HashMap<EdgeId, u64>,
    neighbor_requests: HashMap<usize, u64>,
    depth_histogram: Vec<u64>,
    total_edge_calls: u64,
}

#[derive(Serialize)]
struct QueryStatsJson {
    total_edge_calls: u64,
    depth_histogram: Vec<u64>,
    edge_calls: Vec<((u32, u32, u32), u64)>,
    neighbor_requests: Vec<(usize, u64)>,
}

impl QueryStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn record_edge_call(&mut self, e: EdgeId, depth: usize) {
        *self.edge_calls.entry(e).or_insert(0) += 1;
        self.total_edge_calls += 1;
        if self.depth_histogram.len() <= depth {
            self.depth_histogram.resize(depth + 1, 0);
        }
        self.depth_histogram[depth] += 1;
    }

    #[inline]
    pub(crate) fn record_neighbor_request(&mut self, v: usize) {
        *self.neighbor_requests.entry(v).or_insert(0) += 1;
    }

    pub fn total_edge_calls(&self) -> u64 {
        self.total_edge_calls
    }

    pub fn edge_calls(&self, e: EdgeId) -> u64 {
        self.edge_calls.get(&e).copied().unwrap_or(0)
    }

    pub fn edge_call_map(&self) -> &HashMap<EdgeId, u64> {
        &self.edge_calls
    }

    pub fn neighbor_requests(&self, v: usize) -> u64 {
        self.neighbor_requests.get(&v).copied().unwrap_or(0)
    }

    pub fn depth_histogram(&self) -> &[u64] {
        &self.depth_histogram
    }

    /// Deterministic JSON export for the bench harness.
    pub fn to_json(&self) -> serde_json::Value {
        let mut edge_calls: Vec<((u32, u32, u32), u64)> = self
            .edge_calls
            .iter()
            .map(|(e, &c)| ((e.u(), e.v(), e.set()), c))
            .collect();
        edge_calls.sort_unstable();
        let mut neighbor_requests: Vec<(usize, u64)> =
            self.neighbor_requests.iter().map(|(&v, &c)| (v, c)).collect();
        neighbor_requests.sort_unstable();
        serde_json::to_value(QueryStatsJson {
            total_edge_calls: self.total_edge_calls,
            depth_histogram: self.depth_histogram.clone(),
            edge_calls,
            neighbor_requests,
        })
        .expect("stats serialize")
    }
}

/// An incident edge as handed to the oracle engine: the total-order key and
/// the vertex handle of the far endpoint.
#[derive(Clone, Copy, Debug)]
pub struct IncidentEdge {
    pub key: RankKey,
    pub other: usize,
}

/// Rank-ordered incident edge discovery. `incident(v, idx, bound)` returns
/// the `idx`-th lowest-ranked edge at `v`, or `None` once no further edge
/// below `bound` exists. Implementations charge whatever oracle queries the
/// discovery costs and may cache freely; results must be stable within a
/// run.
pub trait EdgeAccess {
    fn vertex_count(&self) -> usize;
    fn incident(
        &mut self,
        v: usize,
        idx: usize,
        bound: Option<&RankKey>,
        stats: &mut QueryStats,
    ) -> Option<IncidentEdge>;
}

/// The oracle engine. One engine borrows one run's memo and stats; the
/// graph access object carries its own caches.
pub struct RgmmEngine<'a, G: EdgeAccess> {
    pub graph: &'a mut G,
    pub memo: &'a mut OracleMemo,
    pub stats: &'a mut QueryStats,
    depth: usize,
}

impl<'a, G: EdgeAccess> RgmmEngine<'a, G> {
    pub fn new(graph: &'a mut G, memo: &'a mut OracleMemo, stats: &'a mut QueryStats) -> Self {
        RgmmEngine {
            graph,
            memo,
            stats,
            depth: 0,
        }
    }

    /// True iff `v` is matched in the greedy matching: some incident edge is
    /// in the matching. Scans incident edges in increasing rank; once one
    /// matches, higher edges cannot.
    pub fn vertex_matched(&mut self, v: usize) -> bool {
        let mut idx = 0;
        while let Some(e) = self.graph.incident(v, idx, None, self.stats) {
            if self.matched_via_scan(e.key, e.other) {
                return true;
            }
            idx += 1;
        }
        false
    }

    /// True iff the edge is in the greedy matching, decided standalone by
    /// clearing both endpoints.
    pub fn edge_in_matching(&mut self, key: RankKey, u_handle: usize, v_handle: usize) -> bool {
        self.stats.record_edge_call(key.id, self.depth);
        if let Some(r) = self.memo.get(key.id) {
            return r;
        }
        let result = !self.side_blocks(key, u_handle) && !self.side_blocks(key, v_handle);
        self.memo.insert(key.id, result);
        result
    }

    /// Directional oracle: decides membership of the edge given that the
    /// caller has already verified no lower-ranked edge at the *other*
    /// endpoint is matched; only `scan_side` is examined here.
    fn matched_via_scan(&mut self, key: RankKey, scan_side: usize) -> bool {
        self.stats.record_edge_call(key.id, self.depth);
        if let Some(r) = self.memo.get(key.id) {
            return r;
        }
        self.depth += 1;
        let result = !self.side_blocks(key, scan_side);
        self.depth -= 1;
        self.memo.insert(key.id, result);
        result
    }

    /// True iff some edge at `side` with rank below `key` is matched.
    /// Scanning ascending keeps the directional invariant for recursion.
    fn side_blocks(&mut self, key: RankKey, side: usize) -> bool {
        let mut idx = 0;
        while let Some(e2) = self.graph.incident(side, idx, Some(&key), self.stats) {
            debug_assert!(e2.key < key);
            if self.matched_via_scan(e2.key, e2.other) {
                return true;
            }
            idx += 1;
        }
        false
    }
}

/// Vertex oracle over the implicit multigraph, by element id.
pub fn vertex_oracle<M: Membership>(
    g: &mut ImplicitMultigraph<'_, M>,
    element: usize,
    memo: &mut OracleMemo,
    stats: &mut QueryStats,
) -> bool {
    let v = g
        .vertex_index(element)
        .expect("element is not a vertex of the multigraph");
    RgmmEngine::new(g, memo, stats).vertex_matched(v)
}

/// Edge oracle over the implicit multigraph. `endpoint` names the endpoint
/// the caller holds, per the oracle signature; membership of the edge in the
/// matching does not depend on it.
pub fn edge_oracle<M: Membership>(
    g: &mut ImplicitMultigraph<'_, M>,
    e: EdgeId,
    endpoint: usize,
    memo: &mut OracleMemo,
    stats: &mut QueryStats,
) -> bool {
    assert!(
        endpoint == e.u() as usize || endpoint == e.v() as usize,
        "{endpoint} is not an endpoint of {e:?}"
    );
    let u = g.vertex_index(e.u() as usize).expect("endpoint not a vertex");
    let v = g.vertex_index(e.v() as usize).expect("endpoint not a vertex");
    let key = g.rank().key(e);
    RgmmEngine::new(g, memo, stats).edge_in_matching(key, u, v)
}

/// Result of the matching-size estimation.
#[derive(Clone, Debug, Serialize)]
pub struct RgmmEstimate {
    /// The one-sided estimate of the expected greedy matching size.
    pub mu_tilde: f64,
    pub matched_draws: u64,
    pub draws: u64,
    pub vertex_count: usize,
}

/// Estimates the expected RGMM size by probing `s = ceil(48 ln(k)/eps^2)`
/// uniform vertices with the vertex oracle under one shared rank seed and a
/// shared memo, then shifting down by `eps |V|/4` so the estimate stays
/// below the matching size with high probability.
pub fn estimate_rgmm_size<M: Membership>(
    g: &mut ImplicitMultigraph<'_, M>,
    eps: f64,
    seed: u64,
    memo: &mut OracleMemo,
    stats: &mut QueryStats,
) -> RgmmEstimate {
    use rand::prelude::*;
    assert!(eps > 0.0 && eps < 1.0);
    let v_count = g.vertices().len();
    if v_count == 0 {
        return RgmmEstimate {
            mu_tilde: 0.0,
            matched_draws: 0,
            draws: 0,
            vertex_count: 0,
        };
    }
    let k = g.universe_size().max(2) as f64;
    let s = (48.0 * k.ln() / (eps * eps)).ceil() as u64;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut matched_cache: Vec<Option<bool>> = vec![None; v_count];
    let mut matched_draws = 0u64;
    for _ in 0..s {
        let v = rng.random_range(0..v_count);
        let m = match matched_cache[v] {
            Some(m) => m,
            None => {
                let m = RgmmEngine::new(g, memo, stats).vertex_matched(v);
                matched_cache[v] = Some(m);
                m
            }
        };
        if m {
            matched_draws += 1;
        }
    }
    let nf = v_count as f64;
    let mu_tilde = nf / (2.0 * s as f64) * matched_draws as f64 - eps * nf / 4.0;
    RgmmEstimate {
        mu_tilde,
        matched_draws,
        draws: s,
        vertex_count: v_count,
    }
}
