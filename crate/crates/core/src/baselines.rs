//! Ground-truth oracles for tests: exhaustive set cover, offline greedy
//! matching under explicit ranks, Monte Carlo RGMM expectation, exact MST
//! and exact Steiner tree on tiny instances. Everything here may read
//! instance internals; estimators may not.

use std::collections::HashMap;

use crate::error::{CoreError, Result};
use crate::oracle::{DistanceOracle, EdgeId, MetricInstance, RankFunction, SetSystem};
use crate::par;

/// Largest universe accepted by the exhaustive set cover solver.
pub const EXACT_SC_MAX_UNIVERSE: usize = 22;
/// Largest metric accepted by the exact Steiner solver.
pub const EXACT_STEINER_MAX_POINTS: usize = 16;

/// Outcome of exhaustive set cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverValue {
    Size(usize),
    /// Some element is contained in no eligible set.
    Uncoverable(usize),
}

impl CoverValue {
    pub fn size(&self) -> Option<usize> {
        match self {
            CoverValue::Size(s) => Some(*s),
            CoverValue::Uncoverable(_) => None,
        }
    }
}

/// Exact minimum set cover by BFS over universe bitmasks, branching on the
/// lowest uncovered element. With `restrict_no_pairs` sets of size exactly 2
/// are excluded first.
pub fn exact_set_cover(system: &SetSystem, restrict_no_pairs: bool) -> Result<CoverValue> {
    let k = system.universe_size();
    if k > EXACT_SC_MAX_UNIVERSE {
        return Err(CoreError::SizeLimit(format!(
            "exact set cover limited to k <= {EXACT_SC_MAX_UNIVERSE}, got {k}"
        )));
    }
    if k == 0 {
        return Ok(CoverValue::Size(0));
    }
    let full: u32 = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
    let mut masks: Vec<u32> = Vec::new();
    for s in 0..system.family_size() {
        if restrict_no_pairs && system.set_size(s) == 2 {
            continue;
        }
        let mut m = 0u32;
        for &e in system.set_members(s) {
            m |= 1 << e;
        }
        masks.push(m);
    }
    masks.sort_unstable();
    masks.dedup();
    let union = masks.iter().fold(0u32, |a, m| a | m);
    if union != full {
        let missing = (!union & full).trailing_zeros() as usize;
        return Ok(CoverValue::Uncoverable(missing));
    }
    let mut sets_for: Vec<Vec<u32>> = vec![Vec::new(); k];
    for &m in &masks {
        let mut bits = m;
        while bits != 0 {
            let e = bits.trailing_zeros() as usize;
            sets_for[e].push(m);
            bits &= bits - 1;
        }
    }
    let mut dist: Vec<u8> = vec![u8::MAX; (full as usize) + 1];
    dist[0] = 0;
    let mut frontier = vec![0u32];
    let mut depth = 0u8;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &mask in &frontier {
            if mask == full {
                return Ok(CoverValue::Size(depth as usize));
            }
            let e = (!mask & full).trailing_zeros() as usize;
            for &sm in &sets_for[e] {
                let nm = mask | sm;
                if dist[nm as usize] == u8::MAX {
                    dist[nm as usize] = depth + 1;
                    next.push(nm);
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    unreachable!("coverable instance must reach the full mask");
}

/// Exact `chi = k - SC`, or `None` when the instance is uncoverable.
pub fn exact_chi(system: &SetSystem, restrict_no_pairs: bool) -> Result<Option<i64>> {
    Ok(exact_set_cover(system, restrict_no_pairs)?
        .size()
        .map(|sc| system.universe_size() as i64 - sc as i64))
}

/// Eagerly materialized multigraph, consistent with the implicit
/// construction on the same `(family subset, vertex subset)`.
#[derive(Clone, Debug)]
pub struct ExplicitMultigraph {
    max_vertex: u32,
    pub edges: Vec<EdgeId>,
}

impl ExplicitMultigraph {
    pub fn new(edges: Vec<EdgeId>) -> Self {
        let max_vertex = edges.iter().map(|e| e.v()).max().map_or(0, |v| v + 1);
        ExplicitMultigraph { max_vertex, edges }
    }

    /// Builds the auxiliary multigraph of a set system: one parallel edge per
    /// (element pair within a set, set) triple, restricted to the given
    /// vertices and sets. With `exclude_size_two`, sets of exactly two
    /// elements (in the full universe) contribute no edges.
    pub fn from_set_system(
        system: &SetSystem,
        vertices: Option<&[u32]>,
        sets: Option<&[usize]>,
        exclude_size_two: bool,
    ) -> Self {
        let in_vertexset: Vec<bool> = match vertices {
            Some(vs) => {
                let mut f = vec![false; system.universe_size()];
                for &v in vs {
                    f[v as usize] = true;
                }
                f
            }
            None => vec![true; system.universe_size()],
        };
        let set_indices: Vec<usize> = match sets {
            Some(ss) => ss.to_vec(),
            None => (0..system.family_size()).collect(),
        };
        let mut edges = Vec::new();
        for s in set_indices {
            if exclude_size_two && system.set_size(s) == 2 {
                continue;
            }
            let members: Vec<u32> = system
                .set_members(s)
                .iter()
                .copied()
                .filter(|&e| in_vertexset[e as usize])
                .collect();
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    edges.push(EdgeId::new(members[i], members[j], s as u32).unwrap());
                }
            }
        }
        let max_vertex = system.universe_size() as u32;
        ExplicitMultigraph { max_vertex, edges }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: u32) -> usize {
        self.edges
            .iter()
            .filter(|e| e.u() == v || e.v() == v)
            .count()
    }

    pub fn max_vertex(&self) -> u32 {
        self.max_vertex
    }
}

/// The greedy matching in increasing `(rank, id)` order; maximal and
/// deterministic for a fixed rank function.
#[derive(Clone, Debug)]
pub struct GreedyMatching {
    pub edges: Vec<EdgeId>,
    matched: Vec<bool>,
    in_matching: HashMap<EdgeId, bool>,
}

impl GreedyMatching {
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_matched(&self, v: u32) -> bool {
        self.matched.get(v as usize).copied().unwrap_or(false)
    }

    pub fn edge_matched(&self, e: EdgeId) -> bool {
        self.in_matching.get(&e).copied().unwrap_or(false)
    }
}

pub fn offline_greedy_matching(g: &ExplicitMultigraph, rf: &RankFunction) -> GreedyMatching {
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    order.sort_unstable_by_key(|&i| rf.key(g.edges[i]));
    let mut matched = vec![false; g.max_vertex as usize];
    let mut in_matching = HashMap::with_capacity(g.edges.len());
    let mut picked = Vec::new();
    for i in order {
        let e = g.edges[i];
        let (u, v) = (e.u() as usize, e.v() as usize);
        if !matched[u] && !matched[v] {
            matched[u] = true;
            matched[v] = true;
            picked.push(e);
            in_matching.insert(e, true);
        } else {
            in_matching.insert(e, false);
        }
    }
    GreedyMatching {
        edges: picked,
        matched,
        in_matching,
    }
}

/// Monte Carlo estimate of the expected RGMM size over random rank draws.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    /// 99% confidence half-width from the sample standard error.
    pub half_width_99: f64,
    pub trials: u64,
}

pub fn mc_rgmm_expectation(g: &ExplicitMultigraph, trials: u64, base_seed: u64) -> McEstimate {
    assert!(trials >= 1);
    let seeds: Vec<u64> = (0..trials).map(|t| base_seed.wrapping_add(t)).collect();
    let sizes = par::run_seeded(&seeds, |s| {
        offline_greedy_matching(g, &RankFunction::new(s)).size() as f64
    });
    let n = sizes.len() as f64;
    let mean = sizes.iter().sum::<f64>() / n;
    let var = sizes.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n.max(2.0 - 1.0);
    let half_width_99 = 2.576 * (var / n).sqrt();
    McEstimate {
        mean,
        half_width_99,
        trials,
    }
}

/// Bracket on `chi = k - SC` from one exact maximal matching of the
/// auxiliary multigraph: on coverable instances every maximal matching `M`
/// satisfies `|M| <= chi <= 2|M|`. Returns `None` when some element lies in
/// no eligible set (then `SC` is undefined).
pub fn matching_chi_bracket(
    system: &SetSystem,
    exclude_size_two: bool,
    seed: u64,
) -> Option<(i64, i64)> {
    let k = system.universe_size();
    let mut covered = vec![false; k];
    for s in 0..system.family_size() {
        if exclude_size_two && system.set_size(s) == 2 {
            continue;
        }
        for &e in system.set_members(s) {
            covered[e as usize] = true;
        }
    }
    if covered.iter().any(|&c| !c) {
        return None;
    }
    let g = ExplicitMultigraph::from_set_system(system, None, None, exclude_size_two);
    let m = offline_greedy_matching(&g, &RankFunction::new(seed)).size() as i64;
    Some((m, 2 * m))
}

/// Prim's algorithm over the complete graph induced on `points`; reads the
/// instance directly (no queries charged).
pub fn exact_mst(metric: &MetricInstance, points: &[u32]) -> f64 {
    mst_with(points, |u, v| metric.distance_raw(u as usize, v as usize))
}

/// Prim's algorithm through the counted oracle; charges one distance query
/// per weight read.
pub fn mst_via_oracle(oracle: &mut DistanceOracle, points: &[u32]) -> f64 {
    mst_with(points, |u, v| oracle.query(u as usize, v as usize))
}

fn mst_with<F: FnMut(u32, u32) -> f64>(points: &[u32], mut weight: F) -> f64 {
    assert!(!points.is_empty(), "MST needs at least one point");
    let p = points.len();
    if p == 1 {
        return 0.0;
    }
    let mut in_tree = vec![false; p];
    let mut best = vec![f64::INFINITY; p];
    in_tree[0] = true;
    for j in 1..p {
        best[j] = weight(points[0], points[j]);
    }
    let mut total = 0.0;
    for _ in 1..p {
        let mut pick = usize::MAX;
        let mut pick_w = f64::INFINITY;
        for j in 0..p {
            if !in_tree[j] && best[j] < pick_w {
                pick = j;
                pick_w = best[j];
            }
        }
        in_tree[pick] = true;
        total += pick_w;
        for j in 0..p {
            if !in_tree[j] {
                let w = weight(points[pick], points[j]);
                if w < best[j] {
                    best[j] = w;
                }
            }
        }
    }
    total
}

/// Exact Steiner tree weight by minimizing `MST(T cup A)` over all subsets
/// `A` of Steiner points. Valid in the metric closure, which the containers
/// guarantee. Enforced to `n_pts <= 16`.
pub fn exact_steiner(metric: &MetricInstance) -> Result<f64> {
    let n = metric.n_points();
    if n > EXACT_STEINER_MAX_POINTS {
        return Err(CoreError::SizeLimit(format!(
            "exact Steiner limited to n_pts <= {EXACT_STEINER_MAX_POINTS}, got {n}"
        )));
    }
    let terminals = metric.terminals().to_vec();
    let steiner = metric.steiner_points();
    let mut best = f64::INFINITY;
    let m = steiner.len();
    let mut points = Vec::with_capacity(n);
    for mask in 0u32..(1 << m) {
        points.clear();
        points.extend_from_slice(&terminals);
        for (j, &sp) in steiner.iter().enumerate() {
            if mask & (1 << j) != 0 {
                points.push(sp);
            }
        }
        let w = exact_mst(metric, &points);
        if w < best {
            best = w;
        }
    }
    Ok(best)
}

/// Dreyfus-Wagner dynamic program in the metric closure; independent route
/// used to cross-check [`exact_steiner`] on instances with `n_pts <= 12`.
pub fn dreyfus_wagner_steiner(metric: &MetricInstance) -> Result<f64> {
    let n = metric.n_points();
    if n > 12 {
        return Err(CoreError::SizeLimit(format!(
            "Dreyfus-Wagner cross-check limited to n_pts <= 12, got {n}"
        )));
    }
    let terminals = metric.terminals();
    let t = terminals.len();
    if t == 1 {
        return Ok(0.0);
    }
    let d = |u: usize, v: usize| metric.distance_raw(u, v);
    // dp[mask][v]: min weight of a tree spanning terminal subset `mask`
    // (over terminals[..t-1]) plus point v. Rooted at the last terminal.
    let base = t - 1;
    let full = (1usize << base) - 1;
    let mut dp = vec![vec![f64::INFINITY; n]; full + 1];
    for i in 0..base {
        for v in 0..n {
            dp[1 << i][v] = d(terminals[i] as usize, v);
        }
    }
    for mask in 1..=full {
        if mask.count_ones() <= 1 {
            continue;
        }
        // merge step: split mask into two nonempty parts meeting at v
        for v in 0..n {
            let mut sub = (mask - 1) & mask;
            while sub != 0 {
                if sub < mask - sub {
                    break; // each unordered split visited once
                }
                let w = dp[sub][v] + dp[mask - sub][v];
                if w < dp[mask][v] {
                    dp[mask][v] = w;
                }
                sub = (sub - 1) & mask;
            }
        }
        // relax step: move the meeting point through the metric closure
        let snapshot: Vec<f64> = dp[mask].clone();
        for v in 0..n {
            let mut best = dp[mask][v];
            for (u, &su) in snapshot.iter().enumerate() {
                let w = su + d(u, v);
                if w < best {
                    best = w;
                }
            }
            dp[mask][v] = best;
        }
    }
    Ok(dp[full][terminals[base] as usize])
}
