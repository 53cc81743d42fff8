use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use super::{DerivedParams, LevelDiag, SteinerParams, SteinerReport};
use crate::error::Result;
use crate::oracle::{DistanceOracle, EdgeId, RankFunction, RankKey};
use crate::rgmm::{EdgeAccess, IncidentEdge, OracleMemo, QueryStats, RgmmEngine};

/// Caching layer over the distance oracle. The terminal-terminal block is
/// warmed once (charged); Steiner-terminal distances are charged on first
/// touch and remembered. Repeated reads of a stored value are free.
struct DistCache<'a, 'o> {
    oracle: &'a mut DistanceOracle<'o>,
    terminals: Vec<u32>,
    steiner: Vec<u32>,
    tblock: Vec<f64>,
    srows: Vec<Option<Box<[f64]>>>,
}

impl<'a, 'o> DistCache<'a, 'o> {
    fn new(oracle: &'a mut DistanceOracle<'o>) -> Self {
        let terminals = oracle.terminals().to_vec();
        let tset: std::collections::HashSet<u32> = terminals.iter().copied().collect();
        let steiner: Vec<u32> = (0..oracle.n_points() as u32)
            .filter(|p| !tset.contains(p))
            .collect();
        let k = terminals.len();
        oracle.ledger_mut().begin_phase("terminal_block");
        let mut tblock = vec![0.0; k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let d = oracle.query(terminals[i] as usize, terminals[j] as usize);
                tblock[i * k + j] = d;
                tblock[j * k + i] = d;
            }
        }
        oracle.ledger_mut().end_phase();
        let n_s = steiner.len();
        DistCache {
            oracle,
            terminals,
            steiner,
            tblock,
            srows: vec![None; n_s],
        }
    }

    fn k(&self) -> usize {
        self.terminals.len()
    }

    #[inline]
    fn tt(&self, ti: usize, tj: usize) -> f64 {
        self.tblock[ti * self.terminals.len() + tj]
    }

    #[inline]
    fn ts(&mut self, spos: usize, tpos: usize) -> f64 {
        let k = self.terminals.len();
        let row = self.srows[spos].get_or_insert_with(|| vec![f64::NAN; k].into_boxed_slice());
        let v = row[tpos];
        if v.is_nan() {
            let d = self
                .oracle
                .query(self.steiner[spos] as usize, self.terminals[tpos] as usize);
            row[tpos] = d;
            d
        } else {
            v
        }
    }
}

/// Components of the threshold graph below one level, with that level's
/// representative nets. Terminal handles are positions into the estimator's
/// terminal list.
#[derive(Clone, Debug)]
pub struct LevelComponents {
    /// component index per terminal position
    pub comp_of: Vec<usize>,
    /// terminal positions per component
    pub comps: Vec<Vec<usize>>,
    /// net (representative positions) per component, built greedily in
    /// ascending terminal order
    pub nets: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum LevelClass {
    Case1,
    Light,
    Heavy,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BfsOutcome {
    Reps(Vec<u32>),
    Overflow,
}

const SAMPLE_COEFF: f64 = 20.0;
const COUNT_COEFF: f64 = 8.0;

pub(super) struct LevelRunner<'a, 'o> {
    cache: DistCache<'a, 'o>,
    params: SteinerParams,
    derived: DerivedParams,
    dense: bool,
    mst_weight: f64,
    d_base: f64,
    ratio: f64,
    level_cache: HashMap<usize, LevelComponents>,
    rng: ChaCha12Rng,
}

impl<'a, 'o> LevelRunner<'a, 'o> {
    pub(super) fn new(
        oracle: &'a mut DistanceOracle<'o>,
        params: &SteinerParams,
        derived: DerivedParams,
        dense: bool,
    ) -> Result<Self> {
        let cache = DistCache::new(oracle);
        let k = cache.k();
        // exact Prim over the warmed terminal block
        let mut mst_weight = 0.0;
        if k > 1 {
            let mut in_tree = vec![false; k];
            let mut best = vec![f64::INFINITY; k];
            in_tree[0] = true;
            for j in 1..k {
                best[j] = cache.tt(0, j);
            }
            for _ in 1..k {
                let mut pick = usize::MAX;
                let mut w = f64::INFINITY;
                for j in 0..k {
                    if !in_tree[j] && best[j] < w {
                        pick = j;
                        w = best[j];
                    }
                }
                in_tree[pick] = true;
                mst_weight += w;
                for j in 0..k {
                    if !in_tree[j] && cache.tt(pick, j) < best[j] {
                        best[j] = cache.tt(pick, j);
                    }
                }
            }
        }
        let mut d_base = f64::INFINITY;
        for i in 0..k {
            for j in (i + 1)..k {
                let d = cache.tt(i, j);
                if d > 0.0 && d < d_base {
                    d_base = d;
                }
            }
        }
        let rng = ChaCha12Rng::seed_from_u64(params.seed ^ 0x5f3c_91ab_22d1_7e09);
        Ok(LevelRunner {
            cache,
            params: params.clone(),
            derived,
            dense,
            mst_weight,
            d_base,
            ratio: 1.0 + params.epsilon,
            level_cache: HashMap::new(),
            rng,
        })
    }

    pub(super) fn mst_weight(&self) -> f64 {
        self.mst_weight
    }

    pub(super) fn base_distance(&self) -> f64 {
        self.d_base
    }

    /// Edge threshold of the graph below level `i`: weights strictly below
    /// `d_base * (1+eps)^(i-1)` are merged.
    fn threshold_below(&self, level: usize) -> f64 {
        self.d_base * self.ratio.powi(level as i32 - 1)
    }

    /// Coverage radius of level `i`.
    fn tau(&self, level: usize) -> f64 {
        0.6 * self.d_base * self.ratio.powi(level as i32)
    }

    /// Net separation of level `i`.
    fn separation(&self, level: usize) -> f64 {
        self.params.epsilon * self.d_base * self.ratio.powi(level as i32)
    }

    pub(super) fn level_components(&mut self, level: usize) -> &LevelComponents {
        if !self.level_cache.contains_key(&level) {
            let k = self.cache.k();
            let threshold = self.threshold_below(level);
            let sep = self.separation(level);
            let mut uf: Vec<usize> = (0..k).collect();
            fn find(uf: &mut Vec<usize>, x: usize) -> usize {
                let mut r = x;
                while uf[r] != r {
                    r = uf[r];
                }
                let mut c = x;
                while uf[c] != r {
                    let next = uf[c];
                    uf[c] = r;
                    c = next;
                }
                r
            }
            for i in 0..k {
                for j in (i + 1)..k {
                    if self.cache.tt(i, j) < threshold {
                        let (a, b) = (find(&mut uf, i), find(&mut uf, j));
                        if a != b {
                            uf[a] = b;
                        }
                    }
                }
            }
            let mut root_index: HashMap<usize, usize> = HashMap::new();
            let mut comps: Vec<Vec<usize>> = Vec::new();
            let mut comp_of = vec![0usize; k];
            for t in 0..k {
                let r = find(&mut uf, t);
                let idx = *root_index.entry(r).or_insert_with(|| {
                    comps.push(Vec::new());
                    comps.len() - 1
                });
                comps[idx].push(t);
                comp_of[t] = idx;
            }
            let nets: Vec<Vec<usize>> = comps
                .iter()
                .map(|comp| {
                    let mut net: Vec<usize> = Vec::new();
                    for &t in comp {
                        if net.iter().all(|&r| self.cache.tt(t, r) >= sep) {
                            net.push(t);
                        }
                    }
                    net
                })
                .collect();
            self.level_cache.insert(
                level,
                LevelComponents {
                    comp_of,
                    comps,
                    nets,
                },
            );
        }
        &self.level_cache[&level]
    }

    fn tpos(&self, terminal: u32) -> usize {
        self.cache
            .terminals
            .iter()
            .position(|&t| t == terminal)
            .expect("not a terminal")
    }

    pub(super) fn find_representative(&mut self, level: usize, terminal: u32) -> u32 {
        let sep = self.separation(level);
        let pos = self.tpos(terminal);
        let state = self.level_cache.get(&level);
        if state.is_none() {
            self.level_components(level);
        }
        let state = &self.level_cache[&level];
        let comp = state.comp_of[pos];
        let net = &state.nets[comp];
        // the terminal is either a representative or within `sep` of one
        for &r in net {
            if r == pos || self.cache.tt(pos, r) < sep {
                return self.cache.terminals[r];
            }
        }
        unreachable!("net maximality guarantees a covering representative");
    }

    pub(super) fn bfs_representatives(
        &mut self,
        level: usize,
        terminal: u32,
        cap: usize,
    ) -> BfsOutcome {
        let pos = self.tpos(terminal);
        self.level_components(level);
        let state = &self.level_cache[&level];
        let comp = state.comp_of[pos];
        let net = &state.nets[comp];
        if net.len() > cap {
            BfsOutcome::Overflow
        } else {
            BfsOutcome::Reps(net.iter().map(|&r| self.cache.terminals[r]).collect())
        }
    }

    /// Unbiased estimate of the number of small components, by uniform
    /// terminal draws weighted `k / |C(t)|`.
    fn sample_small_count(&mut self, level: usize, accept: impl Fn(&LevelComponents, usize) -> bool) -> f64 {
        let k = self.cache.k();
        let m_cls = ((COUNT_COEFF * k as f64 / self.derived.m) * (k.max(2) as f64).ln())
            .ceil()
            .max(8.0) as usize;
        self.level_components(level);
        let mut total = 0.0;
        for _ in 0..m_cls {
            let t = self.rng.random_range(0..k);
            let state = &self.level_cache[&level];
            let c = state.comp_of[t];
            if state.nets[c].len() <= self.derived.net_cap && accept(state, c) {
                total += k as f64 / state.comps[c].len() as f64;
            }
        }
        total / m_cls as f64
    }

    pub(super) fn classify_level(&mut self, level: usize) -> LevelClass {
        let cap1 = (self.derived.m / self.params.epsilon).ceil() as usize;
        self.level_components(level);
        let total_reps: usize = self.level_cache[&level].nets.iter().map(|n| n.len()).sum();
        if total_reps <= cap1 {
            return LevelClass::Case1;
        }
        let estimate = self.sample_small_count(level, |_, _| true);
        if estimate < self.derived.m {
            LevelClass::Light
        } else {
            LevelClass::Heavy
        }
    }

    /// Greedy-matching cover gain of an explicit level instance whose sets
    /// are the Steiner vertices' covered component lists. Sets covering
    /// exactly two components are excluded.
    fn matching_gain(&mut self, covered: &[Vec<usize>], rank_seed: u64) -> f64 {
        let mut edges: Vec<EdgeId> = Vec::new();
        for (v, comps) in covered.iter().enumerate() {
            if comps.len() == 2 || comps.len() < 2 {
                continue;
            }
            for i in 0..comps.len() {
                for j in (i + 1)..comps.len() {
                    edges.push(
                        EdgeId::new(comps[i] as u32, comps[j] as u32, v as u32)
                            .expect("distinct components"),
                    );
                }
            }
        }
        let g = crate::baselines::ExplicitMultigraph::new(edges);
        crate::baselines::offline_greedy_matching(&g, &RankFunction::new(rank_seed)).size() as f64
    }

    /// Dense/case-1 gain: query every Steiner vertex against every
    /// representative of the level's small components and solve the explicit
    /// instance by greedy matching.
    fn solve_level_dense(&mut self, level: usize) -> f64 {
        let tau = self.tau(level);
        self.level_components(level);
        let (small, nets): (Vec<usize>, Vec<Vec<usize>>) = {
            let state = &self.level_cache[&level];
            let small: Vec<usize> = (0..state.comps.len())
                .filter(|&c| state.nets[c].len() <= self.derived.net_cap)
                .collect();
            let nets = small.iter().map(|&c| state.nets[c].clone()).collect();
            (small, nets)
        };
        if small.len() < 2 {
            return 0.0;
        }
        let n_s = self.cache.steiner.len();
        let mut covered: Vec<Vec<usize>> = Vec::with_capacity(n_s);
        for spos in 0..n_s {
            let mut cov = Vec::new();
            for (idx, net) in nets.iter().enumerate() {
                if net.iter().any(|&r| self.cache.ts(spos, r) < tau) {
                    cov.push(idx);
                }
            }
            covered.push(cov);
        }
        self.matching_gain(&covered, self.params.seed ^ level as u64)
    }

    /// Case-3 machinery: terminal split by sampled Steiner degree,
    /// sequential Steiner split against the low terminals, count estimates
    /// by terminal sampling, and the matching estimate on the remaining
    /// instance.
    pub(super) fn solve_level_heavy(&mut self, level: usize) -> f64 {
        let eps = self.params.epsilon;
        let tau = self.tau(level);
        let k = self.cache.k();
        let n_s = self.cache.steiner.len();
        if n_s == 0 {
            return 0.0;
        }
        let ln_n = (self.cache.oracle.n_points().max(2) as f64).ln();
        let ln_k = (k.max(2) as f64).ln();
        self.level_components(level);

        // (a) split terminals by sampled count of nearby Steiner vertices
        let m_r = ((SAMPLE_COEFF * n_s as f64 / self.derived.r) * ln_n).ceil() as usize;
        let sampled_sv: Vec<usize> = (0..m_r.min(n_s * 4))
            .map(|_| self.rng.random_range(0..n_s))
            .collect();
        let mut t_low: Vec<bool> = vec![true; k];
        for t in 0..k {
            let mut hits = 0usize;
            for &v in &sampled_sv {
                if self.cache.ts(v, t) < tau {
                    hits += 1;
                }
            }
            if (hits as f64) >= 10.0 * ln_n {
                t_low[t] = false; // high terminal
            }
        }
        let t_high: Vec<bool> = t_low.iter().map(|&l| !l).collect();

        // (b) sequential Steiner split: admit to W2 on a sampled degree
        // test, then strip all nearby low terminals
        let m_p = ((SAMPLE_COEFF * k as f64 / self.derived.p) * ln_k).ceil() as usize;
        let mut removed_by_w2 = vec![false; k];
        let mut w1: Vec<usize> = Vec::new();
        let mut w2: Vec<usize> = Vec::new();
        let mut low_pool: Vec<usize> = (0..k).filter(|&t| t_low[t]).collect();
        for v in 0..n_s {
            if low_pool.is_empty() {
                w1.push(v);
                continue;
            }
            let mut hits = 0usize;
            for _ in 0..m_p {
                let t = low_pool[self.rng.random_range(0..low_pool.len())];
                if self.cache.ts(v, t) < tau {
                    hits += 1;
                }
            }
            if (hits as f64) >= 10.0 * ln_k {
                w2.push(v);
                low_pool.retain(|&t| {
                    if self.cache.ts(v, t) < tau {
                        removed_by_w2[t] = true;
                        t_low[t] = false;
                        false
                    } else {
                        true
                    }
                });
            } else {
                w1.push(v);
            }
        }

        // (c) estimated counts of small components: covered (touched by
        // high terminals or W2 removals) and untouched low
        let touched = |state: &LevelComponents, c: usize| {
            state.comps[c]
                .iter()
                .any(|&t| t_high[t] || removed_by_w2[t])
        };
        let n_cov = self.sample_small_count(level, |state, c| touched(state, c));
        let n_low = self.sample_small_count(level, |state, c| !touched(state, c));
        let n_all = n_cov + n_low;

        // (d) matching estimate over (low small components, W1)
        let mu = self.estimate_level_matching(level, &t_low, &w1, tau, n_low);

        let chi = mu + n_cov - eps * n_all / 2.0;
        chi.clamp(0.0, n_all.max(0.0))
    }

    /// Vertex-oracle estimate of the greedy matching size of the level
    /// multigraph over untouched low small components, probed by uniform
    /// component sampling with 1/z representative acceptance.
    fn estimate_level_matching(
        &mut self,
        level: usize,
        t_low: &[bool],
        w1: &[usize],
        tau: f64,
        n_low_estimate: f64,
    ) -> f64 {
        let eps = self.params.epsilon;
        let k = self.cache.k();
        let state = &self.level_cache[&level];
        // untouched low small components, exactly (cheap: block is cached)
        let low_small: Vec<usize> = (0..state.comps.len())
            .filter(|&c| {
                state.nets[c].len() <= self.derived.net_cap
                    && state.comps[c].iter().all(|&t| t_low[t])
            })
            .collect();
        if low_small.len() < 2 || w1.is_empty() {
            return -eps * n_low_estimate / 4.0;
        }
        let comp_index: HashMap<usize, usize> = low_small
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        let nets: Vec<Vec<usize>> = low_small.iter().map(|&c| state.nets[c].clone()).collect();
        let canon: Vec<u32> = low_small
            .iter()
            .map(|&c| state.comps[c][0] as u32)
            .collect();
        let comp_of = state.comp_of.clone();

        let s = (48.0 * (k.max(2) as f64).ln() / (eps * eps)).ceil() as u64;
        let rank = RankFunction::new(self.params.seed ^ (level as u64).wrapping_mul(0x9e37));
        let mut graph = LevelGraph {
            cache: &mut self.cache,
            tau,
            rank,
            nets,
            canon,
            w1: w1.to_vec(),
            comp_of,
            comp_index,
            covered_memo: HashMap::new(),
            lists: vec![None; low_small.len()],
        };
        let mut memo = OracleMemo::new();
        let mut stats = QueryStats::new();
        let mut matched_cache: Vec<Option<bool>> = vec![None; low_small.len()];
        let mut matched = 0u64;
        let mut draws = 0u64;
        let attempts_cap = s * ((8 * k) as f64 / self.derived.m).ceil().max(2.0) as u64;
        let mut attempts = 0u64;
        while draws < s && attempts < attempts_cap {
            attempts += 1;
            let t = self.rng.random_range(0..k);
            let Some(&ci) = graph.comp_index.get(&graph.comp_of[t]) else {
                continue;
            };
            // accept only at a representative, with probability 1/z
            let net = &graph.nets[ci];
            if !net.contains(&t) {
                continue;
            }
            let z = net.len();
            if z > 1 && self.rng.random_range(0..z) != 0 {
                continue;
            }
            draws += 1;
            let m = match matched_cache[ci] {
                Some(m) => m,
                None => {
                    let m = RgmmEngine::new(&mut graph, &mut memo, &mut stats).vertex_matched(ci);
                    matched_cache[ci] = Some(m);
                    m
                }
            };
            if m {
                matched += 1;
            }
        }
        if draws == 0 {
            return -eps * n_low_estimate / 4.0;
        }
        n_low_estimate / (2.0 * draws as f64) * matched as f64 - eps * n_low_estimate / 4.0
    }

    pub(super) fn run(&mut self) -> SteinerReport {
        let k = self.cache.k();
        let w_star = self.mst_weight;
        let mut diags: Vec<LevelDiag> = Vec::new();
        let mut total_improvement = 0.0;
        if w_star > 0.0 && self.d_base.is_finite() {
            for level in 1..=self.derived.levels {
                self.level_components(level);
                if self.level_cache[&level].comps.len() <= 1 {
                    break;
                }
                let (class, chi) = if self.dense {
                    ("dense".to_string(), self.solve_level_dense(level))
                } else {
                    match self.classify_level(level) {
                        LevelClass::Case1 => ("case1".to_string(), self.solve_level_dense(level)),
                        LevelClass::Light => ("light".to_string(), 0.0),
                        LevelClass::Heavy => ("heavy".to_string(), self.solve_level_heavy(level)),
                    }
                };
                let improvement = chi.max(0.0)
                    * self.params.c_save
                    * self.d_base
                    * self.ratio.powi(level as i32 - 1);
                total_improvement += improvement;
                let state = &self.level_cache[&level];
                diags.push(LevelDiag {
                    level,
                    class,
                    universe_estimate: state.comps.len() as f64,
                    chi_estimate: chi,
                    improvement,
                    distance_queries_after: self.cache.oracle.ledger().distance_queries(),
                });
            }
        }
        let threshold = self.params.c_eta * self.params.eta * w_star;
        let fired = total_improvement > threshold;
        let estimate = if fired {
            (1.0 - self.params.c_eta_prime * self.params.eta) * w_star
        } else {
            w_star
        };
        SteinerReport {
            estimate,
            mst_weight: w_star,
            fired,
            total_improvement,
            threshold,
            dense_path: self.dense,
            n_points: self.cache.oracle.n_points(),
            terminals: k,
            epsilon: self.params.epsilon,
            eta: self.params.eta,
            c_eta: self.params.c_eta,
            c_eta_prime: self.params.c_eta_prime,
            c_save: self.params.c_save,
            seed: self.params.seed,
            levels: diags,
            ledger: self.cache.oracle.ledger().clone(),
        }
    }
}

/// Level multigraph served to the oracle engine: vertices are untouched low
/// small components, one parallel edge per low-degree Steiner vertex
/// covering both endpoints (vertices covering exactly two components carry
/// no edges). Edge discovery materializes a component's incident list on
/// first touch: nearby W1 vertices via the component's net, then each such
/// vertex's covered components via the representatives of all low small
/// components.
struct LevelGraph<'c, 'a, 'o> {
    cache: &'c mut DistCache<'a, 'o>,
    tau: f64,
    rank: RankFunction,
    nets: Vec<Vec<usize>>,
    canon: Vec<u32>,
    w1: Vec<usize>,
    comp_of: Vec<usize>,
    comp_index: HashMap<usize, usize>,
    covered_memo: HashMap<usize, Vec<usize>>,
    lists: Vec<Option<Vec<IncidentEdge>>>,
}

impl LevelGraph<'_, '_, '_> {
    /// Low small components covered by the Steiner vertex, via their nets.
    fn covered(&mut self, spos: usize) -> Vec<usize> {
        if let Some(c) = self.covered_memo.get(&spos) {
            return c.clone();
        }
        let mut cov = Vec::new();
        for ci in 0..self.nets.len() {
            let hit = self.nets[ci]
                .iter()
                .any(|&r| self.cache.ts(spos, r) < self.tau);
            if hit {
                cov.push(ci);
            }
        }
        self.covered_memo.insert(spos, cov.clone());
        cov
    }

    fn ensure_list(&mut self, ci: usize) {
        if self.lists[ci].is_some() {
            return;
        }
        let nearby: Vec<usize> = {
            let net = self.nets[ci].clone();
            self.w1
                .clone()
                .into_iter()
                .filter(|&v| net.iter().any(|&r| self.cache.ts(v, r) < self.tau))
                .collect()
        };
        let mut edges: Vec<IncidentEdge> = Vec::new();
        for v in nearby {
            let cov = self.covered(v);
            if cov.len() == 2 || cov.len() < 2 {
                continue;
            }
            for &cj in &cov {
                if cj == ci {
                    continue;
                }
                let id = EdgeId::new(self.canon[ci], self.canon[cj], v as u32)
                    .expect("distinct components");
                edges.push(IncidentEdge {
                    key: RankKey {
                        bits: self.rank.rank_bits(id),
                        id,
                    },
                    other: cj,
                });
            }
        }
        edges.sort_unstable_by_key(|e| e.key);
        self.lists[ci] = Some(edges);
    }
}

impl EdgeAccess for LevelGraph<'_, '_, '_> {
    fn vertex_count(&self) -> usize {
        self.nets.len()
    }

    fn incident(
        &mut self,
        v: usize,
        idx: usize,
        bound: Option<&RankKey>,
        stats: &mut QueryStats,
    ) -> Option<IncidentEdge> {
        self.ensure_list(v);
        let e = *self.lists[v].as_ref().unwrap().get(idx)?;
        if let Some(b) = bound {
            if e.key >= *b {
                return None;
            }
        }
        stats.record_neighbor_request(v);
        Some(e)
    }
}
