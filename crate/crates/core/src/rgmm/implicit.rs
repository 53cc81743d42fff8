use std::collections::{HashMap, HashSet, VecDeque};

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use super::{EdgeAccess, IncidentEdge, QueryStats};
use crate::oracle::{EdgeId, Membership, RankFunction, RankKey};

/// Candidate pair key local to one vertex: rank bits plus (other, set) as
/// tiebreak. For edges at a common vertex this order coincides with the
/// global `(rank, canonical id)` order.
type PairKey = (u64, u32, u32);

/// How much of the pair space a vertex scan has enumerated into its tail.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Covered {
    Nothing,
    UpTo(PairKey),
    All,
}

/// Scan state of one vertex: edges found so far in increasing rank, plus a
/// sorted tail of enumerated-but-unqueried candidate pairs. Pairs below the
/// tail have been queried and resolved; pairs above `covered` have not been
/// enumerated yet and are recovered by a rebuild pass when needed. Tails are
/// kept short so early-stopping vertices hold little memory.
#[derive(Clone, Debug)]
struct VertexScan {
    found: Vec<IncidentEdge>,
    tail: VecDeque<PairKey>,
    covered: Covered,
    rebuilds: u32,
}

impl Default for VertexScan {
    fn default() -> Self {
        VertexScan {
            found: Vec::new(),
            tail: VecDeque::new(),
            covered: Covered::Nothing,
            rebuilds: 0,
        }
    }
}

const FIRST_TAIL_KEEP: usize = 512;

/// The auxiliary multigraph of a set system, accessed implicitly under
/// membership queries. Vertices are the surviving low elements; for every
/// surviving set containing two surviving elements there is one parallel
/// edge per set. With `exclude_size_two`, edges coming from sets of exactly
/// two elements (in the full universe) are dropped, each candidate set being
/// validated by searching for a third member.
pub struct ImplicitMultigraph<'a, M: Membership> {
    oracle: &'a mut M,
    rank: RankFunction,
    family: Vec<usize>,
    vertices: Vec<usize>,
    vertex_pos: HashMap<usize, usize>,
    exclude_size_two: bool,
    sets_of: Vec<Option<Vec<u32>>>,
    scans: Vec<VertexScan>,
    set_has_third: HashMap<u32, bool>,
    validate_rng: ChaCha12Rng,
}

impl<'a, M: Membership> ImplicitMultigraph<'a, M> {
    pub fn new(
        oracle: &'a mut M,
        family: Vec<usize>,
        vertices: Vec<usize>,
        rank: RankFunction,
        exclude_size_two: bool,
    ) -> Self {
        let vertex_pos = vertices
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        let n_v = vertices.len();
        let validate_rng = ChaCha12Rng::seed_from_u64(rank.seed() ^ 0x76a5_11e5_1d3e_3b21);
        ImplicitMultigraph {
            oracle,
            rank,
            family,
            vertices,
            vertex_pos,
            exclude_size_two,
            sets_of: vec![None; n_v],
            scans: vec![VertexScan::default(); n_v],
            set_has_third: HashMap::new(),
            validate_rng,
        }
    }

    pub fn rank(&self) -> RankFunction {
        self.rank
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn family(&self) -> &[usize] {
        &self.family
    }

    pub fn exclude_size_two(&self) -> bool {
        self.exclude_size_two
    }

    pub fn universe_size(&self) -> usize {
        self.oracle.universe_size()
    }

    pub fn vertex_index(&self, element: usize) -> Option<usize> {
        self.vertex_pos.get(&element).copied()
    }

    pub fn element(&self, v: usize) -> usize {
        self.vertices[v]
    }

    pub fn ledger(&self) -> &crate::oracle::QueryLedger {
        self.oracle.ledger()
    }

    /// The sets containing this vertex, discovered by one full pass over the
    /// surviving family on first touch.
    fn ensure_sets(&mut self, v: usize) {
        if self.sets_of[v].is_some() {
            return;
        }
        let element = self.vertices[v];
        let mut sets = Vec::new();
        for i in 0..self.family.len() {
            let s = self.family[i];
            if self.oracle.query(element, s) {
                sets.push(s as u32);
            }
        }
        self.sets_of[v] = Some(sets);
    }

    /// True iff the set contains a third element besides `u` and `v`,
    /// scanning the full universe in random order and stopping at the first
    /// hit. No memo: this is the raw validation subroutine.
    pub fn validate_edge_not_size_two(&mut self, e: EdgeId) -> bool {
        let k = self.oracle.universe_size();
        let (u, v) = (e.u() as usize, e.v() as usize);
        let mut candidates: Vec<usize> = (0..k).filter(|&x| x != u && x != v).collect();
        candidates.shuffle(&mut self.validate_rng);
        for x in candidates {
            if self.oracle.query(x, e.set() as usize) {
                return true;
            }
        }
        false
    }

    /// Memoized validation: whether the set has three or more elements is a
    /// property of the set alone, so one scan settles every future edge of
    /// that set.
    fn set_passes_size_filter(&mut self, u_elem: u32, v_elem: u32, set: u32) -> bool {
        if !self.exclude_size_two {
            return true;
        }
        if let Some(&ok) = self.set_has_third.get(&set) {
            return ok;
        }
        let e = EdgeId::new(u_elem, v_elem, set).expect("distinct endpoints");
        let ok = self.validate_edge_not_size_two(e);
        self.set_has_third.insert(set, ok);
        ok
    }

    /// Draws a uniformly random incident edge of `element` that is not in
    /// the exclusion set, querying candidate pairs in a fresh random order
    /// until one hits. Returns the neighbor element and the edge, or `None`
    /// when no non-excluded incident edge exists.
    pub fn sample_random_neighbor<R: Rng>(
        &mut self,
        element: usize,
        exclusion: &HashSet<EdgeId>,
        rng: &mut R,
    ) -> Option<(usize, EdgeId)> {
        let v = self.vertex_index(element)?;
        self.ensure_sets(v);
        let sets = self.sets_of[v].clone().unwrap();
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(self.vertices.len() * sets.len());
        for &u_elem in &self.vertices {
            if u_elem == element {
                continue;
            }
            for &s in &sets {
                pairs.push((u_elem as u32, s));
            }
        }
        pairs.shuffle(rng);
        for (u_elem, s) in pairs {
            let e = EdgeId::new(element as u32, u_elem, s).expect("distinct endpoints");
            if exclusion.contains(&e) {
                continue;
            }
            if self.oracle.query(u_elem as usize, s as usize)
                && self.set_passes_size_filter(element as u32, u_elem, s)
            {
                return Some((u_elem as usize, e));
            }
        }
        None
    }

    fn pair_rank_key(&self, v_elem: u32, other: u32, set: u32) -> PairKey {
        let e = EdgeId::new(v_elem, other, set).expect("distinct endpoints");
        (self.rank.rank_bits(e), other, set)
    }

    /// Re-enumerates the pair space of `v` and refills the tail with the
    /// smallest unexamined pair keys. Pure local computation: no queries.
    fn rebuild_tail(&mut self, v: usize) {
        let keep = (FIRST_TAIL_KEEP << (2 * self.scans[v].rebuilds.min(10))).min(1 << 21);
        let v_elem = self.vertices[v] as u32;
        let from = match self.scans[v].covered {
            Covered::All => return,
            Covered::Nothing => None,
            Covered::UpTo(key) => Some(key),
        };
        let sets = self.sets_of[v].as_ref().expect("sets materialized").clone();
        // max-heap keeps the `keep` smallest candidate keys above `from`
        let mut heap: std::collections::BinaryHeap<PairKey> = std::collections::BinaryHeap::new();
        let mut above = 0usize;
        for &u_elem in &self.vertices {
            if u_elem as u32 == v_elem {
                continue;
            }
            for &s in &sets {
                let key = self.pair_rank_key(v_elem, u_elem as u32, s);
                if let Some(f) = from {
                    if key <= f {
                        continue;
                    }
                }
                above += 1;
                if heap.len() < keep {
                    heap.push(key);
                } else if let Some(&top) = heap.peek() {
                    if key < top {
                        heap.pop();
                        heap.push(key);
                    }
                }
            }
        }
        let mut tail: Vec<PairKey> = heap.into_vec();
        tail.sort_unstable();
        let scan = &mut self.scans[v];
        scan.covered = if above > tail.len() {
            Covered::UpTo(*tail.last().expect("nonempty when truncated"))
        } else {
            Covered::All
        };
        scan.tail = tail.into();
        scan.rebuilds += 1;
    }

    fn key_to_rank(&self, v_elem: u32, key: &PairKey) -> RankKey {
        RankKey {
            bits: key.0,
            id: EdgeId::new(v_elem, key.1, key.2).expect("distinct endpoints"),
        }
    }
}

impl<M: Membership> EdgeAccess for ImplicitMultigraph<'_, M> {
    fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    fn incident(
        &mut self,
        v: usize,
        idx: usize,
        bound: Option<&RankKey>,
        stats: &mut QueryStats,
    ) -> Option<IncidentEdge> {
        loop {
            if let Some(&e) = self.scans[v].found.get(idx) {
                if let Some(b) = bound {
                    if e.key >= *b {
                        return None;
                    }
                }
                return Some(e);
            }
            // discovery needed
            self.ensure_sets(v);
            let v_elem = self.vertices[v] as u32;
            // stop without queries when every remaining candidate is at or
            // above the bound
            if let Some(b) = bound {
                let next_known: Option<RankKey> = match self.scans[v].tail.front() {
                    Some(front) => Some(self.key_to_rank(v_elem, front)),
                    None => match self.scans[v].covered {
                        Covered::UpTo(c) => Some(self.key_to_rank(v_elem, &c)),
                        Covered::All => return None,
                        Covered::Nothing => None,
                    },
                };
                if let Some(nk) = next_known {
                    if nk >= *b {
                        return None;
                    }
                }
            }
            if self.scans[v].tail.is_empty() {
                if self.scans[v].covered == Covered::All {
                    return None;
                }
                self.rebuild_tail(v);
                continue;
            }
            stats.record_neighbor_request(v);
            let pair = self.scans[v].tail.pop_front().unwrap();
            let (bits, other_elem, set) = pair;
            if self.oracle.query(other_elem as usize, set as usize)
                && self.set_passes_size_filter(v_elem, other_elem, set)
            {
                let id = EdgeId::new(v_elem, other_elem, set).expect("distinct endpoints");
                let other = self.vertex_pos[&(other_elem as usize)];
                self.scans[v].found.push(IncidentEdge {
                    key: RankKey { bits, id },
                    other,
                });
            }
        }
    }
}
