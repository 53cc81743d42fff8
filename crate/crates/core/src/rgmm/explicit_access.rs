use super::{EdgeAccess, IncidentEdge, QueryStats};
use crate::baselines::ExplicitMultigraph;
use crate::oracle::{RankFunction, RankKey};

/// Engine adapter over a materialized multigraph: adjacency lists are built
/// once and served sorted by rank. Vertex handles are the raw vertex ids.
pub struct ExplicitAccess {
    lists: Vec<Vec<IncidentEdge>>,
}

impl ExplicitAccess {
    pub fn new(g: &ExplicitMultigraph, rf: &RankFunction) -> Self {
        let n = g.max_vertex() as usize;
        let mut lists: Vec<Vec<IncidentEdge>> = vec![Vec::new(); n];
        for &e in &g.edges {
            let key = rf.key(e);
            lists[e.u() as usize].push(IncidentEdge {
                key,
                other: e.v() as usize,
            });
            lists[e.v() as usize].push(IncidentEdge {
                key,
                other: e.u() as usize,
            });
        }
        for l in &mut lists {
            l.sort_unstable_by_key(|e| e.key);
        }
        ExplicitAccess { lists }
    }
}

impl EdgeAccess for ExplicitAccess {
    fn vertex_count(&self) -> usize {
        self.lists.len()
    }

    fn incident(
        &mut self,
        v: usize,
        idx: usize,
        bound: Option<&RankKey>,
        stats: &mut QueryStats,
    ) -> Option<IncidentEdge> {
        let e = *self.lists[v].get(idx)?;
        if let Some(b) = bound {
            if e.key >= *b {
                return None;
            }
        }
        stats.record_neighbor_request(v);
        Some(e)
    }
}
