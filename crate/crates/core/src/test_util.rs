use crate::oracle::{EdgeId, RankFunction};

/// Smallest seed under which the given edges are strictly increasing in
/// `(rank, id)` order. Lets tests pin a concrete greedy order.
pub(crate) fn seed_ordering_edges(edges: &[EdgeId]) -> u64 {
    (0u64..1_000_000)
        .find(|&s| {
            let rf = RankFunction::new(s);
            edges.windows(2).all(|w| rf.key(w[0]) < rf.key(w[1]))
        })
        .expect("no seed found inducing the requested edge order")
}
