//! Ground-truth instance containers and the counted-oracle access layer.
//!
//! Estimator modules only ever see the [`Membership`] trait (or the distance
//! oracle for metrics); raw accessors on the containers exist for baselines,
//! generators and tests.

pub mod io;
mod ledger;
pub mod metric;
mod rank;

pub use ledger::{PhaseCounts, QueryLedger};
pub use metric::{DistanceOracle, MetricInstance};
pub use rank::{EdgeId, RankFunction, RankKey};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A set system: a universe of `k` elements indexed `0..k-1` and a family of
/// sets, each stored as a sorted list of element indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetSystem {
    universe_size: usize,
    family: Vec<Vec<u32>>,
}

impl SetSystem {
    /// Builds a set system, sorting each set and validating that element
    /// indices are in range and free of duplicates within a set.
    pub fn new(universe_size: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut family = Vec::with_capacity(sets.len());
        for (i, set) in sets.into_iter().enumerate() {
            let mut s: Vec<u32> = Vec::with_capacity(set.len());
            for e in set {
                if e >= universe_size {
                    return Err(CoreError::InvalidInstance(format!(
                        "set {i} contains element {e} >= universe size {universe_size}"
                    )));
                }
                s.push(e as u32);
            }
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(CoreError::InvalidInstance(format!(
                    "set {i} contains a duplicate element"
                )));
            }
            family.push(s);
        }
        Ok(SetSystem {
            universe_size,
            family,
        })
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn family_size(&self) -> usize {
        self.family.len()
    }

    /// Ground-truth access for baselines, generators and tests. Estimators
    /// must go through [`MembershipOracle`].
    pub fn set_members(&self, s: usize) -> &[u32] {
        &self.family[s]
    }

    pub fn set_size(&self, s: usize) -> usize {
        self.family[s].len()
    }

    pub fn contains(&self, element: usize, set: usize) -> bool {
        self.family[set].binary_search(&(element as u32)).is_ok()
    }
}

/// The sole read path exposed to estimators: `query(element, set)` answers
/// whether the element lies in the set and charges the ledger by exactly 1,
/// repeated identical queries included.
pub trait Membership {
    fn universe_size(&self) -> usize;
    fn family_size(&self) -> usize;
    fn query(&mut self, element: usize, set: usize) -> bool;
    fn ledger(&self) -> &QueryLedger;
    fn ledger_mut(&mut self) -> &mut QueryLedger;
}

/// Counted membership oracle over a [`SetSystem`]. One oracle per run; the
/// underlying instance is immutable and may be shared across threads while
/// each run owns its own oracle and ledger.
pub struct MembershipOracle<'a> {
    system: &'a SetSystem,
    ledger: QueryLedger,
}

impl<'a> MembershipOracle<'a> {
    pub fn new(system: &'a SetSystem) -> Self {
        MembershipOracle {
            system,
            ledger: QueryLedger::new(),
        }
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }
}

impl Membership for MembershipOracle<'_> {
    fn universe_size(&self) -> usize {
        self.system.universe_size()
    }

    fn family_size(&self) -> usize {
        self.system.family_size()
    }

    #[inline]
    fn query(&mut self, element: usize, set: usize) -> bool {
        assert!(
            element < self.system.universe_size(),
            "element index {element} out of range"
        );
        assert!(
            set < self.system.family_size(),
            "set index {set} out of range"
        );
        self.ledger.charge_membership();
        self.system.contains(element, set)
    }

    fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn ledger_mut(&mut self) -> &mut QueryLedger {
        &mut self.ledger
    }
}

/// View of an oracle with one singleton set `{e}` appended per element,
/// enforcing `n >= k`. Padded sets answer membership from their definition
/// at a cost of one query like any other set.
pub struct PaddedOracle<'a, M: Membership> {
    inner: &'a mut M,
    base_family: usize,
}

impl<'a, M: Membership> PaddedOracle<'a, M> {
    pub fn new(inner: &'a mut M) -> Self {
        let base_family = inner.family_size();
        PaddedOracle { inner, base_family }
    }

    /// Number of non-padded sets.
    pub fn base_family(&self) -> usize {
        self.base_family
    }
}

impl<M: Membership> Membership for PaddedOracle<'_, M> {
    fn universe_size(&self) -> usize {
        self.inner.universe_size()
    }

    fn family_size(&self) -> usize {
        self.base_family + self.inner.universe_size()
    }

    #[inline]
    fn query(&mut self, element: usize, set: usize) -> bool {
        if set < self.base_family {
            return self.inner.query(element, set);
        }
        let owner = set - self.base_family;
        assert!(
            owner < self.inner.universe_size(),
            "set index {set} out of range"
        );
        assert!(
            element < self.inner.universe_size(),
            "element index {element} out of range"
        );
        self.inner.ledger_mut().charge_membership();
        element == owner
    }

    fn ledger(&self) -> &QueryLedger {
        self.inner.ledger()
    }

    fn ledger_mut(&mut self) -> &mut QueryLedger {
        self.inner.ledger_mut()
    }
}
