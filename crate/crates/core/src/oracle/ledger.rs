use serde::Serialize;

/// Exact per-category count of oracle calls, the central measured quantity
/// of every experiment. Counters only ever increase; every oracle call
/// charges exactly one unit, repeated identical queries included.
///
/// Phases are optional sub-counters keyed by label. While a phase is active
/// all charges are mirrored into it, so the totals equal the sum over phases
/// whenever the whole run is phased.
#[derive(Clone, Debug, Default, Serialize)]
pub struct QueryLedger {
    membership: u64,
    distance: u64,
    phases: Vec<PhaseCounts>,
    #[serde(skip)]
    active: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseCounts {
    pub label: String,
    pub membership: u64,
    pub distance: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn charge_membership(&mut self) {
        self.membership += 1;
        if let Some(i) = self.active {
            self.phases[i].membership += 1;
        }
    }

    #[inline]
    pub fn charge_distance(&mut self) {
        self.distance += 1;
        if let Some(i) = self.active {
            self.phases[i].distance += 1;
        }
    }

    /// Activates the phase with the given label, creating it on first use.
    /// Charges accumulate into the active phase until the next call.
    pub fn begin_phase(&mut self, label: &str) {
        let idx = match self.phases.iter().position(|p| p.label == label) {
            Some(i) => i,
            None => {
                self.phases.push(PhaseCounts {
                    label: label.to_string(),
                    membership: 0,
                    distance: 0,
                });
                self.phases.len() - 1
            }
        };
        self.active = Some(idx);
    }

    pub fn end_phase(&mut self) {
        self.active = None;
    }

    pub fn membership_queries(&self) -> u64 {
        self.membership
    }

    pub fn distance_queries(&self) -> u64 {
        self.distance
    }

    pub fn phases(&self) -> &[PhaseCounts] {
        &self.phases
    }

    pub fn phase(&self, label: &str) -> Option<&PhaseCounts> {
        self.phases.iter().find(|p| p.label == label)
    }
}
