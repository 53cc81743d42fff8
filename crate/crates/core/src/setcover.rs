//! End-to-end estimator for `chi = |U| - SC(U, F)`: set sparsification,
//! element split, and greedy-matching size estimation on the implicit
//! multigraph, with a dense-regime fallback that reads the whole instance.
//! The `no_pairs` entry point estimates against the family with all sets of
//! size exactly two removed.

use serde::Serialize;

use crate::baselines::{offline_greedy_matching, ExplicitMultigraph};
use crate::oracle::{Membership, PaddedOracle, QueryLedger, RankFunction, SetSystem};
use crate::rgmm::{estimate_rgmm_size, ImplicitMultigraph, OracleMemo, QueryStats};
use crate::sparsify::{sparsify_elements, sparsify_sets};

/// Estimator parameters. `alpha = n^x` controls set sparsification,
/// `beta = 10 max(k/n^(1-y), 1) n ln(n) / k` the element split. The dense
/// fallback reads the full instance whenever `k <= max(dense_constant *
/// n^(2/3), dense_floor)`.
#[derive(Clone, Debug, Serialize)]
pub struct SetCoverParams {
    pub epsilon: f64,
    pub x: f64,
    pub y: f64,
    pub exclude_size_two: bool,
    pub seed: u64,
    pub dense_constant: f64,
    pub dense_floor: usize,
}

impl SetCoverParams {
    pub fn new(seed: u64) -> Self {
        SetCoverParams {
            epsilon: 0.1,
            x: 1.0 / 3.0,
            y: 1.0 / 3.0,
            exclude_size_two: false,
            seed,
            dense_constant: 2.0,
            dense_floor: 32,
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn with_exponents(mut self, x: f64, y: f64) -> Self {
        self.x = x;
        self.y = y;
        self
    }

    pub fn alpha(&self, n: usize) -> f64 {
        (n as f64).powf(self.x).max(1.0)
    }

    pub fn beta(&self, n: usize, k: usize) -> f64 {
        let (nf, kf) = (n as f64, k.max(1) as f64);
        (10.0 * (kf / nf.powf(1.0 - self.y)).max(1.0) * nf * nf.ln() / kf).max(1.0)
    }

    pub fn is_dense(&self, n: usize, k: usize) -> bool {
        (k as f64) <= (self.dense_constant * (n as f64).powf(2.0 / 3.0)).max(self.dense_floor as f64)
    }

    fn subseed(&self, tag: u64) -> u64 {
        self.seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17)
    }
}

/// The unit of experimental output: the estimate together with everything
/// needed to reproduce and audit the run.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub chi_tilde: f64,
    pub mu_tilde: f64,
    pub removed_sets: usize,
    /// `|U \ U_low|`
    pub not_low: usize,
    pub u_low: usize,
    pub u_high: usize,
    pub universe_size: usize,
    pub family_size_raw: usize,
    pub family_size_effective: usize,
    pub dense_path: bool,
    pub matched_draws: u64,
    pub draws: u64,
    pub epsilon: f64,
    pub x: f64,
    pub y: f64,
    pub exclude_size_two: bool,
    pub seed: u64,
    pub ledger: QueryLedger,
}

/// Multiplicative-additive estimate of `chi = k - SC(U, F)`; with high
/// probability `chi/2 - eps k <= chi_tilde <= chi` on coverable instances.
/// Pads the family with singletons when `n < k`.
pub fn estimate_thsc<M: Membership>(oracle: &mut M, params: &SetCoverParams) -> EstimateReport {
    let k = oracle.universe_size();
    let n_raw = oracle.family_size();
    if n_raw < k {
        let mut padded = PaddedOracle::new(oracle);
        let mut report = run_pipeline(&mut padded, params);
        report.family_size_raw = n_raw;
        report
    } else {
        run_pipeline(oracle, params)
    }
}

/// Same pipeline against `F_{!=2}`: the implicit multigraph drops every edge
/// whose set has exactly two elements, validating candidates by searching
/// for a third member.
pub fn estimate_thsc_no_pairs<M: Membership>(
    oracle: &mut M,
    params: &SetCoverParams,
) -> EstimateReport {
    let mut p = params.clone();
    p.exclude_size_two = true;
    estimate_thsc(oracle, &p)
}

fn run_pipeline<M: Membership>(oracle: &mut M, params: &SetCoverParams) -> EstimateReport {
    let k = oracle.universe_size();
    let n = oracle.family_size();
    let eps = params.epsilon;
    assert!(eps > 0.0 && eps < 1.0, "epsilon must lie in (0,1)");

    if params.is_dense(n, k) {
        return dense_estimate(oracle, params);
    }

    let alpha = params.alpha(n);
    let beta = params.beta(n, k);
    let sparsified = sparsify_sets(oracle, alpha, params.subseed(1));
    let partition = sparsify_elements(
        oracle,
        &sparsified.surviving_sets,
        &sparsified.surviving_elements,
        beta,
        eps,
        params.subseed(2),
    );
    let u_low = partition.low.len();
    let u_high = partition.high.len();

    oracle.ledger_mut().begin_phase("rgmm");
    let rank = RankFunction::new(params.subseed(3));
    let mut graph = ImplicitMultigraph::new(
        oracle,
        sparsified.surviving_sets.clone(),
        partition.low.clone(),
        rank,
        params.exclude_size_two,
    );
    let mut memo = OracleMemo::new();
    let mut stats = QueryStats::new();
    let est = estimate_rgmm_size(&mut graph, eps, params.subseed(4), &mut memo, &mut stats);
    oracle.ledger_mut().end_phase();

    let not_low = k - u_low;
    let chi_raw = est.mu_tilde + not_low as f64 - eps * k as f64 / 2.0;
    let chi_tilde = chi_raw.clamp(0.0, k as f64);
    EstimateReport {
        chi_tilde,
        mu_tilde: est.mu_tilde,
        removed_sets: sparsified.removed_sets,
        not_low,
        u_low,
        u_high,
        universe_size: k,
        family_size_raw: n,
        family_size_effective: n,
        dense_path: false,
        matched_draws: est.matched_draws,
        draws: est.draws,
        epsilon: eps,
        x: params.x,
        y: params.y,
        exclude_size_two: params.exclude_size_two,
        seed: params.seed,
        ledger: oracle.ledger().clone(),
    }
}

/// Dense regime: query every (element, set) pair, materialize the instance,
/// and report the size of one greedy maximal matching of the auxiliary
/// multigraph. Any maximal matching `|M|` satisfies `chi/2 <= |M| <= chi`
/// on coverable instances.
fn dense_estimate<M: Membership>(oracle: &mut M, params: &SetCoverParams) -> EstimateReport {
    let k = oracle.universe_size();
    let n = oracle.family_size();
    oracle.ledger_mut().begin_phase("dense_scan");
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, set) in sets.iter_mut().enumerate() {
        for e in 0..k {
            if oracle.query(e, s) {
                set.push(e);
            }
        }
    }
    oracle.ledger_mut().end_phase();
    let materialized = SetSystem::new(k, sets).expect("materialized instance is valid");
    let graph = ExplicitMultigraph::from_set_system(
        &materialized,
        None,
        None,
        params.exclude_size_two,
    );
    let matching = offline_greedy_matching(&graph, &RankFunction::new(params.subseed(3)));
    let mu = matching.size() as f64;
    let chi_tilde = mu.clamp(0.0, k as f64);
    EstimateReport {
        chi_tilde,
        mu_tilde: mu,
        removed_sets: 0,
        not_low: 0,
        u_low: k,
        u_high: 0,
        universe_size: k,
        family_size_raw: n,
        family_size_effective: n,
        dense_path: true,
        matched_draws: 0,
        draws: 0,
        epsilon: params.epsilon,
        x: params.x,
        y: params.y,
        exclude_size_two: params.exclude_size_two,
        seed: params.seed,
        ledger: oracle.ledger().clone(),
    }
}

/// Racing mode: several independent seeded instances of the estimator run in
/// parallel and the first to finish wins; the others are cancelled between
/// oracle calls.
#[cfg(feature = "parallel")]
pub mod racing {
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::Mutex;

    use super::*;

    struct Cancelled;

    struct RacingOracle<'a> {
        system: &'a SetSystem,
        ledger: QueryLedger,
        stop: &'a AtomicBool,
    }

    impl Membership for RacingOracle<'_> {
        fn universe_size(&self) -> usize {
            self.system.universe_size()
        }

        fn family_size(&self) -> usize {
            self.system.family_size()
        }

        fn query(&mut self, element: usize, set: usize) -> bool {
            if self.stop.load(Ordering::Relaxed) {
                // unwound by the race harness; runs are interruptible
                // between oracle calls
                std::panic::panic_any(Cancelled);
            }
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

    /// Runs `instances` copies with derived seeds and returns the first
    /// finisher's report. `instances = 0` picks `ceil(ln n)`.
    pub fn estimate_thsc_racing(
        system: &SetSystem,
        params: &SetCoverParams,
        instances: usize,
    ) -> EstimateReport {
        let count = if instances == 0 {
            (system.family_size().max(3) as f64).ln().ceil() as usize
        } else {
            instances
        };
        let stop = AtomicBool::new(false);
        let winner: Mutex<Option<EstimateReport>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for i in 0..count {
                let stop = &stop;
                let winner = &winner;
                let mut p = params.clone();
                p.seed = params.seed.wrapping_add(i as u64);
                scope.spawn(move || {
                    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                        let mut oracle = RacingOracle {
                            system,
                            ledger: QueryLedger::new(),
                            stop,
                        };
                        estimate_thsc(&mut oracle, &p)
                    }));
                    match result {
                        Ok(report) => {
                            let mut w = winner.lock().unwrap();
                            if w.is_none() {
                                *w = Some(report);
                                stop.store(true, Ordering::Relaxed);
                            }
                        }
                        Err(payload) => {
                            if !payload.is::<Cancelled>() {
                                std::panic::resume_unwind(payload);
                            }
                        }
                    }
                });
            }
        });
        winner.into_inner().unwrap().expect("some racer finishes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{exact_chi, matching_chi_bracket};
    use crate::gen::{generate_set_system, SetKind};
    use crate::oracle::MembershipOracle;
    use crate::par::run_seeded;

    fn sandwich_holds(chi: i64, chi_tilde: f64, eps: f64, k: usize) -> bool {
        let lower = chi as f64 / 2.0 - eps * k as f64;
        chi_tilde >= lower - 1e-9 && chi_tilde <= chi as f64 + 1e-9
    }

    #[test]
    fn singleton_only_family_estimates_zero() {
        let g = generate_set_system(&SetKind::SingletonHeavy, 100, 100, 0).unwrap();
        for seed in 0..10 {
            let mut o = MembershipOracle::new(&g.system);
            let r = estimate_thsc(&mut o, &SetCoverParams::new(seed));
            assert_eq!(r.chi_tilde, 0.0, "chi = 0 forces chi_tilde = 0 after clamp");
        }
    }

    #[test]
    fn one_full_set_among_singletons_sandwich() {
        let k = 1000usize;
        let mut sets: Vec<Vec<usize>> = vec![(0..k).collect()];
        sets.extend((0..k).map(|e| vec![e]));
        let sys = SetSystem::new(k, sets).unwrap();
        let chi = (k - 1) as i64; // SC = 1 via the full set
        let results = run_seeded(&(0..100).collect::<Vec<u64>>(), |seed| {
            let mut o = MembershipOracle::new(&sys);
            let r = estimate_thsc(&mut o, &SetCoverParams::new(seed));
            (r.chi_tilde, r.dense_path)
        });
        for (chi_tilde, dense) in results {
            assert!(!dense);
            assert!(
                sandwich_holds(chi, chi_tilde, 0.1, k),
                "chi_tilde = {chi_tilde} violates sandwich for chi = {chi}"
            );
        }
    }

    #[test]
    fn small_instance_takes_dense_path_and_sandwiches() {
        // k = 5 with three sets, padded to n = 8 by singletons; exact SC = 3
        let sys = crate::oracle::tests::small_three_set_instance();
        let chi = {
            // exact chi over the padded family
            let mut sets: Vec<Vec<usize>> = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]];
            sets.extend((0..5).map(|e| vec![e]));
            let padded = SetSystem::new(5, sets).unwrap();
            exact_chi(&padded, false).unwrap().unwrap()
        };
        assert_eq!(chi, 2);
        for seed in 0..100 {
            let mut o = MembershipOracle::new(&sys);
            let r = estimate_thsc(&mut o, &SetCoverParams::new(seed));
            assert!(r.dense_path);
            assert!(
                sandwich_holds(chi, r.chi_tilde, 0.1, 5),
                "seed {seed}: chi_tilde = {} vs chi = {chi}",
                r.chi_tilde
            );
            // any maximal matching of H lies in [chi/2, chi] here
            assert!(r.chi_tilde >= 1.0 && r.chi_tilde <= 2.0);
        }
    }

    #[test]
    fn dense_path_charges_full_scan() {
        let g = generate_set_system(&SetKind::UniformRandom { p: 0.2 }, 20, 120, 5).unwrap();
        let mut o = MembershipOracle::new(&g.system);
        let r = estimate_thsc(&mut o, &SetCoverParams::new(1));
        assert!(r.dense_path);
        assert_eq!(r.ledger.membership_queries(), 20 * 120);
    }

    #[test]
    fn no_pairs_on_pairs_and_singletons_is_zero() {
        // disjoint pairs plus all singletons: excluding pairs forces the
        // all-singleton cover, chi(F_{!=2}) = 0
        let k = 60usize;
        let mut sets: Vec<Vec<usize>> = (0..k / 2).map(|i| vec![2 * i, 2 * i + 1]).collect();
        sets.extend((0..k).map(|e| vec![e]));
        let sys = SetSystem::new(k, sets).unwrap();
        for seed in 0..10 {
            let mut o = MembershipOracle::new(&sys);
            let r = estimate_thsc_no_pairs(&mut o, &SetCoverParams::new(seed));
            assert_eq!(r.chi_tilde, 0.0);
        }
    }

    #[test]
    fn no_pairs_sandwich_against_brute_force() {
        for inst_seed in 0..6u64 {
            let g =
                generate_set_system(&SetKind::PairsAndTriples, 15, 45, inst_seed).unwrap();
            let chi = exact_chi(&g.system, true).unwrap().unwrap();
            for seed in 0..20 {
                let mut o = MembershipOracle::new(&g.system);
                let r = estimate_thsc_no_pairs(&mut o, &SetCoverParams::new(seed));
                assert!(
                    sandwich_holds(chi, r.chi_tilde, 0.1, 15),
                    "instance {inst_seed} seed {seed}: chi_tilde = {} vs chi = {chi}",
                    r.chi_tilde
                );
            }
        }
    }

    #[test]
    fn extra_pairs_change_nothing_for_no_pairs() {
        let g = generate_set_system(&SetKind::PairsAndTriples, 12, 30, 3).unwrap();
        let base = g.system;
        let mut with_pairs: Vec<Vec<usize>> = (0..base.family_size())
            .map(|s| base.set_members(s).iter().map(|&e| e as usize).collect())
            .collect();
        with_pairs.push(vec![0, 1]);
        with_pairs.push(vec![2, 7]);
        let extended = SetSystem::new(12, with_pairs).unwrap();
        let chi_a = exact_chi(&base, true).unwrap().unwrap();
        let chi_b = exact_chi(&extended, true).unwrap().unwrap();
        assert_eq!(chi_a, chi_b, "size-2 sets cannot change chi over F_{{!=2}}");
        for seed in 0..20 {
            let mut oa = MembershipOracle::new(&base);
            let ra = estimate_thsc_no_pairs(&mut oa, &SetCoverParams::new(seed));
            let mut ob = MembershipOracle::new(&extended);
            let rb = estimate_thsc_no_pairs(&mut ob, &SetCoverParams::new(seed));
            assert!(sandwich_holds(chi_a, ra.chi_tilde, 0.1, 12));
            assert!(sandwich_holds(chi_b, rb.chi_tilde, 0.1, 12));
        }
    }

    #[test]
    fn sandwich_on_matching_bracket_instances() {
        // mid-size smoke version of the acceptance criterion, brackets from
        // an exact maximal matching: chi in [|M|, 2|M|]
        let g = generate_set_system(&SetKind::UniformRandom { p: 0.02 }, 300, 300, 8).unwrap();
        let mut sets: Vec<Vec<usize>> = (0..g.system.family_size())
            .map(|s| g.system.set_members(s).iter().map(|&e| e as usize).collect())
            .collect();
        sets.extend((0..300).map(|e| vec![e]));
        let sys = SetSystem::new(300, sets).unwrap();
        let (lo, hi) = matching_chi_bracket(&sys, false, 99).unwrap();
        for seed in 0..10 {
            let mut o = MembershipOracle::new(&sys);
            let r = estimate_thsc(&mut o, &SetCoverParams::new(seed));
            assert!(
                r.chi_tilde <= hi as f64 + 1e-9,
                "upper sandwich breached: {} > {hi}",
                r.chi_tilde
            );
            assert!(
                r.chi_tilde >= lo as f64 / 2.0 - 0.1 * 300.0 - 1e-9,
                "lower sandwich breached: {} for bracket [{lo},{hi}]",
                r.chi_tilde
            );
        }
    }

    /// Double-counting wrapper: every estimator read must show up in the
    /// ledger exactly once.
    struct SpyOracle<'a> {
        inner: MembershipOracle<'a>,
        observed: u64,
    }

    impl Membership for SpyOracle<'_> {
        fn universe_size(&self) -> usize {
            self.inner.universe_size()
        }
        fn family_size(&self) -> usize {
            self.inner.family_size()
        }
        fn query(&mut self, element: usize, set: usize) -> bool {
            self.observed += 1;
            self.inner.query(element, set)
        }
        fn ledger(&self) -> &QueryLedger {
            self.inner.ledger()
        }
        fn ledger_mut(&mut self) -> &mut QueryLedger {
            self.inner.ledger_mut()
        }
    }

    #[test]
    fn ledger_matches_instrumented_count() {
        use crate::oracle::Membership;
        let g = generate_set_system(&SetKind::UniformRandom { p: 0.04 }, 150, 180, 6).unwrap();
        let mut spy = SpyOracle {
            inner: MembershipOracle::new(&g.system),
            observed: 0,
        };
        let r = estimate_thsc(&mut spy, &SetCoverParams::new(3));
        assert!(spy.observed > 0);
        assert_eq!(spy.observed, spy.ledger().membership_queries());
        assert_eq!(spy.observed, r.ledger.membership_queries());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn racing_mode_returns_a_valid_report() {
        let g = generate_set_system(&SetKind::UniformRandom { p: 0.05 }, 150, 150, 4).unwrap();
        let r = racing::estimate_thsc_racing(&g.system, &SetCoverParams::new(7), 4);
        assert!(r.chi_tilde >= 0.0 && r.chi_tilde <= 150.0);
    }
}
