//! Metric Steiner tree weight estimation under counted distance queries.
//!
//! The estimator computes the exact MST weight over the terminals, then
//! looks for evidence that Steiner vertices can merge many connected
//! components of the bucketed threshold graphs: per weight level, the
//! components of the graph below the level form set cover elements and the
//! Steiner vertices form sets (membership = proximity to a component
//! representative). If the summed cover gains exceed an `eta` fraction of
//! the MST weight, the estimate drops to `(1 - c'_eta * eta) * w(T*)`,
//! otherwise `w(T*)` is returned. The output is always one of those two
//! values.
//!
//! Vertices covering exactly two components are excluded from the level
//! instances (they cannot pay for their own detour), which is exactly the
//! `F_{!=2}` variant of the set cover estimator.
//!
//! Per-level gains are converted to weight as
//! `gain_i = chi_i * c_save * d_base * (1+eps)^(i-1)`, a conservative
//! per-merge saving at the level's edge scale; the constants are
//! configurable and reported.

mod level;
#[cfg(test)]
mod tests;

pub use level::{BfsOutcome, LevelClass, LevelComponents};

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::oracle::{DistanceOracle, QueryLedger};

/// Tuning for the Steiner estimator. Thresholds follow `kappa = M =
/// kappa_coeff * n^(2/3)` and `R, P = (r|p)_coeff * n^(1/3)`; levels number
/// `ceil(level_coeff * ln k / eps)` and a component is small when its net
/// has at most `ceil(cap_coeff * L / eps)` representatives.
#[derive(Clone, Debug, Serialize)]
pub struct SteinerParams {
    pub epsilon: f64,
    pub eta: f64,
    pub seed: u64,
    pub kappa_coeff: f64,
    /// Instances with at most this many terminals always take the dense
    /// branch regardless of `n`.
    pub kappa_floor: usize,
    pub m_coeff: f64,
    pub r_coeff: f64,
    pub p_coeff: f64,
    pub level_coeff: f64,
    pub cap_coeff: f64,
    pub c_eta: f64,
    pub c_eta_prime: f64,
    pub c_save: f64,
}

impl SteinerParams {
    pub fn new(seed: u64) -> Self {
        SteinerParams {
            epsilon: 0.1,
            eta: 0.05,
            seed,
            kappa_coeff: 1.0,
            kappa_floor: 16,
            m_coeff: 1.0,
            r_coeff: 4.0,
            p_coeff: 4.0,
            level_coeff: 1.0,
            cap_coeff: 1.0,
            c_eta: 1.0,
            c_eta_prime: 1.0,
            c_save: 0.2,
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn derived(&self, n: usize, k: usize) -> DerivedParams {
        let nf = n as f64;
        let kappa = (self.kappa_coeff * nf.powf(2.0 / 3.0)).max(self.kappa_floor as f64);
        let m = self.m_coeff * nf.powf(2.0 / 3.0);
        let r = (self.r_coeff * nf.powf(1.0 / 3.0)).max(1.0);
        let p = (self.p_coeff * nf.powf(1.0 / 3.0)).max(1.0);
        let levels = (self.level_coeff * (k.max(2) as f64).ln() / self.epsilon).ceil() as usize;
        let net_cap = (self.cap_coeff * levels as f64 / self.epsilon).ceil() as usize;
        DerivedParams {
            kappa,
            m,
            r,
            p,
            levels: levels.max(1),
            net_cap: net_cap.max(1),
        }
    }

    /// Parameter preconditions of the sampling path, checked before any
    /// query when `k > kappa`.
    pub fn check_conditions(&self, n: usize, k: usize) -> Result<()> {
        let d = self.derived(n, k);
        let kf = k as f64;
        let ln_n = (n.max(2) as f64).ln();
        if kf <= d.m {
            return Err(CoreError::Config(format!(
                "sampling path needs k > M, got k = {k}, M = {:.1}",
                d.m
            )));
        }
        if kf < d.p {
            return Err(CoreError::Config(format!(
                "sampling path needs k >= P, got k = {k}, P = {:.1}",
                d.p
            )));
        }
        if kf / d.p > self.epsilon * d.m {
            return Err(CoreError::Config(format!(
                "condition k/P <= eps*M violated: {:.2} > {:.2}",
                kf / d.p,
                self.epsilon * d.m
            )));
        }
        if (n as f64) / d.r > 4.0 * self.epsilon * d.m * ln_n {
            return Err(CoreError::Config(format!(
                "condition n/R <= ~eps*M violated: {:.2} > {:.2}",
                (n as f64) / d.r,
                4.0 * self.epsilon * d.m * ln_n
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DerivedParams {
    pub kappa: f64,
    pub m: f64,
    pub r: f64,
    pub p: f64,
    pub levels: usize,
    pub net_cap: usize,
}

/// Per-level diagnostics emitted with every run.
#[derive(Clone, Debug, Serialize)]
pub struct LevelDiag {
    pub level: usize,
    pub class: String,
    pub universe_estimate: f64,
    pub chi_estimate: f64,
    pub improvement: f64,
    pub distance_queries_after: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SteinerReport {
    pub estimate: f64,
    pub mst_weight: f64,
    pub fired: bool,
    pub total_improvement: f64,
    pub threshold: f64,
    pub dense_path: bool,
    pub n_points: usize,
    pub terminals: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub c_eta: f64,
    pub c_eta_prime: f64,
    pub c_save: f64,
    pub seed: u64,
    pub levels: Vec<LevelDiag>,
    pub ledger: QueryLedger,
}

/// Two-valued estimate of the Steiner tree weight: either `w(T*)` or
/// `(1 - c'_eta * eta) * w(T*)`, where `w(T*)` is the exact terminal MST.
/// Always within `[ST * (1 - c'_eta * eta) .. 2 * ST]` by Gilbert-Pollak.
pub fn estimate_steiner(
    oracle: &mut DistanceOracle,
    params: &SteinerParams,
) -> Result<SteinerReport> {
    let n = oracle.n_points();
    let k = oracle.terminals().len();
    let derived = params.derived(n, k);
    let dense = (k as f64) <= derived.kappa;
    if !dense {
        params.check_conditions(n, k)?;
    }
    let mut runner = level::LevelRunner::new(oracle, params, derived, dense)?;
    Ok(runner.run())
}

/// Structural access to the level machinery for tests and diagnostics:
/// exposes components, nets, Find/BFS and per-level solving on a live
/// estimator state.
pub struct SteinerEstimator<'a, 'o> {
    inner: level::LevelRunner<'a, 'o>,
}

impl<'a, 'o> SteinerEstimator<'a, 'o> {
    pub fn new(oracle: &'a mut DistanceOracle<'o>, params: &SteinerParams) -> Result<Self> {
        let n = oracle.n_points();
        let k = oracle.terminals().len();
        let derived = params.derived(n, k);
        let dense = (k as f64) <= derived.kappa;
        Ok(SteinerEstimator {
            inner: level::LevelRunner::new(oracle, params, derived, dense)?,
        })
    }

    pub fn mst_weight(&self) -> f64 {
        self.inner.mst_weight()
    }

    pub fn base_distance(&self) -> f64 {
        self.inner.base_distance()
    }

    /// Components of the threshold graph below level `i`, with the level's
    /// representative nets.
    pub fn level_components(&mut self, level: usize) -> &LevelComponents {
        self.inner.level_components(level)
    }

    /// A representative of the component (below level `i`) containing the
    /// terminal.
    pub fn find_representative(&mut self, level: usize, terminal: u32) -> u32 {
        self.inner.find_representative(level, terminal)
    }

    /// All representatives of the terminal's component if they number at
    /// most `cap`, otherwise `Overflow`.
    pub fn bfs_representatives(&mut self, level: usize, terminal: u32, cap: usize) -> BfsOutcome {
        self.inner.bfs_representatives(level, terminal, cap)
    }

    pub fn classify_level(&mut self, level: usize) -> LevelClass {
        self.inner.classify_level(level)
    }

    /// Estimated cover gain of a heavy level, in components.
    pub fn solve_level_heavy(&mut self, level: usize) -> f64 {
        self.inner.solve_level_heavy(level)
    }

    pub fn run(mut self) -> SteinerReport {
        self.inner.run()
    }
}
