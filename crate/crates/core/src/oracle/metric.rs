use serde::{Deserialize, Serialize};

use super::QueryLedger;
use crate::error::{CoreError, Result};

/// Point count above which the cubic triangle-inequality check is skipped on
/// construction; generators guarantee the property for larger instances.
pub const TRIANGLE_CHECK_MAX: usize = 256;

/// A finite metric: `n_pts` points, a symmetric nonnegative distance matrix
/// with zero diagonal, and a terminal subset. Distances from coordinate
/// generators are rounded to 6 decimal digits so runs are bit-reproducible.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricInstance {
    n_pts: usize,
    // row-major n_pts * n_pts
    weights: Vec<f64>,
    terminals: Vec<u32>,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl MetricInstance {
    pub fn from_matrix(matrix: Vec<Vec<f64>>, terminals: Vec<usize>) -> Result<Self> {
        let n = matrix.len();
        if n < 1 {
            return Err(CoreError::InvalidInstance("empty metric".into()));
        }
        let mut weights = vec![0.0; n * n];
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(CoreError::InvalidInstance(format!(
                    "row {i} has length {} != {n}",
                    row.len()
                )));
            }
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(CoreError::InvalidInstance(format!(
                        "weight ({i},{j}) = {w} is not a finite nonnegative value"
                    )));
                }
                weights[i * n + j] = w;
            }
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(CoreError::InvalidInstance(format!(
                    "nonzero diagonal at {i}"
                )));
            }
            for j in (i + 1)..n {
                if weights[i * n + j] != weights[j * n + i] {
                    return Err(CoreError::InvalidInstance(format!(
                        "asymmetric weights at ({i},{j})"
                    )));
                }
            }
        }
        if n <= TRIANGLE_CHECK_MAX {
            for i in 0..n {
                for j in 0..n {
                    for z in 0..n {
                        let lhs = weights[i * n + j];
                        let rhs = weights[i * n + z] + weights[z * n + j];
                        // tolerance absorbs the 6-decimal rounding of generators
                        if lhs > rhs + 5e-6 {
                            return Err(CoreError::InvalidInstance(format!(
                                "triangle inequality violated on ({i},{j},{z})"
                            )));
                        }
                    }
                }
            }
        }
        let terminals = validate_terminals(terminals, n)?;
        Ok(MetricInstance {
            n_pts: n,
            weights,
            terminals,
        })
    }

    /// Euclidean metric from point coordinates; distances rounded to 6
    /// decimals. The triangle inequality holds by construction (rounding slack
    /// is covered by the validation tolerance).
    pub fn from_coords(coords: &[Vec<f64>], terminals: Vec<usize>) -> Result<Self> {
        let n = coords.len();
        if n < 1 {
            return Err(CoreError::InvalidInstance("empty metric".into()));
        }
        let dim = coords[0].len();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            if coords[i].len() != dim {
                return Err(CoreError::InvalidInstance("ragged coordinates".into()));
            }
            for j in (i + 1)..n {
                let d2: f64 = (0..dim)
                    .map(|t| (coords[i][t] - coords[j][t]).powi(2))
                    .sum();
                let d = round6(d2.sqrt());
                weights[i * n + j] = d;
                weights[j * n + i] = d;
            }
        }
        let terminals = validate_terminals(terminals, n)?;
        Ok(MetricInstance {
            n_pts: n,
            weights,
            terminals,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_pts
    }

    pub fn terminals(&self) -> &[u32] {
        &self.terminals
    }

    /// Indices of non-terminal (Steiner) points, in increasing order.
    pub fn steiner_points(&self) -> Vec<u32> {
        let tset: std::collections::HashSet<u32> = self.terminals.iter().copied().collect();
        (0..self.n_pts as u32).filter(|p| !tset.contains(p)).collect()
    }

    /// Ground-truth access for baselines, generators and tests. Estimators
    /// must go through [`DistanceOracle`].
    pub fn distance_raw(&self, u: usize, v: usize) -> f64 {
        self.weights[u * self.n_pts + v]
    }
}

fn validate_terminals(terminals: Vec<usize>, n: usize) -> Result<Vec<u32>> {
    let mut t: Vec<u32> = Vec::with_capacity(terminals.len());
    for x in terminals {
        if x >= n {
            return Err(CoreError::InvalidInstance(format!(
                "terminal {x} out of range for {n} points"
            )));
        }
        t.push(x as u32);
    }
    t.sort_unstable();
    if t.windows(2).any(|w| w[0] == w[1]) {
        return Err(CoreError::InvalidInstance("duplicate terminal".into()));
    }
    if t.is_empty() {
        return Err(CoreError::InvalidInstance("terminal set is empty".into()));
    }
    Ok(t)
}

/// Counted distance oracle; `query(u, v)` returns `w(u, v)` and charges the
/// ledger by one, repeated identical queries included.
pub struct DistanceOracle<'a> {
    metric: &'a MetricInstance,
    ledger: QueryLedger,
}

impl<'a> DistanceOracle<'a> {
    pub fn new(metric: &'a MetricInstance) -> Self {
        DistanceOracle {
            metric,
            ledger: QueryLedger::new(),
        }
    }

    pub fn n_points(&self) -> usize {
        self.metric.n_points()
    }

    pub fn terminals(&self) -> &[u32] {
        self.metric.terminals()
    }

    #[inline]
    pub fn query(&mut self, u: usize, v: usize) -> f64 {
        assert!(u < self.metric.n_pts, "point index {u} out of range");
        assert!(v < self.metric.n_pts, "point index {v} out of range");
        self.ledger.charge_distance();
        self.metric.distance_raw(u, v)
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut QueryLedger {
        &mut self.ledger
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }
}
