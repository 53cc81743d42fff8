//! Sublinear-query combinatorial estimators with exact query accounting.
//!
//! The crate estimates `|U| - SC(U, F)` for a set system under a counted
//! membership oracle, and the metric Steiner tree weight under a counted
//! distance oracle. Estimators never touch instance internals directly:
//! every read goes through an oracle that charges a [`oracle::QueryLedger`].
//! Exact brute-force baselines live in [`baselines`] so every randomized
//! component can be checked against ground truth.

pub mod baselines;
pub mod error;
pub mod fit;
pub mod gen;
pub mod oracle;
pub mod par;
pub mod rgmm;
pub mod setcover;
pub mod sparsify;
pub mod steiner;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::CoreError;
