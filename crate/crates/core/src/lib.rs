//! Vincular pattern statistics of random permutations in conjugacy classes.
//!
//! The crate has six parts:
//!
//! - [`perm`]: permutations, integer partitions (cycle types), point sets;
//! - [`pattern`]: vincular patterns and occurrence counting kernels;
//! - [`sampler`]: exactly-uniform samplers on `S_n` and on conjugacy
//!   classes, with reproducible parallel random streams;
//! - [`wdg`]: the weighted-graph calculus behind the cumulant bounds
//!   (maximal-weight spanning trees, `Ψ`, proof graphs, `R`/`T_ℓ` audits);
//! - [`cumulants`]: exact mixed cumulants of the indicator family
//!   `B_{i,j} = 1[σ(i) = j]` over small classes, and empirical k-statistics;
//! - [`cltlab`]: the Monte Carlo experiment harness (CLT verification,
//!   limiting-variance estimation, one-point pattern densities).
//!
//! [`stats`] carries the shared float toolbox (k-statistics, jackknife,
//! normal CDF, Kolmogorov–Smirnov distance); [`error`] the common error
//! type.

pub mod cltlab;
pub mod cumulants;
pub mod error;
pub mod pattern;
pub mod perm;
pub mod sampler;
pub mod stats;
pub mod wdg;

pub use error::{Error, Result};
pub use pattern::{count_fast, count_oracle, is_occurrence, OccurrenceIndex, VincularPattern};
pub use perm::{IntegerPartition, Permutation, PointSet};
pub use sampler::{
    lambda_n, sample_class, sample_class_rec2, sample_class_rec3, sample_sn, ClassSpec,
    RandomStream,
};
