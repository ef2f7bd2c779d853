//! Exact and asymptotic trace statistics of real Ginibre, GOE, and real
//! Wishart random matrices.
//!
//! Expectations, fluctuations, and cumulants of trace products are computed
//! three independent ways and cross-checked: an exact genus expansion over
//! premaps with `N^chi` weights, direct Wick-formula expansion over matrix
//! entries with rational arithmetic, and seeded Monte Carlo sampling.  The
//! large-`N` layer evaluates first-order moments, second-order fluctuations,
//! and the spoke-diagram identities of real second-order freeness.

pub mod asymptotics;
pub mod diagrams;
pub mod ensembles;
pub mod error;
pub mod laurent;
pub mod montecarlo;
pub mod oracle;
pub mod perm;

pub use error::{Error, Result};
