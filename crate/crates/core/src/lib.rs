//! Entropy estimation under Dirichlet prior smoothing.
//!
//! The crate provides the plug-in (MLE), Miller–Madow, Dirichlet-smoothed
//! plug-in and Dirichlet-Bayes entropy estimators, exact and Monte Carlo
//! evaluation of their risk, closed-form bias/variance/risk bounds with
//! regime checks, and the positive-linear-operator toolkit used to bound
//! plug-in bias.

pub mod approx;
pub mod bounds;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod exact_risk;
pub mod montecarlo;
pub mod sweep;

pub use distributions::{entropy, Counts, Distribution};
pub use error::{Error, Result};
pub use estimators::{estimate, EstimatorKind};
pub use exact_risk::{RiskMethod, RiskReport};
