//! Exact and simulated privacy behaviour of posterior sampling versus cyclic
//! SGLD for one-dimensional Bayesian linear regression.
//!
//! The crate is organised by concern:
//!
//! - [`model`], [`dataset`], [`gaussian`]: the regression model, the restricted
//!   data domain, datasets and the adversarial neighbouring databases.
//! - [`posterior`]: conjugate posterior, Rényi divergence and the posterior
//!   RDP/ADP accountant, plus a brute-force worst-case neighbour oracle.
//! - [`sgld`]: closed-form epoch distributions of cyclic SGLD, the gap metric,
//!   the critical epoch and violation certificates.
//! - [`mechanisms`]: Laplace draws and the Propose-Test-Sample mechanism.
//! - [`montecarlo`]: a reference SGLD simulator and empirical DP audits.
//! - [`wasserstein`]: smoothed-density bounds under Wasserstein proximity.

// Negated comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod gaussian;
pub mod mechanisms;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod posterior;
pub mod sgld;
pub mod wasserstein;

pub use dataset::{DataPoint, Dataset, SufficientStats};
pub use error::{Error, Result};
pub use gaussian::{Gaussian1D, GaussianMixture1D};
pub use model::{DomainSpec, ModelParams};
pub use posterior::{PrivacyBudget, RdpBound};
pub use sgld::{CriticalEpochReport, EpochState, SgldCoefficients};
