//! Bayesian matrix completion for counterfactual inference on panel data.
//!
//! Treated cells of a panel are modeled as missing untreated outcomes and
//! imputed by a Gibbs sampler under a low-rank factor model with a
//! cumulative shrinkage prior, yielding posterior distributions of
//! treatment effects. Synthetic-control and nuclear-norm baselines plus a
//! seeded benchmark harness round out the crate.

pub mod baselines;
pub mod dgp;
pub mod effects;
pub mod error;
pub mod panel;
pub mod sampler;
pub mod shrinkage;
pub mod stiefel;

pub use error::{Error, Result};
pub use panel::PanelData;
pub use sampler::{PosteriorDraws, SamplerConfig};
