//! Similarity-driven Metropolis-Hastings for discrete model spaces.
//!
//! Proposals over binary model configurations are reweighted by a
//! data-driven dissimilarity — the log10 p-value of an F or likelihood-ratio
//! test against the null model — raised to an informativeness exponent λ,
//! which is tuned on the fly by windowed Robbins-Monro adaptation. Two
//! complete samplers are built on this kernel:
//!
//! * conjugate Bayesian variable selection for linear regression, with a
//!   closed-form marginal likelihood and optional graph-guided swap moves;
//! * reversible-jump variable selection for Dirichlet-Multinomial
//!   regression, with penalized-MLE-centered coefficient proposals.
//!
//! The crate also ships the synthetic-data generators, chain diagnostics
//! (acceptance summaries, Hamming histograms, PIPs, Bayesian FDR selection,
//! autocorrelation) and trace serialization used by the experiment CLI.

pub mod adapt;
pub mod conjlinear;
pub mod diagnostics;
pub mod dirmult;
pub mod error;
pub mod inclusion;
pub mod linsampler;
pub mod localmove;
pub mod numcore;
pub mod proposal;
pub mod rjmcmc;
pub mod synthgen;
pub mod traceio;

pub use error::{CoreError, Result};
pub use inclusion::InclusionVector;
