//! Numerical core: special functions, dense linear algebra, multivariate
//! normal primitives and seeded random generation.

pub mod linalg;
pub mod mvn;
pub mod rng;
pub mod special;

pub use linalg::{cholesky, dot, least_squares, CholeskyFactor, LeastSquaresFit, Matrix, SymmetricMatrix};
pub use mvn::{mvn_logpdf, mvn_logpdf_prec, mvn_sample, mvn_sample_prec};
pub use rng::{chain_rng, master_rng, ChainRng, RngSeed};
pub use special::{chi2_sf, digamma, f_sf, ln_beta, log_gamma, trigamma};
