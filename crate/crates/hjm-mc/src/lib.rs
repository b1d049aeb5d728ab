//! Monte Carlo pricing of bond contracts under Heath–Jarrow–Morton
//! forward-rate models, with computable a posteriori estimates of the
//! time- and maturity-discretization errors.
//!
//! The forward curve deviation `g(t,τ) = f(t,τ) − f₀(τ)` is advanced by an
//! explicit Euler scheme on a tensor grid ([`scheme`]); contract payoffs of
//! the form `F(Y)·G(∫Ψ(f(t_max,·))) + Z` are evaluated with a fourth-order
//! composite maturity quadrature ([`payoff`]); sample averages over keyed,
//! reproducible paths give the price ([`estimator`]); and a backward dual
//! sweep per path turns the leading discretization error into a computable
//! quantity with its own statistical band ([`dual`]).
//!
//! [`oracle`] holds closed-form reference values for the Gaussian benchmark
//! models and a brute-force trapezoid simulator of the exact solutions,
//! used to validate everything else.

// Parameter guards are written `!(x > 0.0)` so NaN fails validation through
// the same comparison, and the numerical kernels index several parallel
// slices by one position; both read better than the suggested alternatives.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dual;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod payoff;
mod quad;
pub mod rng;
pub mod scheme;

pub use dual::{
    error_estimate, path_error_terms, ratio_interval, ErrorReport, PathErrorTerms, RatioInterval,
};
pub use error::{Error, Result};
pub use estimator::{run_samples, McConfig, PriceEstimate, Pricer, SampleStats};
pub use grid::Grid;
pub use model::{CirParams, HjmModel, HoLeeParams, TwoFactorParams, VasicekParams};
pub use payoff::{Payoff, QuadratureRule};
pub use scheme::Scheme;
