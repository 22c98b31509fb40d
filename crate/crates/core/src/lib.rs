//! Exact and statistical verification of the binomial identities that come
//! from the Laplace transform of the maximum of independent exponentials.
//!
//! - [`exact_arith`]: canonical rationals, binomials, factorials, rising products.
//! - [`jets`]: truncated Taylor arithmetic for exact derivatives at a point.
//! - [`identities`]: both sides of every identity, plus the grid sweep engine.
//! - [`laplace_numeric`]: adaptive quadrature of the two integral forms.
//! - [`montecarlo`]: seeded samplers, tail/transform estimates and two-sample KS.
//! - [`cli`]: the `binid` command-line front end and its report formats.

pub mod cli;
pub mod exact_arith;
pub mod identities;
pub mod jets;
pub mod laplace_numeric;
pub mod montecarlo;

pub use exact_arith::Rational;
pub use identities::{IdentityId, IdentityParams, VerificationReport};
pub use jets::Jet;
