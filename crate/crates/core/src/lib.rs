//! Charts for solution manifolds of `x'(t) = f(x(t + d(x_t)))`.
//!
//! The state space is `C¹ = C¹([-h, 0], ℝ)`, represented by piecewise cubic
//! Hermite functions ([`funcspace::IntervalFunction`]). For a delay functional
//! `d : C¹ → (-h, 0)` whose derivative extends continuously to `C`, the
//! solution manifold `X_F = {φ : φ'(0) = f(φ(d(φ)))}` restricted to
//! `U_b = {φ : |φ'| < b on [-h, d(φ)]}` is carried by an explicit
//! diffeomorphism onto an open subset of `X₀ = {φ : φ'(0) = 0}`.
//!
//! * [`funcspace`]: function representation, norms, linear operations.
//! * [`delay`]: delay functionals, the right-hand side `F` and `DF`, `U_b`.
//! * [`transversal`]: the family of transversals `χ(v, r)`.
//! * [`chart`]: the maps `A`, `B`, `T`, `Y`, the chart and its inverse.
//! * [`manifold`]: points of `X_F`, `X₀` utilities, counterexample scenarios.
//! * [`ddeint`]: method-of-steps integration with dense history.
//! * [`sampling`]: seeded random test data.
//! * [`verify`]: the verification suites behind `selftest` and the tests.
//! * [`cli`]: configuration, commands and reports for the `sdde-chart` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod funcspace;
pub mod quadrature;
pub mod delay;
pub mod transversal;
pub mod chart;
pub mod sampling;
pub mod manifold;
pub mod ddeint;
pub mod verify;
pub mod cli;

pub use error::{Error, Result};
pub use funcspace::{GridSpec, IntervalFunction};
