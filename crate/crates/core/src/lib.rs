//! Bayesian nonparametric tolerance intervals built on the Dirichlet process.
//!
//! The crate is `no_std` (with `alloc`). It covers:
//!
//! * special functions and a small family of univariate distributions,
//! * the DP posterior and the distribution of its quantile process,
//! * one- and two-sided `(beta, gamma)` and beta-expectation tolerance limits,
//!   plus the frequentist order-statistic baseline,
//! * a Gibbs sampler for the mixture-of-DP hierarchy,
//! * empirical-Bayes prior elicitation.
//!
//! IO, simulation orchestration and the command line live in the `dptol` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod distributions;
pub mod dp_quantile;
pub mod empirical_bayes;
mod error;
pub mod mdp;
pub mod quad;
pub mod rng;
pub mod special;
pub mod tolerance;

pub use distributions::{Distribution, EmpiricalCdf};
pub use dp_quantile::{Crossing, DpPosterior, ExpectedQuantile, QuantileLimit, QuantileProcess};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use tolerance::{
    BonferroniConvention, IntervalFlags, Kind, Side, ToleranceInterval, ToleranceSpec,
};
