//! Decomposition of time series with multiple periodically correlated (MPC)
//! components, and Bayesian estimation of each component's amplitude.
//!
//! The analysis runs in two stages:
//!
//! 1. A Kolmogorov–Zurbenko Fourier Transform (KZFT) bandpass filter isolates
//!    each periodically correlated component at its center frequency, and a
//!    periodic block bootstrap (block length equal to the component period)
//!    resamples each filtered component without breaking its correlation
//!    structure ([`kzft`], [`bootstrap`]).
//! 2. A Metropolis–Hastings sampler estimates the amplitude `A` and noise
//!    scale `σ` of each filtered component under
//!    `Y_t ~ N(A sin(2πt/p + φ), σ²)` with gamma priors ([`mcmc`]).
//!
//! Fitted sinusoids are summed, the removed linear trend is re-added, and the
//! result serves as reconstruction and forecast ([`fit`]). Everything is
//! deterministic given the seeds carried in the options.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the command
//! line live in the companion `pcdecomp` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bootstrap;
pub mod error;
pub mod fit;
pub mod kzft;
pub mod mcmc;
pub mod series;
pub mod spectral;

pub use error::Error;
pub use series::{SinusoidModel, TimeSeries, TrendLine};
