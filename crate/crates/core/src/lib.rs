//! Hamiltonian Monte Carlo building blocks: the No-U-Turn Sampler (NUTS),
//! the SpreadNUTS variant (k-ary trajectory extension with exploration-biased
//! candidate selection), Gaussian-mixture targets, and the grid-discretized
//! total-variation machinery used to benchmark samplers against direct draws.
//!
//! The crate is `no_std` (with `alloc`) so the samplers can be embedded
//! anywhere; all IO, file formats, and the benchmark CLI live in the
//! companion `spreadnuts` crate.
//!
//! # Overview
//!
//! * [`mixture`] — Gaussian mixture targets: numerically stable log-density
//!   via LogSumExp, analytic gradients, and direct (non-MCMC) sampling.
//! * [`dynamics`] — phase-space primitives: potential/kinetic/total energy
//!   and the leapfrog symplectic integrator.
//! * [`nuts`] — baseline NUTS: binary doubling, slice threshold, U-turn
//!   termination, and dual-averaging step-size adaptation.
//! * [`spatial`] — a k-d tree over previously accepted samples supporting
//!   exact nearest-neighbor queries.
//! * [`spread`] — SpreadNUTS: k-ary trajectory extension (`k^k` points at
//!   iteration `k`, relaxed subtree U-turn checks) plus selection weighted
//!   by squared distance to the nearest previously accepted sample.
//! * [`evaluation`] — random mixture generation, sparse grid histograms,
//!   and the discretized total-variation distance.
//!
//! # Example
//!
//! ```
//! use spreadnuts_core::mixture::GaussianMixture;
//! use spreadnuts_core::nuts::{NutsChain, SamplerConfig};
//!
//! let target = GaussianMixture::standard_normal(1);
//! let config = SamplerConfig { seed: 7, ..SamplerConfig::default() };
//! let mut chain = NutsChain::new(&target, vec![0.0], config).unwrap();
//! let samples = chain.run(200, 50);
//! assert_eq!(samples.len(), 150);
//! ```

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod mixture;
pub mod nuts;
pub mod rng;
pub mod spatial;
pub mod spread;

pub use error::{Error, Result};
pub use mixture::{GaussianMixture, TargetDistribution};
