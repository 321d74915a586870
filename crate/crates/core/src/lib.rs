//! Path simulation and functional evaluation for the Brownian σ-finite measure
//! `W = ∫ du/√(2πu) · (Brownian bridge of length u) • (symmetrized Bessel(3))`.
//!
//! The crate is `no_std` with `alloc`. Everything here is pure computation:
//! samplers draw from explicit RNG substreams, functionals read grid paths, and
//! the experiment harness is generic over an [`experiments::Executor`] so a
//! host crate can plug in a thread pool without changing any result.
//!
//! Paths live on a time grid ([`path::TimeGrid`]), uniform or with a coarser
//! step after a switch time. Paths produced by the
//! `W` sampler carry a [`path::BesselTail`] annotation describing the part of the
//! path that is a Bessel(3) process in some moving frame. Functionals use it to
//! add exact conditional factors for everything past the simulated horizon.

#![cfg_attr(not(test), no_std)]
// `num_traits::Float` supplies float methods under no_std; it goes unused
// whenever a build links std.
#![allow(unused_imports)]

extern crate alloc;

pub mod error;
pub mod experiments;
pub mod functionals;
pub mod integrand;
pub mod measure;
pub mod path;
pub mod rng;
pub mod samplers;
pub mod special;
pub mod stats;
pub mod sturm_liouville;

pub use error::{Error, Result};
pub use integrand::Integrand;
pub use measure::MeasureSpec;
pub use path::{BesselTail, SamplePath, TimeGrid};
pub use rng::RngStream;
