//! Bernoulli nonadaptive group testing: designs, decoders, rate bounds,
//! and a Monte Carlo harness.
//!
//! Group testing recovers a small set of defective items from pooled
//! tests: a pool is positive iff it contains at least one defective.
//! This crate implements the standard Bernoulli design (every item joins
//! every pool independently with probability p) together with four
//! practical decoders — COMP, DD, SCOMP, and LP relaxation with a choice
//! of rounding rules — plus an exhaustive smallest-satisfying-set oracle
//! for desk-scale instances, the analytic rate curves those decoders are
//! measured against, and a seeded simulation harness that reproduces the
//! standard success-probability experiment.
//!
//! ```
//! use grouptest::design::{bernoulli_design, compute_outcomes, sample_defective_set};
//! use grouptest::decode::{dd_decode, is_satisfying};
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//!
//! let mut rng = ChaCha8Rng::seed_from_u64(7);
//! let defectives = sample_defective_set(100, 4, &mut rng)?;
//! let design = bernoulli_design(100, 60, 0.2, &mut rng)?;
//! let outcomes = compute_outcomes(&design, &defectives)?;
//!
//! let result = dd_decode(&design, &outcomes)?;
//! // DD never invents a defective.
//! assert!(result.estimate.iter().all(|i| defectives.contains(i)));
//! // The true set always explains the outcomes.
//! assert!(is_satisfying(&design, &outcomes, &defectives)?);
//! # Ok::<(), grouptest::Error>(())
//! ```
//!
//! The `book/` directory of the repository walks through the concepts;
//! its code snippets compile against this crate as doc-tests.

#![forbid(unsafe_code)]

mod bits;
pub mod bounds;
pub mod decode;
pub mod design;
mod error;
pub mod lp;
pub mod sim;

pub use error::{Error, Result};

// Keep the guide's examples honest: every fenced Rust block in the book
// runs under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/designs.md")]
    pub struct Designs;
    #[doc = include_str!("../../../book/src/decoders.md")]
    pub struct Decoders;
    #[doc = include_str!("../../../book/src/linear-programming.md")]
    pub struct LinearProgramming;
    #[doc = include_str!("../../../book/src/rate-bounds.md")]
    pub struct RateBounds;
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub struct Simulation;
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;
