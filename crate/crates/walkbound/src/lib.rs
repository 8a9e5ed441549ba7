//! Quantize classical Markov chains into discrete-time quantum walks and
//! verify, numerically, how their spectra, hitting behaviour, and stationary
//! distributions respond to perturbation.
//!
//! The crate revolves around one scenario: a reference chain `P` is
//! disturbed into `Q = P + E`, either by rounding its entries to fixed
//! precision or by injecting seeded random noise, and a family of
//! inequalities then pins down how far the derived quantities can drift:
//!
//! * eigenvalue displacement of symmetric chains is at most the spectral
//!   norm of `E`,
//! * the spectral gap of `Q` lands inside a sandwich of width `2||E||_2`
//!   around the gap of `P`,
//! * the leakage norm of an absorbing-boundary block and the hitting-time
//!   proxies derived from it move in controlled ways,
//! * stationary distributions move at most `||E||_inf / (2 (1 - tau))` in
//!   total variation, where `tau` is the chain's contraction coefficient,
//! * samples drawn through an interpolated chain sequence inherit that TV
//!   budget plus the sampler's own precision.
//!
//! Every inequality is exposed as a check that returns a [`bounds::BoundReport`]
//! with the measured left side, the bound, and the slack between them, and
//! the whole family can be swept over seeded random instances. All
//! randomness is derived from explicit seeds, so every run is reproducible
//! byte for byte.

// Index loops mirror the subscripts in the inequalities they implement;
// iterator rewrites hide which matrix axis is being walked.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod gen;
pub mod io;
pub mod markov;
pub mod matrix;
pub mod perturb;
pub mod report;
pub mod sampler;
pub mod szegedy;

pub use bounds::{BoundContext, BoundId, BoundReport, BoundTally, SweepSpec, SweepSummary};
pub use error::{Error, Result};
pub use markov::{norms, tv_distance, Distribution, SpectralSummary, StochasticMatrix};
pub use perturb::{
    decompose, random_perturbation, truncate_precision, NoiseKind, NoiseSpec, Perturbation,
};
pub use szegedy::{build_walk, mark, MarkedPartition, SzegedyWalk};

/// Compiles and runs every code block in the guide and the README as a
/// doctest, so the prose cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/stochastic-matrices.md")]
    pub struct StochasticMatrices;
    #[doc = include_str!("../../../book/src/perturbations.md")]
    pub struct Perturbations;
    #[doc = include_str!("../../../book/src/szegedy-walks.md")]
    pub struct SzegedyWalks;
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub struct BoundChecks;
    #[doc = include_str!("../../../book/src/sampling.md")]
    pub struct StationarySampling;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct CommandLine;
    #[doc = include_str!("../../../book/src/formats.md")]
    pub struct FileFormats;
}
