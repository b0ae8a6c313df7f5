//! Gauge-transport trajectory mechanics.
//!
//! This crate implements a formulation of wave mechanics in which a particle's
//! gauge length changes along its trajectory and physically realizable paths
//! are those whose accumulated phase closes onto an integer multiple of 2π.
//! From that single selection rule it builds:
//!
//! - metric jets on coordinate charts ([`geometry`]),
//! - discrete actions, extremal paths, and principal functions ([`paths_action`]),
//! - length transport, gauge recalibration, and the physical-path criterion
//!   ([`weyl_gauge`]),
//! - two-slit and flux-loop interference predictions with a Monte Carlo
//!   cross-check ([`interference`]),
//! - the short-time expansion of the principal function and the evolution
//!   equation it generates on a curved background ([`propagator`]),
//! - gauge-covariant field checks for charged particles around a flux line
//!   ([`gauge_kg`]).
//!
//! Every numerical claim is backed by an independent route: closed forms,
//! convergence-order measurements, or a second discretization. The
//! [`oracle`] module holds those independent implementations; production code
//! never calls them.

// Validation guards are written `!(x > 0.0)` on purpose: the negation is
// true for NaN, which `x <= 0.0` would wave through. Index loops stay where
// several arrays are walked in lockstep against the same stencil offsets.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod evolution;
pub mod field;
pub mod gauge_kg;
pub mod geometry;
pub mod interference;
pub mod kernel;
pub mod oracle;
pub mod paths_action;
pub mod propagator;
pub mod tensor;
pub mod weyl_gauge;

pub use error::{Error, Result};

// Compiles and runs every fenced Rust block in the guide as a doc-test, so
// the book cannot drift from the API. One module per chapter keeps test
// failures attributable to a file.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/interference.md")]
    mod interference {}
    #[doc = include_str!("../../../book/src/flux.md")]
    mod flux {}
    #[doc = include_str!("../../../book/src/monte_carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/short_time.md")]
    mod short_time {}
    #[doc = include_str!("../../../book/src/waves.md")]
    mod waves {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
