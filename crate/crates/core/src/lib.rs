//! Polytopic uncertainty models for discrete-time LTI systems from a single
//! noisy identification experiment.
//!
//! The pipeline deliberately lifts a time-invariant plant to period `N`
//! (cycled signals), identifies the lifted system with a subspace method at
//! order `N*n`, recovers the block-cyclic structure with a coordinate
//! transformation, and extracts `N` per-phase parameter sets. Noise scatters
//! those sets around the true plant, so they serve as vertices of a matrix
//! polytope; a particle swarm search over simplex weights then picks the
//! convex combination with the smallest validation prediction error.
//!
//! Module map:
//! - [`statespace`]: models, simulation, Markov parameters, canonical forms
//! - [`cyclic`]: cycled signals, shift matrices, ideal cyclic systems,
//!   per-phase extraction
//! - [`subspace`]: block-Hankel construction and subspace identification
//! - [`recovery`]: structure-recovering coordinate transformations
//! - [`polytope`]: simplex weights and convex combinations of vertex models
//! - [`pso`]: particle swarm optimization over the standard simplex
//! - [`metrics`]: FIT scores and Frobenius parameter errors
//! - [`harness`]: config-driven experiment pipeline, studies, and reports

pub mod cyclic;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod polytope;
pub mod pso;
pub mod recovery;
pub mod statespace;
pub mod subspace;

pub use error::{Error, Result};
