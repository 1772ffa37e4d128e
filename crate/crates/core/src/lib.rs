//! Expander decomposition and related tools for finite regular multigraphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] holds the multigraph type, generators, expansion checks and
//!   the edge-list format.
//! * [`markov`] applies the averaging operator, measures contraction defects
//!   and estimates the nontrivial spectrum.
//! * [`localstats`] computes exact distributions of rooted ball classes and
//!   compares them with balls of a few Cayley graphs.
//! * [`decompose`] splits a regular graph into classes, repairs degrees and
//!   certifies each class as an expander.
//! * [`covers`] builds `Z_p` voltage covers and samples walk and cycle sums.

pub mod covers;
pub mod decompose;
pub mod graph;
pub mod localstats;
pub mod markov;
pub mod rng;

pub use graph::{GraphError, MultiGraph, VertexSet};
