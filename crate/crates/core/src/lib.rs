//! Finite element tools for brush domains and their graph-based limit.

pub mod config;
pub mod density;
pub mod direct;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod graph;
pub mod harness;
pub mod limit;
pub mod mesh;
pub mod source;
pub mod unfolding;

pub use error::*;
