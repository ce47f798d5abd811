//! Random looptrees and pointed bipartite maps coded by Łukasiewicz paths,
//! with the metric estimators used to measure their fractal geometry.

pub mod container;
pub mod dimension;
pub mod error;
pub mod experiment;
pub mod labels;
pub mod levy;
pub mod looptree;
pub mod maps;
pub mod path_codec;
mod quadrature;
pub mod rng;
pub mod spine;

pub use error::{Error, Result};
