//! Randomized Hamilton cycle engines for dense graphs and digraphs that are
//! augmented with random edges, plus instance generators, exact oracles for
//! small inputs and a Monte Carlo harness.

pub mod directed;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod io;
pub mod merge;
pub mod oracles;
pub mod rotation;
pub mod sample;

pub use error::{Error, Result};
pub use graph::{Digraph, Edge, UndirectedGraph, Vertex};
