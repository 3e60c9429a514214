//! Simulator and algorithms for the stochastic matching with commitment
//! problem: edges of a hidden random graph are revealed only by probing,
//! and a probe that finds an edge commits it to the matching.
//!
//! The crate is organized around a probabilistic graph model ([`graph`]),
//! offline matching oracles ([`matching`], [`qtable`]), a constrained
//! sampler over probe orders ([`sampler`]), Monte Carlo estimation of
//! matching membership probabilities ([`estimator`]), the online
//! algorithms themselves ([`algorithms`]), an exact optimal-online dynamic
//! program for small instances ([`dp`]), and a benchmarking harness
//! ([`bench`]).

pub mod algorithms;
pub mod bench;
pub mod dp;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod matching;
pub mod qtable;
pub mod rng;
pub mod sampler;

pub use error::Error;
pub use graph::{CandidateState, Matching, Pair, ProbGraph, ProbeOracle, RealizedGraph};

pub type Result<T> = std::result::Result<T, Error>;
