//! Seeded generator of attributed multiplex social networks.
//!
//! Agents are sampled from an attribute Bayesian network, linked by
//! homophily rules expressed as matching Bayesian networks and by triad
//! closure rules, then exported with error and graph statistics.

pub mod bn;
pub mod export;
pub mod inference;
pub mod matching;
pub mod metrics;
pub mod pipeline;
pub mod plan;
pub mod population;
pub mod rng;
pub mod sampling;
pub mod transitivity;
