//! Argumentative exchanges between agents holding private quantitative
//! bipolar argumentation frameworks.

pub mod graph;
pub mod semantics;
pub mod exchange;
pub mod fixtures;
pub mod behaviours;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod scenario;
pub mod analysis;
pub mod simulation;
pub mod dot;
