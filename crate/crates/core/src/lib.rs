//! Threshold-3 bootstrap percolation on Z^2.
//!
//! A closed site (state 0) becomes open (state 1) once at least three of its four
//! neighbors are open; open sites never close. The crate provides the dynamics on finite
//! windows, the structural facts that govern which closed sites survive, crossing and
//! connectivity observables, and Monte Carlo estimators comparing the initial Bernoulli
//! field with its bootstrapped evolutions.

pub mod checks;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod montecarlo;
pub mod observables;
pub mod rng;
pub mod structure;

pub use dynamics::{evolve, fixed_point, step, EvolutionResult, FlipTime, Rule};
pub use error::{Error, Result};
pub use lattice::{
    graph_distance, sample_configuration, Adjacency, BoundaryCondition, Configuration, Geometry, Site,
};
