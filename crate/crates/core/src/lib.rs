//! Solvers for the lower-bound and lower-weak-upper-bound energy problems on
//! mean-payoff games.

pub mod batch;
pub mod cli;
pub mod game;
pub mod gen;
pub mod io;
pub mod kasi;
pub mod oracle;
pub mod vi;

pub use game::{Edge, Energy, EnergyVector, GameGraph, Owner, PositionalStrategy, Potential, PotentialVector, VertexId};
