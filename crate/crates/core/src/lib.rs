//! Hybrid classical/quantum pipeline workbench.
//!
//! Circuits for Grover search, Shor period finding and four-node TSP phase
//! estimation are built with [`circuit`], executed on the local statevector
//! backends in [`sim`], and orchestrated as task graphs by [`workflow`].

pub mod circuit;
pub mod grover;
pub mod rng;
pub mod shor;
pub mod sim;
pub mod tsp;
pub mod workflow;

pub use rng::Seed;
