//! Quantum Turing machine simulator with a halt qubit.
//!
//! Machines are read from a small line-oriented format ([`machine`]),
//! evolved as sparse superpositions of configurations ([`evolution`]), and
//! observed through projective measurements of the halt flag and the tape
//! ([`measurement`]). [`analysis`] holds an index-based oracle on finite
//! truncations used to check the identities that make monitoring the halt
//! flag harmless.

pub mod analysis;
pub mod cli;
pub mod configuration;
pub mod corpus;
pub mod error;
pub mod evolution;
pub mod fixtures;
pub mod machine;
pub mod measurement;
pub mod state_vector;
pub mod tape;

pub use configuration::Configuration;
pub use error::{Error, Result};
pub use machine::{parse_machine, MachineSpec};
pub use state_vector::StateVector;
pub use tape::{Label, Symbol, Tape};
