//! Simulation and statistics for a two-node entanglement link: a single
//! atom in a cavity emitting polarization-entangled photons, one of which is
//! stored in a BEC quantum memory and later retrieved.
//!
//! - [`quantum`]: two-qubit states, fidelity, correlations, partial transpose
//! - [`protocol`]: emission/storage/readout stages, Larmor phase, dephasing
//! - [`event_sim`]: Monte Carlo coincidence counts, g²(0), atom loss
//! - [`estimation`]: fidelity witness, confidence, tomography, decay fits
//! - [`budget`]: closed-form rate budget, acquisition time, EIT bandwidth

pub mod budget;
pub mod error;
pub mod estimation;
pub mod event_sim;
pub mod protocol;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};
