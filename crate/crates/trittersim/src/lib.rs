//! Simulation and analysis toolkit for demultiplexed multi-photon
//! interference in reconfigurable linear-optical circuits.
//!
//! The crate models the full chain of a three-photon interference
//! experiment driven by a pulsed single-photon source:
//!
//! * [`circuit`] — directional couplers, phase shifters, their serial
//!   composition into a reconfigurable tritter, and the ideal Fourier
//!   tritter reference;
//! * [`interference`] — n-photon output distributions for partially
//!   distinguishable photons (Gram-matrix description), the
//!   laser-contamination input mixture, and an independent brute-force
//!   oracle;
//! * [`demux`] — time-to-space demultiplexer waveforms, active/passive
//!   conversion rates, and active efficiency;
//! * [`reconstruct`] — transfer-matrix reconstruction from single- and
//!   two-input intensity data, visibility matrices, and circuit fidelity;
//! * [`detection`] — pseudo number-resolving detector trees, Monte Carlo
//!   coincidence counting, and efficiency-corrected distribution
//!   estimation;
//! * [`budget`] — end-to-end rate and loss accounting.
//!
//! All computations are deterministic: every stochastic routine takes an
//! explicit seed. The `trittersim` binary exposes the toolkit as batch
//! subcommands driven by a TOML config; see the repository README.

pub mod budget;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod demux;
pub mod detection;
pub mod error;
pub mod fock;
pub mod interference;
pub mod reconstruct;

pub use circuit::{CircuitUnitary, TritterLayout, C64};
pub use error::{Error, Result};
pub use fock::OccupationPattern;
pub use interference::{GramMatrix, OutputDistribution, PhotonEnsemble, SourceModel};
