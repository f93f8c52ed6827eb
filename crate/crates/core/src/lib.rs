//! Micromaser quantum battery charged by a stream of qubits.
//!
//! The cavity field is a truncated harmonic oscillator. Each qubit collides
//! once through a resonant Jaynes-Cummings unitary and is then traced out;
//! between collisions the cavity may leak to a thermal bath. The crate
//! provides the state types ([`hilbert`]), the collision channel
//! ([`collision`]), the Lindblad damping ([`dissipation`]), battery
//! observables ([`observables`]), closed-form steady states ([`analytics`])
//! and the protocol driver ([`runner`]).

pub mod analytics;
pub mod collision;
pub mod dissipation;
mod error;
pub mod hilbert;
pub mod observables;
pub mod runner;

pub use analytics::{
    cotangent_state, fine_tuned_theta, incoherent_purity_closed_form, incoherent_steady_purity,
    incoherent_steady_state, trapping_condition, TrappingSpec,
};
pub use collision::{apply_collision, apply_collision_diagonal, apply_collision_operator_form, jc_collision_map, CollisionMap};
pub use dissipation::{apply_damping, build_lindblad_bands, thermal_state, DampingPropagator, LindbladBands};
pub use error::{Error, Result};
pub use hilbert::{
    build_qubit_state, resize, vacuum_state, validate, DensityMatrix, ModelParams, Populations, QubitState,
    ValidityReport,
};
pub use observables::{energy, ergotropy, fano, purity, ObservableSet};
pub use runner::{
    classify_outcome, default_n_max, run_protocol, Classification, CollisionRange, RunOptions, RunOutcome,
    TrajectoryRecord,
};
