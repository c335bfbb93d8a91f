//! Simulator of quantum-state transfer from an atom-laser pulse to a probe
//! light field and back to a second atom-laser pulse.
//!
//! The crate covers parameter handling and unit conversion ([`units`]), grids
//! and spectral primitives ([`grid`]), the coupled field dynamics
//! ([`dynamics`]), Gaussian transfer metrics ([`metrics`]), loss budgets
//! ([`losses`]) and the scenario harness ([`scenario`], [`output`]).

pub mod config;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod losses;
pub mod metrics;
pub mod output;
pub mod scenario;
pub mod snapshot;
pub mod units;

pub use dynamics::{
    build_coupling, build_initial_state, calibrate_control, excited_population, CondensateMode,
    CouplingProfile, Integrator, IntegratorConfig, OpticalSolver, SystemState, Trajectory,
};
pub use error::{Error, Result};
pub use grid::{gaussian_envelope, inner_product, translate_field, ComplexField, FieldKind, Grid1D, SpectralWorkspace};

pub use metrics::{
    beam_splitter_reduce, gaussian_oracle, project_translated_template, track_mode, transfer_metrics, GaussianMode,
    ModeFunction, TransferResult,
};
pub use units::{nondimensionalize, AtomSpecies, PhysicalConfig, PhysicalConstants, SimConfig, SimScaling};
