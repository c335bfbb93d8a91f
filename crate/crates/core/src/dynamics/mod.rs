//! Coupled envelope dynamics of the beam, the probe and the two condensates.
//!
//! In simulation units the beam envelope (carrier `2 k0`) obeys
//! `i psi_t = (k^2/2 + K k) psi - Omega_C E` with `K = 2 k0 x0`, the probe
//! envelope (carrier `3 k0`) obeys `i E_t = -i c E_x + (S + delta) E - conj(Omega_C) psi`,
//! and the condensates are either frozen or follow [`condensate::CondensateStepper`].
//! The atomic light shift is uniform and shared by both fields in the
//! two-photon resonance frame, so it only adds a global phase and is not
//! applied.

pub mod condensate;
pub mod coupling;
pub mod integrator;
pub mod optics;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use condensate::{CondensateStepper, CONDENSATE_SUPPORT};
pub use coupling::{build_coupling, calibrate_control, Calibration, CouplingProfile};
pub use integrator::{Integrator, Snapshot, Trajectory};
pub use optics::{QuasiStatic, ReducedLight};

use crate::error::{Error, Result};
use crate::grid::{gaussian_envelope, ComplexField, FieldKind, Grid1D};
use crate::units::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpticalSolver {
    #[default]
    Quasistatic,
    Dynamic,
}

impl std::str::FromStr for OpticalSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quasistatic" | "quasi-static" => Ok(OpticalSolver::Quasistatic),
            "dynamic" | "reduced-c" => Ok(OpticalSolver::Dynamic),
            other => Err(Error::Config(format!("unknown optical solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondensateMode {
    #[default]
    Frozen,
    Dynamic,
}

/// What happens to light reaching the domain edge in the dynamic solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpticalBoundary {
    /// Light leaves and is counted as outflow.
    #[default]
    Open,
    /// Light re-enters on the other side; the domain is closed.
    Periodic,
}

/// Default reduction of the speed of light in the dynamic solver.
pub const DEFAULT_REDUCED_C_FACTOR: f64 = 1e-8;
/// Default time steps per Rabi period.
pub const DEFAULT_STEPS_PER_RABI: f64 = 400.0;
/// Bound on the coupling phase accumulated per step.
pub const COUPLING_STEP_LIMIT: f64 = 0.05;
/// Beam amplitude at the domain edge, relative to its peak, that aborts a run.
pub const DEFAULT_GUARD_RATIO: f64 = 1e-6;

/// Integrator settings, simulation units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub optical_solver: OpticalSolver,
    pub reduced_c_factor: f64,
    pub condensate_mode: CondensateMode,
    pub snapshot_times: Vec<f64>,
    pub optical_boundary: OpticalBoundary,
    pub guard_ratio: f64,
    /// Steps between boundary and finiteness checks.
    pub guard_interval: usize,
    /// Occupation of the tracked mode; feeds the condensate correlator.
    pub mode_occupation: f64,
}

impl IntegratorConfig {
    pub fn for_sim(sim: &SimConfig) -> IntegratorConfig {
        IntegratorConfig {
            dt: sim.rabi_period / DEFAULT_STEPS_PER_RABI,
            optical_solver: OpticalSolver::Quasistatic,
            reduced_c_factor: DEFAULT_REDUCED_C_FACTOR,
            condensate_mode: CondensateMode::Frozen,
            snapshot_times: Vec::new(),
            optical_boundary: OpticalBoundary::Open,
            guard_ratio: DEFAULT_GUARD_RATIO,
            guard_interval: 64,
            mode_occupation: sim.beam_atoms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter { name: "integrator.dt", reason: format!("must be positive, got {}", self.dt) });
        }
        if !(self.reduced_c_factor > 0.0 && self.reduced_c_factor <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "integrator.reduced_c_factor",
                reason: format!("must lie in (0, 1], got {}", self.reduced_c_factor),
            });
        }
        if self.guard_interval == 0 {
            return Err(Error::InvalidParameter { name: "integrator.guard_interval", reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

/// Beam, probe and condensate fields at one instant. All share one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub psi: ComplexField,
    /// Probe envelope. With the dynamic solver this is the slowed-light field,
    /// whose squared norm counts photons.
    pub e: ComplexField,
    pub phi_send: ComplexField,
    pub phi_recv: ComplexField,
    pub t: f64,
}

impl SystemState {
    pub fn grid(&self) -> &Grid1D {
        &self.psi.grid
    }

    /// `int |psi|^2 + int |E|^2`.
    pub fn quanta(&self) -> f64 {
        self.psi.norm_sqr() + self.e.norm_sqr()
    }
}

/// Harmonic-oscillator ground state of `atoms` atoms centred at `center`,
/// cut to the condensate support and renormalized on the grid.
pub fn condensate_ground_state(grid: &Grid1D, center: f64, atoms: f64) -> ComplexField {
    let mut phi = ComplexField::from_fn(*grid, 0.0, FieldKind::Condensate, |x| {
        let u = x - center;
        if u.abs() <= CONDENSATE_SUPPORT {
            Complex64::new(PI.powf(-0.25) * (-0.5 * u * u).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let norm = phi.norm();
    if norm > 0.0 {
        let scale = atoms.sqrt() / norm;
        phi.values.iter_mut().for_each(|v| *v *= scale);
    }
    phi
}

/// Initial state: ground-state condensates split per the number imbalance,
/// the input pulse before the sender and an empty probe.
pub fn build_initial_state(grid: &Grid1D, sim: &SimConfig) -> Result<SystemState> {
    if sim.x_recv - sim.x_send < 2.0 * CONDENSATE_SUPPORT {
        return Err(Error::InvalidParameter {
            name: "trap.x_recv",
            reason: format!(
                "stations {:.3} x0 apart; condensate supports of +-{CONDENSATE_SUPPORT} x0 overlap",
                sim.x_recv - sim.x_send
            ),
        });
    }
    for (name, x) in [("trap.x_send", sim.x_send), ("trap.x_recv", sim.x_recv)] {
        if x - CONDENSATE_SUPPORT < grid.x_min || x + CONDENSATE_SUPPORT >= grid.x_max {
            return Err(Error::InvalidParameter { name, reason: "station support extends past the grid".into() });
        }
    }
    let psi = gaussian_envelope(
        grid,
        sim.pulse_center,
        sim.pulse_width,
        sim.beam_atoms.sqrt(),
        sim.atom_carrier,
        FieldKind::AtomicBeam,
    )?;
    Ok(SystemState {
        psi,
        e: ComplexField::zeros(*grid, sim.probe_carrier, FieldKind::OpticalProbe),
        phi_send: condensate_ground_state(grid, sim.x_send, sim.atoms_send),
        phi_recv: condensate_ground_state(grid, sim.x_recv, sim.atoms_recv),
        t: 0.0,
    })
}

/// Adiabatic excited-state number
/// `int |psi|^2 (Omega23/Delta)^2 + g13^2 |E|^2 |phi|^2 / Delta^2 dx`,
/// with the sender's control amplitude for the beam term.
pub fn excited_population(state: &SystemState, sim: &SimConfig) -> f64 {
    let dx = state.grid().dx();
    let beam = state.psi.norm_sqr() * sim.mixing_send * sim.mixing_send;
    let probe: f64 = state
        .e
        .values
        .iter()
        .zip(state.phi_send.values.iter().zip(&state.phi_recv.values))
        .map(|(e, (a, b))| e.norm_sqr() * (a.norm_sqr() + b.norm_sqr()))
        .sum::<f64>()
        * dx;
    beam + probe * sim.probe_shift_coeff / sim.delta
}

/// Excited-state number restricted to the transfer regions: the beam term at
/// each station is weighted by that condensate's density profile normalized to
/// its peak, and uses that station's control amplitude.
pub fn excited_population_in_stations(state: &SystemState, sim: &SimConfig) -> f64 {
    excited_in_stations_scaled(state, &state.e.values, sim)
}

/// As [`excited_population_in_stations`] with an explicit physical probe field.
pub(crate) fn excited_in_stations_scaled(state: &SystemState, probe: &[Complex64], sim: &SimConfig) -> f64 {
    let dx = state.grid().dx();
    let mut total = 0.0;
    for (phi, mixing) in [(&state.phi_send, sim.mixing_send), (&state.phi_recv, sim.mixing_recv)] {
        let peak = phi.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        let (mut weighted, mut light) = (0.0, 0.0);
        for ((p, e), f) in state.psi.values.iter().zip(probe).zip(&phi.values) {
            let density = f.norm_sqr();
            weighted += p.norm_sqr() * density;
            light += e.norm_sqr() * density;
        }
        total += (weighted / peak * mixing * mixing + light * sim.probe_shift_coeff / sim.delta) * dx;
    }
    total
}
