//! Spontaneous-emission loss per station and the phase-diffusion coherence
//! length of the propagating pulse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::units::{
    oscillator_length, spontaneous_rate, AtomSpecies, PhysicalConfig, PhysicalConstants, ADIABATIC_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossForm {
    /// Every excited atom stays excited for a quarter Rabi period.
    Bound,
    /// Time integral of the simulated excited population.
    Integral,
}

/// Spontaneous-emission budget. Per-station figures refer to the sender;
/// the integral form averages both stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub form: LossForm,
    /// s^-1
    pub gamma_sp: f64,
    /// Mean excited-state population while the pulse is in a station.
    pub n3_bar: f64,
    /// Atoms lost per station.
    pub l_sp: f64,
    /// `l_sp / n0`
    pub eta_loss: f64,
    pub eta_loss_recv: f64,
    /// `(1 - eta_loss)(1 - eta_loss_recv)`
    pub efficiency: f64,
}

fn control_mixing(config: &PhysicalConfig) -> Result<(f64, f64)> {
    let omega23 = match config.optical.omega23 {
        Some(o) => o,
        None => crate::dynamics::calibrate_control(config)?.omega23,
    };
    let base = (omega23 / config.optical.delta).abs();
    let (send, recv) = (base * config.optical.rabi_ratio_send, base * config.optical.rabi_ratio_recv);
    if send.max(recv) >= ADIABATIC_LIMIT {
        return Err(Error::Adiabaticity { ratio: send.max(recv), limit: ADIABATIC_LIMIT });
    }
    Ok((send, recv))
}

fn station_gamma(config: &PhysicalConfig) -> f64 {
    let k = config.probe_frequency() / config.constants.c;
    spontaneous_rate(&config.species, k)
}

/// `L_sp = gamma_sp N3 T_Rabi / 4` with `N3 = n0 (Omega23/Delta)^2`.
pub fn spontaneous_budget(config: &PhysicalConfig) -> Result<LossBudget> {
    config.validate()?;
    let (send, recv) = control_mixing(config)?;
    let gamma = station_gamma(config);
    let dwell = config.rabi_period() / 4.0;
    let n0 = config.beam.atoms;
    let n3 = n0 * send * send;
    let l_sp = gamma * n3 * dwell;
    let eta_send = (l_sp / n0).min(1.0);
    let eta_recv = (gamma * recv * recv * dwell).min(1.0);
    Ok(LossBudget {
        form: LossForm::Bound,
        gamma_sp: gamma,
        n3_bar: n3,
        l_sp,
        eta_loss: eta_send,
        eta_loss_recv: eta_recv,
        efficiency: (1.0 - eta_send) * (1.0 - eta_recv),
    })
}

/// Loss from the excited population integrated along a simulated run.
/// `run_norm` is the initial `int |psi|^2` of that run; the result is scaled
/// to `n0` atoms and split evenly between the stations.
pub fn spontaneous_budget_from_trajectory(
    config: &PhysicalConfig,
    trajectory: &Trajectory,
    run_norm: f64,
    t0: f64,
) -> Result<LossBudget> {
    if !(run_norm > 0.0) {
        return Err(Error::InvalidParameter { name: "run_norm", reason: "must be positive".into() });
    }
    let gamma = station_gamma(config);
    let n0 = config.beam.atoms;
    let scale = n0 / run_norm;
    let total = gamma * trajectory.excited_integral * t0 * scale;
    let l_sp = 0.5 * total;
    let eta = (l_sp / n0).min(1.0);
    let dwell = config.rabi_period() / 4.0;
    Ok(LossBudget {
        form: LossForm::Integral,
        gamma_sp: gamma,
        n3_bar: if gamma > 0.0 { l_sp / (gamma * dwell) } else { 0.0 },
        l_sp,
        eta_loss: eta,
        eta_loss_recv: eta,
        efficiency: (1.0 - eta) * (1.0 - eta),
    })
}

/// Which number fluctuation drives the phase diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionModel {
    /// `R = N0 (dmu/dN) / hbar`: the phase spread of a pulse carved from a
    /// condensate whose number is known to within its own size.
    #[default]
    ChemicalPotential,
    /// `R = sqrt(N0) (dmu/dN) / hbar`: Poissonian number fluctuations.
    PoissonNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEstimate {
    pub species: String,
    /// s; infinite without interactions.
    pub t_coh: f64,
    /// m
    pub travel_distance: f64,
    /// Phase diffusion rate, s^-1.
    pub rate: f64,
    /// Thomas-Fermi chemical potential, J.
    pub chemical_potential: f64,
    pub model: DiffusionModel,
}

/// Harmonic-trap Thomas-Fermi chemical potential
/// `mu = (hbar w / 2) (15 N a / a_ho)^(2/5)` for an isotropic trap.
pub fn thomas_fermi_mu(species: &AtomSpecies, atoms: f64, omega: f64, scattering_length: f64) -> f64 {
    let hbar = PhysicalConstants::CODATA_2018.hbar;
    let a_ho = oscillator_length(species, omega);
    0.5 * hbar * omega * (15.0 * atoms * scattering_length / a_ho).powf(0.4)
}

/// Time for the single-mode phase variance `(R t)^2` to reach one radian
/// squared, and the distance covered at `velocity` (the species' Raman
/// velocity when `None`).
pub fn phase_diffusion_estimate(
    species: &AtomSpecies,
    atoms: f64,
    omega: f64,
    velocity: Option<f64>,
    model: DiffusionModel,
) -> Result<CoherenceEstimate> {
    let a = species.scattering_length.ok_or_else(|| Error::InvalidParameter {
        name: "species.scattering_length",
        reason: format!("{} has no scattering length", species.name),
    })?;
    let v = velocity.or(species.raman_velocity).ok_or_else(|| Error::InvalidParameter {
        name: "species.raman_velocity",
        reason: format!("{} has no beam velocity", species.name),
    })?;
    if !(atoms > 0.0 && omega > 0.0 && v > 0.0) {
        return Err(Error::InvalidParameter { name: "atoms", reason: "atoms, trap frequency and velocity must be positive".into() });
    }
    let hbar = PhysicalConstants::CODATA_2018.hbar;
    let mu = thomas_fermi_mu(species, atoms, omega, a);
    let dmu_dn = 0.4 * mu / atoms;
    let spread = match model {
        DiffusionModel::ChemicalPotential => atoms,
        DiffusionModel::PoissonNumber => atoms.sqrt(),
    };
    let rate = spread * dmu_dn / hbar;
    let t_coh = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
    Ok(CoherenceEstimate {
        species: species.name.clone(),
        t_coh,
        travel_distance: v * t_coh,
        rate,
        chemical_potential: mu,
        model,
    })
}

/// Spontaneous rate of a D-line natural width `gamma / 2 pi` in Hz, for reference.
pub fn linewidth_hz(gamma: f64) -> f64 {
    gamma / (2.0 * PI)
}
