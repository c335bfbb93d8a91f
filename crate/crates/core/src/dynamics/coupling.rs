//! Raman coupling profiles and the control-amplitude calibration.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::units::{PhysicalConfig, SimConfig, ADIABATIC_LIMIT};

/// Result of [`calibrate_control`], SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Control Rabi frequency, rad/s.
    pub omega23: f64,
    /// `|Omega23 / Delta|`.
    pub mixing: f64,
    /// Peak of `Omega_C = phi Omega23 g13 / Delta`, rad/s.
    pub omega_c_peak: f64,
    /// Peak rate at which a beam atom crossing the station decays into the
    /// probe continuum, `Omega_C sqrt(v/c)`, rad/s.
    pub effective_rabi_peak: f64,
    /// The two-mode coupling whose quarter cycle lasts `T_Rabi/4`,
    /// `pi / (2 T_Rabi/4)`, rad/s.
    pub two_mode_rabi: f64,
}

/// Chooses `Omega23` so that a beam atom crossing a balanced station is
/// transferred to the probe in one quarter of a Rabi cycle.
///
/// The probe is a propagating continuum, so the transfer is governed by the
/// pulse area `int Omega_C dx / sqrt(v c)`; a value of `pi/2` empties the
/// atomic mode exactly for a slowly varying pulse. With the ground-state
/// condensate `int phi dx = sqrt(N0) (pi x0^2)^(-1/4) sqrt(2 pi) x0`.
pub fn calibrate_control(config: &PhysicalConfig) -> Result<Calibration> {
    let x0 = config.oscillator_length();
    let v = config.beam_velocity();
    let c = config.constants.c;
    let g13 = config.g13();
    let delta = config.optical.delta;
    let n0 = config.trap.atoms_per_site;
    let phi_peak = n0.sqrt() * (PI * x0 * x0).powf(-0.25);
    let phi_area = phi_peak * (2.0 * PI).sqrt() * x0;
    let area = 0.5 * PI * (v * c).sqrt();
    let omega23 = area * delta / (g13 * phi_area);
    let mixing = (omega23 / delta).abs();
    if mixing >= ADIABATIC_LIMIT {
        return Err(Error::Adiabaticity { ratio: mixing, limit: ADIABATIC_LIMIT });
    }
    let omega_c_peak = (omega23 * g13 / delta * phi_peak).abs();
    Ok(Calibration {
        omega23: omega23.abs(),
        mixing,
        omega_c_peak,
        effective_rabi_peak: omega_c_peak * (v / c).sqrt(),
        two_mode_rabi: PI / (2.0 * config.rabi_period() / 4.0),
    })
}

/// Coupling terms of the envelope equations, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    /// `Omega_C(x)` summed over both stations.
    pub omega_c: Vec<Complex64>,
    /// Uniform atomic light shift `-|Omega23|^2/Delta`.
    pub light_shift_atom: f64,
    /// Probe light shift `-|phi|^2 g13^2 / Delta`.
    pub light_shift_probe: Vec<f64>,
    pub detuning_const: f64,
    /// Maximal runs of cells where either condensate is non-zero, in order.
    pub windows: Vec<Range<usize>>,
}

impl CouplingProfile {
    pub fn active_cells(&self) -> usize {
        self.windows.iter().map(|w| w.len()).sum()
    }

    pub fn peak(&self) -> f64 {
        self.omega_c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Builds the coupling from the condensate fields: `Omega_C = kappa_s phi_s`
/// with `kappa_s = Omega23_s g13 / Delta` at each station.
pub fn build_coupling(
    phi_send: &ComplexField,
    phi_recv: &ComplexField,
    sim: &SimConfig,
) -> Result<CouplingProfile> {
    if phi_send.grid != phi_recv.grid {
        return Err(Error::FieldMismatch("condensates live on different grids".into()));
    }
    let n = phi_send.grid.n;
    let mut omega_c = Vec::with_capacity(n);
    let mut light_shift_probe = Vec::with_capacity(n);
    let mut windows = Vec::new();
    let mut open: Option<usize> = None;
    for i in 0..n {
        let (a, b) = (phi_send.values[i], phi_recv.values[i]);
        omega_c.push(a * sim.coupling_send + b * sim.coupling_recv);
        light_shift_probe.push(-(a.norm_sqr() + b.norm_sqr()) * sim.probe_shift_coeff);
        let active = a != Complex64::new(0.0, 0.0) || b != Complex64::new(0.0, 0.0);
        match (active, open) {
            (true, None) => open = Some(i),
            (false, Some(start)) => {
                windows.push(start..i);
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        windows.push(start..n);
    }
    Ok(CouplingProfile {
        omega_c,
        light_shift_atom: sim.light_shift_atom,
        light_shift_probe,
        detuning_const: sim.detuning_const,
        windows,
    })
}
