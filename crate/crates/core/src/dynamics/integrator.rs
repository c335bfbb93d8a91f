//! Strang-split time stepping of the coupled system.

use num_complex::Complex64;

use super::coupling::{build_coupling, CouplingProfile};
use super::optics::{QuasiStatic, ReducedLight};
use super::{
    excited_in_stations_scaled, CondensateMode, CondensateStepper, IntegratorConfig, OpticalSolver,
    SystemState, COUPLING_STEP_LIMIT,
};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, SpectralWorkspace};
use crate::units::SimConfig;

/// Cells at each domain edge watched by the boundary guard.
const GUARD_CELLS: usize = 16;

#[derive(Debug, Clone)]
enum Optics {
    Quasi(QuasiStatic),
    Reduced(ReducedLight),
}

/// A state captured during [`Integrator::evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: SystemState,
    /// Quanta that have left through the right boundary so far.
    pub outflow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub dt: f64,
    /// Cumulative outflow at the end of the run.
    pub outflow: f64,
    /// Cumulative `int N3 dt` inside the transfer regions.
    pub excited_integral: f64,
}

/// Owns everything a run needs besides the state itself: spectral plans,
/// kinetic phases, the optical solver and the flux ledger.
#[derive(Debug)]
pub struct Integrator {
    grid: Grid1D,
    sim: SimConfig,
    config: IntegratorConfig,
    ws: SpectralWorkspace,
    dt: f64,
    kin_half: Vec<Complex64>,
    kin_full: Vec<Complex64>,
    coupling: CouplingProfile,
    optics: Optics,
    condensate: Option<CondensateStepper>,
    probe: Vec<Complex64>,
    outflow: f64,
    excited_integral: f64,
}

impl Integrator {
    pub fn new(sim: &SimConfig, config: &IntegratorConfig, state: &SystemState) -> Result<Integrator> {
        config.validate()?;
        let grid = *state.grid();
        let coupling = build_coupling(&state.phi_send, &state.phi_recv, sim)?;
        let optics = Self::make_optics(&grid, sim, config, &coupling, config.dt, &state.e.values);
        let mut it = Integrator {
            grid,
            sim: sim.clone(),
            config: config.clone(),
            ws: SpectralWorkspace::new(grid.n),
            dt: config.dt,
            kin_half: Vec::new(),
            kin_full: Vec::new(),
            coupling,
            optics,
            condensate: None,
            probe: vec![Complex64::new(0.0, 0.0); grid.n],
            outflow: 0.0,
            excited_integral: 0.0,
        };
        it.set_dt(config.dt, state)?;
        Ok(it)
    }

    fn make_optics(
        grid: &Grid1D,
        sim: &SimConfig,
        config: &IntegratorConfig,
        coupling: &CouplingProfile,
        dt: f64,
        e: &[Complex64],
    ) -> Optics {
        match config.optical_solver {
            OpticalSolver::Quasistatic => Optics::Quasi(QuasiStatic::new(grid, coupling, sim.light_speed)),
            OpticalSolver::Dynamic => Optics::Reduced(ReducedLight::new(
                grid,
                coupling,
                sim.light_speed,
                config.reduced_c_factor,
                dt,
                config.optical_boundary,
                e,
            )),
        }
    }

    fn set_dt(&mut self, dt: f64, state: &SystemState) -> Result<()> {
        let k_carrier = self.sim.atom_carrier;
        let phases = |tau: f64| -> Vec<Complex64> {
            self.grid
                .ks()
                .map(|k| Complex64::from_polar(1.0, -(0.5 * k * k + k_carrier * k) * tau))
                .collect()
        };
        self.kin_half = phases(0.5 * dt);
        self.kin_full = phases(dt);
        if let Optics::Reduced(r) = &self.optics {
            let mut e = vec![Complex64::new(0.0, 0.0); self.grid.n];
            r.field(&mut e);
            self.optics = Self::make_optics(&self.grid, &self.sim, &self.config, &self.coupling, dt, &e);
        }
        self.condensate = match self.config.condensate_mode {
            CondensateMode::Frozen => None,
            CondensateMode::Dynamic => {
                let occupation = self.config.mode_occupation / state.psi.norm_sqr().max(f64::MIN_POSITIVE);
                let mut c = CondensateStepper::new(
                    &self.grid,
                    dt,
                    [self.sim.x_send, self.sim.x_recv],
                    [self.sim.coupling_send, self.sim.coupling_recv],
                    occupation,
                    self.sim.probe_shift_coeff,
                );
                self.fill_probe(&state.psi.values);
                c.prime(&state.psi.values, &self.probe);
                Some(c)
            }
        };
        self.dt = dt;
        let per_step = self.coupling_per_step();
        if per_step >= COUPLING_STEP_LIMIT {
            return Err(Error::InvalidParameter {
                name: "integrator.dt",
                reason: format!("coupling advances {per_step:.3} rad per step; the limit is {COUPLING_STEP_LIMIT}"),
            });
        }
        Ok(())
    }

    /// Coupling phase per step: the largest decay rate times `dt` for the
    /// quasi-static operator, the largest rotation per substep otherwise.
    pub fn coupling_per_step(&self) -> f64 {
        match &self.optics {
            Optics::Quasi(q) => q.rate_scale() * self.dt,
            Optics::Reduced(r) => r.rotation_per_substep(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coupling(&self) -> &CouplingProfile {
        &self.coupling
    }

    /// Quanta that have left through the right edge since construction.
    pub fn outflow(&self) -> f64 {
        self.outflow
    }

    pub fn excited_integral(&self) -> f64 {
        self.excited_integral
    }

    /// Speed of light actually used, simulation units.
    pub fn light_speed(&self) -> f64 {
        match &self.optics {
            Optics::Quasi(_) => self.sim.light_speed,
            Optics::Reduced(r) => r.light_speed(),
        }
    }

    /// Physical probe field for the current beam into `self.probe`.
    fn fill_probe(&mut self, psi: &[Complex64]) {
        match &self.optics {
            Optics::Quasi(q) => q.field(psi, &mut self.probe),
            Optics::Reduced(r) => {
                r.field(&mut self.probe);
                let s = r.factor().sqrt();
                self.probe.iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    /// Writes the stored probe representation into `state.e`.
    pub fn sync_probe(&self, state: &mut SystemState) {
        match &self.optics {
            Optics::Quasi(q) => q.field(&state.psi.values, &mut state.e.values),
            Optics::Reduced(r) => r.field(&mut state.e.values),
        }
    }

    fn kinetic(&mut self, psi: &mut [Complex64], full: bool) {
        self.ws.forward(psi);
        let phases = if full { &self.kin_full } else { &self.kin_half };
        psi.iter_mut().zip(phases).for_each(|(p, k)| *p *= k);
        self.ws.inverse(psi);
    }

    fn couple(&mut self, state: &mut SystemState) {
        let dt = self.dt;
        self.outflow += match &mut self.optics {
            Optics::Quasi(q) => q.advance(&mut state.psi.values, dt),
            Optics::Reduced(r) => r.advance(&mut state.psi.values),
        };
        if let Some(mut cond) = self.condensate.take() {
            self.fill_probe(&state.psi.values);
            cond.step(
                [&mut state.phi_send, &mut state.phi_recv],
                &state.psi.values,
                &self.probe,
                &mut self.ws,
            );
            self.condensate = Some(cond);
            self.coupling = build_coupling(&state.phi_send, &state.phi_recv, &self.sim)
                .expect("condensates share the grid");
            match &mut self.optics {
                Optics::Quasi(q) => q.update(&self.coupling),
                Optics::Reduced(r) => r.update(&self.coupling),
            }
        }
    }

    fn accumulate_excited(&mut self, state: &SystemState) {
        self.fill_probe(&state.psi.values);
        let n3 = excited_in_stations_scaled(state, &self.probe, &self.sim);
        self.excited_integral += n3 * self.dt;
    }

    /// One full Strang step: half kinetic, coupling and transport over `dt`,
    /// half kinetic. The probe in `state.e` is refreshed.
    pub fn step(&mut self, state: &mut SystemState) -> Result<()> {
        let mut psi = std::mem::take(&mut state.psi.values);
        self.kinetic(&mut psi, false);
        state.psi.values = psi;
        self.couple(state);
        self.accumulate_excited(state);
        let mut psi = std::mem::take(&mut state.psi.values);
        self.kinetic(&mut psi, false);
        state.psi.values = psi;
        state.t += self.dt;
        self.sync_probe(state);
        self.guard(state)
    }

    /// Integrates to `t_final`, capturing the configured snapshot times that
    /// fall in `[state.t, t_final]` (at the nearest step). The step is
    /// adjusted so a whole number of steps fits; consecutive kinetic half
    /// steps are merged between snapshots.
    pub fn evolve(&mut self, state: &mut SystemState, t_final: f64) -> Result<Trajectory> {
        let t0 = state.t;
        let span = t_final - t0;
        if span < -1e-12 * t_final.abs().max(1.0) {
            return Err(Error::InvalidParameter {
                name: "t_final",
                reason: format!("{t_final} lies before the current time {t0}"),
            });
        }
        let raw = span / self.config.dt;
        let steps = if (raw - raw.round()).abs() < 1e-9 * raw.max(1.0) {
            raw.round() as usize
        } else {
            raw.ceil() as usize
        };
        let mut trajectory = Trajectory {
            snapshots: Vec::new(),
            steps,
            dt: self.dt,
            outflow: self.outflow,
            excited_integral: self.excited_integral,
        };
        let mut wanted: Vec<usize> = self
            .config
            .snapshot_times
            .iter()
            .filter(|&&ts| ts >= t0 - 1e-12 && ts <= t_final + 1e-12)
            .map(|&ts| if steps == 0 { 0 } else { ((ts - t0) / span * steps as f64).round() as usize })
            .collect();
        wanted.sort_unstable();
        wanted.dedup();
        if steps == 0 {
            if !wanted.is_empty() {
                self.sync_probe(state);
                trajectory.snapshots.push(Snapshot { state: state.clone(), outflow: self.outflow });
            }
            return Ok(trajectory);
        }
        let h = span / steps as f64;
        if h != self.dt {
            self.set_dt(h, state)?;
        }
        trajectory.dt = h;
        let merge = self.condensate.is_none();
        if wanted.first() == Some(&0) {
            self.sync_probe(state);
            trajectory.snapshots.push(Snapshot { state: state.clone(), outflow: self.outflow });
        }
        let mut psi = std::mem::take(&mut state.psi.values);
        self.kinetic(&mut psi, false);
        state.psi.values = psi;
        for i in 1..=steps {
            self.couple(state);
            self.accumulate_excited(state);
            let capture = wanted.binary_search(&i).is_ok();
            let mut psi = std::mem::take(&mut state.psi.values);
            if i == steps || capture || !merge {
                self.kinetic(&mut psi, false);
                state.psi.values = psi;
                state.t = t0 + h * i as f64;
                if capture {
                    self.sync_probe(state);
                    trajectory.snapshots.push(Snapshot { state: state.clone(), outflow: self.outflow });
                }
                if i < steps {
                    let mut psi = std::mem::take(&mut state.psi.values);
                    self.kinetic(&mut psi, false);
                    state.psi.values = psi;
                }
            } else {
                self.kinetic(&mut psi, true);
                state.psi.values = psi;
            }
            if i % self.config.guard_interval == 0 {
                self.guard(state)?;
            }
        }
        state.t = t_final;
        self.sync_probe(state);
        self.guard(state)?;
        trajectory.outflow = self.outflow;
        trajectory.excited_integral = self.excited_integral;
        Ok(trajectory)
    }

    fn guard(&self, state: &SystemState) -> Result<()> {
        let psi = &state.psi.values;
        let mut peak = 0.0f64;
        let mut total = 0.0;
        for v in psi {
            let a = v.norm_sqr();
            total += a;
            peak = peak.max(a);
        }
        if !total.is_finite() {
            return Err(Error::NonFinite { field: "psi", t: state.t });
        }
        if !state.e.values.iter().map(|v| v.norm_sqr()).sum::<f64>().is_finite() {
            return Err(Error::NonFinite { field: "E", t: state.t });
        }
        if peak == 0.0 {
            return Ok(());
        }
        let n = psi.len();
        let edge = GUARD_CELLS.min(n / 8).max(1);
        let edge_peak = psi[..edge]
            .iter()
            .chain(&psi[n - edge..])
            .map(|v| v.norm_sqr())
            .fold(0.0, f64::max);
        let ratio = (edge_peak / peak).sqrt();
        if ratio > self.config.guard_ratio {
            return Err(Error::BoundaryGuard { field: "psi", t: state.t, ratio });
        }
        Ok(())
    }
}
