//! Scenario definitions and runners: the single transfer run, parameter
//! sweeps and the loss report.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    build_initial_state, CondensateMode, Integrator, IntegratorConfig, OpticalBoundary, OpticalSolver, Snapshot,
    SystemState, DEFAULT_GUARD_RATIO, DEFAULT_REDUCED_C_FACTOR, DEFAULT_STEPS_PER_RABI,
};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid1D, SpectralWorkspace};
use crate::losses::{
    phase_diffusion_estimate, spontaneous_budget, spontaneous_budget_from_trajectory, CoherenceEstimate,
    DiffusionModel, LossBudget,
};
use crate::metrics::{
    apply_station_loss, beam_splitter_reduce, project_translated_template, transfer_metrics_with, GaussianMode,
    NoiseConvention, TransferResult,
};
use crate::units::{nondimensionalize, AtomSpecies, PhysicalConfig, Quantity, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[default]
    Fig3Transfer,
    SweepRabi,
    SweepDn,
    LossReport,
    Custom,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Fig3Transfer => "fig3-transfer",
            ScenarioKind::SweepRabi => "sweep-rabi",
            ScenarioKind::SweepDn => "sweep-dn",
            ScenarioKind::LossReport => "loss-report",
            ScenarioKind::Custom => "custom",
        }
    }
}

/// Spatial grid, SI lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridSpec {
    /// 4 mm around the stations at 2^15 points.
    pub const REFERENCE: GridSpec = GridSpec { x_min: -1.5e-3, x_max: 2.5e-3, n: 1 << 15 };

    pub fn to_grid(&self, sim: &SimConfig) -> Result<Grid1D> {
        let s = &sim.scaling;
        Grid1D::new(s.to_sim(Quantity::Length, self.x_min), s.to_sim(Quantity::Length, self.x_max), self.n)
    }
}

/// Integrator settings as written in a configuration, SI times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    /// Time step, s. Overrides `steps_per_rabi`.
    pub dt: Option<f64>,
    pub steps_per_rabi: f64,
    pub optical_solver: OpticalSolver,
    pub reduced_c_factor: f64,
    pub condensate_mode: CondensateMode,
    /// Snapshot times, s. `None` picks approach, absorption, transit,
    /// re-emission and the final state.
    pub snapshot_times: Option<Vec<f64>>,
    pub optical_boundary: OpticalBoundary,
    pub guard_ratio: f64,
    pub guard_interval: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            dt: None,
            steps_per_rabi: DEFAULT_STEPS_PER_RABI,
            optical_solver: OpticalSolver::Quasistatic,
            reduced_c_factor: DEFAULT_REDUCED_C_FACTOR,
            condensate_mode: CondensateMode::Frozen,
            snapshot_times: None,
            optical_boundary: OpticalBoundary::Open,
            guard_ratio: DEFAULT_GUARD_RATIO,
            guard_interval: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSpec {
    pub noise_convention: NoiseConvention,
    /// End of the run, s. `None` runs until the output pulse sits six widths
    /// past the receiver.
    pub t_final: Option<f64>,
    /// Half-width of the template search window, m. `None` uses the smaller
    /// of ten pulse widths and 0.45 station separations.
    pub search_half_width: Option<f64>,
    /// Fold the spontaneous-emission bound of both stations into `eta`.
    pub station_loss: bool,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        MetricsSpec { noise_convention: NoiseConvention::Product, t_final: None, search_half_width: None, station_loss: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSpec {
    pub diffusion_model: DiffusionModel,
    /// Include the integral form, which needs a full transfer run.
    pub integral: bool,
    /// Species compared in the coherence estimate.
    pub coherence_species: Vec<String>,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec {
            diffusion_model: DiffusionModel::ChemicalPotential,
            integral: true,
            coherence_species: vec!["Na23".into(), "Rb87".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Both control amplitudes over their calibrated value.
    RabiRatio,
    RabiRatioSend,
    RabiRatioRecv,
    /// `delta/N` at fixed total number and fixed control amplitude.
    NumberImbalance,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::RabiRatio => "rabi-ratio",
            SweepParameter::RabiRatioSend => "rabi-ratio-send",
            SweepParameter::RabiRatioRecv => "rabi-ratio-recv",
            SweepParameter::NumberImbalance => "number-imbalance",
        }
    }

    /// The parameter value of the calibrated run.
    pub fn optimum(&self) -> f64 {
        match self {
            SweepParameter::NumberImbalance => 0.0,
            _ => 1.0,
        }
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rabi-ratio" => Ok(SweepParameter::RabiRatio),
            "rabi-ratio-send" => Ok(SweepParameter::RabiRatioSend),
            "rabi-ratio-recv" => Ok(SweepParameter::RabiRatioRecv),
            "number-imbalance" | "dn" => Ok(SweepParameter::NumberImbalance),
            _ => Err(Error::Config(format!("unknown sweep parameter `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Add the optimum when the grid of points misses it.
    #[serde(default = "default_true")]
    pub include_optimum: bool,
}

fn default_true() -> bool {
    true
}

impl SweepSpec {
    pub fn rabi() -> SweepSpec {
        SweepSpec { parameter: SweepParameter::RabiRatio, min: 0.66, max: 1.33, points: 21, include_optimum: true }
    }

    pub fn number_imbalance() -> SweepSpec {
        SweepSpec { parameter: SweepParameter::NumberImbalance, min: -0.66, max: 0.66, points: 21, include_optimum: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidParameter { name: "sweep.points", reason: "a sweep needs at least two points".into() });
        }
        if !(self.min < self.max) {
            return Err(Error::InvalidParameter {
                name: "sweep.min",
                reason: format!("empty range [{}, {}]", self.min, self.max),
            });
        }
        let ok = match self.parameter {
            SweepParameter::NumberImbalance => self.min > -1.0 && self.max < 1.0,
            _ => self.min >= 0.0 && self.max.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParameter {
                name: "sweep.max",
                reason: format!("[{}, {}] is outside the valid range of {}", self.min, self.max, self.parameter.as_str()),
            });
        }
        Ok(())
    }

    /// Evenly spaced values in increasing order, with the optimum inserted.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        let mut v: Vec<f64> = (0..self.points).map(|i| self.min + step * i as f64).collect();
        let opt = self.parameter.optimum();
        if self.include_optimum && opt >= self.min && opt <= self.max && !v.iter().any(|x| (x - opt).abs() < 1e-12) {
            v.push(opt);
            v.sort_by(f64::total_cmp);
        }
        v
    }

    /// Applies one sweep value to a configuration whose control amplitude is
    /// already pinned.
    pub fn apply(&self, config: &mut PhysicalConfig, value: f64) {
        match self.parameter {
            SweepParameter::RabiRatio => {
                config.optical.rabi_ratio_send = value;
                config.optical.rabi_ratio_recv = value;
            }
            SweepParameter::RabiRatioSend => config.optical.rabi_ratio_send = value,
            SweepParameter::RabiRatioRecv => config.optical.rabi_ratio_recv = value,
            SweepParameter::NumberImbalance => config.trap.number_imbalance = value,
        }
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: ScenarioKind,
    pub physical: PhysicalConfig,
    pub grid: GridSpec,
    pub integrator: IntegratorSpec,
    pub metrics: MetricsSpec,
    pub losses: LossSpec,
    pub sweeps: Vec<SweepSpec>,
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn reference(name: ScenarioKind) -> Scenario {
        let sweeps = match name {
            ScenarioKind::SweepRabi => vec![SweepSpec::rabi()],
            ScenarioKind::SweepDn => vec![SweepSpec::number_imbalance()],
            _ => Vec::new(),
        };
        Scenario {
            name,
            physical: PhysicalConfig::reference(),
            grid: GridSpec::REFERENCE,
            integrator: IntegratorSpec::default(),
            metrics: MetricsSpec::default(),
            losses: LossSpec::default(),
            sweeps,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        if !(self.grid.x_max > self.grid.x_min) {
            return Err(Error::InvalidParameter { name: "grid.x_max", reason: "must exceed grid.x_min".into() });
        }
        if let Some(dt) = self.integrator.dt {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter { name: "integrator.dt", reason: format!("must be positive, got {dt}") });
            }
        }
        if !(self.integrator.steps_per_rabi > 0.0) {
            return Err(Error::InvalidParameter { name: "integrator.steps_per_rabi", reason: "must be positive".into() });
        }
        if let Some(t) = self.metrics.t_final {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter { name: "metrics.t_final", reason: "must be positive".into() });
            }
        }
        for s in &self.sweeps {
            s.validate()?;
        }
        let sim = nondimensionalize(&self.physical)?;
        let grid = self.grid.to_grid(&sim)?;
        GaussianMode::displaced(self.physical.beam.atoms, self.physical.beam.var_x, self.physical.beam.var_y)?;
        build_initial_state(&grid, &sim)?;
        self.integrator_config(&sim)?.validate()
    }

    /// Multiplies the grid points by `mult` and divides the time step by it.
    pub fn with_resolution(mut self, mult: usize) -> Result<Scenario> {
        if mult == 0 || !mult.is_power_of_two() {
            return Err(Error::InvalidParameter { name: "resolution_mult", reason: format!("{mult} is not a power of two") });
        }
        self.grid.n *= mult;
        match &mut self.integrator.dt {
            Some(dt) => *dt /= mult as f64,
            None => self.integrator.steps_per_rabi *= mult as f64,
        }
        Ok(self)
    }

    fn transfer_time(&self, sim: &SimConfig) -> f64 {
        match self.metrics.t_final {
            Some(t) => sim.scaling.to_sim(Quantity::Time, t),
            None => {
                let lead = sim.x_send - sim.pulse_center;
                (lead + 6.0 * sim.pulse_width) / sim.velocity
            }
        }
    }

    fn integrator_config(&self, sim: &SimConfig) -> Result<IntegratorConfig> {
        let spec = &self.integrator;
        let to_sim = |t: f64| sim.scaling.to_sim(Quantity::Time, t);
        let dt = match spec.dt {
            Some(dt) => to_sim(dt),
            None => sim.rabi_period / spec.steps_per_rabi,
        };
        let t_final = self.transfer_time(sim);
        let snapshot_times = match &spec.snapshot_times {
            Some(ts) => ts.iter().map(|&t| to_sim(t)).collect(),
            None => {
                let cross = (sim.x_send - sim.pulse_center) / sim.velocity;
                let w = sim.pulse_width / sim.velocity;
                vec![0.0, cross - w, cross, cross + w, t_final]
            }
        };
        Ok(IntegratorConfig {
            dt,
            optical_solver: spec.optical_solver,
            reduced_c_factor: spec.reduced_c_factor,
            condensate_mode: spec.condensate_mode,
            snapshot_times,
            optical_boundary: spec.optical_boundary,
            guard_ratio: spec.guard_ratio,
            guard_interval: spec.guard_interval,
            mode_occupation: sim.beam_atoms,
        })
    }

    /// Converts to simulation units and builds the initial state.
    pub fn prepare(&self) -> Result<PreparedRun> {
        let sim = nondimensionalize(&self.physical)?;
        let grid = self.grid.to_grid(&sim)?;
        let state = build_initial_state(&grid, &sim)?;
        let integrator = self.integrator_config(&sim)?;
        let template = state.psi.scaled(Complex64::new(1.0 / state.psi.norm(), 0.0));
        let t_final = self.transfer_time(&sim);
        let separation = sim.x_recv - sim.x_send;
        let expected = separation + sim.velocity * t_final;
        let half = match self.metrics.search_half_width {
            Some(h) => sim.scaling.to_sim(Quantity::Length, h),
            None => (10.0 * sim.pulse_width).min(0.45 * separation),
        };
        Ok(PreparedRun { sim, grid, integrator, state, template, t_final, window: (expected - half, expected + half) })
    }
}

/// A scenario in simulation units, ready to integrate.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub sim: SimConfig,
    pub grid: Grid1D,
    pub integrator: IntegratorConfig,
    pub state: SystemState,
    /// The input pulse normalized to one.
    pub template: ComplexField,
    pub t_final: f64,
    /// Range of template translations searched, simulation units.
    pub window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct Fig3Result {
    pub snapshots: Vec<Snapshot>,
    pub final_state: SystemState,
    pub transfer: TransferResult,
    /// `|beta|^2` before any station loss.
    pub eta_channel: f64,
    pub projection_flat: bool,
    /// `(int |psi|^2 + int |E|^2 + outflow) / n0` at the end.
    pub mode_total: f64,
    pub outflow: f64,
    pub excited_integral: f64,
    /// Centroid of the final beam, m.
    pub final_centroid: f64,
    pub steps: usize,
    /// s
    pub dt: f64,
    pub wall_time: f64,
    pub sim: SimConfig,
    /// Speed of the light held in `state.e`; `c` for the quasi-static solver
    /// and the reduced speed for the dynamic one.
    pub probe_speed: f64,
}

impl Fig3Result {
    /// Bookkeeping and projection checks both pass.
    pub fn converged(&self) -> bool {
        !self.projection_flat && (self.mode_total - 1.0).abs() < 1e-4
    }
}

/// Integrates the transfer and reduces it to Gaussian metrics.
pub fn run_fig3(scenario: &Scenario) -> Result<Fig3Result> {
    let run = scenario.prepare()?;
    run_fig3_from(scenario, run, 0.0, 0.0)
}

/// Continues a prepared run whose state may have been restored from a
/// snapshot, adding the outflow and excited-population integral recorded
/// before the restart.
pub fn run_fig3_from(scenario: &Scenario, run: PreparedRun, outflow: f64, excited: f64) -> Result<Fig3Result> {
    let start = Instant::now();
    let PreparedRun { sim, grid, integrator, mut state, template, t_final, window } = run;
    let n0 = sim.beam_atoms;
    let mut it = Integrator::new(&sim, &integrator, &state)?;
    let trajectory = it.evolve(&mut state, t_final)?;
    let outflow = outflow + trajectory.outflow;
    let excited = excited + trajectory.excited_integral;
    let mut ws = SpectralWorkspace::new(grid.n);
    let f = state.psi.scaled(Complex64::new(1.0 / n0.sqrt(), 0.0));
    let projection = project_translated_template(&f, &template, window, &mut ws)?;
    let eta_channel = beam_splitter_reduce(projection.beta)?;
    let eta = if scenario.metrics.station_loss {
        let b = spontaneous_budget(&scenario.physical)?;
        apply_station_loss(eta_channel, b.eta_loss, b.eta_loss_recv)?
    } else {
        eta_channel
    };
    let beam = &scenario.physical.beam;
    let input = GaussianMode::displaced(beam.atoms, beam.var_x, beam.var_y)?;
    let mut transfer = transfer_metrics_with(&input, eta, scenario.metrics.noise_convention)?;
    transfer.beta_abs = projection.beta.norm().min(1.0);
    transfer.translation_m = sim.scaling.to_si(Quantity::Length, projection.translation);
    let mode_total = (state.quanta() + outflow) / n0;
    let centroid = state.psi.centroid().unwrap_or(f64::NAN);
    Ok(Fig3Result {
        snapshots: trajectory.snapshots,
        transfer,
        eta_channel,
        projection_flat: projection.flat,
        mode_total,
        outflow,
        excited_integral: excited,
        final_centroid: sim.scaling.to_si(Quantity::Length, centroid),
        steps: trajectory.steps,
        dt: sim.scaling.to_si(Quantity::Time, trajectory.dt),
        wall_time: start.elapsed().as_secs_f64(),
        final_state: state,
        sim,
        probe_speed: it.light_speed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointResult {
    pub parameter: f64,
    pub result: Option<TransferResult>,
    pub error: Option<String>,
    /// s; kept out of serialized output so identical runs give identical files
    #[serde(skip)]
    pub wall_time: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPointResult>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.result.is_none()).count()
    }

    /// Point holding the largest `T_q`.
    pub fn best(&self) -> Option<&SweepPointResult> {
        self.points
            .iter()
            .filter(|p| p.result.is_some())
            .max_by(|a, b| a.result.unwrap().t_q.total_cmp(&b.result.unwrap().t_q))
    }
}

/// Runs every point of one sweep, in parallel over `threads` workers (the
/// global pool when `None`). Rows come back in parameter order and failed
/// points carry their error message.
pub fn run_sweep(scenario: &Scenario, sweep: &SweepSpec, threads: Option<usize>) -> Result<SweepReport> {
    sweep.validate()?;
    let mut base = scenario.clone();
    base.integrator.snapshot_times = Some(Vec::new());
    // pin the control amplitude to the calibrated, balanced value
    if base.physical.optical.omega23.is_none() {
        let mut balanced = base.physical.clone();
        balanced.trap.number_imbalance = 0.0;
        base.physical.optical.omega23 = Some(crate::dynamics::calibrate_control(&balanced)?.omega23);
    }
    let values = sweep.values();
    let point = |&value: &f64| -> SweepPointResult {
        let start = Instant::now();
        let mut s = base.clone();
        sweep.apply(&mut s.physical, value);
        match run_fig3(&s) {
            Ok(r) => SweepPointResult {
                parameter: value,
                result: Some(r.transfer),
                error: None,
                wall_time: start.elapsed().as_secs_f64(),
                converged: r.converged(),
            },
            Err(e) => {
                log::warn!("sweep point {}={value} failed: {e}", sweep.parameter.as_str());
                SweepPointResult {
                    parameter: value,
                    result: None,
                    error: Some(e.to_string()),
                    wall_time: start.elapsed().as_secs_f64(),
                    converged: false,
                }
            }
        }
    };
    let points = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            pool.install(|| values.par_iter().map(point).collect())
        }
        None => values.par_iter().map(point).collect(),
    };
    Ok(SweepReport { parameter: sweep.parameter, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub bound: LossBudget,
    pub integral: Option<LossBudget>,
    pub coherence: Vec<CoherenceEstimate>,
    /// `|Omega23/Delta|` at the sender.
    pub mixing: f64,
}

/// Spontaneous-emission budget in both forms and the coherence estimate for
/// each listed species, using the scenario's trap.
pub fn run_losses(scenario: &Scenario) -> Result<LossReport> {
    let bound = spontaneous_budget(&scenario.physical)?;
    let integral = if scenario.losses.integral {
        let mut s = scenario.clone();
        s.integrator.snapshot_times = Some(Vec::new());
        let r = run_fig3(&s)?;
        let traj = crate::dynamics::Trajectory {
            snapshots: Vec::new(),
            steps: r.steps,
            dt: r.dt,
            outflow: r.outflow,
            excited_integral: r.excited_integral,
        };
        Some(spontaneous_budget_from_trajectory(&s.physical, &traj, r.sim.beam_atoms, r.sim.scaling.t0)?)
    } else {
        None
    };
    let trap = &scenario.physical.trap;
    let coherence = scenario
        .losses
        .coherence_species
        .iter()
        .map(|name| {
            let species = if name.eq_ignore_ascii_case(&scenario.physical.species.name) {
                scenario.physical.species.clone()
            } else {
                AtomSpecies::builtin(name)?
            };
            phase_diffusion_estimate(
                &species,
                trap.atoms_per_site,
                trap.angular_frequency(),
                None,
                scenario.losses.diffusion_model,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let sim = nondimensionalize(&scenario.physical)?;
    Ok(LossReport { bound, integral, coherence, mixing: sim.mixing_send.abs() })
}
