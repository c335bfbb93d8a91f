#![allow(dead_code)]

use atomxfer::dynamics::OpticalBoundary;
use atomxfer::scenario::{GridSpec, Scenario, ScenarioKind};
use atomxfer::{ComplexField, FieldKind, Grid1D, Integrator, IntegratorConfig, OpticalSolver, SimConfig, SystemState};
use num_complex::Complex64;

/// Reference physics with the receiver at 0.5 mm on a 3 mm, 2^14-point grid.
pub fn shortened() -> Scenario {
    let mut s = Scenario::reference(ScenarioKind::Custom);
    s.physical.trap.x_recv = 0.5e-3;
    s.grid = GridSpec { x_min: -1.25e-3, x_max: 1.75e-3, n: 1 << 14 };
    s
}

/// Small rig for property tests: a 2 x0 pulse, stations 30 x0 apart and a
/// 4096-point grid.
pub fn mini() -> Scenario {
    let mut s = Scenario::reference(ScenarioKind::Custom);
    let x0 = s.physical.oscillator_length();
    s.physical.trap.x_recv = 30.0 * x0;
    s.physical.beam.width = Some(2.0 * x0);
    s.grid = GridSpec { x_min: -40.0 * x0, x_max: 80.0 * x0, n: 1 << 12 };
    s.integrator.snapshot_times = Some(Vec::new());
    s
}

/// Unit-norm Gaussian `exp(-(x-c)^2/(2w^2) + i q x)` on `grid`.
pub fn gaussian(grid: &Grid1D, center: f64, width: f64, q: f64, carrier: f64) -> ComplexField {
    let mut f = ComplexField::from_fn(*grid, carrier, FieldKind::AtomicBeam, |x| {
        let u = (x - center) / width;
        Complex64::from_polar((-0.5 * u * u).exp(), q * x)
    });
    let s = 1.0 / f.norm();
    f.values.iter_mut().for_each(|v| *v *= s);
    f
}

/// Free evolution of `pi^(-1/4) w^(-1/2) exp(-(x-c)^2/(2w^2))` under
/// `i psi_t = (k^2/2 + K k) psi`.
pub fn free_gaussian(x: f64, t: f64, center: f64, width: f64, carrier: f64) -> Complex64 {
    let w2 = width * width;
    let s = Complex64::new(1.0, t / w2);
    let u = x - center - carrier * t;
    let norm = (std::f64::consts::PI * w2).powf(-0.25);
    norm / s.sqrt() * (-(u * u) / (2.0 * w2 * s)).exp()
}

/// Position of the `k`-th local minimum (1-based) of uniformly sampled data,
/// refined by a parabola through the neighbouring samples.
pub fn kth_minimum(samples: &[f64], dt: f64, k: usize) -> Option<f64> {
    let mut seen = 0;
    for i in 1..samples.len().saturating_sub(1) {
        let (a, b, c) = (samples[i - 1], samples[i], samples[i + 1]);
        if b <= a && b < c {
            seen += 1;
            if seen == k {
                let denom = a - 2.0 * b + c;
                let shift = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
                return Some((i as f64 + shift) * dt);
            }
        }
    }
    None
}

/// Uniform condensate at the sender on a small periodic grid, tuned to
/// two-photon resonance, with a uniform beam and no light: under the reduced-c
/// solver beam and probe form a two-level system with coupling `rate`.
pub fn two_mode_rig(sim: &SimConfig, rate: f64, dt: f64) -> (SimConfig, IntegratorConfig, SystemState) {
    let grid = Grid1D::new(0.0, 6.4, 64).unwrap();
    let build = |phi0: f64| SystemState {
        psi: ComplexField::from_fn(grid, sim.atom_carrier, FieldKind::AtomicBeam, |_| Complex64::new(1.0, 0.0)),
        e: ComplexField::zeros(grid, sim.probe_carrier, FieldKind::OpticalProbe),
        phi_send: ComplexField::from_fn(grid, 0.0, FieldKind::Condensate, |_| Complex64::new(phi0, 0.0)),
        phi_recv: ComplexField::zeros(grid, 0.0, FieldKind::Condensate),
        t: 0.0,
    };
    let mut config = IntegratorConfig::for_sim(sim);
    config.dt = dt;
    config.optical_solver = OpticalSolver::Dynamic;
    config.optical_boundary = OpticalBoundary::Periodic;
    config.guard_ratio = f64::INFINITY;
    // the solver snaps c to whole cells per step; read back the factor in use
    let probe = Integrator::new(sim, &config, &build(1.0)).unwrap();
    let factor = probe.light_speed() / sim.light_speed;
    let phi0 = rate / (factor.sqrt() * sim.coupling_send);
    let mut sim = sim.clone();
    sim.detuning_const = phi0 * phi0 * sim.probe_shift_coeff;
    (sim, config, build(phi0))
}
