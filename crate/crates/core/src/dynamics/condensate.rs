//! Mean-field condensate update driven by the beam-probe correlator.

use std::ops::Range;

use num_complex::Complex64;

use crate::grid::{ComplexField, Grid1D, SpectralWorkspace};

/// Half-width of the condensate support, oscillator lengths.
pub const CONDENSATE_SUPPORT: f64 = 6.0;

/// Cells within [`CONDENSATE_SUPPORT`] of `center`.
pub fn support(grid: &Grid1D, center: f64) -> Range<usize> {
    let lo = ((center - CONDENSATE_SUPPORT - grid.x_min) / grid.dx()).ceil().max(0.0) as usize;
    let hi = ((center + CONDENSATE_SUPPORT - grid.x_min) / grid.dx()).floor() as isize + 1;
    lo.min(grid.n)..(hi.max(0) as usize).min(grid.n)
}

#[derive(Debug, Clone)]
struct Station {
    window: Range<usize>,
    center: f64,
    kappa: f64,
    previous: Vec<Complex64>,
}

/// Split-step integrator for
/// `i dphi/dt = [-d^2/2 + (x - x_s)^2/2 - n g^2 |E|^2/Delta] phi - kappa_s <E^dag psi>`,
/// where the correlator is the tracked-mode product `conj(E) psi` times the
/// ratio of the mode occupation to the beam norm.
#[derive(Debug, Clone)]
pub struct CondensateStepper {
    grid: Grid1D,
    dt: f64,
    kinetic: Vec<Complex64>,
    stations: [Station; 2],
    occupation: f64,
    probe_shift_coeff: f64,
    buffer: Vec<Complex64>,
}

impl CondensateStepper {
    /// `occupation` multiplies `conj(E) psi` to give `<E^dag psi>`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: &Grid1D,
        dt: f64,
        centers: [f64; 2],
        kappas: [f64; 2],
        occupation: f64,
        probe_shift_coeff: f64,
    ) -> CondensateStepper {
        let kinetic = grid
            .ks()
            .map(|k| Complex64::from_polar(1.0, -0.5 * k * k * dt))
            .collect();
        let station = |i: usize| {
            let window = support(grid, centers[i]);
            Station { previous: vec![Complex64::new(0.0, 0.0); window.len()], window, center: centers[i], kappa: kappas[i] }
        };
        CondensateStepper {
            grid: *grid,
            dt,
            kinetic,
            stations: [station(0), station(1)],
            occupation,
            probe_shift_coeff,
            buffer: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    /// Records the correlator at the start of the run for the trapezoid rule.
    pub fn prime(&mut self, psi: &[Complex64], e: &[Complex64]) {
        let occ = self.occupation;
        for st in &mut self.stations {
            for (p, j) in st.previous.iter_mut().zip(st.window.clone()) {
                *p = e[j].conj() * psi[j] * occ;
            }
        }
    }

    /// Advances both condensates by `dt`. `psi` and `e` are the fields at the
    /// end of the step.
    pub fn step(
        &mut self,
        phis: [&mut ComplexField; 2],
        psi: &[Complex64],
        e: &[Complex64],
        ws: &mut SpectralWorkspace,
    ) {
        let dt = self.dt;
        let occ = self.occupation;
        for (st, phi) in self.stations.iter_mut().zip(phis) {
            let half_potential = |j: usize, x: f64| {
                let u = x - st.center;
                let v = 0.5 * u * u - self.probe_shift_coeff * occ * e[j].norm_sqr();
                Complex64::from_polar(1.0, -0.5 * v * dt)
            };
            self.buffer.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for j in st.window.clone() {
                self.buffer[j] = phi.values[j] * half_potential(j, self.grid.x(j));
            }
            ws.forward(&mut self.buffer);
            self.buffer.iter_mut().zip(&self.kinetic).for_each(|(b, k)| *b *= k);
            ws.inverse(&mut self.buffer);
            phi.values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for (p, j) in st.previous.iter_mut().zip(st.window.clone()) {
                let source = e[j].conj() * psi[j] * occ;
                let kick = Complex64::new(0.0, st.kappa * dt) * 0.5 * (*p + source);
                phi.values[j] = self.buffer[j] * half_potential(j, self.grid.x(j)) + kick;
                *p = source;
            }
        }
    }
}
