//! Optical transport: the quasi-static emission operator and the reduced-c
//! dynamic solver.

use num_complex::Complex64;

use super::coupling::CouplingProfile;
use super::OpticalBoundary;
use crate::grid::Grid1D;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Probe field slaved to the atoms (`dE/dt = 0`).
///
/// With `Lambda(x) = int (S + delta)/c`, the steady probe is
/// `E(x) = (i/c) e^(-i Lambda) int^x e^(i Lambda) conj(Omega_C) psi`, and the
/// atoms feel `dpsi/dt = -(1/c) W(x) int^x conj(W) psi` with
/// `W = Omega_C e^(-i Lambda)`. The running integral is a cumulative trapezoid,
/// which makes the semi-discrete norm loss exactly `c |E(x_R)|^2`.
#[derive(Debug, Clone)]
pub struct QuasiStatic {
    dx: f64,
    light_speed: f64,
    /// Active cell indices, in increasing order.
    cells: Vec<usize>,
    /// `W` on the active cells.
    w: Vec<Complex64>,
    /// `Lambda` on every cell.
    lambda: Vec<f64>,
    /// `(i dx / c) e^(-i Lambda)` on every cell.
    readout: Vec<Complex64>,
    scratch: [Vec<Complex64>; 5],
}

impl QuasiStatic {
    pub fn new(grid: &Grid1D, coupling: &CouplingProfile, light_speed: f64) -> QuasiStatic {
        let cells: Vec<usize> = coupling.windows.iter().flat_map(|w| w.clone()).collect();
        let m = cells.len();
        let mut q = QuasiStatic {
            dx: grid.dx(),
            light_speed,
            cells,
            w: vec![ZERO; m],
            lambda: vec![0.0; grid.n],
            readout: vec![ZERO; grid.n],
            scratch: std::array::from_fn(|_| vec![ZERO; m]),
        };
        q.update(coupling);
        q
    }

    /// Refreshes `W` and `Lambda` after the condensates changed. The active
    /// windows must be unchanged.
    pub fn update(&mut self, coupling: &CouplingProfile) {
        let dx = self.dx;
        let c = self.light_speed;
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (j, s) in coupling.light_shift_probe.iter().enumerate() {
            let cur = (s + coupling.detuning_const) / c;
            if j > 0 {
                acc += 0.5 * dx * (prev + cur);
            }
            self.lambda[j] = acc;
            self.readout[j] = I * dx / c * Complex64::from_polar(1.0, -acc);
            prev = cur;
        }
        for (w, &j) in self.w.iter_mut().zip(&self.cells) {
            *w = coupling.omega_c[j] * Complex64::from_polar(1.0, -self.lambda[j]);
        }
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// `(1/c) int |W|^2 dx`, the largest decay rate the operator can produce.
    pub fn rate_scale(&self) -> f64 {
        self.w.iter().map(|w| w.norm_sqr()).sum::<f64>() * self.dx / self.light_speed
    }

    /// `dx sum conj(W) psi` over the active cells.
    fn emission(&self, active: &[Complex64]) -> Complex64 {
        self.w.iter().zip(active).map(|(w, p)| w.conj() * p).sum::<Complex64>() * self.dx
    }

    /// Photon flux leaving downstream of the last station, `c |E(x_R)|^2`.
    pub fn outflow_rate(&self, active: &[Complex64]) -> f64 {
        self.emission(active).norm_sqr() / self.light_speed
    }

    fn apply(w: &[Complex64], dx: f64, c: f64, input: &[Complex64], out: &mut [Complex64]) {
        let mut sum = ZERO;
        for ((o, wi), p) in out.iter_mut().zip(w).zip(input) {
            let y = wi.conj() * p;
            let running = (sum + 0.5 * y) * dx;
            sum += y;
            *o = -(*wi) * running / c;
        }
    }

    fn rk4(&mut self, active: &mut [Complex64], h: f64) {
        let [k1, k2, k3, k4, tmp] = &mut self.scratch;
        let (w, dx, c) = (&self.w, self.dx, self.light_speed);
        Self::apply(w, dx, c, active, k1);
        for ((t, a), k) in tmp.iter_mut().zip(active.iter()).zip(k1.iter()) {
            *t = a + k * (0.5 * h);
        }
        Self::apply(w, dx, c, tmp, k2);
        for ((t, a), k) in tmp.iter_mut().zip(active.iter()).zip(k2.iter()) {
            *t = a + k * (0.5 * h);
        }
        Self::apply(w, dx, c, tmp, k3);
        for ((t, a), k) in tmp.iter_mut().zip(active.iter()).zip(k3.iter()) {
            *t = a + k * h;
        }
        Self::apply(w, dx, c, tmp, k4);
        for (i, a) in active.iter_mut().enumerate() {
            *a += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }

    /// Advances the coupling over `dt` as two RK4 half steps and returns the
    /// photon number that left the domain, by Simpson's rule on the flux.
    pub fn advance(&mut self, psi: &mut [Complex64], dt: f64) -> f64 {
        let mut active: Vec<Complex64> = self.cells.iter().map(|&j| psi[j]).collect();
        let r0 = self.outflow_rate(&active);
        self.rk4(&mut active, 0.5 * dt);
        let r1 = self.outflow_rate(&active);
        self.rk4(&mut active, 0.5 * dt);
        let r2 = self.outflow_rate(&active);
        for (&j, a) in self.cells.iter().zip(&active) {
            psi[j] = *a;
        }
        dt / 6.0 * (r0 + 4.0 * r1 + r2)
    }

    /// Writes the slaved probe envelope for `psi` into `e`.
    pub fn field(&self, psi: &[Complex64], e: &mut [Complex64]) {
        let mut sum = ZERO;
        let mut k = 0;
        for (j, out) in e.iter_mut().enumerate() {
            let mut running = sum;
            if k < self.cells.len() && self.cells[k] == j {
                let y = self.w[k].conj() * psi[j];
                running = sum + 0.5 * y;
                sum += y;
                k += 1;
            }
            *out = self.readout[j] * running;
        }
    }
}

/// Exact propagator of `i d/dt (psi, E) = [[a, b], [conj(b), d]] (psi, E)` over `tau`.
fn local_unitary(a: f64, b: Complex64, d: f64, tau: f64) -> [Complex64; 4] {
    let m = 0.5 * (a + d);
    let h = 0.5 * (a - d);
    let omega = (h * h + b.norm_sqr()).sqrt();
    let (cos, sinc) = if omega * tau < 1e-8 {
        (1.0, tau)
    } else {
        ((omega * tau).cos(), (omega * tau).sin() / omega)
    };
    let phase = Complex64::from_polar(1.0, -m * tau);
    [
        phase * (cos - I * sinc * h),
        phase * (-I * sinc * b),
        phase * (-I * sinc * b.conj()),
        phase * (cos + I * sinc * h),
    ]
}

/// Probe field integrated dynamically at a reduced speed of light.
///
/// Light speed, coupling and probe shift are rescaled as `c' = f c`,
/// `Omega' = sqrt(f) Omega_C`, `S' = f S`, which leaves the atomic dynamics of
/// the quasi-static limit unchanged while making the light slow enough to
/// resolve. `c'` is snapped so light crosses exactly one cell per substep;
/// advection is then an index shift of a ring buffer, and the local coupling
/// is applied between shifts with exact 2x2 propagators.
///
/// The solver works in the frame rotating at `f delta`, so the atoms carry a
/// uniform `-f delta` and the probe only its light shift.
#[derive(Debug, Clone)]
pub struct ReducedLight {
    n: usize,
    dx: f64,
    factor: f64,
    light_speed: f64,
    substeps: usize,
    ds: f64,
    ring: Vec<Complex64>,
    offset: usize,
    boundary: OpticalBoundary,
    cells: Vec<usize>,
    /// Complement of the active cells as ranges.
    idle: Vec<std::ops::Range<usize>>,
    u_half: Vec<[Complex64; 4]>,
    u_full: Vec<[Complex64; 4]>,
    detuning: f64,
    peak_coupling: f64,
}

impl ReducedLight {
    /// `factor` is the requested reduction of the speed of light; the actual
    /// one is adjusted so an integer number of cells is crossed per `dt`.
    pub fn new(
        grid: &Grid1D,
        coupling: &CouplingProfile,
        light_speed: f64,
        factor: f64,
        dt: f64,
        boundary: OpticalBoundary,
        e: &[Complex64],
    ) -> ReducedLight {
        let dx = grid.dx();
        let substeps = ((factor * light_speed * dt / dx).round() as usize).max(1);
        let c_eff = substeps as f64 * dx / dt;
        let cells: Vec<usize> = coupling.windows.iter().flat_map(|w| w.clone()).collect();
        let mut idle = Vec::new();
        let mut start = 0;
        for w in &coupling.windows {
            if w.start > start {
                idle.push(start..w.start);
            }
            start = w.end;
        }
        if start < grid.n {
            idle.push(start..grid.n);
        }
        let mut r = ReducedLight {
            n: grid.n,
            dx,
            factor: c_eff / light_speed,
            light_speed: c_eff,
            substeps,
            ds: dt / substeps as f64,
            ring: e.to_vec(),
            offset: 0,
            boundary,
            cells,
            idle,
            u_half: Vec::new(),
            u_full: Vec::new(),
            detuning: 0.0,
            peak_coupling: 0.0,
        };
        r.update(coupling);
        r
    }

    /// Recomputes the local propagators from the coupling profile.
    pub fn update(&mut self, coupling: &CouplingProfile) {
        let f = self.factor;
        let sf = f.sqrt();
        self.detuning = f * coupling.detuning_const;
        self.peak_coupling = 0.0;
        let a = -self.detuning;
        self.u_half.clear();
        self.u_full.clear();
        for &j in &self.cells {
            let b = -coupling.omega_c[j] * sf;
            let d = f * coupling.light_shift_probe[j];
            self.peak_coupling = self.peak_coupling.max(b.norm());
            self.u_half.push(local_unitary(a, b, d, 0.5 * self.ds));
            self.u_full.push(local_unitary(a, b, d, self.ds));
        }
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn substep(&self) -> f64 {
        self.ds
    }

    /// Largest rotation angle of one substep, `|Omega'| ds`.
    pub fn rotation_per_substep(&self) -> f64 {
        self.peak_coupling * self.ds
    }

    #[inline]
    fn slot(&self, j: usize) -> usize {
        (j + self.n - self.offset) % self.n
    }

    fn rotate(&mut self, psi: &mut [Complex64], full: bool) {
        for k in 0..self.cells.len() {
            let j = self.cells[k];
            let s = self.slot(j);
            let u = if full { &self.u_full[k] } else { &self.u_half[k] };
            let (p, e) = (psi[j], self.ring[s]);
            psi[j] = u[0] * p + u[1] * e;
            self.ring[s] = u[2] * p + u[3] * e;
        }
    }

    /// Moves the light one cell downstream; returns the quanta that left.
    fn shift(&mut self) -> f64 {
        self.offset = (self.offset + 1) % self.n;
        match self.boundary {
            OpticalBoundary::Periodic => 0.0,
            OpticalBoundary::Open => {
                let s = self.slot(0);
                let lost = self.ring[s].norm_sqr() * self.dx;
                self.ring[s] = ZERO;
                lost
            }
        }
    }

    /// Advances light and coupling over one `dt`; returns the quanta that left.
    pub fn advance(&mut self, psi: &mut [Complex64]) -> f64 {
        let mut lost = 0.0;
        self.rotate(psi, false);
        for s in 0..self.substeps {
            lost += self.shift();
            self.rotate(psi, s + 1 < self.substeps);
        }
        if self.detuning != 0.0 {
            let phase = Complex64::from_polar(1.0, self.detuning * self.substeps as f64 * self.ds);
            for r in &self.idle {
                psi[r.clone()].iter_mut().for_each(|p| *p *= phase);
            }
        }
        lost
    }

    /// Writes the probe envelope, in grid order, into `e`.
    pub fn field(&self, e: &mut [Complex64]) {
        for (j, out) in e.iter_mut().enumerate() {
            *out = self.ring[self.slot(j)];
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ring.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(grid: &Grid1D, omega: impl Fn(f64) -> f64, shift: f64) -> CouplingProfile {
        let omega_c: Vec<Complex64> = grid.xs().map(|x| Complex64::new(omega(x), 0.0)).collect();
        let mut windows = Vec::new();
        let mut open = None;
        for (i, v) in omega_c.iter().enumerate() {
            match (v.norm() > 0.0, open) {
                (true, None) => open = Some(i),
                (false, Some(s)) => {
                    windows.push(s..i);
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            windows.push(s..grid.n);
        }
        CouplingProfile {
            light_shift_probe: omega_c.iter().map(|v| if v.norm() > 0.0 { shift } else { 0.0 }).collect(),
            omega_c,
            light_shift_atom: 0.0,
            detuning_const: 0.0,
            windows,
        }
    }

    fn station(x: f64) -> f64 {
        if x.abs() < 6.0 {
            40.0 * (-0.5 * x * x).exp()
        } else {
            0.0
        }
    }

    #[test]
    fn unitary_is_unitary_and_matches_rabi() {
        let u = local_unitary(0.3, Complex64::new(0.7, -0.2), -1.1, 0.9);
        let [a, b, c, d] = u;
        assert!((a.norm_sqr() + c.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((b.norm_sqr() + d.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((a.conj() * b + c.conj() * d).norm() < 1e-14);
        // resonant case: cos and -i sin
        let omega = 2.0;
        let u = local_unitary(0.0, Complex64::new(-omega, 0.0), 0.0, 0.4);
        assert!((u[0].re - (0.8f64).cos()).abs() < 1e-14);
        assert!((u[2] - I * (0.8f64).sin()).norm() < 1e-14);
    }

    #[test]
    fn zero_atoms_give_zero_probe() {
        let g = Grid1D::new(-20.0, 20.0, 512).unwrap();
        let q = QuasiStatic::new(&g, &profile(&g, station, 0.0), 1e4);
        let psi = vec![ZERO; g.n];
        let mut e = vec![Complex64::new(1.0, 0.0); g.n];
        q.field(&psi, &mut e);
        assert!(e.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn probe_is_flat_downstream_of_a_station() {
        let g = Grid1D::new(-20.0, 20.0, 512).unwrap();
        let q = QuasiStatic::new(&g, &profile(&g, station, 3.0), 1e4);
        let psi: Vec<Complex64> = g.xs().map(|x| Complex64::from_polar((-0.02 * x * x).exp(), 0.3 * x)).collect();
        let mut e = vec![ZERO; g.n];
        q.field(&psi, &mut e);
        let downstream: Vec<f64> = (0..g.n).filter(|&j| g.x(j) > 6.5).map(|j| e[j].norm()).collect();
        let first = downstream[0];
        assert!(first > 0.0);
        for v in downstream {
            assert!((v - first).abs() <= 1e-12 * first);
        }
        assert!((0..g.n).filter(|&j| g.x(j) < -6.5).all(|j| e[j].norm() == 0.0));
    }

    #[test]
    fn field_solves_the_transport_equation() {
        // c dE/dx = i conj(Omega) psi - i S E, checked by central differences
        let g = Grid1D::new(-20.0, 20.0, 4096).unwrap();
        let c = 50.0;
        let prof = profile(&g, station, 2.0);
        let q = QuasiStatic::new(&g, &prof, c);
        let psi: Vec<Complex64> = g.xs().map(|x| Complex64::from_polar((-0.05 * x * x).exp(), -0.4 * x)).collect();
        let mut e = vec![ZERO; g.n];
        q.field(&psi, &mut e);
        let dx = g.dx();
        let scale = e.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for j in (g.index_of(-4.0)..g.index_of(4.0)).step_by(37) {
            let lhs = c * (e[j + 1] - e[j - 1]) / (2.0 * dx);
            let rhs = I * prof.omega_c[j].conj() * psi[j] - I * prof.light_shift_probe[j] * e[j];
            assert!((lhs - rhs).norm() < 1e-3 * scale * c, "j = {j}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn semi_discrete_flux_balance_is_exact() {
        let g = Grid1D::new(-20.0, 20.0, 512).unwrap();
        let q = QuasiStatic::new(&g, &profile(&g, station, 1.5), 1e3);
        let psi: Vec<Complex64> = g.xs().map(|x| Complex64::from_polar((-0.05 * x * x).exp(), 0.2 * x)).collect();
        let active: Vec<Complex64> = q.cells.iter().map(|&j| psi[j]).collect();
        let mut out = vec![ZERO; active.len()];
        QuasiStatic::apply(&q.w, q.dx, q.light_speed, &active, &mut out);
        let dnorm: f64 = active.iter().zip(&out).map(|(p, o)| 2.0 * (p.conj() * o).re).sum::<f64>() * q.dx;
        let rate = q.outflow_rate(&active);
        assert!((dnorm + rate).abs() <= 1e-13 * rate, "{dnorm} vs {rate}");
    }

    #[test]
    fn step_flux_bookkeeping() {
        let g = Grid1D::new(-20.0, 20.0, 512).unwrap();
        let mut q = QuasiStatic::new(&g, &profile(&g, station, 0.5), 2e3);
        let mut psi: Vec<Complex64> = g.xs().map(|x| Complex64::from_polar((-0.05 * x * x).exp(), 0.2 * x)).collect();
        let dx = g.dx();
        let norm = |p: &[Complex64]| p.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx;
        for _ in 0..20 {
            let before = norm(&psi);
            let lost = q.advance(&mut psi, 1e-3);
            let after = norm(&psi);
            assert!(((before - after) - lost).abs() <= 1e-6 * lost, "{} vs {lost}", before - after);
        }
    }

    #[test]
    fn ring_shift_moves_light_one_cell() {
        let g = Grid1D::new(0.0, 8.0, 8).unwrap();
        let prof = profile(&g, |_| 0.0, 0.0);
        let mut e = vec![ZERO; 8];
        e[2] = Complex64::new(1.0, 0.0);
        e[7] = Complex64::new(0.5, 0.0);
        let mut r = ReducedLight::new(&g, &prof, 3.0, 1.0, 1.0, OpticalBoundary::Open, &e);
        assert_eq!(r.substeps(), 3);
        let mut psi = vec![ZERO; 8];
        let lost = r.advance(&mut psi);
        assert!((lost - 0.25).abs() < 1e-15);
        let mut out = vec![ZERO; 8];
        r.field(&mut out);
        assert_eq!(out[5], Complex64::new(1.0, 0.0));
        assert_eq!(out.iter().filter(|v| v.norm() > 0.0).count(), 1);
    }

    #[test]
    fn closed_ring_conserves_quanta() {
        let g = Grid1D::new(-20.0, 20.0, 512).unwrap();
        let prof = profile(&g, station, 0.7);
        let e = vec![ZERO; g.n];
        let mut r = ReducedLight::new(&g, &prof, 1e3, 1.0, 1e-2, OpticalBoundary::Periodic, &e);
        let mut psi: Vec<Complex64> = g.xs().map(|x| Complex64::from_polar((-0.05 * x * x).exp(), 0.2 * x)).collect();
        let dx = g.dx();
        let total = |p: &[Complex64], r: &ReducedLight| p.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx + r.norm_sqr();
        let start = total(&psi, &r);
        for _ in 0..50 {
            r.advance(&mut psi);
        }
        assert!((total(&psi, &r) - start).abs() < 1e-12 * start);
        assert!(r.norm_sqr() > 1e-3 * start);
    }
}
