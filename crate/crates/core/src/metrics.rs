//! Mode tracking, template projection and Gaussian transfer metrics.
//!
//! The channel is linear, so the output of the tracked input mode is
//! `beta a_in + (vacuum modes)`, which is a beam splitter of transmissivity
//! `eta = |beta|^2`. Quadratures are `X = a + a^dag`, `Y = -i(a - a^dag)` with
//! vacuum variance 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Integrator, IntegratorConfig, SystemState, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, FieldKind, SpectralWorkspace};
use crate::units::SimConfig;

/// First and second moments of a single-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMode {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
}

impl GaussianMode {
    pub fn new(mean_x: f64, mean_y: f64, var_x: f64, var_y: f64) -> Result<GaussianMode> {
        let m = GaussianMode { mean_x, mean_y, var_x, var_y };
        m.validate()?;
        Ok(m)
    }

    /// Coherent amplitude `sqrt(n0)` on the X axis with the given variances.
    pub fn displaced(atoms: f64, var_x: f64, var_y: f64) -> Result<GaussianMode> {
        GaussianMode::new(2.0 * atoms.sqrt(), 0.0, var_x, var_y)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.var_x > 0.0 && self.var_y > 0.0) {
            return Err(Error::InvalidParameter { name: "var_x", reason: "variances must be positive".into() });
        }
        if self.var_x * self.var_y < 1.0 - 1e-3 {
            return Err(Error::InvalidParameter {
                name: "var_x",
                reason: format!("V_X V_Y = {} violates the uncertainty bound", self.var_x * self.var_y),
            });
        }
        Ok(())
    }

    /// Mean occupation `<a^dag a> = (<X>^2 + <Y>^2)/4 + (V_X + V_Y - 2)/4`.
    pub fn occupation(&self) -> f64 {
        (self.mean_x * self.mean_x + self.mean_y * self.mean_y) / 4.0 + (self.var_x + self.var_y - 2.0) / 4.0
    }
}

/// Atomic and optical components of the tracked mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    pub f: ComplexField,
    pub g: ComplexField,
    pub t: f64,
    /// Quanta of the mode carried out of the domain by light.
    pub outflow: f64,
}

impl ModeFunction {
    /// `|f|^2 + |g|^2 + outflow`; one for a lossless channel.
    pub fn total(&self) -> f64 {
        self.f.norm_sqr() + self.g.norm_sqr() + self.outflow
    }
}

/// Evolves the mode `(u, 0)` through the channel defined by the condensates.
pub fn track_mode(
    u: &ComplexField,
    phi_send: &ComplexField,
    phi_recv: &ComplexField,
    sim: &SimConfig,
    config: &IntegratorConfig,
    t_final: f64,
) -> Result<(ModeFunction, Trajectory)> {
    let norm = u.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter { name: "u", reason: format!("template norm^2 is {norm}, expected 1") });
    }
    let mut state = SystemState {
        psi: u.clone(),
        e: ComplexField::zeros(u.grid, sim.probe_carrier, FieldKind::OpticalProbe),
        phi_send: phi_send.clone(),
        phi_recv: phi_recv.clone(),
        t: 0.0,
    };
    let mut integrator = Integrator::new(sim, config, &state)?;
    let trajectory = integrator.evolve(&mut state, t_final)?;
    let mode = ModeFunction { f: state.psi, g: state.e, t: state.t, outflow: trajectory.outflow };
    Ok((mode, trajectory))
}

/// Overlap of the output with the best translate of the template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub beta: Complex64,
    /// Shift applied to the template, simulation units.
    pub translation: f64,
    /// The maximum sat on the window edge; `beta` is then the best scanned
    /// value rather than a local maximum.
    pub flat: bool,
}

struct Correlator<'a> {
    k: Vec<f64>,
    p: Vec<Complex64>,
    dx: f64,
    _u: std::marker::PhantomData<&'a ()>,
}

impl Correlator<'_> {
    /// `(S, dS/da, d2S/da2)` with `S(a) = <translate(u, a), f>`.
    fn eval(&self, a: f64) -> (Complex64, Complex64, Complex64) {
        let mut s = Complex64::new(0.0, 0.0);
        let mut d1 = s;
        let mut d2 = s;
        for (k, p) in self.k.iter().zip(&self.p) {
            let term = p * Complex64::from_polar(1.0, k * a);
            s += term;
            d1 += term * Complex64::new(0.0, *k);
            d2 -= term * (k * k);
        }
        (s * self.dx, d1 * self.dx, d2 * self.dx)
    }

    fn abs(&self, a: f64) -> f64 {
        self.eval(a).0.norm()
    }
}

/// Maximizes `|<translate(u, a), f>|` over `a` in `window` by an integer-cell
/// scan followed by golden-section and Newton refinement.
pub fn project_translated_template(
    f: &ComplexField,
    u: &ComplexField,
    window: (f64, f64),
    ws: &mut SpectralWorkspace,
) -> Result<Projection> {
    if !f.is_compatible(u) {
        return Err(Error::FieldMismatch("template and output differ in grid, kind or carrier".into()));
    }
    let grid = f.grid;
    let (lo, hi) = window;
    if !(hi >= lo) || hi - lo >= grid.length() {
        return Err(Error::InvalidParameter { name: "window", reason: format!("[{lo}, {hi}] is empty or wraps the domain") });
    }
    let fs = f.spectrum(ws);
    let us = u.spectrum(ws);
    let p: Vec<Complex64> = us.iter().zip(&fs).map(|(a, b)| a.conj() * b).collect();
    let corr = Correlator { k: grid.ks().collect(), p, dx: grid.dx(), _u: std::marker::PhantomData };

    // integer shifts from one inverse transform
    let mut scan = corr.p.clone();
    ws.inverse(&mut scan);
    let scale = grid.dx() * (grid.n as f64).sqrt();
    let dx = grid.dx();
    let m_lo = (lo / dx).ceil() as i64;
    let m_hi = (hi / dx).floor() as i64;
    let n = grid.n as i64;
    let (mut best_m, mut best) = (m_lo, -1.0);
    for m in m_lo..=m_hi {
        let v = scan[m.rem_euclid(n) as usize].norm() * scale;
        if v > best {
            best = v;
            best_m = m;
        }
    }
    if m_lo > m_hi {
        let a = 0.5 * (lo + hi);
        return Ok(Projection { beta: corr.eval(a).0, translation: a, flat: true });
    }
    let flat = m_hi > m_lo && (best_m == m_lo || best_m == m_hi);
    if flat {
        log::warn!("template projection: maximum on the window edge at shift {}", best_m as f64 * dx);
        let a = best_m as f64 * dx;
        return Ok(Projection { beta: corr.eval(a).0, translation: a, flat: true });
    }

    // golden section on |S| within one cell either side
    let center = best_m as f64 * dx;
    let (mut a, mut b) = ((center - dx).max(lo), (center + dx).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (corr.abs(x1), corr.abs(x2));
    while b - a > 1e-3 * dx {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = corr.abs(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = corr.abs(x1);
        }
    }
    let mut x = 0.5 * (a + b);
    // Newton on |S|^2 polishes the optimum below the bracket width
    for _ in 0..3 {
        let (s, d1, d2) = corr.eval(x);
        let g = 2.0 * (s.conj() * d1).re;
        let h = 2.0 * (d1.norm_sqr() + (s.conj() * d2).re);
        if h >= 0.0 {
            break;
        }
        let next = x - g / h;
        if (next - x).abs() > dx || corr.abs(next) < corr.abs(x) {
            break;
        }
        x = next;
    }
    Ok(Projection { beta: corr.eval(x).0, translation: x, flat: false })
}

/// Transmissivity of the equivalent beam splitter, `|beta|^2`.
pub fn beam_splitter_reduce(beta: Complex64) -> Result<f64> {
    let b = beta.norm();
    if !b.is_finite() || b > 1.0 + 1e-6 {
        return Err(Error::Unitarity(b));
    }
    Ok(b.min(1.0).powi(2))
}

/// Transmissivity after spontaneous-emission loss at both stations.
pub fn apply_station_loss(eta: f64, loss_send: f64, loss_recv: f64) -> Result<f64> {
    for (name, v) in [("loss_send", loss_send), ("loss_recv", loss_recv)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter { name, reason: format!("{v} is not in [0, 1]") });
        }
    }
    Ok(eta * (1.0 - loss_send) * (1.0 - loss_recv))
}

/// How the two conditional variances combine into `V_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseConvention {
    #[default]
    Product,
    GeometricMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub beta_abs: f64,
    pub eta: f64,
    #[serde(rename = "T_X")]
    pub t_x: f64,
    #[serde(rename = "T_Y")]
    pub t_y: f64,
    #[serde(rename = "T_q")]
    pub t_q: f64,
    #[serde(rename = "Vcv_X")]
    pub vcv_x: f64,
    #[serde(rename = "Vcv_Y")]
    pub vcv_y: f64,
    #[serde(rename = "V_q")]
    pub v_q: f64,
    pub translation_m: f64,
}

/// Signal transfer and conditional variances through a beam splitter of
/// transmissivity `eta`: `T = eta V / (eta V + 1 - eta)` per quadrature and
/// `Vcv = 1 - eta`.
pub fn transfer_metrics(input: &GaussianMode, eta: f64) -> Result<TransferResult> {
    transfer_metrics_with(input, eta, NoiseConvention::Product)
}

pub fn transfer_metrics_with(input: &GaussianMode, eta: f64, convention: NoiseConvention) -> Result<TransferResult> {
    input.validate()?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter { name: "eta", reason: format!("{eta} is not in [0, 1]") });
    }
    if input.mean_x == 0.0 && input.mean_y == 0.0 {
        return Err(Error::ZeroMean);
    }
    let transfer = |v: f64| eta * v / (eta * v + (1.0 - eta));
    let t_x = transfer(input.var_x);
    let t_y = transfer(input.var_y);
    let vcv = 1.0 - eta;
    let v_q = match convention {
        NoiseConvention::Product => vcv * vcv,
        NoiseConvention::GeometricMean => vcv,
    };
    Ok(TransferResult {
        beta_abs: eta.sqrt(),
        eta,
        t_x,
        t_y,
        t_q: t_x + t_y,
        vcv_x: vcv,
        vcv_y: vcv,
        v_q,
        translation_m: 0.0,
    })
}

/// Output moments computed by propagating the two-mode covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub vcv_x: f64,
    pub vcv_y: f64,
    pub t_x: f64,
    pub t_y: f64,
}

type Mat4 = [[f64; 4]; 4];

fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn transpose(a: &Mat4) -> Mat4 {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Brute-force reference: the input mode and a vacuum mode, ordered
/// `(X_in, Y_in, X_vac, Y_vac)`, pass a beam splitter whose symplectic matrix
/// acts on the covariance matrix and the means. Signal transfer is the ratio
/// of output to input signal-to-noise for a displacement along each
/// quadrature; conditional variances come from the input-output cross
/// covariance.
pub fn gaussian_oracle(input: &GaussianMode, eta: f64) -> GaussianMoments {
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    let s: Mat4 = [
        [t, 0.0, r, 0.0],
        [0.0, t, 0.0, r],
        [-r, 0.0, t, 0.0],
        [0.0, -r, 0.0, t],
    ];
    let sigma: Mat4 = [
        [input.var_x, 0.0, 0.0, 0.0],
        [0.0, input.var_y, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let out = matmul(&matmul(&s, &sigma), &transpose(&s));
    let cross = matmul(&s, &sigma);
    let propagate = |m: [f64; 4]| -> [f64; 4] {
        let mut o = [0.0; 4];
        for i in 0..4 {
            o[i] = (0..4).map(|k| s[i][k] * m[k]).sum();
        }
        o
    };
    let means = propagate([input.mean_x, input.mean_y, 0.0, 0.0]);
    let snr_ratio = |q: usize, v_in: f64| {
        let mut probe = [0.0; 4];
        probe[q] = 1.0;
        let shifted = propagate(probe);
        (shifted[q] * shifted[q] / out[q][q]) / (1.0 / v_in)
    };
    GaussianMoments {
        mean_x: means[0],
        mean_y: means[1],
        var_x: out[0][0],
        var_y: out[1][1],
        vcv_x: out[0][0] - cross[0][0] * cross[0][0] / input.var_x,
        vcv_y: out[1][1] - cross[1][1] * cross[1][1] / input.var_y,
        t_x: snr_ratio(0, input.var_x),
        t_y: snr_ratio(1, input.var_y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_envelope, translate_field, Grid1D};
    use proptest::prelude::*;

    fn paper_input() -> GaussianMode {
        GaussianMode::displaced(5000.0, 0.1353, 7.389).unwrap()
    }

    #[test]
    fn perfect_channel_endpoints() {
        let r = transfer_metrics(&paper_input(), 1.0).unwrap();
        assert_eq!(r.t_q, 2.0);
        assert_eq!(r.v_q, 0.0);
        let r = transfer_metrics(&paper_input(), 0.0).unwrap();
        assert_eq!(r.t_q, 0.0);
        assert_eq!(r.v_q, 1.0);
    }

    #[test]
    fn lossy_channel_hand_values() {
        let r = transfer_metrics(&paper_input(), 0.9216).unwrap();
        assert!((r.t_x - 0.614).abs() < 1e-3, "{}", r.t_x);
        assert!((r.t_y - 0.989).abs() < 1e-3, "{}", r.t_y);
        assert!((r.t_q - 1.60).abs() < 5e-3, "{}", r.t_q);
        assert!((r.v_q - 6.15e-3).abs() < 1e-5, "{}", r.v_q);
        let o = gaussian_oracle(&paper_input(), 0.9216);
        assert!((o.t_x - r.t_x).abs() < 1e-12);
        assert!((o.vcv_x * o.vcv_y - r.v_q).abs() < 1e-12);
    }

    #[test]
    fn oracle_limits() {
        let vac = GaussianMode::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let o = gaussian_oracle(&vac, 0.5);
        assert!((o.var_x - 1.0).abs() < 1e-15 && (o.var_y - 1.0).abs() < 1e-15);
        let sq = paper_input();
        let o = gaussian_oracle(&sq, 1.0);
        assert!((o.var_x - sq.var_x).abs() < 1e-15 && (o.var_y - sq.var_y).abs() < 1e-15);
        assert!((o.mean_x - sq.mean_x).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_is_rejected() {
        let m = GaussianMode::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(transfer_metrics(&m, 0.5), Err(Error::ZeroMean)));
        assert!(transfer_metrics(&paper_input(), 1.2).is_err());
    }

    #[test]
    fn geometric_mean_convention() {
        let r = transfer_metrics_with(&paper_input(), 0.75, NoiseConvention::GeometricMean).unwrap();
        assert!((r.v_q - 0.25).abs() < 1e-15);
    }

    #[test]
    fn beam_splitter_and_station_loss() {
        assert_eq!(beam_splitter_reduce(Complex64::new(1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(beam_splitter_reduce(Complex64::new(0.0, 0.0)).unwrap(), 0.0);
        assert!((beam_splitter_reduce(Complex64::new(0.0, 0.96)).unwrap() - 0.9216).abs() < 1e-15);
        assert_eq!(beam_splitter_reduce(Complex64::new(1.0 + 1e-10, 0.0)).unwrap(), 1.0);
        assert!(matches!(beam_splitter_reduce(Complex64::new(1.01, 0.0)), Err(Error::Unitarity(_))));
        assert!((apply_station_loss(1.0, 0.04, 0.04).unwrap() - 0.9216).abs() < 1e-15);
        assert_eq!(apply_station_loss(0.7, 0.0, 0.0).unwrap(), 0.7);
        assert_eq!(apply_station_loss(0.7, 1.0, 0.0).unwrap(), 0.0);
        assert!(apply_station_loss(0.7, -0.1, 0.0).is_err());
    }

    fn template() -> (Grid1D, ComplexField) {
        let g = Grid1D::new(-40.0, 40.0, 1024).unwrap();
        let u = gaussian_envelope(&g, -10.0, 1.5, 1.0, 0.0, FieldKind::AtomicBeam).unwrap();
        (g, u)
    }

    #[test]
    fn projection_recovers_translation() {
        let (g, u) = template();
        let mut ws = SpectralWorkspace::new(g.n);
        let f = translate_field(&u, 17.3217, &mut ws).scaled(Complex64::from_polar(1.0, 0.8));
        let p = project_translated_template(&f, &u, (10.0, 25.0), &mut ws).unwrap();
        assert!((p.beta.norm() - 1.0).abs() < 1e-10, "{}", p.beta.norm());
        assert!((p.translation - 17.3217).abs() < 1e-6, "{}", p.translation);
        assert!(!p.flat);
    }

    #[test]
    fn projection_of_orthogonal_momentum_vanishes() {
        let (g, u) = template();
        let mut ws = SpectralWorkspace::new(g.n);
        let mut f = translate_field(&u, 15.0, &mut ws);
        for (x, v) in g.xs().zip(f.values.iter_mut()) {
            *v *= Complex64::from_polar(1.0, 40.0 * x);
        }
        let p = project_translated_template(&f, &u, (10.0, 20.0), &mut ws).unwrap();
        assert!(p.beta.norm() < 1e-10, "{}", p.beta.norm());
    }

    #[test]
    fn projection_of_mixed_output() {
        let (g, u) = template();
        let mut ws = SpectralWorkspace::new(g.n);
        let a = translate_field(&u, 12.0, &mut ws);
        // a distant copy is orthogonal to every translate near 12
        let far = translate_field(&u, 45.0, &mut ws);
        let mut f = a.clone();
        for (v, w) in f.values.iter_mut().zip(&far.values) {
            *v = (*v + w) / 2f64.sqrt();
        }
        let p = project_translated_template(&f, &u, (5.0, 20.0), &mut ws).unwrap();
        assert!((p.beta.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn projection_flags_edge_maximum() {
        let (g, u) = template();
        let mut ws = SpectralWorkspace::new(g.n);
        let f = translate_field(&u, 17.0, &mut ws);
        let p = project_translated_template(&f, &u, (10.0, 15.0), &mut ws).unwrap();
        assert!(p.flat);
    }

    #[test]
    fn occupation_of_squeezed_coherent_state() {
        let m = paper_input();
        assert!((m.occupation() - (5000.0 + (0.1353 + 7.389 - 2.0) / 4.0)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn closed_forms_match_oracle(vx in 0.05f64..20.0, ratio in 1.0f64..50.0, eta in 0.0f64..=1.0) {
            let input = GaussianMode::displaced(5000.0, vx, ratio / vx).unwrap();
            let r = transfer_metrics(&input, eta).unwrap();
            let o = gaussian_oracle(&input, eta);
            prop_assert!((r.t_x - o.t_x).abs() < 1e-12);
            prop_assert!((r.t_y - o.t_y).abs() < 1e-12);
            prop_assert!((r.vcv_x - o.vcv_x).abs() < 1e-12);
            prop_assert!((r.vcv_y - o.vcv_y).abs() < 1e-12);
            prop_assert!((r.v_q - o.vcv_x * o.vcv_y).abs() < 1e-12);
        }

        #[test]
        fn metrics_are_monotone_in_eta(vx in 0.05f64..5.0, eta in 0.01f64..0.98) {
            let input = GaussianMode::displaced(100.0, vx, 1.0 / vx).unwrap();
            let a = transfer_metrics(&input, eta).unwrap();
            let b = transfer_metrics(&input, eta + 0.01).unwrap();
            prop_assert!(b.t_q > a.t_q);
            prop_assert!(b.v_q < a.v_q);
        }

        #[test]
        fn projection_scales_with_amplitude(alpha in 0.05f64..1.0, phase in 0.0f64..6.28) {
            let (g, u) = template();
            let mut ws = SpectralWorkspace::new(g.n);
            let f = translate_field(&u, 14.2, &mut ws);
            let p1 = project_translated_template(&f, &u, (8.0, 20.0), &mut ws).unwrap();
            let p2 = project_translated_template(&f.scaled(Complex64::from_polar(alpha, phase)), &u, (8.0, 20.0), &mut ws).unwrap();
            prop_assert!((p2.beta.norm() - alpha * p1.beta.norm()).abs() < 1e-10);
        }
    }
}
