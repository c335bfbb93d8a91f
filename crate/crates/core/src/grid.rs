//! Uniform periodic grid, complex envelope fields and spectral primitives.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic grid of `n` points on `[x_min, x_max)`; point `n` is point `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Grid1D> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParameter {
                name: "grid.points",
                reason: format!("{n} is not a power of two >= 2"),
            });
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "grid.x_max",
                reason: format!("empty or non-finite domain [{x_min}, {x_max})"),
            });
        }
        Ok(Grid1D { x_min, x_max, n })
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// Wavenumber of FFT bin `i` (standard ordering, Nyquist bin negative).
    pub fn k(&self, i: usize) -> f64 {
        let n = self.n as isize;
        let i = i as isize;
        let m = if i < n / 2 { i } else { i - n };
        m as f64 * self.dk()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    pub fn ks(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.k(i))
    }

    /// Nearest grid index to `x`, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx()).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    AtomicBeam,
    OpticalProbe,
    Condensate,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::AtomicBeam => "atomic-beam",
            FieldKind::OpticalProbe => "optical-probe",
            FieldKind::Condensate => "condensate",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            FieldKind::AtomicBeam => 0,
            FieldKind::OpticalProbe => 1,
            FieldKind::Condensate => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<FieldKind> {
        match code {
            0 => Some(FieldKind::AtomicBeam),
            1 => Some(FieldKind::OpticalProbe),
            2 => Some(FieldKind::Condensate),
            _ => None,
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atomic-beam" => Ok(FieldKind::AtomicBeam),
            "optical-probe" => Ok(FieldKind::OpticalProbe),
            "condensate" => Ok(FieldKind::Condensate),
            other => Err(Error::Config(format!("unknown field kind `{other}`"))),
        }
    }
}

/// Complex envelope sampled on a grid. The physical field is
/// `values(x) * exp(i carrier x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
    pub carrier: f64,
    pub kind: FieldKind,
}

impl ComplexField {
    pub fn zeros(grid: Grid1D, carrier: f64, kind: FieldKind) -> ComplexField {
        ComplexField { grid, values: vec![Complex64::new(0.0, 0.0); grid.n], carrier, kind }
    }

    pub fn from_fn(
        grid: Grid1D,
        carrier: f64,
        kind: FieldKind,
        f: impl Fn(f64) -> Complex64,
    ) -> ComplexField {
        ComplexField { grid, values: grid.xs().map(f).collect(), carrier, kind }
    }

    /// `sum |f|^2 dx`
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn peak_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Density-weighted mean position; `None` for an empty field.
    pub fn centroid(&self) -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for (x, v) in self.grid.xs().zip(&self.values) {
            let w = v.norm_sqr();
            num += w * x;
            den += w;
        }
        (den > 0.0).then(|| num / den)
    }

    pub fn scaled(&self, alpha: Complex64) -> ComplexField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn is_compatible(&self, other: &ComplexField) -> bool {
        self.grid == other.grid && self.kind == other.kind && self.carrier == other.carrier
    }

    fn check_compatible(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::FieldMismatch(format!("grids differ: {:?} vs {:?}", self.grid, other.grid)));
        }
        if self.kind != other.kind || self.carrier != other.carrier {
            return Err(Error::FieldMismatch(format!(
                "{} (carrier {}) vs {} (carrier {})",
                self.kind, self.carrier, other.kind, other.carrier
            )));
        }
        Ok(())
    }

    /// Unitary spectrum: `sum |F|^2 == sum |f|^2`.
    pub fn spectrum(&self, ws: &mut SpectralWorkspace) -> Vec<Complex64> {
        let mut data = self.values.clone();
        ws.forward(&mut data);
        data
    }

    pub fn from_spectrum(
        grid: Grid1D,
        mut spectrum: Vec<Complex64>,
        carrier: f64,
        kind: FieldKind,
        ws: &mut SpectralWorkspace,
    ) -> ComplexField {
        ws.inverse(&mut spectrum);
        ComplexField { grid, values: spectrum, carrier, kind }
    }
}

/// `sum conj(f) g dx`, the discrete `int f* g dx`.
pub fn inner_product(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.check_compatible(g)?;
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * f.grid.dx())
}

/// Gaussian envelope `exp(-(x - center)^2 / (2 width^2))`, normalized so the
/// squared norm equals `amplitude^2`.
pub fn gaussian_envelope(
    grid: &Grid1D,
    center: f64,
    width: f64,
    amplitude: f64,
    carrier: f64,
    kind: FieldKind,
) -> Result<ComplexField> {
    if !(width > 3.0 * grid.dx()) {
        return Err(Error::InvalidParameter {
            name: "width",
            reason: format!("width {width} under-resolved by dx = {}", grid.dx()),
        });
    }
    // exp(-d^2/(2 w^2)) < 1e-10 at both ends
    let clearance = width * (2.0 * 1e10f64.ln()).sqrt();
    if center - grid.x_min < clearance || grid.x_max - center < clearance {
        return Err(Error::InvalidParameter {
            name: "center",
            reason: format!("pulse at {center} with width {width} does not fit inside the domain"),
        });
    }
    let mut f = ComplexField::from_fn(*grid, carrier, kind, |x| {
        let u = (x - center) / width;
        Complex64::new((-0.5 * u * u).exp(), 0.0)
    });
    let norm = f.norm();
    f.values.iter_mut().for_each(|v| *v *= amplitude / norm);
    Ok(f)
}

/// `f(x - shift)` by a spectral phase ramp; exact for band-limited periodic fields.
pub fn translate_field(f: &ComplexField, shift: f64, ws: &mut SpectralWorkspace) -> ComplexField {
    let mut spec = f.spectrum(ws);
    for (i, s) in spec.iter_mut().enumerate() {
        *s *= Complex64::from_polar(1.0, -f.grid.k(i) * shift);
    }
    ComplexField::from_spectrum(f.grid, spec, f.carrier, f.kind, ws)
}

/// Cached forward/inverse FFT plans for one transform length.
///
/// Both directions are scaled by `1/sqrt(n)` so the transform is unitary.
pub struct SpectralWorkspace {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    scale: f64,
}

impl SpectralWorkspace {
    pub fn new(n: usize) -> SpectralWorkspace {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        SpectralWorkspace {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "transform length mismatch");
        self.forward.process_with_scratch(data, &mut self.scratch);
        data.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "transform length mismatch");
        self.inverse.process_with_scratch(data, &mut self.scratch);
        data.iter_mut().for_each(|v| *v *= self.scale);
    }
}

impl fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralWorkspace").field("n", &self.n).finish()
    }
}
