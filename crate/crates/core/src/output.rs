//! CSV, JSON and SVG emission for transfer runs, sweeps and loss reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metrics::TransferResult;
use crate::scenario::{Fig3Result, LossReport, Scenario, SweepReport};
use crate::snapshot::{save_state, write_fields_csv};

/// Version written in the first column of every results CSV.
pub const CSV_FORMAT_VERSION: u32 = 1;

/// Columns of a sweep CSV.
pub const SWEEP_CSV_HEADER: [&str; 14] = [
    "format_version",
    "sweep",
    "parameter",
    "beta_abs",
    "eta",
    "T_X",
    "T_Y",
    "T_q",
    "Vcv_X",
    "Vcv_Y",
    "V_q",
    "translation_m",
    "converged",
    "error",
];

/// JSON schema of [`TransferResult`].
pub const TRANSFER_SCHEMA: &str = include_str!("../schema/transfer_result.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
    #[default]
    All,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::All)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::All)
    }

    pub fn svg(self) -> bool {
        matches!(self, OutputFormat::Svg | OutputFormat::All)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            "all" => Ok(OutputFormat::All),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

/// Sweep rows, one per point, in the order given.
pub fn sweep_csv(reports: &[SweepReport]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(SWEEP_CSV_HEADER).map_err(csv_error)?;
    for report in reports {
        for p in &report.points {
            let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let r = p.result.as_ref();
            w.write_record([
                CSV_FORMAT_VERSION.to_string(),
                report.parameter.as_str().to_string(),
                p.parameter.to_string(),
                num(r.map(|r| r.beta_abs)),
                num(r.map(|r| r.eta)),
                num(r.map(|r| r.t_x)),
                num(r.map(|r| r.t_y)),
                num(r.map(|r| r.t_q)),
                num(r.map(|r| r.vcv_x)),
                num(r.map(|r| r.vcv_y)),
                num(r.map(|r| r.v_q)),
                num(r.map(|r| r.translation_m)),
                p.converged.to_string(),
                p.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// One transfer result as a single-row CSV.
pub fn transfer_csv(label: &str, value: f64, r: &TransferResult, converged: bool) -> Result<String> {
    let report = SweepReport {
        parameter: crate::scenario::SweepParameter::RabiRatio,
        points: vec![crate::scenario::SweepPointResult {
            parameter: value,
            result: Some(*r),
            error: None,
            wall_time: 0.0,
            converged,
        }],
    };
    Ok(sweep_csv(&[report])?.replace(",rabi-ratio,", &format!(",{label},")))
}

/// Checks a JSON value against the shipped [`TransferResult`] schema:
/// required keys, no extra keys, numeric types and bounds.
pub fn validate_transfer_json(value: &Value) -> Result<()> {
    let schema: Value = serde_json::from_str(TRANSFER_SCHEMA)?;
    let bad = |msg: String| Error::Serialization(format!("schema violation: {msg}"));
    let obj = value.as_object().ok_or_else(|| bad("not an object".into()))?;
    let props = schema["properties"].as_object().expect("schema lists properties");
    for key in schema["required"].as_array().expect("schema lists required keys") {
        let key = key.as_str().expect("string key");
        if !obj.contains_key(key) {
            return Err(bad(format!("missing `{key}`")));
        }
    }
    for (key, v) in obj {
        let rule = props.get(key).ok_or_else(|| bad(format!("unexpected key `{key}`")))?;
        let x = v.as_f64().ok_or_else(|| bad(format!("`{key}` is not a number")))?;
        if let Some(min) = rule.get("minimum").and_then(Value::as_f64) {
            if x < min {
                return Err(bad(format!("`{key}` = {x} below {min}")));
            }
        }
        if let Some(max) = rule.get("maximum").and_then(Value::as_f64) {
            if x > max {
                return Err(bad(format!("`{key}` = {x} above {max}")));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Fig3Summary<'a> {
    format_version: u32,
    scenario: &'a str,
    transfer: &'a TransferResult,
    eta_channel: f64,
    projection_flat: bool,
    mode_total: f64,
    outflow: f64,
    final_centroid_m: f64,
    x_recv_m: f64,
    steps: usize,
    dt_s: f64,
    converged: bool,
    snapshot_times_s: Vec<f64>,
}

/// Writes the transfer run: summary JSON, result and snapshot CSVs, the
/// final state for resuming, and the density plot.
pub fn emit_fig3(result: &Fig3Result, scenario: &Scenario, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    let t0 = result.sim.scaling.t0;
    if format.json() {
        let summary = Fig3Summary {
            format_version: CSV_FORMAT_VERSION,
            scenario: scenario.name.as_str(),
            transfer: &result.transfer,
            eta_channel: result.eta_channel,
            projection_flat: result.projection_flat,
            mode_total: result.mode_total,
            outflow: result.outflow,
            final_centroid_m: result.final_centroid,
            x_recv_m: scenario.physical.trap.x_recv,
            steps: result.steps,
            dt_s: result.dt,
            converged: result.converged(),
            snapshot_times_s: result.snapshots.iter().map(|s| s.state.t * t0).collect(),
        };
        let text = serde_json::to_string_pretty(&summary)?;
        written.push(write_file(&dir.join("fig3_summary.json"), text.as_bytes())?);
        let text = serde_json::to_string_pretty(&result.transfer)?;
        written.push(write_file(&dir.join("transfer_result.json"), text.as_bytes())?);
    }
    if format.csv() {
        let text = transfer_csv(scenario.name.as_str(), 1.0, &result.transfer, result.converged())?;
        written.push(write_file(&dir.join("transfer_result.csv"), text.as_bytes())?);
        let path = dir.join("fig3_snapshots.csv");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut rows = Vec::new();
        for s in &result.snapshots {
            rows.push((&s.state.psi, s.state.t * t0));
            rows.push((&s.state.e, s.state.t * t0));
        }
        write_fields_csv(std::io::BufWriter::new(file), &rows, true)?;
        written.push(path);
        let path = dir.join("final_state.bin");
        save_state(&path, &result.final_state, scenario.name.as_str(), result.outflow, result.excited_integral)?;
        written.push(path);
    }
    if format.svg() {
        written.push(write_file(&dir.join("fig3.svg"), fig3_svg(result).as_bytes())?);
    }
    Ok(written)
}

/// Writes all sweeps of one invocation: a combined CSV and JSON and the T-V
/// scatter with one series per sweep.
pub fn emit_sweeps(reports: &[SweepReport], dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    if format.csv() {
        written.push(write_file(&dir.join("sweep.csv"), sweep_csv(reports)?.as_bytes())?);
    }
    if format.json() {
        let text = serde_json::to_string_pretty(&serde_json::json!({
            "format_version": CSV_FORMAT_VERSION,
            "sweeps": reports,
        }))?;
        written.push(write_file(&dir.join("sweep.json"), text.as_bytes())?);
    }
    if format.svg() {
        written.push(write_file(&dir.join("tv_plane.svg"), tv_svg(reports).as_bytes())?);
    }
    Ok(written)
}

/// Human-readable loss table.
pub fn loss_table(report: &LossReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "spontaneous emission (|Omega23/Delta| = {:.4e})", report.mixing);
    let _ = writeln!(s, "  {:<10} {:>12} {:>12} {:>12} {:>12} {:>12}", "form", "gamma_sp/s", "N3", "L_sp", "eta_loss", "efficiency");
    for b in std::iter::once(&report.bound).chain(report.integral.as_ref()) {
        let form = match b.form {
            crate::losses::LossForm::Bound => "bound",
            crate::losses::LossForm::Integral => "integral",
        };
        let _ = writeln!(
            s,
            "  {:<10} {:>12.4e} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
            form, b.gamma_sp, b.n3_bar, b.l_sp, b.eta_loss, b.efficiency
        );
    }
    let _ = writeln!(s, "phase diffusion");
    let _ = writeln!(s, "  {:<10} {:>12} {:>12} {:>14}", "species", "t_coh/s", "rate/s^-1", "distance/mm");
    for c in &report.coherence {
        let _ = writeln!(s, "  {:<10} {:>12.4e} {:>12.4e} {:>14.4}", c.species, c.t_coh, c.rate, c.travel_distance * 1e3);
    }
    s
}

pub fn emit_losses(report: &LossReport, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    if format.json() {
        let text = serde_json::to_string_pretty(report)?;
        written.push(write_file(&dir.join("losses.json"), text.as_bytes())?);
    }
    if format.csv() {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(["format_version", "quantity", "label", "value"]).map_err(csv_error)?;
        let mut row = |q: &str, label: &str, v: f64| {
            w.write_record([CSV_FORMAT_VERSION.to_string(), q.into(), label.into(), v.to_string()]).map_err(csv_error)
        };
        for (label, b) in std::iter::once(("bound", &report.bound)).chain(report.integral.as_ref().map(|b| ("integral", b))) {
            row("gamma_sp", label, b.gamma_sp)?;
            row("n3_bar", label, b.n3_bar)?;
            row("l_sp", label, b.l_sp)?;
            row("eta_loss", label, b.eta_loss)?;
            row("efficiency", label, b.efficiency)?;
        }
        for c in &report.coherence {
            row("t_coh_s", &c.species, c.t_coh)?;
            row("travel_distance_m", &c.species, c.travel_distance)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        written.push(write_file(&dir.join("losses.csv"), &bytes)?);
    }
    written.push(write_file(&dir.join("losses.txt"), loss_table(report).as_bytes())?);
    Ok(written)
}

/// Minimal SVG canvas with one or more stacked panels.
struct Canvas {
    body: String,
    width: f64,
    height: f64,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Panel {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

impl Canvas {
    fn new(width: f64, height: f64) -> Canvas {
        Canvas { body: String::new(), width, height }
    }

    fn axes(&mut self, p: &Panel, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            self.body,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            p.left, p.top, p.width, p.height
        );
        for t in ticks(p.x.0, p.x.1) {
            let x = p.px(t);
            let y = p.top + p.height;
            let _ = writeln!(
                self.body,
                r##"<line x1="{x:.1}" y1="{y:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
                y + 4.0,
                y + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(p.y.0, p.y.1) {
            let y = p.py(t);
            let _ = writeln!(
                self.body,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
                p.left - 4.0,
                p.left,
                p.left - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            p.left + p.width / 2.0,
            p.top + p.height + 32.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            p.left - 44.0,
            p.top + p.height / 2.0,
            p.left - 44.0,
            p.top + p.height / 2.0,
            escape(ylabel)
        );
    }

    fn polyline(&mut self, p: &Panel, pts: &[(f64, f64)], color: &str, dash: Option<&str>) {
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", p.px(*x), p.py(y.clamp(p.y.0, p.y.1)));
        }
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"{dash}/>"#,
            d.trim_end()
        );
    }

    fn marker(&mut self, p: &Panel, x: f64, y: f64, color: &str, shape: usize) {
        let (cx, cy) = (p.px(x), p.py(y));
        if shape % 2 == 0 {
            let _ = writeln!(
                self.body,
                r#"<path d="M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} Z" fill="{color}"/>"#,
                cx,
                cy - 4.0,
                cx + 4.0,
                cy,
                cx,
                cy + 4.0,
                cx - 4.0,
                cy
            );
        } else {
            let _ = writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="{color}"/>"#);
        }
    }

    fn text(&mut self, x: f64, y: f64, size: f64, s: &str, color: &str) {
        let _ = writeln!(self.body, r#"<text x="{x:.1}" y="{y:.1}" font-size="{size}" fill="{color}">{}</text>"#, escape(s));
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Reduces a profile to at most `bins` points, keeping each bin's maximum so
/// narrow peaks survive.
fn decimate(xs: &[f64], ys: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let n = xs.len();
    if n <= bins {
        return xs.iter().copied().zip(ys.iter().copied()).collect();
    }
    let per = n.div_ceil(bins);
    (0..n)
        .step_by(per)
        .map(|i| {
            let end = (i + per).min(n);
            let y = ys[i..end].iter().copied().fold(f64::MIN, f64::max);
            (xs[i + (end - i) / 2], y)
        })
        .collect()
}

/// Density profiles of every snapshot. The beam is magnified by 1000 and the
/// probe photon density by `1000 c/v`, so a probe carrying the same flux as
/// the beam shows at the same height.
pub fn fig3_svg(result: &Fig3Result) -> String {
    let sim = &result.sim;
    let x0_um = sim.scaling.x0 * 1e6;
    let panels = result.snapshots.len().max(1);
    let (w, ph) = (900.0, 170.0);
    let mut c = Canvas::new(w, 60.0 + panels as f64 * (ph + 50.0));
    c.text(70.0, 24.0, 14.0, "Atom-light-atom transfer: densities per micrometre", "#000");
    let legend = [
        ("condensates", COLORS[2]),
        ("beam x 1000", COLORS[0]),
        ("probe x 1000 mc/2hk0", COLORS[1]),
    ];
    for (i, (name, color)) in legend.iter().enumerate() {
        c.text(420.0 + 130.0 * i as f64, 24.0, 11.0, name, color);
    }
    let pad = 10.0 * sim.pulse_width;
    let lo = sim.x_send.min(sim.pulse_center) - pad;
    let hi = sim.x_recv + pad;
    for (k, snap) in result.snapshots.iter().enumerate() {
        let s = &snap.state;
        let grid = s.grid();
        let idx: Vec<usize> = (0..grid.n).filter(|&i| grid.x(i) >= lo && grid.x(i) <= hi).collect();
        let xs: Vec<f64> = idx.iter().map(|&i| grid.x(i) * sim.scaling.x0 * 1e3).collect();
        let density = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { idx.iter().map(|&i| f(i) / x0_um).collect() };
        let cond = density(&|i| s.phi_send.values[i].norm_sqr() + s.phi_recv.values[i].norm_sqr());
        let beam = density(&|i| 1e3 * s.psi.values[i].norm_sqr());
        let probe = density(&|i| 1e3 * result.probe_speed / sim.velocity * s.e.values[i].norm_sqr());
        let ymax = cond.iter().chain(&beam).chain(&probe).copied().fold(0.0, f64::max).max(1e-300) * 1.05;
        let panel = Panel {
            left: 80.0,
            top: 50.0 + k as f64 * (ph + 50.0),
            width: w - 110.0,
            height: ph,
            x: (lo * sim.scaling.x0 * 1e3, hi * sim.scaling.x0 * 1e3),
            y: (0.0, ymax),
        };
        c.axes(&panel, "x (mm)", "atoms / um");
        for (ys, color) in [(&cond, COLORS[2]), (&beam, COLORS[0]), (&probe, COLORS[1])] {
            c.polyline(&panel, &decimate(&xs, ys, 1500), color, None);
        }
        let label = format!("t = {:.3} ms", s.t * sim.scaling.t0 * 1e3);
        c.text(panel.left + 8.0, panel.top + 16.0, 12.0, &label, "#000");
    }
    c.finish()
}

/// Signal transfer against noise correlation, one series per sweep, with the
/// `T_q = 1` and `V_q = 1` guides bounding the quantum region.
pub fn tv_svg(reports: &[SweepReport]) -> String {
    let mut c = Canvas::new(640.0, 560.0);
    let panel = Panel { left: 80.0, top: 50.0, width: 500.0, height: 440.0, x: (0.0, 2.0), y: (0.0, 2.0) };
    c.text(80.0, 30.0, 14.0, "T-V plane", "#000");
    c.axes(&panel, "T_q", "V_q");
    c.polyline(&panel, &[(1.0, 0.0), (1.0, 2.0)], "#888", Some("5,4"));
    c.polyline(&panel, &[(0.0, 1.0), (2.0, 1.0)], "#888", Some("5,4"));
    c.text(panel.px(1.55), panel.py(0.08), 11.0, "T_q > 1, V_q < 1", "#555");
    for (k, report) in reports.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(c.body, r#"<g class="series" data-sweep="{}">"#, report.parameter.as_str());
        for p in &report.points {
            if let Some(r) = &p.result {
                c.marker(&panel, r.t_q.clamp(0.0, 2.0), r.v_q.clamp(0.0, 2.0), color, k);
            }
        }
        c.body.push_str("</g>\n");
        c.text(panel.left + panel.width - 150.0, panel.top + 20.0 + 16.0 * k as f64, 11.0, report.parameter.as_str(), color);
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{transfer_metrics, GaussianMode};
    use crate::scenario::{SweepParameter, SweepPointResult};

    fn report(parameter: SweepParameter, n: usize) -> SweepReport {
        let input = GaussianMode::displaced(5000.0, 0.14, 7.39).unwrap();
        SweepReport {
            parameter,
            points: (0..n)
                .map(|i| SweepPointResult {
                    parameter: i as f64,
                    result: Some(transfer_metrics(&input, 0.9 + 0.01 * i as f64).unwrap()),
                    error: None,
                    wall_time: 1.0,
                    converged: true,
                })
                .collect(),
        }
    }

    #[test]
    fn empty_sweep_csv_has_header() {
        let text = sweep_csv(&[]).unwrap();
        assert_eq!(text.trim_end(), SWEEP_CSV_HEADER.join(","));
    }

    #[test]
    fn sweep_csv_rows_and_errors() {
        let mut r = report(SweepParameter::RabiRatio, 3);
        r.points[1].result = None;
        r.points[1].error = Some("guard, tripped".into());
        let text = sweep_csv(&[r]).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].len(), SWEEP_CSV_HEADER.len());
        assert_eq!(&rows[1][13], "guard, tripped");
        assert_eq!(&rows[1][7], "");
        assert_eq!(&rows[0][0], "1");
    }

    #[test]
    fn transfer_json_matches_schema() {
        let r = report(SweepParameter::RabiRatio, 1).points[0].result.unwrap();
        let v = serde_json::to_value(r).unwrap();
        validate_transfer_json(&v).unwrap();
        let back: TransferResult = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, r);
        let mut extra = v.clone();
        extra["beta"] = 1.0.into();
        assert!(validate_transfer_json(&extra).is_err());
        let mut missing = v.clone();
        missing.as_object_mut().unwrap().remove("V_q");
        assert!(validate_transfer_json(&missing).is_err());
        let mut out_of_range = v;
        out_of_range["T_q"] = 2.5.into();
        assert!(validate_transfer_json(&out_of_range).is_err());
    }

    #[test]
    fn tv_plot_has_one_series_per_sweep_and_guides() {
        let svg = tv_svg(&[report(SweepParameter::RabiRatio, 4), report(SweepParameter::NumberImbalance, 5)]);
        assert_eq!(svg.matches(r#"class="series""#).count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(!svg.contains("href"));
        assert!(svg.starts_with("<?xml"));
    }

    #[test]
    fn decimation_keeps_peaks() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        let mut ys = vec![0.0; 10_000];
        ys[4321] = 7.0;
        let d = decimate(&xs, &ys, 100);
        assert!(d.len() <= 100);
        assert_eq!(d.iter().map(|p| p.1).fold(0.0, f64::max), 7.0);
    }

    #[test]
    fn format_flags() {
        assert!(OutputFormat::All.csv() && OutputFormat::All.svg() && OutputFormat::All.json());
        assert!(!OutputFormat::Csv.json());
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
