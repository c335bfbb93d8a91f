//! Field snapshot export: long-form CSV and a bit-exact binary state file.
//!
//! CSV rows are `x,Re,Im,carrier,kind,time`, one per grid point per field.
//! The binary file is `ATOMXFER` magic, a little-endian `u32` format version,
//! a `u64` header length, a JSON header, then every field as little-endian
//! `f64` pairs in the order psi, E, phi_send, phi_recv.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::SystemState;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, FieldKind, Grid1D};

pub const CSV_HEADER: [&str; 6] = ["x", "Re", "Im", "carrier", "kind", "time"];
const MAGIC: &[u8; 8] = b"ATOMXFER";
pub const FORMAT_VERSION: u32 = 1;

/// Writes fields captured at `time` as CSV rows; the header is written when
/// `header` is set.
pub fn write_fields_csv<W: Write>(out: W, fields: &[(&ComplexField, f64)], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let csv_err = |e: csv::Error| Error::Serialization(e.to_string());
    if header {
        w.write_record(CSV_HEADER).map_err(csv_err)?;
    }
    for (field, time) in fields {
        let kind = field.kind.as_str();
        let carrier = field.carrier.to_string();
        let time = time.to_string();
        for (i, v) in field.values.iter().enumerate() {
            let x = field.grid.x(i).to_string();
            w.write_record([x.as_str(), &v.re.to_string(), &v.im.to_string(), &carrier, kind, &time]).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

/// Reads CSV rows back into fields, grouping consecutive rows that share
/// kind and time. Grids are rebuilt from the first two `x` values.
pub fn read_fields_csv<R: Read>(input: R) -> Result<Vec<(ComplexField, f64)>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let bad = |reason: String| Error::Snapshot { path: "<csv>".into(), reason };
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(bad(format!("unexpected header {headers:?}")));
    }
    struct Group {
        xs: Vec<f64>,
        values: Vec<Complex64>,
        carrier: f64,
        kind: FieldKind,
        time: f64,
    }
    let mut groups: Vec<Group> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| bad(format!("column {}: {e}", CSV_HEADER[i])))
        };
        let kind: FieldKind = rec[4].parse().map_err(|_| bad(format!("unknown field kind `{}`", &rec[4])))?;
        let (x, re, im, carrier, time) = (num(0)?, num(1)?, num(2)?, num(3)?, num(5)?);
        match groups.last_mut() {
            Some(g) if g.kind == kind && g.time == time && g.carrier == carrier => {
                g.xs.push(x);
                g.values.push(Complex64::new(re, im));
            }
            _ => groups.push(Group { xs: vec![x], values: vec![Complex64::new(re, im)], carrier, kind, time }),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let n = g.xs.len();
            if n < 2 {
                return Err(bad("a field needs at least two rows".into()));
            }
            let dx = g.xs[1] - g.xs[0];
            let grid = Grid1D::new(g.xs[0], g.xs[0] + dx * n as f64, n)?;
            Ok((ComplexField { grid, values: g.values, carrier: g.carrier, kind: g.kind }, g.time))
        })
        .collect()
}

/// Run bookkeeping stored next to the fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateHeader {
    pub label: String,
    pub grid: Grid1D,
    pub t: f64,
    pub outflow: f64,
    pub excited_integral: f64,
    pub carriers: [f64; 4],
}

pub fn save_state(path: &Path, state: &SystemState, label: &str, outflow: f64, excited_integral: f64) -> Result<()> {
    let fields = [&state.psi, &state.e, &state.phi_send, &state.phi_recv];
    let header = StateHeader {
        label: label.to_string(),
        grid: *state.grid(),
        t: state.t,
        outflow,
        excited_integral,
        carriers: fields.map(|f| f.carrier),
    };
    let json = serde_json::to_vec(&header)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    write(MAGIC)?;
    write(&FORMAT_VERSION.to_le_bytes())?;
    write(&(json.len() as u64).to_le_bytes())?;
    write(&json)?;
    for f in fields {
        for v in &f.values {
            write(&v.re.to_le_bytes())?;
            write(&v.im.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_state(path: &Path) -> Result<(SystemState, StateHeader)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |reason: &str| Error::Snapshot { path: path.to_path_buf(), reason: reason.into() };
    let mut read = |buf: &mut [u8]| r.read_exact(buf).map_err(|e| Error::io(path, e));
    let mut magic = [0u8; 8];
    read(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not an atomxfer state file"));
    }
    let mut word = [0u8; 4];
    read(&mut word)?;
    if u32::from_le_bytes(word) != FORMAT_VERSION {
        return Err(bad("unsupported format version"));
    }
    let mut len = [0u8; 8];
    read(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 20 {
        return Err(bad("header too large"));
    }
    let mut json = vec![0u8; len as usize];
    read(&mut json)?;
    let header: StateHeader = serde_json::from_slice(&json).map_err(|e| bad(&e.to_string()))?;
    let grid = Grid1D::new(header.grid.x_min, header.grid.x_max, header.grid.n).map_err(|_| bad("invalid grid"))?;
    let kinds = [FieldKind::AtomicBeam, FieldKind::OpticalProbe, FieldKind::Condensate, FieldKind::Condensate];
    let mut fields = Vec::with_capacity(4);
    let mut pair = [0u8; 16];
    for (kind, carrier) in kinds.into_iter().zip(header.carriers) {
        let mut values = Vec::with_capacity(grid.n);
        for _ in 0..grid.n {
            read(&mut pair)?;
            let re = f64::from_le_bytes(pair[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(pair[8..].try_into().expect("8 bytes"));
            values.push(Complex64::new(re, im));
        }
        fields.push(ComplexField { grid, values, carrier, kind });
    }
    if r.read(&mut [0u8; 1]).map_err(|e| Error::io(path, e))? != 0 {
        return Err(bad("trailing bytes"));
    }
    let mut it = fields.into_iter();
    let mut next = || it.next().expect("four fields");
    let state = SystemState { psi: next(), e: next(), phi_send: next(), phi_recv: next(), t: header.t };
    Ok((state, header))
}
