//! File formats: state containers, CSV tables and fixed-precision JSON.

use std::fs;
use std::path::Path;

use cvloop_core::linalg::CMatrix;
use cvloop_core::scheduler::{ControlSchedule, DetectorRole};
use cvloop_core::tomography::{QuadratureDataset, QuadratureGroup};
use cvloop_core::FockState;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

pub const STATE_FORMAT: &str = "cvloop-fock-state";

/// Self-describing density matrix: row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateContainer {
    pub format: String,
    pub version: u32,
    pub convention: String,
    pub dims: Vec<usize>,
    pub data: Vec<[f64; 2]>,
}

impl StateContainer {
    pub fn from_state(state: &FockState) -> Self {
        let m = state.matrix();
        let n = m.nrows();
        let data = (0..n).flat_map(|i| (0..n).map(move |j| [m[(i, j)].re, m[(i, j)].im])).collect();
        Self { format: STATE_FORMAT.into(), version: 1, convention: "hbar=1".into(), dims: state.dims().to_vec(), data }
    }

    pub fn to_state(&self) -> std::result::Result<FockState, String> {
        if self.format != STATE_FORMAT || self.version != 1 {
            return Err(format!("unsupported container {} v{}", self.format, self.version));
        }
        if self.convention != "hbar=1" {
            return Err(format!("unsupported convention `{}`", self.convention));
        }
        let n: usize = self.dims.iter().product();
        if self.dims.is_empty() || self.data.len() != n * n {
            return Err(format!("{} entries for dims {:?}", self.data.len(), self.dims));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.data[i * n + j];
            Complex64::new(re, im)
        });
        FockState::from_matrix(self.dims.clone(), m).map_err(|e| e.to_string())
    }
}

pub fn write_state(path: &Path, state: &FockState) -> Result<()> {
    write_json(path, &StateContainer::from_state(state))
}

pub fn read_state(path: &Path) -> Result<FockState> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let c: StateContainer = serde_json::from_str(&text)?;
    c.to_state().map_err(|reason| CliError::Format { path: path.display().to_string(), reason })
}

/// Rounds every float in `v` to `digits` decimals so reruns compare byte for byte.
pub fn round_floats(v: &mut Value, digits: i32) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                let s = 10f64.powi(digits);
                let r = (x * s).round() / s;
                // Normalise −0.
                let r = if r == 0.0 { 0.0 } else { r };
                *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_floats(x, digits)),
        Value::Object(o) => o.values_mut().for_each(|x| round_floats(x, digits)),
        _ => {}
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `value` with all floats rounded to four decimals.
pub fn write_report<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v, 4);
    write_json(path, &v)
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Reader::from_reader(f))
}

fn format_err(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Format { path: path.display().to_string(), reason: reason.into() }
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    phase_deg: f64,
    sample: f64,
}

/// One row per sample: `phase_deg,sample`.
pub fn write_dataset_csv(path: &Path, data: &QuadratureDataset) -> Result<()> {
    let mut w = writer(path)?;
    for g in &data.groups {
        for &x in &g.samples {
            w.serialize(SampleRow { phase_deg: g.phase.to_degrees(), sample: x })?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Groups rows by phase in order of first appearance.
pub fn read_dataset_csv(path: &Path, seed: u64) -> Result<QuadratureDataset> {
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for row in reader(path)?.deserialize() {
        let r: SampleRow = row?;
        if !r.phase_deg.is_finite() || !r.sample.is_finite() {
            return Err(format_err(path, "non-finite value"));
        }
        match groups.iter_mut().find(|g| g.0 == r.phase_deg) {
            Some(g) => g.1.push(r.sample),
            None => groups.push((r.phase_deg, vec![r.sample])),
        }
    }
    let data = QuadratureDataset {
        groups: groups.into_iter().map(|(p, samples)| QuadratureGroup { phase: p.to_radians(), samples }).collect(),
        seed,
        source: path.display().to_string(),
    };
    data.validate().map_err(|e| format_err(path, e.to_string()))?;
    Ok(data)
}

#[derive(Serialize, Deserialize)]
struct TimeRow {
    window: usize,
    t_ns: f64,
    value: f64,
}

/// Homodyne records, one row per bin: `window,t_ns,value`.
pub fn write_timeseries_csv(path: &Path, windows: &[(Vec<f64>, Vec<f64>)]) -> Result<()> {
    let mut w = writer(path)?;
    for (k, (ts, xs)) in windows.iter().enumerate() {
        for (&t, &x) in ts.iter().zip(xs) {
            w.serialize(TimeRow { window: k, t_ns: t * 1e9, value: x })?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads records back as (bin times in seconds, windows). Every window must
/// share the same equally spaced times.
pub fn read_timeseries_csv(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut times: Vec<f64> = Vec::new();
    let mut windows: Vec<Vec<f64>> = Vec::new();
    let mut current = None;
    for row in reader(path)?.deserialize() {
        let r: TimeRow = row?;
        if current != Some(r.window) {
            if current.is_some_and(|c| r.window <= c) {
                return Err(format_err(path, "window indices must increase"));
            }
            current = Some(r.window);
            windows.push(Vec::new());
        }
        let first = windows.len() == 1;
        let w = windows.last_mut().expect("pushed above");
        if first {
            times.push(r.t_ns * 1e-9);
        } else if w.len() >= times.len() || (times[w.len()] - r.t_ns * 1e-9).abs() > 1e-15 {
            return Err(format_err(path, format!("window {} does not match the first window's times", r.window)));
        }
        w.push(r.value);
    }
    if windows.is_empty() || times.len() < 2 {
        return Err(format_err(path, "need at least one window of two bins"));
    }
    if windows.iter().any(|w| w.len() != times.len()) {
        return Err(format_err(path, "windows differ in length"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|p| ((p[1] - p[0]) - dt).abs() > 1e-6 * dt) {
        return Err(format_err(path, "bins are not equally spaced"));
    }
    Ok((times, windows))
}

#[derive(Serialize)]
struct ScheduleRow {
    bin: usize,
    time_ns: f64,
    vbs_reflectivity: f64,
    switch: String,
    input: String,
    detector: &'static str,
    phi_deg: Option<f64>,
    gain: Option<f64>,
    variant: Option<String>,
    settle_ns: Option<f64>,
}

/// Serialized name of a unit variant.
fn snake<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::from("unknown"),
    }
}

pub fn write_schedule_csv(path: &Path, sched: &ControlSchedule) -> Result<()> {
    let mut w = writer(path)?;
    for e in &sched.entries {
        let (detector, phi_deg, gain) = match e.detector {
            DetectorRole::Idle => ("idle", None, None),
            DetectorRole::Feedforward { phi_deg, gain } => ("feedforward", Some(phi_deg), Some(gain)),
            DetectorRole::Characterize => ("characterize", None, None),
        };
        w.serialize(ScheduleRow {
            bin: e.bin,
            time_ns: e.time_ns,
            vbs_reflectivity: e.vbs_reflectivity,
            switch: snake(&e.switch),
            input: snake(&e.input),
            detector,
            phi_deg,
            gain,
            variant: e.variant.as_ref().map(snake),
            settle_ns: e.settle_ns,
        })?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `x,p,w` rows, x varying slowest.
pub fn write_wigner_csv(path: &Path, xs: &[f64], ps: &[f64], w: &[Vec<f64>]) -> Result<()> {
    let mut out = writer(path)?;
    out.write_record(["x", "p", "w"])?;
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            out.write_record([format!("{x:.4}"), format!("{p:.4}"), format!("{:.6}", w[i][j])])?;
        }
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Header-first CSV of string cells.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut out = writer(path)?;
    out.write_record(header)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}
