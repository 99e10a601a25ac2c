//! Grid sweeps with parallel evaluation, resumable persistence and CSV/JSON output.
//!
//! Cells are ordered row-major by axis declaration order: the last axis
//! varies fastest. Work is done in chunks of [`CHUNK`] cells; after each
//! chunk the finished records are appended to `<out>.partial` so an
//! interrupted run can pick up where it stopped.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bistability::{cell_summary, folds_at, Frame, PowerFolds, ScanOptions};
use crate::entanglement::{entangle, EntanglementOptions};
use crate::error::{Error, SolverError};
use crate::gain_medium::gain_coefficients;
use crate::params::{temperature_for_occupation, ParamError, SystemParams};

/// Cells evaluated between partial-file flushes.
pub const CHUNK: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub path: String,
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub scale: Scale,
}

impl Axis {
    pub fn linear(path: &str, start: f64, end: f64, count: usize) -> Self {
        Axis {
            path: path.to_string(),
            start,
            end,
            count,
            scale: Scale::Linear,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.start + (self.end - self.start) * t,
                    Scale::Log => (self.start.ln() + (self.end.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evaluator {
    Bistability {
        frame: Frame,
        /// Drive ratio for the coupled frame; falls back to `cavity.mu`.
        mu: Option<f64>,
        scan_points: usize,
    },
    Entanglement {
        paper_literal_d: bool,
    },
    XiTable,
}

impl Evaluator {
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Evaluator::Bistability { .. } => &[
                "delta0_rad_s",
                "P_W",
                "n_roots",
                "I1_low",
                "I1_high",
                "fold_P_low",
                "fold_P_high",
                "topology",
            ],
            Evaluator::Entanglement { .. } => &[
                "axis1", "axis2", "stable", "E_N", "Lambda", "Gamma1", "Gamma2", "G12", "G21",
            ],
            Evaluator::XiTable => &[
                "axis1", "axis2", "xi11_re", "xi11_im", "xi12_re", "xi12_im", "xi21_re", "xi21_im", "xi22_re",
                "xi22_im",
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub evaluator: Evaluator,
    pub base: SystemParams,
    /// Worker threads; 1 runs on the calling thread.
    #[serde(skip, default = "one")]
    pub parallelism: usize,
}

fn one() -> usize {
    1
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.axes.is_empty() {
            return Err(Error::Spec("at least one axis is required".into()));
        }
        for a in &self.axes {
            if a.count < 2 {
                return Err(Error::Spec(format!("axis `{}` needs count >= 2", a.path)));
            }
            if !a.start.is_finite() || !a.end.is_finite() {
                return Err(Error::Spec(format!("axis `{}` has a non-finite bound", a.path)));
            }
            if a.scale == Scale::Log && (a.start <= 0.0 || a.end <= 0.0) {
                return Err(Error::Spec(format!("log axis `{}` must be strictly positive", a.path)));
            }
            let mut probe = self.base.clone();
            apply_axis(&mut probe, &a.path, a.start)?;
        }
        if let Evaluator::Bistability { .. } = self.evaluator {
            let names: Vec<&str> = self.axes.iter().map(|a| a.path.as_str()).collect();
            if names.len() != 2 || !names.contains(&"delta0") || !names.contains(&"P") {
                return Err(Error::Spec("bistability sweeps need exactly the axes `delta0` and `P`".into()));
            }
        }
        if self.parallelism == 0 {
            return Err(Error::Spec("parallelism must be >= 1".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Axis values of cell `index` in row-major order.
    pub fn cell_axes(&self, index: usize, values: &[Vec<f64>]) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = values[k][rem % a.count];
            rem /= a.count;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
    Unstable,
    Unphysical,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Error => "error",
            Status::Unstable => "unstable",
            Status::Unphysical => "unphysical",
        }
    }
}

/// One output field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Bool(bool),
    Int(u64),
    Num(f64),
    Text(String),
    Empty,
}

impl Field {
    fn opt(x: Option<f64>) -> Field {
        x.map_or(Field::Empty, Field::Num)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Num(x) => Some(*x),
            Field::Int(n) => Some(*n as f64),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Field::Bool(b) => b.to_string(),
            Field::Int(n) => n.to_string(),
            Field::Num(x) => format_float(*x),
            Field::Text(s) => s.clone(),
            Field::Empty => String::new(),
        }
    }
}

/// Seventeen significant digits: enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: usize,
    pub axes: Vec<f64>,
    /// Aligned with the evaluator's columns.
    pub fields: Vec<Field>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CellRecord {
    /// Looks up a field by column name.
    pub fn get(&self, columns: &[String], name: &str) -> Option<&Field> {
        columns.iter().position(|c| c == name).map(|i| &self.fields[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub columns: Vec<String>,
    pub cells: Vec<CellRecord>,
    /// Wall-clock seconds. Not written to data files, so outputs stay reproducible.
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Applies an axis value. Besides any dotted parameter path this accepts
/// `P_common`, `T_common`, `N_common`, `n_common` (phonon occupation),
/// `Omega_over_gamma`, `eta`, `Omega`, `P`, `P1`, `P2` and `delta0`
/// (which sets `delta01 = delta0`, `delta02 = −delta0`).
pub fn apply_axis(p: &mut SystemParams, path: &str, value: f64) -> Result<(), ParamError> {
    match path {
        "P_common" => {
            p.cavity.p1 = value;
            p.cavity.p2 = value;
        }
        "T_common" => {
            p.mech.t1 = value;
            p.mech.t2 = value;
        }
        "N_common" => {
            p.cavity.n1 = value;
            p.cavity.n2 = value;
        }
        "n_common" => {
            p.mech.t1 = temperature_for_occupation(p.mech.omega_m1, value);
            p.mech.t2 = temperature_for_occupation(p.mech.omega_m2, value);
        }
        "Omega_over_gamma" => p.atom.omega = value * p.atom.gamma_a,
        "eta" => p.atom.eta = value,
        "Omega" => p.atom.omega = value,
        "P" | "P1" => p.cavity.p1 = value,
        "P2" => p.cavity.p2 = value,
        "delta0" => {
            p.cavity.delta01 = value;
            p.cavity.delta02 = -value;
        }
        other => p.set(other, value)?,
    }
    if path != "P2" && path != "cavity.P2" {
        p.sync_mu();
    }
    Ok(())
}

type FoldCache = Mutex<HashMap<u64, Arc<Result<PowerFolds, SolverError>>>>;

struct Context<'a> {
    spec: &'a SweepSpec,
    values: Vec<Vec<f64>>,
    folds: FoldCache,
    /// Power window used when tracing folds for coupled maps.
    fold_span: (f64, f64),
}

impl<'a> Context<'a> {
    fn new(spec: &'a SweepSpec) -> Self {
        let values: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
        let fold_span = spec
            .axes
            .iter()
            .position(|a| a.path == "P")
            .map(|k| {
                let hi = values[k].iter().copied().fold(0.0, f64::max);
                let lo = values[k].iter().copied().filter(|&x| x > 0.0).fold(hi, f64::min);
                (lo * 1e-3, hi * 1e3)
            })
            .unwrap_or((0.0, 1.0));
        Context {
            spec,
            values,
            folds: Mutex::new(HashMap::new()),
            fold_span,
        }
    }

    fn evaluate(&self, index: usize) -> CellRecord {
        let axes = self.spec.cell_axes(index, &self.values);
        let outcome = catch_unwind(AssertUnwindSafe(|| self.evaluate_inner(&axes)));
        let (fields, status, message) = match outcome {
            Ok(Ok(x)) => x,
            Ok(Err(msg)) => (self.error_fields(&axes), Status::Error, Some(msg)),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "evaluator panicked".into());
                (self.error_fields(&axes), Status::Error, Some(msg))
            }
        };
        CellRecord {
            index,
            axes,
            fields,
            status,
            message,
        }
    }

    fn leading(&self, axes: &[f64]) -> Vec<Field> {
        match self.spec.evaluator {
            Evaluator::Bistability { .. } => {
                let at = |name: &str| {
                    let k = self.spec.axes.iter().position(|a| a.path == name).unwrap_or(0);
                    Field::Num(axes[k])
                };
                vec![at("delta0"), at("P")]
            }
            _ => vec![Field::Num(axes[0]), axes.get(1).map_or(Field::Empty, |x| Field::Num(*x))],
        }
    }

    fn error_fields(&self, axes: &[f64]) -> Vec<Field> {
        let mut f = self.leading(axes);
        f.resize(self.spec.evaluator.columns().len(), Field::Empty);
        f
    }

    fn evaluate_inner(&self, axes: &[f64]) -> Result<(Vec<Field>, Status, Option<String>), String> {
        let mut p = self.spec.base.clone();
        for (a, v) in self.spec.axes.iter().zip(axes) {
            apply_axis(&mut p, &a.path, *v).map_err(|e| e.to_string())?;
        }
        p.validate().map_err(|e| e.to_string())?;
        let mut fields = self.leading(axes);
        match &self.spec.evaluator {
            Evaluator::XiTable => {
                let xi = gain_coefficients(&p.atom).map_err(|e| e.to_string())?;
                for z in [xi.xi11, xi.xi12, xi.xi21, xi.xi22] {
                    fields.push(Field::Num(z.re));
                    fields.push(Field::Num(z.im));
                }
                Ok((fields, Status::Ok, None))
            }
            Evaluator::Entanglement { paper_literal_d } => {
                let opts = EntanglementOptions {
                    paper_literal_d: *paper_literal_d,
                };
                match entangle(&p, &opts) {
                    Ok(rep) => {
                        let e = rep.effective;
                        let tail = [e.gamma1, e.gamma2, e.g12, e.g21].map(Field::Num);
                        match rep.result {
                            Some(r) => {
                                fields.extend([Field::Bool(true), Field::Num(r.e_n), Field::Num(r.lambda)]);
                                fields.extend(tail);
                                let (status, msg) = if rep.unphysical {
                                    (Status::Unphysical, Some("V + i Omega/2 is not positive semidefinite".into()))
                                } else {
                                    (Status::Ok, rep.covariance.and_then(|c| c.warning))
                                };
                                Ok((fields, status, msg))
                            }
                            None => {
                                fields.extend([Field::Bool(false), Field::Text("unstable".into()), Field::Empty]);
                                fields.extend(tail);
                                Ok((fields, Status::Unstable, Some("drift matrix has an eigenvalue with Re >= 0".into())))
                            }
                        }
                    }
                    Err(SolverError::EliminationUnstable(msg)) => {
                        fields.extend([Field::Bool(false), Field::Text("unstable".into())]);
                        fields.resize(self.spec.evaluator.columns().len(), Field::Empty);
                        Ok((fields, Status::Unstable, Some(msg)))
                    }
                    Err(e) => Err(e.to_string()),
                }
            }
            Evaluator::Bistability { frame, mu, scan_points } => {
                let xi = gain_coefficients(&p.atom).map_err(|e| e.to_string())?;
                let mu = mu.or(p.cavity.mu).unwrap_or(0.0);
                let k_d = self.spec.axes.iter().position(|a| a.path == "delta0").unwrap_or(0);
                let k_p = self.spec.axes.iter().position(|a| a.path == "P").unwrap_or(1);
                let (delta0, power) = (axes[k_d], axes[k_p]);
                let scan = ScanOptions {
                    points: *scan_points,
                    ..ScanOptions::default()
                };
                let folds = || {
                    let key = delta0.to_bits();
                    if let Some(hit) = self.folds.lock().expect("fold cache poisoned").get(&key) {
                        return (**hit).clone();
                    }
                    let computed = folds_at(&p, &xi, *frame, delta0, mu, self.fold_span);
                    let mut cache = self.folds.lock().expect("fold cache poisoned");
                    let entry = cache.entry(key).or_insert_with(|| Arc::new(computed));
                    (**entry).clone()
                };
                let cell = cell_summary(&p, &xi, *frame, delta0, power, mu, &scan, folds).map_err(|e| e.to_string())?;
                fields.push(Field::Int(cell.n_roots as u64));
                fields.extend([cell.i1_low, cell.i1_high, cell.fold_p_low, cell.fold_p_high].map(Field::opt));
                fields.push(cell.topology.map_or(Field::Empty, |t| Field::Text(t.as_str().into())));
                Ok((fields, Status::Ok, None))
            }
        }
    }
}

/// Knobs that only matter for long interactive runs and tests.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    /// Persist progress here (`<path>.partial`) and resume from it if present.
    pub checkpoint: Option<PathBuf>,
    /// Print `cells_done/total` lines on stderr.
    pub progress: bool,
    /// Stop (with an error) after this many cells have been evaluated in this run.
    pub stop_after: Option<usize>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, Error> {
    run_sweep_with(spec, &RunControl::default())
}

pub fn partial_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

pub fn run_sweep_with(spec: &SweepSpec, control: &RunControl) -> Result<SweepResult, Error> {
    spec.validate()?;
    let started = Instant::now();
    let ctx = Context::new(spec);
    let total = spec.cell_count();
    let fingerprint = serde_json::to_string(spec).expect("spec serialises");

    let partial = control.checkpoint.as_deref().map(partial_path);
    let mut cells = match &partial {
        Some(path) if path.exists() => read_partial(path, &fingerprint)?,
        _ => Vec::new(),
    };
    let mut writer = match &partial {
        Some(path) => {
            let fresh = cells.is_empty();
            let file = OpenOptions::new()
                .create(true)
                .append(!fresh)
                .write(true)
                .truncate(fresh)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            if fresh {
                writeln!(w, "{fingerprint}").map_err(|e| Error::io(path, e))?;
                w.flush().map_err(|e| Error::io(path, e))?;
            }
            Some(w)
        }
        None => None,
    };

    let pool = thread_pool(spec.parallelism)?;
    let mut done_this_run = 0usize;
    while cells.len() < total {
        let start = cells.len();
        let mut end = (start + CHUNK).min(total);
        if let Some(limit) = control.stop_after {
            if done_this_run >= limit {
                return Err(Error::Spec(format!("stopped after {done_this_run} cells as requested")));
            }
            end = end.min(start + (limit - done_this_run));
        }
        let chunk = evaluate_range(&ctx, start..end, pool.as_ref());
        if let (Some(w), Some(path)) = (writer.as_mut(), partial.as_ref()) {
            for rec in &chunk {
                let line = serde_json::to_string(rec).expect("record serialises");
                writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        done_this_run += chunk.len();
        cells.extend(chunk);
        if control.progress {
            eprintln!("{}/{}", cells.len(), total);
        }
    }
    drop(writer);

    Ok(SweepResult {
        spec: spec.clone(),
        columns: spec.evaluator.columns().iter().map(|s| s.to_string()).collect(),
        cells,
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;
#[cfg(not(feature = "parallel"))]
type Pool = ();

#[cfg(feature = "parallel")]
fn thread_pool(n: usize) -> Result<Option<Pool>, Error> {
    if n <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Error::Spec(format!("cannot start {n} worker threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn thread_pool(_n: usize) -> Result<Option<Pool>, Error> {
    Ok(None)
}

#[cfg(feature = "parallel")]
fn evaluate_range(ctx: &Context<'_>, range: std::ops::Range<usize>, pool: Option<&Pool>) -> Vec<CellRecord> {
    use rayon::prelude::*;
    match pool {
        Some(pool) => pool.install(|| range.into_par_iter().map(|i| ctx.evaluate(i)).collect()),
        None => range.map(|i| ctx.evaluate(i)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn evaluate_range(ctx: &Context<'_>, range: std::ops::Range<usize>, _pool: Option<&Pool>) -> Vec<CellRecord> {
    range.map(|i| ctx.evaluate(i)).collect()
}

fn read_partial(path: &Path, fingerprint: &str) -> Result<Vec<CellRecord>, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let corrupt = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let head = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| corrupt("empty checkpoint".into()))?;
    if head != fingerprint {
        return Err(corrupt("checkpoint belongs to a different sweep".into()));
    }
    let mut cells = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        // A torn final line from an interrupted write is dropped and recomputed.
        let Ok(rec) = serde_json::from_str::<CellRecord>(&line) else {
            break;
        };
        if rec.index != cells.len() {
            return Err(corrupt(format!("record {} out of order", rec.index)));
        }
        cells.push(rec);
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv | json)")),
        }
    }
}

/// CSV text: the evaluator's columns plus a trailing `status` column.
pub fn to_csv(r: &SweepResult) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header: Vec<&str> = r.columns.iter().map(String::as_str).collect();
    header.push("status");
    w.write_record(&header).expect("in-memory write");
    for c in &r.cells {
        let mut row: Vec<String> = c.fields.iter().map(Field::csv).collect();
        row.push(c.status.as_str().to_string());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn to_json(r: &SweepResult) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("result serialises");
    s.push('\n');
    s
}

/// Writes the result and removes any checkpoint for the same path.
pub fn write_result(r: &SweepResult, path: &Path, format: Format) -> Result<(), Error> {
    let text = match format {
        Format::Csv => to_csv(r),
        Format::Json => to_json(r),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    let partial = partial_path(path);
    if partial.exists() {
        fs::remove_file(&partial).map_err(|e| Error::io(&partial, e))?;
    }
    Ok(())
}

pub fn read_json(path: &Path) -> Result<SweepResult, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Parses CSV written by [`to_csv`] back into header and rows of raw strings.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), Error> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let header = rdr
        .headers()
        .map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::preset;

    fn xi_spec() -> SweepSpec {
        SweepSpec {
            axes: vec![Axis::linear("eta", -1.0, 1.0, 2), Axis::linear("Omega_over_gamma", 0.0, 4.0, 2)],
            evaluator: Evaluator::XiTable,
            base: preset("fig2").unwrap().params,
            parallelism: 1,
        }
    }

    #[test]
    fn row_major_order() {
        let r = run_sweep(&xi_spec()).unwrap();
        assert_eq!(r.cells.len(), 4);
        let axes: Vec<Vec<f64>> = r.cells.iter().map(|c| c.axes.clone()).collect();
        assert_eq!(axes, vec![vec![-1.0, 0.0], vec![-1.0, 4.0], vec![1.0, 0.0], vec![1.0, 4.0]]);
        assert!(r.cells.iter().all(|c| c.status == Status::Ok));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.1 + 0.2] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn axis_aliases() {
        let mut p = preset("fig5").unwrap().params;
        apply_axis(&mut p, "P_common", 0.02).unwrap();
        assert_eq!((p.cavity.p1, p.cavity.p2), (0.02, 0.02));
        apply_axis(&mut p, "delta0", 5.0).unwrap();
        assert_eq!((p.cavity.delta01, p.cavity.delta02), (5.0, -5.0));
        apply_axis(&mut p, "Omega_over_gamma", 2.0).unwrap();
        assert_eq!(p.atom.omega, 2.0 * p.atom.gamma_a);
        assert!(apply_axis(&mut p, "cavity.bogus", 1.0).is_err());
    }

    #[test]
    fn log_axis_endpoints() {
        let a = Axis {
            path: "P".into(),
            start: 1e-3,
            end: 1e3,
            count: 7,
            scale: Scale::Log,
        };
        let v = a.values();
        assert!((v[3] - 1.0).abs() < 1e-12 && (v[6] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = xi_spec();
        s.axes[0].count = 1;
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
        let mut s = xi_spec();
        s.evaluator = Evaluator::Bistability {
            frame: Frame::Rwa,
            mu: None,
            scan_points: 100,
        };
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
    }
}
