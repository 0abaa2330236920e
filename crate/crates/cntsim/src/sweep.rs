//! Checkpointed parameter sweep over a (lambda, t/U, V/U) grid.
//!
//! Workers pull units of work (a single cell, or a whole row when warm starts
//! chain cells together) from a shared counter. Only the calling thread
//! writes: it buffers finished records and appends them strictly in cell
//! order, so the output bytes do not depend on the worker count.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use cntsim_core::lang_firsov::critical_lambdas;
use cntsim_core::observables::Phase;
use cntsim_core::point::solve_point;
use serde::Serialize;

use crate::checkpoint::{self, Checkpoint};
use crate::error::{Error, Result};
use crate::record::{parse_jsonl, Record};
use crate::spec::{Cell, SweepSpec};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CNTSIM_WORKERS";

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub workers: usize,
    /// Continue from `<output>.ckpt` instead of starting over.
    pub resume: bool,
    /// Fill `wall_ms`; off by default so reruns are byte-identical.
    pub timing: bool,
    /// Print one diagnostic line per written cell to stderr.
    pub progress: bool,
    /// Stop after writing this many records, as if the process were killed.
    pub stop_after: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { workers: default_workers(), resume: false, timing: false, progress: false, stop_after: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowBoundary {
    pub v_over_u: f64,
    pub t_over_u: f64,
    /// Interpolated lambda where the tube-averaged D first reaches 0.5 and 1.5.
    pub d_cross_0_5: Option<f64>,
    pub d_cross_1_5: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticBoundary {
    pub v_over_u: f64,
    pub lambda_c1: f64,
    pub lambda_c2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub spec_hash: String,
    pub cells: usize,
    pub ok: usize,
    pub failed: usize,
    pub phase_counts: BTreeMap<String, usize>,
    pub rows: Vec<RowBoundary>,
    /// Single-mode atomic-limit boundaries for each V/U.
    pub analytic: Vec<AnalyticBoundary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub cells: usize,
    /// Records appended during this call.
    pub written: usize,
    /// Of those, how many carry a failure status.
    pub failed: usize,
    pub complete: bool,
    pub summary: Option<Summary>,
}

pub fn summary_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

/// First crossing of `threshold` by a sampled curve, linearly interpolated.
pub fn crossing(points: &[(f64, f64)], threshold: f64) -> Option<f64> {
    if points.first()?.1 >= threshold {
        return Some(points[0].0);
    }
    points.windows(2).find(|w| w[0].1 < threshold && w[1].1 >= threshold).map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        x0 + (threshold - y0) * (x1 - x0) / (y1 - y0)
    })
}

pub fn summarize(spec: &SweepSpec, records: &[Record]) -> Result<Summary> {
    let cells = spec.cells();
    let mut phase_counts: BTreeMap<String, usize> = Phase::ALL.iter().map(|p| (p.as_str().to_string(), 0)).collect();
    let mut rows: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let mut ok = 0;
    for (cell, r) in cells.iter().zip(records) {
        if let (true, Some(phase), Some(d)) = (r.is_ok(), r.phase.as_ref(), r.mean_d()) {
            ok += 1;
            *phase_counts.entry(phase.clone()).or_default() += 1;
            rows.entry(cell.row).or_default().push((cell.lambda, d));
        }
    }
    let mut seen = Vec::new();
    let mut boundaries = Vec::new();
    for c in &cells {
        if seen.last() == Some(&c.row) {
            continue;
        }
        seen.push(c.row);
        let pts = rows.get(&c.row).map(Vec::as_slice).unwrap_or(&[]);
        boundaries.push(RowBoundary {
            v_over_u: c.v_over_u,
            t_over_u: c.t_over_u,
            d_cross_0_5: crossing(pts, 0.5),
            d_cross_1_5: crossing(pts, 1.5),
        });
    }
    let analytic = spec
        .v_over_u
        .iter()
        .map(|&v| {
            let c = critical_lambdas(v, 1)?;
            Ok(AnalyticBoundary { v_over_u: v, lambda_c1: c.lambda_c1, lambda_c2: c.lambda_c2 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Summary {
        spec_hash: spec.hash(),
        cells: cells.len(),
        ok,
        failed: records.len().min(cells.len()) - ok,
        phase_counts,
        rows: boundaries,
        analytic,
    })
}

/// A run of cells solved in sequence; only cells at or after `emit_from` are written.
struct Unit {
    cells: Vec<Cell>,
    emit_from: usize,
}

fn plan(spec: &SweepSpec, cells: &[Cell], first_pending: usize) -> Vec<Unit> {
    if !spec.warm_start {
        return cells[first_pending..].iter().map(|c| Unit { cells: vec![*c], emit_from: c.index }).collect();
    }
    let mut units: Vec<Unit> = Vec::new();
    for c in cells {
        match units.last_mut() {
            Some(u) if u.cells[0].row == c.row => u.cells.push(*c),
            _ => units.push(Unit { cells: vec![*c], emit_from: first_pending }),
        }
    }
    // Rows already fully written are dropped; a partially written row is
    // replayed from its start so the warm-start chain is reproduced exactly.
    units.retain(|u| u.cells.last().is_some_and(|c| c.index >= first_pending));
    units
}

fn solve_cell(spec: &SweepSpec, cell: &Cell, start: Option<&[f64]>, timing: bool) -> (Record, Option<Vec<f64>>) {
    let began = Instant::now();
    match solve_point(&spec.point_spec(cell), &spec.point_settings(), start) {
        Ok(sol) => {
            let ms = timing.then(|| began.elapsed().as_secs_f64() * 1e3);
            (Record::from_observables(&sol.record, ms), Some(sol.ground.vector))
        }
        Err(e) => (
            Record::failed(cell.lambda, cell.t_over_u, cell.v_over_u, spec.n_ph, spec.statistics, &e.to_string()),
            None,
        ),
    }
}

fn open_output(path: &Path, offset: Option<u64>) -> Result<File> {
    let io = |e| Error::io(path, e);
    match offset {
        None => File::create(path).map_err(io),
        Some(offset) => {
            let mut f = OpenOptions::new().read(true).write(true).open(path).map_err(io)?;
            let len = f.metadata().map_err(io)?.len();
            if len < offset {
                return Err(Error::Checkpoint(format!(
                    "output holds {len} bytes but the checkpoint covers {offset}; refusing to resume"
                )));
            }
            f.set_len(offset).map_err(io)?;
            f.seek(SeekFrom::End(0)).map_err(io)?;
            Ok(f)
        }
    }
}

/// Runs (or resumes) the sweep, streaming JSON lines into `output`.
pub fn run_sweep(spec: &SweepSpec, output: &Path, options: &SweepOptions) -> Result<SweepReport> {
    spec.validate()?;
    let cells = spec.cells();
    let ckpt_path = checkpoint::path_for(output);

    let mut ckpt = if options.resume {
        let c = Checkpoint::load(&ckpt_path)?;
        c.check_matches(spec, cells.len())?;
        if c.prefix() != c.completed_count() {
            return Err(Error::Checkpoint("completed cells are not a prefix of the cell order".into()));
        }
        c
    } else {
        Checkpoint::new(spec, cells.len())
    };
    let first_pending = ckpt.prefix();
    let mut out = open_output(output, options.resume.then_some(ckpt.offset))?;
    ckpt.store(&ckpt_path)?;

    let units = plan(spec, &cells, first_pending);
    let next_unit = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = options.workers.max(1).min(units.len().max(1));
    let mut written = 0;
    let mut failed = 0;

    let outcome = std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::channel::<(usize, Record)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (units, next_unit, stop) = (&units, &next_unit, &stop);
            scope.spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    let Some(unit) = units.get(next_unit.fetch_add(1, Ordering::Relaxed)) else { break };
                    let mut previous: Option<Vec<f64>> = None;
                    for cell in &unit.cells {
                        if stop.load(Ordering::Relaxed) {
                            return;
                        }
                        let start = if spec.warm_start { previous.as_deref() } else { None };
                        let (record, vector) = solve_cell(spec, cell, start, options.timing);
                        previous = vector;
                        if cell.index >= unit.emit_from && tx.send((cell.index, record)).is_err() {
                            return;
                        }
                    }
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, Record> = BTreeMap::new();
        let mut next = first_pending;
        let result = (|| {
            for (index, record) in &rx {
                pending.insert(index, record);
                while let Some(record) = pending.remove(&next) {
                    let line = record.to_json_line();
                    out.write_all(line.as_bytes()).map_err(|e| Error::io(output, e))?;
                    out.flush().map_err(|e| Error::io(output, e))?;
                    out.sync_data().map_err(|e| Error::io(output, e))?;
                    ckpt.completed[next] = true;
                    ckpt.offset += line.len() as u64;
                    ckpt.store(&ckpt_path)?;
                    written += 1;
                    if !record.is_ok() {
                        failed += 1;
                    }
                    if options.progress {
                        eprintln!(
                            "[{}/{}] lambda={} t/U={} V/U={} {}",
                            next + 1,
                            cells.len(),
                            record.lambda,
                            record.t_over_u,
                            record.v_over_u,
                            record.phase.as_deref().unwrap_or(&record.status)
                        );
                    }
                    next += 1;
                    if options.stop_after.is_some_and(|n| written >= n) {
                        return Ok(());
                    }
                }
            }
            Ok(())
        })();
        stop.store(true, Ordering::Relaxed);
        drop(rx);
        result
    });
    outcome?;

    let complete = ckpt.prefix() == cells.len();
    let summary = if complete {
        let text = fs::read_to_string(output).map_err(|e| Error::io(output, e))?;
        let records = parse_jsonl(&text).map_err(|e| Error::Parse {
            path: output.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let summary = summarize(spec, &records)?;
        let path = summary_path(output);
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Some(summary)
    } else {
        None
    };
    Ok(SweepReport { cells: cells.len(), written, failed, complete, summary })
}
