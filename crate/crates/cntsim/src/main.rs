use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cntsim::config::{self, parse_bool, set_point_key, set_sweep_key, POINT_KEYS, SWEEP_KEYS};
use cntsim::export::{read_records_lenient, write_csv, write_operator};
use cntsim::record::Record;
use cntsim::spec::SweepSpec;
use cntsim::sweep::{default_workers, run_sweep, summary_path, SweepOptions, WORKERS_ENV};
use cntsim::{validate, Error};
use cntsim_core::basis::Statistics;
use cntsim_core::hamiltonian::{ModelParams, DEFAULT_MAX_DIMENSION, DEFAULT_OMEGA0_OVER_U};
use cntsim_core::lang_firsov::{atomic_ground_manifold, critical_lambdas};
use cntsim_core::point::{solve_point, PointSettings, PointSpec, TwoTubeSystem};

/// Exact diagonalization of two capacitively coupled nanotube quantum-dot arrays.
#[derive(Parser, Debug)]
#[command(name = "cntsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Atomic-limit (t = 0) ground manifolds and critical couplings.
    Atomic(AtomicArgs),
    /// One ground-state solve, printed as a JSON record.
    Point(PointArgs),
    /// Checkpointed (lambda, t/U, V/U) grid sweep into a JSON Lines file.
    Sweep(SweepArgs),
    /// Run the built-in oracle checks; exit 1 if any fails.
    Validate,
    /// Convert a JSON Lines record file to CSV (scalar fields only).
    ExportCsv(ExportArgs),
    /// Write the two-tube Hamiltonian as `row col value` lines.
    DumpOperator(DumpArgs),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct AtomicArgs {
    /// Inter-tube repulsion V/U.
    #[arg(long, default_value_t = 0.02)]
    v_over_u: f64,
    /// Flexural modes kept in the effective attraction.
    #[arg(long, default_value_t = 1)]
    modes: usize,
    /// Also print the ground manifold at this coupling.
    #[arg(long)]
    lambda: Option<f64>,
    /// Emit one JSON object instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct PointArgs {
    /// Coupling g0^2 / (U omega0) [default 0.315].
    #[arg(long)]
    lambda: Option<f64>,
    /// Hopping t/U [default 0.001].
    #[arg(long)]
    t_over_u: Option<f64>,
    /// Inter-tube repulsion V/U [default 0.02].
    #[arg(long)]
    v_over_u: Option<f64>,
    /// Phonon energy omega0/U [default 0.65].
    #[arg(long)]
    omega0_over_u: Option<f64>,
    /// Phonon states per tube [default 50].
    #[arg(long)]
    nph: Option<usize>,
    /// charge or spinful [default charge].
    #[arg(long)]
    mode: Option<String>,
    /// Iterative coherent-shift solver, on or off [default off].
    #[arg(long)]
    shift: Option<String>,
    /// Seed of the random part of the Lanczos start vector [default 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Write the record here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill wall_ms.
    #[arg(long)]
    timing: bool,
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// [default 0.0]
    #[arg(long)]
    lambda_min: Option<f64>,
    /// [default 0.8]
    #[arg(long)]
    lambda_max: Option<f64>,
    /// [default 41]
    #[arg(long)]
    lambda_points: Option<usize>,
    /// linear or log [default linear]
    #[arg(long)]
    lambda_scale: Option<String>,
    /// Smallest t/U [default 1e-4].
    #[arg(long)]
    t_min: Option<f64>,
    /// Largest t/U [default 0.1].
    #[arg(long)]
    t_max: Option<f64>,
    /// [default 25]
    #[arg(long)]
    t_points: Option<usize>,
    /// linear or log [default log]
    #[arg(long)]
    t_scale: Option<String>,
    /// Comma-separated V/U values [default 0.01,0.02,0.04].
    #[arg(long)]
    v_list: Option<String>,
    /// [default 0.65]
    #[arg(long)]
    omega0_over_u: Option<f64>,
    /// Phonon states per tube [default 50].
    #[arg(long)]
    nph: Option<usize>,
    /// charge or spinful [default charge].
    #[arg(long)]
    mode: Option<String>,
    /// on or off [default off].
    #[arg(long)]
    shift: Option<String>,
    /// [default 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Lanczos residual tolerance [default 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// Lanczos matvec budget per solve [default 30000].
    #[arg(long)]
    max_matvecs: Option<usize>,
    /// Shift-iteration tolerance on |<b>| [default 1e-8].
    #[arg(long)]
    shift_tol: Option<f64>,
    /// Seed each cell with the previous cell's ground vector, on or off [default off].
    #[arg(long)]
    warm_start: Option<String>,
    /// Output JSON Lines file (required here or in the config file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default from CNTSIM_WORKERS, else all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Fill wall_ms (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Continue from <out>.ckpt.
    #[arg(long)]
    resume: bool,
    /// Print one line per finished cell to standard error.
    #[arg(long)]
    progress: bool,
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stop after writing this many records (testing aid).
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct ExportArgs {
    /// JSON Lines record file.
    #[arg(long)]
    input: PathBuf,
    /// CSV destination [default standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct DumpArgs {
    #[arg(long, default_value_t = 0.315)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    t_over_u: f64,
    #[arg(long, default_value_t = 0.02)]
    v_over_u: f64,
    #[arg(long, default_value_t = DEFAULT_OMEGA0_OVER_U)]
    omega0_over_u: f64,
    /// Phonon states per tube.
    #[arg(long, default_value_t = 4)]
    nph: usize,
    #[arg(long, default_value = "charge")]
    mode: String,
    /// Destination [default standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Spec(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<cntsim_core::Error> for Failure {
    fn from(e: cntsim_core::Error) -> Self {
        match e {
            cntsim_core::Error::InvalidParameter(_) | cntsim_core::Error::InvalidSector(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Reader went away (`| head`); not worth an error.
fn closed_pipe(e: &io::Error) -> bool {
    e.kind() == io::ErrorKind::BrokenPipe
}

/// Standard output or a file.
fn sink(out: Option<&Path>) -> std::result::Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_failure(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn atomic(a: &AtomicArgs) -> Outcome {
    let started = Instant::now();
    let c = critical_lambdas(a.v_over_u, a.modes)?;
    let manifold = match a.lambda {
        Some(l) => Some(atomic_ground_manifold(
            &ModelParams::from_ratios(l, 0.0, a.v_over_u, DEFAULT_OMEGA0_OVER_U, Statistics::Charge)?,
            a.modes,
        )?),
        None => None,
    };
    let label = |v: &cntsim_core::lang_firsov::ChargeVector| {
        v.label().map(str::to_string).unwrap_or_else(|| v.charges().iter().map(|n| n.to_string()).collect())
    };
    let mut out = sink(None)?;
    let w = |e: io::Error| Failure::Runtime(e.to_string());
    if a.json {
        let value = serde_json::json!({
            "v_over_u": a.v_over_u,
            "modes": a.modes,
            "lambda_c1": c.lambda_c1,
            "lambda_c2": c.lambda_c2,
            "bell_window": c.lambda_c2 - c.lambda_c1,
            "tail_bound": c.tail_bound,
            "breakpoints": c.breakpoints.iter().map(|b| serde_json::json!({
                "lambda": b.lambda,
                "ground": [label(&b.ground.0), label(&b.ground.1)],
            })).collect::<Vec<_>>(),
            "manifold": manifold.as_ref().map(|m| serde_json::json!({
                "lambda": a.lambda,
                "energy": m.energy,
                "degeneracy": m.degeneracy(),
                "members": m.members.iter().map(|(x, y)| [label(x), label(y)]).collect::<Vec<_>>(),
            })),
        });
        writeln!(out, "{value}").map_err(w)?;
    } else {
        writeln!(out, "v_over_u  = {}", a.v_over_u).map_err(w)?;
        writeln!(out, "modes     = {}", a.modes).map_err(w)?;
        writeln!(out, "lambda_c1 = {:.6}", c.lambda_c1).map_err(w)?;
        writeln!(out, "lambda_c2 = {:.6}", c.lambda_c2).map_err(w)?;
        writeln!(out, "window    = {:.6}", c.lambda_c2 - c.lambda_c1).map_err(w)?;
        writeln!(out, "tail bound (per unit lambda U) = {:.3e}", c.tail_bound).map_err(w)?;
        for b in &c.breakpoints {
            writeln!(out, "  lambda = {:.9}  ground -> ({}, {})", b.lambda, label(&b.ground.0), label(&b.ground.1))
                .map_err(w)?;
        }
        if let (Some(m), Some(l)) = (&manifold, a.lambda) {
            writeln!(out, "manifold at lambda = {l}: energy {:.9} U, degeneracy {}", m.energy, m.degeneracy())
                .map_err(w)?;
            for (x, y) in &m.members {
                writeln!(out, "  ({}, {})", label(x), label(y)).map_err(w)?;
            }
        }
    }
    out.flush().map_err(w)?;
    eprintln!("atomic: {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn point(a: &PointArgs) -> Outcome {
    let mut spec = PointSpec::default();
    let mut out = None;
    let mut timing = a.timing;
    let mut pairs = match &a.config {
        Some(p) => config::load(p, POINT_KEYS)?,
        None => Vec::new(),
    };
    let flags: [(&str, Option<String>); 8] = [
        ("lambda", a.lambda.map(|v| v.to_string())),
        ("t_over_u", a.t_over_u.map(|v| v.to_string())),
        ("v_over_u", a.v_over_u.map(|v| v.to_string())),
        ("omega0_over_u", a.omega0_over_u.map(|v| v.to_string())),
        ("n_ph", a.nph.map(|v| v.to_string())),
        ("mode", a.mode.clone()),
        ("shift", a.shift.clone()),
        ("seed", a.seed.map(|v| v.to_string())),
    ];
    pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    if let Some(o) = &a.out {
        pairs.push(("out".into(), o.display().to_string()));
    }
    for (k, v) in &pairs {
        if !set_point_key(&mut spec, k, v)? {
            match k.as_str() {
                "out" => out = Some(PathBuf::from(v)),
                "timing" => timing = timing || parse_bool(k, v)?,
                _ => unreachable!("point keys are exhaustive"),
            }
        }
    }
    let started = Instant::now();
    let sol = solve_point(&spec, &PointSettings::default(), None)?;
    let ms = started.elapsed().as_secs_f64() * 1e3;
    let record = Record::from_observables(&sol.record, timing.then_some(ms));
    let mut sink = sink(out.as_deref())?;
    let w = |e: io::Error| Failure::Runtime(e.to_string());
    sink.write_all(record.to_json_line().as_bytes()).map_err(w)?;
    sink.flush().map_err(w)?;
    let shift = sol.shift.map(|s| format!(", shift alpha = {:?} after {} updates", s.alpha, s.updates()));
    eprintln!(
        "point: {} phonon states per tube, {} matvecs, residual {:.1e}, {:.0} ms{}",
        sol.record.n_ph,
        sol.ground.iterations,
        sol.ground.residual,
        ms,
        shift.unwrap_or_default()
    );
    Ok(())
}

fn sweep(a: &SweepArgs) -> Outcome {
    let mut spec = SweepSpec::default();
    let mut out: Option<PathBuf> = None;
    let mut workers: Option<usize> = None;
    let mut timing = a.timing;
    let mut pairs = match &a.config {
        Some(p) => config::load(p, SWEEP_KEYS)?,
        None => Vec::new(),
    };
    let s = |v: Option<f64>| v.map(|v| v.to_string());
    let flags: Vec<(&str, Option<String>)> = vec![
        ("lambda_min", s(a.lambda_min)),
        ("lambda_max", s(a.lambda_max)),
        ("lambda_points", a.lambda_points.map(|v| v.to_string())),
        ("lambda_scale", a.lambda_scale.clone()),
        ("t_min", s(a.t_min)),
        ("t_max", s(a.t_max)),
        ("t_points", a.t_points.map(|v| v.to_string())),
        ("t_scale", a.t_scale.clone()),
        ("v_list", a.v_list.clone()),
        ("omega0_over_u", s(a.omega0_over_u)),
        ("n_ph", a.nph.map(|v| v.to_string())),
        ("mode", a.mode.clone()),
        ("shift", a.shift.clone()),
        ("seed", a.seed.map(|v| v.to_string())),
        ("tol", s(a.tol)),
        ("max_matvecs", a.max_matvecs.map(|v| v.to_string())),
        ("shift_tol", s(a.shift_tol)),
        ("warm_start", a.warm_start.clone()),
        ("out", a.out.as_ref().map(|p| p.display().to_string())),
        ("workers", a.workers.map(|v| v.to_string())),
    ];
    pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    for (k, v) in &pairs {
        if !set_sweep_key(&mut spec, k, v)? {
            match k.as_str() {
                "out" => out = Some(PathBuf::from(v)),
                "workers" => {
                    workers = Some(v.parse().map_err(|_| Failure::Usage(format!("workers: cannot parse {v:?}")))?)
                }
                "timing" => timing = timing || parse_bool(k, v)?,
                _ => unreachable!("sweep keys are exhaustive"),
            }
        }
    }
    let out = out.ok_or_else(|| Failure::Usage("sweep needs --out (or out = ... in the config file)".into()))?;
    spec.validate()?;
    let options = SweepOptions {
        workers: workers.unwrap_or_else(default_workers),
        resume: a.resume,
        timing,
        progress: a.progress,
        stop_after: a.stop_after,
    };
    eprintln!(
        "sweep: {} cells, spec hash {}, {} workers ({} sets the default)",
        spec.cells().len(),
        &spec.hash()[..12],
        options.workers,
        WORKERS_ENV
    );
    let started = Instant::now();
    let report = run_sweep(&spec, &out, &options)?;
    eprintln!(
        "sweep: wrote {} records ({} failed) in {:.1} s; {}",
        report.written,
        report.failed,
        started.elapsed().as_secs_f64(),
        if report.complete {
            format!("complete, summary in {}", summary_path(&out).display())
        } else {
            "stopped early, rerun with --resume".to_string()
        }
    );
    Ok(())
}

fn run_validate() -> Outcome {
    let checks = validate::run_all();
    let mut out = sink(None)?;
    let w = |e: io::Error| Failure::Runtime(e.to_string());
    for c in &checks {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail).map_err(w)?;
    }
    out.flush().map_err(w)?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn export_csv(a: &ExportArgs) -> Outcome {
    let text = std::fs::read_to_string(&a.input).map_err(io_failure(&a.input))?;
    let (records, skipped) = read_records_lenient(&text);
    if skipped > 0 {
        eprintln!("export-csv: skipped {skipped} malformed line(s)");
    }
    if records.is_empty() {
        return Err(Failure::Runtime(format!("{}: no records", a.input.display())));
    }
    match write_csv(&records, sink(a.out.as_deref())?) {
        Err(Error::Csv(e)) if matches!(e.kind(), csv::ErrorKind::Io(io) if closed_pipe(io)) => Ok(()),
        r => Ok(r?),
    }
}

fn dump_operator(a: &DumpArgs) -> Outcome {
    let stats = cntsim::spec::parse_statistics(&a.mode)?;
    let params = ModelParams::from_ratios(a.lambda, a.t_over_u, a.v_over_u, a.omega0_over_u, stats)?;
    let system = TwoTubeSystem::new(params, a.nph)?;
    let h = system.hamiltonian([0.0; 2], DEFAULT_MAX_DIMENSION)?;
    match write_operator(&h, sink(a.out.as_deref())?) {
        Err(e) if closed_pipe(&e) => return Ok(()),
        r => r.map_err(|e| Failure::Runtime(e.to_string()))?,
    }
    eprintln!("dump-operator: dim {}, {} entries", h.dim(), h.nnz());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Atomic(a) => atomic(a),
        Command::Point(a) => point(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate => run_validate(),
        Command::ExportCsv(a) => export_csv(a),
        Command::DumpOperator(a) => dump_operator(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("cntsim: validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("cntsim: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("cntsim: {msg}\nRun with --help for usage.");
            ExitCode::from(2)
        }
    }
}
