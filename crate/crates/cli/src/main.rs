//! `nhm`: detect invariant volumes of symmetric nonholonomic systems,
//! simulate their reduced dynamics and check densities against the
//! Liouville equation.
//!
//! Exit codes: 0 measure exists (or success), 2 no measure (or a failed
//! density check), 3 inconclusive, 1 any error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use nhm_core::config::SystemConfig;
use nhm_core::detector::{
    detect, verify_measure, DetectedMeasure, DetectionReport, Grid, MeasureCandidate, Thresholds, Volume,
};
use nhm_core::dynamics::{rk4_integrate, DynamicsError, Integration};
use nhm_core::poisson::{energy, hamilton_rhs, PhaseState};
use nhm_core::reduction::{ReducedStructure, SymmetricSystem};
use nhm_core::systems::shipped_examples;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nhm", version, about = "Invariant-measure detection for symmetric nonholonomic systems")]
struct Cli {
    /// Seed for every random sample drawn by the command.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads for grid evaluations.
    #[arg(long, global = true, env = "NHM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector on a system file and write a JSON report.
    Analyze(AnalyzeArgs),
    /// Integrate the reduced equations and write a CSV trajectory.
    Simulate(SimulateArgs),
    /// Check a density against the Liouville equation at random states.
    VerifyMeasure(VerifyArgs),
    /// Run the detector over a grid of parameter values.
    Sweep(SweepArgs),
    /// Write one of the bundled example systems.
    EmitExample(EmitArgs),
}

#[derive(Args)]
struct DetectOpts {
    /// Grid points per shape axis.
    #[arg(long, default_value_t = 33)]
    grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    accept: f64,
    #[arg(long, default_value_t = 1e-3)]
    reject: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    system: PathBuf,
    #[command(flatten)]
    detect: DetectOpts,
    /// Report destination; standard output if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    system: PathBuf,
    /// Initial state: shape coordinates then one momentum per frame field.
    #[arg(long, allow_hyphen_values = true)]
    state: String,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long = "T")]
    t_end: f64,
    /// Keep every n-th step in the output.
    #[arg(long, default_value_t = 1)]
    every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VolumeArg {
    Momentum,
    Velocity,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    system: PathBuf,
    /// Density over the shape coordinates and the momenta `p_<field>`.
    #[arg(long, conflicts_with = "detected")]
    density: Option<String>,
    /// Fiber coordinates the density refers to.
    #[arg(long, value_enum, default_value = "momentum", requires = "density")]
    volume: VolumeArg,
    /// A report written by `analyze` whose reconstructed exponent is checked.
    #[arg(long)]
    detected: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Largest accepted relative residual.
    #[arg(long, default_value_t = 1e-6)]
    accept: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    system: PathBuf,
    /// `name=lo:hi:steps`; repeat the flag or separate ranges by commas.
    #[arg(long, required = true, value_delimiter = ',')]
    vary: Vec<String>,
    #[command(flatten)]
    detect: DetectOpts,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    /// Example name, e.g. `chaplygin_top_generic`.
    #[arg(required_unless_present = "all", conflicts_with = "all")]
    name: Option<String>,
    #[arg(long)]
    all: bool,
    /// Directory receiving `<name>.cfg`; standard output if omitted with a single name.
    #[arg(long)]
    dir: Option<PathBuf>,
}

type CmdResult = Result<u8, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let seed = cli.seed;
    let res = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::VerifyMeasure(a) => verify(a, seed),
        Command::Sweep(a) => sweep(a),
        Command::EmitExample(a) => emit(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<SystemConfig, String> {
    let src = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    SystemConfig::parse(&src).map_err(|e| format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message))
}

fn compile(cfg: &SystemConfig, path: &Path) -> Result<SymmetricSystem, String> {
    cfg.compile().map_err(|e| format!("{}: {e}", path.display()))
}

fn write_out(dest: Option<&Path>, text: &str) -> Result<(), String> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

impl DetectOpts {
    fn thresholds(&self) -> Result<Thresholds, String> {
        if self.grid < 2 {
            return Err("--grid must be at least 2".into());
        }
        if !(self.accept > 0.0 && self.accept < self.reject) {
            return Err("thresholds must satisfy 0 < accept < reject".into());
        }
        Ok(Thresholds {
            accept: self.accept,
            reject: self.reject,
        })
    }
}

fn run_detect(cfg: &SystemConfig, path: &Path, opts: &DetectOpts) -> Result<DetectionReport, String> {
    let th = opts.thresholds()?;
    let sys = compile(cfg, path)?;
    let grid = Grid::new(sys.shape_chart(), opts.grid);
    let mut report = detect(&sys, &grid, th).map_err(|e| e.to_string())?;
    report.system = Some(cfg.name.clone());
    Ok(report)
}

fn analyze(a: AnalyzeArgs) -> CmdResult {
    let cfg = load(&a.system)?;
    let report = run_detect(&cfg, &a.system, &a.detect)?;
    let mut json = report.to_json();
    json.push('\n');
    write_out(a.report.as_deref(), &json)?;
    let residual = report.closedness_residual.map_or("n/a".to_string(), |r| format!("{r:.3e}"));
    eprintln!(
        "{}: {} (condition one {:.3e}, closedness {residual})",
        cfg.name,
        report.verdict.as_str(),
        report.condition_one_residual
    );
    Ok(report.verdict.exit_code() as u8)
}

fn parse_state(s: &str, dim: usize) -> Result<Vec<f64>, String> {
    let x: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("state entry '{}': {e}", t.trim())))
        .collect::<Result<_, _>>()?;
    if x.len() != dim {
        return Err(format!("state has {} entries, the system needs {dim}", x.len()));
    }
    Ok(x)
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let cfg = load(&a.system)?;
    let sys = compile(&cfg, &a.system)?;
    let mh = sys.m_hat();
    let x0 = parse_state(&a.state, mh + sys.n())?;
    if !sys.shape_chart().in_sample_box(&x0[..mh]) {
        return Err(format!("initial shape point {:?} lies outside the chart margins", &x0[..mh]));
    }
    if !(a.h > 0.0 && a.t_end >= 0.0) || a.every == 0 {
        return Err("need h > 0, T >= 0 and every >= 1".into());
    }
    let rhs = |x: &[f64]| hamilton_rhs(&sys, &PhaseState::from_slice(mh, x)).map_err(|e| e.to_string());
    let inside = |x: &[f64]| sys.shape_chart().in_sample_box(&x[..mh]);
    let diag = |x: &[f64]| vec![energy(&sys, &PhaseState::from_slice(mh, x)).unwrap_or(f64::NAN)];
    let mut names: Vec<String> = sys.shape_chart().names.clone();
    names.extend(cfg.field_names().iter().map(|f| format!("p_{f}")));
    let opts = Integration {
        h: a.h,
        t_end: a.t_end,
        admissible: &inside,
        diagnostics: &diag,
        record_every: a.every,
        state_names: names,
        diagnostic_names: vec!["H".into()],
    };
    match rk4_integrate(&rhs, &x0, &opts) {
        Ok(traj) => {
            write_out(a.out.as_deref(), &traj.to_csv())?;
            Ok(0)
        }
        Err(e @ DynamicsError::Invalid(_)) => Err(e.to_string()),
        Err(e) => Err(format!("{e}; last good time {}", e.time().unwrap_or(0.0))),
    }
}

fn verify(a: VerifyArgs, seed: u64) -> CmdResult {
    let cfg = load(&a.system)?;
    let sys = compile(&cfg, &a.system)?;
    let cand = if let Some(src) = &a.density {
        let vol = match a.volume {
            VolumeArg::Momentum => Volume::Momentum,
            VolumeArg::Velocity => Volume::Velocity,
        };
        cfg.parse_density(src, vol).map_err(|e| format!("density: column {}: {}", e.column, e.message))?
    } else if let Some(path) = &a.detected {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let report = DetectionReport::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(name) = &report.system {
            if name != &cfg.name {
                return Err(format!("report is for system '{name}', not '{}'", cfg.name));
            }
        }
        if report.grid.names != sys.shape_chart().names {
            return Err("report grid does not match the system's shape coordinates".into());
        }
        let m = DetectedMeasure::from_report(&report)
            .ok_or_else(|| format!("{} carries no reconstructed density", path.display()))?;
        MeasureCandidate::Detected(m)
    } else {
        cfg.density_candidate()
            .ok_or_else(|| "no --density or --detected given and the system declares no density".to_string())?
    };
    let s = verify_measure(&sys, &cand, a.samples, seed).map_err(|e| e.to_string())?;
    println!("max |residual|/|f| = {:.6e} over {} states", s.max_relative, s.samples);
    Ok(if s.max_relative <= a.accept { 0 } else { 2 })
}

struct Range {
    name: String,
    values: Vec<f64>,
}

fn parse_range(arg: &str) -> Result<Range, String> {
    let bad = || format!("--vary '{arg}': expected name=lo:hi:steps");
    let (name, rest) = arg.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = rest.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let (lo, hi) = (num(lo)?, num(hi)?);
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if steps == 0 || !(lo <= hi) || (steps == 1 && lo != hi) {
        return Err(format!("--vary '{arg}': empty range"));
    }
    let values = if steps == 1 {
        vec![lo]
    } else {
        (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
    };
    Ok(Range {
        name: name.trim().to_string(),
        values,
    })
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

fn sweep(a: SweepArgs) -> CmdResult {
    let cfg = load(&a.system)?;
    let th = a.detect.thresholds()?;
    let ranges: Vec<Range> = a.vary.iter().map(|s| parse_range(s)).collect::<Result<_, _>>()?;
    let mut probe = cfg.clone();
    for r in &ranges {
        probe.set_param(&r.name, r.values[0]).map_err(|e| e.message)?;
    }
    let total: usize = ranges.iter().map(|r| r.values.len()).product();
    let mut rows = Vec::with_capacity(total);
    for k in 0..total {
        // Row-major over the ranges, the last one varying fastest.
        let mut rest = k;
        let mut point = vec![0.0; ranges.len()];
        for (i, r) in ranges.iter().enumerate().rev() {
            point[i] = r.values[rest % r.values.len()];
            rest /= r.values.len();
        }
        let mut c = cfg.clone();
        let mut params = serde_json::Map::new();
        for (r, &v) in ranges.iter().zip(&point) {
            c.set_param(&r.name, v).map_err(|e| e.message)?;
            params.insert(r.name.clone(), json!(v));
        }
        let report = run_detect(&c, &a.system, &a.detect).map_err(|e| format!("at {params:?}: {e}"))?;
        eprintln!("{:?}: {}", point, report.verdict.as_str());
        rows.push(json!({
            "params": params,
            "verdict": report.verdict,
            "condition_one_residual": report.condition_one_residual,
            "closedness_residual": opt_num(report.closedness_residual),
            "corank": report.corank,
            "reason": report.reason,
        }));
    }
    let table = json!({
        "system": cfg.name,
        "grid": a.detect.grid,
        "thresholds": th,
        "vary": ranges.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
        "points": rows,
    });
    let mut text = serde_json::to_string_pretty(&table).map_err(|e| e.to_string())?;
    text.push('\n');
    write_out(a.report.as_deref(), &text)?;
    Ok(0)
}

fn emit(a: EmitArgs) -> CmdResult {
    let all = shipped_examples();
    let chosen: Vec<_> = match &a.name {
        Some(n) => {
            let hit: Vec<_> = all.into_iter().filter(|e| e.file == n).collect();
            if hit.is_empty() {
                let names: Vec<&str> = shipped_examples().iter().map(|e| e.file).collect();
                return Err(format!("unknown example '{n}'; available: {}", names.join(", ")));
            }
            hit
        }
        None => all,
    };
    match &a.dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for ex in &chosen {
                let p = dir.join(format!("{}.cfg", ex.file));
                fs::write(&p, &ex.text).map_err(|e| format!("{}: {e}", p.display()))?;
            }
        }
        None if chosen.len() == 1 => print!("{}", chosen[0].text),
        None => return Err("--all needs --dir".into()),
    }
    Ok(0)
}
