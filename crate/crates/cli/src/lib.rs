//   Copyright 2026 simplex-mpc developers
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.


//! `simplex-mpc` command line.
//!
//! Exit codes: 0 success, 1 other failures, 2 domain not covered by the
//! feasible commutations, 3 refinement did not converge, 4 file errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DVector, Vector2};

use simplex_mpc::bench::{bench_sweep, fuel_study, write_bench_csv, BenchConfig, STANDARD_SETTINGS};
use simplex_mpc::persist::{load, load_problem, save, LayoutCounts, LoadedTree, StorageModel};
use simplex_mpc::phase2::{partition, Mode, RefineConfig};
use simplex_mpc::problem::{ProblemTemplate, ToleranceConfig};
use simplex_mpc::problems::{toy_a, toy_b, toy_b_enlarged, toy_disjoint, toy_zero_overlap, CwhProblem};
use simplex_mpc::runtime::{eval_explicit, eval_semi_explicit};
use simplex_mpc::sim::{simulate_closed_loop, Controller, Disturbance};
use simplex_mpc::tree::PointLocation;
use simplex_mpc::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_COVERED: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "simplex-mpc", version, about = "Simplicial partitioning for semi-explicit and explicit MPC")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Log level (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a tree: feasible map, then ε-suboptimal refinement.
    Partition(PartitionArgs),
    /// Evaluate a stored tree at one or more parameters.
    Eval(EvalArgs),
    /// Closed-loop run of the spacecraft problem.
    Simulate(SimulateArgs),
    /// Tolerance sweep with size, depth and timing per setting.
    Bench(BenchArgs),
    /// Print statistics of a stored tree.
    Inspect(InspectArgs),
    /// Write CSV series for convergence, query-time and fuel plots.
    ExportPlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    /// Built-in name (toy_a, toy_b, toy_b_enlarged, toy_zero_overlap,
    /// toy_disjoint, cwh) or a JSON problem file.
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 0.0)]
    pub eps_a: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps_r: f64,
    #[arg(long, default_value = "semi")]
    pub mode: Mode,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub max_depth: Option<u32>,
    #[arg(long, default_value = "tree.bin")]
    pub out: PathBuf,
    /// Storage model, m1 or m2.
    #[arg(long, default_value = "m1")]
    pub model: StorageModel,
    #[arg(long)]
    pub progress_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub tree: PathBuf,
    /// Comma-separated parameter vector.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "theta_file")]
    pub theta: Option<String>,
    /// One comma-separated parameter vector per line.
    #[arg(long)]
    pub theta_file: Option<PathBuf>,
    /// Needed for semi-explicit trees, which solve online.
    #[arg(long)]
    pub problem: Option<String>,
    /// Parameters are SI (m, m/s); converted to the cwh problem's cm, mm/s.
    #[arg(long)]
    pub si: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Tree controller; the implicit controller is used without one.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Initial state `z,v` in cm, mm/s. Drawn from 0.8Θ with the seed if absent.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Uniform disturbance bound `z,v` in cm, mm/s.
    #[arg(long)]
    pub disturbance: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "cwh")]
    pub problem: String,
    /// Number of standard settings to run, coarsest first (1 to 4).
    #[arg(long, default_value_t = 2)]
    pub eps_list: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub tree: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, default_value = "cwh")]
    pub problem: String,
    #[arg(long, default_value_t = 2)]
    pub eps_list: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    /// Closed-loop runs per setting for the fuel series.
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 30)]
    pub steps: usize,
    #[arg(long, default_value = "plot-data")]
    pub out_dir: PathBuf,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DomainNotCovered { .. } => EXIT_NOT_COVERED,
        Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        Error::Io { .. } | Error::CorruptFile(_) | Error::VersionMismatch { .. } => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

/// Parses `argv` (including the program name) and runs the command,
/// writing reports to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log).try_init();
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Partition(a) => cmd_partition(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Simulate(a) => cmd_simulate(a, cli.seed, out),
        Command::Bench(a) => cmd_bench(a, cli.seed, out),
        Command::Inspect(a) => cmd_inspect(a, out),
        Command::ExportPlotData(a) => cmd_plot(a, cli.seed, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Built-in problems by name, otherwise a JSON file.
pub fn resolve_problem(name: &str) -> Result<ProblemTemplate> {
    Ok(match name {
        "toy_a" => toy_a(),
        "toy_b" => toy_b(),
        "toy_b_enlarged" => toy_b_enlarged(),
        "toy_zero_overlap" => toy_zero_overlap(),
        "toy_disjoint" => toy_disjoint(),
        "cwh" => CwhProblem::default().template()?,
        path => load_problem(Path::new(path))?,
    })
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("{t:?} is not a number")))
        })
        .collect()
}

fn parse_pair(s: &str) -> Result<Vector2<f64>> {
    match parse_vector(s)?.as_slice() {
        [a, b] => Ok(Vector2::new(*a, *b)),
        _ => Err(Error::InvalidConfig(format!("expected two components, got {s:?}"))),
    }
}

fn cmd_partition(a: &PartitionArgs, out: &mut dyn Write) -> Result<()> {
    let template = resolve_problem(&a.problem)?;
    let mut tol = ToleranceConfig::new(a.eps_a, a.eps_r);
    if let Some(d) = a.max_depth {
        tol.max_depth = d;
    }
    let cfg = RefineConfig::new(a.mode, tol).workers(a.workers);
    let tree = match partition(&template, &cfg) {
        Ok(t) => t,
        Err(e) => {
            if let Error::Numerical { program, .. } = &e {
                let dump = a.out.with_extension("failure.json");
                if std::fs::write(&dump, serde_json::to_string_pretty(program.as_ref())?).is_ok() {
                    eprintln!("failing program written to {}", dump.display());
                }
            }
            return Err(e);
        }
    };
    let bytes = save(&tree, &a.out, a.model)?;
    if let Some(p) = &a.progress_csv {
        let mut w = create(p)?;
        tree.log().write_csv(&mut w).map_err(|e| Error::io(p, e))?;
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    let s = tree.stats();
    writeln!(
        out,
        "problem={} mode={} tau={} lambda={} time_s={:.3} bytes={} out={}",
        template.label(),
        a.mode.name(),
        s.tau,
        s.lambda,
        s.wall_time_s,
        bytes,
        a.out.display()
    )
    .map_err(stdout_err)?;
    let counts: Vec<String> = s.solve_counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "solves {}", counts.join(" ")).map_err(stdout_err)
}

fn fmt_vec(v: &DVector<f64>) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let tree = load(&a.tree)?;
    let mut thetas = Vec::new();
    match (&a.theta, &a.theta_file) {
        (Some(t), _) => thetas.push(parse_vector(t)?),
        (None, Some(path)) => {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            for line in BufReader::new(f).lines() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if !line.trim().is_empty() && !line.starts_with('#') {
                    thetas.push(parse_vector(&line)?);
                }
            }
        }
        (None, None) => return Err(Error::InvalidConfig("give --theta or --theta-file".into())),
    }
    let template = a.problem.as_deref().map(resolve_problem).transpose()?;
    for raw in thetas {
        let mut theta = DVector::from_vec(raw);
        if a.si {
            if theta.len() != 2 {
                return Err(Error::InvalidConfig("--si expects a two-component state".into()));
            }
            theta = DVector::from_column_slice(CwhProblem::to_scaled(&Vector2::new(theta[0], theta[1])).as_slice());
        }
        match tree.mode() {
            Mode::Explicit => {
                let e = eval_explicit(&tree, &theta)?;
                writeln!(out, "theta={} delta={} control={}", fmt_vec(&theta), e.delta, fmt_vec(&e.output))
            }
            Mode::SemiExplicit => {
                let t = template
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("semi-explicit trees need --problem".into()))?;
                let e = eval_semi_explicit(&tree, t, &theta, &ToleranceConfig::default())?;
                let u = DVector::from_iterator(t.output_indices().len(), t.output_indices().iter().map(|&i| e.x[i]));
                writeln!(
                    out,
                    "theta={} delta={} control={} value={}",
                    fmt_vec(&theta),
                    t.commutations().get(e.delta),
                    fmt_vec(&u),
                    e.value
                )
            }
        }
        .map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let cwh = CwhProblem::default();
    let template = cwh.template()?;
    let tree = a.tree.as_deref().map(load).transpose()?;
    let ctrl = match &tree {
        None => Controller::Implicit,
        Some(t) if t.mode() == Mode::Explicit => Controller::Explicit(t),
        Some(t) => Controller::SemiExplicit(t),
    };
    let x0 = match &a.x0 {
        Some(s) => parse_pair(s)?,
        None => {
            let c = &cwh.config;
            let s = simplex_mpc::bench::sample_domain(&template, 1, seed).remove(0);
            Vector2::new(0.8 * s[0].clamp(-c.z_max, c.z_max), 0.8 * s[1].clamp(-c.v_max, c.v_max))
        }
    };
    let disturbance = match &a.disturbance {
        Some(s) => {
            let b = parse_pair(s)?;
            Disturbance::Uniform { bound: [b[0], b[1]], seed }
        }
        None => Disturbance::None,
    };
    let tr = simulate_closed_loop(&cwh, &template, ctrl, x0, a.steps, disturbance, &ToleranceConfig::default())?;
    if let Some(p) = &a.csv {
        let mut w = create(p)?;
        tr.write_csv(&mut w).map_err(|e| Error::io(p, e))?;
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    writeln!(
        out,
        "controller={} steps={} x0={},{} final={},{} fuel_mm_s={:.6} out_of_domain_steps={}",
        tr.controller,
        a.steps,
        x0[0],
        x0[1],
        tr.final_theta[0],
        tr.final_theta[1],
        tr.fuel,
        tr.out_of_domain_steps
    )
    .map_err(stdout_err)
}

fn settings(n: usize) -> Result<&'static [simplex_mpc::bench::EpsSetting]> {
    if !(1..=STANDARD_SETTINGS.len()).contains(&n) {
        return Err(Error::InvalidConfig(format!("--eps-list must be 1..={}", STANDARD_SETTINGS.len())));
    }
    Ok(&STANDARD_SETTINGS[..n])
}

fn cmd_bench(a: &BenchArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let template = resolve_problem(&a.problem)?;
    let cfg = BenchConfig {
        workers: a.workers,
        queries: a.queries,
        seed,
        ..Default::default()
    };
    let res = bench_sweep(&template, settings(a.eps_list)?, &cfg)?;
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            write_bench_csv(&res.rows, &mut w).map_err(|e| Error::io(p, e))?;
            w.flush().map_err(|e| Error::io(p, e))?;
            writeln!(out, "wrote {} rows to {}", res.rows.len(), p.display()).map_err(stdout_err)
        }
        None => write_bench_csv(&res.rows, out).map_err(stdout_err),
    }
}

fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let file_bytes = std::fs::metadata(&a.tree).map_err(|e| Error::io(&a.tree, e))?.len();
    let tree = load(&a.tree)?;
    let (tau, lambda) = tree.depth_and_leaves();
    let model = match tree {
        LoadedTree::M1(_) => "m1",
        LoadedTree::M2(_) => "m2",
    };
    writeln!(
        out,
        "model={model} mode={} p={} outputs={} tau={tau} lambda={lambda} bytes={file_bytes}",
        tree.mode().name(),
        tree.p(),
        tree.output_indices().len()
    )
    .map_err(stdout_err)?;
    if let LoadedTree::M1(t) = &tree {
        let c = LayoutCounts::of(t);
        for m in [StorageModel::M1, StorageModel::M2] {
            writeln!(
                out,
                "{m:?}: counted={} idealized={:.0}",
                c.file_bytes(m),
                c.idealized_bytes(m)
            )
            .map_err(stdout_err)?;
        }
        writeln!(out, "vertices={} nodes={} commutations={}", c.vertices, c.nodes, t.commutations().len())
            .map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let cwh = CwhProblem::default();
    let template = match a.problem.as_str() {
        "cwh" => cwh.template()?,
        other => resolve_problem(other)?,
    };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let cfg = BenchConfig {
        workers: a.workers,
        queries: a.queries,
        seed,
        ..Default::default()
    };
    let res = bench_sweep(&template, settings(a.eps_list)?, &cfg)?;

    let q = a.out_dir.join("query_times.csv");
    let mut w = create(&q)?;
    write_bench_csv(&res.rows, &mut w).map_err(|e| Error::io(&q, e))?;
    w.flush().map_err(|e| Error::io(&q, e))?;

    for (k, run) in res.runs.iter().enumerate() {
        let p = a.out_dir.join(format!("convergence_{}_{}.csv", run.mode.name(), k / 2));
        let mut w = create(&p)?;
        run.log.write_csv(&mut w).map_err(|e| Error::io(&p, e))?;
        w.flush().map_err(|e| Error::io(&p, e))?;
    }

    if a.problem == "cwh" {
        let p = a.out_dir.join("fuel.csv");
        let mut w = create(&p)?;
        let io = |e| Error::io(&p, e);
        writeln!(w, "implementation,s,eps_r,seed,z0_cm,v0_mm_s,fuel,fuel_implicit,overconsumption").map_err(io)?;
        let seeds: Vec<u64> = (0..a.runs as u64).map(|k| seed.wrapping_add(k)).collect();
        for run in &res.runs {
            let samples = fuel_study(&cwh, &run.template, &run.tree, run.mode, &seeds, a.steps, &cfg.tolerances)?;
            for s in samples {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    run.mode.name(),
                    run.setting.s,
                    run.setting.eps_r,
                    s.seed,
                    s.theta0[0],
                    s.theta0[1],
                    s.fuel,
                    s.fuel_implicit,
                    s.overconsumption()
                )
                .map_err(io)?;
            }
        }
        w.flush().map_err(io)?;
    }
    writeln!(out, "plot data written to {}", a.out_dir.display()).map_err(stdout_err)
}
