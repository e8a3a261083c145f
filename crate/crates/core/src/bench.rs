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


//! Tolerance sweeps: tree size, depth, offline time, query time and file
//! size for each setting and evaluation mode.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::persist::{encode, StorageModel};
use crate::phase2::{partition, psi_proxy, Mode, RefineConfig};
use crate::problem::{solve_minlp, ProblemTemplate, ToleranceConfig};
use crate::problems::CwhProblem;
use crate::runtime::{duration_summary, eval_explicit, eval_implicit, eval_semi_explicit};
use crate::sim::{simulate_closed_loop, Controller, Disturbance};
use crate::tree::{PartitionTree, ProgressLog};

/// `ε_a` is the largest optimal cost over the vertices of `sΘ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSetting {
    pub s: f64,
    pub eps_r: f64,
}

/// Coarsest first.
pub const STANDARD_SETTINGS: [EpsSetting; 4] = [
    EpsSetting { s: 0.5, eps_r: 2.0 },
    EpsSetting { s: 0.25, eps_r: 1.0 },
    EpsSetting { s: 0.1, eps_r: 0.1 },
    EpsSetting { s: 0.03, eps_r: 0.05 },
];

pub fn eps_a_rule(template: &ProblemTemplate, s: f64, cfg: &ToleranceConfig) -> Result<f64> {
    let scaled = template.domain().scaled(s)?;
    let mut worst = f64::NEG_INFINITY;
    for v in scaled.vertices() {
        worst = worst.max(solve_minlp(template, v, cfg)?.value);
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Base tolerances; `eps_a` and `eps_r` are overwritten per setting.
    pub tolerances: ToleranceConfig,
    pub workers: usize,
    pub queries: usize,
    pub seed: u64,
    pub modes: Vec<Mode>,
    pub implicit_baseline: bool,
    /// Domain scale factor applied after each coverage failure.
    pub shrink: f64,
    pub max_shrinks: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            tolerances: ToleranceConfig::default(),
            workers: 1,
            queries: 200,
            seed: 0,
            modes: vec![Mode::SemiExplicit, Mode::Explicit],
            implicit_baseline: true,
            shrink: 0.9,
            max_shrinks: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub implementation: String,
    pub s: f64,
    pub eps_a: f64,
    pub eps_r: f64,
    pub tau: u32,
    pub lambda: usize,
    /// Offline time [s].
    pub t_solve: f64,
    /// Median online time per query [s], location plus any solve.
    pub t_query_median: f64,
    pub t_query_min: f64,
    pub t_query_max: f64,
    /// Model-1 file size.
    pub bytes: usize,
    pub bytes_m2: usize,
    /// Domain scale actually used after coverage retries.
    pub domain_scale: f64,
    pub psi: f64,
    /// `ok`, or `non_convergence` when refinement gave up (then `tau` is the
    /// depth reached and the size and timing columns are zero).
    pub status: &'static str,
}

pub const BENCH_CSV_HEADER: &str = "implementation,eps_a,eps_r,tau,lambda,t_solve,t_query_median,bytes,\
s,t_query_min,t_query_max,bytes_m2,domain_scale,psi,status";

pub fn write_bench_csv(rows: &[BenchRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{BENCH_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:.6},{:.9},{},{},{:.9},{:.9},{},{},{},{}",
            r.implementation,
            r.eps_a,
            r.eps_r,
            r.tau,
            r.lambda,
            r.t_solve,
            r.t_query_median,
            r.bytes,
            r.s,
            r.t_query_min,
            r.t_query_max,
            r.bytes_m2,
            r.domain_scale,
            r.psi,
            r.status
        )?;
    }
    Ok(())
}

/// One finished partition of a sweep.
#[derive(Debug)]
pub struct BenchRun {
    pub setting: EpsSetting,
    pub mode: Mode,
    pub template: ProblemTemplate,
    pub tree: PartitionTree,
    pub log: ProgressLog,
}

#[derive(Debug, Default)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub runs: Vec<BenchRun>,
}

/// Uniform samples from the bounding box of Θ, seeded.
pub fn sample_domain(template: &ProblemTemplate, n: usize, seed: u64) -> Vec<Point> {
    let (lo, hi) = template.domain().bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| DVector::from_fn(lo.len(), |i, _| rng.gen_range(lo[i]..=hi[i])))
        .collect()
}

/// Partitions, shrinking Θ on coverage failures.
fn partition_with_shrink(
    base: &ProblemTemplate,
    cfg: &RefineConfig,
    bench: &BenchConfig,
) -> Result<(ProblemTemplate, PartitionTree, f64)> {
    let mut scale = 1.0;
    for attempt in 0..=bench.max_shrinks {
        let template = if scale == 1.0 {
            base.clone()
        } else {
            base.with_domain(base.domain().scaled(scale)?)?
        };
        match partition(&template, cfg) {
            Ok(tree) => return Ok((template, tree, scale)),
            Err(Error::DomainNotCovered { witness }) if attempt < bench.max_shrinks => {
                log::warn!("domain not covered at {witness:?}; shrinking by {}", bench.shrink);
                scale *= bench.shrink;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("the last attempt returns")
}

fn time_queries(points: &[Point], mut f: impl FnMut(&Point) -> Result<Duration>) -> Result<(f64, f64, f64)> {
    let mut samples = Vec::with_capacity(points.len());
    for th in points {
        match f(th) {
            Ok(d) => samples.push(d),
            Err(Error::OutOfDomain) => {}
            Err(e) => return Err(e),
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no query landed in the domain".into()));
    }
    Ok(duration_summary(&samples))
}

pub fn bench_sweep(template: &ProblemTemplate, settings: &[EpsSetting], cfg: &BenchConfig) -> Result<BenchOutcome> {
    let mut out = BenchOutcome::default();
    let Some(reference) = settings.first() else {
        return Ok(out);
    };
    let eps_a_ref = eps_a_rule(template, reference.s, &cfg.tolerances)?;
    if cfg.implicit_baseline {
        let pts = sample_domain(template, cfg.queries, cfg.seed);
        let (med, min, max) = time_queries(&pts, |th| {
            let t0 = Instant::now();
            eval_implicit(template, th, &cfg.tolerances)?;
            Ok(t0.elapsed())
        })?;
        out.rows.push(BenchRow {
            implementation: "implicit".into(),
            s: 0.0,
            eps_a: 0.0,
            eps_r: 0.0,
            tau: 0,
            lambda: 0,
            t_solve: 0.0,
            t_query_median: med,
            t_query_min: min,
            t_query_max: max,
            bytes: 0,
            bytes_m2: 0,
            domain_scale: 1.0,
            psi: 0.0,
            status: "ok",
        });
    }
    for &setting in settings {
        let eps_a = eps_a_rule(template, setting.s, &cfg.tolerances)?;
        let mut tol = cfg.tolerances;
        tol.eps_a = eps_a;
        tol.eps_r = setting.eps_r;
        for &mode in &cfg.modes {
            let rc = RefineConfig::new(mode, tol).workers(cfg.workers);
            let psi = psi_proxy(eps_a, eps_a_ref, setting.eps_r, reference.eps_r);
            let t0 = Instant::now();
            let (tpl, tree, scale) = match partition_with_shrink(template, &rc, cfg) {
                Ok(r) => r,
                Err(Error::NonConvergence { depth, centroid, .. }) => {
                    log::warn!("{} at s={}: no convergence near {centroid:?}", mode.name(), setting.s);
                    out.rows.push(BenchRow {
                        implementation: mode.name().into(),
                        s: setting.s,
                        eps_a,
                        eps_r: setting.eps_r,
                        tau: depth,
                        lambda: 0,
                        t_solve: t0.elapsed().as_secs_f64(),
                        t_query_median: 0.0,
                        t_query_min: 0.0,
                        t_query_max: 0.0,
                        bytes: 0,
                        bytes_m2: 0,
                        domain_scale: 1.0,
                        psi,
                        status: "non_convergence",
                    });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let t_solve = t0.elapsed().as_secs_f64();
            let pts = sample_domain(&tpl, cfg.queries, cfg.seed);
            let (med, min, max) = match mode {
                Mode::SemiExplicit => time_queries(&pts, |th| {
                    let t0 = Instant::now();
                    eval_semi_explicit(&tree, &tpl, th, &tol)?;
                    Ok(t0.elapsed())
                })?,
                Mode::Explicit => time_queries(&pts, |th| {
                    let t0 = Instant::now();
                    eval_explicit(&tree, th)?;
                    Ok(t0.elapsed())
                })?,
            };
            let stats = tree.stats();
            out.rows.push(BenchRow {
                implementation: mode.name().into(),
                s: setting.s,
                eps_a,
                eps_r: setting.eps_r,
                tau: stats.tau,
                lambda: stats.lambda,
                t_solve,
                t_query_median: med,
                t_query_min: min,
                t_query_max: max,
                bytes: encode(&tree, StorageModel::M1)?.len(),
                bytes_m2: encode(&tree, StorageModel::M2)?.len(),
                domain_scale: scale,
                psi,
                status: "ok",
            });
            out.runs.push(BenchRun {
                setting,
                mode,
                log: tree.log().clone(),
                template: tpl,
                tree,
            });
        }
    }
    Ok(out)
}

/// Least-squares slope of `τ` against `ln(1/ψ)` over the rows of one mode;
/// `None` with fewer than two distinct abscissae.
pub fn psi_depth_slope(rows: &[BenchRow], implementation: &str) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.implementation == implementation && r.status == "ok" && r.psi > 0.0)
        .map(|r| ((1.0 / r.psi).ln(), f64::from(r.tau)))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuelSample {
    pub seed: u64,
    pub theta0: [f64; 2],
    pub fuel: f64,
    pub fuel_implicit: f64,
}

impl FuelSample {
    /// `fuel / fuel_implicit − 1`, zero when both are zero. Fuel below
    /// `FUEL_FLOOR` counts as zero so solver noise is not divided by.
    pub fn overconsumption(&self) -> f64 {
        const FUEL_FLOOR: f64 = 1e-9;
        if self.fuel_implicit > FUEL_FLOOR {
            self.fuel / self.fuel_implicit - 1.0
        } else if self.fuel > FUEL_FLOOR {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Nominal closed-loop fuel of a tree controller against the implicit
/// controller, from one seeded initial state per seed drawn in `0.8·Θ`.
pub fn fuel_study(
    problem: &CwhProblem,
    template: &ProblemTemplate,
    tree: &PartitionTree,
    mode: Mode,
    seeds: &[u64],
    steps: usize,
    cfg: &ToleranceConfig,
) -> Result<Vec<FuelSample>> {
    let (lo, hi) = template.domain().bounds();
    seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let th0 = Vector2::new(
                0.8 * rng.gen_range(lo[0]..=hi[0]),
                0.8 * rng.gen_range(lo[1]..=hi[1]),
            );
            let ctrl = match mode {
                Mode::SemiExplicit => Controller::SemiExplicit(tree),
                Mode::Explicit => Controller::Explicit(tree),
            };
            let run = |c| simulate_closed_loop(problem, template, c, th0, steps, Disturbance::None, cfg);
            Ok(FuelSample {
                seed,
                theta0: [th0[0], th0[1]],
                fuel: run(ctrl)?.fuel,
                fuel_implicit: run(Controller::Implicit)?.fuel,
            })
        })
        .collect()
}
