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


//! Acceptance run: one PASS/FAIL line per criterion, then a hard assert.
//!
//! `cargo test -p simplex-mpc --test acceptance -- --nocapture`

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simplex_mpc::bench::{bench_sweep, eps_a_rule, psi_depth_slope, BenchConfig, BenchOutcome, STANDARD_SETTINGS};
use simplex_mpc::geometry::{Point, Simplex, VertexId};
use simplex_mpc::persist::{decode, encode, LayoutCounts, StorageModel};
use simplex_mpc::phase2::{abs_error_bound, build_over_approx, partition, Mode, RefineConfig};
use simplex_mpc::problem::{solve_conic, solve_minlp, CommutationId, ProblemTemplate, ToleranceConfig};
use simplex_mpc::problems::{toy_a, toy_a_value, toy_b, toy_b_enlarged, toy_zero_overlap, CwhProblem};
use simplex_mpc::runtime::eval_explicit;
use simplex_mpc::tree::{PartitionTree, PointLocation, SolveCounters, VertexSolutionCache};
use simplex_mpc::Error;

const SOUND_TOL: f64 = 1e-6;
const SAMPLES: usize = 1000;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Closed-form optimal cost of the one-dimensional toys.
/// `cut`: δ=0 needs θ ≤ cut, δ=1 needs θ ≥ −cut.
fn toy_value(delta: usize, th: f64, cut: Option<f64>) -> Option<f64> {
    let feasible = match (delta, cut) {
        (_, None) => true,
        (0, Some(c)) => th <= c + 1e-12,
        (_, Some(c)) => th >= -c - 1e-12,
    };
    feasible.then(|| toy_a_value(delta, th))
}

fn toy_opt(th: f64, cut: Option<f64>) -> f64 {
    [0, 1]
        .iter()
        .filter_map(|&d| toy_value(d, th, cut))
        .fold(f64::INFINITY, f64::min)
}

fn uniform(template: &ProblemTemplate, n: usize, seed: u64) -> Vec<Point> {
    let (lo, hi) = template.domain().bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| DVector::from_fn(lo.len(), |i, _| rng.gen_range(lo[i]..=hi[i])))
        .collect()
}

fn leaf_delta(tree: &PartitionTree, th: &Point) -> CommutationId {
    let leaf = tree.locate(th).expect("θ in Θ");
    tree.node(leaf).payload.as_ref().and_then(|p| p.delta()).expect("closed leaf")
}

struct Fixture {
    cwh_t: ProblemTemplate,
    sweep: BenchOutcome,
    tol: ToleranceConfig,
}

impl Fixture {
    fn run(&self, setting: usize, mode: Mode) -> &simplex_mpc::bench::BenchRun {
        self.sweep
            .runs
            .iter()
            .find(|r| r.setting == STANDARD_SETTINGS[setting] && r.mode == mode)
            .expect("setting was run")
    }
}

fn toy_cases(mode: Mode) -> Vec<(&'static str, ProblemTemplate, Option<f64>, ToleranceConfig, PartitionTree)> {
    let mut out = Vec::new();
    for (name, t, cut, tol) in [
        ("toy_a", toy_a(), None, ToleranceConfig::new(0.05, 0.0)),
        ("toy_b", toy_b(), Some(0.25), ToleranceConfig::new(0.02, 0.1)),
    ] {
        let tree = partition(&t, &RefineConfig::new(mode, tol)).expect("toy partition");
        out.push((name, t, cut, tol, tree));
    }
    out
}

fn c1_soundness(fx: &Fixture) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for (name, t, cut, tol, tree) in toy_cases(Mode::SemiExplicit) {
        for th in uniform(&t, SAMPLES, 1) {
            let d = leaf_delta(&tree, &th);
            let v = toy_value(d.index(), th[0], cut).ok_or(format!("{name}: assigned δ infeasible at {th}"))?;
            let best = toy_opt(th[0], cut);
            let slack = v - best - tol.eps_a.max(tol.eps_r * best);
            worst = worst.max(slack);
            check(slack <= SOUND_TOL, format!("{name}: θ={} excess {slack:e}", th[0]))?;
        }
    }
    let run = fx.run(0, Mode::SemiExplicit);
    let tol = ToleranceConfig::new(fx.sweep.rows[1].eps_a, STANDARD_SETTINGS[0].eps_r);
    for th in uniform(&run.template, SAMPLES, 2) {
        let d = leaf_delta(&run.tree, &th);
        let v = solve_conic(fx.cwh_t.program(d), &th, &fx.tol)
            .map_err(|e| e.to_string())?
            .value()
            .ok_or(format!("cwh: assigned δ infeasible at {th:?}"))?;
        let best = solve_minlp(&fx.cwh_t, &th, &fx.tol).map_err(|e| e.to_string())?.value;
        let slack = v - best - tol.eps_a.max(tol.eps_r * best);
        worst = worst.max(slack);
        check(slack <= SOUND_TOL, format!("cwh: θ={:?} excess {slack:e}", th.as_slice()))?;
    }
    Ok(format!("toy_a, toy_b, cwh x {SAMPLES} samples; worst excess over bound {worst:.2e}"))
}

fn c2_explicit(fx: &Fixture) -> Outcome {
    let (mut worst_res, mut worst_cost) = (0.0_f64, f64::NEG_INFINITY);
    let toys = toy_cases(Mode::Explicit);
    let run = fx.run(0, Mode::Explicit);
    let mut cases: Vec<(&str, &ProblemTemplate, &PartitionTree, ToleranceConfig)> =
        toys.iter().map(|(n, t, _, tol, tree)| (*n, t, tree, *tol)).collect();
    let cwh_tol = ToleranceConfig::new(fx.sweep.rows[1].eps_a, STANDARD_SETTINGS[0].eps_r);
    cases.push(("cwh", &run.template, &run.tree, cwh_tol));
    for (name, t, tree, tol) in cases {
        for th in uniform(t, SAMPLES, 3) {
            let e = eval_explicit(tree, &th).map_err(|e| e.to_string())?;
            let d = t.commutations().id_of(&e.delta).ok_or("unknown δ")?;
            let prog = t.program(d);
            let res = prog.constraint_residual(&th, &e.x);
            let best = solve_minlp(t, &th, &fx.tol).map_err(|e| e.to_string())?.value;
            let excess = prog.objective(&th, &e.x) - best - tol.eps_a.max(tol.eps_r * best);
            worst_res = worst_res.max(res);
            worst_cost = worst_cost.max(excess);
            check(res <= SOUND_TOL, format!("{name}: residual {res:e} at {:?}", th.as_slice()))?;
            check(excess <= SOUND_TOL, format!("{name}: cost excess {excess:e} at {:?}", th.as_slice()))?;
        }
    }
    Ok(format!(
        "toy_a, toy_b, cwh x {SAMPLES}; worst residual {worst_res:.2e}, worst cost excess {worst_cost:.2e}"
    ))
}

fn c3_coverage(fx: &Fixture) -> Outcome {
    let mut msgs = Vec::new();
    let toy = partition(&toy_b(), &RefineConfig::new(Mode::Explicit, ToleranceConfig::new(1e-4, 0.0)))
        .map_err(|e| e.to_string())?;
    let run = fx.run(1, Mode::SemiExplicit);
    for (name, tree) in [("toy_b", &toy), ("cwh", &run.tree)] {
        let vol: f64 = tree.leaves().map(|l| tree.node(l).simplex.volume()).sum();
        let rel = (vol - tree.domain_volume()).abs() / tree.domain_volume();
        check(rel <= 1e-9, format!("{name}: leaf volume mismatch {rel:e}"))?;
        let t = if name == "cwh" { run.template.clone() } else { toy_b() };
        for th in uniform(&t, 10_000, 4) {
            let leaf = tree.locate(&th).map_err(|e| format!("{name}: locate failed at {th:?}: {e}"))?;
            check(
                tree.node(leaf).simplex.contains(&th, 1e-9).unwrap_or(false),
                format!("{name}: leaf does not contain θ"),
            )?;
        }
        msgs.push(format!("{name} λ={} rel vol err {rel:.1e}", tree.stats().lambda));
    }
    Ok(format!("{}; 10^4 locates each", msgs.join(", ")))
}

fn c4_dominance(fx: &Fixture) -> Outcome {
    let t = &fx.cwh_t;
    let tol = fx.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (lo, hi) = t.domain().bounds();
    let (mut cells, mut tries, mut points) = (0, 0, 0);
    let mut min_gap = f64::INFINITY;
    while cells < 100 {
        tries += 1;
        if tries > 2000 {
            return Err(format!("only {cells} usable random cells"));
        }
        // random cell of moderate size
        let c = DVector::from_fn(2, |i, _| rng.gen_range(lo[i]..=hi[i]));
        let verts: Vec<(VertexId, Point)> = (0..3)
            .map(|k| {
                let v = DVector::from_fn(2, |i, _| {
                    (c[i] + rng.gen_range(-0.3..0.3) * (hi[i] - lo[i])).clamp(lo[i], hi[i])
                });
                (VertexId(k), v)
            })
            .collect();
        let Ok(cell) = Simplex::new(verts) else { continue };
        if cell.volume() < 1e-3 {
            continue;
        }
        let Ok(best) = solve_minlp(t, &cell.centroid(), &tol) else { continue };
        let cache = VertexSolutionCache::new();
        let counters = SolveCounters::default();
        let Ok(over) = build_over_approx(t, &cell, best.delta, &tol, &cache, &counters) else { continue };
        cells += 1;
        let semi = abs_error_bound(t, &over, Mode::SemiExplicit, &tol, &counters).map_err(|e| e.to_string())?;
        let expl = abs_error_bound(t, &over, Mode::Explicit, &tol, &counters).map_err(|e| e.to_string())?;
        let e_semi = semi.max().map(|m| m.error);
        let e_expl = expl.max().map(|m| m.error).ok_or("explicit bound undefined")?;
        let prog = t.program(best.delta);
        let k = 6;
        for i in 0..=k {
            for j in 0..=(k - i) {
                let a = DVector::from_vec(vec![i as f64, j as f64, (k - i - j) as f64]) / k as f64;
                let th = cell.vertex_matrix() * &a;
                let mut vals: Vec<(CommutationId, f64)> = Vec::new();
                for d in t.commutations().ids() {
                    if let Some(v) = solve_conic(t.program(d), &th, &tol).map_err(|e| e.to_string())?.value() {
                        vals.push((d, v));
                    }
                }
                let own = vals.iter().find(|(d, _)| *d == best.delta).map(|v| v.1);
                let others = vals.iter().filter(|(d, _)| *d != best.delta).map(|v| v.1).fold(f64::INFINITY, f64::min);
                let all = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
                points += 1;
                if let (Some(own), Some(eb), true) = (own, e_semi, others.is_finite()) {
                    let true_err = own - others;
                    min_gap = min_gap.min(eb - true_err);
                    check(true_err <= eb + SOUND_TOL, format!("semi bound {eb} < true {true_err} at {th:?}"))?;
                }
                let mut x = DVector::zeros(over.vertex_solutions[0].len());
                for (w, xi) in a.iter().zip(&over.vertex_solutions) {
                    x.axpy(*w, xi, 1.0);
                }
                let true_err = prog.objective(&th, &x) - all;
                min_gap = min_gap.min(e_expl - true_err);
                check(true_err <= e_expl + SOUND_TOL, format!("explicit bound {e_expl} < true {true_err} at {th:?}"))?;
            }
        }
    }
    Ok(format!("cwh: 100 random cells, {points} grid points; smallest bound margin {min_gap:.2e}"))
}

fn c5_toy_oracle() -> Outcome {
    let t = toy_a();
    let tol = ToleranceConfig::default();
    let cell = Simplex::new(vec![
        (VertexId(0), DVector::from_element(1, -1.0)),
        (VertexId(1), DVector::from_element(1, 1.0)),
    ])
    .map_err(|e| e.to_string())?;
    let cache = VertexSolutionCache::new();
    let counters = SolveCounters::default();
    let over = build_over_approx(&t, &cell, CommutationId(0), &tol, &cache, &counters).map_err(|e| e.to_string())?;
    let rep = abs_error_bound(&t, &over, Mode::SemiExplicit, &tol, &counters).map_err(|e| e.to_string())?;
    let m = rep.max().ok_or("no comparison term")?;
    // grid oracle: chord of (θ+½)² on [−1,1] minus (θ−½)²
    let chord = |th: f64| 0.25 + (th + 1.0) * (2.25 - 0.25) / 2.0;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=200_000 {
        let th = -1.0 + 2.0 * i as f64 / 200_000.0;
        let g = chord(th) - (th - 0.5) * (th - 0.5);
        if g > best {
            (best, arg) = (g, th);
        }
    }
    check((m.error - best).abs() <= 1e-6, format!("ē_a = {} vs oracle {best}", m.error))?;
    check((m.witness[0] - arg).abs() <= 1e-3, format!("witness {} vs {arg}", m.witness[0]))?;

    // δ(θ)=0 is only admissible where 2θ ≤ ε, δ(θ)=1 where −2θ ≤ ε
    let eps = 0.05;
    let tree = partition(&t, &RefineConfig::new(Mode::SemiExplicit, ToleranceConfig::new(eps, 0.0)))
        .map_err(|e| e.to_string())?;
    let (mut lo_one, mut hi_zero) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=20_000 {
        let th = -1.0 + 2.0 * i as f64 / 20_000.0;
        match leaf_delta(&tree, &DVector::from_element(1, th)).index() {
            0 => hi_zero = hi_zero.max(th),
            _ => lo_one = lo_one.min(th),
        }
    }
    let band = eps / 2.0 + 1e-6;
    check(hi_zero <= band, format!("δ=0 used at θ={hi_zero} > ε/2"))?;
    check(lo_one >= -band, format!("δ=1 used at θ={lo_one} < −ε/2"))?;
    Ok(format!(
        "ē_a={:.9} at θ={:.6}; δ=0 up to θ={hi_zero:.4}, δ=1 from θ={lo_one:.4}, band ±{:.3}",
        m.error,
        m.witness[0],
        eps / 2.0
    ))
}

fn c6_trends(fx: &Fixture) -> Outcome {
    let rows = &fx.sweep.rows;
    let mut msg = Vec::new();
    for imp in ["semi", "explicit"] {
        let r: Vec<_> = rows.iter().filter(|r| r.implementation == imp).collect();
        for w in r.windows(2) {
            check(w[1].tau >= w[0].tau && w[1].lambda >= w[0].lambda, format!("{imp}: trend broken at s={}", w[1].s))?;
        }
        msg.push(format!(
            "{imp} λ {} τ {}",
            r.iter().map(|x| x.lambda.to_string()).collect::<Vec<_>>().join("→"),
            r.iter().map(|x| x.tau.to_string()).collect::<Vec<_>>().join("→")
        ));
    }
    for s in rows.iter().filter(|r| r.implementation == "semi") {
        let e = rows
            .iter()
            .find(|r| r.implementation == "explicit" && r.s == s.s)
            .ok_or("missing explicit row")?;
        check(e.lambda >= s.lambda, format!("explicit λ {} < semi λ {} at s={}", e.lambda, s.lambda, s.s))?;
    }
    let slope = psi_depth_slope(rows, "semi").ok_or("no slope")?;
    check(slope > 0.0, format!("τ vs ln(1/ψ) slope {slope}"))?;
    Ok(format!("{}; τ~ln(1/ψ) slope {slope:.2}", msg.join("; ")))
}

fn c7_query_speed(fx: &Fixture) -> Outcome {
    let rows = &fx.sweep.rows;
    let imp = rows.iter().find(|r| r.implementation == "implicit").ok_or("no implicit row")?;
    let mut msg = Vec::new();
    for (k, s) in STANDARD_SETTINGS[..3].iter().enumerate() {
        let get = |name: &str| rows.iter().find(|r| r.implementation == name && r.s == s.s);
        let (semi, expl) = (get("semi").ok_or("no semi row")?, get("explicit").ok_or("no explicit row")?);
        check(
            expl.t_query_median < semi.t_query_median && semi.t_query_median < imp.t_query_median,
            format!("ordering broken at setting {k}"),
        )?;
        let ratio = imp.t_query_median / expl.t_query_median;
        check(ratio >= 10.0, format!("explicit only {ratio:.1}x faster"))?;
        msg.push(format!("s={}: {ratio:.0}x", s.s));
    }
    Ok(format!(
        "medians over 200 queries: implicit {:.2e}s; explicit speed-up {}",
        imp.t_query_median,
        msg.join(", ")
    ))
}

fn c8_logging(fx: &Fixture) -> Outcome {
    let mut lin = Vec::new();
    for run in &fx.sweep.runs {
        let recs = run.log.records();
        let last = recs.last().ok_or("empty log")?;
        check((last.closed_volume_fraction - 1.0).abs() < 1e-9, "log does not reach 1.0")?;
        for w in recs.windows(2) {
            check(
                w[1].closed_volume_fraction >= w[0].closed_volume_fraction - 1e-12,
                "closed volume fraction decreased",
            )?;
        }
        // deviation from a straight line in event index, recorded only
        let n = recs.len() as f64;
        let dev = recs
            .iter()
            .enumerate()
            .map(|(i, r)| (r.closed_volume_fraction - (i + 1) as f64 / n).abs())
            .fold(0.0, f64::max);
        if run.mode == Mode::SemiExplicit {
            lin.push(format!("s={}: {dev:.2}", run.setting.s));
        }
    }
    Ok(format!("monotone, reaches 1.0; max deviation from linear (semi) {}", lin.join(", ")))
}

fn c9_schedule() -> Outcome {
    let t = toy_b();
    let mut sizes = Vec::new();
    for mode in [Mode::SemiExplicit, Mode::Explicit] {
        let tol = ToleranceConfig::new(0.005, 0.0);
        let a = partition(&t, &RefineConfig::new(mode, tol).workers(1)).map_err(|e| e.to_string())?;
        let b = partition(&t, &RefineConfig::new(mode, tol).workers(8)).map_err(|e| e.to_string())?;
        for model in [StorageModel::M1, StorageModel::M2] {
            let (x, y) = (encode(&a, model).map_err(|e| e.to_string())?, encode(&b, model).map_err(|e| e.to_string())?);
            check(x == y, format!("{mode:?}/{model:?} files differ"))?;
            sizes.push(x.len());
        }
    }
    Ok(format!("toy_b semi+explicit, M1+M2 byte-identical ({sizes:?} bytes)"))
}

fn c10_serialization(fx: &Fixture) -> Outcome {
    let mut notes = Vec::new();
    let fine = ToleranceConfig::new(5e-7, 0.0);
    let toy_semi = partition(&toy_a(), &RefineConfig::new(Mode::SemiExplicit, fine)).map_err(|e| e.to_string())?;
    let toy_expl = partition(&toy_a(), &RefineConfig::new(Mode::Explicit, fine)).map_err(|e| e.to_string())?;
    let cases: Vec<(&str, &PartitionTree, ProblemTemplate)> = vec![
        ("toy_a/semi", &toy_semi, toy_a()),
        ("toy_a/explicit", &toy_expl, toy_a()),
        ("cwh/semi", &fx.run(2, Mode::SemiExplicit).tree, fx.run(2, Mode::SemiExplicit).template.clone()),
        ("cwh/explicit", &fx.run(2, Mode::Explicit).tree, fx.run(2, Mode::Explicit).template.clone()),
    ];
    for (name, tree, t) in cases {
        let counts = LayoutCounts::of(tree);
        let pts = uniform(&t, SAMPLES, 6);
        for model in [StorageModel::M1, StorageModel::M2] {
            let bytes = encode(tree, model).map_err(|e| e.to_string())?;
            let counted = counts.file_bytes(model);
            let dev = (bytes.len() as f64 - counted as f64).abs() / counted as f64;
            check(dev <= 0.10, format!("{name} {model:?}: {} bytes vs counted {counted}", bytes.len()))?;
            let back = decode(&bytes).map_err(|e| e.to_string())?;
            for th in &pts {
                let a = tree.locate_leaf(th).map_err(|e| e.to_string())?;
                let b = back.locate_leaf(th).map_err(|e| e.to_string())?;
                check(a.delta == b.delta, format!("{name} {model:?}: δ differs at {th:?}"))?;
                if counts.explicit {
                    let ea = eval_explicit(tree, th).map_err(|e| e.to_string())?;
                    let eb = eval_explicit(&back, th).map_err(|e| e.to_string())?;
                    let gap = (&ea.output - &eb.output).amax();
                    let allowed = if model == StorageModel::M1 { 0.0 } else { 1e-12 };
                    check(gap <= allowed, format!("{name} {model:?}: output differs by {gap:e}"))?;
                }
            }
            if counts.leaves >= 1000 {
                let ideal = counts.idealized_bytes(model);
                notes.push(format!(
                    "{name} {model:?} λ={} {}B (idealized {:.0}B, {:+.0}%)",
                    counts.leaves,
                    bytes.len(),
                    ideal,
                    100.0 * (bytes.len() as f64 / ideal - 1.0)
                ));
            }
        }
    }
    check(!notes.is_empty(), "no tree with λ ≥ 1000")?;
    Ok(format!("round trips exact on {SAMPLES} samples; {}", notes.join("; ")))
}

fn c11_failures() -> Outcome {
    let tol = ToleranceConfig::new(0.05, 0.0);
    let witness = match partition(&toy_b_enlarged(), &RefineConfig::new(Mode::SemiExplicit, tol)) {
        Err(Error::DomainNotCovered { witness }) => witness,
        other => return Err(format!("enlarged toy_b: {:?}", other.map(|t| t.stats().lambda))),
    };
    check(witness[0].abs() > 1.25, format!("witness {witness:?} inside Θ*"))?;
    let mut tol = tol;
    tol.max_depth = 20;
    match partition(&toy_zero_overlap(), &RefineConfig::new(Mode::SemiExplicit, tol)) {
        Err(Error::NonConvergence { depth, centroid, diameter, .. }) => {
            check(depth == 20, format!("stopped at depth {depth}"))?;
            Ok(format!(
                "DomainNotCovered witness {:.3}; NonConvergence at depth {depth} near θ={:.4} (diameter {diameter:.1e})",
                witness[0], centroid[0]
            ))
        }
        other => Err(format!("zero overlap: {:?}", other.map(|t| t.stats().lambda))),
    }
}

#[test]
fn acceptance() {
    let cwh_t = CwhProblem::default().template().expect("cwh template");
    let tol = ToleranceConfig::default();
    let cfg = BenchConfig {
        workers: 8,
        queries: 200,
        ..Default::default()
    };
    let sweep = bench_sweep(&cwh_t, &STANDARD_SETTINGS[..3], &cfg).expect("cwh sweep");
    let fx = Fixture { cwh_t, sweep, tol };
    let e0 = eps_a_rule(&fx.cwh_t, STANDARD_SETTINGS[0].s, &tol).unwrap();
    assert!((fx.sweep.rows[1].eps_a - e0).abs() < 1e-12);

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("ε-suboptimality soundness", Box::new(|| c1_soundness(&fx))),
        ("explicit soundness", Box::new(|| c2_explicit(&fx))),
        ("coverage", Box::new(|| c3_coverage(&fx))),
        ("bound dominance", Box::new(|| c4_dominance(&fx))),
        ("toy-a hand oracle", Box::new(c5_toy_oracle)),
        ("tolerance-sweep trends", Box::new(|| c6_trends(&fx))),
        ("query-speed ordering", Box::new(|| c7_query_speed(&fx))),
        ("convergence logging", Box::new(|| c8_logging(&fx))),
        ("schedule invariance", Box::new(c9_schedule)),
        ("serialization", Box::new(|| c10_serialization(&fx))),
        ("failure paths", Box::new(c11_failures)),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
