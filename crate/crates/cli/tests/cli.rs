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


use std::path::Path;

use simplex_mpc::persist::problem_to_json;
use simplex_mpc::problems::toy_a;
use simplex_mpc_cli::{run, EXIT_FAILURE, EXIT_IO, EXIT_NON_CONVERGENCE, EXIT_NOT_COVERED, EXIT_OK};

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut argv = vec!["simplex-mpc"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn partition_writes_tree_and_monotone_progress() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("t.bin");
    let csv = dir.path().join("p.csv");
    let (code, out) = cli(&[
        "partition", "--problem", "toy_a", "--eps-a", "0.05", "--mode", "semi", "--out", s(&tree), "--progress-csv", s(&csv),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("lambda="));
    assert!(tree.exists());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "wall_time_s,closed_leaf_count,closed_volume_fraction,open_count,depth");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty());
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1]);
        assert!(w[1][2] >= w[0][2] - 1e-12);
    }
    assert!((rows.last().unwrap()[2] - 1.0).abs() < 1e-9);
}

#[test]
fn identical_invocations_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (k, workers) in ["1", "1", "8"].iter().enumerate() {
        let p = dir.path().join(format!("t{k}.bin"));
        let (code, _) = cli(&[
            "partition", "--problem", "toy_b", "--eps-a", "0.01", "--workers", workers, "--out", s(&p),
        ]);
        assert_eq!(code, EXIT_OK);
        files.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn eval_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let semi = dir.path().join("semi.bin");
    let expl = dir.path().join("expl.bin");
    assert_eq!(cli(&["partition", "--problem", "toy_a", "--eps-a", "0.05", "--out", s(&semi)]).0, EXIT_OK);
    assert_eq!(
        cli(&["partition", "--problem", "toy_a", "--eps-a", "0.05", "--mode", "explicit", "--model", "m2", "--out", s(&expl)]).0,
        EXIT_OK
    );

    // θ = −0.8 is far inside the region where δ = 0 is optimal: x = (θ + 0.5)²
    let (code, out) = cli(&["eval", "--tree", s(&semi), "--problem", "toy_a", "--theta", "-0.8"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("delta=(0)"), "{out}");
    let value: f64 = out.trim().rsplit("value=").next().unwrap().parse().unwrap();
    assert!((value - 0.09).abs() < 1e-6);

    let (code, out) = cli(&["eval", "--tree", s(&expl), "--theta", "-0.8"]);
    assert_eq!(code, EXIT_OK);
    let u: f64 = out.trim().rsplit("control=").next().unwrap().parse().unwrap();
    // interpolation overestimates a convex function by at most ε
    assert!(u >= 0.09 - 1e-6 && u <= 0.09 + 0.05 + 1e-6, "{u}");

    let thetas = dir.path().join("thetas.txt");
    std::fs::write(&thetas, "-0.5\n# comment\n0.25\n\n0.9\n").unwrap();
    let (code, out) = cli(&["eval", "--tree", s(&expl), "--theta-file", s(&thetas)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 3);

    assert_eq!(cli(&["eval", "--tree", s(&semi), "--theta", "0.1"]).0, EXIT_FAILURE);
    assert_eq!(cli(&["eval", "--tree", s(&expl), "--theta", "3.0"]).0, EXIT_FAILURE);
}

#[test]
fn failure_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.bin");
    assert_eq!(
        cli(&["partition", "--problem", "toy_b_enlarged", "--eps-a", "0.1", "--out", s(&out)]).0,
        EXIT_NOT_COVERED
    );
    assert_eq!(
        cli(&["partition", "--problem", "toy_zero_overlap", "--eps-a", "0.05", "--max-depth", "20", "--out", s(&out)]).0,
        EXIT_NON_CONVERGENCE
    );
    assert!(!out.exists());
    assert_eq!(cli(&["inspect", "--tree", s(&dir.path().join("missing.bin"))]).0, EXIT_IO);
    std::fs::write(&out, b"MPT1 definitely not a tree file").unwrap();
    assert_eq!(cli(&["inspect", "--tree", s(&out)]).0, EXIT_IO);
    assert_eq!(cli(&["partition", "--problem", "no_such_problem.json"]).0, EXIT_IO);
    assert_eq!(cli(&["bogus"]).0, EXIT_FAILURE);
}

#[test]
fn json_problem_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("toy.json");
    std::fs::write(&problem, problem_to_json(&toy_a()).unwrap()).unwrap();
    let tree = dir.path().join("t.bin");
    let (code, out) = cli(&["partition", "--problem", s(&problem), "--eps-a", "0.05", "--out", s(&tree)]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out) = cli(&["inspect", "--tree", s(&tree)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("model=m1 mode=semi p=1"), "{out}");
    let bytes = std::fs::metadata(&tree).unwrap().len();
    assert!(out.contains(&format!("M1: counted={bytes} ")), "{out}");
}

#[test]
fn simulate_from_the_origin_uses_no_fuel() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let (code, out) = cli(&["simulate", "--steps", "4", "--x0", "0,0", "--csv", s(&csv)]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("controller=implicit"));
    assert!(out.contains("fuel_mm_s=0.000000"), "{out}");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
}

#[test]
fn bench_and_plot_data_on_a_toy() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = cli(&["bench", "--problem", "toy_a", "--eps-list", "2", "--queries", "10"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("implementation,eps_a,eps_r,tau,lambda,t_solve,t_query_median,bytes"));
    assert_eq!(out.lines().count(), 1 + 1 + 4);
    assert_eq!(cli(&["bench", "--problem", "toy_a", "--eps-list", "7"]).0, EXIT_FAILURE);

    let plots = dir.path().join("plots");
    let (code, _) = cli(&[
        "export-plot-data", "--problem", "toy_a", "--eps-list", "1", "--queries", "10", "--out-dir", s(&plots),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(plots.join("query_times.csv").exists());
    assert!(plots.join("convergence_semi_0.csv").exists());
    assert!(plots.join("convergence_explicit_0.csv").exists());
}
