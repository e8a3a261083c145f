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


//! Suboptimal commutation map.
//!
//! Starting from a feasible map, every leaf is reopened and processed
//! depth-first. A leaf closes once its error bound certifies ε-suboptimality.
//! Otherwise a better commutation feasible on the whole cell is sought: if
//! one exists and the optimal cost varies little over the cell, the leaf
//! switches to it and is examined again; if not, the cell is bisected.
//!
//! With `parallel_workers > 1`, the top open leaves are evaluated ahead of
//! time on a thread pool. Evaluation is a pure function of the cell and its
//! commutation, and mutations are still applied one leaf at a time in stack
//! order, so the resulting tree is identical to the serial one.

mod bounds;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Simplex;
use crate::phase1::run_phase1;
use crate::problem::{CommutationId, ProblemTemplate, ToleranceConfig};
use crate::tree::{NodeId, PartitionTree, Payload, SolveCounters, VertexSolutionCache};

pub use bounds::{
    abs_error_bound, better_delta, build_over_approx, check_cell, error_against, min_cost_on_cell,
    rel_error_denominator, variability_holds, AbsErrorReport, CellCheck, ErrorTerm, OverApprox,
};

use bounds::{better_with, check_with, variability_with, CellMinima};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    SemiExplicit,
    Explicit,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SemiExplicit => "semi",
            Mode::Explicit => "explicit",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi" | "semi-explicit" | "semi_explicit" => Ok(Mode::SemiExplicit),
            "explicit" => Ok(Mode::Explicit),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

/// Which commutation the variability test looks at before a switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariabilityTarget {
    /// The commutation being replaced.
    #[default]
    Current,
    /// The replacement.
    Candidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub mode: Mode,
    pub tolerances: ToleranceConfig,
    pub parallel_workers: usize,
    pub variability: VariabilityTarget,
}

impl RefineConfig {
    pub fn new(mode: Mode, tolerances: ToleranceConfig) -> Self {
        Self {
            mode,
            tolerances,
            parallel_workers: 1,
            variability: VariabilityTarget::Current,
        }
    }

    pub fn workers(mut self, n: usize) -> Self {
        self.parallel_workers = n;
        self
    }
}

/// `⌈p(p+1) log₂(l₀/ψ) / 2⌉`, the predicted number of bisections needed to
/// bring cells of diameter `l₀` down to `ψ`.
pub fn depth_prediction(l0: f64, psi: f64, p: usize) -> u32 {
    assert!(l0 > 0.0 && psi > 0.0);
    if l0 <= psi {
        return 0;
    }
    let d = (p * (p + 1)) as f64 * (l0 / psi).log2() / 2.0;
    // guard against log₂ of an exact power of two landing just above an integer
    (d - 1e-9).ceil().max(0.0) as u32
}

/// Proxy `ψ ≈ ε_a/ε̄_a + ε_r/ε̄_r` relative to reference tolerances.
pub fn psi_proxy(eps_a: f64, eps_a_ref: f64, eps_r: f64, eps_r_ref: f64) -> f64 {
    eps_a / eps_a_ref + eps_r / eps_r_ref
}

#[derive(Debug)]
enum Action {
    Close(Payload),
    Reassign(CommutationId),
    /// Bisect; children get the given commutation.
    Split(CommutationId),
}

fn evaluate(
    template: &ProblemTemplate,
    cell: &Simplex,
    delta: CommutationId,
    cfg: &RefineConfig,
    cache: &VertexSolutionCache,
    counters: &SolveCounters,
) -> Result<Action> {
    let tol = &cfg.tolerances;
    let over = build_over_approx(template, cell, delta, tol, cache, counters)?;
    let report = abs_error_bound(template, &over, cfg.mode, tol, counters)?;
    let minima = CellMinima::new(template, cell, tol, counters);
    if check_with(&report, &minima, delta, cfg.mode, tol)? == CellCheck::Close {
        return Ok(Action::Close(match cfg.mode {
            Mode::SemiExplicit => Payload::ClosedSubopt(delta),
            Mode::Explicit => Payload::ClosedExplicit {
                delta,
                vertex_solutions: over.vertex_solutions,
            },
        }));
    }
    let Some(better) = better_with(template, &over, &report, &minima, tol, cache, counters)? else {
        return Ok(Action::Split(delta));
    };
    let smooth = match cfg.variability {
        VariabilityTarget::Current => variability_with(template, &over, &minima, tol)?,
        VariabilityTarget::Candidate => {
            let cand = build_over_approx(template, cell, better, tol, cache, counters)?;
            variability_with(template, &cand, &minima, tol)?
        }
    };
    Ok(if smooth { Action::Reassign(better) } else { Action::Split(better) })
}

fn non_convergence(tree: &PartitionTree, leaf: NodeId) -> Error {
    let n = tree.node(leaf);
    Error::NonConvergence {
        depth: n.depth,
        centroid: n.simplex.centroid().iter().copied().collect(),
        diameter: n.simplex.diameter(),
        vertices: n.simplex.vertices().iter().map(|v| v.iter().copied().collect()).collect(),
    }
}

struct Committer {
    reassigns: HashMap<NodeId, usize>,
    limit: usize,
}

impl Committer {
    fn apply(&mut self, tree: &mut PartitionTree, leaf: NodeId, action: Action, tol: &ToleranceConfig) -> Result<()> {
        match action {
            Action::Close(payload) => tree.close(leaf, payload),
            Action::Reassign(delta) => {
                let count = self.reassigns.entry(leaf).or_default();
                *count += 1;
                // each switch strictly improves on the cell, so more switches
                // than commutations means the bounds are cycling
                if *count > self.limit {
                    return Err(non_convergence(tree, leaf));
                }
                tree.reassign(leaf, delta);
            }
            Action::Split(delta) => {
                let n = tree.node(leaf);
                if n.depth >= tol.max_depth {
                    return Err(non_convergence(tree, leaf));
                }
                let cell = n.simplex.clone();
                let (a, b, _) = match cell.split_longest_edge(tree.pool_mut(), tol.min_cell_volume) {
                    Ok(s) => s,
                    Err(Error::DegenerateChild { .. }) => return Err(non_convergence(tree, leaf)),
                    Err(e) => return Err(e),
                };
                tree.push_children(leaf, vec![(a, Some(delta)), (b, Some(delta))]);
            }
        }
        Ok(())
    }
}

fn open_delta(tree: &PartitionTree, leaf: NodeId) -> CommutationId {
    match tree.node(leaf).payload {
        Some(Payload::Open(Some(d))) => d,
        ref other => panic!("open leaf without a commutation: {other:?}"),
    }
}

/// Refine a feasible map in place until every leaf is certified.
pub fn run_phase2(tree: &mut PartitionTree, template: &ProblemTemplate, cfg: &RefineConfig) -> Result<()> {
    cfg.tolerances.validate()?;
    if cfg.parallel_workers == 0 {
        return Err(Error::InvalidConfig("parallel_workers must be at least 1".into()));
    }
    tree.reopen_all();
    let mut committer = Committer {
        reassigns: HashMap::new(),
        limit: template.commutations().len(),
    };
    let tol = cfg.tolerances;

    if cfg.parallel_workers == 1 {
        while let Some(leaf) = tree.pop_open() {
            let delta = open_delta(tree, leaf);
            let cell = tree.node(leaf).simplex.clone();
            let action = evaluate(template, &cell, delta, cfg, tree.cache(), tree.counters())?;
            committer.apply(tree, leaf, action, &tol)?;
        }
        return Ok(());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel_workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let window = 2 * cfg.parallel_workers;
    let mut ready: HashMap<NodeId, (CommutationId, Result<Action>)> = HashMap::new();
    while let Some(&top) = tree.open_stack().last() {
        let fresh = |id: NodeId, ready: &HashMap<NodeId, (CommutationId, Result<Action>)>| {
            ready.get(&id).is_some_and(|(d, _)| *d == open_delta(tree, id))
        };
        if !fresh(top, &ready) {
            let jobs: Vec<(NodeId, Simplex, CommutationId)> = tree
                .open_stack()
                .iter()
                .rev()
                .filter(|&&id| !fresh(id, &ready))
                .take(window)
                .map(|&id| (id, tree.node(id).simplex.clone(), open_delta(tree, id)))
                .collect();
            let (cache, counters) = (tree.cache(), tree.counters());
            let done: Vec<_> = pool.install(|| {
                jobs.into_par_iter()
                    .map(|(id, cell, d)| (id, d, evaluate(template, &cell, d, cfg, cache, counters)))
                    .collect()
            });
            for (id, d, res) in done {
                ready.insert(id, (d, res));
            }
        }
        let leaf = tree.pop_open().expect("stack is nonempty");
        let (_, action) = ready.remove(&leaf).expect("top leaf was evaluated");
        committer.apply(tree, leaf, action?, &tol)?;
    }
    Ok(())
}

/// Feasible map followed by refinement.
pub fn partition(template: &ProblemTemplate, cfg: &RefineConfig) -> Result<PartitionTree> {
    let mut tree = run_phase1(template, &cfg.tolerances)?;
    run_phase2(&mut tree, template, cfg)?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::solve_minlp;
    use crate::problems::{toy_a, toy_a_value};
    use nalgebra::DVector;

    #[test]
    fn depth_formula() {
        assert_eq!(depth_prediction(1.0, 1.0, 2), 0);
        assert_eq!(depth_prediction(2.0, 1.0, 2), 3);
        assert_eq!(depth_prediction(4096.0, 1.0, 2), 36);
    }

    #[test]
    fn toy_a_loose_closes_immediately() {
        let t = toy_a();
        let tree = partition(&t, &RefineConfig::new(Mode::SemiExplicit, ToleranceConfig::new(2.5, 0.0))).unwrap();
        assert_eq!(tree.stats().lambda, 1);
    }

    #[test]
    fn toy_a_tight_is_sound() {
        let t = toy_a();
        let tol = ToleranceConfig::new(0.05, 0.0);
        let tree = partition(&t, &RefineConfig::new(Mode::SemiExplicit, tol)).unwrap();
        assert!(tree.is_fully_closed());
        assert!(tree.log().reassignment_revisits().is_empty());
        for i in 0..=200 {
            let th = -1.0 + 2.0 * i as f64 / 200.0;
            let theta = DVector::from_element(1, th);
            let leaf = tree.locate(&theta).unwrap();
            let d = tree.node(leaf).payload.as_ref().unwrap().delta().unwrap();
            let best = solve_minlp(&t, &theta, &tol).unwrap().value;
            assert!(toy_a_value(d.index(), th) - best <= 0.05 + 1e-6, "θ={th}");
        }
    }

    #[test]
    fn explicit_leaves_carry_vertex_solutions() {
        let t = toy_a();
        let tol = ToleranceConfig::new(0.05, 0.0);
        let tree = partition(&t, &RefineConfig::new(Mode::Explicit, tol)).unwrap();
        for leaf in tree.leaves() {
            let n = tree.node(leaf);
            match n.payload.as_ref().unwrap() {
                Payload::ClosedExplicit { delta, vertex_solutions } => {
                    assert_eq!(vertex_solutions.len(), 2);
                    for (x, v) in vertex_solutions.iter().zip(n.simplex.vertices()) {
                        assert!((x[0] - toy_a_value(delta.index(), v[0])).abs() < 1e-6);
                    }
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn zero_overlap_does_not_converge() {
        let t = crate::problems::toy_zero_overlap();
        let mut tol = ToleranceConfig::new(0.05, 0.0);
        tol.max_depth = 20;
        match partition(&t, &RefineConfig::new(Mode::SemiExplicit, tol)) {
            Err(Error::NonConvergence { depth, centroid, diameter, .. }) => {
                assert_eq!(depth, 20);
                assert!((centroid[0] + 0.1).abs() < 1e-3);
                assert!(diameter < 1e-5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let t = toy_a();
        let tol = ToleranceConfig::new(0.01, 0.0);
        let serial = partition(&t, &RefineConfig::new(Mode::SemiExplicit, tol)).unwrap();
        let par = partition(&t, &RefineConfig::new(Mode::SemiExplicit, tol).workers(4)).unwrap();
        assert_eq!(serial.nodes().len(), par.nodes().len());
        for (a, b) in serial.nodes().iter().zip(par.nodes()) {
            assert_eq!(a.simplex, b.simplex);
            assert_eq!(a.payload, b.payload);
        }
    }
}
