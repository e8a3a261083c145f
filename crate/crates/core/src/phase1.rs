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


//! Feasible commutation map.
//!
//! Each open cell gets the commutation that lets the parameter travel
//! furthest, on average, from the cell centroid towards its vertices while
//! staying feasible. The cell is closed if that commutation is feasible at all
//! of its vertices (feasible sets are convex, so the whole cell is then
//! feasible); otherwise it is bisected along its longest edge.

use nalgebra::{DMatrix, DVector};

use crate::conic::{Cone, SolveStatus};
use crate::error::{Error, Result};
use crate::geometry::Simplex;
use crate::problem::{CommutationId, ProblemTemplate, ToleranceConfig};
use crate::tree::{Payload, PartitionTree, SolveCounters, SolveKind, VertexSolutionCache};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shot {
    /// Largest feasible step `α* ∈ [0, 1]` along the ray.
    Reach(f64),
    CentroidInfeasible,
}

/// `max α` such that `θ = c + α (v_i − c)` is feasible for `delta`.
pub fn shoot(
    template: &ProblemTemplate,
    delta: CommutationId,
    cell: &Simplex,
    vertex: usize,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<Shot> {
    let c = cell.centroid();
    if !centroid_feasible(template, delta, &c, cfg, counters)? {
        return Ok(Shot::CentroidInfeasible);
    }
    shoot_from_feasible(template, delta, &c, &cell.vertices()[vertex], cfg, counters)
}

fn centroid_feasible(
    template: &ProblemTemplate,
    delta: CommutationId,
    c: &DVector<f64>,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<bool> {
    counters.bump(SolveKind::Feasibility);
    let prog = template.program(delta).feasibility_at(c);
    let res = cfg.solver().solve_definite(&prog, "centroid feasibility")?;
    Ok(res.status == SolveStatus::Optimal)
}

fn shoot_from_feasible(
    template: &ProblemTemplate,
    delta: CommutationId,
    c: &DVector<f64>,
    target: &DVector<f64>,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<Shot> {
    counters.bump(SolveKind::Shooting);
    let prog = template.program(delta);
    let n = prog.n();
    let d = target - c;
    let map = DMatrix::from_column_slice(d.len(), 1, d.as_slice());
    let mut cost = DVector::zeros(n + 1);
    cost[n] = -1.0;
    let mut b = prog.embed(&map, c).cost(cost, 0.0);
    let mut g = DMatrix::zeros(2, n + 1);
    g[(0, n)] = 1.0;
    g[(1, n)] = -1.0;
    b.push(Cone::NonNeg(2), g, DVector::from_vec(vec![0.0, 1.0]));
    let res = cfg.solver().solve_definite(&b.build(), "shooting problem")?;
    match res.status {
        SolveStatus::Optimal => {
            let alpha = res.solution.expect("optimal carries a solution").x[n];
            Ok(Shot::Reach(alpha.clamp(0.0, 1.0)))
        }
        // the centroid was feasible a moment ago; only a solver disagreement
        // at the feasibility boundary lands here
        SolveStatus::Infeasible => Ok(Shot::Reach(0.0)),
        SolveStatus::Unbounded | SolveStatus::Numerical => {
            unreachable!("α is bounded and numerical failures are escalated")
        }
    }
}

/// Commutation with the largest summed reach over all centroid-vertex rays,
/// or `None` if every commutation is infeasible at the centroid.
pub fn maxvol(
    template: &ProblemTemplate,
    cell: &Simplex,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<Option<CommutationId>> {
    let c = cell.centroid();
    let mut best: Option<(CommutationId, f64)> = None;
    for delta in template.commutations().ids() {
        if !centroid_feasible(template, delta, &c, cfg, counters)? {
            continue;
        }
        let mut score = 0.0;
        for v in cell.vertices() {
            if let Shot::Reach(a) = shoot_from_feasible(template, delta, &c, v, cfg, counters)? {
                score += a;
            }
        }
        if best.map_or(true, |(_, s)| score > s + cfg.tie_tol) {
            best = Some((delta, score));
        }
    }
    Ok(best.map(|(d, _)| d))
}

/// Whether `delta` is feasible at every vertex of `cell`, which by convexity
/// certifies the whole cell.
pub fn feasible_everywhere(
    template: &ProblemTemplate,
    delta: CommutationId,
    cell: &Simplex,
    cfg: &ToleranceConfig,
    cache: &VertexSolutionCache,
    counters: &SolveCounters,
) -> Result<bool> {
    for (&id, v) in cell.ids().iter().zip(cell.vertices()) {
        if !cache.solve(template, id, v, delta, cfg, counters)?.is_optimal() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Feasible map over the template's domain.
pub fn run_phase1(template: &ProblemTemplate, cfg: &ToleranceConfig) -> Result<PartitionTree> {
    cfg.validate()?;
    let mut tree = PartitionTree::for_template(template, cfg.geom_tol)?;
    refine_feasible(&mut tree, template, cfg)?;
    Ok(tree)
}

/// Close every open leaf of `tree` with a commutation feasible on it.
pub fn refine_feasible(tree: &mut PartitionTree, template: &ProblemTemplate, cfg: &ToleranceConfig) -> Result<()> {
    while let Some(leaf) = tree.pop_open() {
        let node = tree.node(leaf);
        let cell = node.simplex.clone();
        let depth = node.depth;
        let delta = maxvol(template, &cell, cfg, tree.counters())?.ok_or_else(|| {
            Error::DomainNotCovered {
                witness: cell.centroid().iter().copied().collect(),
            }
        })?;
        if feasible_everywhere(template, delta, &cell, cfg, tree.cache(), tree.counters())? {
            tree.close(leaf, Payload::ClosedFeasible(delta));
            continue;
        }
        let exceeded = || Error::DepthExceeded {
            depth,
            centroid: cell.centroid().iter().copied().collect(),
        };
        if depth >= cfg.max_depth {
            return Err(exceeded());
        }
        let (s1, s2, _) = cell
            .split_longest_edge(tree.pool_mut(), cfg.min_cell_volume)
            .map_err(|e| match e {
                Error::DegenerateChild { .. } => exceeded(),
                other => other,
            })?;
        log::trace!("phase 1 split at depth {depth}");
        tree.push_children(leaf, vec![(s1, None), (s2, None)]);
    }
    Ok(())
}
