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


//! Per-cell certificates: the vertex interpolant of the optimal cost, the
//! absolute error bound against other commutations, the relative-error
//! denominator, commutation improvement and the variability test.
//!
//! All cell programs parameterize `θ = V λ` with `λ` in the unit simplex, so
//! that `θ ∈ R` becomes a nonnegativity constraint.

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::conic::{Cone, ConicProgram, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::geometry::{Barycentric, Simplex};
use crate::phase1::feasible_everywhere;
use crate::problem::{CommutationId, ProblemTemplate, ToleranceConfig};
use crate::tree::{SolveCounters, SolveKind, VertexSolutionCache};

use super::Mode;

/// Vertex interpolant `V̄_δ(θ) = Σ αᵢ(θ) V*_δ(vᵢ)`.
#[derive(Debug, Clone)]
pub struct OverApprox {
    pub cell: Simplex,
    pub delta: CommutationId,
    pub vertex_values: DVector<f64>,
    pub vertex_solutions: Vec<DVector<f64>>,
}

impl OverApprox {
    pub fn eval(&self, alpha: &Barycentric) -> f64 {
        self.vertex_values.dot(&alpha.alpha)
    }

    pub fn eval_at(&self, theta: &DVector<f64>) -> Result<f64> {
        Ok(self.eval(&self.cell.barycentric(theta)?))
    }
}

pub fn build_over_approx(
    template: &ProblemTemplate,
    cell: &Simplex,
    delta: CommutationId,
    cfg: &ToleranceConfig,
    cache: &VertexSolutionCache,
    counters: &SolveCounters,
) -> Result<OverApprox> {
    let mut values = DVector::zeros(cell.p() + 1);
    let mut sols = Vec::with_capacity(cell.p() + 1);
    for (i, (&id, v)) in cell.ids().iter().zip(cell.vertices()).enumerate() {
        let res: Arc<SolveResult> = cache.solve(template, id, v, delta, cfg, counters)?;
        let sol = res.solution.as_ref().ok_or(Error::VertexInfeasible { vertex: i })?;
        values[i] = sol.value;
        sols.push(sol.x.clone());
    }
    Ok(OverApprox {
        cell: cell.clone(),
        delta,
        vertex_values: values,
        vertex_solutions: sols,
    })
}

/// Program of `delta` over the cell in variables `(x, λ)`.
fn cell_program(template: &ProblemTemplate, delta: CommutationId, cell: &Simplex) -> ConicProgram {
    let prog = template.program(delta);
    let (n, p) = (prog.n(), cell.p());
    let k = p + 1;
    let mut b = prog.embed(&cell.vertex_matrix(), &DVector::zeros(p));
    let mut g = DMatrix::zeros(k, n + k);
    g.view_mut((0, n), (k, k)).fill_with_identity();
    b.push(Cone::NonNeg(k), g, DVector::zeros(k));
    let mut g = DMatrix::zeros(1, n + k);
    g.view_mut((0, n), (1, k)).fill(1.0);
    b.push(Cone::Zero(1), g, DVector::from_element(1, -1.0));
    b.build()
}

fn solve_cell(prog: &ConicProgram, cfg: &ToleranceConfig, what: &str) -> Result<Option<(f64, DVector<f64>)>> {
    let res = cfg.solver().solve_definite(prog, what)?;
    match res.status {
        SolveStatus::Optimal => {
            let s = res.solution.expect("optimal carries a solution");
            Ok(Some((s.value, s.x)))
        }
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(Error::Unbounded { context: what.into() }),
        SolveStatus::Numerical => unreachable!("escalated by solve_definite"),
    }
}

/// `max_{θ∈R} [V̄_δ(θ) − V*_{δ′}(θ)]` and its maximizer, or `None` if `δ′`
/// is infeasible on all of `R`.
pub fn error_against(
    template: &ProblemTemplate,
    over: &OverApprox,
    other: CommutationId,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<Option<(f64, DVector<f64>)>> {
    counters.bump(SolveKind::ErrorBound);
    let n = template.program(other).n();
    let mut prog = cell_program(template, other, &over.cell);
    for (i, w) in over.vertex_values.iter().enumerate() {
        prog.cost[n + i] -= w;
    }
    Ok(solve_cell(&prog, cfg, "error bound")?.map(|(v, z)| {
        let lambda = z.rows(n, over.cell.p() + 1).into_owned();
        (-v, over.cell.vertex_matrix() * lambda)
    }))
}

/// `min_{θ∈R} V*_δ(θ)`, or `None` if `δ` is infeasible on all of `R`.
pub fn min_cost_on_cell(
    template: &ProblemTemplate,
    cell: &Simplex,
    delta: CommutationId,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<Option<f64>> {
    counters.bump(SolveKind::MinCost);
    Ok(solve_cell(&cell_program(template, delta, cell), cfg, "cell minimum")?.map(|(v, _)| v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTerm {
    pub delta: CommutationId,
    pub error: f64,
    pub witness: DVector<f64>,
}

/// Per-commutation errors of one cell. `terms` holds every compared
/// commutation feasible somewhere on the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsErrorReport {
    pub terms: Vec<ErrorTerm>,
}

impl AbsErrorReport {
    /// Largest error; `None` means no compared commutation is feasible on the
    /// cell.
    pub fn max(&self) -> Option<&ErrorTerm> {
        self.terms.iter().fold(None, |best: Option<&ErrorTerm>, t| match best {
            Some(b) if b.error >= t.error => Some(b),
            _ => Some(t),
        })
    }

    pub fn all_others_infeasible(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, delta: CommutationId) -> Option<&ErrorTerm> {
        self.terms.iter().find(|t| t.delta == delta)
    }
}

fn compared(template: &ProblemTemplate, delta: CommutationId, mode: Mode) -> Vec<CommutationId> {
    template
        .commutations()
        .ids()
        .filter(|&d| mode == Mode::Explicit || d != delta)
        .collect()
}

pub fn abs_error_bound(
    template: &ProblemTemplate,
    over: &OverApprox,
    mode: Mode,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<AbsErrorReport> {
    let mut terms = Vec::new();
    for other in compared(template, over.delta, mode) {
        if let Some((error, witness)) = error_against(template, over, other, cfg, counters)? {
            terms.push(ErrorTerm { delta: other, error, witness });
        }
    }
    Ok(AbsErrorReport { terms })
}

/// Memo of cell minima, shared by the relative and variability tests.
pub(crate) struct CellMinima<'a> {
    template: &'a ProblemTemplate,
    cell: &'a Simplex,
    cfg: &'a ToleranceConfig,
    counters: &'a SolveCounters,
    memo: RefCell<Vec<Option<Option<f64>>>>,
}

impl<'a> CellMinima<'a> {
    pub fn new(
        template: &'a ProblemTemplate,
        cell: &'a Simplex,
        cfg: &'a ToleranceConfig,
        counters: &'a SolveCounters,
    ) -> Self {
        Self {
            template,
            cell,
            cfg,
            counters,
            memo: RefCell::new(vec![None; template.commutations().len()]),
        }
    }

    pub fn get(&self, delta: CommutationId) -> Result<Option<f64>> {
        if let Some(v) = self.memo.borrow()[delta.index()] {
            return Ok(v);
        }
        let v = min_cost_on_cell(self.template, self.cell, delta, self.cfg, self.counters)?;
        self.memo.borrow_mut()[delta.index()] = Some(v);
        Ok(v)
    }

    /// Smallest minimum over `ids`, skipping commutations infeasible on the
    /// cell.
    pub fn min_over(&self, ids: impl IntoIterator<Item = CommutationId>) -> Result<Option<f64>> {
        let mut best: Option<f64> = None;
        for d in ids {
            if let Some(v) = self.get(d)? {
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        Ok(best)
    }

    pub fn denominator(&self, delta: CommutationId, mode: Mode) -> Result<Option<f64>> {
        let d = self.min_over(compared(self.template, delta, mode))?;
        Ok(d.filter(|&v| v > self.cfg.rel_denominator_floor))
    }
}

/// Denominator of the relative error bound, `None` when no compared
/// commutation is feasible on the cell or the minimum is at or below the
/// configured floor.
pub fn rel_error_denominator(
    template: &ProblemTemplate,
    cell: &Simplex,
    delta: CommutationId,
    mode: Mode,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<Option<f64>> {
    CellMinima::new(template, cell, cfg, counters).denominator(delta, mode)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellCheck {
    Close,
    NeedsWork { e_bar_a: f64, d_min: Option<f64> },
}

pub(crate) fn check_with(
    report: &AbsErrorReport,
    minima: &CellMinima<'_>,
    delta: CommutationId,
    mode: Mode,
    cfg: &ToleranceConfig,
) -> Result<CellCheck> {
    let e = match report.max() {
        None if mode == Mode::SemiExplicit => return Ok(CellCheck::Close),
        None => f64::NEG_INFINITY,
        Some(t) => t.error,
    };
    if e <= cfg.eps_a {
        return Ok(CellCheck::Close);
    }
    let d_min = if cfg.eps_r > 0.0 { minima.denominator(delta, mode)? } else { None };
    if let Some(d) = d_min {
        if e / d <= cfg.eps_r {
            return Ok(CellCheck::Close);
        }
    }
    Ok(CellCheck::NeedsWork { e_bar_a: e, d_min })
}

pub fn check_cell(
    template: &ProblemTemplate,
    over: &OverApprox,
    mode: Mode,
    cfg: &ToleranceConfig,
    counters: &SolveCounters,
) -> Result<CellCheck> {
    let report = abs_error_bound(template, over, mode, cfg, counters)?;
    let minima = CellMinima::new(template, &over.cell, cfg, counters);
    check_with(&report, &minima, over.delta, mode, cfg)
}

/// A commutation feasible on the whole cell that beats `δ` by at least the
/// ε threshold somewhere on it, the largest improvement winning.
pub(crate) fn better_with(
    template: &ProblemTemplate,
    over: &OverApprox,
    report: &AbsErrorReport,
    minima: &CellMinima<'_>,
    cfg: &ToleranceConfig,
    cache: &VertexSolutionCache,
    counters: &SolveCounters,
) -> Result<Option<CommutationId>> {
    let d = if cfg.eps_r > 0.0 {
        minima.denominator(over.delta, Mode::SemiExplicit)?
    } else {
        None
    };
    let threshold = cfg.eps_a.max(cfg.eps_r * d.unwrap_or(0.0));
    let mut best: Option<(CommutationId, f64)> = None;
    for other in template.commutations().ids().filter(|&o| o != over.delta) {
        let Some(term) = report.get(other) else { continue };
        if !feasible_everywhere(template, other, &over.cell, cfg, cache, counters)? {
            continue;
        }
        if best.map_or(true, |(_, m)| term.error > m + cfg.tie_tol) {
            best = Some((other, term.error));
        }
    }
    Ok(best.filter(|&(_, m)| m >= threshold).map(|(d, _)| d))
}

pub fn better_delta(
    template: &ProblemTemplate,
    over: &OverApprox,
    cfg: &ToleranceConfig,
    cache: &VertexSolutionCache,
    counters: &SolveCounters,
) -> Result<Option<CommutationId>> {
    let report = abs_error_bound(template, over, Mode::SemiExplicit, cfg, counters)?;
    let minima = CellMinima::new(template, &over.cell, cfg, counters);
    better_with(template, over, &report, &minima, cfg, cache, counters)
}

pub(crate) fn variability_with(
    template: &ProblemTemplate,
    over: &OverApprox,
    minima: &CellMinima<'_>,
    cfg: &ToleranceConfig,
) -> Result<bool> {
    let vmax = over.vertex_values.max();
    let vmin = minima
        .get(over.delta)?
        .ok_or(Error::VertexInfeasible { vertex: 0 })?;
    let vstar = minima.min_over(template.commutations().ids())?.unwrap_or(vmin);
    Ok(vmax - vmin < cfg.threshold(vstar))
}

/// Whether `V*_δ` varies over the cell by less than the ε threshold at the
/// cell's smallest optimal cost.
pub fn variability_holds(
    template: &ProblemTemplate,
    cell: &Simplex,
    delta: CommutationId,
    cfg: &ToleranceConfig,
    cache: &VertexSolutionCache,
    counters: &SolveCounters,
) -> Result<bool> {
    let over = build_over_approx(template, cell, delta, cfg, cache, counters)?;
    let minima = CellMinima::new(template, cell, cfg, counters);
    variability_with(template, &over, &minima, cfg)
}
