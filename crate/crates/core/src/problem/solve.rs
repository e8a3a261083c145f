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

use nalgebra::DVector;

use super::{Commutation, CommutationId, FixedCommutationProgram, ProblemTemplate, ToleranceConfig};
use crate::conic::{SolveResult, SolveStatus};
use crate::error::{Error, Result};

pub fn instantiate<'a>(
    template: &'a ProblemTemplate,
    delta: &Commutation,
) -> Result<&'a FixedCommutationProgram> {
    let id = template
        .commutations()
        .id_of(delta)
        .ok_or_else(|| Error::UnknownCommutation(delta.to_string()))?;
    Ok(template.program(id))
}

/// Solve the fixed-commutation program at `θ`. A `Numerical` status is
/// returned as-is; callers decide whether to escalate it.
pub fn solve_conic(
    prog: &FixedCommutationProgram,
    theta: &DVector<f64>,
    cfg: &ToleranceConfig,
) -> Result<SolveResult> {
    if theta.len() != prog.p() {
        return Err(Error::InvalidProblem(format!(
            "parameter has dimension {} (expected {})",
            theta.len(),
            prog.p()
        )));
    }
    Ok(cfg.solver().solve(&prog.at(theta)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinlpSolution {
    pub value: f64,
    pub delta: CommutationId,
    pub x: DVector<f64>,
}

/// Brute-force mixed-integer solve: minimum over all admissible
/// commutations, ties resolved by commutation order.
pub fn solve_minlp(
    template: &ProblemTemplate,
    theta: &DVector<f64>,
    cfg: &ToleranceConfig,
) -> Result<MinlpSolution> {
    let solver = cfg.solver();
    let mut best: Option<MinlpSolution> = None;
    for id in template.commutations().ids() {
        let prog = template.program(id).at(theta);
        let res = solver.solve_definite(&prog, "mixed-integer enumeration")?;
        match res.status {
            SolveStatus::Optimal => {
                let sol = res.solution.expect("optimal carries a solution");
                let better = match &best {
                    None => true,
                    // Values within solver accuracy count as ties.
                    Some(b) => sol.value < b.value - 10.0 * cfg.solver_tol * (1.0 + b.value.abs()),
                };
                if better {
                    best = Some(MinlpSolution {
                        value: sol.value,
                        delta: id,
                        x: sol.x,
                    });
                }
            }
            SolveStatus::Infeasible => {}
            SolveStatus::Unbounded => {
                return Err(Error::Unbounded {
                    context: format!("commutation {}", template.commutations().get(id)),
                })
            }
            SolveStatus::Numerical => unreachable!("escalated by solve_definite"),
        }
    }
    best.ok_or(Error::Infeasible)
}

/// Feasibility of the fixed-commutation program at `θ` (zero objective).
pub fn feasible_at(
    template: &ProblemTemplate,
    delta: &Commutation,
    theta: &DVector<f64>,
    cfg: &ToleranceConfig,
) -> Result<bool> {
    let prog = instantiate(template, delta)?;
    let res = cfg
        .solver()
        .solve_definite(&prog.feasibility_at(theta), "feasibility check")?;
    Ok(res.status == SolveStatus::Optimal)
}
