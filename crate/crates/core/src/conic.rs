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

//! Linear-objective conic programs and the embedded interior-point backend.
//!
//! Every subproblem of the partitioning algorithms is expressed as
//!
//! ```text
//!     minimize    cost' z + offset
//!     subject to  G z + h ∈ K
//! ```
//!
//! where `K` is a product of zero, nonnegative-orthant and second-order cones.
//! Solving is delegated to Clarabel. Rows whose coefficient vector vanishes
//! (a constraint that only involves the fixed parameter) are checked directly
//! and removed before the solve, so that parameters sitting exactly on the
//! boundary of a feasible set are classified without relying on interior-point
//! behavior at degenerate points.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One factor of the cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "dim", rename_all = "snake_case")]
pub enum Cone {
    Zero(usize),
    NonNeg(usize),
    /// `(t, u)` with `‖u‖₂ ≤ t`; the first row is the scalar part.
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::SecondOrder(d) => d,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub blocks: Vec<Cone>,
}

impl ConeSpec {
    pub fn new(blocks: Vec<Cone>) -> Result<Self> {
        if let Some(b) = blocks.iter().find(|b| b.dim() == 0) {
            return Err(Error::InvalidProblem(format!("empty cone block {b:?}")));
        }
        if let Some(b) = blocks
            .iter()
            .find(|b| matches!(b, Cone::SecondOrder(d) if *d < 2))
        {
            return Err(Error::InvalidProblem(format!(
                "second-order cone needs dimension ≥ 2, got {b:?}"
            )));
        }
        Ok(Self { blocks })
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Cone::dim).sum()
    }

    /// Euclidean-style violation of `s ∈ K` (0 when inside).
    pub fn distance(&self, s: &DVector<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        let mut row = 0;
        for block in &self.blocks {
            let d = block.dim();
            let part = s.rows(row, d);
            let v = match block {
                Cone::Zero(_) => part.amax(),
                Cone::NonNeg(_) => part.iter().fold(0.0_f64, |acc, &x| acc.max(-x)),
                Cone::SecondOrder(_) => {
                    let tail = part.rows(1, d - 1).norm();
                    (tail - part[0]).max(0.0)
                }
            };
            worst = worst.max(v);
            row += d;
        }
        worst
    }
}

/// `minimize cost'z + offset  s.t.  g z + h ∈ cones`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub cost: DVector<f64>,
    pub offset: f64,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub cones: ConeSpec,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cost.len();
        let d = self.cones.dim();
        if self.g.ncols() != n || self.g.nrows() != d || self.h.len() != d {
            return Err(Error::InvalidProblem(format!(
                "conic program shape mismatch: cost {n}, G {}x{}, h {}, cone dim {d}",
                self.g.nrows(),
                self.g.ncols(),
                self.h.len()
            )));
        }
        Ok(())
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        self.cost.dot(z) + self.offset
    }

    /// Slack `G z + h`.
    pub fn slack(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.g * z + &self.h
    }
}

/// Incremental construction of a [`ConicProgram`] block by block.
#[derive(Debug, Clone)]
pub struct ConicBuilder {
    n: usize,
    cost: DVector<f64>,
    offset: f64,
    rows: Vec<(Cone, DMatrix<f64>, DVector<f64>)>,
}

impl ConicBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cost: DVector::zeros(n),
            offset: 0.0,
            rows: Vec::new(),
        }
    }

    pub fn cost(mut self, cost: DVector<f64>, offset: f64) -> Self {
        assert_eq!(cost.len(), self.n);
        self.cost = cost;
        self.offset = offset;
        self
    }

    /// Append `g z + h ∈ cone`; blocks of zero height are ignored.
    pub fn push(&mut self, cone: Cone, g: DMatrix<f64>, h: DVector<f64>) {
        assert_eq!(g.ncols(), self.n);
        assert_eq!(g.nrows(), cone.dim());
        assert_eq!(h.len(), cone.dim());
        if cone.dim() > 0 {
            self.rows.push((cone, g, h));
        }
    }

    pub fn build(self) -> ConicProgram {
        let d: usize = self.rows.iter().map(|(c, _, _)| c.dim()).sum();
        let mut g = DMatrix::zeros(d, self.n);
        let mut h = DVector::zeros(d);
        let mut blocks = Vec::with_capacity(self.rows.len());
        let mut r = 0;
        for (cone, gb, hb) in self.rows {
            let k = cone.dim();
            g.view_mut((r, 0), (k, self.n)).copy_from(&gb);
            h.rows_mut(r, k).copy_from(&hb);
            blocks.push(cone);
            r += k;
        }
        ConicProgram {
            cost: self.cost,
            offset: self.offset,
            g,
            h,
            cones: ConeSpec { blocks },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Numerical,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal_eq: f64,
    pub cone_dist: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub value: f64,
    pub x: DVector<f64>,
}

/// Outcome of one conic solve. `solution` is present iff the status is
/// [`SolveStatus::Optimal`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    pub residuals: Residuals,
}

impl SolveResult {
    fn without_solution(status: SolveStatus) -> Self {
        Self {
            status,
            solution: None,
            residuals: Residuals::default(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.value)
    }
}

/// Solver settings; each call builds its own Clarabel workspace, so a single
/// `ConicSolver` may be shared freely between threads.
#[derive(Debug, Clone, Copy)]
pub struct ConicSolver {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for ConicSolver {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl ConicSolver {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn solve(&self, prog: &ConicProgram) -> SolveResult {
        debug_assert!(prog.validate().is_ok());
        let reduced = match presolve(prog, self.tol) {
            Presolved::Infeasible => return SolveResult::without_solution(SolveStatus::Infeasible),
            Presolved::Reduced(r) => r,
        };
        let n = prog.num_vars();

        if reduced.cones.blocks.is_empty() {
            return if reduced.cost.iter().all(|&c| c == 0.0) {
                let x = DVector::zeros(n);
                SolveResult {
                    status: SolveStatus::Optimal,
                    solution: Some(Solution {
                        value: prog.offset,
                        x,
                    }),
                    residuals: Residuals::default(),
                }
            } else {
                SolveResult::without_solution(SolveStatus::Unbounded)
            };
        }

        let p_mat = CscMatrix::zeros((n, n));
        let a_mat = dense_to_csc(&(-&reduced.g));
        let cones: Vec<SupportedConeT<f64>> = reduced
            .cones
            .blocks
            .iter()
            .map(|c| match *c {
                Cone::Zero(d) => SupportedConeT::ZeroConeT(d),
                Cone::NonNeg(d) => SupportedConeT::NonnegativeConeT(d),
                Cone::SecondOrder(d) => SupportedConeT::SecondOrderConeT(d),
            })
            .collect();
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .max_threads(1)
            .build()
            .expect("static solver settings are valid");
        let q: Vec<f64> = reduced.cost.iter().copied().collect();
        let b: Vec<f64> = reduced.h.iter().copied().collect();
        let mut solver = match DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings) {
            Ok(s) => s,
            Err(_) => return SolveResult::without_solution(SolveStatus::Numerical),
        };
        solver.solve();

        let sol = &solver.solution;
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let x = DVector::from_column_slice(&sol.x);
                let residuals = residuals_of(prog, &x, (sol.obj_val - sol.obj_val_dual).abs());
                let loose = 1e3 * self.tol * (1.0 + prog.h.amax());
                if sol.status == SolverStatus::AlmostSolved
                    && (residuals.primal_eq > loose || residuals.cone_dist > loose)
                {
                    log::debug!("rejecting reduced-accuracy solution: {residuals:?}");
                    return SolveResult::without_solution(SolveStatus::Numerical);
                }
                SolveResult {
                    status: SolveStatus::Optimal,
                    solution: Some(Solution {
                        value: prog.objective(&x),
                        x,
                    }),
                    residuals,
                }
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveResult::without_solution(SolveStatus::Infeasible)
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveResult::without_solution(SolveStatus::Unbounded)
            }
            other => {
                log::debug!("conic solve stalled with status {other:?}");
                SolveResult::without_solution(SolveStatus::Numerical)
            }
        }
    }

    /// Solve and turn `Numerical` into a hard error carrying the program.
    pub fn solve_definite(&self, prog: &ConicProgram, context: &str) -> Result<SolveResult> {
        let res = self.solve(prog);
        if res.status == SolveStatus::Numerical {
            return Err(Error::Numerical {
                context: context.to_string(),
                program: Box::new(prog.clone()),
            });
        }
        Ok(res)
    }
}

fn residuals_of(prog: &ConicProgram, x: &DVector<f64>, gap: f64) -> Residuals {
    let s = prog.slack(x);
    let mut primal_eq: f64 = 0.0;
    let mut row = 0;
    for b in &prog.cones.blocks {
        if let Cone::Zero(d) = b {
            primal_eq = primal_eq.max(s.rows(row, *d).amax());
        }
        row += b.dim();
    }
    let cone_dist = {
        let nonzero_blocks = ConeSpec {
            blocks: prog
                .cones
                .blocks
                .iter()
                .map(|b| match *b {
                    // Zero rows are accounted for in primal_eq.
                    Cone::Zero(d) => Cone::NonNeg(d),
                    other => other,
                })
                .collect(),
        };
        let mut s2 = s.clone();
        let mut row = 0;
        for b in &prog.cones.blocks {
            if let Cone::Zero(d) = b {
                s2.rows_mut(row, *d).fill(0.0);
            }
            row += b.dim();
        }
        nonzero_blocks.distance(&s2)
    };
    Residuals {
        primal_eq,
        cone_dist,
        duality_gap: gap,
    }
}

enum Presolved {
    Infeasible,
    Reduced(ConicProgram),
}

/// Drop constant rows of zero/nonnegative blocks (and constant second-order
/// blocks) after checking them against `tol`.
fn presolve(prog: &ConicProgram, tol: f64) -> Presolved {
    let n = prog.num_vars();
    let mut builder = ConicBuilder::new(n).cost(prog.cost.clone(), prog.offset);
    let mut row = 0;
    let is_const = |r: usize| prog.g.row(r).iter().all(|&v| v == 0.0);
    for block in &prog.cones.blocks {
        let d = block.dim();
        match *block {
            Cone::Zero(_) | Cone::NonNeg(_) => {
                let keep: Vec<usize> = (row..row + d).filter(|&r| !is_const(r)).collect();
                for r in (row..row + d).filter(|&r| is_const(r)) {
                    let v = prog.h[r];
                    let bad = match block {
                        Cone::Zero(_) => v.abs() > tol * (1.0 + v.abs()),
                        _ => v < -tol,
                    };
                    if bad {
                        return Presolved::Infeasible;
                    }
                }
                if !keep.is_empty() {
                    let g = DMatrix::from_fn(keep.len(), n, |i, j| prog.g[(keep[i], j)]);
                    let h = DVector::from_fn(keep.len(), |i, _| prog.h[keep[i]]);
                    let cone = match block {
                        Cone::Zero(_) => Cone::Zero(keep.len()),
                        _ => Cone::NonNeg(keep.len()),
                    };
                    builder.push(cone, g, h);
                }
            }
            Cone::SecondOrder(_) => {
                if (row..row + d).all(is_const) {
                    let part = prog.h.rows(row, d);
                    if part.rows(1, d - 1).norm() - part[0] > tol {
                        return Presolved::Infeasible;
                    }
                } else {
                    builder.push(
                        *block,
                        prog.g.rows(row, d).into_owned(),
                        prog.h.rows(row, d).into_owned(),
                    );
                }
            }
        }
        row += d;
    }
    Presolved::Reduced(builder.build())
}

fn dense_to_csc(m: &DMatrix<f64>) -> CscMatrix<f64> {
    let (nr, nc) = m.shape();
    let mut colptr = Vec::with_capacity(nc + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..nc {
        for i in 0..nr {
            let v = m[(i, j)];
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(nr, nc, colptr, rowval, nzval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lp_box() -> ConicProgram {
        // min x0 + 2 x1  s.t. x0 ≥ 1, x1 ≥ -1, x0 + x1 ≤ 5
        let mut b = ConicBuilder::new(2).cost(DVector::from_vec(vec![1.0, 2.0]), 0.5);
        b.push(
            Cone::NonNeg(3),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]),
            DVector::from_vec(vec![-1.0, 1.0, 5.0]),
        );
        b.build()
    }

    #[test]
    fn solves_small_lp() {
        let res = ConicSolver::default().solve(&lp_box());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.value().unwrap(), 1.0 - 2.0 + 0.5, epsilon = 1e-7);
        assert!(res.residuals.cone_dist < 1e-7);
    }

    #[test]
    fn second_order_epigraph_of_square() {
        // min t s.t. t ≥ (u - 0.3)², u free: rotated cone lift
        // (t + 1, t - 1, 2(u - 0.3)) ∈ SOC(3); optimum t = 0.
        let mut b = ConicBuilder::new(2).cost(DVector::from_vec(vec![1.0, 0.0]), 0.0);
        b.push(
            Cone::SecondOrder(3),
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 2.0]),
            DVector::from_vec(vec![1.0, -1.0, -0.6]),
        );
        let res = ConicSolver::default().solve(&b.build());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.value().unwrap(), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn detects_infeasibility_and_unboundedness() {
        // x ≥ 1 and x ≤ 0
        let mut b = ConicBuilder::new(1).cost(DVector::from_vec(vec![1.0]), 0.0);
        b.push(
            Cone::NonNeg(2),
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_vec(vec![-1.0, 0.0]),
        );
        assert_eq!(
            ConicSolver::default().solve(&b.build()).status,
            SolveStatus::Infeasible
        );

        // min x s.t. x ≤ 0
        let mut b = ConicBuilder::new(1).cost(DVector::from_vec(vec![1.0]), 0.0);
        b.push(
            Cone::NonNeg(1),
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DVector::from_vec(vec![0.0]),
        );
        assert_eq!(
            ConicSolver::default().solve(&b.build()).status,
            SolveStatus::Unbounded
        );
    }

    #[test]
    fn constant_rows_are_checked_exactly() {
        // Constant row 0.25 - 0.25 ≥ 0 holds on the boundary.
        let mut b = ConicBuilder::new(1).cost(DVector::from_vec(vec![1.0]), 0.0);
        b.push(
            Cone::NonNeg(2),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DVector::from_vec(vec![0.0, 0.0]),
        );
        let res = ConicSolver::default().solve(&b.build());
        assert_eq!(res.status, SolveStatus::Optimal);

        let mut b = ConicBuilder::new(1).cost(DVector::from_vec(vec![1.0]), 0.0);
        b.push(
            Cone::NonNeg(2),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DVector::from_vec(vec![-1e-3, 0.0]),
        );
        assert_eq!(
            ConicSolver::default().solve(&b.build()).status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn unconstrained_zero_cost_is_trivially_optimal() {
        let b = ConicBuilder::new(2).cost(DVector::zeros(2), 3.0);
        let res = ConicSolver::default().solve(&b.build());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.value(), Some(3.0));
    }

    #[test]
    fn cone_distance() {
        let k = ConeSpec::new(vec![Cone::NonNeg(1), Cone::SecondOrder(3)]).unwrap();
        let inside = DVector::from_vec(vec![0.0, 5.0, 3.0, 4.0]);
        assert_eq!(k.distance(&inside), 0.0);
        let outside = DVector::from_vec(vec![-0.5, 1.0, 3.0, 4.0]);
        assert_abs_diff_eq!(k.distance(&outside), 4.0);
        assert!(ConeSpec::new(vec![Cone::SecondOrder(1)]).is_err());
    }
}
