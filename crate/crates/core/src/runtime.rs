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


//! Online evaluators.
//!
//! * semi-explicit: locate the leaf, then solve the convex program of its
//!   commutation at `θ`;
//! * explicit: locate the leaf and interpolate the stored vertex solutions;
//! * implicit: solve the mixed-integer problem by enumeration.

use std::time::{Duration, Instant};

use nalgebra::DVector;

use crate::conic::SolveStatus;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::problem::{solve_conic, solve_minlp, Commutation, CommutationId, ProblemTemplate, ToleranceConfig};
use crate::tree::PointLocation;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub query: Duration,
    pub solve: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.query + self.solve
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiExplicitEval {
    pub delta: CommutationId,
    pub x: DVector<f64>,
    pub value: f64,
    pub timings: Timings,
}

pub fn eval_semi_explicit(
    tree: &(impl PointLocation + ?Sized),
    template: &ProblemTemplate,
    theta: &Point,
    cfg: &ToleranceConfig,
) -> Result<SemiExplicitEval> {
    let t0 = Instant::now();
    let leaf = tree.locate_leaf(theta)?;
    let delta = template
        .commutations()
        .id_of(leaf.delta)
        .ok_or_else(|| Error::UnknownCommutation(leaf.delta.to_string()))?;
    let t1 = Instant::now();
    let res = solve_conic(template.program(delta), theta, cfg)?;
    let t2 = Instant::now();
    match res.status {
        SolveStatus::Optimal => {
            let sol = res.solution.expect("optimal carries a solution");
            Ok(SemiExplicitEval {
                delta,
                x: sol.x,
                value: sol.value,
                timings: Timings {
                    query: t1 - t0,
                    solve: t2 - t1,
                },
            })
        }
        SolveStatus::Infeasible => Err(Error::Infeasible),
        SolveStatus::Unbounded => Err(Error::Unbounded {
            context: format!("commutation {}", leaf.delta),
        }),
        SolveStatus::Numerical => Err(Error::Numerical {
            context: "semi-explicit evaluation".into(),
            program: Box::new(template.program(delta).at(theta)),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitEval {
    pub delta: Commutation,
    /// `Σ αᵢ xᵢ` over the stored vertex solutions.
    pub x: DVector<f64>,
    /// The output components of `x`.
    pub output: DVector<f64>,
    pub timings: Timings,
}

pub fn eval_explicit(tree: &(impl PointLocation + ?Sized), theta: &Point) -> Result<ExplicitEval> {
    let t0 = Instant::now();
    let leaf = tree.locate_leaf(theta)?;
    let sols = leaf.vertex_solutions.ok_or(Error::ModeMismatch)?;
    let mut x = DVector::zeros(sols[0].len());
    for (a, xi) in leaf.alpha.alpha.iter().zip(sols) {
        x.axpy(*a, xi, 1.0);
    }
    let output = DVector::from_iterator(
        tree.output_indices().len(),
        tree.output_indices().iter().map(|&i| x[i]),
    );
    let query = t0.elapsed();
    Ok(ExplicitEval {
        delta: leaf.delta.clone(),
        x,
        output,
        timings: Timings {
            query,
            solve: Duration::ZERO,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitEval {
    pub value: f64,
    pub delta: CommutationId,
    pub x: DVector<f64>,
    pub timings: Timings,
}

pub fn eval_implicit(template: &ProblemTemplate, theta: &Point, cfg: &ToleranceConfig) -> Result<ImplicitEval> {
    let t0 = Instant::now();
    let sol = solve_minlp(template, theta, cfg)?;
    Ok(ImplicitEval {
        value: sol.value,
        delta: sol.delta,
        x: sol.x,
        timings: Timings {
            query: Duration::ZERO,
            solve: t0.elapsed(),
        },
    })
}

/// Median, minimum and maximum of a set of durations, in seconds.
pub fn duration_summary(samples: &[Duration]) -> (f64, f64, f64) {
    assert!(!samples.is_empty());
    let mut s: Vec<f64> = samples.iter().map(Duration::as_secs_f64).collect();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    let median = if k % 2 == 1 { s[k / 2] } else { 0.5 * (s[k / 2 - 1] + s[k / 2]) };
    (median, s[0], s[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase2::{partition, Mode, RefineConfig};
    use crate::problems::{toy_a, toy_a_value};
    use approx::assert_abs_diff_eq;

    fn th(x: f64) -> Point {
        DVector::from_element(1, x)
    }

    #[test]
    fn toy_a_evaluators() {
        let t = toy_a();
        let tol = ToleranceConfig::new(0.05, 0.0);
        let tree = partition(&t, &RefineConfig::new(Mode::Explicit, tol)).unwrap();

        let s = eval_semi_explicit(&tree, &t, &th(-0.9), &tol).unwrap();
        assert_eq!(s.delta, CommutationId(0));
        assert_abs_diff_eq!(s.value, 0.16, epsilon = 1e-7);
        assert!(matches!(eval_semi_explicit(&tree, &t, &th(1.5), &tol), Err(Error::OutOfDomain)));
        let imp = eval_implicit(&t, &th(0.0), &tol).unwrap();
        assert_abs_diff_eq!(imp.value, 0.25, epsilon = 1e-7);

        // at a leaf vertex the interpolant returns that vertex's solution
        let leaf = tree.leaves().next().unwrap();
        let n = tree.node(leaf);
        let v = n.simplex.vertices()[0].clone();
        let e = eval_explicit(&tree, &v).unwrap();
        let d = n.payload.as_ref().unwrap().delta().unwrap();
        assert_abs_diff_eq!(e.x[0], toy_a_value(d.index(), v[0]), epsilon = 1e-7);

        for i in 0..100 {
            let x = -1.0 + 0.02 * i as f64 + 0.001;
            let e = eval_explicit(&tree, &th(x)).unwrap();
            let best = eval_implicit(&t, &th(x), &tol).unwrap().value;
            // x is the epigraph variable, so it is both feasible and the cost
            assert!(e.x[0] >= toy_a_value(t.commutations().id_of(&e.delta).unwrap().index(), x) - 1e-7);
            assert!(e.x[0] - best <= 0.05 + 1e-6);
            assert_eq!(e.output.len(), 1);
        }
    }

    #[test]
    fn semi_explicit_tree_has_no_vertex_solutions() {
        let t = toy_a();
        let tol = ToleranceConfig::new(0.05, 0.0);
        let tree = partition(&t, &RefineConfig::new(Mode::SemiExplicit, tol)).unwrap();
        assert!(matches!(eval_explicit(&tree, &th(0.0)), Err(Error::ModeMismatch)));
    }

    #[test]
    fn summary() {
        let d: Vec<_> = [3, 1, 2, 10].iter().map(|&k| Duration::from_millis(k)).collect();
        let (m, lo, hi) = duration_summary(&d);
        assert_abs_diff_eq!(m, 0.0025, epsilon = 1e-12);
        assert_abs_diff_eq!(lo, 0.001, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 0.01, epsilon = 1e-12);
    }
}
