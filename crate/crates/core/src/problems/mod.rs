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


//! Reference problems: two one-dimensional toys with closed-form optimal
//! costs and the out-of-plane spacecraft station-keeping problem.

mod cwh;
mod toy;

use nalgebra::{DMatrix, DVector};

use crate::conic::{Cone, ConeSpec};
use crate::error::Result;
use crate::problem::FixedCommutationProgram;

pub use cwh::{cwh_discretize, CwhConfig, CwhProblem};
pub use toy::{toy_a, toy_a_value, toy_b, toy_b_enlarged, toy_disjoint, toy_zero_overlap, ToyOptions};

/// Row-by-row assembly of a [`FixedCommutationProgram`].
#[derive(Debug, Clone)]
pub(crate) struct ProgramRows {
    n: usize,
    p: usize,
    cost_x: DVector<f64>,
    cost_theta: DVector<f64>,
    cost_0: f64,
    eq: Vec<(Vec<f64>, Vec<f64>, f64)>,
    blocks: Vec<(Cone, Vec<(Vec<f64>, Vec<f64>, f64)>)>,
}

impl ProgramRows {
    pub fn new(n: usize, p: usize) -> Self {
        Self {
            n,
            p,
            cost_x: DVector::zeros(n),
            cost_theta: DVector::zeros(p),
            cost_0: 0.0,
            eq: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn cost(&mut self, x: &[f64], theta: &[f64], c0: f64) -> &mut Self {
        self.cost_x = DVector::from_column_slice(x);
        self.cost_theta = DVector::from_column_slice(theta);
        self.cost_0 = c0;
        self
    }

    /// `a_x·x + a_θ·θ = b`
    pub fn eq(&mut self, x: Vec<f64>, theta: Vec<f64>, b: f64) -> &mut Self {
        self.eq.push((x, theta, b));
        self
    }

    /// `a_x·x + a_θ·θ + h ≥ 0`
    pub fn nonneg(&mut self, x: Vec<f64>, theta: Vec<f64>, h: f64) -> &mut Self {
        match self.blocks.last_mut() {
            Some((Cone::NonNeg(d), rows)) => {
                *d += 1;
                rows.push((x, theta, h));
            }
            _ => self.blocks.push((Cone::NonNeg(1), vec![(x, theta, h)])),
        }
        self
    }

    pub fn soc(&mut self, rows: Vec<(Vec<f64>, Vec<f64>, f64)>) -> &mut Self {
        self.blocks.push((Cone::SecondOrder(rows.len()), rows));
        self
    }

    pub fn build(&self) -> Result<FixedCommutationProgram> {
        let (n, p) = (self.n, self.p);
        let stack = |rows: &[&(Vec<f64>, Vec<f64>, f64)]| {
            let k = rows.len();
            (
                DMatrix::from_fn(k, n, |r, c| rows[r].0[c]),
                DMatrix::from_fn(k, p, |r, c| rows[r].1[c]),
                DVector::from_fn(k, |r, _| rows[r].2),
            )
        };
        let eq_rows: Vec<_> = self.eq.iter().collect();
        let (eq_x, eq_theta, eq_b) = stack(&eq_rows);
        let cone_rows: Vec<_> = self.blocks.iter().flat_map(|(_, r)| r.iter()).collect();
        let (cone_x, cone_theta, cone_h) = stack(&cone_rows);
        let prog = FixedCommutationProgram {
            cost_x: self.cost_x.clone(),
            cost_theta: self.cost_theta.clone(),
            cost_0: self.cost_0,
            eq_x,
            eq_theta,
            eq_b,
            cone_x,
            cone_theta,
            cone_h,
            cones: ConeSpec::new(self.blocks.iter().map(|(c, _)| *c).collect())?,
        };
        prog.validate()?;
        Ok(prog)
    }
}
