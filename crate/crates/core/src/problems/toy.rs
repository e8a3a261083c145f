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


//! One-parameter, one-bit toys. Both commutations minimize `t ≥ (θ − c_δ)²`
//! with `c₀ = −0.5`, `c₁ = +0.5`; the variants differ only in the θ-cuts
//! attached to each commutation.

use crate::error::Result;
use crate::geometry::PolytopeV;
use crate::problem::{Commutation, CommutationSpace, ProblemTemplate};

use super::ProgramRows;

pub const TOY_CENTERS: [f64; 2] = [-0.5, 0.5];

/// Closed-form `V*_δ(θ)` of every toy wherever `δ` is feasible.
pub fn toy_a_value(delta: usize, theta: f64) -> f64 {
    (theta - TOY_CENTERS[delta]).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyOptions {
    pub label: String,
    pub domain: (f64, f64),
    /// `δ=0` requires `θ ≤ upper0`.
    pub upper0: Option<f64>,
    /// `δ=1` requires `θ ≥ lower1`.
    pub lower1: Option<f64>,
    /// Both commutations require `|θ| ≤ reach`.
    pub reach: Option<f64>,
    /// Constant added to the cost.
    pub cost_offset: f64,
}

impl Default for ToyOptions {
    fn default() -> Self {
        Self {
            label: "toy_a".into(),
            domain: (-1.0, 1.0),
            upper0: None,
            lower1: None,
            reach: None,
            cost_offset: 0.0,
        }
    }
}

impl ToyOptions {
    pub fn build(&self) -> Result<ProblemTemplate> {
        let opts = self.clone();
        ProblemTemplate::builder(self.label.clone())
            .commutations(CommutationSpace::hypercube(1)?)
            .domain(PolytopeV::cuboid(&[self.domain.0], &[self.domain.1])?)
            .instantiator(move |d: &Commutation| {
                let k = usize::from(d.0[0]);
                let c = TOY_CENTERS[k];
                let mut rows = ProgramRows::new(1, 1);
                rows.cost(&[1.0], &[0.0], opts.cost_offset);
                // (t+1, t−1, 2(θ−c)) ∈ SOC  ⇔  t ≥ (θ−c)²
                rows.soc(vec![
                    (vec![1.0], vec![0.0], 1.0),
                    (vec![1.0], vec![0.0], -1.0),
                    (vec![0.0], vec![2.0], -2.0 * c),
                ]);
                match (k, opts.upper0, opts.lower1) {
                    (0, Some(u), _) => {
                        rows.nonneg(vec![0.0], vec![-1.0], u);
                    }
                    (1, _, Some(l)) => {
                        rows.nonneg(vec![0.0], vec![1.0], -l);
                    }
                    _ => {}
                }
                if let Some(r) = opts.reach {
                    rows.nonneg(vec![0.0], vec![-1.0], r);
                    rows.nonneg(vec![0.0], vec![1.0], r);
                }
                rows.build()
            })
            .output_indices(vec![0])
            .build()
    }
}

/// Θ = [−1, 1], no θ-constraints.
pub fn toy_a() -> ProblemTemplate {
    ToyOptions::default().build().expect("toy_a is well formed")
}

/// Toy-A with `θ ≤ 0.25` for `δ=0`, `θ ≥ −0.25` for `δ=1`, and `|θ| ≤ 1.25`
/// for both, so `Θ*₀ ∩ Θ*₁ = [−0.25, 0.25]` and `Θ* = [−1.25, 1.25]`.
pub fn toy_b() -> ProblemTemplate {
    toy_b_options().build().expect("toy_b is well formed")
}

fn toy_b_options() -> ToyOptions {
    ToyOptions {
        label: "toy_b".into(),
        upper0: Some(0.25),
        lower1: Some(-0.25),
        reach: Some(1.25),
        ..ToyOptions::default()
    }
}

/// Toy-B over Θ = [−2, 2], which is not covered by `Θ*`.
pub fn toy_b_enlarged() -> ProblemTemplate {
    ToyOptions {
        label: "toy_b_enlarged".into(),
        domain: (-2.0, 2.0),
        ..toy_b_options()
    }
    .build()
    .expect("toy_b_enlarged is well formed")
}

/// `δ=0` restricted to `θ ≤ −0.1`, `δ=1` unrestricted. At `θ = −0.1` the best
/// feasible cost jumps from 0.16 to 0.36, so no commutation is ε-suboptimal on
/// a neighbourhood of that point for ε < 0.2.
pub fn toy_zero_overlap() -> ProblemTemplate {
    ToyOptions {
        label: "toy_zero_overlap".into(),
        upper0: Some(-0.1),
        ..ToyOptions::default()
    }
    .build()
    .expect("toy_zero_overlap is well formed")
}

/// `δ=0` restricted to `θ ≤ −0.1`, `δ=1` to `θ ≥ 0.1`: nothing is feasible in
/// between.
pub fn toy_disjoint() -> ProblemTemplate {
    ToyOptions {
        label: "toy_disjoint".into(),
        upper0: Some(-0.1),
        lower1: Some(0.1),
        ..ToyOptions::default()
    }
    .build()
    .expect("toy_disjoint is well formed")
}
