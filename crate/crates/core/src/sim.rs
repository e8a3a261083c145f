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


//! Closed-loop simulation of the spacecraft problem.

use std::io::Write;

use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::problem::{ProblemTemplate, ToleranceConfig};
use crate::problems::CwhProblem;
use crate::runtime::{eval_explicit, eval_implicit, eval_semi_explicit};
use crate::tree::PointLocation;

/// How the first impulse is computed at each step.
#[derive(Clone, Copy)]
pub enum Controller<'a> {
    /// Full enumeration of the mixed-integer program.
    Implicit,
    /// Commutation from the tree, then one conic solve.
    SemiExplicit(&'a dyn PointLocation),
    /// Interpolation of stored vertex solutions.
    Explicit(&'a dyn PointLocation),
}

impl Controller<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Controller::Implicit => "implicit",
            Controller::SemiExplicit(_) => "semi-explicit",
            Controller::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Disturbance {
    #[default]
    None,
    /// Additive state noise, each component uniform in `[-bound_i, bound_i]`
    /// (scaled units).
    Uniform { bound: [f64; 2], seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStep {
    pub k: usize,
    /// State at the start of the step, after any projection.
    pub theta: [f64; 2],
    pub dv: f64,
    pub fuel: f64,
    /// The raw state left the domain and was projected back.
    pub out_of_domain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub controller: &'static str,
    pub steps: Vec<SimStep>,
    pub final_theta: [f64; 2],
    /// `Σ |Δv|` in mm/s.
    pub fuel: f64,
    pub out_of_domain_steps: usize,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "k,z_cm,v_mm_s,dv_mm_s,fuel_mm_s,out_of_domain";

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{:.9},{:.9},{:.9},{:.9},{}",
                s.k,
                s.theta[0],
                s.theta[1],
                s.dv,
                s.fuel,
                u8::from(s.out_of_domain)
            )?;
        }
        Ok(())
    }
}

/// Runs `steps` control periods from `theta0` (scaled units). States that
/// leave Θ are clamped onto its bounding box, which is Θ itself for the
/// box domain used here, and flagged.
pub fn simulate_closed_loop(
    problem: &CwhProblem,
    template: &ProblemTemplate,
    controller: Controller<'_>,
    theta0: Vector2<f64>,
    steps: usize,
    disturbance: Disturbance,
    cfg: &ToleranceConfig,
) -> Result<Trajectory> {
    let (lo, hi) = template.domain().bounds();
    let mut rng = match disturbance {
        Disturbance::Uniform { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Disturbance::None => None,
    };
    let mut theta = theta0;
    let mut fuel = 0.0;
    let mut out = Vec::with_capacity(steps);
    let mut flagged = 0;
    for k in 0..steps {
        let clamped = Vector2::new(theta[0].clamp(lo[0], hi[0]), theta[1].clamp(lo[1], hi[1]));
        let out_of_domain = clamped != theta;
        if out_of_domain {
            log::warn!("step {k}: state {theta:?} left the domain, projected");
            flagged += 1;
        }
        theta = clamped;
        let th = DVector::from_column_slice(theta.as_slice());
        let dv = match controller {
            Controller::Implicit => eval_implicit(template, &th, cfg)?.x[template.output_indices()[0]],
            Controller::SemiExplicit(tree) => eval_semi_explicit(tree, template, &th, cfg)?.x[template.output_indices()[0]],
            Controller::Explicit(tree) => eval_explicit(tree, &th)?.output[0],
        };
        fuel += dv.abs();
        out.push(SimStep {
            k,
            theta: [theta[0], theta[1]],
            dv,
            fuel,
            out_of_domain,
        });
        theta = problem.step(&theta, dv);
        if let (Some(rng), Disturbance::Uniform { bound, .. }) = (rng.as_mut(), disturbance) {
            for (i, b) in bound.iter().enumerate() {
                if *b > 0.0 {
                    theta[i] += rng.gen_range(-b..=*b);
                }
            }
        }
    }
    Ok(Trajectory {
        controller: controller.name(),
        steps: out,
        final_theta: [theta[0], theta[1]],
        fuel,
        out_of_domain_steps: flagged,
    })
}
