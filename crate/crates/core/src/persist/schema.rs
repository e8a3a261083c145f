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


//! JSON problem files.
//!
//! ```json
//! {
//!   "label": "toy",
//!   "m": 1,
//!   "domain": [[-1.0], [1.0]],
//!   "output_indices": [0],
//!   "commutations": [
//!     {
//!       "delta": "0",
//!       "cost_x": [1.0, 0.0], "cost_theta": [0.0], "cost_0": 0.0,
//!       "eq_x": [], "eq_theta": [], "eq_b": [],
//!       "cone_x": [[...], ...], "cone_theta": [[...], ...], "cone_h": [...],
//!       "cones": [{"nonneg": 1}, {"soc": 3}]
//!     }
//!   ]
//! }
//! ```
//!
//! Matrices are lists of rows. `domain` lists the vertices of Θ, `delta` is
//! the commutation as a 0/1 string, and `output_indices` defaults to every
//! decision component. Cone block kinds are `zero`, `nonneg` and `soc`; an
//! SOC block's first row is the scalar part.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{Cone, ConeSpec};
use crate::error::{Error, Result};
use crate::geometry::PolytopeV;
use crate::problem::{Commutation, CommutationSpace, FixedCommutationProgram, ProblemTemplate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub label: String,
    pub m: usize,
    pub domain: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_indices: Option<Vec<usize>>,
    pub commutations: Vec<ProgramFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramFile {
    pub delta: String,
    pub cost_x: Vec<f64>,
    pub cost_theta: Vec<f64>,
    #[serde(default)]
    pub cost_0: f64,
    #[serde(default)]
    pub eq_x: Vec<Vec<f64>>,
    #[serde(default)]
    pub eq_theta: Vec<Vec<f64>>,
    #[serde(default)]
    pub eq_b: Vec<f64>,
    pub cone_x: Vec<Vec<f64>>,
    pub cone_theta: Vec<Vec<f64>>,
    pub cone_h: Vec<f64>,
    pub cones: Vec<ConeFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeFile {
    Zero(usize),
    Nonneg(usize),
    Soc(usize),
}

fn matrix(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::InvalidProblem(format!(
            "{what}: row of length {} where {ncols} columns are expected",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_delta(s: &str, m: usize) -> Result<Commutation> {
    let bits: Option<Vec<bool>> = s
        .chars()
        .filter(|c| !matches!(c, ',' | ' ' | '(' | ')'))
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect();
    match bits {
        Some(b) if b.len() == m => Ok(Commutation(b)),
        _ => Err(Error::UnknownCommutation(format!("{s:?} is not a {m}-bit 0/1 string"))),
    }
}

impl ProgramFile {
    fn to_program(&self, p: usize) -> Result<FixedCommutationProgram> {
        let n = self.cost_x.len();
        let blocks = self
            .cones
            .iter()
            .map(|c| match *c {
                ConeFile::Zero(d) => Cone::Zero(d),
                ConeFile::Nonneg(d) => Cone::NonNeg(d),
                ConeFile::Soc(d) => Cone::SecondOrder(d),
            })
            .collect();
        let prog = FixedCommutationProgram {
            cost_x: DVector::from_vec(self.cost_x.clone()),
            cost_theta: DVector::from_vec(self.cost_theta.clone()),
            cost_0: self.cost_0,
            eq_x: matrix(&self.eq_x, n, "eq_x")?,
            eq_theta: matrix(&self.eq_theta, p, "eq_theta")?,
            eq_b: DVector::from_vec(self.eq_b.clone()),
            cone_x: matrix(&self.cone_x, n, "cone_x")?,
            cone_theta: matrix(&self.cone_theta, p, "cone_theta")?,
            cone_h: DVector::from_vec(self.cone_h.clone()),
            cones: ConeSpec::new(blocks)?,
        };
        prog.validate()?;
        Ok(prog)
    }

    fn of(delta: &Commutation, prog: &FixedCommutationProgram) -> Self {
        Self {
            delta: delta.bits().iter().map(|&b| if b { '1' } else { '0' }).collect(),
            cost_x: prog.cost_x.iter().copied().collect(),
            cost_theta: prog.cost_theta.iter().copied().collect(),
            cost_0: prog.cost_0,
            eq_x: rows(&prog.eq_x),
            eq_theta: rows(&prog.eq_theta),
            eq_b: prog.eq_b.iter().copied().collect(),
            cone_x: rows(&prog.cone_x),
            cone_theta: rows(&prog.cone_theta),
            cone_h: prog.cone_h.iter().copied().collect(),
            cones: prog
                .cones
                .blocks
                .iter()
                .map(|c| match *c {
                    Cone::Zero(d) => ConeFile::Zero(d),
                    Cone::NonNeg(d) => ConeFile::Nonneg(d),
                    Cone::SecondOrder(d) => ConeFile::Soc(d),
                })
                .collect(),
        }
    }
}

impl ProblemFile {
    pub fn from_template(t: &ProblemTemplate) -> Self {
        Self {
            label: t.label().to_string(),
            m: t.m(),
            domain: t.domain().vertices().iter().map(|v| v.iter().copied().collect()).collect(),
            output_indices: Some(t.output_indices().to_vec()),
            commutations: t
                .commutations()
                .iter()
                .map(|(id, d)| ProgramFile::of(d, t.program(id)))
                .collect(),
        }
    }

    pub fn to_template(&self) -> Result<ProblemTemplate> {
        let domain = PolytopeV::new(self.domain.iter().map(|v| DVector::from_vec(v.clone())).collect())?;
        let p = domain.p();
        let mut deltas = Vec::with_capacity(self.commutations.len());
        let mut programs = Vec::with_capacity(self.commutations.len());
        for c in &self.commutations {
            deltas.push(parse_delta(&c.delta, self.m)?);
            programs.push((deltas.last().cloned().expect("just pushed"), c.to_program(p)?));
        }
        let space = CommutationSpace::new(self.m, deltas)?;
        let mut b = ProblemTemplate::builder(self.label.clone())
            .commutations(space)
            .domain(domain)
            .instantiator(move |d: &Commutation| {
                programs
                    .iter()
                    .find(|(k, _)| k == d)
                    .map(|(_, prog)| prog.clone())
                    .ok_or_else(|| Error::UnknownCommutation(d.to_string()))
            });
        if let Some(idx) = &self.output_indices {
            b = b.output_indices(idx.clone());
        }
        b.build()
    }
}

pub fn parse_problem(json: &str) -> Result<ProblemTemplate> {
    serde_json::from_str::<ProblemFile>(json)?.to_template()
}

pub fn load_problem(path: &Path) -> Result<ProblemTemplate> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_problem(&text)
}

pub fn problem_to_json(t: &ProblemTemplate) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ProblemFile::from_template(t))?)
}
