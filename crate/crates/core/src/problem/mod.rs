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

//! The multiparametric mixed-integer conic problem class.
//!
//! A [`ProblemTemplate`] couples a finite, ordered set of admissible binary
//! commutations with an oracle that maps each commutation to a
//! [`FixedCommutationProgram`]: a conic program with linear cost whose data is
//! affine in the parameter `θ`. Fixing the commutation therefore yields a
//! convex program, and the full mixed-integer problem is solved by enumerating
//! the admissible set.

mod solve;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conic::{Cone, ConeSpec, ConicBuilder, ConicProgram};
use crate::error::{Error, Result};
use crate::geometry::PolytopeV;

pub use solve::{feasible_at, instantiate, solve_conic, solve_minlp, MinlpSolution};

/// A binary commutation vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Commutation(pub Vec<bool>);

impl Commutation {
    pub fn from_bits(bits: &[u8]) -> Self {
        Self(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Little-endian packing into `⌈m/8⌉` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.0.len().div_ceil(8)];
        for (i, &b) in self.0.iter().enumerate() {
            if b {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], m: usize) -> Self {
        Self((0..m).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect())
    }
}

impl fmt::Display for Commutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

/// Position of a commutation in its [`CommutationSpace`]; all tie-breaking
/// follows this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CommutationId(pub u32);

impl CommutationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ordered, duplicate-free set of admissible commutations of length `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutationSpace {
    m: usize,
    admissible: Vec<Commutation>,
    index: HashMap<Commutation, CommutationId>,
}

impl CommutationSpace {
    pub fn new(m: usize, admissible: Vec<Commutation>) -> Result<Self> {
        if admissible.is_empty() {
            return Err(Error::InvalidProblem("admissible commutation set is empty".into()));
        }
        let mut index = HashMap::with_capacity(admissible.len());
        for (i, c) in admissible.iter().enumerate() {
            if c.len() != m {
                return Err(Error::InvalidProblem(format!(
                    "commutation {c} has length {} (expected {m})",
                    c.len()
                )));
            }
            if index.insert(c.clone(), CommutationId(i as u32)).is_some() {
                return Err(Error::InvalidProblem(format!("duplicate commutation {c}")));
            }
        }
        Ok(Self {
            m,
            admissible,
            index,
        })
    }

    /// The full hypercube `{0,1}^m` in binary counting order (bit 0 first).
    pub fn hypercube(m: usize) -> Result<Self> {
        if m > 20 {
            return Err(Error::InvalidProblem(format!(
                "refusing to enumerate 2^{m} commutations"
            )));
        }
        let all = (0..1usize << m)
            .map(|k| Commutation((0..m).map(|i| (k >> (m - 1 - i)) & 1 == 1).collect()))
            .collect();
        Self::new(m, all)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.admissible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.admissible.is_empty()
    }

    pub fn get(&self, id: CommutationId) -> &Commutation {
        &self.admissible[id.index()]
    }

    pub fn id_of(&self, delta: &Commutation) -> Option<CommutationId> {
        self.index.get(delta).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = CommutationId> + '_ {
        (0..self.admissible.len() as u32).map(CommutationId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CommutationId, &Commutation)> {
        self.admissible
            .iter()
            .enumerate()
            .map(|(i, c)| (CommutationId(i as u32), c))
    }
}

/// Conic program obtained by fixing the commutation:
///
/// ```text
///   minimize    c_x'x + c_θ'θ + c_0
///   subject to  A_x x + A_θ θ = b
///               H_x x + H_θ θ + h ∈ K
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedCommutationProgram {
    pub cost_x: DVector<f64>,
    pub cost_theta: DVector<f64>,
    pub cost_0: f64,
    pub eq_x: DMatrix<f64>,
    pub eq_theta: DMatrix<f64>,
    pub eq_b: DVector<f64>,
    pub cone_x: DMatrix<f64>,
    pub cone_theta: DMatrix<f64>,
    pub cone_h: DVector<f64>,
    pub cones: ConeSpec,
}

impl FixedCommutationProgram {
    /// Decision dimension `n̄`.
    pub fn n(&self) -> usize {
        self.cost_x.len()
    }

    /// Parameter dimension `p`.
    pub fn p(&self) -> usize {
        self.cost_theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = (self.n(), self.p());
        let l = self.eq_b.len();
        let d = self.cone_h.len();
        let shapes_ok = self.eq_x.shape() == (l, n)
            && self.eq_theta.shape() == (l, p)
            && self.cone_x.shape() == (d, n)
            && self.cone_theta.shape() == (d, p)
            && self.cones.dim() == d;
        if !shapes_ok {
            return Err(Error::InvalidProblem(format!(
                "inconsistent program dimensions (n={n}, p={p}, l={l}, d={d}, cone dim {})",
                self.cones.dim()
            )));
        }
        let finite = self
            .cost_x
            .iter()
            .chain(self.cost_theta.iter())
            .chain(self.eq_x.iter())
            .chain(self.eq_theta.iter())
            .chain(self.eq_b.iter())
            .chain(self.cone_x.iter())
            .chain(self.cone_theta.iter())
            .chain(self.cone_h.iter())
            .all(|v| v.is_finite())
            && self.cost_0.is_finite();
        if !finite {
            return Err(Error::InvalidProblem("non-finite program data".into()));
        }
        Ok(())
    }

    pub fn objective(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.cost_x.dot(x) + self.cost_theta.dot(theta) + self.cost_0
    }

    /// Largest violation of the equality rows and the cone membership at
    /// `(θ, x)`.
    pub fn constraint_residual(&self, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
        let eq = &self.eq_x * x + &self.eq_theta * theta - &self.eq_b;
        let s = &self.cone_x * x + &self.cone_theta * theta + &self.cone_h;
        let eq_res = if eq.is_empty() { 0.0 } else { eq.amax() };
        eq_res.max(self.cones.distance(&s))
    }

    /// Builder over variables `z = (x, y)` with `θ = M y + t`, carrying the
    /// program's cost and constraints. Callers append extra rows on `y`.
    pub fn embed(&self, map: &DMatrix<f64>, offset: &DVector<f64>) -> ConicBuilder {
        let (n, p) = (self.n(), self.p());
        let k = map.ncols();
        assert_eq!(map.nrows(), p);
        assert_eq!(offset.len(), p);
        let nz = n + k;

        let mut cost = DVector::zeros(nz);
        cost.rows_mut(0, n).copy_from(&self.cost_x);
        cost.rows_mut(n, k).copy_from(&(map.transpose() * &self.cost_theta));
        let cost_offset = self.cost_theta.dot(offset) + self.cost_0;
        let mut b = ConicBuilder::new(nz).cost(cost, cost_offset);

        let l = self.eq_b.len();
        if l > 0 {
            let mut g = DMatrix::zeros(l, nz);
            g.view_mut((0, 0), (l, n)).copy_from(&self.eq_x);
            g.view_mut((0, n), (l, k)).copy_from(&(&self.eq_theta * map));
            let h = &self.eq_theta * offset - &self.eq_b;
            b.push(Cone::Zero(l), g, h);
        }

        let mut row = 0;
        for block in &self.cones.blocks {
            let d = block.dim();
            let mut g = DMatrix::zeros(d, nz);
            g.view_mut((0, 0), (d, n))
                .copy_from(&self.cone_x.rows(row, d));
            g.view_mut((0, n), (d, k))
                .copy_from(&(self.cone_theta.rows(row, d) * map));
            let h = self.cone_theta.rows(row, d) * offset + self.cone_h.rows(row, d);
            b.push(*block, g, h);
            row += d;
        }
        b
    }

    /// The program with `θ` substituted.
    pub fn at(&self, theta: &DVector<f64>) -> ConicProgram {
        self.embed(&DMatrix::zeros(self.p(), 0), theta).build()
    }

    /// Same constraints, zero objective.
    pub fn feasibility_at(&self, theta: &DVector<f64>) -> ConicProgram {
        let mut prog = self.at(theta);
        prog.cost.fill(0.0);
        prog.offset = 0.0;
        prog
    }
}

/// Oracle mapping a commutation to its fixed-commutation program. Must be
/// deterministic.
pub trait Instantiator: Send + Sync {
    fn instantiate(&self, delta: &Commutation) -> Result<FixedCommutationProgram>;
}

impl<F> Instantiator for F
where
    F: Fn(&Commutation) -> Result<FixedCommutationProgram> + Send + Sync,
{
    fn instantiate(&self, delta: &Commutation) -> Result<FixedCommutationProgram> {
        self(delta)
    }
}

/// The multiparametric mixed-integer conic program.
///
/// Programs are instantiated once per admissible commutation at build time,
/// so the template is immutable and cheap to share across threads.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    label: String,
    p: usize,
    commutations: Arc<CommutationSpace>,
    programs: Vec<Arc<FixedCommutationProgram>>,
    domain: PolytopeV,
    output_indices: Vec<usize>,
}

impl ProblemTemplate {
    pub fn builder(label: impl Into<String>) -> ProblemTemplateBuilder {
        ProblemTemplateBuilder {
            label: label.into(),
            commutations: None,
            domain: None,
            instantiator: None,
            output_indices: None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Largest decision dimension over the admissible programs.
    pub fn n(&self) -> usize {
        self.programs.iter().map(|p| p.n()).max().unwrap_or(0)
    }

    pub fn m(&self) -> usize {
        self.commutations.m()
    }

    pub fn commutations(&self) -> &CommutationSpace {
        &self.commutations
    }

    pub fn shared_commutations(&self) -> Arc<CommutationSpace> {
        Arc::clone(&self.commutations)
    }

    pub fn program(&self, id: CommutationId) -> &FixedCommutationProgram {
        &self.programs[id.index()]
    }

    pub fn domain(&self) -> &PolytopeV {
        &self.domain
    }

    /// Decision-vector components needed online (e.g. the first control).
    pub fn output_indices(&self) -> &[usize] {
        &self.output_indices
    }

    /// Same problem over another parameter domain.
    pub fn with_domain(&self, domain: PolytopeV) -> Result<Self> {
        if domain.p() != self.p {
            return Err(Error::InvalidProblem(format!(
                "domain dimension {} does not match p = {}",
                domain.p(),
                self.p
            )));
        }
        let mut t = self.clone();
        t.domain = domain;
        Ok(t)
    }
}

pub struct ProblemTemplateBuilder {
    label: String,
    commutations: Option<CommutationSpace>,
    domain: Option<PolytopeV>,
    instantiator: Option<Box<dyn Instantiator>>,
    output_indices: Option<Vec<usize>>,
}

impl ProblemTemplateBuilder {
    pub fn commutations(mut self, space: CommutationSpace) -> Self {
        self.commutations = Some(space);
        self
    }

    pub fn domain(mut self, domain: PolytopeV) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn instantiator(mut self, f: impl Instantiator + 'static) -> Self {
        self.instantiator = Some(Box::new(f));
        self
    }

    pub fn output_indices(mut self, idx: Vec<usize>) -> Self {
        self.output_indices = Some(idx);
        self
    }

    pub fn build(self) -> Result<ProblemTemplate> {
        let space = self
            .commutations
            .ok_or_else(|| Error::InvalidProblem("missing commutation space".into()))?;
        let domain = self
            .domain
            .ok_or_else(|| Error::InvalidProblem("missing parameter domain".into()))?;
        let inst = self
            .instantiator
            .ok_or_else(|| Error::InvalidProblem("missing instantiator".into()))?;
        let p = domain.p();
        let mut programs = Vec::with_capacity(space.len());
        for (_, delta) in space.iter() {
            let prog = inst.instantiate(delta)?;
            prog.validate()?;
            if prog.p() != p {
                return Err(Error::InvalidProblem(format!(
                    "program for {delta} has p = {} but the domain has p = {p}",
                    prog.p()
                )));
            }
            programs.push(Arc::new(prog));
        }
        let n_min = programs.iter().map(|p| p.n()).min().unwrap_or(0);
        let output_indices = self.output_indices.unwrap_or_else(|| (0..n_min).collect());
        if let Some(&bad) = output_indices.iter().find(|&&i| i >= n_min) {
            return Err(Error::InvalidProblem(format!(
                "output index {bad} exceeds the smallest decision dimension {n_min}"
            )));
        }
        Ok(ProblemTemplate {
            label: self.label,
            p,
            commutations: Arc::new(space),
            programs,
            domain,
            output_indices,
        })
    }
}

/// Tolerances and safeguards shared by all stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub eps_a: f64,
    pub eps_r: f64,
    pub solver_tol: f64,
    /// Slack on barycentric coordinates for point-in-simplex tests.
    pub geom_tol: f64,
    pub min_cell_volume: f64,
    pub max_depth: u32,
    /// Relative-error denominators at or below this value disable the
    /// relative test for the cell.
    pub rel_denominator_floor: f64,
    /// Two scores closer than this are treated as tied (resolved by
    /// commutation order).
    pub tie_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_a: 0.0,
            eps_r: 0.0,
            solver_tol: 1e-8,
            geom_tol: 1e-9,
            min_cell_volume: 0.0,
            max_depth: 64,
            rel_denominator_floor: 1e-9,
            tie_tol: 1e-6,
        }
    }
}

impl ToleranceConfig {
    pub fn new(eps_a: f64, eps_r: f64) -> Self {
        Self {
            eps_a,
            eps_r,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_a >= 0.0 && self.eps_r >= 0.0) {
            return Err(Error::InvalidConfig("eps_a and eps_r must be nonnegative".into()));
        }
        if self.eps_a == 0.0 && self.eps_r == 0.0 {
            return Err(Error::InvalidConfig(
                "at least one of eps_a, eps_r must be positive".into(),
            ));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if !(self.solver_tol > 0.0 && self.geom_tol >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> crate::conic::ConicSolver {
        crate::conic::ConicSolver::new(self.solver_tol)
    }

    /// Right-hand side of the ε-suboptimality test at optimal cost `v`.
    pub fn threshold(&self, v: f64) -> f64 {
        self.eps_a.max(self.eps_r * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutation_space_rejects_bad_input() {
        assert!(CommutationSpace::new(1, vec![]).is_err());
        let c = Commutation(vec![true]);
        assert!(CommutationSpace::new(1, vec![c.clone(), c]).is_err());
        assert!(CommutationSpace::new(2, vec![Commutation(vec![true])]).is_err());
    }

    #[test]
    fn hypercube_order_and_lookup() {
        let s = CommutationSpace::hypercube(2).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.get(CommutationId(1)), &Commutation(vec![false, true]));
        assert_eq!(
            s.id_of(&Commutation(vec![true, false])),
            Some(CommutationId(2))
        );
        assert_eq!(s.id_of(&Commutation(vec![true])), None);
    }

    #[test]
    fn bitset_packing() {
        let c = Commutation::from_bits(&[1, 0, 0, 1, 0, 0, 0, 0, 1]);
        let bytes = c.to_bytes();
        assert_eq!(bytes, vec![0b0000_1001, 0b0000_0001]);
        assert_eq!(Commutation::from_bytes(&bytes, 9), c);
        assert_eq!(c.to_string(), "(1,0,0,1,0,0,0,0,1)");
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::new(0.0, 0.0).validate().is_err());
        assert!(ToleranceConfig::new(0.1, 0.0).validate().is_ok());
        let mut c = ToleranceConfig::new(0.1, 0.0);
        c.max_depth = 0;
        assert!(c.validate().is_err());
    }
}
