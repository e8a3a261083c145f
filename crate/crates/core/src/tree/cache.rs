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

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::RwLock;

use crate::conic::{SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::geometry::{Point, VertexId};
use crate::problem::{CommutationId, ProblemTemplate, ToleranceConfig};

/// Kinds of conic subproblems, for bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SolveKind {
    Vertex,
    Feasibility,
    Shooting,
    ErrorBound,
    MinCost,
}

impl SolveKind {
    const ALL: [SolveKind; 5] = [
        SolveKind::Vertex,
        SolveKind::Feasibility,
        SolveKind::Shooting,
        SolveKind::ErrorBound,
        SolveKind::MinCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolveKind::Vertex => "vertex",
            SolveKind::Feasibility => "feasibility",
            SolveKind::Shooting => "shooting",
            SolveKind::ErrorBound => "error_bound",
            SolveKind::MinCost => "min_cost",
        }
    }
}

#[derive(Debug, Default)]
pub struct SolveCounters {
    counts: [AtomicU64; 5],
}

impl SolveCounters {
    pub fn bump(&self, kind: SolveKind) {
        self.counts[kind as usize].fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> BTreeMap<&'static str, u64> {
        SolveKind::ALL
            .iter()
            .map(|k| (k.name(), self.counts[*k as usize].load(Ordering::Relaxed)))
            .collect()
    }
}

/// Memo of fixed-commutation solves at pool vertices, keyed by
/// `(vertex, commutation)`. Only `Optimal` and `Infeasible` results are
/// stored; concurrent readers and writers are allowed.
#[derive(Debug, Default)]
pub struct VertexSolutionCache {
    map: RwLock<HashMap<(VertexId, CommutationId), Arc<SolveResult>>>,
}

impl VertexSolutionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.read().is_empty()
    }

    pub fn get(&self, vertex: VertexId, delta: CommutationId) -> Option<Arc<SolveResult>> {
        self.map.read().get(&(vertex, delta)).cloned()
    }

    /// Cached `V*_δ(v)` solve, computing it on a miss.
    pub fn solve(
        &self,
        template: &ProblemTemplate,
        vertex: VertexId,
        point: &Point,
        delta: CommutationId,
        cfg: &ToleranceConfig,
        counters: &SolveCounters,
    ) -> Result<Arc<SolveResult>> {
        if let Some(hit) = self.get(vertex, delta) {
            return Ok(hit);
        }
        counters.bump(SolveKind::Vertex);
        let prog = template.program(delta).at(point);
        let res = cfg.solver().solve_definite(&prog, "vertex solve")?;
        if res.status == SolveStatus::Unbounded {
            return Err(Error::Unbounded {
                context: format!(
                    "commutation {} at vertex {:?}",
                    template.commutations().get(delta),
                    point.as_slice()
                ),
            });
        }
        let res = Arc::new(res);
        // A concurrent miss may have raced us; the solver is deterministic so
        // keeping the first entry is equivalent.
        let mut map = self.map.write();
        Ok(Arc::clone(map.entry((vertex, delta)).or_insert(res)))
    }
}
