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

//! Simplicial partition tree.
//!
//! Nodes live in an arena and refer to each other by [`NodeId`]. When the
//! initial triangulation has more than one cell the cells hang under an
//! implicit root, so they sit at depth 1; a single initial simplex is the root
//! itself at depth 0. Below the top level every split is binary.

mod cache;
mod progress;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{initial_triangulation, Barycentric, Point, PolytopeV, Simplex, VertexPool};
use crate::problem::{Commutation, CommutationId, CommutationSpace, ProblemTemplate};

pub use cache::{SolveCounters, SolveKind, VertexSolutionCache};
pub use progress::{ProgressEvent, ProgressLog, ProgressRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Open cell, with the commutation carried over from an earlier pass if any.
    Open(Option<CommutationId>),
    ClosedFeasible(CommutationId),
    ClosedSubopt(CommutationId),
    /// Closed with the optimizers at the simplex vertices, in vertex order.
    ClosedExplicit {
        delta: CommutationId,
        vertex_solutions: Vec<DVector<f64>>,
    },
}

impl Payload {
    pub fn delta(&self) -> Option<CommutationId> {
        match self {
            Payload::Open(d) => *d,
            Payload::ClosedFeasible(d) | Payload::ClosedSubopt(d) => Some(*d),
            Payload::ClosedExplicit { delta, .. } => Some(*delta),
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Payload::Open(_))
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub simplex: Simplex,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: u32,
    /// `Some` exactly for leaves.
    pub payload: Option<Payload>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    pub tau: u32,
    pub lambda: usize,
    pub closed_volume_fraction: f64,
    pub wall_time_s: f64,
    pub solve_counts: BTreeMap<&'static str, u64>,
}

/// What a point query returns.
#[derive(Debug, Clone)]
pub struct LeafView<'a> {
    pub delta: &'a Commutation,
    pub alpha: Barycentric,
    pub vertex_solutions: Option<&'a [DVector<f64>]>,
    pub depth: u32,
}

/// Anything that maps a parameter to the closed leaf containing it.
pub trait PointLocation {
    fn p(&self) -> usize;
    /// Components of the stored vertex solutions that make up the control.
    fn output_indices(&self) -> &[usize];
    fn locate_leaf(&self, theta: &Point) -> Result<LeafView<'_>>;
}

#[derive(Debug)]
pub struct PartitionTree {
    p: usize,
    nodes: Vec<TreeNode>,
    roots: Vec<NodeId>,
    pool: VertexPool,
    open_stack: Vec<NodeId>,
    commutations: Arc<CommutationSpace>,
    output_indices: Vec<usize>,
    geom_tol: f64,
    domain_volume: f64,
    closed_count: usize,
    closed_volume: f64,
    log: ProgressLog,
    cache: VertexSolutionCache,
    counters: SolveCounters,
}

impl PartitionTree {
    /// Open tree over the initial triangulation of `domain`.
    pub fn new(
        domain: &PolytopeV,
        commutations: Arc<CommutationSpace>,
        output_indices: Vec<usize>,
        geom_tol: f64,
    ) -> Result<Self> {
        let mut pool = VertexPool::new(geom_tol);
        let cells = initial_triangulation(domain, &mut pool)?;
        let mut tree = Self::empty(domain.p(), pool, commutations, output_indices, geom_tol);
        tree.add_roots(cells.into_iter().map(|s| (s, Some(Payload::Open(None)))).collect());
        Ok(tree)
    }

    pub fn for_template(template: &ProblemTemplate, geom_tol: f64) -> Result<Self> {
        Self::new(
            template.domain(),
            template.shared_commutations(),
            template.output_indices().to_vec(),
            geom_tol,
        )
    }

    pub(crate) fn empty(
        p: usize,
        pool: VertexPool,
        commutations: Arc<CommutationSpace>,
        output_indices: Vec<usize>,
        geom_tol: f64,
    ) -> Self {
        Self {
            p,
            nodes: Vec::new(),
            roots: Vec::new(),
            pool,
            open_stack: Vec::new(),
            commutations,
            output_indices,
            geom_tol,
            domain_volume: 0.0,
            closed_count: 0,
            closed_volume: 0.0,
            log: ProgressLog::default(),
            cache: VertexSolutionCache::new(),
            counters: SolveCounters::default(),
        }
    }

    /// Install the top-level cells. Open ones are stacked so that the first
    /// cell is processed first.
    pub(crate) fn add_roots(&mut self, cells: Vec<(Simplex, Option<Payload>)>) -> Vec<NodeId> {
        let depth = u32::from(cells.len() > 1);
        let mut ids = Vec::with_capacity(cells.len());
        for (simplex, payload) in cells {
            self.domain_volume += simplex.volume();
            ids.push(self.alloc(simplex, None, depth, payload));
        }
        self.roots.extend(&ids);
        self.restack();
        ids
    }

    /// Attach a child while rebuilding a stored tree.
    pub(crate) fn attach(&mut self, parent: NodeId, simplex: Simplex, payload: Option<Payload>) -> NodeId {
        let depth = self.nodes[parent.index()].depth + 1;
        let id = self.alloc(simplex, Some(parent), depth, payload);
        self.nodes[parent.index()].children.push(id);
        id
    }

    pub(crate) fn set_leaf_payload(&mut self, id: NodeId, payload: Payload) {
        let was_closed = self.nodes[id.index()].payload.as_ref().is_some_and(|p| !p.is_open());
        if was_closed {
            self.closed_count -= 1;
            self.closed_volume -= self.nodes[id.index()].simplex.volume();
        }
        if !payload.is_open() {
            self.closed_count += 1;
            self.closed_volume += self.nodes[id.index()].simplex.volume();
        }
        self.nodes[id.index()].payload = Some(payload);
    }

    fn alloc(&mut self, simplex: Simplex, parent: Option<NodeId>, depth: u32, payload: Option<Payload>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(TreeNode {
            simplex,
            parent,
            children: Vec::new(),
            depth,
            payload: None,
        });
        if let Some(pl) = payload {
            self.set_leaf_payload(id, pl);
        }
        id
    }

    fn restack(&mut self) {
        let mut open: Vec<NodeId> = self
            .leaves()
            .filter(|&id| self.nodes[id.index()].payload.as_ref().is_some_and(Payload::is_open))
            .collect();
        open.reverse();
        self.open_stack = open;
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn has_synthetic_root(&self) -> bool {
        self.roots.len() > 1
    }

    pub fn pool(&self) -> &VertexPool {
        &self.pool
    }

    pub fn pool_mut(&mut self) -> &mut VertexPool {
        &mut self.pool
    }

    pub fn commutations(&self) -> &CommutationSpace {
        &self.commutations
    }

    pub fn shared_commutations(&self) -> Arc<CommutationSpace> {
        Arc::clone(&self.commutations)
    }

    pub fn output_indices(&self) -> &[usize] {
        &self.output_indices
    }

    pub fn geom_tol(&self) -> f64 {
        self.geom_tol
    }

    pub fn domain_volume(&self) -> f64 {
        self.domain_volume
    }

    pub fn cache(&self) -> &VertexSolutionCache {
        &self.cache
    }

    pub fn counters(&self) -> &SolveCounters {
        &self.counters
    }

    pub fn log(&self) -> &ProgressLog {
        &self.log
    }

    pub fn open_stack(&self) -> &[NodeId] {
        &self.open_stack
    }

    pub fn open_count(&self) -> usize {
        self.open_stack.len()
    }

    pub fn is_fully_closed(&self) -> bool {
        self.open_stack.is_empty()
    }

    /// Leaves in depth-first order, children left to right.
    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        let mut stack: Vec<NodeId> = self.roots.iter().rev().copied().collect();
        std::iter::from_fn(move || {
            while let Some(id) = stack.pop() {
                let n = &self.nodes[id.index()];
                if n.is_leaf() {
                    return Some(id);
                }
                stack.extend(n.children.iter().rev());
            }
            None
        })
    }

    /// Nodes in preorder, each top-level cell followed by its subtree.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id.index()].children.iter().rev());
        }
        out
    }

    pub fn pop_open(&mut self) -> Option<NodeId> {
        self.open_stack.pop()
    }

    /// Turn `leaf` into an internal node with open children. The last child
    /// ends on top of the stack.
    pub fn push_children(&mut self, leaf: NodeId, cells: Vec<(Simplex, Option<CommutationId>)>) -> Vec<NodeId> {
        assert!(self.nodes[leaf.index()].is_leaf(), "push_children on an internal node");
        assert!(!self.open_stack.contains(&leaf), "push_children on a stacked leaf");
        self.set_leaf_payload(leaf, Payload::Open(None));
        self.nodes[leaf.index()].payload = None;
        let depth = self.nodes[leaf.index()].depth + 1;
        let mut ids = Vec::with_capacity(cells.len());
        for (simplex, delta) in cells {
            let id = self.alloc(simplex, Some(leaf), depth, Some(Payload::Open(delta)));
            self.nodes[leaf.index()].children.push(id);
            self.open_stack.push(id);
            ids.push(id);
        }
        self.record(ProgressEvent::Split { node: leaf, children: ids.clone() }, depth);
        ids
    }

    pub fn close(&mut self, leaf: NodeId, payload: Payload) {
        assert!(!payload.is_open(), "close with an open payload");
        assert!(self.nodes[leaf.index()].is_leaf(), "close on an internal node");
        if let Payload::ClosedExplicit { vertex_solutions, .. } = &payload {
            assert_eq!(vertex_solutions.len(), self.p + 1);
        }
        let delta = payload.delta().expect("closed payload has a commutation");
        self.set_leaf_payload(leaf, payload);
        let depth = self.nodes[leaf.index()].depth;
        self.record(ProgressEvent::Closed { node: leaf, delta }, depth);
    }

    /// Give an open leaf a new commutation and put it back on top of the stack.
    pub fn reassign(&mut self, leaf: NodeId, delta: CommutationId) {
        let from = match self.nodes[leaf.index()].payload {
            Some(Payload::Open(Some(d))) => d,
            ref other => panic!("reassign on a leaf without an open commutation: {other:?}"),
        };
        assert!(!self.open_stack.contains(&leaf), "reassign on a stacked leaf");
        self.nodes[leaf.index()].payload = Some(Payload::Open(Some(delta)));
        self.open_stack.push(leaf);
        let depth = self.nodes[leaf.index()].depth;
        self.record(ProgressEvent::Reassigned { node: leaf, from, to: delta }, depth);
    }

    /// Reopen every leaf, keeping its commutation, and start a fresh log.
    pub fn reopen_all(&mut self) {
        let leaves: Vec<NodeId> = self.leaves().collect();
        for id in leaves {
            let delta = self.nodes[id.index()].payload.as_ref().and_then(Payload::delta);
            self.set_leaf_payload(id, Payload::Open(delta));
        }
        self.restack();
        self.log = ProgressLog::default();
    }

    fn record(&mut self, event: ProgressEvent, depth: u32) {
        let rec = ProgressRecord {
            wall_time_s: 0.0,
            event,
            closed_leaf_count: self.closed_count,
            closed_volume_fraction: self.closed_volume_fraction(),
            open_count: self.open_stack.len(),
            depth,
        };
        self.log.push(rec);
    }

    pub fn closed_volume_fraction(&self) -> f64 {
        if self.domain_volume > 0.0 {
            self.closed_volume / self.domain_volume
        } else {
            0.0
        }
    }

    pub fn stats(&self) -> TreeStats {
        let mut tau = 0;
        let mut lambda = 0;
        let mut closed = 0.0;
        for id in self.leaves() {
            let n = &self.nodes[id.index()];
            tau = tau.max(n.depth);
            lambda += 1;
            if n.payload.as_ref().is_some_and(|p| !p.is_open()) {
                closed += n.simplex.volume();
            }
        }
        TreeStats {
            tau,
            lambda,
            closed_volume_fraction: if self.domain_volume > 0.0 { closed / self.domain_volume } else { 0.0 },
            wall_time_s: self.log.elapsed_s(),
            solve_counts: self.counters.snapshot(),
        }
    }

    /// Leaf containing `theta` and its barycentric coordinates there. Among
    /// siblings the first one containing the point wins.
    pub fn locate_with_coords(&self, theta: &Point) -> Result<(NodeId, Barycentric)> {
        if theta.len() != self.p {
            return Err(Error::InvalidConfig(format!(
                "parameter has dimension {}, expected {}",
                theta.len(),
                self.p
            )));
        }
        let mut level: &[NodeId] = &self.roots;
        'descend: loop {
            for &id in level {
                let n = &self.nodes[id.index()];
                let bc = n.simplex.barycentric(theta)?;
                if bc.min() >= -self.geom_tol {
                    if n.is_leaf() {
                        return Ok((id, bc));
                    }
                    level = &n.children;
                    continue 'descend;
                }
            }
            return Err(Error::OutOfDomain);
        }
    }

    pub fn locate(&self, theta: &Point) -> Result<NodeId> {
        self.locate_with_coords(theta).map(|(id, _)| id)
    }
}

impl PointLocation for PartitionTree {
    fn p(&self) -> usize {
        self.p
    }

    fn output_indices(&self) -> &[usize] {
        &self.output_indices
    }

    fn locate_leaf(&self, theta: &Point) -> Result<LeafView<'_>> {
        let (id, alpha) = self.locate_with_coords(theta)?;
        let n = &self.nodes[id.index()];
        let (delta, sols) = match n.payload.as_ref().expect("leaf payload") {
            Payload::Open(_) => {
                return Err(Error::InvalidConfig("query hit an open leaf".into()));
            }
            Payload::ClosedFeasible(d) | Payload::ClosedSubopt(d) => (*d, None),
            Payload::ClosedExplicit { delta, vertex_solutions } => (*delta, Some(vertex_solutions.as_slice())),
        };
        Ok(LeafView {
            delta: self.commutations.get(delta),
            alpha,
            vertex_solutions: sols,
            depth: n.depth,
        })
    }
}
