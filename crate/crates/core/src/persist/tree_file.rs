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


//! Binary tree files.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! header    "MPT1" | version u16 | model u8 | mode u8 | p u32 | n̂ u32 | m u32
//!           | geom_tol f64 | vertices u32 | nodes u32 | top-level cells u32
//! vertices  p f64 each (model 1 only)
//! structure one bit per node in preorder, 1 = internal, LSB first
//! records   per node in preorder:
//!             cell data   if top-level, left child, or explicit right leaf
//!             leaf data   commutation bitset ⌈m/8⌉ bytes,
//!                         then n̂·(p+1) f64 vertex outputs if explicit
//! trailer   CRC-32 of everything above, u32
//! ```
//!
//! Cell data is `p+1` vertex indices (u32) in model 1 and the `p(p+1)` floats
//! of the barycentric map `α₁..ₚ = T⁻¹(θ − v₀)` in model 2. A right child's
//! cell follows from its parent and left sibling, so model 1 only stores it
//! where the vertex outputs need it; model 2 never needs it for point location.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Barycentric, Point, Simplex, VertexId, VertexPool};
use crate::phase2::Mode;
use crate::problem::{Commutation, CommutationId, CommutationSpace};
use crate::tree::{LeafView, NodeId, PartitionTree, Payload, PointLocation, TreeStats};

pub const MAGIC: &[u8; 4] = b"MPT1";
pub const VERSION: u16 = 1;
const HEADER_BYTES: usize = 40;
const TRAILER_BYTES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageModel {
    /// Shared vertex table plus vertex indices.
    M1,
    /// Precomputed barycentric maps.
    M2,
}

impl StorageModel {
    fn code(self) -> u8 {
        match self {
            StorageModel::M1 => 1,
            StorageModel::M2 => 2,
        }
    }
}

impl std::str::FromStr for StorageModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "1" => Ok(StorageModel::M1),
            "m2" | "2" => Ok(StorageModel::M2),
            other => Err(Error::InvalidConfig(format!("unknown storage model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Top,
    Left,
    Right,
}

/// Node counts that determine the file size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LayoutCounts {
    pub p: usize,
    pub n_hat: usize,
    pub m: usize,
    pub explicit: bool,
    pub vertices: usize,
    pub nodes: usize,
    pub leaves: usize,
    pub top: usize,
    pub left: usize,
    pub right_leaves: usize,
}

impl LayoutCounts {
    pub fn of(tree: &PartitionTree) -> Self {
        let mut c = LayoutCounts {
            p: tree.p(),
            n_hat: tree.output_indices().len(),
            m: tree.commutations().m(),
            vertices: tree.pool().len(),
            nodes: tree.nodes().len(),
            top: tree.roots().len(),
            ..Default::default()
        };
        for n in tree.nodes() {
            if n.is_leaf() {
                c.leaves += 1;
                if matches!(n.payload, Some(Payload::ClosedExplicit { .. })) {
                    c.explicit = true;
                }
            }
            if n.children.len() == 2 {
                c.left += 1;
                if tree.node(n.children[1]).is_leaf() {
                    c.right_leaves += 1;
                }
            }
        }
        c
    }

    /// Exact byte count of the file this tree serializes to.
    pub fn file_bytes(&self, model: StorageModel) -> usize {
        let (p, x) = (self.p, usize::from(self.explicit));
        let cells = self.top + self.left + x * self.right_leaves;
        let cell_bytes = match model {
            StorageModel::M1 => 4 * (p + 1),
            StorageModel::M2 => 8 * p * (p + 1),
        };
        let table = match model {
            StorageModel::M1 => 8 * p * self.vertices,
            StorageModel::M2 => 0,
        };
        let leaf_bytes = self.m.div_ceil(8) + x * 8 * self.n_hat * (p + 1);
        HEADER_BYTES + table + self.nodes.div_ceil(8) + cells * cell_bytes + self.leaves * leaf_bytes + TRAILER_BYTES
    }

    /// The closed-form estimate for a perfect binary tree over a simplex,
    /// with 8-byte floats, 4-byte indices and packed commutation bits.
    pub fn idealized_bytes(&self, model: StorageModel) -> f64 {
        let (p, l) = (self.p as f64, self.leaves as f64);
        let (n_hat, mb) = (self.n_hat as f64, self.m.div_ceil(8) as f64);
        match (model, self.explicit) {
            (StorageModel::M1, false) => l * (8.0 * p + 4.0 * (p + 1.0) + mb) + 8.0 * p * p,
            (StorageModel::M1, true) => l * (8.0 * p + (p + 1.0) * (6.0 + 8.0 * n_hat)) + 8.0 * p * p,
            (StorageModel::M2, false) => l * 8.0 * p * (p + 1.0) + l * mb,
            (StorageModel::M2, true) => 1.5 * l * 8.0 * p * (p + 1.0) + l * (p + 1.0) * n_hat * 8.0,
        }
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.buf.len() {
            return Err(Error::CorruptFile("unexpected end of data".into()));
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
}

/// `α₁..ₚ = T⁻¹(θ − v₀)` with `T = [v₁−v₀ … v_p−v₀]`, `α₀ = 1 − Σα`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricMap {
    pub base: DVector<f64>,
    pub t_inv: DMatrix<f64>,
}

impl BarycentricMap {
    pub fn of(s: &Simplex) -> Result<Self> {
        let p = s.p();
        let v0 = &s.vertices()[0];
        let t = DMatrix::from_fn(p, p, |i, j| s.vertices()[j + 1][i] - v0[i]);
        let t_inv = t.try_inverse().ok_or(Error::SingularSimplex)?;
        Ok(Self { base: v0.clone(), t_inv })
    }

    pub fn apply(&self, theta: &Point) -> Barycentric {
        let r = &self.t_inv * (theta - &self.base);
        let p = r.len();
        let mut alpha = DVector::zeros(p + 1);
        alpha[0] = 1.0 - r.sum();
        alpha.rows_mut(1, p).copy_from(&r);
        Barycentric { alpha }
    }
}

/// Serialize a fully closed tree.
pub fn encode(tree: &PartitionTree, model: StorageModel) -> Result<Vec<u8>> {
    if !tree.is_fully_closed() || tree.leaves().any(|l| tree.node(l).payload.as_ref().is_some_and(Payload::is_open)) {
        return Err(Error::InvalidConfig("only fully closed trees can be saved".into()));
    }
    let counts = LayoutCounts::of(tree);
    let explicit = counts.explicit;
    if explicit
        && tree
            .leaves()
            .any(|l| !matches!(tree.node(l).payload, Some(Payload::ClosedExplicit { .. })))
    {
        return Err(Error::ModeMismatch);
    }
    let p = tree.p();
    let mut w = Writer {
        buf: Vec::with_capacity(counts.file_bytes(model)),
    };
    w.buf.extend_from_slice(MAGIC);
    w.u16(VERSION);
    w.u8(model.code());
    w.u8(u8::from(explicit));
    w.u32(p as u32);
    w.u32(counts.n_hat as u32);
    w.u32(counts.m as u32);
    w.f64(tree.geom_tol());
    w.u32(if model == StorageModel::M1 { counts.vertices as u32 } else { 0 });
    w.u32(counts.nodes as u32);
    w.u32(counts.top as u32);

    if model == StorageModel::M1 {
        for v in tree.pool().points() {
            for &c in v.iter() {
                w.f64(c);
            }
        }
    }

    // preorder with roles
    let mut order: Vec<(NodeId, Role)> = Vec::with_capacity(counts.nodes);
    let mut stack: Vec<(NodeId, Role)> = tree.roots().iter().rev().map(|&r| (r, Role::Top)).collect();
    while let Some((id, role)) = stack.pop() {
        order.push((id, role));
        let ch = &tree.node(id).children;
        if !ch.is_empty() {
            if ch.len() != 2 {
                return Err(Error::InvalidConfig("non-binary split below the top level".into()));
            }
            stack.push((ch[1], Role::Right));
            stack.push((ch[0], Role::Left));
        }
    }
    let mut bits = vec![0u8; order.len().div_ceil(8)];
    for (k, (id, _)) in order.iter().enumerate() {
        if !tree.node(*id).is_leaf() {
            bits[k / 8] |= 1 << (k % 8);
        }
    }
    w.buf.extend_from_slice(&bits);

    for (id, role) in order {
        let n = tree.node(id);
        let leaf = n.is_leaf();
        if role != Role::Right || (explicit && leaf) {
            match model {
                StorageModel::M1 => {
                    for vid in n.simplex.ids() {
                        w.u32(vid.0);
                    }
                }
                StorageModel::M2 => {
                    let map = BarycentricMap::of(&n.simplex)?;
                    for i in 0..p {
                        for j in 0..p {
                            w.f64(map.t_inv[(i, j)]);
                        }
                    }
                    for &c in map.base.iter() {
                        w.f64(c);
                    }
                }
            }
        }
        if leaf {
            let payload = n.payload.as_ref().expect("leaf payload");
            let delta = payload.delta().expect("closed leaf has a commutation");
            w.buf.extend_from_slice(&tree.commutations().get(delta).to_bytes());
            if let Payload::ClosedExplicit { vertex_solutions, .. } = payload {
                for x in vertex_solutions {
                    for &i in tree.output_indices() {
                        w.f64(x[i]);
                    }
                }
            }
        }
    }
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    Ok(w.buf)
}

pub fn save(tree: &PartitionTree, path: &Path, model: StorageModel) -> Result<usize> {
    let bytes = encode(tree, model)?;
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len())
}

pub fn load(path: &Path) -> Result<LoadedTree> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

struct Header {
    explicit: bool,
    p: usize,
    n_hat: usize,
    m: usize,
    geom_tol: f64,
    vertices: usize,
    nodes: usize,
    top: usize,
}

/// Leaf commutations, deduplicated in order of first appearance.
struct Deltas {
    m: usize,
    list: Vec<Commutation>,
}

impl Deltas {
    fn read(&mut self, r: &mut Reader<'_>) -> Result<CommutationId> {
        let c = Commutation::from_bytes(r.take(self.m.div_ceil(8))?, self.m);
        Ok(match self.list.iter().position(|d| *d == c) {
            Some(i) => CommutationId(i as u32),
            None => {
                self.list.push(c);
                CommutationId(self.list.len() as u32 - 1)
            }
        })
    }

    fn space(self) -> Result<Arc<CommutationSpace>> {
        Ok(Arc::new(CommutationSpace::new(self.m, self.list)?))
    }
}

fn read_solutions(r: &mut Reader<'_>, h: &Header) -> Result<Vec<DVector<f64>>> {
    (0..=h.p)
        .map(|_| {
            let v: Result<Vec<f64>> = (0..h.n_hat).map(|_| r.f64()).collect();
            Ok(DVector::from_vec(v?))
        })
        .collect()
}

pub fn decode(bytes: &[u8]) -> Result<LoadedTree> {
    if bytes.len() < HEADER_BYTES + TRAILER_BYTES || &bytes[..4] != MAGIC {
        return Err(Error::CorruptFile("bad magic".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - TRAILER_BYTES);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    if crc32fast::hash(body) != stored {
        return Err(Error::CorruptFile("checksum mismatch".into()));
    }
    let model = match r.u8()? {
        1 => StorageModel::M1,
        2 => StorageModel::M2,
        k => return Err(Error::CorruptFile(format!("unknown storage model {k}"))),
    };
    let h = Header {
        explicit: r.u8()? != 0,
        p: r.usize()?,
        n_hat: r.usize()?,
        m: r.usize()?,
        geom_tol: r.f64()?,
        vertices: r.usize()?,
        nodes: r.usize()?,
        top: r.usize()?,
    };
    if h.p == 0 || h.top == 0 || h.nodes < h.top {
        return Err(Error::CorruptFile("inconsistent header".into()));
    }
    let loaded = match model {
        StorageModel::M1 => LoadedTree::M1(decode_m1(&mut r, &h)?),
        StorageModel::M2 => LoadedTree::M2(decode_m2(&mut r, &h)?),
    };
    if r.pos != body.len() {
        return Err(Error::CorruptFile("trailing data".into()));
    }
    Ok(loaded)
}

fn read_structure(r: &mut Reader<'_>, nodes: usize) -> Result<Vec<bool>> {
    let bits = r.take(nodes.div_ceil(8))?;
    Ok((0..nodes).map(|k| bits[k / 8] & (1 << (k % 8)) != 0).collect())
}

fn corrupt_index() -> Error {
    Error::CorruptFile("vertex index out of range".into())
}

fn decode_m1(r: &mut Reader<'_>, h: &Header) -> Result<PartitionTree> {
    let mut pool = VertexPool::new(h.geom_tol);
    for _ in 0..h.vertices {
        let v: Result<Vec<f64>> = (0..h.p).map(|_| r.f64()).collect();
        pool.push_unchecked(DVector::from_vec(v?));
    }
    let internal = read_structure(r, h.nodes)?;
    let mut cursor = 0usize;
    let mut deltas = Deltas { m: h.m, list: Vec::new() };

    // read the whole preorder stream into a flat list first
    struct Rec {
        internal: bool,
        ids: Option<Vec<VertexId>>,
        leaf: Option<(CommutationId, Option<Vec<DVector<f64>>>)>,
    }
    fn read_rec(
        r: &mut Reader<'_>,
        h: &Header,
        internal: &[bool],
        cursor: &mut usize,
        role: Role,
        deltas: &mut Deltas,
        out: &mut Vec<(Role, Rec)>,
    ) -> Result<()> {
        let is_internal = *internal
            .get(*cursor)
            .ok_or_else(|| Error::CorruptFile("structure shorter than node stream".into()))?;
        *cursor += 1;
        let ids = if role != Role::Right || (h.explicit && !is_internal) {
            let v: Result<Vec<VertexId>> = (0..=h.p)
                .map(|_| {
                    let k = r.u32()?;
                    if k as usize >= h.vertices {
                        return Err(corrupt_index());
                    }
                    Ok(VertexId(k))
                })
                .collect();
            Some(v?)
        } else {
            None
        };
        let leaf = if is_internal {
            None
        } else {
            let d = deltas.read(r)?;
            let sols = if h.explicit { Some(read_solutions(r, h)?) } else { None };
            Some((d, sols))
        };
        out.push((role, Rec { internal: is_internal, ids, leaf }));
        if is_internal {
            read_rec(r, h, internal, cursor, Role::Left, deltas, out)?;
            read_rec(r, h, internal, cursor, Role::Right, deltas, out)?;
        }
        Ok(())
    }

    let mut recs = Vec::with_capacity(h.nodes);
    let mut top_starts = Vec::with_capacity(h.top);
    for _ in 0..h.top {
        top_starts.push(recs.len());
        read_rec(r, h, &internal, &mut cursor, Role::Top, &mut deltas, &mut recs)?;
    }
    if cursor != h.nodes {
        return Err(Error::CorruptFile("node count mismatch".into()));
    }
    let space = deltas.space()?;
    let payload = |leaf: &Option<(CommutationId, Option<Vec<DVector<f64>>>)>| {
        leaf.as_ref().map(|(d, sols)| match sols {
            None => Payload::ClosedSubopt(*d),
            Some(s) => Payload::ClosedExplicit {
                delta: *d,
                vertex_solutions: s.clone(),
            },
        })
    };

    let mut tree = PartitionTree::empty(h.p, pool, space, (0..h.n_hat).collect(), h.geom_tol);
    let mut roots = Vec::with_capacity(h.top);
    for &k in &top_starts {
        let ids = recs[k].1.ids.as_ref().expect("top-level cells carry indices");
        let s = Simplex::from_pool(tree.pool(), ids).map_err(|_| Error::CorruptFile("degenerate cell".into()))?;
        roots.push((s, payload(&recs[k].1.leaf)));
    }
    let root_ids = tree.add_roots(roots);

    // rebuild children; a right child is its parent with the far endpoint of
    // the bisected edge replaced by the midpoint
    let mut k = 0;
    for (t, &start) in top_starts.iter().enumerate() {
        debug_assert_eq!(k, start);
        k += 1;
        let mut stack: Vec<NodeId> = Vec::new();
        if recs[start].1.internal {
            stack.push(root_ids[t]);
        }
        // stack of parents waiting for children: (parent, left child done)
        let mut pending: Vec<(NodeId, Option<NodeId>)> = stack.iter().map(|&p| (p, None)).collect();
        while let Some((parent, left)) = pending.pop() {
            let (role, rec) = &recs[k];
            k += 1;
            let simplex = match (role, left) {
                (Role::Left, None) => {
                    let ids = rec.ids.as_ref().ok_or_else(|| Error::CorruptFile("left child without cell".into()))?;
                    Simplex::from_pool(tree.pool(), ids).map_err(|_| Error::CorruptFile("degenerate cell".into()))?
                }
                (Role::Right, Some(l)) => {
                    let derived = right_sibling(&tree, parent, l)?;
                    if let Some(ids) = &rec.ids {
                        if derived.ids() != ids.as_slice() {
                            return Err(Error::CorruptFile("right cell disagrees with its siblings".into()));
                        }
                    }
                    derived
                }
                _ => return Err(Error::CorruptFile("unexpected node role".into())),
            };
            let id = tree.attach(parent, simplex, payload(&rec.leaf));
            if left.is_none() {
                pending.push((parent, Some(id)));
            }
            if rec.internal {
                pending.push((id, None));
            }
        }
    }
    Ok(tree)
}

fn right_sibling(tree: &PartitionTree, parent: NodeId, left: NodeId) -> Result<Simplex> {
    let ps = &tree.node(parent).simplex;
    let ls = &tree.node(left).simplex;
    let bad = || Error::CorruptFile("left child is not a bisection of its parent".into());
    let mid = *ls.ids().iter().find(|id| !ps.ids().contains(id)).ok_or_else(bad)?;
    let dropped = *ps.ids().iter().find(|id| !ls.ids().contains(id)).ok_or_else(bad)?;
    let pool = tree.pool();
    let (m, a) = (pool.get(mid), pool.get(dropped));
    let other = ps
        .ids()
        .iter()
        .copied()
        .filter(|&w| w != dropped)
        .min_by(|&x, &y| {
            let dx = ((a + pool.get(x)) * 0.5 - m).norm();
            let dy = ((a + pool.get(y)) * 0.5 - m).norm();
            dx.total_cmp(&dy)
        })
        .ok_or_else(bad)?;
    let ids: Vec<VertexId> = ps.ids().iter().map(|&w| if w == other { mid } else { w }).collect();
    Simplex::from_pool(pool, &ids).map_err(|_| bad())
}

/// A tree restored from a model-2 file: barycentric maps instead of
/// vertices.
#[derive(Debug, Clone)]
pub struct CompiledTree {
    p: usize,
    explicit: bool,
    geom_tol: f64,
    commutations: Arc<CommutationSpace>,
    output_indices: Vec<usize>,
    nodes: Vec<CompiledNode>,
    roots: Vec<usize>,
}

#[derive(Debug, Clone)]
struct CompiledNode {
    map: Option<BarycentricMap>,
    children: Option<(usize, usize)>,
    depth: u32,
    leaf: Option<(CommutationId, Option<Vec<DVector<f64>>>)>,
}

fn decode_m2(r: &mut Reader<'_>, h: &Header) -> Result<CompiledTree> {
    let internal = read_structure(r, h.nodes)?;
    let mut deltas = Deltas { m: h.m, list: Vec::new() };
    let mut nodes: Vec<CompiledNode> = Vec::with_capacity(h.nodes);
    let depth0 = u32::from(h.top > 1);

    fn read_map(r: &mut Reader<'_>, p: usize) -> Result<BarycentricMap> {
        let mut t_inv = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                t_inv[(i, j)] = r.f64()?;
            }
        }
        let base: Result<Vec<f64>> = (0..p).map(|_| r.f64()).collect();
        Ok(BarycentricMap {
            base: DVector::from_vec(base?),
            t_inv,
        })
    }

    // iterative preorder: (role, depth, parent slot to fill)
    let mut roots = Vec::with_capacity(h.top);
    let mut cursor = 0usize;
    for _ in 0..h.top {
        let mut stack = vec![(Role::Top, depth0, None::<(usize, bool)>)];
        while let Some((role, depth, parent)) = stack.pop() {
            let is_internal = *internal
                .get(cursor)
                .ok_or_else(|| Error::CorruptFile("structure shorter than node stream".into()))?;
            cursor += 1;
            let map = if role != Role::Right || (h.explicit && !is_internal) {
                Some(read_map(r, h.p)?)
            } else {
                None
            };
            let leaf = if is_internal {
                None
            } else {
                let d = deltas.read(r)?;
                let sols = if h.explicit { Some(read_solutions(r, h)?) } else { None };
                Some((d, sols))
            };
            let id = nodes.len();
            nodes.push(CompiledNode {
                map,
                children: None,
                depth,
                leaf,
            });
            match parent {
                None => roots.push(id),
                Some((pid, false)) => nodes[pid].children = Some((id, usize::MAX)),
                Some((pid, true)) => {
                    let c = nodes[pid].children.as_mut().expect("left child first");
                    c.1 = id;
                }
            }
            if is_internal {
                stack.push((Role::Right, depth + 1, Some((id, true))));
                stack.push((Role::Left, depth + 1, Some((id, false))));
            }
        }
    }
    if cursor != h.nodes {
        return Err(Error::CorruptFile("node count mismatch".into()));
    }
    Ok(CompiledTree {
        p: h.p,
        explicit: h.explicit,
        geom_tol: h.geom_tol,
        commutations: deltas.space()?,
        output_indices: (0..h.n_hat).collect(),
        nodes,
        roots,
    })
}

impl CompiledTree {
    pub fn is_explicit(&self) -> bool {
        self.explicit
    }

    pub fn stats(&self) -> (u32, usize) {
        let leaves = self.nodes.iter().filter(|n| n.leaf.is_some());
        let tau = leaves.clone().map(|n| n.depth).max().unwrap_or(0);
        (tau, leaves.count())
    }

    fn descend(&self, theta: &Point) -> Result<(usize, Option<Barycentric>)> {
        let tol = self.geom_tol;
        let mut cur = None;
        for &r in &self.roots {
            let a = self.nodes[r].map.as_ref().expect("top-level map").apply(theta);
            if a.min() >= -tol {
                cur = Some((r, Some(a)));
                break;
            }
        }
        let (mut id, mut alpha) = cur.ok_or(Error::OutOfDomain)?;
        while let Some((l, r)) = self.nodes[id].children {
            let a = self.nodes[l].map.as_ref().expect("left map").apply(theta);
            if a.min() >= -tol {
                (id, alpha) = (l, Some(a));
            } else {
                alpha = self.nodes[r].map.as_ref().map(|m| m.apply(theta));
                id = r;
            }
        }
        Ok((id, alpha))
    }
}

impl PointLocation for CompiledTree {
    fn p(&self) -> usize {
        self.p
    }

    fn output_indices(&self) -> &[usize] {
        &self.output_indices
    }

    /// Semi-explicit right leaves carry no map, so their `alpha` is empty.
    fn locate_leaf(&self, theta: &Point) -> Result<LeafView<'_>> {
        let (id, alpha) = self.descend(theta)?;
        let n = &self.nodes[id];
        let (d, sols) = n.leaf.as_ref().expect("descent ends at a leaf");
        Ok(LeafView {
            delta: self.commutations.get(*d),
            alpha: alpha.unwrap_or(Barycentric {
                alpha: DVector::zeros(0),
            }),
            vertex_solutions: sols.as_deref(),
            depth: n.depth,
        })
    }
}

/// Either kind of stored tree.
#[derive(Debug)]
pub enum LoadedTree {
    M1(PartitionTree),
    M2(CompiledTree),
}

impl LoadedTree {
    pub fn mode(&self) -> Mode {
        let explicit = match self {
            LoadedTree::M1(t) => t
                .leaves()
                .any(|l| matches!(t.node(l).payload, Some(Payload::ClosedExplicit { .. }))),
            LoadedTree::M2(t) => t.explicit,
        };
        if explicit {
            Mode::Explicit
        } else {
            Mode::SemiExplicit
        }
    }

    /// `(τ, λ)`
    pub fn depth_and_leaves(&self) -> (u32, usize) {
        match self {
            LoadedTree::M1(t) => {
                let s: TreeStats = t.stats();
                (s.tau, s.lambda)
            }
            LoadedTree::M2(t) => t.stats(),
        }
    }
}

impl PointLocation for LoadedTree {
    fn p(&self) -> usize {
        match self {
            LoadedTree::M1(t) => t.p(),
            LoadedTree::M2(t) => t.p,
        }
    }

    fn output_indices(&self) -> &[usize] {
        match self {
            LoadedTree::M1(t) => t.output_indices(),
            LoadedTree::M2(t) => &t.output_indices,
        }
    }

    fn locate_leaf(&self, theta: &Point) -> Result<LeafView<'_>> {
        match self {
            LoadedTree::M1(t) => t.locate_leaf(theta),
            LoadedTree::M2(t) => t.locate_leaf(theta),
        }
    }
}
