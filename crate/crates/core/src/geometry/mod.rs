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

//! Simplices, vertex-represented polytopes and the shared vertex pool.

mod pool;
mod triangulate;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pool::{VertexId, VertexPool};
pub use triangulate::initial_triangulation;

pub type Point = DVector<f64>;

/// Full-dimensional convex polytope given by its vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeV {
    p: usize,
    vertices: Vec<Point>,
}

impl PolytopeV {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let p = vertices.first().map(|v| v.len()).ok_or(Error::DegenerateDomain)?;
        if p == 0 || vertices.iter().any(|v| v.len() != p) {
            return Err(Error::InvalidProblem("polytope vertices have mixed dimensions".into()));
        }
        if affine_rank(&vertices) < p {
            return Err(Error::DegenerateDomain);
        }
        Ok(Self { p, vertices })
    }

    /// Axis-aligned box `[lo, hi]` with corners in binary counting order.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Result<Self> {
        assert_eq!(lo.len(), hi.len());
        let p = lo.len();
        let vertices = (0..1usize << p)
            .map(|k| {
                DVector::from_fn(p, |i, _| {
                    if (k >> (p - 1 - i)) & 1 == 1 {
                        hi[i]
                    } else {
                        lo[i]
                    }
                })
            })
            .collect();
        Self::new(vertices)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// `s · Θ` scaled about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.vertices.iter().map(|v| v * s).collect())
    }

    /// Bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices[1..] {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

fn affine_rank(points: &[Point]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let p = points[0].len();
    let m = DMatrix::from_fn(p, points.len() - 1, |i, j| points[j + 1][i] - points[0][i]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    m.rank(1e-10 * scale)
}

/// A full-dimensional simplex whose vertices are sorted by pool id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    ids: Vec<VertexId>,
    vertices: Vec<Point>,
}

impl Simplex {
    /// Canonicalizes the vertex order by id. Fails on a degenerate simplex.
    pub fn new(mut pairs: Vec<(VertexId, Point)>) -> Result<Self> {
        let p = pairs.first().map(|(_, v)| v.len()).ok_or(Error::SingularSimplex)?;
        if pairs.len() != p + 1 || pairs.iter().any(|(_, v)| v.len() != p) {
            return Err(Error::InvalidProblem(format!(
                "a {p}-simplex needs {} vertices, got {}",
                p + 1,
                pairs.len()
            )));
        }
        pairs.sort_by_key(|(id, _)| *id);
        let (ids, vertices): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let s = Self { ids, vertices };
        if s.volume() <= 0.0 || !s.volume().is_finite() {
            return Err(Error::SingularSimplex);
        }
        Ok(s)
    }

    /// Build from pool ids, looking coordinates up in `pool`.
    pub fn from_pool(pool: &VertexPool, ids: &[VertexId]) -> Result<Self> {
        Self::new(ids.iter().map(|&id| (id, pool.get(id).clone())).collect())
    }

    pub fn p(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Vertices as the columns of a `p × (p+1)` matrix.
    pub fn vertex_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let mut c = DVector::zeros(self.p());
        for v in &self.vertices {
            c += v;
        }
        c / (self.p() + 1) as f64
    }

    /// `|det[v₂−v₁, …, v_{p+1}−v₁]| / p!`
    pub fn volume(&self) -> f64 {
        let p = self.p();
        let v0 = &self.vertices[0];
        let m = DMatrix::from_fn(p, p, |i, j| self.vertices[j + 1][i] - v0[i]);
        let fact: f64 = (1..=p).map(|k| k as f64).product();
        m.determinant().abs() / fact
    }

    pub fn diameter(&self) -> f64 {
        let (i, j) = self.longest_edge();
        (&self.vertices[i] - &self.vertices[j]).norm()
    }

    /// Local indices `(i, j)`, `i < j`, of the longest edge. Ties (relative
    /// 1e-12) go to the lexicographically smallest id pair.
    pub fn longest_edge(&self) -> (usize, usize) {
        let k = self.vertices.len();
        let mut best = (0, 1);
        let mut best_len = (&self.vertices[0] - &self.vertices[1]).norm_squared();
        for i in 0..k {
            for j in (i + 1)..k {
                let len = (&self.vertices[i] - &self.vertices[j]).norm_squared();
                if len > best_len * (1.0 + 1e-12) {
                    best = (i, j);
                    best_len = len;
                }
            }
        }
        best
    }

    /// Affine coordinates of `θ` with respect to the vertices.
    pub fn barycentric(&self, theta: &DVector<f64>) -> Result<Barycentric> {
        let p = self.p();
        let mut m = DMatrix::zeros(p + 1, p + 1);
        for (j, v) in self.vertices.iter().enumerate() {
            m.view_mut((0, j), (p, 1)).copy_from(v);
            m[(p, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(p + 1);
        rhs.rows_mut(0, p).copy_from(theta);
        rhs[p] = 1.0;
        let alpha = m.lu().solve(&rhs).ok_or(Error::SingularSimplex)?;
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::SingularSimplex);
        }
        Ok(Barycentric { alpha })
    }

    pub fn contains(&self, theta: &DVector<f64>, geom_tol: f64) -> Result<bool> {
        Ok(self.barycentric(theta)?.min() >= -geom_tol)
    }

    /// `Σ αᵢ vᵢ`
    pub fn reconstruct(&self, alpha: &Barycentric) -> Point {
        let mut out = DVector::zeros(self.p());
        for (a, v) in alpha.alpha.iter().zip(&self.vertices) {
            out += v * *a;
        }
        out
    }

    /// Longest-edge bisection. `S1` drops the first endpoint of the longest
    /// edge, `S2` the second; the midpoint is registered in `pool`.
    pub fn split_longest_edge(
        &self,
        pool: &mut VertexPool,
        min_cell_volume: f64,
    ) -> Result<(Simplex, Simplex, VertexId)> {
        let (i, j) = self.longest_edge();
        let mid_id = pool.midpoint(self.ids[i], self.ids[j]);
        let mid = pool.get(mid_id).clone();
        let child = |drop: usize| -> Result<Simplex> {
            let pairs = self
                .ids
                .iter()
                .zip(&self.vertices)
                .enumerate()
                .map(|(k, (&id, v))| {
                    if k == drop {
                        (mid_id, mid.clone())
                    } else {
                        (id, v.clone())
                    }
                })
                .collect();
            let s = Simplex::new(pairs).map_err(|_| Error::DegenerateChild { volume: 0.0 })?;
            let vol = s.volume();
            if vol < min_cell_volume {
                return Err(Error::DegenerateChild { volume: vol });
            }
            Ok(s)
        };
        Ok((child(i)?, child(j)?, mid_id))
    }
}

/// Affine coordinates with respect to a simplex's vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Barycentric {
    pub alpha: DVector<f64>,
}

impl Barycentric {
    pub fn min(&self) -> f64 {
        self.alpha.min()
    }

    pub fn sum(&self) -> f64 {
        self.alpha.sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Point {
        DVector::from_column_slice(xs)
    }

    fn unit_triangle(pool: &mut VertexPool) -> Simplex {
        let ids: Vec<_> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
            .iter()
            .map(|c| pool.insert(v(c)))
            .collect();
        Simplex::from_pool(pool, &ids).unwrap()
    }

    #[test]
    fn volume_centroid_contains() {
        let mut pool = VertexPool::new(1e-9);
        let t = unit_triangle(&mut pool);
        assert_abs_diff_eq!(t.volume(), 0.5, epsilon = 1e-15);
        assert!(t.contains(&v(&[0.25, 0.25]), 1e-9).unwrap());
        assert!(!t.contains(&v(&[0.75, 0.75]), 1e-9).unwrap());
        let a = pool.insert(v(&[-1.0]));
        let b = pool.insert(v(&[1.0]));
        let seg = Simplex::from_pool(&pool, &[a, b]).unwrap();
        assert_eq!(seg.centroid()[0], 0.0);
        assert_eq!(seg.volume(), 2.0);
    }

    #[test]
    fn barycentric_special_points() {
        let mut pool = VertexPool::new(1e-9);
        let t = unit_triangle(&mut pool);
        let c = t.barycentric(&t.centroid()).unwrap();
        for a in c.alpha.iter() {
            assert_abs_diff_eq!(*a, 1.0 / 3.0, epsilon = 1e-12);
        }
        let at_v1 = t.barycentric(&t.vertices()[1]).unwrap();
        assert_abs_diff_eq!(at_v1.alpha[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at_v1.alpha[0], 0.0, epsilon = 1e-12);
        let outside = t.barycentric(&v(&[2.0, 2.0])).unwrap();
        assert!(outside.min() < -1e-9);
    }

    #[test]
    fn longest_edge_and_ties() {
        let mut pool = VertexPool::new(1e-9);
        let t = unit_triangle(&mut pool);
        // hypotenuse joins (1,0) and (0,1), local indices 1 and 2
        assert_eq!(t.longest_edge(), (1, 2));

        let h = 3f64.sqrt() / 2.0;
        let ids: Vec<_> = [[0.0, 0.0], [1.0, 0.0], [0.5, h]]
            .iter()
            .map(|c| pool.insert(v(c)))
            .collect();
        let eq = Simplex::from_pool(&pool, &ids).unwrap();
        assert_eq!(eq.longest_edge(), (0, 1));

        let a = pool.insert(v(&[-3.0]));
        let b = pool.insert(v(&[4.0]));
        assert_eq!(Simplex::from_pool(&pool, &[a, b]).unwrap().longest_edge(), (0, 1));
    }

    #[test]
    fn bisection_examples() {
        let mut pool = VertexPool::new(1e-9);
        let a = pool.insert(v(&[-1.0]));
        let b = pool.insert(v(&[1.0]));
        let seg = Simplex::from_pool(&pool, &[a, b]).unwrap();
        let (s1, s2, mid) = seg.split_longest_edge(&mut pool, 0.0).unwrap();
        assert_eq!(pool.get(mid)[0], 0.0);
        assert_eq!(s1.vertices()[0][0].min(s1.vertices()[1][0]), 0.0);
        assert_eq!(s2.vertices()[0][0].min(s2.vertices()[1][0]), -1.0);

        let t = unit_triangle(&mut pool);
        let (t1, t2, _) = t.split_longest_edge(&mut pool, 0.0).unwrap();
        assert_abs_diff_eq!(t1.volume(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(t2.volume(), 0.25, epsilon = 1e-15);
        assert!(t.split_longest_edge(&mut pool, 0.3).is_err());
    }

    #[test]
    fn shared_edge_midpoint_is_deduplicated() {
        let mut pool = VertexPool::new(1e-9);
        let ids: Vec<_> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|c| pool.insert(v(c)))
            .collect();
        let lower = Simplex::from_pool(&pool, &[ids[0], ids[1], ids[2]]).unwrap();
        let upper = Simplex::from_pool(&pool, &[ids[1], ids[2], ids[3]]).unwrap();
        let (_, _, m1) = lower.split_longest_edge(&mut pool, 0.0).unwrap();
        let (_, _, m2) = upper.split_longest_edge(&mut pool, 0.0).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(pool.len(), 5);
    }

    #[test]
    fn diameters_halve_after_p_rounds_of_bisection() {
        // Repeated longest-edge bisection of a triangle: after k = p(p+1)/2 = 3
        // rounds applied to every cell, the largest diameter is at most half
        // the original longest edge (checked numerically over 4 such batches).
        let mut pool = VertexPool::new(1e-9);
        let ids: Vec<_> = [[0.0, 0.0], [3.0, 0.2], [0.7, 2.0]]
            .iter()
            .map(|c| pool.insert(v(c)))
            .collect();
        let root = Simplex::from_pool(&pool, &ids).unwrap();
        let l0 = root.diameter();
        let mut cells = vec![root];
        let mut prev = l0;
        for _batch in 0..4 {
            for _ in 0..3 {
                let mut next = Vec::new();
                for c in &cells {
                    let (a, b, _) = c.split_longest_edge(&mut pool, 0.0).unwrap();
                    next.push(a);
                    next.push(b);
                }
                cells = next;
            }
            let d = cells.iter().map(Simplex::diameter).fold(0.0, f64::max);
            assert!(d <= 0.5 * prev * (1.0 + 1e-12), "{d} vs {prev}");
            prev = d;
        }
    }

    #[test]
    fn canonical_ordering() {
        let mut pool = VertexPool::new(1e-9);
        let ids: Vec<_> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
            .iter()
            .map(|c| pool.insert(v(c)))
            .collect();
        let a = Simplex::from_pool(&pool, &[ids[2], ids[0], ids[1]]).unwrap();
        let b = Simplex::from_pool(&pool, &[ids[1], ids[2], ids[0]]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_polytope_rejected() {
        let pts = vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[2.0, 2.0])];
        assert!(matches!(PolytopeV::new(pts), Err(Error::DegenerateDomain)));
    }

    proptest! {
        #[test]
        fn barycentric_reconstructs(
            x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0,
            ax in 0.0f64..1.0, ay in 0.0f64..1.0, az in 0.0f64..1.0,
        ) {
            let mut pool = VertexPool::new(1e-9);
            let ids: Vec<_> = [[0.1, 0.0, 0.0], [1.0, 0.2, 0.0], [0.0, 1.3, 0.1], [0.2, 0.1, 0.9]]
                .iter()
                .map(|c| pool.insert(v(c)))
                .collect();
            let s = Simplex::from_pool(&pool, &ids).unwrap();
            let theta = v(&[x, y, z]);
            let bc = s.barycentric(&theta).unwrap();
            let back = s.reconstruct(&bc);
            prop_assert!((back - &theta).norm() <= 1e-10 * (1.0 + theta.norm()));
            prop_assert!((bc.sum() - 1.0).abs() <= 1e-10);

            // bisection halves volume
            let (s1, s2, _) = s.split_longest_edge(&mut pool, 0.0).unwrap();
            let r1 = s1.volume() / s.volume();
            let r2 = s2.volume() / s.volume();
            prop_assert!((r1 - 0.5).abs() <= 1e-12 && (r2 - 0.5).abs() <= 1e-12);

            // a convex combination inside S lands in exactly the children that contain it
            let w = [ax, ay, az, 1.0];
            let tot: f64 = w.iter().sum();
            let inside = s.reconstruct(&Barycentric {
                alpha: DVector::from_iterator(4, w.iter().map(|a| a / tot)),
            });
            prop_assert!(s1.contains(&inside, 1e-9).unwrap() || s2.contains(&inside, 1e-9).unwrap());
        }
    }
}
