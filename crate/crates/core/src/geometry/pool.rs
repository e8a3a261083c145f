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

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Append-only store of unique vertices.
///
/// Coordinates closer than `tol` (per component) share one id. Edge
/// midpoints are additionally memoized by their endpoint ids, which is what
/// makes neighbouring cells reuse the vertex created by the first bisection of
/// a shared edge.
#[derive(Debug, Clone, Default)]
pub struct VertexPool {
    tol: f64,
    points: Vec<Point>,
    grid: HashMap<Vec<i64>, Vec<VertexId>>,
    midpoints: HashMap<(VertexId, VertexId), VertexId>,
}

impl VertexPool {
    pub fn new(tol: f64) -> Self {
        Self {
            tol: if tol > 0.0 { tol } else { 1e-12 },
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, id: VertexId) -> &Point {
        &self.points[id.index()]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    fn cell_of(&self, x: &Point) -> Vec<i64> {
        x.iter().map(|c| (c / self.tol).floor() as i64).collect()
    }

    pub fn find(&self, x: &Point) -> Option<VertexId> {
        let key = self.cell_of(x);
        let p = key.len();
        // probe the 3^p neighbouring grid cells
        let probes = 3usize.pow(p as u32);
        for code in 0..probes {
            let mut k = key.clone();
            let mut c = code;
            for slot in k.iter_mut() {
                *slot += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(ids) = self.grid.get(&k) {
                for &id in ids {
                    let q = &self.points[id.index()];
                    if q.iter().zip(x.iter()).all(|(a, b)| (a - b).abs() <= self.tol) {
                        return Some(id);
                    }
                }
            }
        }
        None
    }

    /// Id of `x`, registering it if no existing vertex is within tolerance.
    pub fn insert(&mut self, x: Point) -> VertexId {
        if let Some(id) = self.find(&x) {
            return id;
        }
        self.push_unchecked(x)
    }

    /// Append without deduplication (used when replaying a stored table).
    pub fn push_unchecked(&mut self, x: Point) -> VertexId {
        let id = VertexId(self.points.len() as u32);
        let key = self.cell_of(&x);
        self.grid.entry(key).or_default().push(id);
        self.points.push(x);
        id
    }

    pub fn midpoint(&mut self, a: VertexId, b: VertexId) -> VertexId {
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&id) = self.midpoints.get(&key) {
            return id;
        }
        let mid = (self.get(key.0) + self.get(key.1)) * 0.5;
        let id = self.insert(mid);
        self.midpoints.insert(key, id);
        id
    }
}
