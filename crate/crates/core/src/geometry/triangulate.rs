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

//! Triangulation of the parameter domain into the initial cells.
//!
//! * a simplex is passed through,
//! * an axis-aligned box gets the Kuhn (Freudenthal) triangulation with `p!`
//!   simplices sharing the main diagonal,
//! * any other polytope with `p ≤ 4` is triangulated through the lower hull
//!   of its lifted vertices, with a small index-dependent perturbation of the
//!   lift so that cospherical inputs still give a proper triangulation.

use nalgebra::{DMatrix, DVector};

use super::{PolytopeV, Simplex, VertexId, VertexPool};
use crate::error::{Error, Result};

pub fn initial_triangulation(domain: &PolytopeV, pool: &mut VertexPool) -> Result<Vec<Simplex>> {
    let p = domain.p();
    let verts = domain.vertices();
    let ids: Vec<VertexId> = verts.iter().map(|v| pool.insert(v.clone())).collect();

    if verts.len() == p + 1 {
        return Ok(vec![Simplex::from_pool(pool, &ids)?]);
    }
    if let Some(cells) = kuhn(domain, pool)? {
        return Ok(cells);
    }
    if p > 4 {
        return Err(Error::UnsupportedDomain(format!(
            "general polytopes are only triangulated for p ≤ 4 (p = {p})"
        )));
    }
    lifted_delaunay(domain, &ids, pool)
}

fn kuhn(domain: &PolytopeV, pool: &mut VertexPool) -> Result<Option<Vec<Simplex>>> {
    let p = domain.p();
    let verts = domain.vertices();
    if verts.len() != 1 << p {
        return Ok(None);
    }
    let (lo, hi) = domain.bounds();
    let tol = 1e-12 * (&hi - &lo).amax();
    let mut seen = vec![false; 1 << p];
    for v in verts {
        let mut code = 0usize;
        for i in 0..p {
            if (v[i] - lo[i]).abs() <= tol {
            } else if (v[i] - hi[i]).abs() <= tol {
                code |= 1 << i;
            } else {
                return Ok(None);
            }
        }
        if std::mem::replace(&mut seen[code], true) {
            return Ok(None);
        }
    }

    let corner = |code: usize| -> DVector<f64> {
        DVector::from_fn(p, |i, _| if code & (1 << i) != 0 { hi[i] } else { lo[i] })
    };
    let mut perm: Vec<usize> = (0..p).collect();
    let mut cells = Vec::new();
    loop {
        let mut code = 0usize;
        let mut ids = vec![pool.insert(corner(code))];
        for &axis in &perm {
            code |= 1 << axis;
            ids.push(pool.insert(corner(code)));
        }
        cells.push(Simplex::from_pool(pool, &ids)?);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(Some(cells))
}

fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

fn lifted_delaunay(
    domain: &PolytopeV,
    ids: &[VertexId],
    pool: &mut VertexPool,
) -> Result<Vec<Simplex>> {
    let p = domain.p();
    let verts = domain.vertices();
    let k = verts.len();
    let (lo, hi) = domain.bounds();
    let scale = (&hi - &lo).amax();
    let center = (&lo + &hi) * 0.5;
    let local: Vec<DVector<f64>> = verts.iter().map(|v| (v - &center) / scale).collect();
    let lift: Vec<f64> = local
        .iter()
        .enumerate()
        .map(|(i, v)| v.norm_squared() + 1e-7 * ((i + 1) as f64 / k as f64).powi(2))
        .collect();

    let mut cells = Vec::new();
    let mut subset: Vec<usize> = (0..=p).collect();
    loop {
        if let Some(cell) = lower_facet(&local, &lift, &subset)? {
            if cell {
                let sel: Vec<VertexId> = subset.iter().map(|&i| ids[i]).collect();
                cells.push(Simplex::from_pool(pool, &sel)?);
            }
        }
        if !next_combination(&mut subset, k) {
            break;
        }
    }
    if cells.is_empty() {
        return Err(Error::DegenerateDomain);
    }
    Ok(cells)
}

/// `None` if the subset is affinely dependent; otherwise whether its lifted
/// points span a facet of the lower hull.
fn lower_facet(local: &[DVector<f64>], lift: &[f64], subset: &[usize]) -> Result<Option<bool>> {
    let p = local[0].len();
    // affine interpolant a·x + b of the lift over the subset
    let m = DMatrix::from_fn(p + 1, p + 1, |r, c| {
        if c < p {
            local[subset[r]][c]
        } else {
            1.0
        }
    });
    let rhs = DVector::from_fn(p + 1, |r, _| lift[subset[r]]);
    if m.determinant().abs() < 1e-12 {
        return Ok(None);
    }
    let coef = match m.lu().solve(&rhs) {
        Some(c) => c,
        None => return Ok(None),
    };
    for (i, x) in local.iter().enumerate() {
        if subset.contains(&i) {
            continue;
        }
        let plane = coef.rows(0, p).dot(x) + coef[p];
        if lift[i] <= plane + 1e-12 {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
