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


//! Out-of-plane relative motion of a chaser spacecraft, controlled by
//! impulsive velocity changes.
//!
//! The plant is `z̈ = −ω₀² z + u`. With an impulse applied at the start of each
//! sampling interval the discrete model is `x⁺ = A (x + (0, Δv))`.
//!
//! The parameter is the state in scaled units, `θ = (z [cm], ż [mm/s])`, so
//! that both coordinates of the domain are of order one. Impulses are in mm/s.
//! Each step's impulse is either zero or has magnitude in `[dv_lo, dv_hi]`
//! with a chosen sign, encoded as a one-hot triple (negative, zero, positive).
//! The cost is total fuel `Σ|Δv_k|` plus a small penalty on the normalized
//! terminal state; predicted states must stay in the domain box.

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::geometry::PolytopeV;
use crate::problem::{Commutation, CommutationSpace, ProblemTemplate};

use super::ProgramRows;

/// `(A, B)` of the impulsive model in SI units, `x⁺ = A x + B Δv` with
/// `B = A (0, 1)ᵀ`.
pub fn cwh_discretize(omega0: f64, ts: f64) -> (Matrix2<f64>, Vector2<f64>) {
    assert!(omega0 > 0.0 && ts > 0.0, "ω₀ and T_s must be positive");
    let wt = omega0 * ts;
    let (s, c) = wt.sin_cos();
    let a = Matrix2::new(c, s / omega0, -omega0 * s, c);
    let b = a * Vector2::new(0.0, 1.0);
    (a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CwhConfig {
    /// Orbital rate [rad/s].
    pub omega0: f64,
    /// Sampling time [s].
    pub ts: f64,
    pub horizon: usize,
    /// Smallest and largest nonzero impulse magnitude [mm/s].
    pub dv_lo: f64,
    pub dv_hi: f64,
    /// Domain half-widths: position [cm] and velocity [mm/s].
    pub z_max: f64,
    pub v_max: f64,
    pub terminal_weight: f64,
    /// Domain scale factor applied after a coverage failure.
    pub shrink: f64,
}

impl Default for CwhConfig {
    fn default() -> Self {
        Self {
            omega0: 0.00113,
            ts: 100.0,
            horizon: 3,
            dv_lo: 0.02,
            dv_hi: 2.0,
            z_max: 10.0,
            v_max: 1.0,
            terminal_weight: 0.1,
            shrink: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Thrust {
    Neg,
    Zero,
    Pos,
}

const THRUSTS: [Thrust; 3] = [Thrust::Neg, Thrust::Zero, Thrust::Pos];

#[derive(Debug, Clone)]
pub struct CwhProblem {
    pub config: CwhConfig,
    /// Scaled-unit transition matrix (cm, mm/s).
    pub a: Matrix2<f64>,
}

impl CwhProblem {
    pub fn new(config: CwhConfig) -> Result<Self> {
        if config.horizon == 0 || !(config.dv_lo >= 0.0 && config.dv_hi > config.dv_lo) {
            return Err(Error::InvalidProblem("bad horizon or impulse bounds".into()));
        }
        let (a_si, _) = cwh_discretize(config.omega0, config.ts);
        let s = Matrix2::new(100.0, 0.0, 0.0, 1000.0);
        let s_inv = Matrix2::new(0.01, 0.0, 0.0, 0.001);
        Ok(Self {
            a: s * a_si * s_inv,
            config,
        })
    }

    /// SI state `(m, m/s)` to parameter units `(cm, mm/s)`.
    pub fn to_scaled(x: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(100.0 * x[0], 1000.0 * x[1])
    }

    pub fn from_scaled(theta: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(0.01 * theta[0], 0.001 * theta[1])
    }

    /// One nominal step in scaled units.
    pub fn step(&self, theta: &Vector2<f64>, dv: f64) -> Vector2<f64> {
        self.a * (theta + Vector2::new(0.0, dv))
    }

    pub fn m(&self) -> usize {
        3 * self.config.horizon
    }

    /// All sign patterns, ordered lexicographically by step with
    /// negative < zero < positive.
    pub fn commutation_space(&self) -> Result<CommutationSpace> {
        let n = self.config.horizon;
        let count = 3usize.pow(n as u32);
        let list = (0..count)
            .map(|mut k| {
                let mut digits = vec![0usize; n];
                for d in digits.iter_mut().rev() {
                    *d = k % 3;
                    k /= 3;
                }
                let mut bits = vec![false; 3 * n];
                for (step, d) in digits.iter().enumerate() {
                    bits[3 * step + d] = true;
                }
                Commutation(bits)
            })
            .collect();
        CommutationSpace::new(3 * n, list)
    }

    pub fn domain(&self) -> Result<PolytopeV> {
        let (z, v) = (self.config.z_max, self.config.v_max);
        PolytopeV::cuboid(&[-z, -v], &[z, v])
    }

    fn thrusts(delta: &Commutation, horizon: usize) -> Result<Vec<Thrust>> {
        (0..horizon)
            .map(|k| {
                let b = &delta.0[3 * k..3 * k + 3];
                match b.iter().filter(|&&x| x).count() {
                    1 => Ok(THRUSTS[b.iter().position(|&x| x).expect("one set bit")]),
                    _ => Err(Error::UnknownCommutation(delta.to_string())),
                }
            })
            .collect()
    }

    /// Decision vector `(Δv_1..Δv_N, t_1..t_N, s)`.
    pub fn template(&self) -> Result<ProblemTemplate> {
        let me = self.clone();
        ProblemTemplate::builder("cwh")
            .commutations(self.commutation_space()?)
            .domain(self.domain()?)
            .instantiator(move |d: &Commutation| me.program(d))
            .output_indices(vec![0])
            .build()
    }

    /// Template over the domain scaled by `factor`.
    pub fn template_scaled(&self, factor: f64) -> Result<ProblemTemplate> {
        let t = self.template()?;
        t.with_domain(self.domain()?.scaled(factor)?)
    }

    fn program(&self, delta: &Commutation) -> Result<crate::problem::FixedCommutationProgram> {
        let cfg = &self.config;
        let nh = cfg.horizon;
        let n = 2 * nh + 1;
        let thrusts = Self::thrusts(delta, nh)?;
        let unit = |i: usize, s: f64| {
            let mut v = vec![0.0; n];
            v[i] = s;
            v
        };
        let mut rows = ProgramRows::new(n, 2);
        let mut cost = vec![0.0; n];
        for c in cost.iter_mut().skip(nh).take(nh) {
            *c = 1.0;
        }
        cost[2 * nh] = cfg.terminal_weight;
        rows.cost(&cost, &[0.0, 0.0], 0.0);

        for (k, th) in thrusts.iter().enumerate() {
            if *th == Thrust::Zero {
                rows.eq(unit(k, 1.0), vec![0.0, 0.0], 0.0);
            }
        }
        for (k, th) in thrusts.iter().enumerate() {
            match th {
                Thrust::Neg => {
                    rows.nonneg(unit(k, -1.0), vec![0.0, 0.0], -cfg.dv_lo);
                    rows.nonneg(unit(k, 1.0), vec![0.0, 0.0], cfg.dv_hi);
                }
                Thrust::Pos => {
                    rows.nonneg(unit(k, 1.0), vec![0.0, 0.0], -cfg.dv_lo);
                    rows.nonneg(unit(k, -1.0), vec![0.0, 0.0], cfg.dv_hi);
                }
                Thrust::Zero => {}
            }
            // t_k ≥ |Δv_k|
            let mut r = unit(nh + k, 1.0);
            r[k] = -1.0;
            rows.nonneg(r, vec![0.0, 0.0], 0.0);
            let mut r = unit(nh + k, 1.0);
            r[k] = 1.0;
            rows.nonneg(r, vec![0.0, 0.0], 0.0);
        }

        // θ_k = Pθ θ + Pu u, propagated symbolically
        let mut p_theta = DMatrix::<f64>::identity(2, 2);
        let mut p_u = DMatrix::<f64>::zeros(2, n);
        let a = DMatrix::from_fn(2, 2, |i, j| self.a[(i, j)]);
        let bounds = [cfg.z_max, cfg.v_max];
        for k in 0..nh {
            p_u[(1, k)] += 1.0;
            p_theta = &a * p_theta;
            p_u = &a * p_u;
            for (i, &b) in bounds.iter().enumerate() {
                let gx: Vec<f64> = p_u.row(i).iter().copied().collect();
                let gt: Vec<f64> = p_theta.row(i).iter().copied().collect();
                rows.nonneg(gx.iter().map(|v| -v).collect(), gt.iter().map(|v| -v).collect(), b);
                rows.nonneg(gx, gt, b);
            }
        }

        // s ≥ ‖(z_N / z_max, ż_N / v_max)‖
        let mut soc = vec![(unit(2 * nh, 1.0), vec![0.0, 0.0], 0.0)];
        for (i, &b) in bounds.iter().enumerate() {
            let gx: Vec<f64> = p_u.row(i).iter().map(|v| v / b).collect();
            let gt: Vec<f64> = p_theta.row(i).iter().map(|v| v / b).collect();
            soc.push((gx, gt, 0.0));
        }
        rows.soc(soc);
        rows.build()
    }

    /// Nominal cost of an impulse sequence from `θ`, or `None` if a
    /// predicted state leaves the domain or an impulse is out of range.
    pub fn sequence_cost(&self, theta: &Vector2<f64>, dv: &[f64]) -> Option<f64> {
        let cfg = &self.config;
        let mut x = *theta;
        let mut fuel = 0.0;
        for &u in dv {
            let a = u.abs();
            if a > 1e-7 && (a < cfg.dv_lo - 1e-6 || a > cfg.dv_hi + 1e-6) {
                return None;
            }
            fuel += a;
            x = self.step(&x, u);
            if x[0].abs() > cfg.z_max + 1e-6 || x[1].abs() > cfg.v_max + 1e-6 {
                return None;
            }
        }
        let term = (x[0] / cfg.z_max).hypot(x[1] / cfg.v_max);
        Some(fuel + cfg.terminal_weight * term)
    }
}

impl Default for CwhProblem {
    fn default() -> Self {
        Self::new(CwhConfig::default()).expect("default configuration is valid")
    }
}

#[cfg(test)]
pub(crate) fn theta2(z: f64, v: f64) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_vec(vec![z, v])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{solve_minlp, ToleranceConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn discretization() {
        let (a, _) = cwh_discretize(0.00113, 100.0);
        assert_abs_diff_eq!(a[(0, 0)], 0.113f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(a[(0, 0)], 0.99362, epsilon = 1e-5);
        assert_abs_diff_eq!(a.determinant(), 1.0, epsilon = 1e-12);
        let (a, _) = cwh_discretize(1e-9, 100.0);
        assert_abs_diff_eq!(a[(0, 1)], 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a[(1, 0)], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn commutation_space_is_one_hot() {
        let c = CwhProblem::default();
        let s = c.commutation_space().unwrap();
        assert_eq!((s.m(), s.len()), (9, 27));
        for (_, d) in s.iter() {
            for k in 0..3 {
                assert_eq!(d.0[3 * k..3 * k + 3].iter().filter(|&&b| b).count(), 1);
            }
        }
    }

    #[test]
    fn origin_needs_no_fuel() {
        let c = CwhProblem::default();
        let t = c.template().unwrap();
        let cfg = ToleranceConfig::new(0.01, 0.0);
        let s = solve_minlp(&t, &theta2(0.0, 0.0), &cfg).unwrap();
        assert!(s.value.abs() < 1e-6);
        let zero = t.commutations().get(s.delta);
        assert!((0..3).all(|k| zero.0[3 * k + 1]));
    }

    #[test]
    fn minlp_matches_sequence_cost() {
        let c = CwhProblem::default();
        let t = c.template().unwrap();
        let cfg = ToleranceConfig::new(0.01, 0.0);
        for th in [(3.0, 0.2), (-8.0, 0.5), (9.0, -0.9)] {
            let theta = theta2(th.0, th.1);
            let s = solve_minlp(&t, &theta, &cfg).unwrap();
            let dv: Vec<f64> = s.x.rows(0, 3).iter().copied().collect();
            let v = c.sequence_cost(&Vector2::new(th.0, th.1), &dv).unwrap_or_else(|| panic!("{dv:?} {:?}", t.commutations().get(s.delta)));
            assert!((v - s.value).abs() < 1e-5, "{v} vs {}", s.value);
        }
    }
}
