//! Homogenization of the interface data and the norms of the data.
//!
//! A lift U~ with traces satisfying the five interface conditions (with
//! phi = 0) is subtracted from the solution; the remainder solves the
//! problem with homogeneous interface conditions and source F = f - L U~.

use super::{Forcing, Operator};
use crate::basic_state::PointJet;
use crate::dual::Dual3;
use crate::expr::Expr;
use crate::geometry::Side;
use crate::grid::Grid;
use crate::mhd::{H1, H2, P, V1, V2};
use crate::{Vec6, NU};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Interface data g(t, x2) with derivatives in t (slot 0) and x2 (slot 2).
pub trait BoundaryData: Sync {
    fn g(&self, t: f64, x2: f64) -> [Dual3; 5];
}

/// Interface data from five expressions in (t, x2).
#[derive(Debug, Clone)]
pub struct ExprBoundaryData {
    pub rows: [Expr; 5],
}

impl BoundaryData for ExprBoundaryData {
    fn g(&self, t: f64, x2: f64) -> [Dual3; 5] {
        std::array::from_fn(|k| self.rows[k].eval_dual(t, 0.0, x2))
    }
}

/// Interior source as a function of (side, t, x1, x2).
pub trait SourceFn: Sync {
    fn f(&self, side: Side, t: f64, x1: f64, x2: f64) -> Vec6;
}

/// Interior source from expressions per side and component.
#[derive(Debug, Clone)]
pub struct ExprSource {
    pub plus: [Expr; NU],
    pub minus: [Expr; NU],
}

impl SourceFn for ExprSource {
    fn f(&self, side: Side, t: f64, x1: f64, x2: f64) -> Vec6 {
        let e = match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        };
        std::array::from_fn(|k| e[k].eval(t, x1, x2))
    }
}

/// Jet of the lift at (x1, x2) with decay length `ell`.
///
/// Plus side: p = g1, v1 = -g5, H2 = g4. Minus side: v1 = -g5 - g2,
/// v2 = -g3. All other components vanish.
pub fn lift_jet(side: Side, g: &[Dual3; 5], x1: f64, ell: f64) -> PointJet {
    let mut c = [Dual3::default(); NU];
    match side {
        Side::Plus => {
            c[P] = g[0];
            c[V1] = -g[4];
            c[H2] = g[3];
        }
        Side::Minus => {
            c[V1] = -g[4] - g[1];
            c[V2] = -g[2];
        }
    }
    let e = (-x1 / ell).exp();
    PointJet {
        u: std::array::from_fn(|k| e * c[k].v),
        dt: std::array::from_fn(|k| e * c[k].d[0]),
        d1: std::array::from_fn(|k| -e / ell * c[k].v),
        d2: std::array::from_fn(|k| e * c[k].d[2]),
    }
}

/// The lift sampled on the grid at time t.
pub fn lift_boundary_data(g: &dyn BoundaryData, grid: &Grid, ell: f64, t: f64) -> [Vec<Vec6>; 2] {
    let gs: Vec<[Dual3; 5]> = (0..grid.n2).map(|j| g.g(t, grid.x2(j))).collect();
    let f = |side: Side| -> Vec<Vec6> {
        (0..grid.npts()).map(|k| lift_jet(side, &gs[k % grid.n2], grid.x1(k / grid.n2), ell).u).collect()
    };
    [f(Side::Plus), f(Side::Minus)]
}

/// Source f and interface data g imposed directly.
pub struct DirectForcing<'a> {
    pub grid: Grid,
    pub source: Option<&'a dyn SourceFn>,
    pub data: Option<&'a dyn BoundaryData>,
}

impl Forcing for DirectForcing<'_> {
    fn interior(&self, side: Side, t: f64, i: usize, j: usize) -> Vec6 {
        match self.source {
            Some(s) => s.f(side, t, self.grid.x1(i), self.grid.x2(j)),
            None => [0.0; NU],
        }
    }
    fn boundary(&self, t: f64, j: usize) -> [f64; 5] {
        match self.data {
            Some(d) => d.g(t, self.grid.x2(j)).map(|x| x.v),
            None => [0.0; 5],
        }
    }
    fn is_zero(&self) -> bool {
        self.source.is_none() && self.data.is_none()
    }
}

/// Data of the homogenized problem: F = f - L U~, zero interface data.
pub struct LiftedForcing<'a> {
    pub op: &'a Operator<'a>,
    pub source: Option<&'a dyn SourceFn>,
    pub data: &'a dyn BoundaryData,
    pub ell: f64,
}

impl LiftedForcing<'_> {
    fn jet(&self, side: Side, t: f64, i: usize, j: usize) -> PointJet {
        let g = self.op.grid();
        lift_jet(side, &self.data.g(t, g.x2(j)), g.x1(i), self.ell)
    }

    /// The lift at node (i, j).
    pub fn lift_at(&self, side: Side, t: f64, i: usize, j: usize) -> Vec6 {
        self.jet(side, t, i, j).u
    }
}

impl Forcing for LiftedForcing<'_> {
    fn interior(&self, side: Side, t: f64, i: usize, j: usize) -> Vec6 {
        let g = self.op.grid();
        let f = match self.source {
            Some(s) => s.f(side, t, g.x1(i), g.x2(j)),
            None => [0.0; NU],
        };
        let l = self.op.apply_jet(side, i, j, &self.jet(side, t, i, j));
        std::array::from_fn(|k| f[k] - l[k])
    }
    fn far(&self, side: Side, t: f64, j: usize) -> Vec6 {
        self.jet(side, t, self.op.grid().n1, j).u.map(|x| -x)
    }
    fn far_div(&self, side: Side, t: f64, j: usize) -> f64 {
        let n1 = self.op.grid().n1;
        let pj = self.jet(side, t, n1, j);
        let gp = self.op.basic.geom(side, n1, j);
        let div = pj.d1[H1] - gp.d2psi * pj.d1[H2] + gp.d1phi * pj.d2[H2];
        -div / gp.d1phi
    }
}

/// Discrete ||F||^2 in H^1 of the space-time domain [0, t_final] x both
/// sides: trapezoid in t over `nsample` intervals, SBP quadrature in space,
/// dt F by a centered difference of the closure.
pub fn forcing_h1_norm_sq(op: &Operator, forcing: &dyn Forcing, t_final: f64, nsample: usize) -> f64 {
    let g = op.grid();
    let nsample = nsample.max(1);
    let delta = 1e-5 * t_final.max(1.0);
    let field = |side: Side, t: f64| -> Vec<Vec6> {
        (0..g.npts()).map(|k| forcing.interior(side, t, k / g.n2, k % g.n2)).collect()
    };
    let mut total = 0.0;
    for n in 0..=nsample {
        let t = t_final * n as f64 / nsample as f64;
        let w = if n == 0 || n == nsample { 0.5 } else { 1.0 } * t_final / nsample as f64;
        let mut q = 0.0;
        for side in Side::both() {
            let f0 = field(side, t);
            let fp = field(side, t + delta);
            let fm = field(side, t - delta);
            for i in 0..g.np1() {
                let mut row = 0.0;
                for j in 0..g.n2 {
                    let k = g.idx(i, j);
                    for c in 0..NU {
                        let d1 = if i == 0 {
                            (f0[g.idx(1, j)][c] - f0[k][c]) / g.h1
                        } else if i == g.n1 {
                            (f0[k][c] - f0[g.idx(i - 1, j)][c]) / g.h1
                        } else {
                            (f0[g.idx(i + 1, j)][c] - f0[g.idx(i - 1, j)][c]) / (2.0 * g.h1)
                        };
                        let d2 = (f0[g.idx(i, g.jp(j))][c] - f0[g.idx(i, g.jm(j))][c]) / (2.0 * g.h2);
                        let dt = (fp[k][c] - fm[k][c]) / (2.0 * delta);
                        row += f0[k][c] * f0[k][c] + dt * dt + d1 * d1 + d2 * d2;
                    }
                }
                q += row * g.weight(i);
            }
        }
        total += w * q;
    }
    total
}

/// Surrogate of ||g||^2 in H^{3/2} on [0, t_final] x T: Fourier weights
/// (1 + xi^2)^{3/2} on g and (1 + xi^2)^{1/2} on dt g, trapezoid in t.
pub fn boundary_h32_norm_sq(g: &dyn BoundaryData, n2: usize, x2_len: f64, t_final: f64, nsample: usize) -> f64 {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n2);
    let h = x2_len / n2 as f64;
    let xi = |k: usize| {
        let ks = if k <= n2 / 2 { k as f64 } else { k as f64 - n2 as f64 };
        2.0 * std::f64::consts::PI * ks / x2_len
    };
    let nsample = nsample.max(1);
    let mut total = 0.0;
    for n in 0..=nsample {
        let t = t_final * n as f64 / nsample as f64;
        let w = if n == 0 || n == nsample { 0.5 } else { 1.0 } * t_final / nsample as f64;
        let samples: Vec<[Dual3; 5]> = (0..n2).map(|j| g.g(t, j as f64 * h)).collect();
        let mut q = 0.0;
        for row in 0..5 {
            let mut v: Vec<Complex64> = samples.iter().map(|s| Complex64::new(s[row].v, 0.0)).collect();
            let mut vt: Vec<Complex64> = samples.iter().map(|s| Complex64::new(s[row].d[0], 0.0)).collect();
            fft.process(&mut v);
            fft.process(&mut vt);
            for k in 0..n2 {
                let m = 1.0 + xi(k) * xi(k);
                q += m.powf(1.5) * v[k].norm_sqr() + m.sqrt() * vt[k].norm_sqr();
            }
        }
        total += w * q * h / n2 as f64;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    struct G(f64);
    impl BoundaryData for G {
        fn g(&self, t: f64, x2: f64) -> [Dual3; 5] {
            let s = (Dual3::var(x2, 2).sin()) * Dual3::var(t, 0);
            [s * self.0, s * 2.0, s * -1.0, s * 0.5, s * 3.0]
        }
    }

    #[test]
    fn lift_traces_satisfy_conditions() {
        let gd = G(1.0);
        let ps = 0.0;
        let gv = gd.g(0.7, 1.1);
        let up = lift_jet(Side::Plus, &gv, 0.0, 0.5).u;
        let um = lift_jet(Side::Minus, &gv, 0.0, 0.5).u;
        let g = gv.map(|x| x.v);
        assert!((up[P] - um[P] - g[0]).abs() < 1e-15);
        assert!((up[V1] - um[V1] - g[1]).abs() < 1e-15);
        assert!((up[V2] - um[V2] - g[2]).abs() < 1e-15);
        assert!((ps * (up[H1] - um[H1]) + up[H2] - um[H2] - g[3]).abs() < 1e-15);
        assert!((-(up[V1] - ps * up[V2]) - g[4]).abs() < 1e-15);
    }

    #[test]
    fn zero_data_zero_lift() {
        let grid = Grid::new(8, 8, 2.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        let l = lift_boundary_data(&G(0.0), &grid, 0.5, 0.0);
        assert!(l.iter().all(|s| s.iter().all(|v| v.iter().all(|x| *x == 0.0))));
    }

    #[test]
    fn h32_norm_of_single_mode() {
        // g1 = t sin(x2), others proportional; on [0, 1] with L = 2 pi:
        // ||g1(t)||^2 = pi t^2, weights 2^{3/2} and 2^{1/2}
        struct One;
        impl BoundaryData for One {
            fn g(&self, t: f64, x2: f64) -> [Dual3; 5] {
                let s = Dual3::var(x2, 2).sin() * Dual3::var(t, 0);
                let z = Dual3::constant(0.0);
                [s, z, z, z, z]
            }
        }
        let pi = std::f64::consts::PI;
        let v = boundary_h32_norm_sq(&One, 32, 2.0 * pi, 1.0, 2000);
        let exact = pi * (2f64.powf(1.5) / 3.0 + 2f64.sqrt());
        assert!((v - exact).abs() < 1e-5 * exact, "{v} {exact}");
    }
}
