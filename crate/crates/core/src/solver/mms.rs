//! Manufactured solutions: a prescribed smooth (U^+-, phi) defines the
//! source, interface data and far-field data that make it exact.

use super::{Forcing, Operator, Snapshot};
use crate::basic_state::PointJet;
use crate::dual::Dual3;
use crate::expr::Expr;
use crate::geometry::Side;
use crate::linearization::{bc_residual, FrontJet};
use crate::mhd::{H1, H2, S};
use crate::spectral::NeutralMode;
use crate::{Vec6, NU};
use num_complex::Complex64 as C64;

/// A smooth exact solution with first derivatives.
pub trait ExactSolution: Sync {
    fn u(&self, side: Side, t: f64, x1: f64, x2: f64) -> [Dual3; NU];
    fn phi(&self, t: f64, x2: f64) -> Dual3;
}

/// Exact solution given by expressions.
#[derive(Debug, Clone)]
pub struct ExprExact {
    pub plus: [Expr; NU],
    pub minus: [Expr; NU],
    pub phi: Expr,
}

impl ExactSolution for ExprExact {
    fn u(&self, side: Side, t: f64, x1: f64, x2: f64) -> [Dual3; NU] {
        let e = match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        };
        std::array::from_fn(|k| e[k].eval_dual(t, x1, x2))
    }
    fn phi(&self, t: f64, x2: f64) -> Dual3 {
        self.phi.eval_dual(t, 0.0, x2)
    }
}

fn to_jet(d: &[Dual3; NU]) -> PointJet {
    PointJet {
        u: std::array::from_fn(|k| d[k].v),
        dt: std::array::from_fn(|k| d[k].d[0]),
        d1: std::array::from_fn(|k| d[k].d[1]),
        d2: std::array::from_fn(|k| d[k].d[2]),
    }
}

/// Data generated by an exact solution on the operator's grid.
pub struct Manufactured<'a> {
    pub op: &'a Operator<'a>,
    pub exact: &'a dyn ExactSolution,
}

impl Manufactured<'_> {
    fn jet(&self, side: Side, t: f64, i: usize, j: usize) -> PointJet {
        let g = self.op.grid();
        to_jet(&self.exact.u(side, t, g.x1(i), g.x2(j)))
    }

    /// f7 / d1 Phi of the exact solution at a node.
    fn exact_a(&self, side: Side, t: f64, i: usize, j: usize) -> f64 {
        let pj = self.jet(side, t, i, j);
        let gp = self.op.basic.geom(side, i, j);
        (pj.d1[H1] - gp.d2psi * pj.d1[H2] + gp.d1phi * pj.d2[H2]) / gp.d1phi
    }

    /// Exact state on the grid at time t, with f7 = div h_dot.
    pub fn snapshot(&self, t: f64) -> Snapshot {
        let g = self.op.grid();
        let mut s = Snapshot::zeros(g);
        s.t = t;
        for side in Side::both() {
            for k in 0..g.npts() {
                let (i, j) = (k / g.n2, k % g.n2);
                s.u[side.index()][k] = self.jet(side, t, i, j).u;
                s.f7[side.index()][k] = self.exact_a(side, t, i, j) * self.op.d1phi(side, i, j);
            }
        }
        for j in 0..g.n2 {
            s.phi[j] = self.exact.phi(t, g.x2(j)).v;
        }
        s
    }

    /// Quadrature of |U - U_exact|^2 over both sides plus |phi - phi_exact|^2
    /// on the x2 grid.
    pub fn error_sq(&self, snap: &Snapshot) -> f64 {
        let g = self.op.grid();
        let ex = self.snapshot(snap.t);
        let mut e = 0.0;
        for s in 0..2 {
            for i in 0..g.np1() {
                let mut row = 0.0;
                for j in 0..g.n2 {
                    let k = g.idx(i, j);
                    for c in 0..NU {
                        let d = snap.u[s][k][c] - ex.u[s][k][c];
                        row += d * d;
                    }
                }
                e += row * g.weight(i);
            }
        }
        for j in 0..g.n2 {
            let d = snap.phi[j] - ex.phi[j];
            e += d * d * g.h2;
        }
        e
    }
}

impl Forcing for Manufactured<'_> {
    fn interior(&self, side: Side, t: f64, i: usize, j: usize) -> Vec6 {
        self.op.apply_jet(side, i, j, &self.jet(side, t, i, j))
    }
    fn boundary(&self, t: f64, j: usize) -> [f64; 5] {
        let up = self.jet(Side::Plus, t, 0, j).u;
        let um = self.jet(Side::Minus, t, 0, j).u;
        let f = self.exact.phi(t, self.op.grid().x2(j));
        let front = FrontJet { phi: f.v, dt: f.d[0], d2: f.d[2] };
        bc_residual(&up, &um, &front, &self.op.boundary_coeffs(j), &[0.0; 5], false)
    }
    fn far(&self, side: Side, t: f64, j: usize) -> Vec6 {
        self.jet(side, t, self.op.grid().n1, j).u
    }
    fn far_div(&self, side: Side, t: f64, j: usize) -> f64 {
        self.exact_a(side, t, self.op.grid().n1, j)
    }
}

/// The neutral S/front mode as an exact solution of the constant-coefficient
/// problem (no x1 dependence).
#[derive(Debug, Clone, Copy)]
pub struct NeutralExact(pub NeutralMode);

impl NeutralExact {
    fn jet(&self, amp: f64, t: f64, x2: f64) -> Dual3 {
        let m = &self.0;
        let ph = (m.s * t + C64::new(0.0, m.omega * x2)).exp() * amp;
        let dt = m.s * ph;
        let d2 = C64::new(0.0, m.omega) * ph;
        Dual3 { v: ph.re, d: [dt.re, 0.0, d2.re] }
    }
}

impl ExactSolution for NeutralExact {
    fn u(&self, side: Side, t: f64, _x1: f64, x2: f64) -> [Dual3; NU] {
        let amp = match side {
            Side::Plus => self.0.s_plus,
            Side::Minus => self.0.s_minus,
        };
        let mut u = [Dual3::from(0.0); NU];
        u[S] = self.jet(amp, t, x2);
        u
    }
    fn phi(&self, t: f64, x2: f64) -> Dual3 {
        self.jet(self.0.phi, t, x2)
    }
}
