//! Energy functionals and the divergence defect of a snapshot.

use super::{Forcing, Operator, Snapshot};
use crate::geometry::Side;
use crate::mhd::{H1, H2};
use crate::small;
use crate::NU;

/// Discrete energy quantities at one time level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub t: f64,
    /// ||U||^2 + ||dt U||^2 + ||d2 U||^2 on the plus side.
    pub i_plus: f64,
    pub i_minus: f64,
    /// I^+ + I^- + ||phi||^2 + ||d2 phi||^2.
    pub j: f64,
    /// -1/2 sum over sides of the boundary integral of (A1~ U, U).
    pub q_boundary: f64,
    /// ||div h_dot - f7|| per side.
    pub div_defect_plus: f64,
    pub div_defect_minus: f64,
    pub phi_l2: f64,
    pub phi_d2_l2: f64,
}

impl EnergyReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            self.t,
            self.i_plus,
            self.i_minus,
            self.j,
            self.q_boundary,
            self.div_defect_plus,
            self.div_defect_minus,
            self.phi_l2,
            self.phi_d2_l2
        )
    }
}

/// (||phi||, ||d2 phi||) on the periodic grid.
pub fn phi_norms(phi: &[f64], h2: f64) -> (f64, f64) {
    let n = phi.len();
    let mut a = 0.0;
    let mut b = 0.0;
    for j in 0..n {
        a += phi[j] * phi[j];
        let d = (phi[(j + 1) % n] - phi[(j + n - 1) % n]) / (2.0 * h2);
        b += d * d;
    }
    ((a * h2).sqrt(), (b * h2).sqrt())
}

/// Sum over both sides of the quadrature of (A0 U, U).
pub fn a0_energy(op: &Operator, snap: &Snapshot) -> f64 {
    let g = op.grid();
    let mut e = 0.0;
    for side in Side::both() {
        for i in 0..g.np1() {
            let mut row = 0.0;
            for j in 0..g.n2 {
                let a0 = op.a0(side, i, j);
                let u = &snap.u[side.index()][g.idx(i, j)];
                row += (0..NU).map(|k| a0[k] * u[k] * u[k]).sum::<f64>();
            }
            e += row * g.weight(i);
        }
    }
    e
}

/// ||div h_dot - f7|| on one side.
pub fn div_defect(op: &Operator, snap: &Snapshot, side: Side) -> f64 {
    let g = op.grid();
    let s = side.index();
    let d = op.div_of(side, &snap.u[s], |v| (v[H1], v[H2]));
    let mut acc = 0.0;
    for i in 0..g.np1() {
        let mut row = 0.0;
        for j in 0..g.n2 {
            let k = g.idx(i, j);
            let e = d[k] - snap.f7[s][k];
            row += e * e;
        }
        acc += row * g.weight(i);
    }
    acc.sqrt()
}

/// Energy report of a snapshot; dt U is taken from the semi-discrete
/// right-hand side with the given data.
pub fn energy_report(op: &Operator, snap: &Snapshot, forcing: &dyn Forcing) -> EnergyReport {
    let g = op.grid();
    let mut dt = snap.clone();
    op.rhs(snap, forcing, &mut dt);
    let mut i_side = [0.0; 2];
    for side in Side::both() {
        let s = side.index();
        let u = &snap.u[s];
        let ut = &dt.u[s];
        let mut acc = 0.0;
        for i in 0..g.np1() {
            let mut row = 0.0;
            for j in 0..g.n2 {
                let k = g.idx(i, j);
                let up = &u[g.idx(i, g.jp(j))];
                let um = &u[g.idx(i, g.jm(j))];
                for q in 0..NU {
                    let d2 = (up[q] - um[q]) / (2.0 * g.h2);
                    row += u[k][q] * u[k][q] + ut[k][q] * ut[k][q] + d2 * d2;
                }
            }
            acc += row * g.weight(i);
        }
        i_side[s] = acc;
    }
    let mut q = 0.0;
    for j in 0..g.n2 {
        for side in Side::both() {
            let u = &snap.u[side.index()][g.idx(0, j)];
            let a = op.a1_tilde(side, 0, j);
            q += -0.5 * small::dot(&small::matvec(&a, u), u) * g.h2;
        }
    }
    let (pl, pd) = phi_norms(&snap.phi, g.h2);
    EnergyReport {
        t: snap.t,
        i_plus: i_side[0],
        i_minus: i_side[1],
        j: i_side[0] + i_side[1] + pl * pl + pd * pd,
        q_boundary: q,
        div_defect_plus: div_defect(op, snap, Side::Plus),
        div_defect_minus: div_defect(op, snap, Side::Minus),
        phi_l2: pl,
        phi_d2_l2: pd,
    }
}
