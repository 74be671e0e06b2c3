//! The variable-coefficient linearized operator and the algebra of its
//! boundary matrix.

use crate::basic_state::{BasicState, PointJet};
use crate::geometry::{GeomPoint, Side};
use crate::mhd::{self, Eos, MhdMatrices, H1, H2, P, V1, V2};
use crate::small::{self, ZERO6};
use crate::{Error, Mat6, Result, Vec6, NU};
use nalgebra::SymmetricEigen;

/// Smallest |d1 Phi| accepted when dividing by it.
pub const MIN_D1PHI: f64 = 0.25;

fn check_d1phi(g: &GeomPoint) -> Result<()> {
    if !(g.d1phi.abs() >= MIN_D1PHI) {
        return Err(Error::Geometry(format!("|d1 Phi| = {} below {MIN_D1PHI}", g.d1phi.abs())));
    }
    Ok(())
}

/// A1~ = (A1 - A0 dtPsi - A2 d2Psi) / d1Phi.
pub fn a1_tilde(u: &Vec6, eos: &Eos, g: &GeomPoint) -> Result<Mat6> {
    check_d1phi(g)?;
    Ok(a1_tilde_from(&mhd::matrices(u, eos), g))
}

pub fn a1_tilde_from(m: &MhdMatrices, g: &GeomPoint) -> Mat6 {
    let mut a = m.a1;
    for i in 0..NU {
        for j in 0..NU {
            a[i][j] = (a[i][j] - m.a0[i][j] * g.dtpsi - m.a2[i][j] * g.d2psi) / g.d1phi;
        }
    }
    a
}

/// Exact sparse form of A1~ on x1 = 0 for a trace with w1 = 0.
pub fn boundary_a1_exact(h1: f64, h2: f64, d2phi: f64, side: Side) -> Mat6 {
    let mut a = ZERO6;
    let s = side.sign();
    let mut put = |i: usize, j: usize, v: f64| {
        a[i][j] = s * v;
        a[j][i] = s * v;
    };
    put(P, V1, 1.0);
    put(P, V2, -d2phi);
    put(V1, H1, h2 * d2phi);
    put(V1, H2, h2);
    put(V2, H1, -h1 * d2phi);
    put(V2, H2, -h1);
    a
}

/// Boundary trace data needed for the change to W variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trace {
    pub h1: f64,
    pub h2: f64,
    pub d2psi: f64,
    pub d1phi: f64,
}

impl Trace {
    pub fn hn(&self) -> f64 {
        self.h1 - self.h2 * self.d2psi
    }
}

/// W = (q, v_N, v2, H_N, H2, S) with q = p + H^.H.
pub fn w_transform(u: &Vec6, tr: &Trace) -> Vec6 {
    [u[P] + tr.h1 * u[H1] + tr.h2 * u[H2], u[V1] - u[V2] * tr.d2psi, u[V2], u[H1] - u[H2] * tr.d2psi, u[H2], u[mhd::S]]
}

/// J with U = J W.
pub fn j_matrix(tr: &Trace) -> Mat6 {
    let mut j = small::identity();
    j[P][H1] = -tr.h1;
    j[P][H2] = -tr.h1 * tr.d2psi - tr.h2;
    j[V1][V2] = tr.d2psi;
    j[H1][H2] = tr.d2psi;
    j
}

/// B1 = J^T A1~ J on the boundary.
pub fn b1_matrix(tr: &Trace) -> Mat6 {
    let mut b = ZERO6;
    let hn = tr.hn();
    let ps = tr.d2psi;
    let a0 = [[1.0, ps], [ps, 1.0 + ps * ps]];
    b[0][1] = 1.0;
    b[1][0] = 1.0;
    for r in 0..2 {
        for c in 0..2 {
            b[1 + r][3 + c] = -hn * a0[r][c];
            b[3 + r][1 + c] = -hn * a0[r][c];
        }
    }
    small::scale(1.0 / tr.d1phi, &b)
}

/// ||J^T A1~ J - B1||_max using the exact boundary form of A1~ on the
/// given side (d1 Phi = +-1 there).
pub fn w_congruence_check(tr: &Trace, side: Side) -> f64 {
    let mut tr = *tr;
    tr.d1phi = side.sign();
    let tr = &tr;
    let a = boundary_a1_exact(tr.h1, tr.h2, tr.d2psi, side);
    let j = j_matrix(tr);
    let c = small::matmul(&small::transpose(&j), &small::matmul(&a, &j));
    small::max_abs(&small::axpy(-1.0, &b1_matrix(tr), &c))
}

/// Inertia (n_pos, n_neg, n_zero) of a symmetric matrix with zero threshold
/// `rel * ||m||_2`.
pub fn inertia(m: &nalgebra::DMatrix<f64>, rel: f64) -> (usize, usize, usize) {
    let e = SymmetricEigen::new(m.clone()).eigenvalues;
    let norm = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let thr = rel * norm;
    let mut r = (0, 0, 0);
    for v in e.iter() {
        if v.abs() < thr || norm == 0.0 {
            r.2 += 1;
        } else if *v > 0.0 {
            r.0 += 1;
        } else {
            r.1 += 1;
        }
    }
    r
}

/// Inertia of B1 on one side.
pub fn boundary_signature(tr: &Trace, side: Side) -> (usize, usize, usize) {
    let mut t = *tr;
    t.d1phi = side.sign() * tr.d1phi.abs();
    let b = b1_matrix(&t);
    inertia(&nalgebra::DMatrix::from_fn(NU, NU, |i, j| b[i][j]), 1e-9)
}

/// Inertia of diag(A1~^+, A1~^-) on the boundary.
pub fn two_sided_signature(plus: &Trace, minus: &Trace) -> (usize, usize, usize) {
    let ap = boundary_a1_exact(plus.h1, plus.h2, plus.d2psi, Side::Plus);
    let am = boundary_a1_exact(minus.h1, minus.h2, minus.d2psi, Side::Minus);
    let m = nalgebra::DMatrix::from_fn(2 * NU, 2 * NU, |i, j| {
        if i < NU && j < NU {
            ap[i][j]
        } else if i >= NU && j >= NU {
            am[i - NU][j - NU]
        } else {
            0.0
        }
    });
    inertia(&m, 1e-9)
}

/// The zero-order matrix C with C Y = (Y.grad A0) dtU + (Y.grad A1~) d1U + (Y.grad A2) d2U.
pub fn c_matrix(pj: &PointJet, g: &GeomPoint, eos: &Eos) -> Result<Mat6> {
    check_d1phi(g)?;
    let mut c = ZERO6;
    for k in 0..NU {
        let mut y = [0.0; NU];
        y[k] = 1.0;
        let col = c_apply_unchecked(pj, g, eos, &y);
        for i in 0..NU {
            c[i][k] = col[i];
        }
    }
    Ok(c)
}

pub fn c_apply(pj: &PointJet, g: &GeomPoint, eos: &Eos, y: &Vec6) -> Result<Vec6> {
    check_d1phi(g)?;
    Ok(c_apply_unchecked(pj, g, eos, y))
}

fn c_apply_unchecked(pj: &PointJet, g: &GeomPoint, eos: &Eos, y: &Vec6) -> Vec6 {
    let d = mhd::matrices_derivative(&pj.u, eos, y);
    let da1t = a1_tilde_from(&d, g);
    let a = small::matvec(&d.a0, &pj.dt);
    let b = small::matvec(&da1t, &pj.d1);
    let c = small::matvec(&d.a2, &pj.d2);
    std::array::from_fn(|i| a[i] + b[i] + c[i])
}

/// U_dot = U - (Psi / d1Phi) d1U^.
pub fn good_unknown(u: &Vec6, psi: f64, basic: &PointJet, g: &GeomPoint) -> Result<Vec6> {
    check_d1phi(g)?;
    let f = psi / g.d1phi;
    Ok(std::array::from_fn(|i| u[i] - f * basic.d1[i]))
}

pub fn good_unknown_inverse(udot: &Vec6, psi: f64, basic: &PointJet, g: &GeomPoint) -> Result<Vec6> {
    check_d1phi(g)?;
    let f = psi / g.d1phi;
    Ok(std::array::from_fn(|i| udot[i] + f * basic.d1[i]))
}

/// Good unknown on every node of one side; `psi` is indexed like the grid.
pub fn good_unknown_field(u: &[Vec6], psi: &[f64], basic: &BasicState, side: Side) -> Result<Vec<Vec6>> {
    let g = &basic.grid;
    let mut out = Vec::with_capacity(u.len());
    for i in 0..g.np1() {
        for j in 0..g.n2 {
            let k = g.idx(i, j);
            out.push(good_unknown(&u[k], psi[k], basic.jet(side, i, j), &basic.geom(side, i, j))?);
        }
    }
    Ok(out)
}

/// The nonlinear operator A0(U) dtU + A1~(U, Psi) d1U + A2(U) d2U at a point.
pub fn nonlinear_operator(u: &PointJet, g: &GeomPoint, eos: &Eos) -> Result<Vec6> {
    check_d1phi(g)?;
    let m = mhd::matrices(&u.u, eos);
    let a1t = a1_tilde_from(&m, g);
    let a = small::matvec(&m.a0, &u.dt);
    let b = small::matvec(&a1t, &u.d1);
    let c = small::matvec(&m.a2, &u.d2);
    Ok(std::array::from_fn(|i| a[i] + b[i] + c[i]))
}

/// L(U^, Psi^) Y + C Y for a perturbation with derivatives in `y`.
pub fn linearized_operator_point(basic: &PointJet, g: &GeomPoint, eos: &Eos, y: &PointJet) -> Result<Vec6> {
    check_d1phi(g)?;
    let m = mhd::matrices(&basic.u, eos);
    let a1t = a1_tilde_from(&m, g);
    let a = small::matvec(&m.a0, &y.dt);
    let b = small::matvec(&a1t, &y.d1);
    let c = small::matvec(&m.a2, &y.d2);
    let z = c_apply_unchecked(basic, g, eos, &y.u);
    Ok(std::array::from_fn(|i| a[i] + b[i] + c[i] + z[i]))
}

/// Perturbation of the lifting: (Psi, dtPsi, d1Psi, d2Psi).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsiJet {
    pub psi: f64,
    pub dt: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Full first variation of the nonlinear operator at (U^, Psi^) in the
/// direction (dU, dPsi), including the transport term in dPsi.
pub fn first_variation(basic: &PointJet, g: &GeomPoint, eos: &Eos, du: &PointJet, dpsi: &PsiJet) -> Result<Vec6> {
    let lin = linearized_operator_point(basic, g, eos, du)?;
    let m = mhd::matrices(&basic.u, eos);
    let a1t = a1_tilde_from(&m, g);
    let mut lpsi = ZERO6;
    for i in 0..NU {
        for j in 0..NU {
            lpsi[i][j] = m.a0[i][j] * dpsi.dt + a1t[i][j] * dpsi.d1 + m.a2[i][j] * dpsi.d2;
        }
    }
    let t = small::matvec(&lpsi, &basic.d1);
    Ok(std::array::from_fn(|i| lin[i] - t[i] / g.d1phi))
}

/// Coefficients of the linearized boundary conditions at one boundary node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCoeffs {
    /// H^ trace on each side.
    pub h_plus: (f64, f64),
    pub h_minus: (f64, f64),
    pub d2phi: f64,
    pub v2_plus: f64,
    /// [d1 p^].
    pub jump_d1p: f64,
    /// [d1 H^_tau].
    pub jump_d1htau: f64,
    /// d1 v^_N on the plus side.
    pub d1vn_plus: f64,
    /// ([d1 v^1], [d1 v^2]); zero for a valid basic state.
    pub jump_d1v: (f64, f64),
}

impl BoundaryCoeffs {
    pub fn from_basic(b: &BasicState, j: usize) -> BoundaryCoeffs {
        let pp = b.jet(Side::Plus, 0, j);
        let pm = b.jet(Side::Minus, 0, j);
        BoundaryCoeffs {
            h_plus: (pp.u[H1], pp.u[H2]),
            h_minus: (pm.u[H1], pm.u[H2]),
            d2phi: b.geom(Side::Plus, 0, j).d2psi,
            v2_plus: pp.u[V2],
            jump_d1p: b.rt_jump(j),
            jump_d1htau: b.htau_normal_jump(j),
            d1vn_plus: b.d1_vn_plus(j),
            jump_d1v: (pp.d1[V1] + pm.d1[V1], pp.d1[V2] + pm.d1[V2]),
        }
    }

    pub fn trace(&self, side: Side) -> Trace {
        let h = match side {
            Side::Plus => self.h_plus,
            Side::Minus => self.h_minus,
        };
        Trace { h1: h.0, h2: h.1, d2psi: self.d2phi, d1phi: side.sign() }
    }
}

/// Front values at one boundary node: phi, d_t phi, d_2 phi.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrontJet {
    pub phi: f64,
    pub dt: f64,
    pub d2: f64,
}

/// Linearized boundary operator minus g. With `with_dv_terms` the velocity
/// rows carry phi [d1 v^], which vanishes for valid basic states.
pub fn bc_residual(
    up: &Vec6,
    um: &Vec6,
    front: &FrontJet,
    c: &BoundaryCoeffs,
    g: &[f64; 5],
    with_dv_terms: bool,
) -> [f64; 5] {
    let ps = c.d2phi;
    let htau = |u: &Vec6| u[H1] * ps + u[H2];
    let vn_p = up[V1] - up[V2] * ps;
    let (dv1, dv2) = if with_dv_terms { c.jump_d1v } else { (0.0, 0.0) };
    [
        up[P] - um[P] + front.phi * c.jump_d1p - g[0],
        up[V1] - um[V1] + front.phi * dv1 - g[1],
        up[V2] - um[V2] + front.phi * dv2 - g[2],
        htau(up) - htau(um) + front.phi * c.jump_d1htau - g[3],
        front.dt + c.v2_plus * front.d2 - vn_p - front.phi * c.d1vn_plus - g[4],
    ]
}

/// -1/2 sum (A1~ U, U) on the boundary in matrix form and in closed form.
pub fn boundary_quadratic_form(up: &Vec6, um: &Vec6, c: &BoundaryCoeffs, tol: f64) -> Result<(f64, f64)> {
    let jv = ((up[V1] - um[V1]).abs()).max((up[V2] - um[V2]).abs());
    if !(jv <= tol) {
        return Err(Error::Precondition(format!("[v] = {jv:e} exceeds {tol:e}")));
    }
    let ap = boundary_a1_exact(c.h_plus.0, c.h_plus.1, c.d2phi, Side::Plus);
    let am = boundary_a1_exact(c.h_minus.0, c.h_minus.1, c.d2phi, Side::Minus);
    let matrix_form = -0.5 * (small::dot(&small::matvec(&ap, up), up) + small::dot(&small::matvec(&am, um), um));
    let ps = c.d2phi;
    let (h1, h2) = c.h_plus;
    let vn = up[V1] - up[V2] * ps;
    let hn = h1 - h2 * ps;
    let jp = up[P] - um[P];
    let jht = (up[H1] - um[H1]) * ps + up[H2] - um[H2];
    let closed = -vn * jp + (hn * up[V2] - h2 * vn) * jht;
    Ok((matrix_form, closed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace() -> Trace {
        Trace { h1: 0.9, h2: -0.4, d2psi: 0.35, d1phi: 1.0 }
    }

    #[test]
    fn exact_form_from_formula() {
        // w1 = 0 at the trace: v1 = dtPsi + v2 d2Psi
        let eos = Eos::default();
        let g = GeomPoint { d1phi: 1.0, d2psi: 0.35, dtpsi: 0.2, ..Default::default() };
        let u = [1.2, 0.2 + 0.5 * 0.35, 0.5, 0.9, -0.4, 0.3];
        let a = a1_tilde(&u, &eos, &g).unwrap();
        let e = boundary_a1_exact(0.9, -0.4, 0.35, Side::Plus);
        assert!(small::max_abs(&small::axpy(-1.0, &e, &a)) < 1e-14);
        assert!(a[0][0].abs() < 1e-15);
    }

    #[test]
    fn congruence_and_inertia() {
        let t = trace();
        assert!(w_congruence_check(&t, Side::Plus) < 1e-14);
        let mut tm = t;
        tm.d1phi = -1.0;
        assert!(w_congruence_check(&tm, Side::Minus) < 1e-14);
        assert_eq!(boundary_signature(&t, Side::Plus), (2, 2, 2));
        assert_eq!(boundary_signature(&t, Side::Minus), (2, 2, 2));
        assert_eq!(two_sided_signature(&t, &tm), (4, 4, 4));
    }

    #[test]
    fn w_roundtrip() {
        let t = trace();
        let u = [0.3, -0.2, 0.7, 0.1, 0.5, -0.9];
        let w = w_transform(&u, &t);
        let back = small::matvec(&j_matrix(&t), &w);
        for k in 0..NU {
            assert!((back[k] - u[k]).abs() < 1e-15);
        }
        let q = w_transform(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0], &Trace { h1: 1.0, h2: 0.0, d2psi: 0.0, d1phi: 1.0 });
        assert_eq!(q[0], 3.0);
    }

    #[test]
    fn c_vanishes_for_constant_state() {
        let pj = PointJet { u: [1.0, 0.1, 0.2, 0.3, 0.4, 0.5], ..Default::default() };
        let g = GeomPoint { d1phi: 1.0, ..Default::default() };
        let c = c_matrix(&pj, &g, &Eos::default()).unwrap();
        assert_eq!(small::max_abs(&c), 0.0);
    }

    #[test]
    fn bc_residual_front_term() {
        let c = BoundaryCoeffs {
            h_plus: (1.0, 0.0),
            h_minus: (1.0, 0.0),
            d2phi: 0.0,
            v2_plus: 0.0,
            jump_d1p: 0.5,
            jump_d1htau: 0.0,
            d1vn_plus: 0.0,
            jump_d1v: (0.0, 0.0),
        };
        let z = [0.0; NU];
        let r = bc_residual(&z, &z, &FrontJet { phi: 1.0, dt: 0.0, d2: 0.0 }, &c, &[0.0; 5], false);
        assert_eq!(r, [0.5, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn geometry_error_on_small_jacobian() {
        let g = GeomPoint { d1phi: 0.1, ..Default::default() };
        assert!(matches!(a1_tilde(&[1.0; 6], &Eos::default(), &g), Err(Error::Geometry(_))));
    }
}
