//! The frozen background (U^+, U^-, phi) around which the problem is
//! linearized, sampled on the grid with exact first derivatives, and its
//! validation against the structural assumptions.

use crate::expr::Expr;
use crate::geometry::{build_lifted_geometry, normal_jump, FrontState, GeomPoint, LiftedGeometry, Side};
use crate::grid::Grid;
use crate::mhd::{check_admissible, Eos, H1, H2, P, V1, V2};
use crate::{Result, Vec6, NU};

/// Value and first derivatives of a basic state at one node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointJet {
    pub u: Vec6,
    pub dt: Vec6,
    pub d1: Vec6,
    pub d2: Vec6,
}

/// Per-side samples, point-major with index `grid.idx(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideField {
    pub jets: Vec<PointJet>,
}

/// Closed-form description of a basic state in lifted coordinates.
#[derive(Debug, Clone)]
pub struct BasicStateExprs {
    pub eos: Eos,
    pub plus: [Expr; NU],
    pub minus: [Expr; NU],
    /// phi(t, x2); x1 must not appear.
    pub phi: Expr,
}

impl BasicStateExprs {
    /// Constant states on both sides with a flat front.
    pub fn constant(plus: Vec6, minus: Vec6, eos: Eos) -> Self {
        BasicStateExprs {
            eos,
            plus: plus.map(Expr::constant),
            minus: minus.map(Expr::constant),
            phi: Expr::constant(0.0),
        }
    }

    pub fn side(&self, side: Side) -> &[Expr; NU] {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// Exact jet of the state at an arbitrary point.
    pub fn jet(&self, side: Side, t: f64, x1: f64, x2: f64) -> PointJet {
        let mut pj = PointJet::default();
        for (k, e) in self.side(side).iter().enumerate() {
            let d = e.eval_dual(t, x1, x2);
            pj.u[k] = d.v;
            pj.dt[k] = d.d[0];
            pj.d1[k] = d.d[1];
            pj.d2[k] = d.d[2];
        }
        pj
    }

    /// Exact lifting derivatives at an arbitrary point.
    pub fn geom(&self, side: Side, t: f64, x1: f64, x2: f64) -> GeomPoint {
        let (c, c1, c2) = crate::geometry::chi_derivs(x1);
        let f = self.phi.eval_dual(t, 0.0, x2);
        let h = 1e-4;
        let f22 = (self.phi.eval_dual(t, 0.0, x2 + h).d[2] - self.phi.eval_dual(t, 0.0, x2 - h).d[2]) / (2.0 * h);
        GeomPoint {
            psi: c * f.v,
            d1phi: side.sign() + c1 * f.v,
            d2psi: c * f.d[2],
            dtpsi: c * f.d[0],
            d11psi: c2 * f.v,
            d12psi: c1 * f.d[2],
            d22psi: c * f22,
        }
    }
}

/// A basic state sampled on the grid at time `t0`.
#[derive(Debug, Clone)]
pub struct BasicState {
    pub grid: Grid,
    pub eos: Eos,
    pub t0: f64,
    pub front: FrontState,
    pub geometry: LiftedGeometry,
    pub sides: [SideField; 2],
}

impl BasicState {
    pub fn from_exprs(ex: &BasicStateExprs, grid: &Grid, t0: f64) -> Result<BasicState> {
        let front = FrontState::from_expr(&ex.phi, grid.n2, grid.x2_len, t0);
        let x1: Vec<f64> = (0..grid.np1()).map(|i| grid.x1(i)).collect();
        let geometry = build_lifted_geometry(&front, &x1)?;
        let sample = |side: Side| SideField {
            jets: (0..grid.npts())
                .map(|k| {
                    let (i, j) = (k / grid.n2, k % grid.n2);
                    ex.jet(side, t0, grid.x1(i), grid.x2(j))
                })
                .collect(),
        };
        Ok(BasicState {
            grid: *grid,
            eos: ex.eos,
            t0,
            front,
            geometry,
            sides: [sample(Side::Plus), sample(Side::Minus)],
        })
    }

    #[inline]
    pub fn jet(&self, side: Side, i: usize, j: usize) -> &PointJet {
        &self.sides[side.index()].jets[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn geom(&self, side: Side, i: usize, j: usize) -> GeomPoint {
        self.geometry.at(side, i, j)
    }

    /// Whether the state is independent of x2 (coefficients can then be
    /// stored per x1 line).
    pub fn is_x2_uniform(&self) -> bool {
        let g = &self.grid;
        if self.front.phi.iter().any(|&f| f != self.front.phi[0]) {
            return false;
        }
        for s in &self.sides {
            for i in 0..g.np1() {
                let a = &s.jets[g.idx(i, 0)];
                for j in 1..g.n2 {
                    if s.jets[g.idx(i, j)] != *a {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Maximum characteristic speed over the grid in the lifted frame, used
    /// for the time step.
    pub fn max_speed(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for side in Side::both() {
            for i in 0..g.np1() {
                for j in 0..g.n2 {
                    let u = &self.jet(side, i, j).u;
                    let gp = self.geom(side, i, j);
                    let c2 = self.eos.c2(u[P], u[crate::mhd::S]);
                    let rho = self.eos.rho(u[P], u[crate::mhd::S]);
                    let a2 = (u[H1] * u[H1] + u[H2] * u[H2]) / rho;
                    let cf = (c2 + a2).sqrt();
                    let v = (u[V1] * u[V1] + u[V2] * u[V2]).sqrt();
                    let stretch = (1.0 + gp.d2psi * gp.d2psi).sqrt() / gp.d1phi.abs();
                    m = m.max((v + cf) * stretch.max(1.0) + gp.dtpsi.abs() / gp.d1phi.abs());
                }
            }
        }
        m
    }

    /// Jump [d1 p] = d1 p^+ + d1 p^- at boundary node j.
    pub fn rt_jump(&self, j: usize) -> f64 {
        normal_jump(self.jet(Side::Plus, 0, j).d1[P], self.jet(Side::Minus, 0, j).d1[P])
    }

    /// Jump [d1 H_tau] at boundary node j.
    pub fn htau_normal_jump(&self, j: usize) -> f64 {
        let f = |side| {
            let pj = self.jet(side, 0, j);
            let g = self.geom(side, 0, j);
            pj.d1[H1] * g.d2psi + pj.u[H1] * g.d12psi + pj.d1[H2]
        };
        normal_jump(f(Side::Plus), f(Side::Minus))
    }

    /// d1 v_N on the plus side at boundary node j.
    pub fn d1_vn_plus(&self, j: usize) -> f64 {
        d1_vn(self.jet(Side::Plus, 0, j), &self.geom(Side::Plus, 0, j))
    }
}

fn d1_vn(pj: &PointJet, g: &GeomPoint) -> f64 {
    pj.d1[V1] - pj.d1[V2] * g.d2psi - pj.u[V2] * g.d12psi
}

/// Residual of the basic-state induction equation at one point.
pub fn induction_residual(pj: &PointJet, g: &GeomPoint) -> [f64; 2] {
    let u = &pj.u;
    let uu = (u[V1] - u[V2] * g.d2psi, u[V2] * g.d1phi);
    let ww = (uu.0 - g.dtpsi, uu.1);
    let hh = (u[H1] - u[H2] * g.d2psi, u[H2] * g.d1phi);
    let div_u = d1_vn(pj, g) + pj.d2[V2] * g.d1phi + u[V2] * g.d12psi;
    let mut r = [0.0; 2];
    for (n, k) in [(0usize, H1), (1, H2)] {
        let adv = ww.0 * pj.d1[k] + ww.1 * pj.d2[k];
        let kv = k - H1 + V1;
        let stretch = hh.0 * pj.d1[kv] + hh.1 * pj.d2[kv];
        r[n] = pj.dt[k] + (adv - stretch + u[k] * div_u) / g.d1phi;
    }
    r
}

/// div h for h = (H_N, H2 d1 Phi).
pub fn div_h(pj: &PointJet, g: &GeomPoint) -> f64 {
    let u = &pj.u;
    let d1hn = pj.d1[H1] - pj.d1[H2] * g.d2psi - u[H2] * g.d12psi;
    let d2h = pj.d2[H2] * g.d1phi + u[H2] * g.d12psi;
    d1hn + d2h
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub max_residual: f64,
    /// (side, i, j) of the worst point, if meaningful.
    pub location: Option<(Side, usize, usize)>,
}

/// Result of checking a basic state against the structural assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Lower bound of rho over the grid.
    pub rho_min: f64,
    /// Lower bound of p over the grid.
    pub p_min: f64,
    /// min |H_N| on the boundary.
    pub kappa_min: f64,
    /// min [d1 p] on the boundary (positive means the stability sign holds).
    pub rt_margin: f64,
    /// max of |U|, |dU| and |phi| seen on the grid.
    pub k_bound: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn rt_stable(&self) -> bool {
        self.rt_margin > 0.0
    }
}

#[derive(Default)]
struct Worst {
    v: f64,
    at: Option<(Side, usize, usize)>,
}

impl Worst {
    fn feed(&mut self, v: f64, at: (Side, usize, usize)) {
        let a = if v.is_finite() { v.abs() } else { f64::INFINITY };
        if a > self.v || self.at.is_none() {
            self.v = self.v.max(a);
            self.at = Some(at);
        }
    }
}

/// Check the basic state. `tol` applies to all residuals; `kappa` is the
/// required lower bound on |H_N| at the boundary.
pub fn validate_basic_state(b: &BasicState, tol: f64, kappa: f64) -> ValidationReport {
    let g = &b.grid;
    let mut rho_min = f64::INFINITY;
    let mut p_min = f64::INFINITY;
    let mut k_bound: f64 = b.front.sup();
    let mut admissible = true;
    let mut induction = Worst::default();
    let mut divh = Worst::default();
    let mut bad_at = None;
    for side in Side::both() {
        for i in 0..g.np1() {
            for j in 0..g.n2 {
                let pj = b.jet(side, i, j);
                let gp = b.geom(side, i, j);
                if check_admissible(&pj.u, &b.eos).is_err() {
                    admissible = false;
                    bad_at.get_or_insert((side, i, j));
                } else {
                    rho_min = rho_min.min(b.eos.rho(pj.u[P], pj.u[crate::mhd::S]));
                }
                p_min = p_min.min(pj.u[P]);
                for v in pj.u.iter().chain(&pj.dt).chain(&pj.d1).chain(&pj.d2) {
                    k_bound = k_bound.max(v.abs());
                }
                let r = induction_residual(pj, &gp);
                induction.feed(r[0].abs().max(r[1].abs()), (side, i, j));
                divh.feed(div_h(pj, &gp), (side, i, j));
            }
        }
    }

    let mut a12 = Worst::default();
    let mut cdass_min = f64::INFINITY;
    let mut cdass_at = None;
    let mut hn_jump = Worst::default();
    let mut avn = Worst::default();
    let mut rt_margin = f64::INFINITY;
    for j in 0..g.n2 {
        let (pp, pm) = (b.jet(Side::Plus, 0, j), b.jet(Side::Minus, 0, j));
        let (gp, gm) = (b.geom(Side::Plus, 0, j), b.geom(Side::Minus, 0, j));
        let htau = |pj: &PointJet, g: &GeomPoint| pj.u[H1] * g.d2psi + pj.u[H2];
        let hn = |pj: &PointJet, g: &GeomPoint| pj.u[H1] - pj.u[H2] * g.d2psi;
        let vn_p = pp.u[V1] - pp.u[V2] * gp.d2psi;
        let res = [
            pp.u[P] - pm.u[P],
            pp.u[V1] - pm.u[V1],
            pp.u[V2] - pm.u[V2],
            htau(pp, &gp) - htau(pm, &gm),
            gp.dtpsi - vn_p,
        ];
        let worst = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a12.feed(worst, (Side::Plus, 0, j));
        for (side, pj, gg) in [(Side::Plus, pp, &gp), (Side::Minus, pm, &gm)] {
            let h = hn(pj, gg).abs();
            if h < cdass_min {
                cdass_min = h;
                cdass_at = Some((side, 0, j));
            }
        }
        hn_jump.feed(hn(pp, &gp) - hn(pm, &gm), (Side::Plus, 0, j));
        avn.feed(normal_jump(d1_vn(pp, &gp), d1_vn(pm, &gm)), (Side::Plus, 0, j));
        rt_margin = rt_margin.min(b.rt_jump(j));
    }

    let sup_phi = b.front.sup();
    let checks = vec![
        Check { name: "a5", passed: admissible, max_residual: rho_min.min(p_min), location: bad_at },
        Check { name: "a12", passed: a12.v <= tol, max_residual: a12.v, location: a12.at },
        Check { name: "cdass", passed: cdass_min >= kappa, max_residual: cdass_min, location: cdass_at },
        Check { name: "b21", passed: induction.v <= tol, max_residual: induction.v, location: induction.at },
        Check {
            name: "b14",
            passed: divh.v <= tol && hn_jump.v <= tol,
            max_residual: divh.v.max(hn_jump.v),
            location: if divh.v >= hn_jump.v { divh.at } else { hn_jump.at },
        },
        Check { name: "avn", passed: avn.v <= tol, max_residual: avn.v, location: avn.at },
        Check { name: "front", passed: sup_phi < 1.0, max_residual: sup_phi, location: None },
    ];
    ValidationReport { checks, rho_min, p_min, kappa_min: cdass_min, rt_margin, k_bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(16, 8, 4.0, 2.0 * std::f64::consts::PI, 0.5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_state_validates() {
        let u = [1.0, 0.0, 0.3, 0.8, 0.2, 0.1];
        let mut m = u;
        m[5] = -0.4;
        let ex = BasicStateExprs::constant(u, m, Eos::default());
        let b = BasicState::from_exprs(&ex, &grid(), 0.0).unwrap();
        let r = validate_basic_state(&b, 1e-8, 1e-3);
        assert!(r.all_passed(), "{r:?}");
        assert!(b.is_x2_uniform());
    }

    #[test]
    fn zero_normal_field_fails_cdass() {
        let u = [1.0, 0.0, 0.3, 0.0, 0.2, 0.1];
        let ex = BasicStateExprs::constant(u, u, Eos::default());
        let b = BasicState::from_exprs(&ex, &grid(), 0.0).unwrap();
        let r = validate_basic_state(&b, 1e-8, 1e-3);
        assert!(!r.check("cdass").unwrap().passed);
    }

    #[test]
    fn velocity_jump_reported() {
        let u = [1.0, 0.0, 0.3, 0.8, 0.2, 0.1];
        let mut m = u;
        m[1] = 0.25;
        let ex = BasicStateExprs::constant(u, m, Eos::default());
        let b = BasicState::from_exprs(&ex, &grid(), 0.0).unwrap();
        let r = validate_basic_state(&b, 1e-8, 1e-3);
        let c = r.check("a12").unwrap();
        assert!(!c.passed);
        assert!((c.max_residual - 0.25).abs() < 1e-15);
    }
}
