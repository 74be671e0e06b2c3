//! Finite-difference integration of the regularized linear problem
//!
//! A0 dt U + (A1~ - eps I) d1 U + A2 d2 U + C U = f   on x1 > 0, both sides,
//!
//! with the five interface conditions at x1 = 0 and the front equation.
//! Space: SBP 2-1 operator in x1, periodic central differences in x2, the
//! interface conditions imposed weakly (SAT) so that the semi-discrete
//! energy mirrors the continuous one; characteristic penalty at x1 = X1.
//! Time: classical RK4.

mod adjoint;
mod energy;
mod lift;
mod mms;
mod output;
mod sweep;

pub use adjoint::{boundary_term, discrete_adjoint_check, inner, random_field, AdjointReport, Support};
pub use energy::{a0_energy, div_defect, energy_report, phi_norms, EnergyReport};
pub use lift::{
    boundary_h32_norm_sq, forcing_h1_norm_sq, lift_boundary_data, lift_jet, BoundaryData, DirectForcing,
    ExprBoundaryData, ExprSource, LiftedForcing, SourceFn,
};
pub use mms::{ExactSolution, ExprExact, Manufactured, NeutralExact};
pub use output::{write_series_csv, write_snapshot, SERIES_HEADER};
pub use sweep::{eps_sweep, SweepRow, SweepTable};

use crate::basic_state::{BasicState, PointJet};
use crate::geometry::Side;
use crate::grid::Grid;
use crate::linearization::{a1_tilde_from, c_matrix, BoundaryCoeffs};
use crate::mhd::{self, H1, H2, P, V1, V2};
use crate::small::{self, ZERO6};
use crate::{Error, Mat6, Result, Vec6, NU};
use nalgebra::SymmetricEigen;
use rayon::prelude::*;

/// Default strength of the dissipative interface penalty.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Solver state at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// U_dot on each side, indexed by `grid.idx(i, j)`.
    pub u: [Vec<Vec6>; 2],
    /// Front perturbation on the x2 grid.
    pub phi: Vec<f64>,
    /// Companion divergence fields f7 on each side.
    pub f7: [Vec<f64>; 2],
}

impl Snapshot {
    pub fn zeros(grid: &Grid) -> Snapshot {
        let n = grid.npts();
        Snapshot {
            t: 0.0,
            u: [vec![[0.0; NU]; n], vec![[0.0; NU]; n]],
            phi: vec![0.0; grid.n2],
            f7: [vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|s| s.iter().all(|v| v.iter().all(|x| x.is_finite())))
            && self.phi.iter().all(|x| x.is_finite())
            && self.f7.iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// self = y + a k (t is left untouched).
    fn set_axpy(&mut self, y: &Snapshot, a: f64, k: &Snapshot) {
        for s in 0..2 {
            self.u[s].par_iter_mut().zip(&y.u[s]).zip(&k.u[s]).for_each(|((o, y), k)| {
                for c in 0..NU {
                    o[c] = y[c] + a * k[c];
                }
            });
            for ((o, y), k) in self.f7[s].iter_mut().zip(&y.f7[s]).zip(&k.f7[s]) {
                *o = y + a * k;
            }
        }
        for ((o, y), k) in self.phi.iter_mut().zip(&y.phi).zip(&k.phi) {
            *o = y + a * k;
        }
    }

    /// self += a k.
    fn add_scaled(&mut self, a: f64, k: &Snapshot) {
        for s in 0..2 {
            self.u[s].par_iter_mut().zip(&k.u[s]).for_each(|(o, k)| {
                for c in 0..NU {
                    o[c] += a * k[c];
                }
            });
            for (o, k) in self.f7[s].iter_mut().zip(&k.f7[s]) {
                *o += a * k;
            }
        }
        for (o, k) in self.phi.iter_mut().zip(&k.phi) {
            *o += a * k;
        }
    }

    /// Largest absolute entry of U, phi and f7.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for s in 0..2 {
            for v in &self.u[s] {
                for x in v {
                    m = m.max(x.abs());
                }
            }
            for x in &self.f7[s] {
                m = m.max(x.abs());
            }
        }
        self.phi.iter().fold(m, |m, x| m.max(x.abs()))
    }
}

/// Data of the linear problem: interior source, interface data g, and the
/// exterior state at the far boundary.
pub trait Forcing: Sync {
    /// Source f at node (i, j) of `side`.
    fn interior(&self, _side: Side, _t: f64, _i: usize, _j: usize) -> Vec6 {
        [0.0; NU]
    }
    /// (g1, ..., g5) at boundary node j.
    fn boundary(&self, _t: f64, _j: usize) -> [f64; 5] {
        [0.0; 5]
    }
    /// Exterior state imposed on incoming characteristics at x1 = X1.
    fn far(&self, _side: Side, _t: f64, _j: usize) -> Vec6 {
        [0.0; NU]
    }
    /// Exterior value of f7 / d1 Phi at x1 = X1.
    fn far_div(&self, _side: Side, _t: f64, _j: usize) -> f64 {
        0.0
    }
    /// True if every method returns zero, which lets the solver skip work.
    fn is_zero(&self) -> bool {
        false
    }
}

/// Homogeneous data.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoForcing;

impl Forcing for NoForcing {
    fn is_zero(&self) -> bool {
        true
    }
}

/// alpha f1 + beta f2.
pub struct Combined<'a> {
    pub alpha: f64,
    pub f1: &'a dyn Forcing,
    pub beta: f64,
    pub f2: &'a dyn Forcing,
}

impl Forcing for Combined<'_> {
    fn interior(&self, side: Side, t: f64, i: usize, j: usize) -> Vec6 {
        let a = self.f1.interior(side, t, i, j);
        let b = self.f2.interior(side, t, i, j);
        std::array::from_fn(|k| self.alpha * a[k] + self.beta * b[k])
    }
    fn boundary(&self, t: f64, j: usize) -> [f64; 5] {
        let a = self.f1.boundary(t, j);
        let b = self.f2.boundary(t, j);
        std::array::from_fn(|k| self.alpha * a[k] + self.beta * b[k])
    }
    fn far(&self, side: Side, t: f64, j: usize) -> Vec6 {
        let a = self.f1.far(side, t, j);
        let b = self.f2.far(side, t, j);
        std::array::from_fn(|k| self.alpha * a[k] + self.beta * b[k])
    }
    fn far_div(&self, side: Side, t: f64, j: usize) -> f64 {
        self.alpha * self.f1.far_div(side, t, j) + self.beta * self.f2.far_div(side, t, j)
    }
}

/// Frozen coefficients at one node (unscaled by A0).
#[derive(Debug, Clone, Copy)]
struct NodeCoeffs {
    a0: Vec6,
    a0inv: Vec6,
    /// A1~ - eps I.
    a: Mat6,
    b: Mat6,
    c: Mat6,
    /// Transport of f7 / d1 Phi: speed in x1, speed in x2, zero-order rate.
    tc1: f64,
    tc2: f64,
    tk: f64,
    d1phi: f64,
    d2psi: f64,
}

/// Interface coefficients at boundary node j.
#[derive(Debug, Clone, Copy)]
struct InterfaceCoeffs {
    bc: BoundaryCoeffs,
}

/// Options of the discrete operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub eps: f64,
    /// Interface penalty on the residuals of the four jump conditions.
    pub alpha: f64,
    /// Integrate the divergence companion fields.
    pub monitor_divergence: bool,
}

impl SolverOptions {
    pub fn new(eps: f64) -> SolverOptions {
        SolverOptions { eps, alpha: DEFAULT_ALPHA, monitor_divergence: true }
    }
}

/// The semi-discrete operator around a frozen basic state.
pub struct Operator<'a> {
    pub basic: &'a BasicState,
    pub opts: SolverOptions,
    per_line: bool,
    nodes: [Vec<NodeCoeffs>; 2],
    iface: Vec<InterfaceCoeffs>,
    /// Negative part of A1~ - eps I at x1 = X1, per side and j.
    far_neg: [Vec<Mat6>; 2],
}

impl<'a> Operator<'a> {
    pub fn new(basic: &'a BasicState, opts: SolverOptions) -> Result<Operator<'a>> {
        if !(opts.eps >= 0.0) || !opts.eps.is_finite() {
            return Err(Error::Precondition(format!("eps must be non-negative, got {}", opts.eps)));
        }
        if !(opts.alpha >= 0.0) {
            return Err(Error::Precondition("interface penalty must be non-negative".into()));
        }
        let g = &basic.grid;
        let per_line = basic.is_x2_uniform();
        let ncols = if per_line { 1 } else { g.n2 };
        let mut nodes: [Vec<NodeCoeffs>; 2] = [Vec::new(), Vec::new()];
        for side in Side::both() {
            let v: Result<Vec<NodeCoeffs>> = (0..g.np1() * ncols)
                .into_par_iter()
                .map(|k| {
                    let (i, j) = (k / ncols, k % ncols);
                    node_coeffs(basic, side, i, j, opts.eps)
                })
                .collect();
            nodes[side.index()] = v?;
        }
        let iface = (0..g.n2).map(|j| InterfaceCoeffs { bc: BoundaryCoeffs::from_basic(basic, j) }).collect();
        let mut far_neg: [Vec<Mat6>; 2] = [Vec::new(), Vec::new()];
        for side in Side::both() {
            far_neg[side.index()] = (0..g.n2)
                .map(|j| {
                    let k = if per_line { g.n1 } else { g.idx(g.n1, j) };
                    negative_part(&nodes[side.index()][k].a)
                })
                .collect();
        }
        Ok(Operator { basic, opts, per_line, nodes, iface, far_neg })
    }

    pub fn grid(&self) -> &Grid {
        &self.basic.grid
    }

    #[inline]
    fn node(&self, side: Side, i: usize, j: usize) -> &NodeCoeffs {
        let k = if self.per_line { i } else { self.basic.grid.idx(i, j) };
        &self.nodes[side.index()][k]
    }

    /// A0 diagonal at a node.
    pub fn a0(&self, side: Side, i: usize, j: usize) -> Vec6 {
        self.node(side, i, j).a0
    }

    /// A1~ (without the eps shift) at a node.
    pub fn a1_tilde(&self, side: Side, i: usize, j: usize) -> Mat6 {
        let mut a = self.node(side, i, j).a;
        for (k, row) in a.iter_mut().enumerate() {
            row[k] += self.opts.eps;
        }
        a
    }

    /// True if the zero-order matrix C vanishes everywhere.
    pub fn zero_order_free(&self) -> bool {
        self.nodes.iter().all(|v| v.iter().all(|n| small::max_abs(&n.c) == 0.0))
    }

    /// Interface coefficients at boundary node j.
    pub fn boundary_coeffs(&self, j: usize) -> BoundaryCoeffs {
        self.iface[j].bc
    }

    /// d1 Phi^ at a node.
    pub fn d1phi(&self, side: Side, i: usize, j: usize) -> f64 {
        self.node(side, i, j).d1phi
    }

    /// The continuous operator applied to a jet:
    /// A0 dtU + (A1~ - eps) d1U + A2 d2U + C U at node (i, j).
    pub fn apply_jet(&self, side: Side, i: usize, j: usize, y: &PointJet) -> Vec6 {
        let n = self.node(side, i, j);
        let a = small::matvec(&n.a, &y.d1);
        let b = small::matvec(&n.b, &y.d2);
        let c = small::matvec(&n.c, &y.u);
        std::array::from_fn(|k| n.a0[k] * y.dt[k] + a[k] + b[k] + c[k])
    }

    /// Discrete d1 (SBP) and d2 (central) of a side field at (i, j).
    #[inline]
    fn derivs(&self, u: &[Vec6], i: usize, j: usize) -> (Vec6, Vec6) {
        let g = &self.basic.grid;
        let (n1, h1, h2) = (g.n1, g.h1, g.h2);
        let at = |i: usize, j: usize| &u[g.idx(i, j)];
        let d1 = if i == 0 {
            sub_scaled(at(1, j), at(0, j), 1.0 / h1)
        } else if i == n1 {
            sub_scaled(at(n1, j), at(n1 - 1, j), 1.0 / h1)
        } else {
            sub_scaled(at(i + 1, j), at(i - 1, j), 0.5 / h1)
        };
        let d2 = sub_scaled(at(i, g.jp(j)), at(i, g.jm(j)), 0.5 / h2);
        (d1, d2)
    }

    /// Spatial operator without penalties and sources:
    /// (A1~ - eps) D1 U + A2 D2 U + C U on both sides.
    pub fn interior_apply(&self, u: &[Vec<Vec6>; 2]) -> [Vec<Vec6>; 2] {
        let g = &self.basic.grid;
        let f = |side: Side| -> Vec<Vec6> {
            let us = &u[side.index()];
            (0..g.npts())
                .into_par_iter()
                .map(|k| {
                    let (i, j) = (k / g.n2, k % g.n2);
                    let n = self.node(side, i, j);
                    let (d1, d2) = self.derivs(us, i, j);
                    let a = small::matvec(&n.a, &d1);
                    let b = small::matvec(&n.b, &d2);
                    let c = small::matvec(&n.c, &us[k]);
                    std::array::from_fn(|q| a[q] + b[q] + c[q])
                })
                .collect()
        };
        [f(Side::Plus), f(Side::Minus)]
    }

    /// Residuals (r1, r2, r3, r4) of the jump conditions at boundary node j.
    pub fn interface_residuals(&self, snap: &Snapshot, g: &[f64; 5], j: usize) -> [f64; 4] {
        let grid = &self.basic.grid;
        let c = &self.iface[j].bc;
        let up = &snap.u[0][grid.idx(0, j)];
        let um = &snap.u[1][grid.idx(0, j)];
        let ps = c.d2phi;
        let phi = snap.phi[j];
        [
            up[P] - um[P] + phi * c.jump_d1p - g[0],
            up[V1] - um[V1] - g[1],
            up[V2] - um[V2] - g[2],
            ps * (up[H1] - um[H1]) + up[H2] - um[H2] + phi * c.jump_d1htau - g[3],
        ]
    }

    /// Interface penalty vectors (tau^+, tau^-) at boundary node j.
    fn interface_penalty(&self, snap: &Snapshot, g: &[f64; 5], j: usize) -> (Vec6, Vec6) {
        let c = &self.iface[j].bc;
        let [r1, r2, r3, r4] = self.interface_residuals(snap, g, j);
        let ps = c.d2phi;
        let (h1, h2) = c.h_plus;
        let m = h2 * r2 - h1 * r3;
        let tau = [
            -0.5 * (r2 - ps * r3),
            -0.5 * r1 - 0.5 * h2 * r4,
            0.5 * ps * r1 + 0.5 * h1 * r4,
            -0.5 * ps * m,
            -0.5 * m,
            0.0,
        ];
        let al = self.opts.alpha;
        let d = [al * r1, al * r2, al * r3, al * ps * r4, al * r4, 0.0];
        (std::array::from_fn(|k| tau[k] - d[k]), std::array::from_fn(|k| tau[k] + d[k]))
    }

    /// Time derivative of the state.
    pub fn rhs(&self, snap: &Snapshot, forcing: &dyn Forcing, out: &mut Snapshot) {
        let g = &self.basic.grid;
        let t = snap.t;
        let zero = forcing.is_zero();
        let bdata: Vec<[f64; 5]> = (0..g.n2).map(|j| if zero { [0.0; 5] } else { forcing.boundary(t, j) }).collect();
        let pens: Vec<(Vec6, Vec6)> = (0..g.n2).map(|j| self.interface_penalty(snap, &bdata[j], j)).collect();
        let sat0 = 2.0 / g.h1;

        // sources are needed as whole fields for the divergence companion
        let src: Option<[Vec<Vec6>; 2]> = if zero {
            None
        } else {
            let f = |side: Side| -> Vec<Vec6> {
                (0..g.npts()).into_par_iter().map(|k| forcing.interior(side, t, k / g.n2, k % g.n2)).collect()
            };
            Some([f(Side::Plus), f(Side::Minus)])
        };

        for side in Side::both() {
            let s = side.index();
            let us = &snap.u[s];
            let far: Vec<Vec6> = (0..g.n2).map(|j| if zero { [0.0; NU] } else { forcing.far(side, t, j) }).collect();
            let src_s = src.as_ref().map(|f| &f[s]);
            out.u[s].par_chunks_mut(g.n2).enumerate().for_each(|(i, row)| {
                for (j, o) in row.iter_mut().enumerate() {
                    let k = g.idx(i, j);
                    let n = self.node(side, i, j);
                    let (d1, d2) = self.derivs(us, i, j);
                    let a = small::matvec(&n.a, &d1);
                    let b = small::matvec(&n.b, &d2);
                    let c = small::matvec(&n.c, &us[k]);
                    let mut r: Vec6 = std::array::from_fn(|q| -a[q] - b[q] - c[q]);
                    if let Some(f) = src_s {
                        for q in 0..NU {
                            r[q] += f[k][q];
                        }
                    }
                    if i == 0 {
                        let tau = if s == 0 { &pens[j].0 } else { &pens[j].1 };
                        for q in 0..NU {
                            r[q] += sat0 * tau[q];
                        }
                    }
                    if i == g.n1 {
                        let diff: Vec6 = std::array::from_fn(|q| us[k][q] - far[j][q]);
                        let p = small::matvec(&self.far_neg[s][j], &diff);
                        for q in 0..NU {
                            r[q] += sat0 * p[q];
                        }
                    }
                    *o = std::array::from_fn(|q| n.a0inv[q] * r[q]);
                }
            });

            if self.opts.monitor_divergence {
                self.divergence_rhs(side, snap, src_s, &bdata, forcing, zero, &mut out.f7[s]);
            } else {
                out.f7[s].iter_mut().for_each(|x| *x = 0.0);
            }
        }

        // front
        for j in 0..g.n2 {
            let c = &self.iface[j].bc;
            let up = &snap.u[0][g.idx(0, j)];
            let um = &snap.u[1][g.idx(0, j)];
            let ps = c.d2phi;
            let avg = 0.5 * (up[V1] - ps * up[V2] + um[V1] - ps * um[V2]);
            let gd = &bdata[j];
            let adv = upwind3_at(&snap.phi, g.h2, j, c.v2_plus);
            out.phi[j] = -c.v2_plus * adv + avg + 0.5 * (gd[1] - ps * gd[2]) + snap.phi[j] * c.d1vn_plus + gd[4];
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn divergence_rhs(
        &self,
        side: Side,
        snap: &Snapshot,
        src: Option<&Vec<Vec6>>,
        _bdata: &[[f64; 5]],
        forcing: &dyn Forcing,
        zero: bool,
        out: &mut [f64],
    ) {
        let g = &self.basic.grid;
        let s = side.index();
        let a: Vec<f64> = (0..g.npts()).map(|k| snap.f7[s][k] / self.node(side, k / g.n2, k % g.n2).d1phi).collect();
        let source = src.map(|f| self.div_of(side, f, |v| (v[H1], v[H2])));
        let sat0 = 2.0 / g.h1;
        out.par_chunks_mut(g.n2).enumerate().for_each(|(i, row)| {
            for (j, o) in row.iter_mut().enumerate() {
                let k = g.idx(i, j);
                let n = self.node(side, i, j);
                let d1 = sbp_scalar(&a, g, i, j);
                let d2 = (a[g.idx(i, g.jp(j))] - a[g.idx(i, g.jm(j))]) / (2.0 * g.h2);
                let mut r = -n.tc1 * d1 - n.tc2 * d2 - n.tk * a[k];
                if let Some(sv) = &source {
                    r += sv[k] / n.d1phi;
                }
                if i == 0 && n.tc1 > 0.0 {
                    r -= sat0 * n.tc1 * a[k];
                }
                if i == g.n1 && n.tc1 < 0.0 {
                    let ext = if zero { 0.0 } else { forcing.far_div(side, snap.t, j) };
                    r += sat0 * n.tc1 * (a[k] - ext);
                }
                *o = r * n.d1phi;
            }
        });
    }

    /// Discrete div of h = (X_N, X2 d1 Phi) for X = `pick`(field).
    pub fn div_of(&self, side: Side, field: &[Vec6], pick: impl Fn(&Vec6) -> (f64, f64) + Sync) -> Vec<f64> {
        let g = &self.basic.grid;
        let hn: Vec<f64> = (0..g.npts())
            .map(|k| {
                let n = self.node(side, k / g.n2, k % g.n2);
                let (x1, x2) = pick(&field[k]);
                x1 - x2 * n.d2psi
            })
            .collect();
        let h2: Vec<f64> =
            (0..g.npts()).map(|k| pick(&field[k]).1 * self.node(side, k / g.n2, k % g.n2).d1phi).collect();
        (0..g.npts())
            .map(|k| {
                let (i, j) = (k / g.n2, k % g.n2);
                sbp_scalar(&hn, g, i, j) + (h2[g.idx(i, g.jp(j))] - h2[g.idx(i, g.jm(j))]) / (2.0 * g.h2)
            })
            .collect()
    }

    /// Set f7 to div h_dot of the current state.
    pub fn init_divergence(&self, snap: &mut Snapshot) {
        for side in Side::both() {
            snap.f7[side.index()] = self.div_of(side, &snap.u[side.index()], |v| (v[H1], v[H2]));
        }
    }

    /// One RK4 step of size `dt`; fails with a blow-up error if the new
    /// state is not finite.
    pub fn step_dt(&self, snap: &mut Snapshot, forcing: &dyn Forcing, dt: f64, work: &mut Work) -> Result<()> {
        let t0 = snap.t;
        let Work { k, y, acc } = work;
        acc.t = t0 + dt;
        self.rhs(snap, forcing, k);
        acc.set_axpy(snap, dt / 6.0, k);
        y.set_axpy(snap, 0.5 * dt, k);
        y.t = t0 + 0.5 * dt;
        self.rhs(y, forcing, k);
        acc.add_scaled(dt / 3.0, k);
        y.set_axpy(snap, 0.5 * dt, k);
        self.rhs(y, forcing, k);
        acc.add_scaled(dt / 3.0, k);
        y.set_axpy(snap, dt, k);
        y.t = t0 + dt;
        self.rhs(y, forcing, k);
        acc.add_scaled(dt / 6.0, k);
        std::mem::swap(snap, acc);
        if !snap.is_finite() {
            return Err(Error::BlowUp { t: snap.t, msg: "non-finite state".into() });
        }
        Ok(())
    }

    /// One step with the grid time step.
    pub fn step(&self, snap: &mut Snapshot, forcing: &dyn Forcing, work: &mut Work) -> Result<()> {
        self.step_dt(snap, forcing, self.basic.grid.dt, work)
    }

    /// Advance `steps` steps, calling `observe` after every `every`-th step
    /// (and once at the start). On blow-up the error is returned together
    /// with everything observed so far through `observe`.
    pub fn run(
        &self,
        snap: &mut Snapshot,
        forcing: &dyn Forcing,
        steps: usize,
        every: usize,
        mut observe: impl FnMut(&Snapshot),
    ) -> Result<()> {
        let mut work = Work::new(&self.basic.grid);
        let every = every.max(1);
        observe(snap);
        for n in 1..=steps {
            self.step(snap, forcing, &mut work)?;
            if n % every == 0 || n == steps {
                observe(snap);
            }
        }
        Ok(())
    }
}

/// One time step of the regularized problem around `basic` (convenience
/// wrapper; repeated stepping should reuse an [`Operator`]).
pub fn step(snap: &Snapshot, basic: &BasicState, eps: f64, sources: &dyn Forcing) -> Result<Snapshot> {
    let op = Operator::new(basic, SolverOptions::new(eps))?;
    let mut s = snap.clone();
    op.step(&mut s, sources, &mut Work::new(&basic.grid))?;
    Ok(s)
}

/// Source and interface data of a run. With `lift_ell` set, the interface
/// data are removed by a lift and the solver integrates the homogenized
/// problem.
#[derive(Clone, Copy, Default)]
pub struct ProblemData<'a> {
    pub source: Option<&'a dyn SourceFn>,
    pub boundary: Option<&'a dyn BoundaryData>,
    pub lift_ell: Option<f64>,
}

impl<'a> ProblemData<'a> {
    pub fn forcing<'b>(&'b self, op: &'b Operator<'b>) -> Box<dyn Forcing + 'b>
    where
        'a: 'b,
    {
        match (self.boundary, self.lift_ell) {
            (Some(b), Some(ell)) => Box::new(LiftedForcing { op, source: self.source, data: b, ell }),
            _ => Box::new(DirectForcing { grid: op.basic.grid, source: self.source, data: self.boundary }),
        }
    }
}

/// Scratch storage for the time stepper.
pub struct Work {
    k: Snapshot,
    y: Snapshot,
    acc: Snapshot,
}

impl Work {
    pub fn new(grid: &Grid) -> Work {
        Work { k: Snapshot::zeros(grid), y: Snapshot::zeros(grid), acc: Snapshot::zeros(grid) }
    }
}

#[inline]
fn sub_scaled(a: &Vec6, b: &Vec6, s: f64) -> Vec6 {
    std::array::from_fn(|q| (a[q] - b[q]) * s)
}

#[inline]
fn sbp_scalar(a: &[f64], g: &Grid, i: usize, j: usize) -> f64 {
    let at = |i: usize| a[g.idx(i, j)];
    if i == 0 {
        (at(1) - at(0)) / g.h1
    } else if i == g.n1 {
        (at(g.n1) - at(g.n1 - 1)) / g.h1
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * g.h1)
    }
}

/// Third-order upwind-biased d/dx2 at node j for transport speed `a`.
pub fn upwind3_at(v: &[f64], h: f64, j: usize, a: f64) -> f64 {
    let n = v.len() as isize;
    let f = |k: isize| v[((j as isize + k).rem_euclid(n)) as usize];
    if a >= 0.0 {
        (2.0 * f(1) + 3.0 * f(0) - 6.0 * f(-1) + f(-2)) / (6.0 * h)
    } else {
        (-f(2) + 6.0 * f(1) - 3.0 * f(0) - 2.0 * f(-1)) / (6.0 * h)
    }
}

fn negative_part(a: &Mat6) -> Mat6 {
    let e = SymmetricEigen::new(small::to_na(a));
    let mut m = ZERO6;
    for k in 0..NU {
        let l = e.eigenvalues[k].min(0.0);
        if l == 0.0 {
            continue;
        }
        let v = e.eigenvectors.column(k);
        for r in 0..NU {
            for c in 0..NU {
                m[r][c] += l * v[r] * v[c];
            }
        }
    }
    m
}

fn node_coeffs(b: &BasicState, side: Side, i: usize, j: usize, eps: f64) -> Result<NodeCoeffs> {
    let pj = b.jet(side, i, j);
    let gp = b.geom(side, i, j);
    mhd::check_admissible(&pj.u, &b.eos)?;
    let m = mhd::matrices(&pj.u, &b.eos);
    let mut a = a1_tilde_from(&m, &gp);
    for (k, row) in a.iter_mut().enumerate() {
        row[k] -= eps;
    }
    let c = c_matrix(pj, &gp, &b.eos)?;
    let a0: Vec6 = std::array::from_fn(|k| m.a0[k][k]);
    let u = &pj.u;
    let w1 = u[V1] - u[V2] * gp.d2psi - gp.dtpsi;
    let d1vn = pj.d1[V1] - pj.d1[V2] * gp.d2psi - u[V2] * gp.d12psi;
    let div_u = d1vn + pj.d2[V2] * gp.d1phi + u[V2] * gp.d12psi;
    Ok(NodeCoeffs {
        a0,
        a0inv: a0.map(|x| 1.0 / x),
        a,
        b: m.a2,
        c,
        tc1: w1 / gp.d1phi - eps,
        tc2: u[V2],
        tk: (div_u - eps * gp.d11psi) / gp.d1phi,
        d1phi: gp.d1phi,
        d2psi: gp.d2psi,
    })
}
