//! Front representation and the lifting that flattens it.
//!
//! The front x1 = phi(t, x2) is mapped to x1 = 0 by
//! Phi^{+-}(t, x) = +-x1 + Psi^{+-}(t, x), Psi^{+-} = chi(+-x1) phi(t, x2),
//! with both sides living on x1 > 0 after the change of variables.

use crate::expr::Expr;
use crate::grid::{periodic_d4, periodic_dd4};
use crate::{Error, Result};

const CHI_A: f64 = 0.6;
const CHI_INNER: f64 = 1.0;
const CHI_OUTER: f64 = 4.0;

/// Logistic step s(t) on [0, 1] built from exp(-a/t), with s' and s''.
fn step_derivs(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let a = CHI_A;
    let u = 1.0 - t;
    let q = a / t - a / u;
    let q1 = -a / (t * t) - a / (u * u);
    let q2 = 2.0 * a / (t * t * t) - 2.0 * a / (u * u * u);
    // s = 1 / (1 + e^q), s(1-s) = e^{-|q|} / (1 + e^{-|q|})^2
    let e = (-q.abs()).exp();
    let s = if q > 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + e) };
    let ss = e / ((1.0 + e) * (1.0 + e));
    let s1 = -ss * q1;
    let s2 = -s1 * (1.0 - 2.0 * s) * q1 - ss * q2;
    (s, s1, s2)
}

/// The cutoff chi with its first two derivatives.
///
/// chi is even, equal to 1 on [-1, 1], vanishes outside [-4, 4] and
/// satisfies max |chi'| < 1/2.
pub fn chi_derivs(x: f64) -> (f64, f64, f64) {
    let ax = x.abs();
    if ax <= CHI_INNER {
        return (1.0, 0.0, 0.0);
    }
    if ax >= CHI_OUTER {
        return (0.0, 0.0, 0.0);
    }
    let w = CHI_OUTER - CHI_INNER;
    let (s, s1, s2) = step_derivs((ax - CHI_INNER) / w);
    let sg = x.signum();
    (1.0 - s, -sg * s1 / w, -s2 / (w * w))
}

pub fn chi(x: f64) -> f64 {
    chi_derivs(x).0
}

/// Which side of the front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn both() -> [Side; 2] {
        [Side::Plus, Side::Minus]
    }

    pub fn index(self) -> usize {
        match self {
            Side::Plus => 0,
            Side::Minus => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

/// Front position sampled on the periodic x2 grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontState {
    pub x2_len: f64,
    pub phi: Vec<f64>,
    /// Exact d phi/d x2 if known; otherwise fourth-order differences are used.
    pub dphi_dx2: Option<Vec<f64>>,
    /// d phi/d t (zero if absent).
    pub dphi_dt: Option<Vec<f64>>,
}

impl FrontState {
    pub fn flat(n2: usize, x2_len: f64) -> FrontState {
        FrontState { x2_len, phi: vec![0.0; n2], dphi_dx2: Some(vec![0.0; n2]), dphi_dt: Some(vec![0.0; n2]) }
    }

    pub fn from_values(phi: Vec<f64>, x2_len: f64) -> FrontState {
        FrontState { x2_len, phi, dphi_dx2: None, dphi_dt: None }
    }

    /// Sample a closed-form front phi(t, x2) (x1 is ignored) at time t.
    pub fn from_expr(e: &Expr, n2: usize, x2_len: f64, t: f64) -> FrontState {
        let h = x2_len / n2 as f64;
        let mut phi = Vec::with_capacity(n2);
        let mut d2 = Vec::with_capacity(n2);
        let mut dt = Vec::with_capacity(n2);
        for j in 0..n2 {
            let d = e.eval_dual(t, 0.0, j as f64 * h);
            phi.push(d.v);
            dt.push(d.d[0]);
            d2.push(d.d[2]);
        }
        FrontState { x2_len, phi, dphi_dx2: Some(d2), dphi_dt: Some(dt) }
    }

    pub fn n2(&self) -> usize {
        self.phi.len()
    }

    pub fn sup(&self) -> f64 {
        self.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Derivatives of the lifting at one node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeomPoint {
    pub psi: f64,
    /// d1 Phi = +-1 + d1 Psi.
    pub d1phi: f64,
    pub d2psi: f64,
    pub dtpsi: f64,
    pub d11psi: f64,
    pub d12psi: f64,
    pub d22psi: f64,
}

/// The lifted geometry on a tensor grid for both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedGeometry {
    pub x1: Vec<f64>,
    /// (chi, chi', chi'') at x1 nodes.
    pub chi: Vec<(f64, f64, f64)>,
    pub phi: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phi22: Vec<f64>,
    pub phit: Vec<f64>,
}

impl LiftedGeometry {
    pub fn n2(&self) -> usize {
        self.phi.len()
    }

    /// Geometry at node (i, j) on the given side.
    pub fn at(&self, side: Side, i: usize, j: usize) -> GeomPoint {
        let sg = side.sign();
        // chi(+-x1) = chi(x1) since chi is even; d/dx1 chi(+-x1) = chi'(x1)
        let (c, c1, c2) = self.chi[i];
        let f = self.phi[j];
        GeomPoint {
            psi: c * f,
            d1phi: sg + c1 * f,
            d2psi: c * self.phi2[j],
            dtpsi: c * self.phit[j],
            d11psi: c2 * f,
            d12psi: c1 * self.phi2[j],
            d22psi: c * self.phi22[j],
        }
    }

    /// Smallest |d1 Phi| over the grid.
    pub fn min_abs_d1phi(&self) -> f64 {
        let mut m = f64::INFINITY;
        for &(_, c1, _) in &self.chi {
            for &f in &self.phi {
                m = m.min((1.0 + c1 * f).abs()).min((-1.0 + c1 * f).abs());
            }
        }
        m
    }
}

/// Build the lifting on x1 nodes `x1` for the given front.
///
/// Fails if sup |phi| >= 1 or |d1 Phi| < 1/2 somewhere.
pub fn build_lifted_geometry(front: &FrontState, x1: &[f64]) -> Result<LiftedGeometry> {
    let n2 = front.n2();
    if n2 < 5 {
        return Err(Error::Geometry(format!("front needs at least 5 samples, got {n2}")));
    }
    if front.phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Geometry("front contains non-finite values".into()));
    }
    let sup = front.sup();
    if sup >= 1.0 {
        return Err(Error::Geometry(format!("sup |phi| = {sup} must be below 1")));
    }
    let h = front.x2_len / n2 as f64;
    let phi2 = match &front.dphi_dx2 {
        Some(d) if d.len() == n2 => d.clone(),
        _ => periodic_d4(&front.phi, h),
    };
    let phi22 = match &front.dphi_dx2 {
        Some(d) if d.len() == n2 => periodic_d4(d, h),
        _ => periodic_dd4(&front.phi, h),
    };
    let phit = match &front.dphi_dt {
        Some(d) if d.len() == n2 => d.clone(),
        _ => vec![0.0; n2],
    };
    let g = LiftedGeometry {
        x1: x1.to_vec(),
        chi: x1.iter().map(|&x| chi_derivs(x)).collect(),
        phi: front.phi.clone(),
        phi2,
        phi22,
        phit,
    };
    let m = g.min_abs_d1phi();
    if m < 0.5 {
        return Err(Error::Geometry(format!("|d1 Phi| drops to {m} < 1/2")));
    }
    Ok(g)
}

/// (v_N, H_N, H_tau) from Cartesian v, H and d2 Psi.
pub fn normal_tangential(v: (f64, f64), h: (f64, f64), d2psi: f64) -> (f64, f64, f64) {
    (v.0 - v.1 * d2psi, h.0 - h.1 * d2psi, h.0 * d2psi + h.1)
}

/// Jump of a normal derivative across the front in lifted coordinates.
///
/// The minus side is parametrized by -x1, so the jump is the sum
/// d1 a^+ + d1 a^- of the one-sided lifted derivatives.
pub fn normal_jump(d1_plus: f64, d1_minus: f64) -> f64 {
    d1_plus + d1_minus
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(-0.5), 1.0);
        assert_eq!(chi(4.0), 0.0);
        assert_eq!(chi(-7.0), 0.0);
        let mut maxd = 0.0f64;
        for k in 0..=60000 {
            let x = -4.5 + 9.0 * k as f64 / 60000.0;
            let (c, d, _) = chi_derivs(x);
            assert!((0.0..=1.0).contains(&c));
            assert!((chi(x) - chi(-x)).abs() < 1e-15);
            maxd = maxd.max(d.abs());
        }
        assert!(maxd < 0.5, "{maxd}");
    }

    #[test]
    fn cutoff_derivatives() {
        let h = 1e-5;
        for &x in &[1.3, 2.0, 2.5, 3.1, 3.9, -2.2, -1.05] {
            let (_, d, dd) = chi_derivs(x);
            let fd = (chi(x + h) - chi(x - h)) / (2.0 * h);
            let fdd = (chi_derivs(x + h).1 - chi_derivs(x - h).1) / (2.0 * h);
            assert!((fd - d).abs() < 1e-8, "{x}");
            assert!((fdd - dd).abs() < 1e-7, "{x}");
        }
    }

    #[test]
    fn lifting_rejects_large_front() {
        let x1: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let f = FrontState::from_values(vec![1.0; 16], 1.0);
        assert!(matches!(build_lifted_geometry(&f, &x1), Err(Error::Geometry(_))));
        let f = FrontState::from_values(vec![0.3; 16], 1.0);
        let g = build_lifted_geometry(&f, &x1).unwrap();
        assert!(g.min_abs_d1phi() >= 0.5);
        let p = g.at(Side::Plus, 0, 3);
        assert_eq!(p.psi, 0.3);
        assert_eq!(p.d1phi, 1.0);
        assert_eq!(g.at(Side::Minus, 0, 3).d1phi, -1.0);
    }

    #[test]
    fn flat_front_is_identity() {
        let x1: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let g = build_lifted_geometry(&FrontState::flat(8, 1.0), &x1).unwrap();
        for i in 0..10 {
            for j in 0..8 {
                let p = g.at(Side::Plus, i, j);
                assert_eq!((p.psi, p.d1phi, p.d2psi, p.dtpsi), (0.0, 1.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn jump_convention() {
        assert_eq!(normal_jump(0.25, 0.25), 0.5);
        let (vn, hn, ht) = normal_tangential((1.0, 2.0), (3.0, 4.0), 0.5);
        assert_eq!((vn, hn, ht), (0.0, 1.0, 5.5));
    }
}
