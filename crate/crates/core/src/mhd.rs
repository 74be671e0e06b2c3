//! Polytropic ideal MHD in symmetric hyperbolic form for the unknown
//! U = (p, v1, v2, H1, H2, S).

use crate::small::{self, ZERO6};
use crate::{Error, Mat6, Result, Vec6, NU};
use nalgebra::SymmetricEigen;

/// Floor below which pressure or density is treated as vacuum.
pub const ADMISSIBLE_FLOOR: f64 = 1e-12;

/// Component indices.
pub const P: usize = 0;
pub const V1: usize = 1;
pub const V2: usize = 2;
pub const H1: usize = 3;
pub const H2: usize = 4;
pub const S: usize = 5;

pub const COMPONENT_NAMES: [&str; NU] = ["p", "v1", "v2", "H1", "H2", "S"];

/// Equation of state rho = A p^(1/gamma) exp(-S/gamma).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eos {
    pub gamma: f64,
    pub a: f64,
}

impl Default for Eos {
    fn default() -> Self {
        Eos { gamma: 5.0 / 3.0, a: 1.0 }
    }
}

impl Eos {
    pub fn new(gamma: f64, a: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Inadmissible(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Inadmissible(format!("EOS constant A must be positive, got {a}")));
        }
        Ok(Eos { gamma, a })
    }

    #[inline]
    pub fn rho(&self, p: f64, s: f64) -> f64 {
        self.a * p.powf(1.0 / self.gamma) * (-s / self.gamma).exp()
    }

    /// Partial derivatives (d rho/d p, d rho/d S).
    #[inline]
    pub fn drho(&self, p: f64, s: f64) -> (f64, f64) {
        let r = self.rho(p, s);
        (r / (self.gamma * p), -r / self.gamma)
    }

    /// Squared sound speed gamma p / rho.
    #[inline]
    pub fn c2(&self, p: f64, s: f64) -> f64 {
        self.gamma * p / self.rho(p, s)
    }
}

/// A single plasma state together with its equation of state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasmaState {
    pub p: f64,
    pub v1: f64,
    pub v2: f64,
    pub h1: f64,
    pub h2: f64,
    pub s: f64,
    pub eos: Eos,
}

impl PlasmaState {
    pub fn from_vec(u: &Vec6, eos: Eos) -> Self {
        PlasmaState { p: u[P], v1: u[V1], v2: u[V2], h1: u[H1], h2: u[H2], s: u[S], eos }
    }

    pub fn to_vec(&self) -> Vec6 {
        [self.p, self.v1, self.v2, self.h1, self.h2, self.s]
    }

    pub fn rho(&self) -> f64 {
        self.eos.rho(self.p, self.s)
    }

    pub fn c2(&self) -> f64 {
        self.eos.c2(self.p, self.s)
    }

    /// Fails unless every component is finite and p, rho exceed the floor.
    pub fn check_admissible(&self) -> Result<()> {
        check_admissible(&self.to_vec(), &self.eos)
    }
}

pub fn check_admissible(u: &Vec6, eos: &Eos) -> Result<()> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Inadmissible(format!("non-finite component in {u:?}")));
    }
    if u[P] < ADMISSIBLE_FLOOR {
        return Err(Error::Inadmissible(format!("pressure {} below floor", u[P])));
    }
    let rho = eos.rho(u[P], u[S]);
    if !(rho >= ADMISSIBLE_FLOOR) {
        return Err(Error::Inadmissible(format!("density {rho} below floor")));
    }
    Ok(())
}

/// The symmetrizer A0 and the two flux matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhdMatrices {
    pub a0: Mat6,
    pub a1: Mat6,
    pub a2: Mat6,
}

impl MhdMatrices {
    /// n1 A1 + n2 A2.
    pub fn normal(&self, n: (f64, f64)) -> Mat6 {
        small::add(&small::scale(n.0, &self.a1), &small::scale(n.1, &self.a2))
    }
}

/// Assemble A0, A1, A2 after checking admissibility.
pub fn assemble(state: &PlasmaState) -> Result<MhdMatrices> {
    state.check_admissible()?;
    Ok(matrices(&state.to_vec(), &state.eos))
}

/// Diagonal of A0.
#[inline]
pub fn a0_diag(u: &Vec6, eos: &Eos) -> Vec6 {
    let rho = eos.rho(u[P], u[S]);
    [1.0 / (eos.gamma * u[P]), rho, rho, 1.0, 1.0, 1.0]
}

/// Unchecked assembly for hot loops.
pub fn matrices(u: &Vec6, eos: &Eos) -> MhdMatrices {
    let [p, v1, v2, h1, h2, _] = *u;
    let rho = eos.rho(p, u[S]);
    let gp = eos.gamma * p;

    let mut a0 = ZERO6;
    for (i, d) in a0_diag(u, eos).iter().enumerate() {
        a0[i][i] = *d;
    }

    let mut a1 = ZERO6;
    a1[P][P] = v1 / gp;
    a1[P][V1] = 1.0;
    a1[V1][P] = 1.0;
    a1[V1][V1] = rho * v1;
    a1[V1][H2] = h2;
    a1[V2][V2] = rho * v1;
    a1[V2][H2] = -h1;
    a1[H1][H1] = v1;
    a1[H2][V1] = h2;
    a1[H2][V2] = -h1;
    a1[H2][H2] = v1;
    a1[S][S] = v1;

    let mut a2 = ZERO6;
    a2[P][P] = v2 / gp;
    a2[P][V2] = 1.0;
    a2[V1][V1] = rho * v2;
    a2[V1][H1] = -h2;
    a2[V2][P] = 1.0;
    a2[V2][V2] = rho * v2;
    a2[V2][H1] = h1;
    a2[H1][V1] = -h2;
    a2[H1][V2] = h1;
    a2[H1][H1] = v2;
    a2[H2][H2] = v2;
    a2[S][S] = v2;

    MhdMatrices { a0, a1, a2 }
}

/// Directional derivatives (Y . grad_U) A0, A1, A2 at u.
pub fn matrices_derivative(u: &Vec6, eos: &Eos, y: &Vec6) -> MhdMatrices {
    let [p, v1, v2, _, _, s] = *u;
    let rho = eos.rho(p, s);
    let (rp, rs) = eos.drho(p, s);
    let drho = rp * y[P] + rs * y[S];
    let g = eos.gamma;
    let dinv = -y[P] / (g * p * p);

    let mut d0 = ZERO6;
    d0[P][P] = dinv;
    d0[V1][V1] = drho;
    d0[V2][V2] = drho;

    let mut d1 = ZERO6;
    d1[P][P] = y[V1] / (g * p) + v1 * dinv;
    d1[V1][V1] = drho * v1 + rho * y[V1];
    d1[V1][H2] = y[H2];
    d1[V2][V2] = drho * v1 + rho * y[V1];
    d1[V2][H2] = -y[H1];
    d1[H1][H1] = y[V1];
    d1[H2][V1] = y[H2];
    d1[H2][V2] = -y[H1];
    d1[H2][H2] = y[V1];
    d1[S][S] = y[V1];

    let mut d2 = ZERO6;
    d2[P][P] = y[V2] / (g * p) + v2 * dinv;
    d2[V1][V1] = drho * v2 + rho * y[V2];
    d2[V1][H1] = -y[H2];
    d2[V2][V2] = drho * v2 + rho * y[V2];
    d2[V2][H1] = y[H1];
    d2[H1][V1] = -y[H2];
    d2[H1][V2] = y[H1];
    d2[H1][H1] = y[V2];
    d2[H2][H2] = y[V2];
    d2[S][S] = y[V2];

    MhdMatrices { a0: d0, a1: d1, a2: d2 }
}

/// Generalized eigenvalues of (n . A, A0), sorted ascending.
///
/// Computed on the symmetric matrix A0^{-1/2} (n . A) A0^{-1/2}.
pub fn characteristic_speeds(state: &PlasmaState, n: (f64, f64)) -> Result<Vec6> {
    let m = assemble(state)?;
    let nn = (n.0 * n.0 + n.1 * n.1).sqrt();
    if !(nn > 0.0) || !nn.is_finite() {
        return Err(Error::Precondition("normal vector must be nonzero".into()));
    }
    let na = m.normal((n.0 / nn, n.1 / nn));
    let s: Vec6 = std::array::from_fn(|i| 1.0 / m.a0[i][i].sqrt());
    let mut sym = ZERO6;
    for i in 0..NU {
        for j in 0..NU {
            sym[i][j] = s[i] * na[i][j] * s[j];
        }
    }
    let eig = SymmetricEigen::new(small::to_na(&sym));
    let mut out: Vec6 = std::array::from_fn(|i| eig.eigenvalues[i]);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Residuals of the contact conditions across a front x1 = phi(t, x2).
///
/// Jumps are right (plus, x1 > phi) minus left (minus) values.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactJumpReport {
    pub jump_p: f64,
    pub jump_v: (f64, f64),
    pub jump_h: (f64, f64),
    pub jump_s: f64,
    pub jump_rho: f64,
    /// d_t phi - v_N on the right side.
    pub kinematic: f64,
    /// Mass flux rho (v_N - d_t phi) on the right side.
    pub mass_flux: f64,
    /// H_N = H . (1, -d2 phi) on the right side.
    pub hn: f64,
    pub satisfies_contact: bool,
    pub violations: Vec<String>,
}

/// Check [p] = 0, [v] = 0, [H] = 0, d_t phi = v_N and H_N != 0.
pub fn contact_jump_report(
    left: &PlasmaState,
    right: &PlasmaState,
    front_slope: f64,
    front_speed: f64,
    tol: f64,
) -> ContactJumpReport {
    let mut violations = Vec::new();
    for (name, st) in [("left", left), ("right", right)] {
        if let Err(e) = st.check_admissible() {
            violations.push(format!("{name} state: {e}"));
        }
    }
    let jump_p = right.p - left.p;
    let jump_v = (right.v1 - left.v1, right.v2 - left.v2);
    let jump_h = (right.h1 - left.h1, right.h2 - left.h2);
    let vn = right.v1 - right.v2 * front_slope;
    let hn = right.h1 - right.h2 * front_slope;
    let kinematic = front_speed - vn;
    let rho_r = right.rho();
    let mass_flux = rho_r * (vn - front_speed);
    for (name, v) in [
        ("[p]", jump_p),
        ("[v1]", jump_v.0),
        ("[v2]", jump_v.1),
        ("[H1]", jump_h.0),
        ("[H2]", jump_h.1),
        ("d_t phi - v_N", kinematic),
    ] {
        if !(v.abs() <= tol) {
            violations.push(format!("{name} = {v:e}"));
        }
    }
    if !(hn.abs() > tol) {
        violations.push(format!("H_N = {hn:e} vanishes"));
    }
    ContactJumpReport {
        jump_p,
        jump_v,
        jump_h,
        jump_s: right.s - left.s,
        jump_rho: rho_r - left.rho(),
        kinematic,
        mass_flux,
        hn,
        satisfies_contact: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st() -> PlasmaState {
        PlasmaState { p: 1.3, v1: 0.2, v2: -0.4, h1: 0.7, h2: 0.3, s: 0.1, eos: Eos::default() }
    }

    #[test]
    fn documented_entries() {
        let m = assemble(&st()).unwrap();
        assert_eq!(m.a1[1][4], 0.3);
        assert_eq!(m.a1[2][4], -0.7);
        assert_eq!(m.a1[3][3], 0.2);
        assert_eq!(m.a2[2][3], 0.7);
        assert_eq!(m.a2[1][3], -0.3);
    }

    #[test]
    fn symmetric() {
        let m = assemble(&st()).unwrap();
        for a in [m.a0, m.a1, m.a2] {
            assert_eq!(a, small::transpose(&a));
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let s = st();
        let u = s.to_vec();
        let y = [0.3, -0.2, 0.5, 0.1, -0.7, 0.4];
        let d = matrices_derivative(&u, &s.eos, &y);
        let h = 1e-6;
        let up: Vec6 = std::array::from_fn(|i| u[i] + h * y[i]);
        let um: Vec6 = std::array::from_fn(|i| u[i] - h * y[i]);
        let mp = matrices(&up, &s.eos);
        let mm = matrices(&um, &s.eos);
        for (da, (ap, am)) in [(d.a0, (mp.a0, mm.a0)), (d.a1, (mp.a1, mm.a1)), (d.a2, (mp.a2, mm.a2))] {
            for i in 0..6 {
                for j in 0..6 {
                    let fd = (ap[i][j] - am[i][j]) / (2.0 * h);
                    assert!((fd - da[i][j]).abs() < 1e-8, "{i} {j}");
                }
            }
        }
    }

    #[test]
    fn rejects_vacuum() {
        let mut s = st();
        s.p = 0.0;
        assert!(matches!(assemble(&s), Err(Error::Inadmissible(_))));
        s.p = f64::NAN;
        assert!(assemble(&s).is_err());
    }

    #[test]
    fn speeds_at_rest_include_zeros() {
        let mut s = st();
        s.v1 = 0.0;
        s.v2 = 0.0;
        let l = characteristic_speeds(&s, (1.0, 0.0)).unwrap();
        assert!(l[2].abs() < 1e-12 && l[3].abs() < 1e-12);
        assert!((l[0] + l[5]).abs() < 1e-12);
    }

    #[test]
    fn contact_report_flags_jumps() {
        let mut a = st();
        a.v1 = 0.0;
        let mut b = a;
        b.s = 0.7;
        let r = contact_jump_report(&a, &b, 0.0, 0.0, 1e-12);
        assert!(r.satisfies_contact);
        assert!(r.jump_rho != 0.0 && r.mass_flux == 0.0);
        b.p = 1.5;
        assert!(!contact_jump_report(&a, &b, 0.0, 0.0, 1e-12).satisfies_contact);
        let mut c = a;
        c.h1 = 0.0;
        let mut d = c;
        d.s = 0.2;
        assert!(!contact_jump_report(&c, &d, 0.0, 0.0, 1e-12).satisfies_contact);
    }
}
