//! Normal-mode analysis of the planar contact discontinuity with constant
//! coefficients: dispersion roots, decaying modes, the Lopatinski
//! determinant, the neutral mode and the boundary conditions of the dual
//! regularized problem.
//!
//! Modes are U = r exp(s t + i omega x2 + lambda x1) on x1 > 0 for both
//! sides, so the pencil on the side with sign sigma is
//! (s A0 + sigma lambda A1 + i omega A2) r = 0.

use crate::geometry::Side;
use crate::mhd::{self, Eos, MhdMatrices, PlasmaState, H1, H2, P, S, V1, V2};
use crate::{Error, Result, Vec6, NU};
use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Laplace-Fourier frequency (s = eta + i xi, omega).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceFourierPoint {
    pub s: C64,
    pub omega: f64,
}

impl LaplaceFourierPoint {
    pub fn new(eta: f64, xi: f64, omega: f64) -> Self {
        LaplaceFourierPoint { s: C64::new(eta, xi), omega }
    }
}

/// Constant states of a planar contact discontinuity at rest in x1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactData {
    pub eos: Eos,
    pub plus: Vec6,
    pub minus: Vec6,
}

impl ContactData {
    /// Checks admissibility, v1 = 0, [p] = [v] = [H] = 0 and H1 != 0.
    pub fn new(plus: Vec6, minus: Vec6, eos: Eos) -> Result<ContactData> {
        mhd::check_admissible(&plus, &eos)?;
        mhd::check_admissible(&minus, &eos)?;
        let tol = 1e-12;
        if plus[V1].abs() > tol || minus[V1].abs() > tol {
            return Err(Error::Precondition("normal velocity v1 must vanish".into()));
        }
        for k in [P, V1, V2, H1, H2] {
            if (plus[k] - minus[k]).abs() > tol * (1.0 + plus[k].abs()) {
                return Err(Error::Precondition(format!(
                    "component {} jumps across the contact",
                    mhd::COMPONENT_NAMES[k]
                )));
            }
        }
        if plus[H1].abs() <= tol {
            return Err(Error::Precondition("normal magnetic field H1 must not vanish".into()));
        }
        Ok(ContactData { eos, plus, minus })
    }

    pub fn state(&self, side: Side) -> &Vec6 {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    fn matrices(&self, side: Side) -> MhdMatrices {
        mhd::matrices(self.state(side), &self.eos)
    }

    /// Same contact seen from a frame moving with speed `u` along x2, and
    /// the frequency at which the same physical mode is observed.
    pub fn frame_shift(&self, pt: &LaplaceFourierPoint, u: f64) -> (ContactData, LaplaceFourierPoint) {
        let mut d = *self;
        d.plus[V2] -= u;
        d.minus[V2] -= u;
        let s = pt.s + I * pt.omega * u;
        (d, LaplaceFourierPoint { s, omega: pt.omega })
    }

    /// tau = s + i omega v2, the advected frequency.
    pub fn tau(&self, pt: &LaplaceFourierPoint) -> C64 {
        pt.s + I * pt.omega * self.plus[V2]
    }
}

/// Finite roots of the dispersion pencil on one side.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRoots {
    pub finite: Vec<C64>,
    /// Number of infinite eigenvalues (rank deficiency of A1).
    pub n_infinite: usize,
}

/// Reduced first-order system lambda r = M r for r = (p, v1, v2, H2), with
/// H1 = k . r and S = 0 recovered algebraically.
struct Reduced {
    m: DMatrix<C64>,
    k: [C64; 4],
}

const RED: [usize; 4] = [P, V1, V2, H2];

fn reduced(data: &ContactData, pt: &LaplaceFourierPoint, side: Side) -> Result<Reduced> {
    let tau = data.tau(pt);
    let scale = tau.norm() + pt.omega.abs();
    if !(scale > 0.0) {
        return Err(Error::Degenerate("(s, omega) = (0, 0)".into()));
    }
    if tau.norm() <= 1e-12 * scale {
        return Err(Error::Degenerate("s + i omega v2 = 0 (neutral mode frequency)".into()));
    }
    let u = data.state(side);
    let m = data.matrices(side);
    let sig = side.sign();
    // H1 row: s H1 + i omega (A2 row H1) . U = 0
    let h1c = -I * pt.omega / tau;
    let k = [C64::new(0.0, 0.0), h1c * (-u[H2]), h1c * u[H1], C64::new(0.0, 0.0)];
    let kmat = DMatrix::from_fn(4, 4, |a, b| {
        let (i, j) = (RED[a], RED[b]);
        let base = pt.s * m.a0[i][j] + I * pt.omega * m.a2[i][j];
        base + I * pt.omega * m.a2[i][H1] * k[b]
    });
    let a1r = DMatrix::from_fn(4, 4, |a, b| C64::new(sig * m.a1[RED[a]][RED[b]], 0.0));
    let inv = a1r.try_inverse().ok_or_else(|| Error::Degenerate("reduced normal matrix is singular".into()))?;
    Ok(Reduced { m: -(inv * kmat), k })
}

fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Degenerate("eigenvalue iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// All finite roots lambda of det(s A0 + sigma lambda A1 + i omega A2) = 0.
pub fn dispersion_roots(data: &ContactData, pt: &LaplaceFourierPoint, side: Side) -> Result<DispersionRoots> {
    let r = reduced(data, pt, side)?;
    let mut finite = eigenvalues(&r.m)?;
    finite.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    Ok(DispersionRoots { finite, n_infinite: NU - 4 })
}

fn expand(r: &Reduced, col: &[C64]) -> DVector<C64> {
    let mut v = DVector::from_element(NU, C64::new(0.0, 0.0));
    for (a, &i) in RED.iter().enumerate() {
        v[i] = col[a];
    }
    v[H1] = (0..4).map(|a| r.k[a] * col[a]).sum();
    v[S] = C64::new(0.0, 0.0);
    v
}

/// Canonical basis of the decaying subspace: echelon form on the best
/// conditioned pair of rows, columns expanded to full states and scaled to
/// unit norm.
fn decaying_basis(r: &Reduced, roots: &[C64]) -> Result<DMatrix<C64>> {
    let growing: Vec<C64> = roots.iter().copied().filter(|l| l.re > 0.0).collect();
    let n_dec = roots.len() - growing.len();
    if n_dec != 2 || roots.iter().any(|l| l.re == 0.0) {
        return Err(Error::Degenerate(format!("expected 2 decaying roots, found {n_dec}")));
    }
    let mut p = DMatrix::<C64>::identity(4, 4);
    let scale = roots.iter().fold(0.0f64, |m, l| m.max(l.norm())).max(1.0);
    for l in &growing {
        p = p * (&r.m - DMatrix::<C64>::identity(4, 4) * *l) / C64::new(scale, 0.0);
    }
    let svd = SVD::new(p, true, false);
    let u = svd.u.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let b = DMatrix::from_fn(4, 2, |i, j| u[(i, order[j])]);
    let mut best = (0, 1, -1.0);
    for a in 0..4 {
        for c in a + 1..4 {
            let d = (b[(a, 0)] * b[(c, 1)] - b[(a, 1)] * b[(c, 0)]).norm();
            if d > best.2 * (1.0 + 1e-12) {
                best = (a, c, d);
            }
        }
    }
    let sub = DMatrix::from_fn(2, 2, |i, j| b[(if i == 0 { best.0 } else { best.1 }, j)]);
    let sinv = sub.try_inverse().ok_or_else(|| Error::Degenerate("decaying basis is rank deficient".into()))?;
    let e = &b * sinv;
    let mut out = DMatrix::from_element(NU, 2, C64::new(0.0, 0.0));
    for j in 0..2 {
        let col: Vec<C64> = (0..4).map(|i| e[(i, j)]).collect();
        let v = expand(r, &col);
        let n = v.norm();
        out.set_column(j, &(v / C64::new(n, 0.0)));
    }
    Ok(out)
}

/// Decaying roots, bases and the Lopatinski determinant at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub lambdas_plus: Vec<C64>,
    pub lambdas_minus: Vec<C64>,
    pub decaying_basis_plus: DMatrix<C64>,
    pub decaying_basis_minus: DMatrix<C64>,
    pub lopatinski_value: C64,
    /// Smallest singular value of the 5x5 boundary matrix.
    pub conditioning: f64,
    pub bc_matrix: DMatrix<C64>,
}

/// Lopatinski determinant for Re s > 0.
///
/// The unknowns are the amplitudes of the two decaying modes on each side
/// and the front amplitude; the rows are [p], [v1], [v2], [H2] and the
/// kinematic condition, with the front column normalized by |(tau, omega)|
/// so that the determinant is homogeneous of degree 0.
pub fn lopatinski(data: &ContactData, pt: &LaplaceFourierPoint) -> Result<ModeResult> {
    if !(pt.s.re > 0.0) {
        return Err(Error::Precondition(format!("Re s = {} must be positive", pt.s.re)));
    }
    let rp = reduced(data, pt, Side::Plus)?;
    let rm = reduced(data, pt, Side::Minus)?;
    let lp = eigenvalues(&rp.m)?;
    let lm = eigenvalues(&rm.m)?;
    let bp = decaying_basis(&rp, &lp)?;
    let bm = decaying_basis(&rm, &lm)?;
    let tau = data.tau(pt);
    let rho = (tau.norm_sqr() + pt.omega * pt.omega).sqrt();
    let rows = [P, V1, V2, H2];
    let mut a = DMatrix::from_element(5, 5, C64::new(0.0, 0.0));
    for (r, &k) in rows.iter().enumerate() {
        for j in 0..2 {
            a[(r, j)] = bp[(k, j)];
            a[(r, 2 + j)] = -bm[(k, j)];
        }
    }
    for j in 0..2 {
        a[(4, j)] = -bp[(V1, j)];
    }
    a[(4, 4)] = tau / rho;
    let det = a.clone().determinant();
    let sv = a.clone().singular_values();
    let conditioning = sv.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let mut lambdas_plus = lp;
    let mut lambdas_minus = lm;
    let key = |a: &C64, b: &C64| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap());
    lambdas_plus.sort_by(key);
    lambdas_minus.sort_by(key);
    Ok(ModeResult {
        lambdas_plus,
        lambdas_minus,
        decaying_basis_plus: bp,
        decaying_basis_minus: bm,
        lopatinski_value: det,
        conditioning,
        bc_matrix: a,
    })
}

/// One sample of a Lopatinski scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub eta: f64,
    pub xi: f64,
    pub omega: f64,
    pub delta: C64,
    pub conditioning: f64,
}

/// Evenly spaced values including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// |Delta| on an (eta, xi) grid, rows ordered eta-major.
pub fn lopatinski_scan(data: &ContactData, omega: f64, etas: &[f64], xis: &[f64]) -> Result<Vec<ScanRow>> {
    let pts: Vec<(f64, f64)> = etas.iter().flat_map(|&e| xis.iter().map(move |&x| (e, x))).collect();
    pts.par_iter()
        .map(|&(eta, xi)| {
            let r = lopatinski(data, &LaplaceFourierPoint::new(eta, xi, omega))?;
            Ok(ScanRow { eta, xi, omega, delta: r.lopatinski_value, conditioning: r.conditioning })
        })
        .collect()
}

/// The neutral mode with s = -i omega v2: only S and phi are excited,
/// U^+- = (0, 0, 0, 0, 0, S_amp^+-) e^{i omega x2 + s t}, phi = phi_amp e^{...}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeutralMode {
    pub s: C64,
    pub omega: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub phi: f64,
}

impl NeutralMode {
    pub fn new(data: &ContactData, omega: f64, s_plus: f64, s_minus: f64, phi: f64) -> NeutralMode {
        NeutralMode { s: -I * omega * data.plus[V2], omega, s_plus, s_minus, phi }
    }

    fn phase(&self, t: f64, x2: f64) -> C64 {
        (self.s * t + I * self.omega * x2).exp()
    }

    /// Real part of the mode on one side (independent of x1).
    pub fn state(&self, side: Side, t: f64, x2: f64) -> Vec6 {
        let amp = match side {
            Side::Plus => self.s_plus,
            Side::Minus => self.s_minus,
        };
        let mut u = [0.0; NU];
        u[S] = amp * self.phase(t, x2).re;
        u
    }

    pub fn front(&self, t: f64, x2: f64) -> f64 {
        self.phi * self.phase(t, x2).re
    }

    /// Largest |residual| of the interior symbols and the five boundary rows.
    pub fn continuous_residual(&self, data: &ContactData) -> f64 {
        let mut worst: f64 = 0.0;
        for (side, amp) in [(Side::Plus, self.s_plus), (Side::Minus, self.s_minus)] {
            let m = data.matrices(side);
            for i in 0..NU {
                let r = self.s * m.a0[i][S] * amp + I * self.omega * m.a2[i][S] * amp;
                worst = worst.max(r.norm());
            }
        }
        // [p], [v1], [v2], [H2] vanish identically for this mode
        let kin = (self.s + I * self.omega * data.plus[V2]) * self.phi;
        worst.max(kin.norm())
    }
}

/// Boundary conditions of the dual regularized constant-coefficient problem
/// with primal conditions [p] = a phi, [v] = 0, [H2] = b phi, d0 phi = v1^+.
///
/// The dual traces satisfy
/// [v1] = eps <p>, H1 [H2] = -eps <v2>, [H2 v1 - H1 v2] = eps <H2>,
/// H1^+- = S^+- = 0, and the front-like quantity
/// w = [p + H2^ H2] - eps <v1> obeys d0bar w = R with
/// R = eps a p^+ - (a + b H2^) v1^+ + b (H1^ v2^+ + eps H2^+) after time reversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBc {
    pub h1: f64,
    pub h2: f64,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
}

/// Dual trace (p, v1, v2, H2) on one side; H1 = S = 0.
pub type DualTrace = [f64; 4];

impl DualBc {
    /// Fails unless 0 < eps < smallest positive eigenvalue of A1.
    pub fn new(data: &ContactData, eps: f64, a: f64, b: f64) -> Result<DualBc> {
        let m = data.matrices(Side::Plus);
        let e = SymmetricEigen::new(crate::small::to_na(&m.a1)).eigenvalues;
        let lmin = e.iter().filter(|v| **v > 1e-12).fold(f64::INFINITY, |m, v| m.min(*v));
        if !(eps > 0.0 && eps < lmin) {
            return Err(Error::Precondition(format!(
                "eps = {eps} must lie in (0, {lmin}) to keep the characteristic count"
            )));
        }
        Ok(DualBc { h1: data.plus[H1], h2: data.plus[H2], eps, a, b })
    }

    /// Number of dual boundary conditions (four algebraic, four vanishing
    /// components; the front-like equation replaces none of them).
    pub const COUNT: usize = 8;

    /// Complete the minus trace from the plus trace and p^-.
    pub fn minus_from_plus(&self, plus: &DualTrace, p_minus: f64) -> DualTrace {
        let (h1, h2, e) = (self.h1, self.h2, self.eps);
        let [pp, v1p, v2p, g2p] = *plus;
        // unknowns v1m, v2m, g2m from the three algebraic conditions
        let a = nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, e, -h1, -h2, h1, -e);
        let rhs = nalgebra::Vector3::new(v1p - e * (pp + p_minus), -h1 * g2p - e * v2p, e * g2p - h2 * v1p + h1 * v2p);
        let x = a.lu().solve(&rhs).expect("dual trace system is regular for eps > 0");
        [p_minus, x[0], x[1], x[2]]
    }

    /// Residuals of the three algebraic conditions.
    pub fn algebraic_residual(&self, plus: &DualTrace, minus: &DualTrace) -> [f64; 3] {
        let (h1, h2, e) = (self.h1, self.h2, self.eps);
        [
            plus[1] - minus[1] - e * (plus[0] + minus[0]),
            h1 * (plus[3] - minus[3]) + e * (plus[2] + minus[2]),
            h2 * (plus[1] - minus[1]) - h1 * (plus[2] - minus[2]) - e * (plus[3] + minus[3]),
        ]
    }

    pub fn w(&self, plus: &DualTrace, minus: &DualTrace) -> f64 {
        (plus[0] + self.h2 * plus[3]) - (minus[0] + self.h2 * minus[3]) - self.eps * (plus[1] + minus[1])
    }

    /// Right-hand side of the forward-time front-like equation d0 w = R.
    pub fn r_forward(&self, plus: &DualTrace) -> f64 {
        let (a, b, e) = (self.a, self.b, self.eps);
        (a + b * self.h2) * plus[1] - e * a * plus[0] - b * (self.h1 * plus[2] + e * plus[3])
    }

    /// Boundary form -[(A1 U, Ubar)] + eps <U . Ubar> for full primal traces
    /// and dual traces.
    pub fn boundary_form(&self, up: &Vec6, um: &Vec6, dp: &DualTrace, dm: &DualTrace) -> f64 {
        let (h1, h2, e) = (self.h1, self.h2, self.eps);
        let bil = |u: &Vec6, d: &DualTrace| {
            u[P] * d[1] + u[V1] * d[0] + h2 * (u[V1] * d[3] + u[H2] * d[1]) - h1 * (u[V2] * d[3] + u[H2] * d[2])
        };
        let dot = |u: &Vec6, d: &DualTrace| u[P] * d[0] + u[V1] * d[1] + u[V2] * d[2] + u[H2] * d[3];
        -(bil(up, dp) - bil(um, dm)) + e * (dot(up, dp) + dot(um, dm))
    }

    /// beta + v1^+ w + phi R, which vanishes when the primal traces satisfy
    /// their conditions with front amplitude phi and the dual traces theirs.
    pub fn identity_defect(&self, up: &Vec6, um: &Vec6, phi: f64, dp: &DualTrace, dm: &DualTrace) -> f64 {
        self.boundary_form(up, um, dp, dm) + up[V1] * self.w(dp, dm) + phi * self.r_forward(dp)
    }
}

/// Closed-form check used by callers: the state and its speeds.
pub fn plasma(data: &ContactData, side: Side) -> PlasmaState {
    PlasmaState::from_vec(data.state(side), data.eos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> ContactData {
        ContactData::new([1.0, 0.0, 0.0, 0.8, 0.3, 0.2], [1.0, 0.0, 0.0, 0.8, 0.3, -0.5], Eos::default()).unwrap()
    }

    #[test]
    fn four_finite_roots_two_decaying() {
        let d = data();
        let pt = LaplaceFourierPoint::new(0.7, 0.3, 1.0);
        for side in Side::both() {
            let r = dispersion_roots(&d, &pt, side).unwrap();
            assert_eq!(r.finite.len(), 4);
            assert_eq!(r.n_infinite, 2);
            assert_eq!(r.finite.iter().filter(|l| l.re < 0.0).count(), 2);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let d = data();
        let a = lopatinski(&d, &LaplaceFourierPoint::new(0.4, 0.9, 1.3)).unwrap().lopatinski_value;
        let b = lopatinski(&d, &LaplaceFourierPoint::new(0.4, -0.9, -1.3)).unwrap().lopatinski_value;
        assert!((a - b.conj()).norm() < 1e-10, "{a} {b}");
    }

    #[test]
    fn rejects_bad_data() {
        assert!(
            ContactData::new([1.0, 0.1, 0.0, 0.8, 0.3, 0.2], [1.0, 0.1, 0.0, 0.8, 0.3, 0.2], Eos::default()).is_err()
        );
        assert!(
            ContactData::new([1.0, 0.0, 0.0, 0.0, 0.3, 0.2], [1.0, 0.0, 0.0, 0.0, 0.3, 0.2], Eos::default()).is_err()
        );
        let d = data();
        assert!(matches!(lopatinski(&d, &LaplaceFourierPoint::new(0.0, 0.0, 0.0)), Err(Error::Precondition(_))));
    }

    #[test]
    fn neutral_mode_exact() {
        let mut d = data();
        d.plus[V2] = 0.4;
        d.minus[V2] = 0.4;
        let m = NeutralMode::new(&d, 2.0, 0.3, -0.7, 0.1);
        assert_eq!(m.continuous_residual(&d), 0.0);
    }
}
