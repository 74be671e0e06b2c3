//! Discrete integration by parts for the spatial operator.
//!
//! For constant coefficients, L U = (A1~ - eps) D1 U + A2 D2 U satisfies
//! (L U, V)_P + (U, L V)_P = sum_j h2 [ (A U, V)_{X1} - (A U, V)_0 ]
//! exactly, which is the discrete form of (L)* = -L up to the boundary
//! term -[(A1 U, V)] + eps sum <U, V>.

use super::Operator;
use crate::geometry::Side;
use crate::small;
use crate::{Error, Result, Vec6, NU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Where random test fields are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Vanishing on the two x1 nodes next to each end.
    Interior,
    /// Nonzero on x1 = 0, vanishing near x1 = X1.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointReport {
    pub trials: usize,
    /// max over trials of |(LU,V) + (U,LV) - boundary term| / scale.
    pub max_rel_defect: f64,
    /// Largest |boundary term| seen (zero for interior support).
    pub max_boundary_term: f64,
}

/// Inner product (U, V)_P over both sides.
pub fn inner(op: &Operator, u: &[Vec<Vec6>; 2], v: &[Vec<Vec6>; 2]) -> f64 {
    let g = op.grid();
    let mut acc = 0.0;
    for s in 0..2 {
        for i in 0..g.np1() {
            let mut row = 0.0;
            for j in 0..g.n2 {
                let k = g.idx(i, j);
                row += small::dot(&u[s][k], &v[s][k]);
            }
            acc += row * g.weight(i);
        }
    }
    acc
}

/// Boundary term -sum_j h2 sum_+- ((A1~ - eps) U, V) at x1 = 0 plus the
/// matching term at x1 = X1.
pub fn boundary_term(op: &Operator, u: &[Vec<Vec6>; 2], v: &[Vec<Vec6>; 2]) -> f64 {
    let g = op.grid();
    let eps = op.opts.eps;
    let mut acc = 0.0;
    for side in Side::both() {
        let s = side.index();
        for j in 0..g.n2 {
            for (i, sign) in [(0usize, -1.0), (g.n1, 1.0)] {
                let mut a = op.a1_tilde(side, i, j);
                for (k, row) in a.iter_mut().enumerate() {
                    row[k] -= eps;
                }
                let k = g.idx(i, j);
                acc += sign * small::dot(&small::matvec(&a, &u[s][k]), &v[s][k]) * g.h2;
            }
        }
    }
    acc
}

/// Random field with the given support.
pub fn random_field(op: &Operator, rng: &mut ChaCha8Rng, support: Support) -> [Vec<Vec6>; 2] {
    let g = op.grid();
    let mut f = |_: usize| -> Vec<Vec6> {
        (0..g.npts())
            .map(|k| {
                let i = k / g.n2;
                let on = match support {
                    Support::Interior => i >= 2 && i + 2 <= g.n1,
                    Support::Boundary => i + 2 <= g.n1,
                };
                let v: Vec6 = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
                if on {
                    v
                } else {
                    [0.0; NU]
                }
            })
            .collect()
    };
    [f(0), f(1)]
}

/// Check the identity on `trials` random pairs of each support type.
/// Requires coefficients without a zero-order part.
pub fn discrete_adjoint_check(op: &Operator, trials: usize, seed: u64) -> Result<AdjointReport> {
    if !op.zero_order_free() {
        return Err(Error::Precondition("adjoint check needs a constant-coefficient basic state".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut bmax: f64 = 0.0;
    for n in 0..trials {
        let support = if n % 2 == 0 { Support::Interior } else { Support::Boundary };
        let u = random_field(op, &mut rng, support);
        let v = random_field(op, &mut rng, support);
        let lu = op.interior_apply(&u);
        let lv = op.interior_apply(&v);
        let lhs = inner(op, &lu, &v) + inner(op, &u, &lv);
        let b = boundary_term(op, &u, &v);
        let scale = inner(op, &lu, &lu).sqrt() * inner(op, &v, &v).sqrt()
            + inner(op, &u, &u).sqrt() * inner(op, &lv, &lv).sqrt();
        worst = worst.max((lhs - b).abs() / scale.max(f64::MIN_POSITIVE));
        bmax = bmax.max(b.abs());
    }
    Ok(AdjointReport { trials, max_rel_defect: worst, max_boundary_term: bmax })
}
