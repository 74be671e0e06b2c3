//! Fixed-size 6x6 helpers for hot loops.

use crate::{Mat6, Vec6, NU};

pub const ZERO6: Mat6 = [[0.0; NU]; NU];

pub fn identity() -> Mat6 {
    let mut m = ZERO6;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

#[inline]
pub fn matvec(m: &Mat6, x: &Vec6) -> Vec6 {
    let mut y = [0.0; NU];
    for i in 0..NU {
        let r = &m[i];
        y[i] = r[0] * x[0] + r[1] * x[1] + r[2] * x[2] + r[3] * x[3] + r[4] * x[4] + r[5] * x[5];
    }
    y
}

pub fn matmul(a: &Mat6, b: &Mat6) -> Mat6 {
    let mut c = ZERO6;
    for i in 0..NU {
        for k in 0..NU {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..NU {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Mat6) -> Mat6 {
    let mut t = ZERO6;
    for i in 0..NU {
        for j in 0..NU {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn add(a: &Mat6, b: &Mat6) -> Mat6 {
    let mut c = *a;
    for i in 0..NU {
        for j in 0..NU {
            c[i][j] += b[i][j];
        }
    }
    c
}

pub fn axpy(alpha: f64, a: &Mat6, b: &Mat6) -> Mat6 {
    let mut c = *b;
    for i in 0..NU {
        for j in 0..NU {
            c[i][j] += alpha * a[i][j];
        }
    }
    c
}

pub fn scale(alpha: f64, a: &Mat6) -> Mat6 {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v *= alpha;
        }
    }
    c
}

/// Left-multiply by a diagonal matrix.
pub fn diag_mul(d: &Vec6, a: &Mat6) -> Mat6 {
    let mut c = *a;
    for i in 0..NU {
        for j in 0..NU {
            c[i][j] *= d[i];
        }
    }
    c
}

#[inline]
pub fn dot(a: &Vec6, b: &Vec6) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(a: &Mat6) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn frob(a: &Mat6) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn to_na(a: &Mat6) -> nalgebra::SMatrix<f64, 6, 6> {
    nalgebra::SMatrix::<f64, 6, 6>::from_fn(|i, j| a[i][j])
}

pub fn from_na(m: &nalgebra::SMatrix<f64, 6, 6>) -> Mat6 {
    let mut a = ZERO6;
    for i in 0..NU {
        for j in 0..NU {
            a[i][j] = m[(i, j)];
        }
    }
    a
}
