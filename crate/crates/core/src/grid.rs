//! Tensor grid on [0, X1] x T_X2 and the summation-by-parts difference
//! operators used by the solver.
//!
//! In x1 the nodes are x1_i = i h1, i = 0..=N1, so x1 = 0 is the front and
//! x1 = X1 the artificial far boundary. In x2 the grid is periodic with N2
//! nodes x2_j = j h2.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub x1_max: f64,
    pub x2_len: f64,
    pub h1: f64,
    pub h2: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl Grid {
    /// Grid with a time step of at most `cfl * min(h1, h2) / max_speed`,
    /// shrunk so that an integer number of steps reaches `t_final`.
    pub fn new(n1: usize, n2: usize, x1_max: f64, x2_len: f64, cfl: f64, max_speed: f64, t_final: f64) -> Result<Grid> {
        if n1 < 4 {
            return Err(Error::Config(format!("grid.N1 must be at least 4, got {n1}")));
        }
        if n2 < 4 {
            return Err(Error::Config(format!("grid.N2 must be at least 4, got {n2}")));
        }
        if !(x1_max > 0.0) || !x1_max.is_finite() {
            return Err(Error::Config("grid.X1 must be positive".into()));
        }
        if !(x2_len > 0.0) || !x2_len.is_finite() {
            return Err(Error::Config("grid.X2 must be positive".into()));
        }
        if !(cfl > 0.0) || !cfl.is_finite() {
            return Err(Error::Config("grid.cfl must be positive".into()));
        }
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::Config("run.T_final must be non-negative".into()));
        }
        if !(max_speed > 0.0) || !max_speed.is_finite() {
            return Err(Error::Precondition(format!("max speed must be positive, got {max_speed}")));
        }
        let h1 = x1_max / n1 as f64;
        let h2 = x2_len / n2 as f64;
        let dt_max = cfl * h1.min(h2) / max_speed;
        let dt = if t_final > 0.0 {
            let steps = (t_final / dt_max).ceil().max(1.0);
            t_final / steps
        } else {
            dt_max
        };
        Ok(Grid { n1, n2, x1_max, x2_len, h1, h2, dt, t_final })
    }

    /// Number of x1 nodes.
    #[inline]
    pub fn np1(&self) -> usize {
        self.n1 + 1
    }

    #[inline]
    pub fn npts(&self) -> usize {
        self.np1() * self.n2
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.h1
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.h2
    }

    pub fn steps(&self) -> usize {
        if self.t_final <= 0.0 {
            0
        } else {
            (self.t_final / self.dt).round() as usize
        }
    }

    /// Diagonal SBP norm weight in x1 (without the x2 factor).
    #[inline]
    pub fn w1(&self, i: usize) -> f64 {
        if i == 0 || i == self.n1 {
            0.5 * self.h1
        } else {
            self.h1
        }
    }

    /// Quadrature weight of node (i, j).
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.w1(i) * self.h2
    }

    #[inline]
    pub fn jp(&self, j: usize) -> usize {
        if j + 1 == self.n2 {
            0
        } else {
            j + 1
        }
    }

    #[inline]
    pub fn jm(&self, j: usize) -> usize {
        if j == 0 {
            self.n2 - 1
        } else {
            j - 1
        }
    }
}

/// SBP first derivative in x1 of a strided sequence: `get(i)` for i in 0..=n.
/// Central in the interior, one-sided first order at both ends.
#[inline]
pub fn sbp_d1_at(n: usize, h: f64, i: usize, get: impl Fn(usize) -> f64) -> f64 {
    if i == 0 {
        (get(1) - get(0)) / h
    } else if i == n {
        (get(n) - get(n - 1)) / h
    } else {
        (get(i + 1) - get(i - 1)) / (2.0 * h)
    }
}

/// Periodic second-order central derivative.
pub fn periodic_d(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    (0..n).map(|j| (values[(j + 1) % n] - values[(j + n - 1) % n]) / (2.0 * h)).collect()
}

/// Periodic fourth-order central first derivative.
pub fn periodic_d4(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            let f = |k: isize| values[((j as isize + k).rem_euclid(n as isize)) as usize];
            (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h)
        })
        .collect()
}

/// Periodic fourth-order central second derivative.
pub fn periodic_dd4(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            let f = |k: isize| values[((j as isize + k).rem_euclid(n as isize)) as usize];
            (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) / (12.0 * h * h)
        })
        .collect()
}

/// Third-order upwind-biased derivative for advection with speed `a`
/// (the derivative approximates d/dx2 and is biased against the flow).
pub fn periodic_upwind3(values: &[f64], h: f64, a: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            let f = |k: isize| values[((j as isize + k).rem_euclid(n as isize)) as usize];
            if a >= 0.0 {
                (2.0 * f(1) + 3.0 * f(0) - 6.0 * f(-1) + f(-2)) / (6.0 * h)
            } else {
                (-f(2) + 6.0 * f(1) - 3.0 * f(0) - 2.0 * f(-1)) / (6.0 * h)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sbp_identity_holds() {
        // (u, D v)_P + (D u, v)_P = u_N v_N - u_0 v_0
        let n = 12;
        let h = 0.3;
        let u: Vec<f64> = (0..=n).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
        let v: Vec<f64> = (0..=n).map(|i| (i as f64 * 0.3).cos() * i as f64).collect();
        let w = |i: usize| if i == 0 || i == n { 0.5 * h } else { h };
        let mut s = 0.0;
        for i in 0..=n {
            s += w(i) * (u[i] * sbp_d1_at(n, h, i, |k| v[k]) + v[i] * sbp_d1_at(n, h, i, |k| u[k]));
        }
        assert!((s - (u[n] * v[n] - u[0] * v[0])).abs() < 1e-12);
    }

    #[test]
    fn periodic_orders() {
        let err = |n: usize| {
            let h = 2.0 * std::f64::consts::PI / n as f64;
            let v: Vec<f64> = (0..n).map(|j| (j as f64 * h).sin()).collect();
            let d = periodic_d4(&v, h);
            let u = periodic_upwind3(&v, h, 1.0);
            let e4 = (0..n).map(|j| (d[j] - (j as f64 * h).cos()).abs()).fold(0.0, f64::max);
            let e3 = (0..n).map(|j| (u[j] - (j as f64 * h).cos()).abs()).fold(0.0, f64::max);
            (e4, e3)
        };
        let (a4, a3) = err(32);
        let (b4, b3) = err(64);
        assert!((a4 / b4).log2() > 3.8);
        assert!((a3 / b3).log2() > 2.8);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(2, 10, 1.0, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(Grid::new(10, 10, -1.0, 1.0, 0.5, 1.0, 1.0).is_err());
        let g = Grid::new(10, 10, 1.0, 1.0, 0.5, 2.0, 1.0).unwrap();
        assert!(g.dt <= 0.5 * 0.1 / 2.0 + 1e-15);
        assert!((g.steps() as f64 * g.dt - 1.0).abs() < 1e-12);
    }
}
