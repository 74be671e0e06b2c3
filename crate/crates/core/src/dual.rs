//! Forward-mode dual numbers carrying the gradient in (t, x1, x2).

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual3 {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual3 {
    pub const fn constant(v: f64) -> Self {
        Dual3 { v, d: [0.0; 3] }
    }

    /// Independent variable number `k` (0 = t, 1 = x1, 2 = x2).
    pub fn var(v: f64, k: usize) -> Self {
        let mut d = [0.0; 3];
        d[k] = 1.0;
        Dual3 { v, d }
    }

    /// Chain rule with f(v) and f'(v).
    #[inline]
    pub fn chain(self, f: f64, df: f64) -> Self {
        Dual3 { v: f, d: [df * self.d[0], df * self.d[1], df * self.d[2]] }
    }

    pub fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    pub fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    pub fn tan(self) -> Self {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }
    pub fn sinh(self) -> Self {
        self.chain(self.v.sinh(), self.v.cosh())
    }
    pub fn cosh(self) -> Self {
        self.chain(self.v.cosh(), self.v.sinh())
    }
    pub fn atan(self) -> Self {
        self.chain(self.v.atan(), 1.0 / (1.0 + self.v * self.v))
    }
    pub fn powf(self, e: f64) -> Self {
        if e == 0.0 {
            return Dual3::constant(1.0);
        }
        self.chain(self.v.powf(e), e * self.v.powf(e - 1.0))
    }
    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual3::constant(1.0);
        }
        self.chain(self.v.powi(n), n as f64 * self.v.powi(n - 1))
    }
    pub fn pow(self, e: Dual3) -> Self {
        if e.d == [0.0; 3] {
            if e.v.fract() == 0.0 && e.v.abs() < i32::MAX as f64 {
                return self.powi(e.v as i32);
            }
            return self.powf(e.v);
        }
        (e * self.ln()).exp()
    }
}

impl From<f64> for Dual3 {
    fn from(v: f64) -> Self {
        Dual3::constant(v)
    }
}

impl Add for Dual3 {
    type Output = Dual3;
    fn add(self, o: Dual3) -> Dual3 {
        Dual3 { v: self.v + o.v, d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]] }
    }
}

impl Sub for Dual3 {
    type Output = Dual3;
    fn sub(self, o: Dual3) -> Dual3 {
        Dual3 { v: self.v - o.v, d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]] }
    }
}

impl Mul for Dual3 {
    type Output = Dual3;
    // product rule
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, o: Dual3) -> Dual3 {
        Dual3 { v: self.v * o.v, d: std::array::from_fn(|k| self.d[k] * o.v + self.v * o.d[k]) }
    }
}

impl Div for Dual3 {
    type Output = Dual3;
    fn div(self, o: Dual3) -> Dual3 {
        let inv = 1.0 / o.v;
        Dual3 { v: self.v * inv, d: std::array::from_fn(|k| (self.d[k] - self.v * inv * o.d[k]) * inv) }
    }
}

impl Neg for Dual3 {
    type Output = Dual3;
    fn neg(self) -> Dual3 {
        Dual3 { v: -self.v, d: [-self.d[0], -self.d[1], -self.d[2]] }
    }
}

impl Mul<f64> for Dual3 {
    type Output = Dual3;
    fn mul(self, o: f64) -> Dual3 {
        Dual3 { v: self.v * o, d: [self.d[0] * o, self.d[1] * o, self.d[2] * o] }
    }
}

impl Add<f64> for Dual3 {
    type Output = Dual3;
    fn add(self, o: f64) -> Dual3 {
        Dual3 { v: self.v + o, d: self.d }
    }
}
