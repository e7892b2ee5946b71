//! Forward-mode differentiation over three spatial variables.
//!
//! Field models are written once against [`Real`] and evaluated with `f64`
//! (values only), [`D1`] (value + gradient) or [`D2`] (value + gradient +
//! hessian). Derivatives obtained this way are exact derivatives of the
//! closed-form expressions, up to rounding.

use core::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar type a closed-form field expression can be evaluated on.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;
}

fn powi_f64(x: f64, n: i32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut e = n.unsigned_abs();
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        libm::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        libm::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        libm::log(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        powi_f64(self, n)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        libm::pow(self, p)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        libm::atan2(self, x)
    }
}

/// Value and gradient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct D1 {
    pub v: f64,
    pub g: [f64; 3],
}

impl D1 {
    pub const fn constant(v: f64) -> Self {
        D1 { v, g: [0.0; 3] }
    }

    /// The coordinate function `x_i` at value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; 3];
        g[i] = 1.0;
        D1 { v, g }
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        D1 { v: f, g: [df * self.g[0], df * self.g[1], df * self.g[2]] }
    }
}

impl Add for D1 {
    type Output = D1;
    #[inline]
    fn add(self, o: D1) -> D1 {
        D1 { v: self.v + o.v, g: [self.g[0] + o.g[0], self.g[1] + o.g[1], self.g[2] + o.g[2]] }
    }
}

impl Sub for D1 {
    type Output = D1;
    #[inline]
    fn sub(self, o: D1) -> D1 {
        D1 { v: self.v - o.v, g: [self.g[0] - o.g[0], self.g[1] - o.g[1], self.g[2] - o.g[2]] }
    }
}

impl Mul for D1 {
    type Output = D1;
    #[inline]
    fn mul(self, o: D1) -> D1 {
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = self.g[k] * o.v + self.v * o.g[k];
        }
        D1 { v: self.v * o.v, g }
    }
}

impl Div for D1 {
    type Output = D1;
    #[inline]
    fn div(self, o: D1) -> D1 {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = (self.g[k] - v * o.g[k]) * inv;
        }
        D1 { v, g }
    }
}

impl Neg for D1 {
    type Output = D1;
    #[inline]
    fn neg(self) -> D1 {
        D1 { v: -self.v, g: [-self.g[0], -self.g[1], -self.g[2]] }
    }
}

impl Add<f64> for D1 {
    type Output = D1;
    #[inline]
    fn add(mut self, o: f64) -> D1 {
        self.v += o;
        self
    }
}

impl Sub<f64> for D1 {
    type Output = D1;
    #[inline]
    fn sub(mut self, o: f64) -> D1 {
        self.v -= o;
        self
    }
}

impl Mul<f64> for D1 {
    type Output = D1;
    #[inline]
    fn mul(self, s: f64) -> D1 {
        D1 { v: self.v * s, g: [self.g[0] * s, self.g[1] * s, self.g[2] * s] }
    }
}

impl Div<f64> for D1 {
    type Output = D1;
    #[inline]
    fn div(self, s: f64) -> D1 {
        self * (1.0 / s)
    }
}

impl Real for D1 {
    fn cst(v: f64) -> Self {
        D1::constant(v)
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.v);
        self.chain(s, 0.5 / s)
    }
    fn sin(self) -> Self {
        self.chain(libm::sin(self.v), libm::cos(self.v))
    }
    fn cos(self) -> Self {
        self.chain(libm::cos(self.v), -libm::sin(self.v))
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.v);
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(libm::log(self.v), 1.0 / self.v)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return D1::constant(1.0);
        }
        self.chain(powi_f64(self.v, n), n as f64 * powi_f64(self.v, n - 1))
    }
    fn powf(self, p: f64) -> Self {
        self.chain(libm::pow(self.v, p), p * libm::pow(self.v, p - 1.0))
    }
    fn atan2(self, x: Self) -> Self {
        let rho = self.v * self.v + x.v * x.v;
        let fy = x.v / rho;
        let fx = -self.v / rho;
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = fy * self.g[k] + fx * x.g[k];
        }
        D1 { v: libm::atan2(self.v, x.v), g }
    }
}

/// Value, gradient and (symmetric) hessian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct D2 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl D2 {
    pub const fn constant(v: f64) -> Self {
        D2 { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; 3];
        g[i] = 1.0;
        D2 { v, g, h: [[0.0; 3]; 3] }
    }

    /// Composition `f(self)` given `f`, `f'`, `f''` at `self.v`.
    #[inline]
    fn chain(self, f: f64, d1: f64, d2: f64) -> Self {
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for j in 0..3 {
            g[j] = d1 * self.g[j];
            for k in 0..3 {
                h[j][k] = d1 * self.h[j][k] + d2 * self.g[j] * self.g[k];
            }
        }
        D2 { v: f, g, h }
    }
}

impl Add for D2 {
    type Output = D2;
    #[inline]
    fn add(mut self, o: D2) -> D2 {
        self.v += o.v;
        for j in 0..3 {
            self.g[j] += o.g[j];
            for k in 0..3 {
                self.h[j][k] += o.h[j][k];
            }
        }
        self
    }
}

impl Sub for D2 {
    type Output = D2;
    #[inline]
    fn sub(self, o: D2) -> D2 {
        self + (-o)
    }
}

impl Mul for D2 {
    type Output = D2;
    #[inline]
    fn mul(self, o: D2) -> D2 {
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for j in 0..3 {
            g[j] = self.g[j] * o.v + self.v * o.g[j];
            for k in 0..3 {
                h[j][k] = self.h[j][k] * o.v
                    + self.v * o.h[j][k]
                    + self.g[j] * o.g[k]
                    + self.g[k] * o.g[j];
            }
        }
        D2 { v: self.v * o.v, g, h }
    }
}

impl Div for D2 {
    type Output = D2;
    #[inline]
    fn div(self, o: D2) -> D2 {
        let inv = 1.0 / o.v;
        let recip = o.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * recip
    }
}

impl Neg for D2 {
    type Output = D2;
    #[inline]
    fn neg(self) -> D2 {
        self * -1.0
    }
}

impl Add<f64> for D2 {
    type Output = D2;
    #[inline]
    fn add(mut self, o: f64) -> D2 {
        self.v += o;
        self
    }
}

impl Sub<f64> for D2 {
    type Output = D2;
    #[inline]
    fn sub(mut self, o: f64) -> D2 {
        self.v -= o;
        self
    }
}

impl Mul<f64> for D2 {
    type Output = D2;
    #[inline]
    fn mul(mut self, s: f64) -> D2 {
        self.v *= s;
        for j in 0..3 {
            self.g[j] *= s;
            for k in 0..3 {
                self.h[j][k] *= s;
            }
        }
        self
    }
}

impl Div<f64> for D2 {
    type Output = D2;
    #[inline]
    fn div(self, s: f64) -> D2 {
        self * (1.0 / s)
    }
}

impl Real for D2 {
    fn cst(v: f64) -> Self {
        D2::constant(v)
    }
    fn val(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.v);
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.v);
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        self.chain(libm::log(self.v), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => D2::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                self.chain(
                    powi_f64(self.v, n),
                    nf * powi_f64(self.v, n - 1),
                    nf * (nf - 1.0) * powi_f64(self.v, n - 2),
                )
            }
        }
    }
    fn powf(self, p: f64) -> Self {
        self.chain(
            libm::pow(self.v, p),
            p * libm::pow(self.v, p - 1.0),
            p * (p - 1.0) * libm::pow(self.v, p - 2.0),
        )
    }
    fn atan2(self, x: Self) -> Self {
        // f(y, x) with partials taken at (self.v, x.v)
        let (yv, xv) = (self.v, x.v);
        let rho = yv * yv + xv * xv;
        let rho2 = rho * rho;
        let fy = xv / rho;
        let fx = -yv / rho;
        let fyy = -2.0 * xv * yv / rho2;
        let fxx = 2.0 * xv * yv / rho2;
        let fxy = (yv * yv - xv * xv) / rho2;
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for j in 0..3 {
            g[j] = fy * self.g[j] + fx * x.g[j];
            for k in 0..3 {
                h[j][k] = fy * self.h[j][k]
                    + fx * x.h[j][k]
                    + fyy * self.g[j] * self.g[k]
                    + fxx * x.g[j] * x.g[k]
                    + fxy * (self.g[j] * x.g[k] + x.g[j] * self.g[k]);
            }
        }
        D2 { v: libm::atan2(yv, xv), g, h }
    }
}
