//! Forward-mode automatic differentiation for objective definitions.
//!
//! Benchmark objectives are written once against [`Real`] and evaluated with
//! `f64` for values, [`Dual`] for gradients and [`HyperDual`] for gradients
//! plus Hessians. Derivatives are exact up to rounding.
//!
//! `sqrt` and `powf` with exponent below one have unbounded derivatives at
//! zero (ZDT's `sqrt(f1/g)`, DTLZ6's `x^0.1`). Their derivative factors are
//! evaluated at `max(x, DERIVATIVE_FLOOR)` so that fronts touching the
//! boundary yield large but finite Jacobians; values are never altered.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Argument floor for derivative factors of `sqrt` and fractional `powf`.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;

/// Scalar type objective functions are generic over.
pub trait Real:
    Clone
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
    fn value(&self) -> f64;
    /// A constant carrying the same derivative shape as `self`.
    fn constant_like(&self, c: f64) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn powi(&self, p: i32) -> Self;
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn powi(&self, p: i32) -> Self {
        f64::powi(*self, p)
    }
}

/// `(f(a), f'(a), f''(a))` for the elementary functions.
fn sqrt_rule(a: f64) -> (f64, f64, f64) {
    let s = a.sqrt();
    let af = a.max(DERIVATIVE_FLOOR);
    let sf = af.sqrt();
    (s, 0.5 / sf, -0.25 / (af * sf))
}

fn powf_rule(a: f64, p: f64) -> (f64, f64, f64) {
    let v = a.powf(p);
    let af = if p < 1.0 { a.max(DERIVATIVE_FLOOR) } else { a };
    (v, p * af.powf(p - 1.0), p * (p - 1.0) * af.powf(p - 2.0))
}

fn powi_rule(a: f64, p: i32) -> (f64, f64, f64) {
    let v = a.powi(p);
    let d1 = if p == 0 { 0.0 } else { f64::from(p) * a.powi(p - 1) };
    let d2 = if p == 0 || p == 1 { 0.0 } else { f64::from(p) * f64::from(p - 1) * a.powi(p - 2) };
    (v, d1, d2)
}

/// Value plus gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: Vec<f64>,
}

impl Dual {
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[index] = 1.0;
        Self { v: value, g }
    }

    pub fn variables(x: &[f64]) -> Vec<Self> {
        x.iter().enumerate().map(|(i, &v)| Self::variable(v, i, x.len())).collect()
    }

    fn chain(&self, (f0, f1, _): (f64, f64, f64)) -> Self {
        Self { v: f0, g: self.g.iter().map(|&g| f1 * g).collect() }
    }
}

/// Value, gradient and full (symmetric) Hessian, row-major `n x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperDual {
    pub v: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl HyperDual {
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[index] = 1.0;
        Self { v: value, g, h: vec![0.0; n * n] }
    }

    pub fn variables(x: &[f64]) -> Vec<Self> {
        x.iter().enumerate().map(|(i, &v)| Self::variable(v, i, x.len())).collect()
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    fn chain(&self, (f0, f1, f2): (f64, f64, f64)) -> Self {
        let n = self.dim();
        let mut h = Vec::with_capacity(n * n);
        for i in 0..n {
            let gi = f2 * self.g[i];
            for j in 0..n {
                h.push(f1 * self.h[i * n + j] + gi * self.g[j]);
            }
        }
        Self { v: f0, g: self.g.iter().map(|&g| f1 * g).collect(), h }
    }

    fn recip(&self) -> Self {
        let a = self.v;
        self.chain((1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a)))
    }
}

macro_rules! impl_scalar_ops {
    ($t:ty) => {
        impl Add<f64> for $t {
            type Output = $t;
            fn add(mut self, c: f64) -> $t {
                self.v += c;
                self
            }
        }
        impl Sub<f64> for $t {
            type Output = $t;
            fn sub(mut self, c: f64) -> $t {
                self.v -= c;
                self
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                self * -1.0
            }
        }
        impl Div<f64> for $t {
            type Output = $t;
            fn div(self, c: f64) -> $t {
                self * (1.0 / c)
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                self + (-rhs)
            }
        }
    };
}

impl_scalar_ops!(Dual);
impl_scalar_ops!(HyperDual);

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(mut self, c: f64) -> Dual {
        self.v *= c;
        self.g.iter_mut().for_each(|g| *g *= c);
        self
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(mut self, rhs: Dual) -> Dual {
        self.v += rhs.v;
        self.g.iter_mut().zip(&rhs.g).for_each(|(a, b)| *a += b);
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        let g = self.g.iter().zip(&rhs.g).map(|(&ga, &gb)| self.v * gb + rhs.v * ga).collect();
        Dual { v: self.v * rhs.v, g }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.v;
        let v = self.v * inv;
        let g = self.g.iter().zip(&rhs.g).map(|(&ga, &gb)| (ga - v * gb) * inv).collect();
        Dual { v, g }
    }
}

impl Mul<f64> for HyperDual {
    type Output = HyperDual;
    fn mul(mut self, c: f64) -> HyperDual {
        self.v *= c;
        self.g.iter_mut().for_each(|g| *g *= c);
        self.h.iter_mut().for_each(|h| *h *= c);
        self
    }
}

impl Add for HyperDual {
    type Output = HyperDual;
    fn add(mut self, rhs: HyperDual) -> HyperDual {
        self.v += rhs.v;
        self.g.iter_mut().zip(&rhs.g).for_each(|(a, b)| *a += b);
        self.h.iter_mut().zip(&rhs.h).for_each(|(a, b)| *a += b);
        self
    }
}

impl Mul for HyperDual {
    type Output = HyperDual;
    fn mul(self, rhs: HyperDual) -> HyperDual {
        let n = self.dim();
        let (a, b) = (self.v, rhs.v);
        let g = self.g.iter().zip(&rhs.g).map(|(&ga, &gb)| a * gb + b * ga).collect();
        let mut h = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                h.push(a * rhs.h[idx] + b * self.h[idx] + self.g[i] * rhs.g[j] + rhs.g[i] * self.g[j]);
            }
        }
        HyperDual { v: a * b, g, h }
    }
}

impl Div for HyperDual {
    type Output = HyperDual;
    fn div(self, rhs: HyperDual) -> HyperDual {
        self * rhs.recip()
    }
}

macro_rules! impl_real {
    ($t:ty, $zero:expr) => {
        impl Real for $t {
            fn value(&self) -> f64 {
                self.v
            }
            fn constant_like(&self, c: f64) -> Self {
                let mut out = $zero(self);
                out.v = c;
                out
            }
            fn sin(&self) -> Self {
                self.chain((self.v.sin(), self.v.cos(), -self.v.sin()))
            }
            fn cos(&self) -> Self {
                self.chain((self.v.cos(), -self.v.sin(), -self.v.cos()))
            }
            fn sqrt(&self) -> Self {
                self.chain(sqrt_rule(self.v))
            }
            fn exp(&self) -> Self {
                let e = self.v.exp();
                self.chain((e, e, e))
            }
            fn powf(&self, p: f64) -> Self {
                self.chain(powf_rule(self.v, p))
            }
            fn powi(&self, p: i32) -> Self {
                self.chain(powi_rule(self.v, p))
            }
        }
    };
}

impl_real!(Dual, |d: &Dual| Dual { v: 0.0, g: vec![0.0; d.g.len()] });
impl_real!(HyperDual, |d: &HyperDual| HyperDual { v: 0.0, g: vec![0.0; d.g.len()], h: vec![0.0; d.h.len()] });
