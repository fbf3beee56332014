//! Truncated Taylor jets in three variables: value + gradient (`Jet1`) and
//! value + gradient + Hessian (`Jet2`). Used to differentiate the analytic
//! initial-data families exactly.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub v: f64,
    pub g: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

/// Arithmetic shared by plain numbers and jets.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(c: f64) -> Self;
    fn value(&self) -> f64;
    fn scale(self, c: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

impl Jet1 {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 3] }
    }

    fn chain(self, f0: f64, f1: f64) -> Self {
        Self { v: f0, g: self.g.map(|d| f1 * d) }
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }
}

impl Scalar for Jet1 {
    fn cst(c: f64) -> Self {
        Self::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn scale(self, c: f64) -> Self {
        Self { v: self.v * c, g: self.g.map(|d| d * c) }
    }
}

impl Add for Jet1 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, g: std::array::from_fn(|i| self.g[i] + o.g[i]) }
    }
}

impl Sub for Jet1 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, g: std::array::from_fn(|i| self.g[i] - o.g[i]) }
    }
}

impl Neg for Jet1 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Jet1 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { v: self.v * o.v, g: std::array::from_fn(|i| self.g[i] * o.v + self.v * o.g[i]) }
    }
}

impl Div for Jet1 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    /// The coordinate function x_k.
    pub fn coord(x: [f64; 3], k: usize) -> Self {
        let mut g = [0.0; 3];
        g[k] = 1.0;
        Self { v: x[k], g, h: [[0.0; 3]; 3] }
    }

    /// Composition with a scalar function given f, f', f'' at self.v.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f0,
            g: self.g.map(|d| f1 * d),
            h: std::array::from_fn(|i| std::array::from_fn(|j| f1 * self.h[i][j] + f2 * self.g[i] * self.g[j])),
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1] + self.h[2][2]
    }

    /// The first derivative along `k` as a first-order jet.
    pub fn partial(&self, k: usize) -> Jet1 {
        Jet1 { v: self.g[k], g: self.h[k] }
    }

    pub fn truncate(&self) -> Jet1 {
        Jet1 { v: self.v, g: self.g }
    }
}

impl Scalar for Jet2 {
    fn cst(c: f64) -> Self {
        Self::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn scale(self, c: f64) -> Self {
        Self { v: self.v * c, g: self.g.map(|d| d * c), h: self.h.map(|r| r.map(|d| d * c)) }
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            g: std::array::from_fn(|i| self.g[i] + o.g[i]),
            h: std::array::from_fn(|i| std::array::from_fn(|j| self.h[i][j] + o.h[i][j])),
        }
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            g: std::array::from_fn(|i| self.g[i] * o.v + self.v * o.g[i]),
            h: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    self.h[i][j] * o.v + self.v * o.h[i][j] + self.g[i] * o.g[j] + self.g[j] * o.g[i]
                })
            }),
        }
    }
}

impl Div for Jet2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_chain_rules() {
        let p = [0.3, -0.4, 0.8];
        let x = Jet2::coord(p, 0);
        let y = Jet2::coord(p, 1);
        // f = exp(x y) / (1 + x^2)
        let f = (x * y).exp() / (Jet2::constant(1.0) + x * x);
        let fd = |q: [f64; 3]| (q[0] * q[1]).exp() / (1.0 + q[0] * q[0]);
        let h = 1e-4;
        for k in 0..3 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            assert!(((fd(a) - fd(b)) / (2.0 * h) - f.g[k]).abs() < 1e-7);
            assert!(((fd(a) - 2.0 * fd(p) + fd(b)) / (h * h) - f.h[k][k]).abs() < 1e-5);
        }
        let mut pp = p;
        pp[0] += h;
        pp[1] += h;
        let mut pm = p;
        pm[0] += h;
        pm[1] -= h;
        let mut mp = p;
        mp[0] -= h;
        mp[1] += h;
        let mut mm = p;
        mm[0] -= h;
        mm[1] -= h;
        let mixed = (fd(pp) - fd(pm) - fd(mp) + fd(mm)) / (4.0 * h * h);
        assert!((mixed - f.h[0][1]).abs() < 1e-5);
        assert_eq!(f.h[0][1], f.h[1][0]);
    }
}
