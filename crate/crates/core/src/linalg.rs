//! Minkowski vectors, 4x4 complex matrices and the Dirac-representation gamma matrices.
//!
//! Signature is (+,-,-,-). Spatial indices of [`FourVector`] are 1..=3.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Minkowski metric diagonal.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalType {
    Timelike,
    Null,
    Spacelike,
}

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self([t, x, y, z])
    }

    pub fn from_parts(t: f64, spatial: [f64; 3]) -> Self {
        Self([t, spatial[0], spatial[1], spatial[2]])
    }

    /// Unit normal of the constant-time slices.
    pub const fn nu() -> Self {
        Self([1.0, 0.0, 0.0, 0.0])
    }

    pub fn t(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        minkowski_dot(*self, *other)
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn causal_type(&self) -> CausalType {
        let t2 = self.0[0] * self.0[0];
        let s2 = self.0[1] * self.0[1] + self.0[2] * self.0[2] + self.0[3] * self.0[3];
        // compare the two halves instead of their difference so that exactly
        // representable null vectors are classified exactly
        if t2 > s2 {
            CausalType::Timelike
        } else if t2 < s2 {
            CausalType::Spacelike
        } else {
            CausalType::Null
        }
    }

    pub fn is_future_timelike(&self) -> bool {
        self.0[0] > 0.0 && self.causal_type() == CausalType::Timelike
    }

    /// Index lowered with the metric.
    pub fn lower(&self) -> [f64; 4] {
        [self.0[0], -self.0[1], -self.0[2], -self.0[3]]
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.map(|v| v * c))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..4).map(|i| (self.0[i] - other.0[i]).abs()).fold(0.0, f64::max)
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FourVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for FourVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for FourVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

pub fn minkowski_dot(v: FourVector, w: FourVector) -> f64 {
    v.0[0] * w.0[0] - v.0[1] * w.0[1] - v.0[2] * w.0[2] - v.0[3] * w.0[3]
}

pub type Spinor = [C64; 4];

pub fn spinor_dot(a: &Spinor, b: &Spinor) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// 4x4 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorMatrix(pub [[C64; 4]; 4]);

impl Default for SpinorMatrix {
    fn default() -> Self {
        Self::zero()
    }
}

impl SpinorMatrix {
    pub const fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::diag([ONE; 4])
    }

    pub fn diag(d: [C64; 4]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    pub fn scaled_identity(c: C64) -> Self {
        Self::diag([c; 4])
    }

    pub fn adjoint(&self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i].conj())))
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2] + self.0[3][3]
    }

    /// Tr(self * other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let mut acc = ZERO;
        for i in 0..4 {
            for k in 0..4 {
                acc += self.0[i][k] * other.0[k][i];
            }
        }
        acc
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(self.0.map(|row| row.map(|v| v * c)))
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Self(self.0.map(|row| row.map(|v| v * c)))
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        std::array::from_fn(|i| (0..4).map(|k| self.0[i][k] * v[k]).sum())
    }

    /// self += c * other
    pub fn axpy(&mut self, c: C64, other: &Self) {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += c * other.0[i][j];
            }
        }
    }

    /// Max-norm of entries.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn diagonal(&self) -> [C64; 4] {
        std::array::from_fn(|i| self.0[i][i])
    }
}

impl Add for SpinorMatrix {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + o.0[i][j])))
    }
}

impl AddAssign for SpinorMatrix {
    fn add_assign(&mut self, o: Self) {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl Sub for SpinorMatrix {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] - o.0[i][j])))
    }
}

impl Neg for SpinorMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for SpinorMatrix {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..4 {
                    out.0[i][j] += a * o.0[k][j];
                }
            }
        }
        out
    }
}

impl Mul<C64> for SpinorMatrix {
    type Output = Self;
    fn mul(self, c: C64) -> Self {
        self.scale(c)
    }
}

impl Mul<f64> for SpinorMatrix {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scale_re(c)
    }
}

pub fn anticommutator(a: &SpinorMatrix, b: &SpinorMatrix) -> SpinorMatrix {
    *a * *b + *b * *a
}

pub fn commutator(a: &SpinorMatrix, b: &SpinorMatrix) -> SpinorMatrix {
    *a * *b - *b * *a
}

/// The Dirac-representation gamma matrices with upper indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSet {
    pub gamma: [SpinorMatrix; 4],
}

pub fn pauli() -> [[[C64; 2]; 2]; 3] {
    [
        [[ZERO, ONE], [ONE, ZERO]],
        [[ZERO, -I], [I, ZERO]],
        [[ONE, ZERO], [ZERO, -ONE]],
    ]
}

pub fn build_gamma_set() -> GammaSet {
    let mut g0 = SpinorMatrix::zero();
    g0.0[0][0] = ONE;
    g0.0[1][1] = ONE;
    g0.0[2][2] = -ONE;
    g0.0[3][3] = -ONE;
    let s = pauli();
    let spatial: [SpinorMatrix; 3] = std::array::from_fn(|k| {
        let mut g = SpinorMatrix::zero();
        for a in 0..2 {
            for b in 0..2 {
                g.0[a][b + 2] = s[k][a][b];
                g.0[a + 2][b] = -s[k][a][b];
            }
        }
        g
    });
    GammaSet { gamma: [g0, spatial[0], spatial[1], spatial[2]] }
}

impl GammaSet {
    pub fn g0(&self) -> &SpinorMatrix {
        &self.gamma[0]
    }

    /// gamma^0 gamma^mu for mu = 0..3.
    pub fn g0_gmu(&self, mu: usize) -> SpinorMatrix {
        self.gamma[0] * self.gamma[mu]
    }

    /// Feynman slash with an upper-index vector: gamma^mu k_mu.
    pub fn slash(&self, k: &FourVector) -> SpinorMatrix {
        let kl = k.lower();
        let mut m = SpinorMatrix::zero();
        for mu in 0..4 {
            m.axpy(C64::from(kl[mu]), &self.gamma[mu]);
        }
        m
    }

    /// Spin-adjoint gamma^0 M^dagger gamma^0.
    pub fn spin_adjoint(&self, m: &SpinorMatrix) -> SpinorMatrix {
        self.gamma[0] * m.adjoint() * self.gamma[0]
    }
}

/// Rank-2 contravariant tensor.
pub type Tensor2 = [[f64; 4]; 4];
/// Rank-3 contravariant tensor.
pub type Tensor3 = [[[f64; 4]; 4]; 4];

pub fn tensor2_asymmetry(t: &Tensor2) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((t[i][j] - t[j][i]).abs());
        }
    }
    d
}

pub fn tensor3_asymmetry(t: &Tensor3) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let v = t[i][j][k];
                for w in [t[i][k][j], t[j][i][k], t[j][k][i], t[k][i][j], t[k][j][i]] {
                    d = d.max((v - w).abs());
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_examples() {
        assert_eq!(minkowski_dot(FourVector::nu(), FourVector::nu()), 1.0);
        let n = FourVector::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(minkowski_dot(n, n), 0.0);
        assert_eq!(n.causal_type(), CausalType::Null);
        assert_eq!(
            minkowski_dot(FourVector::new(2.0, 1.0, 0.0, 0.0), FourVector::new(1.0, 0.0, 1.0, 0.0)),
            2.0
        );
        assert_eq!(FourVector::new(1.0, 2.0, 0.0, 0.0).causal_type(), CausalType::Spacelike);
    }

    #[test]
    fn gamma_examples() {
        let g = build_gamma_set();
        assert!(anticommutator(&g.gamma[1], &g.gamma[2]).is_zero());
        assert_eq!(g.gamma[0] * g.gamma[0], SpinorMatrix::identity());
        assert_eq!(g.gamma[3] * g.gamma[3], -SpinorMatrix::identity());
        assert!(anticommutator(&g.gamma[0], &g.gamma[1]).is_zero());
        assert_eq!(anticommutator(&g.gamma[0], &g.gamma[0]), SpinorMatrix::identity() * 2.0);
        let a = g.gamma[2] * g.gamma[1];
        assert_eq!(anticommutator(&SpinorMatrix::identity(), &a), a * 2.0);
    }

    #[test]
    fn slash_squares_to_norm() {
        let g = build_gamma_set();
        let k = FourVector::new(1.3, 0.2, -0.7, 0.4);
        let s = g.slash(&k);
        let d = (s * s).dist(&SpinorMatrix::scaled_identity(C64::from(k.norm2())));
        assert!(d < 1e-14);
    }
}
