//! Cone cross-sections D_pL, the averaging construction u = xi/xi^2, the moment
//! tensors I2/I3 in closed form with their sphere-quadrature oracles, and the
//! affine transport check.
//!
//! The integrands of I2/I3 carry a factor 1/g(xi, nu) and are therefore not
//! Lorentz covariant. The closed form is obtained in the lab frame instead: with
//! u = (u0, a e) the integrals reduce to the one-dimensional moments
//! K_{p,j} = 2 pi int_{-1}^{1} v^j (u0 - a v)^{-p} dv via n = v e + n_perp.

use crate::error::{Error, Result};
use crate::linalg::{minkowski_dot, FourVector, Tensor2, Tensor3};
use crate::quadrature::SphereRule;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullDirection {
    n: [f64; 3],
}

impl NullDirection {
    /// Normalizes `n`; panics on the zero vector.
    pub fn new(n: [f64; 3]) -> Self {
        let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        assert!(r > 0.0, "null direction from zero vector");
        Self { n: n.map(|c| c / r) }
    }

    pub fn n(&self) -> [f64; 3] {
        self.n
    }

    pub fn zeta(&self) -> FourVector {
        FourVector::from_parts(1.0, self.n)
    }
}

fn check_timelike(u: &FourVector) -> Result<()> {
    let norm = u.norm2();
    if !(norm > 0.0 && u.t() > 0.0) {
        return Err(Error::NonTimelikeU { norm });
    }
    Ok(())
}

pub fn bp_from_u(u: &FourVector, n: &NullDirection) -> Result<f64> {
    check_timelike(u)?;
    let value = minkowski_dot(*u, n.zeta());
    if !(value > 0.0) {
        return Err(Error::DegenerateDirection { value });
    }
    Ok(1.0 / value)
}

/// Sphere nodes with quadrature weights and the positive function b on them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSection {
    pub directions: Vec<NullDirection>,
    pub weights: Vec<f64>,
    pub b_values: Vec<f64>,
}

impl ConeSection {
    pub fn from_fn<F: Fn(&NullDirection) -> f64>(rule: &SphereRule, b: F) -> Result<Self> {
        let directions: Vec<_> = rule.directions.iter().map(|&d| NullDirection::new(d)).collect();
        let b_values: Vec<f64> = directions.iter().map(&b).collect();
        if let Some(&bad) = b_values.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::DegenerateDirection { value: bad });
        }
        Ok(Self { directions, weights: rule.weights.clone(), b_values })
    }

    pub fn from_u(u: &FourVector, rule: &SphereRule) -> Result<Self> {
        check_timelike(u)?;
        let directions: Vec<_> = rule.directions.iter().map(|&d| NullDirection::new(d)).collect();
        let b_values = directions.iter().map(|d| bp_from_u(u, d)).collect::<Result<Vec<_>>>()?;
        Ok(Self { directions, weights: rule.weights.clone(), b_values })
    }

    fn nodes(&self) -> impl Iterator<Item = (&NullDirection, f64, f64)> {
        self.directions.iter().zip(&self.weights).zip(&self.b_values).map(|((d, &w), &b)| (d, w, b))
    }
}

pub fn cone_measure(c: &ConeSection) -> f64 {
    c.nodes().map(|(_, w, b)| w * b * b).sum()
}

pub fn mean_xi(c: &ConeSection) -> Result<FourVector> {
    let mu = cone_measure(c);
    let mut acc = [0.0; 4];
    for (d, w, b) in c.nodes() {
        let z = d.zeta();
        let wb3 = w * b * b * b;
        for k in 0..4 {
            acc[k] += wb3 * z[k];
        }
    }
    let xi = FourVector(acc.map(|v| v / mu));
    let norm = xi.norm2();
    if !(norm > 0.0 && xi.t() > 0.0) {
        return Err(Error::NonTimelikeResult { norm });
    }
    Ok(xi)
}

pub fn u_from_mean_xi(xi_bar: &FourVector) -> Result<FourVector> {
    let norm = xi_bar.norm2();
    if !(norm > 0.0) {
        return Err(Error::NonTimelikeInput { norm });
    }
    Ok(xi_bar.scale(1.0 / norm))
}

/// K_{p,j} = 2 pi int_{-1}^{1} v^j (u0 - a v)^{-p} dv for a >= 0, a < u0.
pub fn cone_moment(p: i32, j: i32, u0: f64, a: f64) -> f64 {
    let beta = a / u0;
    if beta < 0.3 {
        // (1 - beta v)^{-p} = sum_k binom(p+k-1, k) beta^k v^k
        let mut sum = 0.0;
        let mut coeff = 1.0;
        let mut bk = 1.0;
        for k in 0..200 {
            if (j + k) % 2 == 0 {
                let term = coeff * bk * 2.0 / (j + k + 1) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() && k > 4 {
                    break;
                }
            }
            coeff *= (p + k) as f64 / (k + 1) as f64;
            bk *= beta;
        }
        2.0 * PI * u0.powi(-p) * sum
    } else {
        let (wm, wp) = (u0 - a, u0 + a);
        let mut sum = 0.0;
        let mut binom = 1.0;
        for i in 0..=j {
            let q = i - p;
            let integral = if q == -1 {
                (wp / wm).ln()
            } else {
                (wp.powi(q + 1) - wm.powi(q + 1)) / (q + 1) as f64
            };
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sum += binom * u0.powi(j - i) * sign * integral;
            binom *= (j - i) as f64 / (i + 1) as f64;
        }
        2.0 * PI * sum / a.powi(j + 1)
    }
}

struct Frame {
    e: [f64; 3],
    proj: [[f64; 3]; 3],
}

fn frame(u: &FourVector) -> (f64, Frame) {
    let s = u.spatial();
    let a = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    // at rest the axis is arbitrary: the odd moments vanish and the even ones are isotropic
    let e = if a > 0.0 { s.map(|c| c / a) } else { [0.0, 0.0, 1.0] };
    let proj = std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } - e[i] * e[j])
    });
    (a, Frame { e, proj })
}

/// (M0, M1^i, M2^{ij}, M3^{ijk})
type SphereMoments = (f64, [f64; 3], [[f64; 3]; 3], [[[f64; 3]; 3]; 3]);

/// Sphere moments of b^p.
fn sphere_moments(u: &FourVector, p: i32) -> SphereMoments {
    let (a, fr) = frame(u);
    let k: [f64; 4] = std::array::from_fn(|j| cone_moment(p, j as i32, u.t(), a));
    let e = fr.e;
    let pr = fr.proj;
    let m1 = e.map(|c| c * k[1]);
    let m2 = std::array::from_fn(|i| {
        std::array::from_fn(|j| e[i] * e[j] * k[2] + pr[i][j] * 0.5 * (k[0] - k[2]))
    });
    let m3 = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|l| {
                e[i] * e[j] * e[l] * k[3]
                    + (pr[i][j] * e[l] + pr[i][l] * e[j] + pr[j][l] * e[i]) * 0.5 * (k[1] - k[3])
            })
        })
    });
    (k[0], m1, m2, m3)
}

/// Assemble a rank-2 tensor of zeta moments from sphere moments.
fn zeta_tensor2(m: &SphereMoments) -> Tensor2 {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| match (a, b) {
            (0, 0) => m.0,
            (0, j) | (j, 0) => m.1[j - 1],
            (i, j) => m.2[i - 1][j - 1],
        })
    })
}

fn zeta_tensor3(m: &SphereMoments) -> Tensor3 {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                let spatial: Vec<usize> = [a, b, c].into_iter().filter(|&x| x > 0).map(|x| x - 1).collect();
                match spatial.len() {
                    0 => m.0,
                    1 => m.1[spatial[0]],
                    2 => m.2[spatial[0]][spatial[1]],
                    _ => m.3[spatial[0]][spatial[1]][spatial[2]],
                }
            })
        })
    })
}

pub fn i2(u: &FourVector) -> Result<Tensor2> {
    check_timelike(u)?;
    let (a, _) = frame(u);
    let mu = cone_moment(2, 0, u.t(), a);
    let t = zeta_tensor2(&sphere_moments(u, 3));
    Ok(t.map(|row| row.map(|v| v / mu)))
}

pub fn i3(u: &FourVector) -> Result<Tensor3> {
    check_timelike(u)?;
    let (a, _) = frame(u);
    let mu = cone_moment(2, 0, u.t(), a);
    let m4 = sphere_moments(u, 4);
    // the rank-3 spatial block needs only M0..M3 of b^4
    let t = zeta_tensor3(&m4);
    Ok(t.map(|r| r.map(|c| c.map(|v| v / mu))))
}

pub fn i2_quad(u: &FourVector, rule: &SphereRule) -> Result<Tensor2> {
    let c = ConeSection::from_u(u, rule)?;
    let mu = cone_measure(&c);
    let mut t = [[0.0; 4]; 4];
    for (d, w, b) in c.nodes() {
        let z = d.zeta();
        let wb = w * b.powi(3) / mu;
        for k in 0..4 {
            for n in 0..4 {
                t[k][n] += wb * z[k] * z[n];
            }
        }
    }
    Ok(t)
}

pub fn i3_quad(u: &FourVector, rule: &SphereRule) -> Result<Tensor3> {
    let c = ConeSection::from_u(u, rule)?;
    let mu = cone_measure(&c);
    let mut t = [[[0.0; 4]; 4]; 4];
    for (d, w, b) in c.nodes() {
        let z = d.zeta();
        let wb = w * b.powi(4) / mu;
        for k in 0..4 {
            for n in 0..4 {
                for l in 0..4 {
                    t[k][n][l] += wb * z[k] * z[n] * z[l];
                }
            }
        }
    }
    Ok(t)
}

/// Largest |a - b| / max(1, |b|) over tensor entries, scaled by the largest entry of `b`.
pub fn tensor2_rel_err(a: &Tensor2, b: &Tensor2) -> f64 {
    let scale = b.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn tensor3_rel_err(a: &Tensor3, b: &Tensor3) -> f64 {
    let fa = a.iter().flatten().flatten();
    let fb: Vec<f64> = b.iter().flatten().flatten().copied().collect();
    let scale = fb.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    fa.zip(&fb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSegment {
    pub tau_q: f64,
    pub tau_p: f64,
    pub base: FourVector,
    pub direction: NullDirection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOutcome {
    pub value: f64,
    /// max |sigma f' - f| along the integration, sigma = tau - tau_q.
    pub residual: f64,
}

/// Integrates sigma f'(sigma) = f along the geodesic with the affine normalization
/// f'(0) = 1 seeded on the first step, then classical RK4.
pub fn transport_f(seg: &GeodesicSegment, ode_steps: usize) -> Result<TransportOutcome> {
    let (tq, tp) = (seg.tau_q, seg.tau_p);
    if !(tp >= tq) || !tq.is_finite() || !tp.is_finite() {
        return Err(Error::InvalidInterval { tau_q: tq, tau_p: tp });
    }
    if tp == tq {
        return Ok(TransportOutcome { value: 0.0, residual: 0.0 });
    }
    let steps = ode_steps.max(16);
    let h = (tp - tq) / steps as f64;
    let rhs = |s: f64, f: f64| f / s;
    let mut s = h;
    let mut f = h;
    let mut residual: f64 = 0.0;
    for _ in 1..steps {
        let k1 = rhs(s, f);
        let k2 = rhs(s + 0.5 * h, f + 0.5 * h * k1);
        let k3 = rhs(s + 0.5 * h, f + 0.5 * h * k2);
        let k4 = rhs(s + h, f + h * k3);
        residual = residual.max((s * k1 - f).abs());
        f += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        s += h;
    }
    residual = residual.max((s * rhs(s, f) - f).abs());
    Ok(TransportOutcome { value: f, residual })
}
