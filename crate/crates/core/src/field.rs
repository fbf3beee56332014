//! The regularizing vector field u = f nu + lambda X: analytic initial-data
//! families, grid samples, finite-difference stencils and interpolation back
//! to arbitrary points.

use crate::error::{Error, Result};
use crate::grid::{norm3, SpatialGrid};
use crate::jet::{Jet1, Jet2, Scalar};
use crate::linalg::FourVector;
use serde::{Deserialize, Serialize};

/// Named scalar profiles. Every profile is multiplied by the smooth window
/// of the field, so it vanishes identically outside V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ScalarFamily {
    #[default]
    Zero,
    Gaussian {
        amplitude: f64,
        center: [f64; 3],
        sigma: f64,
    },
    Bump {
        amplitude: f64,
        center: [f64; 3],
        radius: f64,
    },
    PlaneModulatedBump {
        amplitude: f64,
        center: [f64; 3],
        radius: f64,
        wavevector: [f64; 3],
        phase: f64,
    },
    Affine {
        offset: f64,
        slope: [f64; 3],
    },
}

fn shifted_r2(p: [f64; 3], c: [f64; 3]) -> Jet2 {
    (0..3)
        .map(|k| {
            let d = Jet2::coord(p, k) - Jet2::constant(c[k]);
            d * d
        })
        .fold(Jet2::constant(0.0), |a, b| a + b)
}

/// exp(1 - 1/(1 - q)) for q < 1, zero otherwise; equals 1 at q = 0.
fn bump_of(q: Jet2) -> Jet2 {
    if q.v >= 1.0 {
        return Jet2::constant(0.0);
    }
    let w = 1.0 - q.v;
    let f0 = (1.0 - 1.0 / w).exp();
    let f1 = -f0 / (w * w);
    let f2 = f0 * (1.0 / w.powi(4) - 2.0 / w.powi(3));
    q.chain(f0, f1, f2)
}

/// psi(t) = exp(-1/t) for t > 0.
fn psi(t: Jet2) -> Jet2 {
    if t.v <= 0.0 {
        return Jet2::constant(0.0);
    }
    let f0 = (-1.0 / t.v).exp();
    t.chain(f0, f0 / (t.v * t.v), f0 * (1.0 / t.v.powi(4) - 2.0 / t.v.powi(3)))
}

impl ScalarFamily {
    pub fn eval(&self, p: [f64; 3]) -> Jet2 {
        match *self {
            ScalarFamily::Zero => Jet2::constant(0.0),
            ScalarFamily::Gaussian { amplitude, center, sigma } => {
                (shifted_r2(p, center).scale(-0.5 / (sigma * sigma))).exp().scale(amplitude)
            }
            ScalarFamily::Bump { amplitude, center, radius } => {
                bump_of(shifted_r2(p, center).scale(1.0 / (radius * radius))).scale(amplitude)
            }
            ScalarFamily::PlaneModulatedBump { amplitude, center, radius, wavevector, phase } => {
                let b = bump_of(shifted_r2(p, center).scale(1.0 / (radius * radius)));
                let arg = (0..3)
                    .map(|k| Jet2::coord(p, k).scale(wavevector[k]))
                    .fold(Jet2::constant(phase), |a, b| a + b);
                (b * arg.cos()).scale(amplitude)
            }
            ScalarFamily::Affine { offset, slope } => (0..3)
                .map(|k| Jet2::coord(p, k).scale(slope[k]))
                .fold(Jet2::constant(offset), |a, b| a + b),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarFamily::Zero)
    }
}

/// C-infinity radial window: 1 for |x| <= inner, 0 for |x| >= outer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub inner: f64,
    pub outer: f64,
}

impl Window {
    pub fn eval(&self, p: [f64; 3]) -> Jet2 {
        let r2 = shifted_r2(p, [0.0; 3]);
        let (a2, b2) = (self.inner * self.inner, self.outer * self.outer);
        if r2.v <= a2 {
            return Jet2::constant(1.0);
        }
        if r2.v >= b2 {
            return Jet2::constant(0.0);
        }
        let s = (r2 - Jet2::constant(a2)).scale(1.0 / (b2 - a2));
        let up = psi(Jet2::constant(1.0) - s);
        let down = psi(s);
        up / (up + down)
    }
}

/// Second-order jets of the four contravariant components of u at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UJet {
    pub u: [Jet2; 4],
}

/// First-order data at a point: u and its spatial gradient, du[j][m] = d_j u^m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UPoint {
    pub u: FourVector,
    pub du: [[f64; 4]; 3],
}

impl UPoint {
    pub fn from_jet(j: &UJet) -> Self {
        Self {
            u: FourVector(j.u.map(|c| c.v)),
            du: std::array::from_fn(|k| std::array::from_fn(|m| j.u[m].g[k])),
        }
    }

    pub fn from_jet1(u: &[Jet1; 4]) -> Self {
        Self {
            u: FourVector(u.map(|c| c.v)),
            du: std::array::from_fn(|k| std::array::from_fn(|m| u[m].g[k])),
        }
    }

    pub fn minus_nu(&self) -> Self {
        let mut out = *self;
        out.u[0] -= 1.0;
        out
    }
}

/// Anything that can produce second-order jets of u at arbitrary points.
pub trait FieldSource: Sync {
    fn jet(&self, p: [f64; 3]) -> UJet;
    fn support_radius(&self) -> f64;
    fn lambda(&self) -> f64;
}

/// u = (1 + lambda W f~) nu + lambda W X with named analytic profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticField {
    pub lambda: f64,
    pub f_tilde: ScalarFamily,
    pub x: [ScalarFamily; 3],
    pub window: Window,
}

impl AnalyticField {
    pub fn new(lambda: f64, f_tilde: ScalarFamily, x: [ScalarFamily; 3], support_radius: f64) -> Self {
        Self { lambda, f_tilde, x, window: Window { inner: 0.5 * support_radius, outer: support_radius } }
    }

    /// u = nu everywhere.
    pub fn trivial(support_radius: f64) -> Self {
        Self::new(0.0, ScalarFamily::Zero, Default::default(), support_radius)
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }
}

impl FieldSource for AnalyticField {
    fn jet(&self, p: [f64; 3]) -> UJet {
        let w = self.window.eval(p);
        let zero = Jet2::constant(0.0);
        let profile = |fam: &ScalarFamily| if fam.is_zero() || w.v == 0.0 && w.g == [0.0; 3] { zero } else { (fam.eval(p) * w).scale(self.lambda) };
        UJet {
            u: [
                Jet2::constant(1.0) + profile(&self.f_tilde),
                profile(&self.x[0]),
                profile(&self.x[1]),
                profile(&self.x[2]),
            ],
        }
    }

    fn support_radius(&self) -> f64 {
        self.window.outer
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Central finite differences of order 2 or 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldDerivativeStencil {
    pub order: usize,
    pub h: f64,
}

impl FieldDerivativeStencil {
    pub fn new(order: usize, h: f64) -> Result<Self> {
        if order != 2 && order != 4 {
            return Err(Error::Config(format!("stencil order must be 2 or 4, got {order}")));
        }
        Ok(Self { order, h })
    }

    pub fn margin(&self) -> usize {
        self.order / 2
    }

    /// d/dx_axis at `idx` of the samples returned by `at`.
    pub fn d1<F: Fn([usize; 3]) -> f64>(&self, at: F, idx: [usize; 3], axis: usize) -> f64 {
        let shift = |o: isize| {
            let mut i = idx;
            i[axis] = (i[axis] as isize + o) as usize;
            at(i)
        };
        match self.order {
            2 => (shift(1) - shift(-1)) / (2.0 * self.h),
            _ => (-shift(2) + 8.0 * shift(1) - 8.0 * shift(-1) + shift(-2)) / (12.0 * self.h),
        }
    }

    /// d^2/dx_a dx_b, diagonal entries with the direct second-difference formula.
    pub fn d2<F: Fn([usize; 3]) -> f64>(&self, at: F, idx: [usize; 3], a: usize, b: usize) -> f64 {
        if a != b {
            return self.d1(|i| self.d1(&at, i, b), idx, a);
        }
        let shift = |o: isize| {
            let mut i = idx;
            i[a] = (i[a] as isize + o) as usize;
            at(i)
        };
        let h2 = self.h * self.h;
        match self.order {
            2 => (shift(1) - 2.0 * shift(0) + shift(-1)) / h2,
            _ => (-shift(2) + 16.0 * shift(1) - 30.0 * shift(0) + 16.0 * shift(-1) - shift(-2)) / (12.0 * h2),
        }
    }
}

/// Grid samples of u: `f` = u^0 and `s` = lambda X = spatial part of u.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizingField {
    pub grid: SpatialGrid,
    pub lambda: f64,
    pub f: Vec<f64>,
    pub s: Vec<[f64; 3]>,
}

impl RegularizingField {
    pub fn from_fn<F: Fn([f64; 3]) -> (f64, [f64; 3])>(grid: SpatialGrid, lambda: f64, sample: F) -> Result<Self> {
        let (f, s) = (0..grid.len()).map(|k| sample(grid.position(grid.unlinear(k)))).unzip();
        let field = Self { grid, lambda, f, s };
        field.check_positive()?;
        Ok(field)
    }

    pub fn from_source<S: FieldSource + ?Sized>(grid: SpatialGrid, src: &S) -> Result<Self> {
        Self::from_fn(grid, src.lambda(), |p| {
            let j = src.jet(p);
            (j.u[0].v, [j.u[1].v, j.u[2].v, j.u[3].v])
        })
    }

    /// u = c nu everywhere.
    pub fn constant(grid: SpatialGrid, c: f64) -> Result<Self> {
        Self::from_fn(grid, 0.0, |_| (c, [0.0; 3]))
    }

    pub fn check_positive(&self) -> Result<()> {
        match self.f.iter().position(|&v| !(v > 0.0)) {
            Some(k) => Err(Error::InvalidField(format!(
                "f = {} <= 0 at node {:?}",
                self.f[k],
                self.grid.unlinear(k)
            ))),
            None => Ok(()),
        }
    }

    pub fn u(&self, idx: [usize; 3]) -> FourVector {
        let k = self.grid.linear(idx);
        FourVector::from_parts(self.f[k], self.s[k])
    }

    pub fn component(&self, m: usize, k: usize) -> f64 {
        if m == 0 {
            self.f[k]
        } else {
            self.s[k][m - 1]
        }
    }

    /// X = s / lambda (or s itself when lambda = 0).
    pub fn x_at(&self, k: usize) -> [f64; 3] {
        if self.lambda > 0.0 {
            self.s[k].map(|v| v / self.lambda)
        } else {
            self.s[k]
        }
    }

    /// u and its stencil gradient at an interior node.
    pub fn upoint(&self, idx: [usize; 3], st: &FieldDerivativeStencil) -> Result<UPoint> {
        if !self.grid.inside_margin(idx, st.margin()) {
            return Err(Error::MarginViolation { index: idx });
        }
        let du = std::array::from_fn(|j| {
            std::array::from_fn(|m| st.d1(|i| self.component(m, self.grid.linear(i)), idx, j))
        });
        Ok(UPoint { u: self.u(idx), du })
    }

    /// Largest |u - nu| over nodes with max_i |x_i| > radius.
    pub fn deviation_outside(&self, radius: f64) -> f64 {
        (0..self.grid.len())
            .filter(|&k| self.grid.position(self.grid.unlinear(k)).iter().any(|c| c.abs() > radius))
            .map(|k| {
                let s = self.s[k];
                (self.f[k] - 1.0).abs().max(s[0].abs()).max(s[1].abs()).max(s[2].abs())
            })
            .fold(0.0, f64::max)
    }

    /// Largest |x| among nodes where |u - nu| exceeds `tol` (0 when there are none).
    pub fn support_extent(&self, tol: f64) -> f64 {
        (0..self.grid.len())
            .filter(|&k| (self.f[k] - 1.0).abs() > tol || self.s[k].iter().any(|c| c.abs() > tol))
            .map(|k| norm3(self.grid.position(self.grid.unlinear(k))))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.f
            .iter()
            .zip(&other.f)
            .map(|(a, b)| (a - b).abs())
            .chain(self.s.iter().zip(&other.s).flat_map(|(a, b)| (0..3).map(move |i| (a[i] - b[i]).abs())))
            .fold(0.0, f64::max)
    }
}

/// Tricubic Lagrange interpolation of u and its first and second stencil
/// derivatives, so that grid fields can be used wherever a [`FieldSource`] is needed.
#[derive(Debug, Clone)]
pub struct GridInterpolant {
    grid: SpatialGrid,
    lambda: f64,
    support_radius: f64,
    /// per node, per component: value, gradient (3), Hessian upper triangle (6)
    channels: Vec<[[f64; 10]; 4]>,
}

const HESS_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl GridInterpolant {
    pub fn new(field: &RegularizingField, st: &FieldDerivativeStencil, support_radius: f64) -> Self {
        let g = field.grid;
        let margin = st.margin() * 2;
        let channels = (0..g.len())
            .map(|k| {
                let idx = g.unlinear(k);
                std::array::from_fn(|m| {
                    let at = |i: [usize; 3]| field.component(m, g.linear(i));
                    let mut c = [0.0; 10];
                    c[0] = at(idx);
                    if g.inside_margin(idx, margin) {
                        for j in 0..3 {
                            c[1 + j] = st.d1(at, idx, j);
                        }
                        for (q, &(a, b)) in HESS_PAIRS.iter().enumerate() {
                            c[4 + q] = st.d2(at, idx, a, b);
                        }
                    }
                    c
                })
            })
            .collect();
        Self { grid: g, lambda: field.lambda, support_radius, channels }
    }
}

fn lagrange4(t: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl FieldSource for GridInterpolant {
    fn jet(&self, p: [f64; 3]) -> UJet {
        let g = &self.grid;
        if norm3(p) > self.support_radius {
            let mut j = UJet::default();
            j.u[0] = Jet2::constant(1.0);
            return j;
        }
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let s = (p[a] + g.extent) / g.spacing - 0.5;
            let i0 = (s.floor() as isize).clamp(1, g.n as isize - 3) as usize;
            base[a] = i0 - 1;
            w[a] = lagrange4(s - i0 as f64);
        }
        let mut acc = [[0.0; 10]; 4];
        for (a, wa) in w[0].iter().enumerate() {
            for (b, wb) in w[1].iter().enumerate() {
                for (c, wc) in w[2].iter().enumerate() {
                    let k = g.linear([base[0] + a, base[1] + b, base[2] + c]);
                    let wt = wa * wb * wc;
                    for m in 0..4 {
                        for q in 0..10 {
                            acc[m][q] += wt * self.channels[k][m][q];
                        }
                    }
                }
            }
        }
        let mut out = UJet::default();
        for m in 0..4 {
            let c = acc[m];
            let mut h = [[0.0; 3]; 3];
            for (q, &(a, b)) in HESS_PAIRS.iter().enumerate() {
                h[a][b] = c[4 + q];
                h[b][a] = c[4 + q];
            }
            out.u[m] = Jet2 { v: c[0], g: [c[1], c[2], c[3]], h };
        }
        out
    }

    fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_smooth_and_compact() {
        let w = Window { inner: 0.5, outer: 1.0 };
        assert_eq!(w.eval([0.2, 0.0, 0.0]).v, 1.0);
        assert_eq!(w.eval([1.0, 0.1, 0.0]).v, 0.0);
        let mid = w.eval([0.75, 0.0, 0.0]);
        assert!(mid.v > 0.0 && mid.v < 1.0 && mid.g[0] < 0.0);
    }

    #[test]
    fn stencil_orders() {
        let g = SpatialGrid::new(1.0, 20, 0.5).unwrap();
        let at = |i: [usize; 3]| (g.coord(i[0]) * 2.0).sin() * g.coord(i[1]).exp();
        let idx = [10, 9, 4];
        let (x, y) = (g.coord(10), g.coord(9));
        let exact = 2.0 * (2.0 * x).cos() * y.exp();
        let e2 = (FieldDerivativeStencil::new(2, g.spacing).unwrap().d1(at, idx, 0) - exact).abs();
        let e4 = (FieldDerivativeStencil::new(4, g.spacing).unwrap().d1(at, idx, 0) - exact).abs();
        assert!(e4 < e2 / 10.0);
        let mixed = FieldDerivativeStencil::new(4, g.spacing).unwrap().d2(at, idx, 0, 1);
        assert!((mixed - exact).abs() < 1e-3);
    }

    #[test]
    fn interpolant_reproduces_analytic_field() {
        let src = AnalyticField::new(
            0.1,
            ScalarFamily::Gaussian { amplitude: 1.0, center: [0.0; 3], sigma: 0.4 },
            [ScalarFamily::Bump { amplitude: 0.5, center: [0.1, 0.0, 0.0], radius: 0.6 }, ScalarFamily::Zero, ScalarFamily::Zero],
            1.0,
        );
        let g = SpatialGrid::new(1.5, 48, 1.0).unwrap();
        let field = RegularizingField::from_source(g, &src).unwrap();
        let st = FieldDerivativeStencil::new(4, g.spacing).unwrap();
        let interp = GridInterpolant::new(&field, &st, 1.0);
        let p = [0.13, -0.21, 0.07];
        let (a, b) = (src.jet(p), interp.jet(p));
        for m in 0..2 {
            assert!((a.u[m].v - b.u[m].v).abs() < 1e-5);
            assert!((a.u[m].g[0] - b.u[m].g[0]).abs() < 1e-3);
        }
    }
}
