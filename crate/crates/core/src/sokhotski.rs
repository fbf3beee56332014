//! Finite-delta and limiting sides of the distributional identity
//!
//!   lim_{d -> 0+} int int f(w', w'') [ d/dw' (1/(w' - w - i s d)) (1/(w'' - w - i s d)) ]_{s=-1}^{s=1}
//!     = -2 pi i PV int (d1 f(w, w') + d1 f(w', w)) / (w' - w) dw',
//!
//! where d1 is the derivative in the first argument.

use crate::linalg::C64;
use crate::quadrature::Rule1d;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A smooth, effectively compactly supported test function of two frequencies.
pub trait TestFunction2: Sync {
    fn value(&self, a: f64, b: f64) -> C64;
    /// Derivative in the first argument.
    fn d1(&self, a: f64, b: f64) -> C64;
    /// Half-width of a square around `w` outside which f is negligible.
    fn reach(&self, omega: f64) -> f64;
}

/// A (1 + tilt (a - c_a)) exp(-((a - c_a)/s_a)^2 - ((b - c_b)/s_b)^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTestFunction {
    pub amplitude: [f64; 2],
    pub center: [f64; 2],
    pub width: [f64; 2],
    pub tilt: f64,
}

impl GaussianTestFunction {
    fn amp(&self) -> C64 {
        C64::new(self.amplitude[0], self.amplitude[1])
    }

    fn envelope(&self, a: f64, b: f64) -> f64 {
        let x = (a - self.center[0]) / self.width[0];
        let y = (b - self.center[1]) / self.width[1];
        (-x * x - y * y).exp()
    }

    /// A random instance with centres near the origin and widths in [0.5, 1.5].
    pub fn random<R: rand::Rng>(rng: &mut R) -> Self {
        Self {
            amplitude: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            center: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
            width: [rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5)],
            tilt: rng.gen_range(-1.0..1.0),
        }
    }
}

impl TestFunction2 for GaussianTestFunction {
    fn value(&self, a: f64, b: f64) -> C64 {
        self.amp() * (1.0 + self.tilt * (a - self.center[0])) * self.envelope(a, b)
    }

    fn d1(&self, a: f64, b: f64) -> C64 {
        let da = a - self.center[0];
        let s2 = self.width[0] * self.width[0];
        let poly = self.tilt - (1.0 + self.tilt * da) * 2.0 * da / s2;
        self.amp() * poly * self.envelope(a, b)
    }

    fn reach(&self, omega: f64) -> f64 {
        let r = |c: f64, w: f64| (c - omega).abs() + 7.0 * w;
        r(self.center[0], self.width[0]).max(r(self.center[1], self.width[1]))
    }
}

/// Symmetric composite Gauss rule on [-reach, reach], graded geometrically
/// towards 0 down to delta/100 and capped at panel length `max_panel`.
pub fn graded_rule(delta: f64, reach: f64, max_panel: f64, per_panel: usize) -> Rule1d {
    let mut right = vec![0.0];
    let mut x = delta / 100.0;
    while x < reach {
        right.push(x);
        let step = x.min(max_panel);
        x += step;
    }
    right.push(reach);
    let mut breaks: Vec<f64> = right.iter().rev().map(|v| -v).collect();
    breaks.extend_from_slice(&right[1..]);
    Rule1d::composite(&breaks, per_panel)
}

/// The bracketed double integral at finite delta, after moving d/dw' onto f.
pub fn sokhotski_lhs<F: TestFunction2 + ?Sized>(f: &F, omega: f64, delta: f64) -> C64 {
    let reach = f.reach(omega);
    let rule = graded_rule(delta, reach, 0.1, 8);
    let d2 = delta * delta;
    let mut acc = C64::from(0.0);
    for (&a, &wa) in rule.nodes.iter().zip(&rule.weights) {
        let la = a * a + d2;
        let mut inner = C64::from(0.0);
        for (&b, &wb) in rule.nodes.iter().zip(&rule.weights) {
            let im = delta * (a + b) / (la * (b * b + d2));
            inner += f.d1(omega + a, omega + b) * (wb * im);
        }
        acc += inner * wa;
    }
    acc * C64::new(0.0, -2.0)
}

fn g_sym<F: TestFunction2 + ?Sized>(f: &F, omega: f64, x: f64) -> C64 {
    f.d1(omega, x) + f.d1(x, omega)
}

/// The limit, with the principal value taken over symmetric points w +- t.
pub fn sokhotski_rhs<F: TestFunction2 + ?Sized>(f: &F, omega: f64) -> C64 {
    let reach = f.reach(omega);
    let panels = (reach / 0.1).ceil() as usize;
    let breaks: Vec<f64> = (0..=panels).map(|k| reach * k as f64 / panels as f64).collect();
    let rule = Rule1d::composite(&breaks, 16);
    let mut acc = C64::from(0.0);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += (g_sym(f, omega, omega + t) - g_sym(f, omega, omega - t)) * (w / t);
    }
    acc * C64::new(0.0, -2.0 * PI)
}

/// Independent evaluation of the limit: singularity subtraction and composite
/// Simpson on a uniform grid.
pub fn sokhotski_rhs_oracle<F: TestFunction2 + ?Sized>(f: &F, omega: f64, intervals: usize) -> C64 {
    let reach = f.reach(omega);
    let n = intervals + intervals % 2;
    let h = 2.0 * reach / n as f64;
    let g0 = g_sym(f, omega, omega);
    let eps = 1e-5;
    let slope = (g_sym(f, omega, omega + eps) - g_sym(f, omega, omega - eps)) / (2.0 * eps);
    let mut acc = C64::from(0.0);
    for k in 0..=n {
        let x = -reach + k as f64 * h;
        let v = if k == n / 2 { slope } else { (g_sym(f, omega, omega + x) - g0) / x };
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += v * w;
    }
    // the subtracted constant integrates to zero over the symmetric interval
    acc * (h / 3.0) * C64::new(0.0, -2.0 * PI)
}

/// Least-squares slope of log(err) against log(delta).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SokhotskiStudy {
    pub omega: f64,
    pub deltas: Vec<f64>,
    pub lhs: Vec<[f64; 2]>,
    pub rhs: [f64; 2],
    pub oracle: [f64; 2],
    pub errors: Vec<f64>,
    pub slope: f64,
}

pub fn sokhotski_study<F: TestFunction2 + ?Sized>(f: &F, omega: f64, deltas: &[f64]) -> SokhotskiStudy {
    let rhs = sokhotski_rhs(f, omega);
    let oracle = sokhotski_rhs_oracle(f, omega, 40_000);
    let lhs: Vec<C64> = deltas.iter().map(|&d| sokhotski_lhs(f, omega, d)).collect();
    let errors: Vec<f64> = lhs.iter().map(|l| (l - rhs).norm()).collect();
    SokhotskiStudy {
        omega,
        deltas: deltas.to_vec(),
        lhs: lhs.iter().map(|c| [c.re, c.im]).collect(),
        rhs: [rhs.re, rhs.im],
        oracle: [oracle.re, oracle.im],
        slope: log_log_slope(deltas, &errors),
        errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Zero;
    impl TestFunction2 for Zero {
        fn value(&self, _: f64, _: f64) -> C64 {
            C64::from(0.0)
        }
        fn d1(&self, _: f64, _: f64) -> C64 {
            C64::from(0.0)
        }
        fn reach(&self, _: f64) -> f64 {
            1.0
        }
    }

    /// (a - w) exp(-(a - w)^2 - (b - w)^2): d1 f is even around w, so the limit vanishes.
    struct OddAround(f64);
    impl TestFunction2 for OddAround {
        fn value(&self, a: f64, b: f64) -> C64 {
            let (x, y) = (a - self.0, b - self.0);
            C64::from(x * (-x * x - y * y).exp())
        }
        fn d1(&self, a: f64, b: f64) -> C64 {
            let (x, y) = (a - self.0, b - self.0);
            C64::from((1.0 - 2.0 * x * x) * (-x * x - y * y).exp())
        }
        fn reach(&self, _: f64) -> f64 {
            7.0
        }
    }

    #[test]
    fn trivial_and_symmetric_cases() {
        assert_eq!(sokhotski_rhs(&Zero, 0.0), C64::from(0.0));
        assert_eq!(sokhotski_lhs(&Zero, 0.0, 0.1), C64::from(0.0));
        let f = OddAround(0.3);
        assert!(sokhotski_rhs(&f, 0.3).norm() < 1e-14);
        assert!(sokhotski_rhs_oracle(&f, 0.3, 2000).norm() < 1e-12);
    }

    #[test]
    fn derivative_is_consistent() {
        let f = GaussianTestFunction { amplitude: [0.4, -0.7], center: [0.2, -0.1], width: [0.8, 1.1], tilt: 0.5 };
        let h = 1e-5;
        let fd = (f.value(0.3 + h, 0.2) - f.value(0.3 - h, 0.2)) / (2.0 * h);
        assert!((fd - f.d1(0.3, 0.2)).norm() < 1e-9);
    }

    #[test]
    fn first_order_convergence() {
        let f = GaussianTestFunction { amplitude: [1.0, 0.3], center: [0.3, -0.2], width: [1.0, 0.7], tilt: 0.4 };
        let study = sokhotski_study(&f, 0.0, &[1e-1, 1e-2, 1e-3, 1e-4]);
        let rhs = C64::new(study.rhs[0], study.rhs[1]);
        let oracle = C64::new(study.oracle[0], study.oracle[1]);
        assert!((rhs - oracle).norm() < 1e-6, "{rhs} vs {oracle}");
        assert!((study.slope - 1.0).abs() < 0.2, "{study:?}");
    }
}
