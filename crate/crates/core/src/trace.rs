//! Traces of products of spectral kernels and first-order operators, computed
//! as integrals of kernel diagonals over the compact set V.

use crate::field::FieldSource;
use crate::linalg::{SpinorMatrix, C64};
use crate::operators::{coeffs_at, OperatorCoeffs, OperatorKind};
use crate::par::ExecPolicy;
use crate::quadrature::Rule1d;
use crate::spectral::{f_diag, f_grad_diag, kernel_basis, kernel_coeffs, SpectralKernelParams};
use serde::{Deserialize, Serialize};

/// Tensor-product Gauss rule on the cube [-r, r]^3, restricted to the closed ball of radius r.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl VolumeRule {
    pub fn ball(radius: f64, level: usize) -> Self {
        let r1 = Rule1d::gauss_on(level, -radius, radius);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (i, &x) in r1.nodes.iter().enumerate() {
            for (j, &y) in r1.nodes.iter().enumerate() {
                for (k, &z) in r1.nodes.iter().enumerate() {
                    if x * x + y * y + z * z <= radius * radius {
                        points.push([x, y, z]);
                        weights.push(r1.weights[i] * r1.weights[j] * r1.weights[k]);
                    }
                }
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Integral of Tr K(x, x) over the rule.
pub fn trace_diag<K: Fn([f64; 3], [f64; 3]) -> SpinorMatrix>(kernel: K, rule: &VolumeRule) -> C64 {
    rule.points.iter().zip(&rule.weights).map(|(p, &w)| kernel(*p, *p).trace() * w).sum()
}

/// Operator coefficients of dA (`delta`) and dA/dt (`dot`) sampled at the nodes of a volume rule.
#[derive(Debug, Clone)]
pub struct SampledOperators {
    pub rule: VolumeRule,
    pub delta: Vec<OperatorCoeffs>,
    pub dot: Vec<OperatorCoeffs>,
}

impl SampledOperators {
    pub fn from_source<S: FieldSource + ?Sized>(src: &S, m: f64, rule: VolumeRule, policy: ExecPolicy) -> Self {
        let pairs = policy.map(rule.len(), |k| {
            let p = rule.points[k];
            (coeffs_at(src, OperatorKind::Delta, m, p), coeffs_at(src, OperatorKind::TimeDerivative, m, p))
        });
        let (delta, dot) = pairs.into_iter().unzip();
        Self { rule, delta, dot }
    }

    /// Both operators equal to multiplication by phi(x) Id.
    pub fn multiplication<P: Fn([f64; 3]) -> f64>(phi: P, rule: VolumeRule) -> Self {
        let delta: Vec<OperatorCoeffs> = rule
            .points
            .iter()
            .map(|&p| {
                let v = phi(p);
                OperatorCoeffs { c: SpinorMatrix::scaled_identity(C64::from(v)), ..OperatorCoeffs::zero() }
            })
            .collect();
        Self { rule, dot: delta.clone(), delta }
    }

    pub fn is_trivial(&self) -> bool {
        self.delta.iter().chain(&self.dot).all(OperatorCoeffs::is_zero)
    }
}

/// -int_V Tr[(dA/dt F_w)(x, x)] d^3x from the closed-form kernel diagonals.
pub fn b1_at(ops: &SampledOperators, omega: f64, params: &SpectralKernelParams) -> f64 {
    let fd = f_diag(omega, params);
    let fg = [1, 2, 3].map(|mu| f_grad_diag(omega, mu, params));
    let mut acc = C64::from(0.0);
    for (c, &w) in ops.dot.iter().zip(&ops.rule.weights) {
        if c.is_zero() {
            continue;
        }
        // d/dx F(x, y) at y = x is minus the y-derivative.
        let mut m = c.c * fd;
        for j in 0..3 {
            m = m - c.d[j] * fg[j];
        }
        acc += m.trace() * w;
    }
    -acc.re
}

pub fn b1(ops: &SampledOperators, params: &SpectralKernelParams) -> f64 {
    b1_at(ops, -params.m, params)
}

const NB: usize = 20;

/// Flattened 4x4 complex matrix.
#[derive(Clone, Copy)]
struct Flat {
    re: [f64; 16],
    im: [f64; 16],
}

impl Flat {
    const ZERO: Flat = Flat { re: [0.0; 16], im: [0.0; 16] };

    fn from_matrix(m: &SpinorMatrix, transpose: bool) -> Self {
        let mut f = Self::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                let v = if transpose { m.0[j][i] } else { m.0[i][j] };
                f.re[4 * i + j] = v.re;
                f.im[4 * i + j] = v.im;
            }
        }
        f
    }

    /// Tr(A B) when `self` = A and `other` = B transposed.
    #[inline]
    fn dot(&self, other: &Flat) -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..16 {
            re += self.re[k] * other.re[k] - self.im[k] * other.im[k];
            im += self.re[k] * other.im[k] + self.im[k] * other.re[k];
        }
        (re, im)
    }
}

/// Precomputed products B_b E and B_b D^k for the right action of an operator
/// on a kernel expanded in the spectral basis B_b.
struct Composer {
    mats: [Flat; NB],
}

impl Composer {
    fn new(op: &OperatorCoeffs, transpose: bool) -> Self {
        let basis = kernel_basis();
        let e = op.adjoint_zeroth();
        let mut mats = [Flat::ZERO; NB];
        for b in 0..5 {
            mats[b] = Flat::from_matrix(&(basis[b] * e), transpose);
            for k in 0..3 {
                mats[5 + 5 * k + b] = Flat::from_matrix(&(basis[b] * op.d[k]), transpose);
            }
        }
        Self { mats }
    }

    fn compose(&self, coef: &[f64; NB]) -> Flat {
        let mut out = Flat::ZERO;
        for (c, m) in coef.iter().zip(&self.mats) {
            if *c == 0.0 {
                continue;
            }
            for k in 0..16 {
                out.re[k] += c * m.re[k];
                out.im[k] += c * m.im[k];
            }
        }
        out
    }
}

/// Kernel and its r-gradient in the spectral basis, flattened for [`Composer`].
fn kernel_vector(omega: f64, r: [f64; 3], params: &SpectralKernelParams) -> Option<[f64; NB]> {
    let (f, g) = kernel_coeffs(omega, r, params)?;
    let mut out = [0.0; NB];
    out[..5].copy_from_slice(&f.to_array());
    for k in 0..3 {
        out[5 + 5 * k..10 + 5 * k].copy_from_slice(&g[k].to_array());
    }
    Some(out)
}

/// Points processed per work item; fixed so that the summation order does not
/// depend on the worker count.
const CHUNK: usize = 4;

/// P[i][j] = tr(F_{w_i} X F_{w'_j} Y) for all requested pairs, as
/// int int Tr[(F X)(x, y) (F' Y)(y, x)] with both compositions in integration-by-parts form.
/// Entries with `needed(i, j) == false` are left at zero.
#[allow(clippy::too_many_arguments)]
pub fn trace_table<N>(
    rule: &VolumeRule,
    x_op: &[OperatorCoeffs],
    y_op: &[OperatorCoeffs],
    omegas: &[f64],
    omegas_prime: &[f64],
    params: &SpectralKernelParams,
    needed: N,
    policy: ExecPolicy,
) -> Vec<Vec<C64>>
where
    N: Fn(usize, usize) -> bool + Sync,
{
    let (nl, nr) = (omegas.len(), omegas_prime.len());
    let mask: Vec<bool> = (0..nl * nr).map(|k| needed(k / nr, k % nr)).collect();
    // x ranges over the support of Y, y over the support of X.
    let xs: Vec<usize> = (0..rule.len()).filter(|&k| !y_op[k].is_zero()).collect();
    let ys: Vec<usize> = (0..rule.len()).filter(|&k| !x_op[k].is_zero()).collect();
    let left: Vec<Composer> = ys.iter().map(|&k| Composer::new(&x_op[k], false)).collect();
    let right: Vec<Composer> = xs.iter().map(|&k| Composer::new(&y_op[k], true)).collect();
    let n_chunks = xs.len().div_ceil(CHUNK);
    let partial = policy.map(n_chunks, |c| {
        let mut acc_re = vec![0.0; nl * nr];
        let mut acc_im = vec![0.0; nl * nr];
        let mut lk: Vec<Option<Flat>> = vec![None; nl];
        let mut rk: Vec<Option<Flat>> = vec![None; nr];
        for a in c * CHUNK..((c + 1) * CHUNK).min(xs.len()) {
            let x = rule.points[xs[a]];
            for (b, &yk) in ys.iter().enumerate() {
                let y = rule.points[yk];
                let w = rule.weights[xs[a]] * rule.weights[yk];
                let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                let rm = r.map(|v| -v);
                for (i, om) in omegas.iter().enumerate() {
                    lk[i] = kernel_vector(*om, r, params).map(|v| left[b].compose(&v));
                }
                for (j, om) in omegas_prime.iter().enumerate() {
                    rk[j] = kernel_vector(*om, rm, params).map(|v| right[a].compose(&v));
                }
                for (i, l) in lk.iter().enumerate() {
                    let Some(l) = l else { continue };
                    for (j, rr) in rk.iter().enumerate() {
                        let idx = i * nr + j;
                        if !mask[idx] {
                            continue;
                        }
                        if let Some(rr) = rr {
                            let (re, im) = l.dot(rr);
                            acc_re[idx] += w * re;
                            acc_im[idx] += w * im;
                        }
                    }
                }
            }
        }
        (acc_re, acc_im)
    });
    let mut out = vec![vec![C64::from(0.0); nr]; nl];
    for (re, im) in partial {
        for i in 0..nl {
            for j in 0..nr {
                out[i][j] += C64::new(re[i * nr + j], im[i * nr + j]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// tr(F_w dA F_w' dA).
    Static,
    /// d/dt of the static trace: tr(F_w A' F_w' dA) + tr(F_w dA F_w' A').
    TimeDerivative,
}

/// Trace of Q(w, w') or of its time derivative. Exactly zero when either
/// frequency is in the gap or behind the gate.
pub fn trace_q(
    omega: f64,
    omega_prime: f64,
    ops: &SampledOperators,
    mode: TraceMode,
    params: &SpectralKernelParams,
    policy: ExecPolicy,
) -> C64 {
    let live = |w: f64| params.kappa(w).is_some_and(|k| k > 0.0);
    if !live(omega) || !live(omega_prime) {
        return C64::from(0.0);
    }
    let one = |x: &[OperatorCoeffs], y: &[OperatorCoeffs]| {
        trace_table(&ops.rule, x, y, &[omega], &[omega_prime], params, |_, _| true, policy)[0][0]
    };
    match mode {
        TraceMode::Static => one(&ops.delta, &ops.delta),
        TraceMode::TimeDerivative => one(&ops.dot, &ops.delta) + one(&ops.delta, &ops.dot),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{apply_to_kernel, Side, SpectralKernel};

    #[test]
    fn normalized_bump_trace() {
        let bump = |p: [f64; 3]| {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        };
        let fine = VolumeRule::ball(1.0, 40);
        let norm: f64 = fine.points.iter().zip(&fine.weights).map(|(p, w)| bump(*p).powi(2) * w).sum();
        let t = trace_diag(|x, y| SpinorMatrix::scaled_identity(C64::from(bump(x) * bump(y) / norm)), &fine);
        assert!((t.re - 4.0).abs() < 1e-12);
    }

    #[test]
    fn table_matches_generic_composition() {
        let params = SpectralKernelParams::new(1.0, 0.01);
        let rule = VolumeRule::ball(0.5, 4);
        let phi = |p: [f64; 3]| (-(p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]) * 4.0).exp();
        let mut ops = SampledOperators::multiplication(phi, rule.clone());
        // give dA a first-order part
        for (k, c) in ops.delta.iter_mut().enumerate() {
            let p = rule.points[k];
            c.d[0] = SpinorMatrix::scaled_identity(C64::new(0.0, phi(p)));
            c.div_d = SpinorMatrix::scaled_identity(C64::new(0.0, -8.0 * p[0] * phi(p)));
            c.c += c.div_d.scale_re(0.5);
        }
        let (w, wp) = (-2.5, 3.0);
        let fast = trace_table(&rule, &ops.dot, &ops.delta, &[w], &[wp], &params, |_, _| true, ExecPolicy::Sequential)[0][0];
        let k1 = SpectralKernel { omega: w, params };
        let k2 = SpectralKernel { omega: wp, params };
        let coeff = |ops: &Vec<OperatorCoeffs>| {
            let pts = rule.points.clone();
            let ops = ops.clone();
            move |p: [f64; 3]| {
                let k = pts.iter().position(|q| *q == p).unwrap();
                ops[k]
            }
        };
        let a = apply_to_kernel(coeff(&ops.dot), &k1, Side::RightAdjoint);
        let b = apply_to_kernel(coeff(&ops.delta), &k2, Side::RightAdjoint);
        let mut slow = C64::from(0.0);
        for (x, wx) in rule.points.iter().zip(&rule.weights) {
            for (y, wy) in rule.points.iter().zip(&rule.weights) {
                slow += (a(*x, *y) * b(*y, *x)).trace() * (wx * wy);
            }
        }
        assert!((fast - slow).norm() < 1e-12 * (1.0 + slow.norm()), "{fast} vs {slow}");
    }

    #[test]
    fn b1_matches_generic_diagonal() {
        let params = SpectralKernelParams::new(1.0, 0.01);
        let src = crate::field::AnalyticField::new(
            0.1,
            crate::field::ScalarFamily::Gaussian { amplitude: 1.0, center: [0.05, 0.0, 0.0], sigma: 0.1 },
            [
                crate::field::ScalarFamily::Gaussian { amplitude: 1.0, center: [0.0; 3], sigma: 0.08 },
                crate::field::ScalarFamily::Zero,
                crate::field::ScalarFamily::Zero,
            ],
            0.3,
        );
        let ops = SampledOperators::from_source(&src, 1.0, VolumeRule::ball(0.3, 6), ExecPolicy::Sequential);
        assert_eq!(b1(&ops, &params), 0.0);
        let w = -3.0;
        let k = SpectralKernel { omega: w, params };
        let rule = ops.rule.clone();
        let left = apply_to_kernel(|p| crate::operators::coeffs_at(&src, OperatorKind::TimeDerivative, 1.0, p), &k, Side::Left);
        let generic = -trace_diag(left, &rule).re;
        assert!((b1_at(&ops, w, &params) - generic).abs() < 1e-12 * (1.0 + generic.abs()));
        assert!(generic.abs() > 1e-8);
    }
}
