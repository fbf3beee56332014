//! Spectral kernels of the free Dirac Hamiltonian H = -i g0 g^k d_k + g0 m.
//!
//! F_w(x, y) is the density of the spectral measure of H at w, as an
//! equal-time kernel in r = x - y:
//!
//!   F_w(r) = a(w) [ (w + m g0) S(r) + i T(r) r_j g^j g0 ],   a = sgn(w) / (2 pi)^3,
//!
//! with S = 2 pi sin(k r)/r, T = S'(r)/r and k = sqrt(w^2 - m^2). F vanishes in
//! the gap |w| < m and below the hard cut-off w <= -1/eps.

use crate::linalg::{build_gamma_set, FourVector, GammaSet, SpinorMatrix, C64, I};
use crate::quadrature::SphereRule;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

pub fn gammas() -> &'static GammaSet {
    static G: OnceLock<GammaSet> = OnceLock::new();
    G.get_or_init(build_gamma_set)
}

/// Frequently used products: g^j g0 and i g^j g0 for j = 1..3.
struct Basis {
    g0: SpinorMatrix,
    i_gj_g0: [SpinorMatrix; 3],
}

fn basis() -> &'static Basis {
    static B: OnceLock<Basis> = OnceLock::new();
    B.get_or_init(|| {
        let g = gammas();
        Basis { g0: g.gamma[0], i_gj_g0: std::array::from_fn(|j| (g.gamma[j + 1] * g.gamma[0]).scale(I)) }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralKernelParams {
    pub m: f64,
    pub eps: f64,
}

impl SpectralKernelParams {
    pub fn new(m: f64, eps: f64) -> Self {
        Self { m, eps }
    }

    /// Theta(1 + eps w), with Theta(0) = 0.
    pub fn gate_open(&self, omega: f64) -> bool {
        1.0 + self.eps * omega > 0.0
    }

    /// sqrt(w^2 - m^2) when the shell is non-empty and the gate is open.
    pub fn kappa(&self, omega: f64) -> Option<f64> {
        let k2 = omega * omega - self.m * self.m;
        (k2 >= 0.0 && self.gate_open(omega)).then(|| k2.sqrt())
    }

    pub fn prefactor(&self, omega: f64) -> f64 {
        omega.signum() / (2.0 * PI).powi(3)
    }
}

/// Radial scalars S, T = S'/r and U = (S'' - T)/r^2 at distance r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial {
    pub s: f64,
    pub t: f64,
    pub u: f64,
}

/// Below this value of k r the radial functions use their Taylor series.
pub const SERIES_THRESHOLD: f64 = 0.1;

pub fn radial(kappa: f64, r: f64) -> Radial {
    let x = kappa * r;
    let tp = 2.0 * PI;
    if x < SERIES_THRESHOLD {
        let x2 = x * x;
        let j0 = 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)));
        let d = -1.0 / 3.0 + x2 * (1.0 / 30.0 - x2 * (1.0 / 840.0 - x2 * (1.0 / 45360.0 - x2 / 3991680.0)));
        let e = 1.0 / 15.0 - x2 * (1.0 / 210.0 - x2 * (1.0 / 7560.0 - x2 / 498960.0));
        return Radial { s: tp * kappa * j0, t: tp * kappa.powi(3) * d, u: tp * kappa.powi(5) * e };
    }
    let (sn, cs) = x.sin_cos();
    let j0 = sn / x;
    let j0p_over_x = (x * cs - sn) / (x * x * x);
    let e = (-j0 - 3.0 * j0p_over_x) / (x * x);
    Radial { s: tp * kappa * j0, t: tp * kappa.powi(3) * j0p_over_x, u: tp * kappa.powi(5) * e }
}

fn norm(r: [f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// Coefficients of F in the basis {Id, g0, i g^j g0}: F = c_id Id + c_g0 g0 + c_j (i g^j g0).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelCoeffs {
    pub id: f64,
    pub g0: f64,
    pub spatial: [f64; 3],
}

impl KernelCoeffs {
    pub fn matrix(&self) -> SpinorMatrix {
        let b = basis();
        let mut m = SpinorMatrix::scaled_identity(C64::from(self.id));
        m.axpy(C64::from(self.g0), &b.g0);
        for j in 0..3 {
            m.axpy(C64::from(self.spatial[j]), &b.i_gj_g0[j]);
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.id == 0.0 && self.g0 == 0.0 && self.spatial == [0.0; 3]
    }

    /// Coefficients in the order of [`kernel_basis`].
    pub fn to_array(&self) -> [f64; 5] {
        [self.id, self.g0, self.spatial[0], self.spatial[1], self.spatial[2]]
    }
}

/// {Id, g0, i g^1 g0, i g^2 g0, i g^3 g0}.
pub fn kernel_basis() -> [SpinorMatrix; 5] {
    let b = basis();
    [SpinorMatrix::identity(), b.g0, b.i_gj_g0[0], b.i_gj_g0[1], b.i_gj_g0[2]]
}

/// F_w(r) and its derivatives d/dr^k, all in the {Id, g0, i g^j g0} basis.
/// Returns `None` when the shell is empty or the gate is closed.
pub fn kernel_coeffs(omega: f64, r: [f64; 3], p: &SpectralKernelParams) -> Option<(KernelCoeffs, [KernelCoeffs; 3])> {
    let kappa = p.kappa(omega)?;
    if kappa == 0.0 {
        return None;
    }
    let a = p.prefactor(omega);
    let rad = radial(kappa, norm(r));
    let f = KernelCoeffs { id: a * omega * rad.s, g0: a * p.m * rad.s, spatial: r.map(|c| a * rad.t * c) };
    let grad = std::array::from_fn(|k| KernelCoeffs {
        id: a * omega * rad.t * r[k],
        g0: a * p.m * rad.t * r[k],
        spatial: std::array::from_fn(|j| a * (if j == k { rad.t } else { 0.0 } + rad.u * r[k] * r[j])),
    });
    Some((f, grad))
}

/// Equal-time kernel F_w(x, y) for r = x - y.
pub fn f_kernel(omega: f64, r: [f64; 3], p: &SpectralKernelParams) -> SpinorMatrix {
    kernel_coeffs(omega, r, p).map(|(f, _)| f.matrix()).unwrap_or_default()
}

/// d/dy^k F_w(x, y) = -d/dr^k F_w(r).
pub fn f_kernel_grad_y(omega: f64, r: [f64; 3], p: &SpectralKernelParams) -> [SpinorMatrix; 3] {
    match kernel_coeffs(omega, r, p) {
        Some((_, g)) => g.map(|c| -c.matrix()),
        None => [SpinorMatrix::zero(); 3],
    }
}

/// Kernel at time offset dt: the equal-time kernel times exp(-i w dt).
pub fn f_kernel_time(omega: f64, r: [f64; 3], dt: f64, p: &SpectralKernelParams) -> SpinorMatrix {
    f_kernel(omega, r, p).scale(C64::from_polar(1.0, -omega * dt))
}

/// F_w(x, x) = (sgn w / (4 pi^2)) k (w + m g0).
pub fn f_diag(omega: f64, p: &SpectralKernelParams) -> SpinorMatrix {
    match p.kappa(omega) {
        Some(k) if k > 0.0 => {
            let mut m = SpinorMatrix::scaled_identity(C64::from(omega));
            m.axpy(C64::from(p.m), gammas().g0());
            m.scale_re(omega.signum() * k / (4.0 * PI * PI))
        }
        _ => SpinorMatrix::zero(),
    }
}

/// d/dy^mu F_w(x, y) at y = x: (i sgn w / (12 pi^2)) k^3 g^mu g0, mu in 1..=3.
pub fn f_grad_diag(omega: f64, mu: usize, p: &SpectralKernelParams) -> SpinorMatrix {
    assert!((1..=3).contains(&mu), "spatial index expected");
    match p.kappa(omega) {
        Some(k) if k > 0.0 => basis().i_gj_g0[mu - 1].scale_re(omega.signum() * k.powi(3) / (12.0 * PI * PI)),
        _ => SpinorMatrix::zero(),
    }
}

/// Shell quadrature a (k/2) int dOmega (w + H(k n)) exp(i k n.r): the oracle for [`f_kernel`].
pub fn f_kernel_quad(omega: f64, r: [f64; 3], p: &SpectralKernelParams, rule: &SphereRule) -> SpinorMatrix {
    let Some(kappa) = p.kappa(omega) else {
        return SpinorMatrix::zero();
    };
    let mut acc = SpinorMatrix::zero();
    for (n, &w) in rule.directions.iter().zip(&rule.weights) {
        let k = n.map(|c| kappa * c);
        let phase = C64::from_polar(w, k[0] * r[0] + k[1] * r[1] + k[2] * r[2]);
        let mut sym = hamiltonian_symbol(k, p.m);
        for d in 0..4 {
            sym.0[d][d] += omega;
        }
        acc.axpy(phase, &sym);
    }
    acc.scale_re(p.prefactor(omega) * 0.5 * kappa)
}

/// H(k) = g0 (g^j k^j + m), the action of H on exp(i k.x).
pub fn hamiltonian_symbol(k: [f64; 3], m: f64) -> SpinorMatrix {
    let g = gammas();
    let mut inner = SpinorMatrix::scaled_identity(C64::from(m));
    for j in 0..3 {
        inner.axpy(C64::from(k[j]), &g.gamma[j + 1]);
    }
    *g.g0() * inner
}

pub fn energy(k: [f64; 3], m: f64) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + m * m).sqrt()
}

/// On-shell four-momentum (sigma E, k) on the sheet `sigma = +-1`.
pub fn on_shell(k: [f64; 3], sigma: f64, m: f64) -> FourVector {
    FourVector::from_parts(sigma * energy(k, m), k)
}

/// k-slash + m for an on-shell momentum.
pub fn shell_matrix(k: &FourVector, m: f64) -> SpinorMatrix {
    let mut s = gammas().slash(k);
    for d in 0..4 {
        s.0[d][d] += m;
    }
    s
}

/// Spectral projector of H(k) onto the eigenvalue sigma E: sigma (k-slash + m) g0 / (2E).
pub fn shell_projector(k: [f64; 3], sigma: f64, m: f64) -> SpinorMatrix {
    let e = energy(k, m);
    (shell_matrix(&on_shell(k, sigma, m), m) * *gammas().g0()).scale_re(sigma / (2.0 * e))
}

/// g(H(k)) = sum over sheets of g(sigma E) P_sigma.
pub fn functional_calculus<G: Fn(f64) -> C64>(g: G, k: [f64; 3], m: f64) -> SpinorMatrix {
    let e = energy(k, m);
    let mut out = SpinorMatrix::zero();
    for sigma in [1.0, -1.0] {
        out.axpy(g(sigma * e), &shell_projector(k, sigma, m));
    }
    out
}

/// Largest residual of the on-shell product rule
/// sigma_g g0 sigma_h / (2E) = sgn(k0) (k-slash + m) g h, with sigma_g = g(k0) sgn(k0) (k-slash + m),
/// and of the cross-sheet orthogonality (k+ + m) g0 (k- + m) = 0, over the sampled momenta.
pub fn symbol_multiply_check<G, H>(g: G, h: H, k_samples: &[[f64; 3]], m: f64) -> f64
where
    G: Fn(f64) -> C64,
    H: Fn(f64) -> C64,
{
    let g0 = *gammas().g0();
    let mut worst: f64 = 0.0;
    for &k in k_samples {
        let e = energy(k, m);
        for sigma in [1.0, -1.0] {
            let kk = on_shell(k, sigma, m);
            let km = shell_matrix(&kk, m);
            let sg = km.scale(g(kk[0]) * sigma);
            let sh = km.scale(h(kk[0]) * sigma);
            let lhs = (sg * g0 * sh).scale_re(1.0 / (2.0 * e));
            let rhs = km.scale(g(kk[0]) * h(kk[0]) * sigma);
            worst = worst.max(lhs.dist(&rhs) / (1.0 + rhs.max_abs()));
        }
        let cross = shell_matrix(&on_shell(k, 1.0, m), m) * g0 * shell_matrix(&on_shell(k, -1.0, m), m);
        worst = worst.max(cross.max_abs() / (1.0 + e * e));
    }
    worst
}

/// Residuals of the identity-symbol and conjugate-symbol relations:
/// id(H) = H(k), the eigen-structure H P_sigma = sigma E P_sigma with tr P_sigma = 2,
/// and conj(g)(H) = g(H)^dagger.
pub fn calculus_residuals<G: Fn(f64) -> C64>(g: G, k_samples: &[[f64; 3]], m: f64) -> (f64, f64, f64) {
    let (mut id_res, mut eig_res, mut conj_res): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &k in k_samples {
        let e = energy(k, m);
        let hk = hamiltonian_symbol(k, m);
        let id_h = functional_calculus(C64::from, k, m);
        id_res = id_res.max(id_h.dist(&hk) / (1.0 + e));
        for sigma in [1.0, -1.0] {
            let pr = shell_projector(k, sigma, m);
            eig_res = eig_res.max((hk * pr).dist(&pr.scale_re(sigma * e)) / (1.0 + e));
            eig_res = eig_res.max((pr * pr).dist(&pr));
            eig_res = eig_res.max((pr.trace() - C64::from(2.0)).norm());
            eig_res = eig_res.max(commutator_norm(&hk, &pr) / (1.0 + e));
        }
        let gh = functional_calculus(&g, k, m);
        let gbar = functional_calculus(|w| g(w).conj(), k, m);
        conj_res = conj_res.max(gbar.dist(&gh.adjoint()) / (1.0 + gh.max_abs()));
    }
    (id_res, eig_res, conj_res)
}

fn commutator_norm(a: &SpinorMatrix, b: &SpinorMatrix) -> f64 {
    (*a * *b - *b * *a).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SpectralKernelParams {
        SpectralKernelParams::new(1.0, 0.01)
    }

    #[test]
    fn diag_examples() {
        let p = params();
        assert!(f_diag(-1.0, &p).is_zero());
        assert!(f_diag(0.5, &p).is_zero());
        assert!(f_diag(-150.0, &p).is_zero());
        let d = f_diag(-2.0, &p).diagonal();
        let want = [0.043869, 0.043869, 0.131607, 0.131607];
        for i in 0..4 {
            assert!((d[i].re - want[i]).abs() < 1e-4, "{i}: {}", d[i].re);
        }
        let g = gammas();
        let expected = (SpinorMatrix::scaled_identity(C64::from(-2.0)) + g.gamma[0]).scale_re(-(3f64.sqrt()) / (4.0 * PI * PI));
        assert!(f_diag(-2.0, &p).dist(&expected) < 1e-15);
    }

    #[test]
    fn grad_diag_example() {
        let p = params();
        let g = gammas();
        // closed form (i sqrt3 / (4 pi^2)) g_1 g_0 with g_1 = -g^1
        let closed = (-g.gamma[1] * g.gamma[0]).scale(I * 3f64.sqrt() / (4.0 * PI * PI));
        assert!(f_grad_diag(-2.0, 1, &p).dist(&closed) < 1e-15);
        assert!(f_grad_diag(-1.0, 2, &p).is_zero());
        assert!(f_grad_diag(-101.0, 3, &p).is_zero());
    }

    #[test]
    fn kernel_continuity_and_quadrature() {
        let p = params();
        let rule = SphereRule::standard();
        assert!(f_kernel(-2.0, [0.0; 3], &p).dist(&f_diag(-2.0, &p)) < 1e-15);
        let r = [0.7, 0.0, 0.0];
        let a = f_kernel(-2.0, r, &p);
        let b = f_kernel_quad(-2.0, r, &p, &rule);
        assert!(a.dist(&b) < 1e-12, "{}", a.dist(&b));
        let r = [0.3, -1.1, 0.5];
        assert!(f_kernel(3.5, r, &p).dist(&f_kernel_quad(3.5, r, &p, &rule)) < 1e-12);
        assert!(f_kernel(0.5, r, &p).is_zero());
    }

    #[test]
    fn radial_series_matches_direct() {
        for kappa in [0.5, 2.0, 7.0] {
            let r = SERIES_THRESHOLD / kappa;
            let below = radial(kappa, r * (1.0 - 1e-12));
            let x = kappa * r;
            let (sn, cs) = x.sin_cos();
            let j0 = sn / x;
            let d = (x * cs - sn) / x.powi(3);
            let e = (-j0 - 3.0 * d) / (x * x);
            let tp = 2.0 * PI;
            assert!((below.s - tp * kappa * j0).abs() < 1e-12 * kappa);
            assert!((below.t - tp * kappa.powi(3) * d).abs() < 1e-11 * kappa.powi(3));
            assert!((below.u - tp * kappa.powi(5) * e).abs() < 1e-9 * kappa.powi(5));
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let p = params();
        let r = [0.4, 0.2, -0.3];
        let h = 1e-5;
        let g = f_kernel_grad_y(2.7, r, &p);
        for k in 0..3 {
            let mut a = r;
            let mut b = r;
            a[k] += h;
            b[k] -= h;
            let fd = (f_kernel(2.7, a, &p) - f_kernel(2.7, b, &p)).scale_re(-0.5 / h);
            assert!(fd.dist(&g[k]) < 1e-8);
        }
    }

    #[test]
    fn symbol_checks() {
        let ks = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.3, -2.0, 0.7]];
        assert!(symbol_multiply_check(|_| C64::from(1.0), |_| C64::from(1.0), &ks, 1.0) < 1e-12);
        let (a, b, c) = calculus_residuals(|w| C64::new(w.sin(), w * w), &ks, 1.0);
        assert!(a < 1e-12 && b < 1e-12 && c < 1e-12);
        let h0 = hamiltonian_symbol([0.0; 3], 1.0);
        assert_eq!(h0, *gammas().g0());
    }
}
