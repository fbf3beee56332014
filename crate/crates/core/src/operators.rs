//! First-order differential operators psi -> C psi + D^j d_j psi built from a
//! velocity field u:
//!
//!   A[u] = 1/2 {u^0, H} + (i/2) {u^j, d_j},   H = -i g0 g^j d_j + g0 m,
//!
//! which expands to D^j = -i u^0 g0 g^j + i u^j and
//! C = m u^0 g0 - (i/2) g0 g^j d_j u^0 + (i/2) div u. A[u] is linear in u, so
//! dA = A[u - nu] and dA/dt = A[du/dt].

use crate::dynamics::{dot_u_jet, rhs_first_order_point};
use crate::error::{Error, Result};
use crate::field::{FieldDerivativeStencil, FieldSource, RegularizingField, UPoint};
use crate::grid::SpatialGrid;
use crate::linalg::{FourVector, Spinor, SpinorMatrix, C64, I};
use crate::par::ExecPolicy;
use crate::spectral::{gammas, kernel_coeffs, SpectralKernelParams};
use serde::{Deserialize, Serialize};

/// Coefficients of a first-order operator at one point, with d_j D^j kept
/// alongside for the integration-by-parts (right) action.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OperatorCoeffs {
    pub c: SpinorMatrix,
    pub d: [SpinorMatrix; 3],
    pub div_d: SpinorMatrix,
}

/// -i g0 g^j, cached.
fn minus_i_alpha() -> &'static [SpinorMatrix; 3] {
    static A: std::sync::OnceLock<[SpinorMatrix; 3]> = std::sync::OnceLock::new();
    A.get_or_init(|| std::array::from_fn(|j| gammas().g0_gmu(j + 1).scale(-I)))
}

impl OperatorCoeffs {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The free Dirac Hamiltonian.
    pub fn dirac(m: f64) -> Self {
        Self::from_upoint(&UPoint { u: FourVector([1.0, 0.0, 0.0, 0.0]), du: [[0.0; 4]; 3] }, m)
    }

    pub fn from_upoint(p: &UPoint, m: f64) -> Self {
        let alpha = minus_i_alpha();
        let g0 = gammas().g0();
        let div_u = C64::from(p.du[0][1] + p.du[1][2] + p.du[2][3]);
        let d = std::array::from_fn(|j| {
            let mut dj = alpha[j].scale_re(p.u[0]);
            for k in 0..4 {
                dj.0[k][k] += I * p.u[j + 1];
            }
            dj
        });
        let mut grad_term = SpinorMatrix::zero();
        for j in 0..3 {
            grad_term.axpy(C64::from(p.du[j][0]), &alpha[j]);
        }
        let mut c = g0.scale_re(m * p.u[0]) + grad_term.scale_re(0.5);
        let mut div_d = grad_term;
        for k in 0..4 {
            c.0[k][k] += 0.5 * I * div_u;
            div_d.0[k][k] += I * div_u;
        }
        Self { c, d, div_d }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_zero() && self.div_d.is_zero() && self.d.iter().all(SpinorMatrix::is_zero)
    }

    pub fn max_abs(&self) -> f64 {
        self.d.iter().map(SpinorMatrix::max_abs).fold(self.c.max_abs().max(self.div_d.max_abs()), f64::max)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (0..3).map(|j| self.d[j].dist(&other.d[j])).fold(self.c.dist(&other.c).max(self.div_d.dist(&other.div_d)), f64::max)
    }

    /// C - d_j D^j, the zeroth-order coefficient of the formal right action.
    pub fn adjoint_zeroth(&self) -> SpinorMatrix {
        self.c - self.div_d
    }

    /// (X K)(x, y) = C(x) K + D^j(x) d_{x^j} K.
    pub fn apply_left(&self, k: &SpinorMatrix, grad_x: &[SpinorMatrix; 3]) -> SpinorMatrix {
        let mut out = self.c * *k;
        for j in 0..3 {
            out += self.d[j] * grad_x[j];
        }
        out
    }

    /// (K X)(x, y) = K (C - d_j D^j)(y) - d_{y^j} K D^j(y), for coefficients taken at y.
    pub fn apply_right(&self, k: &SpinorMatrix, grad_y: &[SpinorMatrix; 3]) -> SpinorMatrix {
        let mut out = *k * self.adjoint_zeroth();
        for j in 0..3 {
            out = out - grad_y[j] * self.d[j];
        }
        out
    }

    /// Largest violation of L2 formal symmetry: D^j anti-hermitian and C - C^dagger = d_j D^j.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = (self.c - self.c.adjoint()).dist(&self.div_d);
        for d in &self.d {
            worst = worst.max((*d + d.adjoint()).max_abs());
        }
        worst
    }

    /// psi -> C psi + D^j grad_j psi at one point.
    pub fn apply_spinor(&self, psi: &Spinor, grad: &[Spinor; 3]) -> Spinor {
        let mut out = self.c.apply(psi);
        for j in 0..3 {
            let t = self.d[j].apply(&grad[j]);
            for a in 0..4 {
                out[a] += t[a];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// A[u].
    Full,
    /// A[u] - H.
    Delta,
    /// A[du/dt] with the first-order time derivative of u.
    TimeDerivative,
}

/// Coefficients of the chosen operator at an arbitrary point of a field source.
pub fn coeffs_at<S: FieldSource + ?Sized>(src: &S, kind: OperatorKind, m: f64, p: [f64; 3]) -> OperatorCoeffs {
    let jet = src.jet(p);
    match kind {
        OperatorKind::Full => OperatorCoeffs::from_upoint(&UPoint::from_jet(&jet), m),
        OperatorKind::Delta => {
            let up = UPoint::from_jet(&jet).minus_nu();
            if up.u.0 == [0.0; 4] && up.du.iter().flatten().all(|&v| v == 0.0) {
                return OperatorCoeffs::zero();
            }
            OperatorCoeffs::from_upoint(&up, m)
        }
        OperatorKind::TimeDerivative => {
            let flat = jet.u.iter().all(|c| c.g == [0.0; 3] && c.h == [[0.0; 3]; 3]);
            if flat {
                return OperatorCoeffs::zero();
            }
            OperatorCoeffs::from_upoint(&UPoint::from_jet1(&dot_u_jet(&jet)), m)
        }
    }
}

/// An operator stored as coefficients at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderOperator {
    pub grid: SpatialGrid,
    pub coeffs: Vec<OperatorCoeffs>,
}

impl FirstOrderOperator {
    pub fn at(&self, idx: [usize; 3]) -> &OperatorCoeffs {
        &self.coeffs[self.grid.linear(idx)]
    }

    /// Largest coefficient over nodes strictly outside the ball of radius `r`.
    pub fn max_outside(&self, r: f64) -> f64 {
        (0..self.grid.len())
            .filter(|&k| crate::grid::norm3(self.grid.position(self.grid.unlinear(k))) > r)
            .map(|k| self.coeffs[k].max_abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(OperatorCoeffs::is_zero)
    }

    /// Applies the operator to a grid spinor field with the given stencil.
    /// Nodes within the stencil margin of a face are set to zero.
    pub fn apply(&self, psi: &[Spinor], st: &FieldDerivativeStencil) -> Vec<Spinor> {
        let g = self.grid;
        (0..g.len())
            .map(|k| {
                let idx = g.unlinear(k);
                if !g.inside_margin(idx, st.margin()) {
                    return [C64::from(0.0); 4];
                }
                let grad: [Spinor; 3] = std::array::from_fn(|j| {
                    std::array::from_fn(|a| {
                        let re = st.d1(|i| psi[g.linear(i)][a].re, idx, j);
                        let im = st.d1(|i| psi[g.linear(i)][a].im, idx, j);
                        C64::new(re, im)
                    })
                });
                self.coeffs[k].apply_spinor(&psi[k], &grad)
            })
            .collect()
    }
}

fn is_nu(u: &FourVector) -> bool {
    u.0 == [1.0, 0.0, 0.0, 0.0]
}

fn build_from_points<F>(grid: SpatialGrid, policy: ExecPolicy, node: F) -> Result<FirstOrderOperator>
where
    F: Fn([usize; 3]) -> Result<OperatorCoeffs> + Sync + Send,
{
    let coeffs = policy.map(grid.len(), |k| node(grid.unlinear(k))).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FirstOrderOperator { grid, coeffs })
}

/// u and its gradient at a node; on the outer margin only u = nu is accepted.
fn upoint_or_rest(field: &RegularizingField, idx: [usize; 3], st: &FieldDerivativeStencil) -> Result<UPoint> {
    let u = field.u(idx);
    if !(u[0] > 0.0) || !u.is_future_timelike() {
        return Err(Error::NonTimelikeU { norm: u.norm2() });
    }
    if field.grid.inside_margin(idx, st.margin()) {
        return field.upoint(idx, st);
    }
    if is_nu(&u) {
        return Ok(UPoint { u, du: [[0.0; 4]; 3] });
    }
    Err(Error::MarginViolation { index: idx })
}

pub fn build_a(field: &RegularizingField, st: &FieldDerivativeStencil, m: f64, policy: ExecPolicy) -> Result<FirstOrderOperator> {
    build_from_points(field.grid, policy, |idx| Ok(OperatorCoeffs::from_upoint(&upoint_or_rest(field, idx, st)?, m)))
}

pub fn build_delta_a(field: &RegularizingField, st: &FieldDerivativeStencil, m: f64, policy: ExecPolicy) -> Result<FirstOrderOperator> {
    build_from_points(field.grid, policy, |idx| {
        let p = upoint_or_rest(field, idx, st)?.minus_nu();
        if p.u.0 == [0.0; 4] && p.du.iter().flatten().all(|&v| v == 0.0) {
            return Ok(OperatorCoeffs::zero());
        }
        Ok(OperatorCoeffs::from_upoint(&p, m))
    })
}

/// A[du/dt] with du/dt from the first-order reduction, differentiated with the same stencil.
pub fn build_dot_a(field: &RegularizingField, st: &FieldDerivativeStencil, m: f64, policy: ExecPolicy) -> Result<FirstOrderOperator> {
    let g = field.grid;
    let margin = st.margin();
    let udot: Vec<FourVector> = policy
        .map(g.len(), |k| {
            let idx = g.unlinear(k);
            let p = upoint_or_rest(field, idx, st)?;
            if p.du.iter().flatten().all(|&v| v == 0.0) {
                return Ok(FourVector([0.0; 4]));
            }
            rhs_first_order_point(&p)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    build_from_points(g, policy, |idx| {
        let k = g.linear(idx);
        if !g.inside_margin(idx, 2 * margin) {
            let quiet = udot[k].0 == [0.0; 4] && is_nu(&field.u(idx));
            return if quiet { Ok(OperatorCoeffs::zero()) } else { Err(Error::MarginViolation { index: idx }) };
        }
        let du = std::array::from_fn(|j| std::array::from_fn(|c| st.d1(|i| udot[g.linear(i)][c], idx, j)));
        let p = UPoint { u: udot[k], du };
        if p.u.0 == [0.0; 4] && p.du.iter().flatten().all(|&v| v == 0.0) {
            return Ok(OperatorCoeffs::zero());
        }
        Ok(OperatorCoeffs::from_upoint(&p, m))
    })
}

/// Value and gradients of a two-point kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelJet {
    pub value: SpinorMatrix,
    pub grad_x: [SpinorMatrix; 3],
    pub grad_y: [SpinorMatrix; 3],
}

pub trait DifferentiableKernel: Sync {
    fn eval(&self, x: [f64; 3], y: [f64; 3]) -> KernelJet;
}

/// The spectral kernel F_w(x, y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralKernel {
    pub omega: f64,
    pub params: SpectralKernelParams,
}

impl DifferentiableKernel for SpectralKernel {
    fn eval(&self, x: [f64; 3], y: [f64; 3]) -> KernelJet {
        let r = std::array::from_fn(|i| x[i] - y[i]);
        match kernel_coeffs(self.omega, r, &self.params) {
            None => KernelJet::default(),
            Some((f, g)) => {
                let grad_x = g.map(|c| c.matrix());
                KernelJet { value: f.matrix(), grad_x, grad_y: grad_x.map(|m| -m) }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    RightAdjoint,
}

/// Composes an operator given by pointwise coefficients with a kernel.
pub fn apply_to_kernel<'a, C, K>(coeffs: C, kernel: &'a K, side: Side) -> impl Fn([f64; 3], [f64; 3]) -> SpinorMatrix + 'a
where
    C: Fn([f64; 3]) -> OperatorCoeffs + 'a,
    K: DifferentiableKernel,
{
    move |x, y| {
        let k = kernel.eval(x, y);
        match side {
            Side::Left => coeffs(x).apply_left(&k.value, &k.grad_x),
            Side::RightAdjoint => coeffs(y).apply_right(&k.value, &k.grad_y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticField, ScalarFamily};

    #[test]
    fn dirac_coefficients() {
        let h = OperatorCoeffs::dirac(1.0);
        assert_eq!(h.c, *gammas().g0());
        for j in 0..3 {
            assert!(h.d[j].dist(&gammas().g0_gmu(j + 1).scale(-I)) < 1e-15);
        }
        assert!(h.div_d.is_zero());
        let two = OperatorCoeffs::from_upoint(&UPoint { u: FourVector([2.0, 0.0, 0.0, 0.0]), du: [[0.0; 4]; 3] }, 1.0);
        assert!(two.c.dist(&h.c.scale_re(2.0)) < 1e-15);
    }

    #[test]
    fn symmetric_at_random_points() {
        let p = UPoint { u: FourVector([1.3, 0.2, -0.1, 0.05]), du: [[0.3, -0.2, 0.7, 0.1], [0.05, 0.4, -0.6, 0.2], [-0.9, 0.1, 0.0, 0.3]] };
        assert!(OperatorCoeffs::from_upoint(&p, 1.0).symmetry_defect() < 1e-14);
    }

    #[test]
    fn eigen_relation() {
        let params = SpectralKernelParams::new(1.0, 0.01);
        let h = OperatorCoeffs::dirac(1.0);
        for omega in [-3.0, 2.2] {
            let k = SpectralKernel { omega, params };
            let hk = apply_to_kernel(|_| h, &k, Side::Left);
            let x = [0.3, -0.2, 0.5];
            let y = [-0.1, 0.4, 0.2];
            let want = k.eval(x, y).value.scale_re(omega);
            assert!(hk(x, y).dist(&want) < 1e-12);
        }
    }

    #[test]
    fn trivial_field_gives_zero_delta() {
        let src = AnalyticField::trivial(0.3);
        for kind in [OperatorKind::Delta, OperatorKind::TimeDerivative] {
            assert!(coeffs_at(&src, kind, 1.0, [0.1, 0.0, 0.0]).is_zero());
        }
        let bump = AnalyticField::new(
            0.2,
            ScalarFamily::Zero,
            [ScalarFamily::Bump { amplitude: 1.0, center: [0.0; 3], radius: 0.25 }, ScalarFamily::Zero, ScalarFamily::Zero],
            0.3,
        );
        let p = [0.05, 0.02, -0.03];
        let jet = bump.jet(p);
        let c = coeffs_at(&bump, OperatorKind::Delta, 1.0, p);
        let u1 = jet.u[1];
        for a in 0..4 {
            assert!((c.c.0[a][a] - 0.5 * I * u1.g[0]).norm() < 1e-14);
            assert!((c.d[0].0[a][a] - I * u1.v).norm() < 1e-14);
        }
    }
}
