use lochrig::linalg::SpinorMatrix;
use lochrig::spectral::{energy, f_diag, f_grad_diag, f_kernel, hamiltonian_symbol, shell_projector, SpectralKernelParams};
use proptest::prelude::*;

fn momentum() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-5.0f64..5.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projectors_resolve_the_hamiltonian(k in momentum(), m in 0.1f64..3.0) {
        let (p, q) = (shell_projector(k, 1.0, m), shell_projector(k, -1.0, m));
        let e = energy(k, m);
        prop_assert!((p * p).dist(&p) < 1e-12);
        prop_assert!((p * q).max_abs() < 1e-12);
        prop_assert!((p + q).dist(&SpinorMatrix::identity()) < 1e-12);
        prop_assert!(p.dist(&p.adjoint()) < 1e-12);
        let h = hamiltonian_symbol(k, m);
        prop_assert!((h * p).dist(&p.scale_re(e)) < 1e-11 * e);
        prop_assert!((h * q).dist(&q.scale_re(-e)) < 1e-11 * e);
    }

    #[test]
    fn kernel_is_hermitian_in_its_arguments(w in 1.01f64..20.0, sign in prop::bool::ANY, r in prop::array::uniform3(-0.5f64..0.5)) {
        let p = SpectralKernelParams::new(1.0, 0.005);
        let w = if sign { w } else { -w };
        let fwd = f_kernel(w, r, &p);
        let back = f_kernel(w, r.map(|c| -c), &p);
        prop_assert!(fwd.dist(&back.adjoint()) < 1e-12 * (1.0 + fwd.max_abs()));
    }
}

#[test]
fn kernels_vanish_in_the_gap_and_beyond_the_gate() {
    let p = SpectralKernelParams::new(1.0, 0.005);
    for w in [-1.0, -0.5, 0.0, 0.7, -200.0, -500.0] {
        assert!(f_diag(w, &p).is_zero(), "w = {w}");
        assert!((1..=3).all(|mu| f_grad_diag(w, mu, &p).is_zero()));
        assert!(f_kernel(w, [0.1, 0.0, 0.2], &p).is_zero());
    }
    assert!(!f_diag(2.0, &p).is_zero());
    assert!(!f_diag(-2.0, &p).is_zero());
    assert!(f_diag(2.0, &p).trace().im.abs() < 1e-15);
}
