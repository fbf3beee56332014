//! Locally rigid dynamics of u on a grid: the full quasi-linear right-hand side,
//! its first-order-in-lambda reduction, and RK4 method-of-lines evolution.

use crate::error::{Error, Result};
use crate::field::{FieldDerivativeStencil, RegularizingField, UJet, UPoint};
use crate::jet::{Jet1, Scalar};
use crate::linalg::{FourVector, Tensor2, Tensor3, METRIC};
use crate::nullcone::{i2, i3};
use crate::par::ExecPolicy;
use dashmap::DashMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    Full,
    FirstOrder,
}

/// Memo of (I2, I3) keyed by u rounded to a fixed quantum. Tensors are always
/// evaluated at the rounded key, so results do not depend on insertion order.
#[derive(Debug, Default)]
pub struct TensorCache {
    map: DashMap<[i64; 4], (Tensor2, Tensor3)>,
}

impl TensorCache {
    pub const QUANTUM: f64 = 1e-6;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn tensors(&self, u: &FourVector) -> Result<(Tensor2, Tensor3)> {
        let key = u.0.map(|c| (c / Self::QUANTUM).round() as i64);
        if let Some(hit) = self.map.get(&key) {
            return Ok(*hit);
        }
        let uq = FourVector(key.map(|k| k as f64 * Self::QUANTUM));
        let val = (i2(&uq)?, i3(&uq)?);
        self.map.insert(key, val);
        Ok(val)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// du^l/dt = sum_j g_mn [3 u^2 I3^{jnl} + 2 u^l I2^{jn} - 6 u^l u_s I3^{njs}] d_j u^m.
pub fn rhs_full_point(p: &UPoint, cache: Option<&TensorCache>) -> Result<FourVector> {
    let u = p.u;
    let (t2, t3) = match cache {
        Some(c) => c.tensors(&u)?,
        None => (i2(&u)?, i3(&u)?),
    };
    let ul = u.lower();
    let u2 = u.norm2();
    let mut us_i3 = [[0.0; 4]; 4];
    for n in 0..4 {
        for j in 0..4 {
            us_i3[n][j] = (0..4).map(|s| ul[s] * t3[n][j][s]).sum();
        }
    }
    let mut out = [0.0; 4];
    for (l, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 1..4 {
            for m in 0..4 {
                let d = p.du[j - 1][m];
                if d == 0.0 {
                    continue;
                }
                let bracket = 3.0 * u2 * t3[j][m][l] + 2.0 * u[l] * t2[j][m] - 6.0 * u[l] * us_i3[m][j];
                acc += METRIC[m] * bracket * d;
            }
        }
        *o = acc;
    }
    Ok(FourVector(out))
}

/// du/dt = grad f / f^2 (spatial) and (1/f^3)((f/3) div S + 4 S . grad f) (time),
/// with S = lambda X the spatial part of u. Generic so that jets carry derivatives.
pub fn rhs_first_order_generic<T: Scalar>(f: T, grad_f: [T; 3], div_s: T, s: [T; 3]) -> [T; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    let s_grad_f = s[0] * grad_f[0] + s[1] * grad_f[1] + s[2] * grad_f[2];
    let time = (f * div_s).scale(1.0 / 3.0) + s_grad_f.scale(4.0);
    [time / f3, grad_f[0] / f2, grad_f[1] / f2, grad_f[2] / f2]
}

pub fn rhs_first_order_point(p: &UPoint) -> Result<FourVector> {
    if !(p.u[0] > 0.0) {
        return Err(Error::NonTimelikeU { norm: p.u.norm2() });
    }
    let grad_f = [p.du[0][0], p.du[1][0], p.du[2][0]];
    let div_s = p.du[0][1] + p.du[1][2] + p.du[2][3];
    let s = p.u.spatial();
    Ok(FourVector(rhs_first_order_generic(p.u[0], grad_f, div_s, s)))
}

/// First-order du/dt together with its spatial gradient, from second-order jets of u.
pub fn dot_u_jet(j: &UJet) -> [Jet1; 4] {
    let f = j.u[0].truncate();
    let grad_f = [j.u[0].partial(0), j.u[0].partial(1), j.u[0].partial(2)];
    let div_s = j.u[1].partial(0) + j.u[2].partial(1) + j.u[3].partial(2);
    let s = [j.u[1].truncate(), j.u[2].truncate(), j.u[3].truncate()];
    rhs_first_order_generic(f, grad_f, div_s, s)
}

pub fn rhs_full(field: &RegularizingField, idx: [usize; 3], st: &FieldDerivativeStencil) -> Result<FourVector> {
    rhs_full_point(&field.upoint(idx, st)?, None)
}

pub fn rhs_first_order(field: &RegularizingField, idx: [usize; 3], st: &FieldDerivativeStencil) -> Result<FourVector> {
    rhs_first_order_point(&field.upoint(idx, st)?)
}

/// du/dt at every node; zero on the outer margin, which is held fixed.
pub fn rhs_field(
    field: &RegularizingField,
    mode: RhsMode,
    st: &FieldDerivativeStencil,
    cache: Option<&TensorCache>,
    policy: ExecPolicy,
) -> Result<Vec<FourVector>> {
    let g = field.grid;
    let margin = st.margin();
    policy
        .map(g.len(), |k| {
            let idx = g.unlinear(k);
            if !g.inside_margin(idx, margin) {
                return Ok(FourVector([0.0; 4]));
            }
            let p = field.upoint(idx, st)?;
            if p.du.iter().flatten().all(|&d| d == 0.0) {
                return Ok(FourVector([0.0; 4]));
            }
            match mode {
                RhsMode::Full => rhs_full_point(&p, cache),
                RhsMode::FirstOrder => rhs_first_order_point(&p),
            }
        })
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_final: f64,
    pub mode: RhsMode,
    pub stencil_order: usize,
    /// Save a snapshot every this many steps (the final state is always saved).
    pub save_every: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub use_cache: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 0.1,
            mode: RhsMode::Full,
            stencil_order: 4,
            save_every: 1,
            f_min: 0.1,
            f_max: 10.0,
            use_cache: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: RegularizingField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub stencil: FieldDerivativeStencil,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }

    /// Half-width of the cube outside which u must still equal nu: the cube
    /// around V grown by the axis-aligned stencil reach of every RK stage.
    pub fn dependence_radius(&self, support_radius: f64) -> f64 {
        support_radius + (4 * self.steps * self.stencil.margin()) as f64 * self.stencil.h
    }
}

fn axpy_field(base: &RegularizingField, k: &[FourVector], c: f64) -> RegularizingField {
    let mut out = base.clone();
    for (i, d) in k.iter().enumerate() {
        out.f[i] += c * d[0];
        for a in 0..3 {
            out.s[i][a] += c * d[a + 1];
        }
    }
    out
}

fn guard(field: &RegularizingField, t: f64, opts: &EvolveOptions) -> Result<()> {
    match field.f.iter().find(|&&v| !(v >= opts.f_min && v <= opts.f_max)) {
        Some(&value) => Err(Error::BlowUp { t, value, min: opts.f_min, max: opts.f_max }),
        None => Ok(()),
    }
}

/// Classical RK4 method of lines. The outer stencil margin is held at its
/// initial value (u = nu for admissible data).
pub fn evolve(initial: &RegularizingField, opts: &EvolveOptions, policy: ExecPolicy) -> Result<Trajectory> {
    let st = FieldDerivativeStencil::new(opts.stencil_order, initial.grid.spacing)?;
    let bound = 0.5 * initial.grid.spacing;
    if !(opts.dt > 0.0) || opts.dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: opts.dt, bound });
    }
    initial.check_positive()?;
    guard(initial, 0.0, opts)?;
    let steps = (opts.t_final / opts.dt - 1e-9).ceil().max(0.0) as usize;
    let cache = opts.use_cache.then(TensorCache::new);
    let rhs = |f: &RegularizingField| rhs_field(f, opts.mode, &st, cache.as_ref(), policy);
    let mut state = initial.clone();
    let mut snapshots = vec![Snapshot { t: 0.0, field: state.clone() }];
    let save_every = opts.save_every.max(1);
    for n in 0..steps {
        let t = n as f64 * opts.dt;
        let h = opts.dt.min(opts.t_final - t);
        let k1 = rhs(&state)?;
        let k2 = rhs(&axpy_field(&state, &k1, 0.5 * h))?;
        let k3 = rhs(&axpy_field(&state, &k2, 0.5 * h))?;
        let k4 = rhs(&axpy_field(&state, &k3, h))?;
        for i in 0..state.f.len() {
            let d: [f64; 4] = std::array::from_fn(|c| (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]) / 6.0);
            state.f[i] += h * d[0];
            for a in 0..3 {
                state.s[i][a] += h * d[a + 1];
            }
        }
        let t_next = t + h;
        guard(&state, t_next, opts)?;
        if (n + 1) % save_every == 0 || n + 1 == steps {
            snapshots.push(Snapshot { t: t_next, field: state.clone() });
        }
    }
    Ok(Trajectory { snapshots, steps, stencil: st })
}

/// Max-norm of rhs_full - rhs_first_order over interior nodes.
pub fn reduction_gap(field: &RegularizingField, st: &FieldDerivativeStencil, policy: ExecPolicy) -> Result<f64> {
    let full = rhs_field(field, RhsMode::Full, st, None, policy)?;
    let first = rhs_field(field, RhsMode::FirstOrder, st, None, policy)?;
    Ok(full.iter().zip(&first).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max))
}

/// Support check: largest |u - nu| outside the numerical domain of dependence of V.
pub fn support_leak(traj: &Trajectory, support_radius: f64) -> f64 {
    let r = traj.dependence_radius(support_radius);
    traj.last().field.deviation_outside(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(1.0, 16, 0.6).unwrap()
    }

    #[test]
    fn constant_data_has_zero_rhs() {
        let st = FieldDerivativeStencil::new(4, grid().spacing).unwrap();
        for c in [1.0, 2.5] {
            let f = RegularizingField::constant(grid(), c).unwrap();
            assert_eq!(rhs_full(&f, [8, 8, 8], &st).unwrap(), FourVector([0.0; 4]));
            assert_eq!(rhs_first_order(&f, [8, 8, 8], &st).unwrap(), FourVector([0.0; 4]));
        }
    }

    #[test]
    fn first_order_examples() {
        let g = SpatialGrid::new(0.5, 16, 0.3).unwrap();
        let st = FieldDerivativeStencil::new(4, g.spacing).unwrap();
        let idx = [8, 8, 8];
        let x0 = g.coord(8);
        // f = 1 + (x - x0): df/dx = 1, f = 1 at the node
        let f = RegularizingField::from_fn(g, 0.0, |p| (1.0 + p[0] - x0, [0.0; 3])).unwrap();
        let r = rhs_first_order(&f, idx, &st).unwrap();
        assert!(r.max_abs_diff(&FourVector::new(0.0, 1.0, 0.0, 0.0)) < 1e-12);
        // f = 1, lambda X = 0.1 (x, 0, 0): div X = 1
        let f = RegularizingField::from_fn(g, 0.1, |p| (1.0, [0.1 * p[0], 0.0, 0.0])).unwrap();
        let r = rhs_first_order(&f, idx, &st).unwrap();
        assert!((r[0] - 0.1 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cfl_is_enforced() {
        let f = RegularizingField::constant(grid(), 1.0).unwrap();
        let opts = EvolveOptions { dt: grid().spacing, ..Default::default() };
        assert!(matches!(evolve(&f, &opts, ExecPolicy::Sequential), Err(Error::CflViolation { .. })));
    }
}
