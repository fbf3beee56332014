//! First- and second-order rates B1 and B2.
//!
//! B2 = -int int d_w(eta(w) T(w, w')) (g(w') - g(w)) / (w' - w) with g the
//! indicator of (-1/eps, -m) and T the trace of dQ/dt. Only pairs with one
//! frequency on each side of the gap contribute. With w = -+(m + s^2) and
//! w' = +-(m + t^2) both regions read off one table T(-m - u_i^2, m + u_j^2)
//! on a uniform u-grid, which also removes the square-root behaviour at the
//! shell thresholds (eta T is odd in s).

use crate::error::{Error, Result};
use crate::field::FieldSource;
use crate::par::ExecPolicy;
use crate::quadrature::Rule1d;
use crate::spectral::SpectralKernelParams;
use crate::trace::{b1, trace_table, SampledOperators, VolumeRule};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// exp(-1/(1 - x^2) - tilt x) with x = w/L, scaled so that eta(-m) = 1;
/// zero for |w| >= L. `tilt = 0` is the even bump.
///
/// For an even cutoff B2 vanishes below the gate: A[u] is odd under charge
/// conjugation, hence T(w, w') = T(-w', -w) and the two regions cancel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub cutoff: f64,
    pub m: f64,
    #[serde(default)]
    pub tilt: f64,
}

impl CutoffFunction {
    pub fn new(cutoff: f64, m: f64) -> Self {
        Self { cutoff, m, tilt: 0.0 }
    }

    pub fn with_tilt(self, tilt: f64) -> Self {
        Self { tilt, ..self }
    }

    fn raw(&self, w: f64) -> f64 {
        let x = w / self.cutoff;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - x * x) - self.tilt * x).exp()
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        self.raw(w) / self.raw(-self.m)
    }
}

/// Uniform grid u_k = k h; frequencies -+(m + u_k^2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaGrid {
    pub m: f64,
    pub step: f64,
    /// Number of nodes with -(m + u^2) inside the cut-off support.
    pub n_cut: usize,
    pub u: Vec<f64>,
}

impl OmegaGrid {
    pub fn new(m: f64, cutoff: f64, omega_prime_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(cutoff > m) || omega_prime_max < cutoff {
            return Err(Error::InvalidParams(format!(
                "omega grid needs step > 0 and m < Lambda <= omega'_max (step {step}, Lambda {cutoff}, omega'_max {omega_prime_max})"
            )));
        }
        let s_max = (cutoff - m).sqrt();
        let t_max = (omega_prime_max - m).sqrt();
        let n_cut = (s_max / step).floor() as usize + 1;
        let n = ((t_max / step).ceil() as usize + 1).max(n_cut + 1);
        Ok(Self { m, step, n_cut, u: (0..n).map(|k| k as f64 * step).collect() })
    }

    pub fn negative(&self) -> Vec<f64> {
        self.u.iter().map(|u| -self.m - u * u).collect()
    }

    pub fn positive(&self) -> Vec<f64> {
        self.u.iter().map(|u| self.m + u * u).collect()
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Trapezoid weights; the far end carries half weight.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.u.len();
        (0..n).map(|k| if k == 0 || k + 1 == n { 0.5 * self.step } else { self.step }).collect()
    }
}

/// T(-m - u_i^2, m + u_j^2), filled where either index is below `n_cut`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTable {
    pub grid: OmegaGrid,
    pub values: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn needed(grid: &OmegaGrid) -> impl Fn(usize, usize) -> bool + Sync + '_ {
        move |i, j| i < grid.n_cut || j < grid.n_cut
    }

    pub fn compute(ops: &SampledOperators, grid: OmegaGrid, params: &SpectralKernelParams, policy: ExecPolicy) -> Self {
        let n = grid.len();
        if ops.is_trivial() {
            return Self { values: vec![vec![0.0; n]; n], grid };
        }
        let p = trace_table(&ops.rule, &ops.dot, &ops.delta, &grid.negative(), &grid.positive(), params, Self::needed(&grid), policy);
        // T(w, w') = Re P(w, w') + Re P(w', w); charge conjugation gives
        // P(m + t^2, -m - s^2) = conj P(-m - t^2, m + s^2), the transposed entry.
        let values = (0..n).map(|i| (0..n).map(|j| p[i][j].re + p[j][i].re).collect()).collect();
        Self { grid, values }
    }

    /// Table from a closed-form trace function.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: OmegaGrid, t: F) -> Self {
        let (neg, pos) = (grid.negative(), grid.positive());
        let values = {
            let needed = Self::needed(&grid);
            (0..grid.len())
                .map(|i| (0..grid.len()).map(|j| if needed(i, j) { t(neg[i], pos[j]) } else { 0.0 }).collect())
                .collect()
        };
        Self { grid, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B2Parts {
    /// Finite-difference derivative with Richardson extrapolation.
    pub b2: f64,
    /// Same integral after moving the derivative onto the weight.
    pub b2_by_parts: f64,
    /// |Richardson - plain central difference|.
    pub fd_error: f64,
    /// Share of the by-parts integrand carried by the last frequency column.
    pub tail: f64,
    /// Sum of the absolute by-parts contributions; the natural scale for |B2|.
    pub magnitude: f64,
}

/// Odd extension at 0, zero beyond the end.
fn odd_at(v: &[f64], k: isize) -> f64 {
    if k < 0 {
        -v[(-k) as usize]
    } else {
        v.get(k as usize).copied().unwrap_or(0.0)
    }
}

fn derivatives(v: &[f64], h: f64, k: usize) -> (f64, f64) {
    let k = k as isize;
    let d1 = (odd_at(v, k + 1) - odd_at(v, k - 1)) / (2.0 * h);
    let d2 = (odd_at(v, k + 2) - odd_at(v, k - 2)) / (4.0 * h);
    ((4.0 * d1 - d2) / 3.0, d1)
}

pub fn b2_from_table(table: &TraceTable, eta: &CutoffFunction) -> B2Parts {
    let g = &table.grid;
    let (n, nc, h, m) = (g.len(), g.n_cut, g.step, g.m);
    let u = &g.u;
    let w = g.weights();
    let kernel = |s: f64, t: f64| 2.0 * t / (2.0 * m + s * s + t * t);
    let kernel_ds = |s: f64, t: f64| -4.0 * s * t / (2.0 * m + s * s + t * t).powi(2);
    let (mut rich, mut plain, mut parts, mut last, mut total) = (0.0, 0.0, 0.0, 0.0, 0.0);
    // region 1: w = -m - s^2 in the Dirac sea, w' = m + t^2
    for j in 0..n {
        let col: Vec<f64> = (0..nc.min(n)).map(|i| eta.eval(-m - u[i] * u[i]) * table.values[i][j]).collect();
        for i in 0..col.len() {
            let (dr, dp) = derivatives(&col, h, i);
            let k = kernel(u[i], u[j]);
            rich -= w[i] * w[j] * dr * k;
            plain -= w[i] * w[j] * dp * k;
            let c = w[i] * w[j] * col[i] * kernel_ds(u[i], u[j]);
            parts += c;
            total += c.abs();
            if j + 1 == n {
                last += c.abs();
            }
        }
    }
    // region 2: w = m + s^2, w' = -m - t^2; T is symmetric so the table is read transposed
    for i in 0..n {
        let row: Vec<f64> = (0..nc.min(n)).map(|j| eta.eval(m + u[j] * u[j]) * table.values[i][j]).collect();
        for j in 0..row.len() {
            let (dr, dp) = derivatives(&row, h, j);
            let k = kernel(u[j], u[i]);
            rich += w[i] * w[j] * dr * k;
            plain += w[i] * w[j] * dp * k;
            let c = w[i] * w[j] * row[j] * kernel_ds(u[j], u[i]);
            parts -= c;
            total += c.abs();
            if i + 1 == n {
                last += c.abs();
            }
        }
    }
    B2Parts {
        b2: rich,
        b2_by_parts: parts,
        fd_error: (rich - plain).abs(),
        tail: if total > 0.0 { last / total } else { 0.0 },
        magnitude: total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub m: f64,
    pub eps: f64,
    pub cutoff: f64,
    #[serde(default)]
    pub cutoff_tilt: f64,
    pub omega_prime_max: f64,
    pub omega_step: f64,
    pub trace_level: usize,
    /// Relative budget for the derivative error indicator.
    pub fd_budget: f64,
}

impl RateConfig {
    pub fn spectral(&self) -> SpectralKernelParams {
        SpectralKernelParams::new(self.m, self.eps)
    }

    pub fn omega_grid(&self) -> Result<OmegaGrid> {
        if self.omega_prime_max >= 1.0 / self.eps {
            return Err(Error::InvalidParams(format!(
                "omega'_max = {} must stay below the gate 1/eps = {}",
                self.omega_prime_max,
                1.0 / self.eps
            )));
        }
        OmegaGrid::new(self.m, self.cutoff, self.omega_prime_max, self.omega_step)
    }

    pub fn eta(&self) -> CutoffFunction {
        CutoffFunction::new(self.cutoff, self.m).with_tilt(self.cutoff_tilt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub b1: f64,
    pub b2: f64,
    pub b2_by_parts: f64,
    pub fd_error: f64,
    pub tail: f64,
    pub magnitude: f64,
    /// |B2(level) - B2(level - 2)| when a refinement pair was computed.
    pub refinement_error: Option<f64>,
    pub trace_points: usize,
    pub config: RateConfig,
}

pub fn b2_for_ops(ops: &SampledOperators, cfg: &RateConfig, policy: ExecPolicy) -> Result<(B2Parts, TraceTable)> {
    let table = TraceTable::compute(ops, cfg.omega_grid()?, &cfg.spectral(), policy);
    let parts = b2_from_table(&table, &cfg.eta());
    // measured against the size of the integrand so that a cancelling B2 is not flagged
    let budget = cfg.fd_budget * parts.b2.abs().max(1e-3 * parts.magnitude);
    if parts.fd_error > budget && parts.magnitude > 0.0 {
        return Err(Error::GridTooCoarse { estimate: parts.fd_error, budget });
    }
    Ok((parts, table))
}

/// B1 and B2 for the operators of a field source, optionally with a one-level
/// refinement of the trace quadrature as error indicator.
pub fn compute_rate<S: FieldSource + ?Sized>(src: &S, cfg: &RateConfig, refine: bool, policy: ExecPolicy) -> Result<(RateReport, TraceTable)> {
    let sample = |level| SampledOperators::from_source(src, cfg.m, VolumeRule::ball(src.support_radius(), level), policy);
    let ops = sample(cfg.trace_level);
    let b1 = b1(&ops, &cfg.spectral());
    let (parts, table) = b2_for_ops(&ops, cfg, policy)?;
    let refinement_error = if refine && cfg.trace_level > 2 {
        let coarse = b2_for_ops(&sample(cfg.trace_level - 2), cfg, policy)?.0;
        Some((coarse.b2 - parts.b2).abs())
    } else {
        None
    };
    let report = RateReport {
        b1,
        b2: parts.b2,
        b2_by_parts: parts.b2_by_parts,
        fd_error: parts.fd_error,
        tail: parts.tail,
        magnitude: parts.magnitude,
        refinement_error,
        trace_points: ops.rule.len(),
        config: *cfg,
    };
    Ok((report, table))
}

/// dA = dA/dt = phi Id with phi = a exp(-|x|^2 / (2 sigma^2)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRankOne {
    pub amplitude: f64,
    pub sigma: f64,
}

impl SyntheticRankOne {
    pub fn phi(&self, p: [f64; 3]) -> f64 {
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        self.amplitude * (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// Radius of the ball carrying the trace integrals.
    pub fn support_radius(&self) -> f64 {
        5.0 * self.sigma
    }

    pub fn sample(&self, level: usize) -> SampledOperators {
        SampledOperators::multiplication(|p| self.phi(p), VolumeRule::ball(self.support_radius(), level))
    }

    /// tr(F_w phi F_w' phi) from the momentum-shell double integral, reduced
    /// by rotation invariance to one angle:
    /// e e' k k' / (2pi)^6 8 pi^2 |phi^|^2-scale int (w w' + k k' c + m^2) exp(-sigma^2 |k - k'|^2) dc.
    pub fn trace_oracle(&self, omega: f64, omega_prime: f64, params: &SpectralKernelParams) -> f64 {
        let (Some(k1), Some(k2)) = (params.kappa(omega), params.kappa(omega_prime)) else {
            return 0.0;
        };
        let s2 = self.sigma * self.sigma;
        let m = params.m;
        let rule = Rule1d::gauss_on(64, -1.0, 1.0);
        let integral = rule.integrate(|c| {
            (omega * omega_prime + k1 * k2 * c + m * m) * (-s2 * (k1 * k1 + k2 * k2 - 2.0 * k1 * k2 * c)).exp()
        });
        let phi_hat2 = self.amplitude.powi(2) * (2.0 * PI * s2).powi(3);
        omega.signum() * omega_prime.signum() * k1 * k2 / (2.0 * PI).powi(6) * 8.0 * PI * PI * phi_hat2 * integral
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::trace::{trace_q, TraceMode};

    #[test]
    fn cutoff_normalization_and_support() {
        let eta = CutoffFunction::new(10.0, 1.0);
        assert!((eta.eval(-1.0) - 1.0).abs() < 1e-15);
        assert_eq!(eta.eval(10.0), 0.0);
        assert_eq!(eta.eval(-100.0), 0.0);
        assert!(eta.eval(3.0) > 0.0 && eta.eval(3.0) < 1.0);
    }

    #[test]
    fn synthetic_trace_matches_oracle() {
        let params = SpectralKernelParams::new(1.0, 0.01);
        let syn = SyntheticRankOne { amplitude: 1.0, sigma: 0.15 };
        let ops = syn.sample(18);
        for (w, wp) in [(-2.0, 1.5), (-1.2, 4.0), (-5.0, 3.0)] {
            let q = trace_q(w, wp, &ops, TraceMode::Static, &params, ExecPolicy::Sequential);
            let o = syn.trace_oracle(w, wp, &params);
            assert!(o > 0.0);
            assert!((q.re - o).abs() < 2e-5 * o, "{w} {wp}: {q} vs {o}");
            assert!(q.im.abs() < 1e-10 * o);
        }
        assert_eq!(trace_q(-1.0, 2.0, &ops, TraceMode::Static, &params, ExecPolicy::Sequential), C64::from(0.0));
        assert_eq!(trace_q(-0.5, 2.0, &ops, TraceMode::Static, &params, ExecPolicy::Sequential), C64::from(0.0));
    }

    #[test]
    fn even_cutoff_cancels() {
        let params = SpectralKernelParams::new(1.0, 0.01);
        let syn = SyntheticRankOne { amplitude: 1.0, sigma: 0.15 };
        let grid = OmegaGrid::new(1.0, 10.0, 30.0, 0.1).unwrap();
        let table = TraceTable::from_fn(grid, |w, wp| 2.0 * syn.trace_oracle(w, wp, &params));
        let parts = b2_from_table(&table, &CutoffFunction::new(10.0, 1.0));
        assert!(parts.magnitude > 0.0);
        assert!(parts.b2.abs() < 1e-12 * parts.magnitude, "{parts:?}");
        assert!(parts.b2_by_parts.abs() < 1e-12 * parts.magnitude, "{parts:?}");
    }

    #[test]
    fn table_b2_agrees_with_by_parts_form() {
        let params = SpectralKernelParams::new(1.0, 0.01);
        let syn = SyntheticRankOne { amplitude: 1.0, sigma: 0.15 };
        let run = |h: f64| {
            let grid = OmegaGrid::new(1.0, 10.0, 30.0, h).unwrap();
            let table = TraceTable::from_fn(grid, |w, wp| 2.0 * syn.trace_oracle(w, wp, &params));
            b2_from_table(&table, &CutoffFunction::new(10.0, 1.0).with_tilt(1.0))
        };
        let coarse = run(0.2);
        let parts = run(0.1);
        let gap = |p: &B2Parts| (p.b2 - p.b2_by_parts).abs();
        assert!(gap(&parts) < 0.35 * gap(&coarse), "{coarse:?} {parts:?}");
        assert!(gap(&parts) < 1e-3 * parts.b2.abs(), "{parts:?}");
        assert!((coarse.b2 - parts.b2).abs() < 3e-2 * parts.b2.abs(), "{coarse:?} {parts:?}");
        assert!(parts.b2.abs() > 1e-3 * parts.magnitude, "{parts:?}");
        assert!(parts.fd_error < 1e-3 * parts.b2.abs(), "{parts:?}");
    }
}
