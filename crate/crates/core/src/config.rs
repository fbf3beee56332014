//! Run configuration. The file format is TOML restricted to dotted keys
//! (`grid.L = 0.5`, `physics.m = 1.0`, ...); section headers are accepted too
//! since they parse to the same tables.

use crate::dynamics::{EvolveOptions, RhsMode};
use crate::error::{Error, Result};
use crate::field::{AnalyticField, ScalarFamily};
use crate::grid::{PhysicalParams, ScaleRatios, SpatialGrid};
use crate::rate::RateConfig;
use crate::spectral::SpectralKernelParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(rename = "L")]
    pub extent: f64,
    #[serde(rename = "N")]
    pub nodes: usize,
    #[serde(rename = "r_V")]
    pub support_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsBlock {
    pub m: f64,
    pub eps: f64,
    #[serde(rename = "Lambda")]
    pub cutoff: f64,
    pub lambda: f64,
    #[serde(default = "ten")]
    pub mass_to_cutoff: f64,
    #[serde(default = "ten")]
    pub cutoff_to_regularization: f64,
}

fn ten() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    #[serde(default)]
    pub f_tilde: ScalarFamily,
    #[serde(default, rename = "X1")]
    pub x1: ScalarFamily,
    #[serde(default, rename = "X2")]
    pub x2: ScalarFamily,
    #[serde(default, rename = "X3")]
    pub x3: ScalarFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionBlock {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "rk4")]
    pub scheme: Scheme,
    #[serde(default = "full")]
    pub rhs: RhsMode,
    #[serde(default = "four")]
    pub stencil_order: usize,
    /// 0 saves only the initial and final states.
    #[serde(default)]
    pub save_every: usize,
    /// Rerun with dt/2 and dt/4 and report the observed order.
    #[serde(default)]
    pub convergence_check: bool,
}

fn rk4() -> Scheme {
    Scheme::Rk4
}
fn full() -> RhsMode {
    RhsMode::Full
}
fn four() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralBlock {
    /// Step of the uniform grid in u with w = -+(m + u^2).
    pub omega_step: f64,
    pub omega_prime_max: f64,
    /// Gauss nodes in cos(theta); twice as many in phi.
    pub sphere_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateBlock {
    pub trace_level: usize,
    pub deltas: Vec<f64>,
    #[serde(default = "budget")]
    pub fd_budget: f64,
    #[serde(default)]
    pub cutoff_tilt: f64,
    /// Also evaluate B2 at trace_level - 2.
    #[serde(default)]
    pub refine: bool,
    #[serde(default)]
    pub sokhotski_omega: f64,
}

fn budget() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub grid: GridBlock,
    pub physics: PhysicsBlock,
    pub initial: InitialBlock,
    pub evolution: EvolutionBlock,
    pub spectral: SpectralBlock,
    pub rate: RateBlock,
}

fn gaussian(amplitude: f64, center: [f64; 3], sigma: f64) -> ScalarFamily {
    ScalarFamily::Gaussian { amplitude, center, sigma }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            workers: None,
            grid: GridBlock { extent: 0.5, nodes: 32, support_radius: 0.3 },
            physics: PhysicsBlock {
                m: 1.0,
                eps: 0.005,
                cutoff: 10.0,
                lambda: 0.04,
                mass_to_cutoff: 10.0,
                cutoff_to_regularization: 10.0,
            },
            initial: InitialBlock {
                f_tilde: gaussian(0.3, [0.03, 0.0, 0.0], 0.06),
                x1: gaussian(0.5, [0.0, 0.03, 0.0], 0.06),
                x2: gaussian(-0.3, [0.0, 0.0, 0.0], 0.06),
                x3: gaussian(0.2, [0.03, 0.0, -0.03], 0.06),
            },
            evolution: EvolutionBlock {
                dt: 0.01,
                t_final: 0.05,
                scheme: Scheme::Rk4,
                rhs: RhsMode::Full,
                stencil_order: 4,
                save_every: 0,
                convergence_check: false,
            },
            spectral: SpectralBlock { omega_step: 0.1, omega_prime_max: 30.0, sphere_order: 48 },
            rate: RateBlock {
                trace_level: 12,
                deltas: vec![1e-1, 1e-2, 1e-3, 1e-4],
                fd_budget: 0.05,
                cutoff_tilt: 0.0,
                refine: false,
                sokhotski_omega: 0.0,
            },
        }
    }
}

fn family_ok(f: &ScalarFamily) -> bool {
    match *f {
        ScalarFamily::Zero => true,
        ScalarFamily::Gaussian { amplitude, center, sigma } => amplitude.is_finite() && center.iter().all(|c| c.is_finite()) && sigma > 0.0,
        ScalarFamily::Bump { amplitude, center, radius } => amplitude.is_finite() && center.iter().all(|c| c.is_finite()) && radius > 0.0,
        ScalarFamily::PlaneModulatedBump { amplitude, center, radius, wavevector, phase } => {
            amplitude.is_finite()
                && center.iter().chain(&wavevector).all(|c| c.is_finite())
                && radius > 0.0
                && phase.is_finite()
        }
        ScalarFamily::Affine { offset, slope } => offset.is_finite() && slope.iter().all(|c| c.is_finite()),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.physical().map_err(cfg_err)?;
        self.spatial_grid().map_err(cfg_err)?;
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        for (name, f) in [("f_tilde", &self.initial.f_tilde), ("X1", &self.initial.x1), ("X2", &self.initial.x2), ("X3", &self.initial.x3)] {
            if !family_ok(f) {
                return Err(Error::Config(format!("initial.{name}: invalid family parameters")));
            }
        }
        let e = &self.evolution;
        if !(e.dt > 0.0 && e.t_final >= 0.0) {
            return bad("evolution.dt must be > 0 and evolution.t_final >= 0");
        }
        if e.stencil_order != 2 && e.stencil_order != 4 {
            return bad("evolution.stencil_order must be 2 or 4");
        }
        let s = &self.spectral;
        if !(s.omega_step > 0.0) || s.sphere_order < 2 {
            return bad("spectral.omega_step must be > 0 and spectral.sphere_order >= 2");
        }
        if !(s.omega_prime_max >= self.physics.cutoff && s.omega_prime_max * self.physics.eps < 1.0) {
            return bad("spectral.omega_prime_max must lie in [Lambda, 1/eps)");
        }
        let r = &self.rate;
        if r.trace_level < 2 {
            return bad("rate.trace_level must be >= 2");
        }
        if r.deltas.len() < 2 || r.deltas.iter().any(|d| !(*d > 0.0)) {
            return bad("rate.deltas needs at least two positive values");
        }
        if !(r.fd_budget > 0.0) || !r.cutoff_tilt.is_finite() {
            return bad("rate.fd_budget must be > 0 and rate.cutoff_tilt finite");
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1");
        }
        Ok(())
    }

    pub fn ratios(&self) -> ScaleRatios {
        ScaleRatios { mass_to_cutoff: self.physics.mass_to_cutoff, cutoff_to_regularization: self.physics.cutoff_to_regularization }
    }

    pub fn physical(&self) -> Result<PhysicalParams> {
        let p = &self.physics;
        PhysicalParams::new(p.m, p.eps, p.cutoff, p.lambda, self.ratios())
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.extent, self.grid.nodes, self.grid.support_radius)
    }

    pub fn field(&self) -> AnalyticField {
        let i = &self.initial;
        AnalyticField::new(self.physics.lambda, i.f_tilde.clone(), [i.x1.clone(), i.x2.clone(), i.x3.clone()], self.grid.support_radius)
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        let e = &self.evolution;
        let steps = (e.t_final / e.dt - 1e-9).ceil().max(1.0) as usize;
        EvolveOptions {
            dt: e.dt,
            t_final: e.t_final,
            mode: e.rhs,
            stencil_order: e.stencil_order,
            save_every: if e.save_every == 0 { steps } else { e.save_every },
            ..EvolveOptions::default()
        }
    }

    pub fn spectral_params(&self) -> SpectralKernelParams {
        SpectralKernelParams::new(self.physics.m, self.physics.eps)
    }

    pub fn rate_config(&self) -> RateConfig {
        RateConfig {
            m: self.physics.m,
            eps: self.physics.eps,
            cutoff: self.physics.cutoff,
            cutoff_tilt: self.rate.cutoff_tilt,
            omega_prime_max: self.spectral.omega_prime_max,
            omega_step: self.spectral.omega_step,
            trace_level: self.rate.trace_level,
            fd_budget: self.rate.fd_budget,
        }
    }

    /// Flat dotted-key rendering; family tables stay inline.
    pub fn to_dotted(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes to TOML");
        let mut out = String::new();
        flatten("", &value, &mut out);
        out
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes to JSON");
        serde_json::to_string(&v).expect("JSON value renders")
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut String) {
    match v {
        toml::Value::Table(t) if !t.contains_key("family") => {
            for (k, child) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        other => {
            let rendered = match other {
                toml::Value::Table(t) => {
                    let parts: Vec<String> = t.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                    format!("{{ {} }}", parts.join(", "))
                }
                v => v.to_string(),
            };
            out.push_str(&format!("{prefix} = {rendered}\n"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_dotted();
        assert!(text.contains("grid.L = 0.5"));
        assert!(text.contains("physics.Lambda = 10.0"));
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = RunConfig::default();
        cfg.physics.m = 2.0;
        assert!(matches!(RunConfig::from_toml_str(&cfg.to_dotted()), Err(Error::Config(_))));
        let text = RunConfig::default().to_dotted() + "grid.bogus = 1\n";
        assert!(RunConfig::from_toml_str(&text).is_err());
        let text = RunConfig::default().to_dotted().replace("family = \"gaussian\"", "family = \"lorentzian\"");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }
}
