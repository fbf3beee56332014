use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Cell-centred cubic grid on [-L, L]^3 with N nodes per axis (N h = 2L).
/// The compact set V is the closed ball of radius `support_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub extent: f64,
    pub spacing: f64,
    pub n: usize,
    pub support_radius: f64,
}

impl SpatialGrid {
    pub fn new(extent: f64, n: usize, support_radius: f64) -> Result<Self> {
        if !(extent > 0.0) || n < 4 {
            return Err(Error::InvalidGrid(format!("need L > 0 and N >= 4, got L = {extent}, N = {n}")));
        }
        if !(support_radius > 0.0 && support_radius < extent) {
            return Err(Error::InvalidGrid(format!(
                "support radius {support_radius} must lie in (0, L = {extent})"
            )));
        }
        Ok(Self { extent, spacing: 2.0 * extent / n as f64, n, support_radius })
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.spacing
    }

    pub fn position(&self, idx: [usize; 3]) -> [f64; 3] {
        [self.coord(idx[0]), self.coord(idx[1]), self.coord(idx[2])]
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn linear(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.n + idx[1]) * self.n + idx[2]
    }

    pub fn unlinear(&self, k: usize) -> [usize; 3] {
        [k / (self.n * self.n), (k / self.n) % self.n, k % self.n]
    }

    pub fn in_support(&self, x: [f64; 3]) -> bool {
        norm3(x) <= self.support_radius
    }

    /// True if the node is at least `margin` nodes away from every face.
    pub fn inside_margin(&self, idx: [usize; 3], margin: usize) -> bool {
        idx.iter().all(|&i| i >= margin && i + margin < self.n)
    }
}

pub fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m: f64,
    pub eps: f64,
    #[serde(rename = "Lambda")]
    pub cutoff: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRatios {
    pub mass_to_cutoff: f64,
    pub cutoff_to_regularization: f64,
}

impl Default for ScaleRatios {
    fn default() -> Self {
        Self { mass_to_cutoff: 10.0, cutoff_to_regularization: 10.0 }
    }
}

impl PhysicalParams {
    /// Validates `m <= Lambda / r1` and `Lambda <= 1 / (eps r2)` with both ratios at least 10.
    pub fn new(m: f64, eps: f64, cutoff: f64, lambda: f64, ratios: ScaleRatios) -> Result<Self> {
        let p = Self { m, eps, cutoff, lambda };
        p.validate(ratios)?;
        Ok(p)
    }

    pub fn validate(&self, ratios: ScaleRatios) -> Result<()> {
        if !(self.m > 0.0 && self.eps > 0.0 && self.cutoff > 0.0) {
            return Err(Error::InvalidParams("m, eps and Lambda must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if ratios.mass_to_cutoff < 10.0 || ratios.cutoff_to_regularization < 10.0 {
            return Err(Error::InvalidParams("scale ratios must be at least 10".into()));
        }
        if self.m > self.cutoff / ratios.mass_to_cutoff * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "m = {} exceeds Lambda / {} = {}",
                self.m,
                ratios.mass_to_cutoff,
                self.cutoff / ratios.mass_to_cutoff
            )));
        }
        if self.cutoff > 1.0 / (self.eps * ratios.cutoff_to_regularization) * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "Lambda = {} exceeds 1 / (eps * {}) = {}",
                self.cutoff,
                ratios.cutoff_to_regularization,
                1.0 / (self.eps * ratios.cutoff_to_regularization)
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = SpatialGrid::new(2.0, 16, 1.0).unwrap();
        assert!((g.spacing * 16.0 - 4.0).abs() < 1e-15);
        assert!((g.coord(0) + 2.0 - g.spacing / 2.0).abs() < 1e-15);
        assert_eq!(g.unlinear(g.linear([3, 5, 7])), [3, 5, 7]);
        assert!(SpatialGrid::new(1.0, 16, 1.0).is_err());
    }

    #[test]
    fn ratio_guards() {
        let r = ScaleRatios::default();
        assert!(PhysicalParams::new(1.0, 0.01, 10.0, 0.1, r).is_ok());
        assert!(PhysicalParams::new(1.0, 0.01, 5.0, 0.1, r).is_err());
        assert!(PhysicalParams::new(1.0, 0.05, 10.0, 0.1, r).is_err());
    }
}
