//! TOML run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::{theta_empirical, theta_exact, DensityField};
use crate::error::Error;
use crate::geometry::{
    place_linear_gaps, place_periodic, place_single, BaseRect, BrushSpec, ModelTooth, PlacementFamily,
    ToothPlacement,
};
use crate::mesh::MeshParams;
use crate::source::ScalarFn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tooth: ToothConfig,
    pub brush: BrushConfig,
    #[serde(default = "default_source")]
    pub source: ScalarFn,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_source() -> ScalarFn {
    ScalarFn::Const(1.0)
}

/// Either a preset name or an explicit polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToothConfig {
    /// `cylinder`, `two_branch`, `two_branch_normalized` or `t_shape`.
    pub preset: Option<String>,
    /// Cylinder height (default 1).
    pub height: Option<f64>,
    pub polygon: Option<Vec<[f64; 2]>>,
    pub omega: Option<[f64; 2]>,
    pub r1: Option<f64>,
    pub delta0: Option<f64>,
}

impl ToothConfig {
    pub fn preset(name: &str) -> Self {
        Self { preset: Some(name.into()), height: None, polygon: None, omega: None, r1: None, delta0: None }
    }

    pub fn build(&self) -> Result<ModelTooth, Error> {
        let mut t = match (&self.preset, &self.polygon) {
            (Some(_), Some(_)) => return Err(Error::Config("give either tooth.preset or tooth.polygon".into())),
            (Some(p), None) => match p.as_str() {
                "cylinder" => ModelTooth::cylinder(self.height.unwrap_or(1.0)),
                "two_branch" => ModelTooth::two_branch(),
                "two_branch_normalized" => ModelTooth::two_branch_normalized(),
                "t_shape" => ModelTooth::t_shape(),
                other => return Err(Error::Config(format!("unknown tooth preset '{other}'"))),
            },
            (None, Some(poly)) => {
                let omega = self.omega.ok_or_else(|| Error::Config("tooth.omega required with a polygon".into()))?;
                let height = poly.iter().map(|p| p[1]).fold(0.0, f64::max);
                let r1 = self
                    .r1
                    .unwrap_or_else(|| 1.0 + poly.iter().map(|p| p[0].abs()).fold(0.0, f64::max));
                let delta0 = self.delta0.ok_or_else(|| Error::Config("tooth.delta0 required with a polygon".into()))?;
                ModelTooth { polygon: poly.clone(), omega: (omega[0], omega[1]), height, r1, delta0 }
            }
            (None, None) => return Err(Error::Config("tooth.preset or tooth.polygon required".into())),
        };
        if self.preset.is_some() {
            if let Some(r1) = self.r1 {
                t.r1 = r1;
            }
            if let Some(d) = self.delta0 {
                t.delta0 = d;
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub x0: f64,
    pub x1: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    Periodic { fill: f64 },
    LinearGaps,
    /// One tooth of width `fill * eps` centered at `center`.
    Single { fill: f64, center: f64 },
    /// Fixed placements `[center, width]`, independent of `eps`.
    Custom { placements: Vec<[f64; 2]>, c_scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrushConfig {
    pub base: BaseConfig,
    pub omega_prime: [f64; 2],
    pub family: FamilyConfig,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h_base: f64,
    /// `xi` spacing on the reference tooth.
    pub h_tooth: f64,
    /// Row spacing in the teeth and element size of the graph meshes.
    pub h_y: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { h_base: 1.0 / 16.0, h_tooth: 1.0 / 8.0, h_y: 1.0 / 16.0 }
    }
}

impl MeshConfig {
    pub fn params(&self) -> MeshParams {
        MeshParams { h_base: self.h_base, h_tooth: self.h_tooth, h_y: self.h_y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityConfig {
    Exact,
    Empirical { window: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub cg_tol: f64,
    /// Overrides the default cutoff of the density estimate.
    #[serde(default)]
    pub theta_min: Option<f64>,
    #[serde(default = "default_density")]
    pub density: DensityConfig,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_density() -> DensityConfig {
    DensityConfig::Exact
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { cg_tol: default_tol(), theta_min: None, density: default_density() }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, Error> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(p: &Path) -> Result<Self, Error> {
        let s = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks spacings, tolerance and scales.
    pub fn check(&self) -> Result<(), Error> {
        let m = &self.mesh;
        if !(m.h_base > 0.0 && m.h_tooth > 0.0 && m.h_y > 0.0) {
            return Err(Error::Config("mesh spacings must be positive".into()));
        }
        if !(self.solver.cg_tol > 0.0) {
            return Err(Error::Config("solver.cg_tol must be positive".into()));
        }
        if self.brush.epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("epsilons must be positive".into()));
        }
        Ok(())
    }

    pub fn base_rect(&self) -> BaseRect {
        let b = &self.brush.base;
        BaseRect { x0: b.x0, x1: b.x1, depth: b.depth }
    }

    /// Brush of the configured family at scale `eps`.
    pub fn build_spec(&self, eps: f64) -> Result<BrushSpec, Error> {
        let tooth = self.tooth.build()?;
        let op = (self.brush.omega_prime[0], self.brush.omega_prime[1]);
        let base = self.base_rect();
        let spec = match &self.brush.family {
            FamilyConfig::Periodic { fill } => place_periodic(base, op, eps, *fill, &tooth)?,
            FamilyConfig::LinearGaps => place_linear_gaps(base, op, eps, &tooth)?,
            FamilyConfig::Single { fill, center } => place_single(base, op, eps, *fill, *center, &tooth)?,
            FamilyConfig::Custom { placements, c_scale } => {
                let spec = BrushSpec {
                    base,
                    omega_prime: op,
                    tooth,
                    placements: placements.iter().map(|p| ToothPlacement { center: p[0], width: p[1] }).collect(),
                    epsilon: eps,
                    c_scale: *c_scale,
                    family: PlacementFamily::Custom,
                };
                spec.validate()?;
                spec
            }
        };
        Ok(spec)
    }

    /// Density sampled at `xs` according to the solver settings.
    pub fn density(&self, spec: &BrushSpec, xs: &[f64]) -> Result<DensityField, Error> {
        let mut d = match self.solver.density {
            DensityConfig::Exact => theta_exact(spec, xs)?,
            DensityConfig::Empirical { window } => theta_empirical(spec, xs, window)?,
        };
        if let Some(tm) = self.solver.theta_min {
            d.theta_min = tm;
        }
        Ok(d)
    }
}
