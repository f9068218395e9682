use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{round_factor, WPoint, WeylChartStructure};
use crate::error::{Error, Result};

fn cylinder_metric(p: &WPoint, spatial_scale: f64) -> Matrix3<f64> {
    let s = round_factor(p.w) * spatial_scale;
    Matrix3::from_diagonal(&Vector3::new(-1.0, s, s))
}

/// Compactified de Sitter space: `-dT^2 + round`, `alpha = -2 tan T dT`, `u = cos T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeSitter {
    pub collar: f64,
}

impl Default for DeSitter {
    fn default() -> Self {
        Self { collar: 1e-3 }
    }
}

impl WeylChartStructure for DeSitter {
    fn metric(&self, p: &WPoint) -> Matrix3<f64> {
        cylinder_metric(p, 1.0)
    }
    fn alpha(&self, p: &WPoint) -> Vector3<f64> {
        Vector3::new(-2.0 * p.t.tan(), 0.0, 0.0)
    }
    fn defining_function(&self, p: &WPoint) -> f64 {
        p.t.cos()
    }
    fn boundary_times(&self) -> (f64, f64) {
        (-FRAC_PI_2, FRAC_PI_2)
    }
    fn collar(&self) -> f64 {
        self.collar
    }
    fn geodesic_alpha(&self, _p: &WPoint) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn name(&self) -> String {
        "desitter".into()
    }
}

/// Static cylinder `-dT^2 + round` with `alpha = 0` on `T in [-h, h]`, `u = 1 - (T/h)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticCylinder {
    pub half_height: f64,
}

impl Default for StaticCylinder {
    fn default() -> Self {
        Self { half_height: 1.0 }
    }
}

impl WeylChartStructure for StaticCylinder {
    fn metric(&self, p: &WPoint) -> Matrix3<f64> {
        cylinder_metric(p, 1.0)
    }
    fn alpha(&self, _p: &WPoint) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn defining_function(&self, p: &WPoint) -> f64 {
        1.0 - (p.t / self.half_height).powi(2)
    }
    fn boundary_times(&self) -> (f64, f64) {
        (-self.half_height, self.half_height)
    }
    fn name(&self) -> String {
        "cylinder".into()
    }
}

/// Flat chart patch `-dT^2 + dx^2 + dy^2` with constant `alpha = c dT`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatPatch {
    pub c: f64,
}

impl WeylChartStructure for FlatPatch {
    fn metric(&self, _p: &WPoint) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0))
    }
    fn alpha(&self, _p: &WPoint) -> Vector3<f64> {
        Vector3::new(self.c, 0.0, 0.0)
    }
    fn defining_function(&self, p: &WPoint) -> f64 {
        1.0 - p.t * p.t
    }
    fn boundary_times(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
    fn name(&self) -> String {
        "flat".into()
    }
}

/// Test double: the Weyl form of `inner` multiplied by `factor`.
pub struct ScaledAlpha<S> {
    pub inner: S,
    pub factor: f64,
}

impl<S: WeylChartStructure> WeylChartStructure for ScaledAlpha<S> {
    fn metric(&self, p: &WPoint) -> Matrix3<f64> {
        self.inner.metric(p)
    }
    fn alpha(&self, p: &WPoint) -> Vector3<f64> {
        self.inner.alpha(p) * self.factor
    }
    fn defining_function(&self, p: &WPoint) -> f64 {
        self.inner.defining_function(p)
    }
    fn boundary_times(&self) -> (f64, f64) {
        self.inner.boundary_times()
    }
    fn collar(&self) -> f64 {
        self.inner.collar()
    }
    fn name(&self) -> String {
        format!("{}-alpha-x{}", self.inner.name(), self.factor)
    }
}

/// Test double: de Sitter data with the sphere factor scaled by `u^2`, degenerate on the boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DegenerateBoundary;

impl WeylChartStructure for DegenerateBoundary {
    fn metric(&self, p: &WPoint) -> Matrix3<f64> {
        cylinder_metric(p, p.t.cos().powi(2))
    }
    fn alpha(&self, p: &WPoint) -> Vector3<f64> {
        Vector3::new(-2.0 * p.t.tan(), 0.0, 0.0)
    }
    fn defining_function(&self, p: &WPoint) -> f64 {
        p.t.cos()
    }
    fn boundary_times(&self) -> (f64, f64) {
        (-FRAC_PI_2, FRAC_PI_2)
    }
    fn name(&self) -> String {
        "degenerate-boundary".into()
    }
}

pub type ConformalPotential = Arc<dyn Fn(&WPoint) -> f64 + Send + Sync>;

/// `(e^{2 phi} g, alpha + 2 d phi)`: the same Weyl connection in another gauge.
pub struct ConformalRescaling<S> {
    pub inner: S,
    pub phi: ConformalPotential,
}

impl<S: WeylChartStructure> ConformalRescaling<S> {
    fn dphi(&self, p: &WPoint) -> Vector3<f64> {
        let h = 1e-5;
        let x = p.coords();
        let mut d = Vector3::zeros();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            let f = |s: f64| (self.phi)(&p.with_coords(&(x + e * s)));
            d[i] = (8.0 * (f(1.0) - f(-1.0)) - (f(2.0) - f(-2.0))) / (12.0 * h);
        }
        d
    }
}

impl<S: WeylChartStructure> WeylChartStructure for ConformalRescaling<S> {
    fn metric(&self, p: &WPoint) -> Matrix3<f64> {
        self.inner.metric(p) * (2.0 * (self.phi)(p)).exp()
    }
    fn alpha(&self, p: &WPoint) -> Vector3<f64> {
        self.inner.alpha(p) + self.dphi(p) * 2.0
    }
    fn defining_function(&self, p: &WPoint) -> f64 {
        self.inner.defining_function(p)
    }
    fn boundary_times(&self) -> (f64, f64) {
        self.inner.boundary_times()
    }
    fn collar(&self) -> f64 {
        self.inner.collar()
    }
    fn geodesic_alpha(&self, p: &WPoint) -> Vector3<f64> {
        self.inner.geodesic_alpha(p) + self.dphi(p) * 2.0
    }
    fn name(&self) -> String {
        format!("{}-rescaled", self.inner.name())
    }
}

/// JSON structure descriptor selecting one of the built-in analytic families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StructureDescriptor {
    Desitter,
    Cylinder {
        #[serde(default = "one")]
        half_height: f64,
    },
    Flat {
        #[serde(default)]
        c: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl StructureDescriptor {
    pub fn build(&self) -> Result<Box<dyn WeylChartStructure>> {
        Ok(match self {
            Self::Desitter => Box::new(DeSitter::default()),
            Self::Cylinder { half_height } => {
                if !(*half_height > 0.0) {
                    return Err(Error::ConfigInvalid("cylinder half_height must be positive".into()));
                }
                Box::new(StaticCylinder { half_height: *half_height })
            }
            Self::Flat { c } => Box::new(FlatPatch { c: *c }),
        })
    }
}
