//! Weyl structures given by chart data `(g, alpha, u)` on `S^2 x [T-, T+]`.

mod compactness;
pub(crate) mod connection;
mod curvature;
mod structures;

pub use compactness::{conformal_compactness_check, CompactnessReport};
pub use connection::{nabla_metric_defect, weyl_connection_coeffs, ConnectionCoeffs};
pub use curvature::{curvature_ricci, ew_residual, RicciData};
pub use structures::{
    ConformalRescaling, DeSitter, DegenerateBoundary, FlatPatch, ScaledAlpha, StaticCylinder, StructureDescriptor,
};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C;

use crate::sphere::{Chart, SpherePoint};

/// A point `(T, w)` with `w` the coordinate in `chart`; `coords()` is `(T, Re w, Im w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WPoint {
    pub chart: Chart,
    pub t: f64,
    pub w: C,
}

impl WPoint {
    pub fn new(chart: Chart, t: f64, w: C) -> Self {
        Self { chart, t, w }
    }

    /// Point over `p` in the chart centred at `p`.
    pub fn centered(t: f64, p: SpherePoint) -> Self {
        Self { chart: Chart::centered_at(p), t, w: C::new(0.0, 0.0) }
    }

    pub fn coords(&self) -> Vector3<f64> {
        Vector3::new(self.t, self.w.re, self.w.im)
    }

    pub fn with_coords(&self, x: &Vector3<f64>) -> Self {
        Self { chart: self.chart, t: x[0], w: C::new(x[1], x[2]) }
    }

    pub fn sphere_point(&self) -> SpherePoint {
        self.chart.to_point(self.w)
    }
}

/// Chart data of a conformally compactified Weyl structure.
///
/// Index 0 is `T`; indices 1, 2 are the real and imaginary parts of the sphere coordinate.
/// Metrics have signature `(-, +, +)`.
pub trait WeylChartStructure: Send + Sync {
    fn metric(&self, p: &WPoint) -> Matrix3<f64>;
    fn alpha(&self, p: &WPoint) -> Vector3<f64>;
    /// Boundary defining function `u`, positive inside and vanishing on both boundary slices.
    fn defining_function(&self, p: &WPoint) -> f64;
    /// Times `(T-, T+)` of the boundary slices.
    fn boundary_times(&self) -> (f64, f64);
    /// Width of the boundary collars excluded from connection and curvature evaluations.
    fn collar(&self) -> f64 {
        1e-3
    }
    /// A 1-form smooth up to the boundary, used for null geodesics. Null geodesics of any Weyl
    /// connection of the conformal class coincide as unparameterized curves, so this choice does
    /// not change the scattering data.
    fn geodesic_alpha(&self, p: &WPoint) -> Vector3<f64> {
        self.alpha(p)
    }
    fn name(&self) -> String;
}

/// Round spatial metric factor `4 / (1 + |w|^2)^2`.
pub(crate) fn round_factor(w: C) -> f64 {
    crate::sphere::round_density(w)
}

/// Deterministic interior sample points at least `margin` inside the boundary slices.
pub fn interior_samples(structure: &dyn WeylChartStructure, n: usize, margin: f64, seed: u64) -> Vec<WPoint> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (t0, t1) = structure.boundary_times();
    (0..n)
        .map(|_| {
            let t = t0 + margin + (t1 - t0 - 2.0 * margin) * rng.gen::<f64>();
            let p = SpherePoint::from_spherical(
                (rng.gen::<f64>() * 2.0 - 1.0).acos(),
                rng.gen::<f64>() * std::f64::consts::TAU,
            );
            let chart = Chart::centered_at(SpherePoint::from_spherical(
                (rng.gen::<f64>() * 2.0 - 1.0).acos(),
                rng.gen::<f64>() * std::f64::consts::TAU,
            ));
            let w = chart.coordinate(&p).filter(|w| w.norm() < 2.0).unwrap_or(C::new(0.3, -0.2));
            WPoint::new(chart, t, w)
        })
        .collect()
}
