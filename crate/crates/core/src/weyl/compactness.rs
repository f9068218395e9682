use nalgebra::{Matrix2, Vector3};
use serde::Serialize;

use super::{WPoint, WeylChartStructure};
use crate::quad::fibonacci_sphere;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckItem {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckItem {
    fn at_least(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance, pass: value >= tolerance }
    }
    fn at_most(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance, pass: value <= tolerance }
    }
}

/// Conformal-compactness checklist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompactnessReport {
    /// Smallest `|det g|` over boundary samples.
    pub nondegeneracy: CheckItem,
    /// Sup of `|alpha - 2 du / u|` over the collar grid, extrapolated to `u = 0`.
    pub regular_alpha: CheckItem,
    /// Sup of `|d alpha|` at boundary collar samples.
    pub closed_alpha: CheckItem,
    /// Smallest eigenvalue of the metric on boundary tangent planes.
    pub spacelike_boundary: CheckItem,
    pub pass: bool,
}

/// Fourth-order central gradient.
fn gradient(f: &dyn Fn(&WPoint) -> f64, p: &WPoint, h: f64) -> Vector3<f64> {
    let x = p.coords();
    Vector3::from_fn(|i, _| {
        let mut e = Vector3::zeros();
        e[i] = h;
        let at = |s: f64| f(&p.with_coords(&(x + e * s)));
        (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
    })
}

fn regular_alpha(w: &dyn WeylChartStructure, p: &WPoint) -> Vector3<f64> {
    let u = w.defining_function(p);
    w.alpha(p) - gradient(&|q| w.defining_function(q), p, 1e-4) * (2.0 / u)
}

pub fn conformal_compactness_check(w: &dyn WeylChartStructure) -> CompactnessReport {
    let (t0, t1) = w.boundary_times();
    let delta = w.collar();
    let sites: Vec<WPoint> = fibonacci_sphere(24)
        .into_iter()
        .enumerate()
        .map(|(k, p)| WPoint::centered(if k % 2 == 0 { t0 } else { t1 }, p))
        .collect();
    let mut det_min = f64::INFINITY;
    let mut eig_min = f64::INFINITY;
    for p in &sites {
        let g = w.metric(p);
        det_min = det_min.min(g.determinant().abs());
        let block = Matrix2::new(g[(1, 1)], g[(1, 2)], g[(2, 1)], g[(2, 2)]);
        eig_min = eig_min.min(block.symmetric_eigenvalues().min());
    }
    // (ii): samples at distance k delta from each boundary slice, quadratically extrapolated.
    let mut reg_sup: f64 = 0.0;
    let mut dalpha_sup: f64 = 0.0;
    for p in &sites {
        let sign = if p.t == t0 { 1.0 } else { -1.0 };
        let at = |k: f64| regular_alpha(w, &WPoint { t: p.t + sign * k * delta, ..*p });
        let (a1, a2, a3) = (at(1.0), at(2.0), at(3.0));
        let extrapolated = a1 * 3.0 - a2 * 3.0 + a3;
        reg_sup = reg_sup.max(a1.amax()).max(a2.amax()).max(extrapolated.amax());
        let q = WPoint { t: p.t + sign * 2.0 * delta, ..*p };
        let h = 1e-4;
        let mut da: f64 = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let di = gradient(&|r| w.alpha(r)[j], &q, h)[i];
                let dj = gradient(&|r| w.alpha(r)[i], &q, h)[j];
                da = da.max((di - dj).abs());
            }
        }
        dalpha_sup = dalpha_sup.max(da);
    }
    let nondegeneracy = CheckItem::at_least(det_min, 1e-8);
    let regular_alpha = CheckItem::at_most(reg_sup, 1.0 / delta.sqrt());
    let closed_alpha = CheckItem::at_most(dalpha_sup, 1e-6);
    let spacelike_boundary = CheckItem::at_least(eig_min, 1e-8);
    let pass = nondegeneracy.pass && regular_alpha.pass && closed_alpha.pass && spacelike_boundary.pass;
    CompactnessReport { nondegeneracy, regular_alpha, closed_alpha, spacelike_boundary, pass }
}
