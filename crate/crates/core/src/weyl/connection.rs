use nalgebra::{Matrix3, Vector3};

use super::{WPoint, WeylChartStructure};
use crate::error::{Error, Result};

/// `gamma[k][(i, j)] = Gamma^k_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionCoeffs {
    pub gamma: [Matrix3<f64>; 3],
    /// Richardson estimate of the finite-difference error.
    pub error: f64,
}

impl ConnectionCoeffs {
    /// `Gamma^k_ij v^i w^j`.
    pub fn contract(&self, v: &Vector3<f64>, w: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|k, _| v.dot(&(self.gamma[k] * w)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..3).map(|k| (self.gamma[k] - other.gamma[k]).amax()).fold(0.0, f64::max)
    }
}

/// Central difference of a matrix field along each coordinate, with one Richardson level.
pub(crate) fn metric_derivatives(f: &dyn Fn(&WPoint) -> Matrix3<f64>, p: &WPoint, h: f64) -> ([Matrix3<f64>; 3], f64) {
    let x = p.coords();
    let mut out = [Matrix3::zeros(); 3];
    let mut err: f64 = 0.0;
    for (i, d) in out.iter_mut().enumerate() {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        let diff = |s: f64| (f(&p.with_coords(&(x + e * s))) - f(&p.with_coords(&(x - e * s)))) / (2.0 * s);
        let (coarse, fine) = (diff(h), diff(h / 2.0));
        let rich = (fine * 4.0 - coarse) / 3.0;
        err = err.max((rich - fine).amax());
        *d = rich;
    }
    (out, err)
}

/// `eps^(1/5)` balances roundoff against the fourth-order error left after one Richardson level.
fn step(p: &WPoint) -> f64 {
    f64::EPSILON.powf(0.2) * p.coords().amax().max(1.0)
}

/// Christoffel symbols of `g` with the given 1-form: `Gamma_LC - (alpha_i delta^k_j +
/// alpha_j delta^k_i - g_ij alpha^k) / 2`, so that `nabla g = alpha (x) g`.
pub(crate) fn connection_with(
    w: &dyn WeylChartStructure,
    p: &WPoint,
    alpha: &Vector3<f64>,
) -> Result<ConnectionCoeffs> {
    let g = w.metric(p);
    if !(g.determinant().abs() > 1e-14 * g.amax().powi(3)) {
        return Err(Error::SingularMetric);
    }
    let ginv = g.try_inverse().ok_or(Error::SingularMetric)?;
    let (dg, error) = metric_derivatives(&|q| w.metric(q), p, step(p));
    let a_up = ginv * alpha;
    let mut gamma = [Matrix3::zeros(); 3];
    for (k, gk) in gamma.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let mut lc = 0.0;
                for l in 0..3 {
                    lc += 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                let di = if k == j { alpha[i] } else { 0.0 };
                let dj = if k == i { alpha[j] } else { 0.0 };
                gk[(i, j)] = lc - 0.5 * (di + dj - g[(i, j)] * a_up[k]);
            }
        }
    }
    Ok(ConnectionCoeffs { gamma, error })
}

pub fn weyl_connection_coeffs(w: &dyn WeylChartStructure, p: &WPoint) -> Result<ConnectionCoeffs> {
    connection_with(w, p, &w.alpha(p))
}

/// Max entry of `nabla_k g_ij - alpha_k g_ij`, with `nabla g` assembled from differences of `g`.
pub fn nabla_metric_defect(w: &dyn WeylChartStructure, p: &WPoint) -> Result<f64> {
    let conn = weyl_connection_coeffs(w, p)?;
    let g = w.metric(p);
    let alpha = w.alpha(p);
    let (dg, _) = metric_derivatives(&|q| w.metric(q), p, 1e-3);
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = dg[k][(i, j)] - alpha[k] * g[(i, j)];
                for l in 0..3 {
                    v -= conn.gamma[l][(k, i)] * g[(l, j)] + conn.gamma[l][(k, j)] * g[(i, l)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::structures::*;
    use super::super::{interior_samples, WeylChartStructure};
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn zero_alpha_gives_levi_civita_of_round_factor() {
        // Conformally flat chart metric rho |dw|^2: Gamma^1_11 = d_x log(rho) / 2 = -2x / (1 + |w|^2).
        let cyl = StaticCylinder::default();
        let p = WPoint::new(crate::sphere::Chart::standard(), 0.2, C::new(0.3, 0.4));
        let c = weyl_connection_coeffs(&cyl, &p).unwrap();
        let s = 1.0 + p.w.norm_sqr();
        assert!((c.gamma[1][(1, 1)] + 2.0 * p.w.re / s).abs() < 1e-9);
        assert!(c.gamma[0].amax() < 1e-12);
    }

    #[test]
    fn flat_patch_matches_closed_form() {
        let cst = 0.7;
        let flat = FlatPatch { c: cst };
        let p = WPoint::new(crate::sphere::Chart::standard(), 0.1, C::new(0.2, 0.1));
        let conn = weyl_connection_coeffs(&flat, &p).unwrap();
        let g = flat.metric(&p);
        let a = Vector3::new(cst, 0.0, 0.0);
        let a_up = g.try_inverse().unwrap() * a;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let di = if k == j { a[i] } else { 0.0 };
                    let dj = if k == i { a[j] } else { 0.0 };
                    let expected = -0.5 * (di + dj - g[(i, j)] * a_up[k]);
                    assert!((conn.gamma[k][(i, j)] - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn desitter_connection_preserves_metric_up_to_alpha() {
        let ds = DeSitter::default();
        for p in interior_samples(&ds, 100, 0.2, 1) {
            let d = nabla_metric_defect(&ds, &p).unwrap();
            assert!(d < 1e-8, "{d}");
        }
    }

    #[test]
    fn conformal_rescaling_leaves_connection_unchanged() {
        let ds = DeSitter::default();
        let phi: ConformalPotential =
            Arc::new(|p: &WPoint| 0.3 * (p.t).sin() + 0.2 * p.w.re * p.w.im - 0.1 * p.w.norm_sqr());
        let rescaled = ConformalRescaling { inner: DeSitter::default(), phi };
        for p in interior_samples(&ds, 30, 0.3, 2) {
            let a = weyl_connection_coeffs(&ds, &p).unwrap();
            let b = weyl_connection_coeffs(&rescaled, &p).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-8, "{}", a.max_abs_diff(&b));
        }
    }

    #[test]
    fn singular_metric_is_reported() {
        let p = WPoint::new(crate::sphere::Chart::standard(), std::f64::consts::FRAC_PI_2, C::new(0.1, 0.0));
        assert_eq!(weyl_connection_coeffs(&DegenerateBoundary, &p).unwrap_err(), Error::SingularMetric);
    }
}
