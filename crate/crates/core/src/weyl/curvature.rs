use nalgebra::{Matrix3, Vector3};

use super::connection::weyl_connection_coeffs;
use super::{WPoint, WeylChartStructure};
use crate::error::{Error, Result};

/// Outer differentiation step for the connection coefficients.
const CURVATURE_STEP: f64 = 1e-3;
/// Bound on the Richardson error estimate of the connection derivatives.
const CURVATURE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciData {
    /// `Ric_lj = R^k_{lkj}` with `R^k_{lij} = d_i Gamma^k_jl - d_j Gamma^k_il
    ///   + Gamma^k_im Gamma^m_jl - Gamma^k_jm Gamma^m_il`; positive on the round sphere.
    pub ricci: Matrix3<f64>,
    /// `Ric + Ric^T`.
    pub symmetrized: Matrix3<f64>,
    /// `tr_g(symmetrized) / 3`.
    pub f: f64,
    pub error: f64,
}

/// Symmetrized Ricci contraction of the Weyl connection at `p`.
pub fn curvature_ricci(w: &dyn WeylChartStructure, p: &WPoint) -> Result<RicciData> {
    let (t0, t1) = w.boundary_times();
    let margin = w.collar() + 2.0 * CURVATURE_STEP;
    if p.t < t0 + margin || p.t > t1 - margin {
        return Err(Error::ConfigInvalid(format!("T = {} lies inside the boundary collar", p.t)));
    }
    let conn = weyl_connection_coeffs(w, p)?;
    let x = p.coords();
    // dgamma[i][k][(j, l)] = d_i Gamma^k_jl
    let mut dgamma = [[Matrix3::zeros(); 3]; 3];
    let mut error: f64 = 0.0;
    for (i, di) in dgamma.iter_mut().enumerate() {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        let at = |s: f64| weyl_connection_coeffs(w, &p.with_coords(&(x + e * s)));
        let h = CURVATURE_STEP;
        let (p1, m1, p2, m2) = (at(h / 2.0)?, at(-h / 2.0)?, at(h)?, at(-h)?);
        for (k, dik) in di.iter_mut().enumerate() {
            let fine = (p1.gamma[k] - m1.gamma[k]) / h;
            let coarse = (p2.gamma[k] - m2.gamma[k]) / (2.0 * h);
            let rich = (fine * 4.0 - coarse) / 3.0;
            error = error.max((rich - fine).amax());
            *dik = rich;
        }
    }
    if error > CURVATURE_TOL {
        return Err(Error::StepTooLarge(error));
    }
    let g = &conn.gamma;
    let mut ricci = Matrix3::zeros();
    for l in 0..3 {
        for j in 0..3 {
            let mut r = 0.0;
            for k in 0..3 {
                // R^k_{l k j} with i = k
                r += dgamma[k][k][(j, l)] - dgamma[j][k][(k, l)];
                for m in 0..3 {
                    r += g[k][(k, m)] * g[m][(j, l)] - g[k][(j, m)] * g[m][(k, l)];
                }
            }
            ricci[(l, j)] = r;
        }
    }
    let symmetrized = ricci + ricci.transpose();
    let ginv = w.metric(p).try_inverse().ok_or(Error::SingularMetric)?;
    let f = (ginv * symmetrized).trace() / 3.0;
    Ok(RicciData { ricci, symmetrized, f, error })
}

/// Frobenius norm of the trace-free part of `g^{-1} (Ric + Ric^T)`.
pub fn ew_residual(w: &dyn WeylChartStructure, p: &WPoint) -> Result<f64> {
    let r = curvature_ricci(w, p)?;
    let mixed = w.metric(p).try_inverse().ok_or(Error::SingularMetric)? * r.symmetrized;
    Ok((mixed - Matrix3::identity() * r.f).norm())
}
