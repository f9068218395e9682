//! Areas of the two projections and the degree of the doubled disk.

use nalgebra::Vector3;
use num_complex::Complex64 as C;
use rayon::prelude::*;

use super::disk::HolomorphicDisk;
use super::spectral::{horner, horner_derivative, nodes};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::sphere::{conformal_factor, round_density, Chart, SphereDiffeo, SpherePoint};

/// Round area enclosed by the boundary curve of a polynomial disk, via the potential
/// `2 Im(conj w dw) / (1 + |w|^2)` of the round form.
pub(crate) fn omega_from_coeffs(f: &[C]) -> f64 {
    let m = (8 * f.len()).max(256);
    let sum: f64 = nodes(m)
        .iter()
        .map(|z| {
            let w = horner(f, *z);
            let dw = horner_derivative(f, *z) * C::new(0.0, 1.0) * z;
            2.0 * (w.conj() * dw).im / (1.0 + w.norm_sqr())
        })
        .sum();
    sum * std::f64::consts::TAU / m as f64
}

/// Gradient of [`omega_from_coeffs`] along `Re f_k`, `Im f_k` (interleaved).
pub(crate) fn omega_gradient(f: &[C]) -> Vec<f64> {
    let m = (8 * f.len()).max(256);
    let i = C::new(0.0, 1.0);
    let mut grad = vec![0.0; 2 * f.len()];
    for z in nodes(m) {
        let w = horner(f, z);
        let dw = horner_derivative(f, z) * i * z;
        let q = 1.0 + w.norm_sqr();
        let t = 2.0 * (w.conj() * dw).im;
        let mut zk = C::new(1.0, 0.0);
        for k in 0..f.len() {
            for (slot, unit) in [(2 * k, C::new(1.0, 0.0)), (2 * k + 1, i)] {
                let (d, dd) = (unit * zk, unit * zk * i * k as f64);
                let num = 2.0 * (d.conj() * dw + w.conj() * dd).im;
                grad[slot] += num / q - t * 2.0 * (w.conj() * d).re / (q * q);
            }
            zk *= z;
        }
    }
    let s = std::f64::consts::TAU / m as f64;
    grad.iter_mut().for_each(|g| *g *= s);
    grad
}

/// Round area of the second-factor projection.
pub fn omega_area(disk: &HolomorphicDisk) -> f64 {
    omega_from_coeffs(&disk.f2)
}

/// Polar grid on the unit disk with radial Gauss panels graded geometrically towards the
/// centre, so that strongly contracted factors stay resolved.
pub(crate) fn graded_disk_quadrature(n_theta: usize) -> Vec<(C, f64)> {
    let (x, w) = gauss_legendre(10);
    let mut edges = vec![0.0];
    edges.extend((0..=6).rev().map(|k| 0.5f64.powi(k)));
    let dt = std::f64::consts::TAU / n_theta as f64;
    let mut out = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let r = a + 0.5 * (b - a) * (xi + 1.0);
            for j in 0..n_theta {
                out.push((C::from_polar(r, (j as f64 + 0.5) * dt), 0.5 * (b - a) * wi * r * dt));
            }
        }
    }
    out
}

/// `omega_1`-area of the first projection, `omega_1 = -psi^* omega_2`.
pub fn first_area(psi: &SphereDiffeo, disk: &HolomorphicDisk) -> Result<f64> {
    graded_disk_quadrature(64)
        .par_iter()
        .map(|(z, w)| {
            let c = disk.value1(*z);
            let cf = conformal_factor(psi, &disk.chart1.to_point(c))?;
            Ok(w * cf * round_density(c) * disk.derivative1(*z).norm_sqr())
        })
        .sum()
}

/// Degree of the doubled disk: `(first_area + omega_area) / 4 pi`, rounded.
pub fn double_degree(psi: &SphereDiffeo, disk: &HolomorphicDisk) -> Result<i32> {
    let x = (first_area(psi, disk)? + omega_area(disk)) / (4.0 * std::f64::consts::PI);
    if (x - x.round()).abs() > 0.01 {
        return Err(Error::NonIntegral(x));
    }
    Ok(x.round() as i32)
}

/// Area-weighted centroid direction of one projection, independent of parametrization.
pub fn area_centroid(coeffs: &[C], chart: &Chart) -> SpherePoint {
    let sum: Vector3<f64> = graded_disk_quadrature(32)
        .iter()
        .map(|(z, w)| {
            let c = horner(coeffs, *z);
            chart.to_point(c).to_r3() * (w * round_density(c) * horner_derivative(coeffs, *z).norm_sqr())
        })
        .sum();
    SpherePoint::from_r3(&sum)
}

#[cfg(test)]
/// Round area of the first projection.
pub(crate) fn round_area(coeffs: &[C]) -> f64 {
    graded_disk_quadrature(32)
        .iter()
        .map(|(z, w)| w * round_density(horner(coeffs, *z)) * horner_derivative(coeffs, *z).norm_sqr())
        .sum()
}
