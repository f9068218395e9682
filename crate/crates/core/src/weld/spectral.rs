//! Boundary collocation on the unit circle.

use std::sync::Arc;

use num_complex::Complex64 as C;
use rustfft::{Fft, FftPlanner};

/// Forward transform normalized to Taylor/Laurent coefficients: `hat g_k = (1/M) sum g_j zeta_j^-k`.
pub(crate) struct Spectrum {
    fft: Arc<dyn Fft<f64>>,
    pub m: usize,
}

impl Spectrum {
    pub fn new(m: usize) -> Self {
        Self { fft: FftPlanner::new().plan_fft_forward(m), m }
    }

    pub fn forward(&self, values: &[C]) -> Vec<C> {
        let mut buf = values.to_vec();
        self.fft.process(&mut buf);
        let s = 1.0 / self.m as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    /// Coefficient of `zeta^k` for any integer `k`, modulo the node count.
    pub fn mode(modes: &[C], k: isize) -> C {
        let m = modes.len() as isize;
        modes[k.rem_euclid(m) as usize]
    }
}

pub(crate) fn nodes(m: usize) -> Vec<C> {
    (0..m).map(|j| C::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64)).collect()
}

pub(crate) fn horner(coeffs: &[C], z: C) -> C {
    coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, a| acc * z + a)
}

pub(crate) fn horner_derivative(coeffs: &[C], z: C) -> C {
    coeffs.iter().enumerate().skip(1).rev().fold(C::new(0.0, 0.0), |acc, (k, a)| acc * z + a * k as f64)
}

#[cfg(test)]
/// Second derivative of a polynomial.
pub(crate) fn horner_second(coeffs: &[C], z: C) -> C {
    coeffs.iter().enumerate().skip(2).rev().fold(C::new(0.0, 0.0), |acc, (k, a)| acc * z + a * (k * (k - 1)) as f64)
}

#[cfg(test)]
/// Gauss-Legendre polar grid on the closed unit disk: nodes and area weights.
pub(crate) fn disk_quadrature(n_r: usize, n_theta: usize) -> Vec<(C, f64)> {
    let (x, w) = crate::quad::gauss_legendre(n_r);
    let mut out = Vec::with_capacity(n_r * n_theta);
    let dt = std::f64::consts::TAU / n_theta as f64;
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * (xi + 1.0);
        for j in 0..n_theta {
            out.push((C::from_polar(r, (j as f64 + 0.5) * dt), 0.5 * wi * r * dt));
        }
    }
    out
}
