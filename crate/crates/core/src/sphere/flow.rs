//! Orientation-preserving flows on the sphere generated by low-degree spherical harmonics.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: u32 = 4;
/// Upper bound on `|coef| * |time|` per harmonic.
pub const MAX_STRENGTH: f64 = 0.3;
const RK4_STEPS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarmonicKind {
    /// Tangential gradient of the harmonic.
    Gradient,
    /// Gradient rotated by a quarter turn, `x cross grad`.
    Rotational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub l: u32,
    pub m: i32,
    pub kind: HarmonicKind,
    pub coef: f64,
}

impl Harmonic {
    pub fn validate(&self, time: f64) -> Result<()> {
        if self.l == 0 || self.l > MAX_DEGREE || self.m.unsigned_abs() > self.l {
            return Err(Error::ConfigInvalid(format!("harmonic (l={}, m={}) out of range", self.l, self.m)));
        }
        if (self.coef * time).abs() > MAX_STRENGTH + 1e-12 || !self.coef.is_finite() {
            return Err(Error::ConfigInvalid(format!(
                "harmonic strength |coef * time| = {} exceeds {MAX_STRENGTH}",
                (self.coef * time).abs()
            )));
        }
        Ok(())
    }

    /// Unnormalized real solid harmonic `r^l P_l^|m|(z/r) cos(m phi)` (or `sin(|m| phi)` for
    /// negative `m`), written out as a polynomial in `x`, `y`, `z`.
    #[cfg(test)]
    fn solid(&self, x: &Vector3<f64>) -> f64 {
        self.solid_and_gradient(x).0
    }

    /// The solid harmonic as monomials `(i, j, k) -> coefficient of x^i y^j z^k`.
    fn polynomial(&self) -> Vec<([u8; 3], f64)> {
        let m = self.m.unsigned_abs();
        let mut radial = Vec::new();
        for (k, c) in legendre_derivative(self.l, m).iter().enumerate().filter(|(_, c)| **c != 0.0) {
            let j = ((self.l - m) as usize - k) / 2;
            let mut term = vec![([0, 0, k as u8], *c)];
            for _ in 0..j {
                term = multiply(&term, &[([2, 0, 0], 1.0), ([0, 2, 0], 1.0), ([0, 0, 2], 1.0)]);
            }
            radial.extend(term);
        }
        // Re or Im of (x + i y)^m by the binomial expansion
        let mut planar = Vec::new();
        let mut binom = 1.0;
        for p in 0..=m {
            let c = match (p % 4, self.m >= 0) {
                (0, true) => binom,
                (2, true) => -binom,
                (1, false) => binom,
                (3, false) => -binom,
                _ => 0.0,
            };
            if c != 0.0 {
                planar.push(([(m - p) as u8, p as u8, 0], c));
            }
            binom = binom * (m - p) as f64 / (p + 1) as f64;
        }
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        multiply(&radial, &planar).into_iter().map(|(e, c)| (e, c * sign)).collect()
    }

    #[cfg(test)]
    fn solid_and_gradient(&self, x: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let m = self.m.unsigned_abs();
        let coeffs = legendre_derivative(self.l, m);
        let r2 = x.norm_squared();
        let (mut radial, mut d_radial) = (0.0, Vector3::zeros());
        for (k, c) in coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0) {
            let j = ((self.l - m) as usize - k) / 2;
            let zk = x.z.powi(k as i32);
            let rj = r2.powi(j as i32);
            radial += c * zk * rj;
            let dr = if j > 0 { c * zk * j as f64 * r2.powi(j as i32 - 1) * 2.0 } else { 0.0 };
            d_radial += x * dr;
            if k > 0 {
                d_radial.z += c * k as f64 * x.z.powi(k as i32 - 1) * rj;
            }
        }
        let w = num_complex::Complex64::new(x.x, x.y);
        let planar = w.powu(m);
        let d_planar = if m > 0 { w.powu(m - 1) * m as f64 } else { num_complex::Complex64::new(0.0, 0.0) };
        let (p, px, py) =
            if self.m >= 0 { (planar.re, d_planar.re, -d_planar.im) } else { (planar.im, d_planar.im, d_planar.re) };
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        let grad = (d_radial * p + Vector3::new(px, py, 0.0) * radial) * sign;
        (sign * radial * p, grad)
    }

    #[cfg(test)]
    fn field(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let grad = self.solid_and_gradient(x).1;
        let tangential = grad - x * x.dot(&grad);
        let v = match self.kind {
            HarmonicKind::Gradient => tangential,
            HarmonicKind::Rotational => x.cross(&tangential),
        };
        v * self.coef
    }
}

fn multiply(a: &[([u8; 3], f64)], b: &[([u8; 3], f64)]) -> Vec<([u8; 3], f64)> {
    let mut out: Vec<([u8; 3], f64)> = Vec::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
            match out.iter_mut().find(|(f, _)| *f == e) {
                Some(slot) => slot.1 += ca * cb,
                None => out.push((e, ca * cb)),
            }
        }
    }
    out
}

/// Combined velocity field of a harmonic list, precompiled to the monomials of the summed
/// gradients: `v = P grad G + x cross P grad R`, `P` the tangential projection.
pub(crate) struct Field {
    terms: Vec<([usize; 3], Vector3<f64>, Vector3<f64>)>,
}

impl Field {
    pub fn new(harmonics: &[Harmonic]) -> Self {
        let mut terms: Vec<([usize; 3], Vector3<f64>, Vector3<f64>)> = Vec::new();
        for h in harmonics {
            for (e, c) in h.polynomial() {
                for axis in 0..3 {
                    if e[axis] == 0 {
                        continue;
                    }
                    let mut d = [e[0] as usize, e[1] as usize, e[2] as usize];
                    d[axis] -= 1;
                    let mut v = Vector3::zeros();
                    v[axis] = c * e[axis] as f64 * h.coef;
                    let slot = match terms.iter().position(|t| t.0 == d) {
                        Some(k) => k,
                        None => {
                            terms.push((d, Vector3::zeros(), Vector3::zeros()));
                            terms.len() - 1
                        }
                    };
                    match h.kind {
                        HarmonicKind::Gradient => terms[slot].1 += v,
                        HarmonicKind::Rotational => terms[slot].2 += v,
                    }
                }
            }
        }
        Self { terms }
    }

    pub fn velocity(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let mut pw = [[1.0; 4]; 3];
        for a in 0..3 {
            for k in 1..4 {
                pw[a][k] = pw[a][k - 1] * x[a];
            }
        }
        let (mut g, mut r) = (Vector3::zeros(), Vector3::zeros());
        for (e, tg, tr) in &self.terms {
            let m = pw[0][e[0]] * pw[1][e[1]] * pw[2][e[2]];
            g += tg * m;
            r += tr * m;
        }
        let tangential = |v: Vector3<f64>| v - x * x.dot(&v);
        tangential(g) + x.cross(&tangential(r))
    }
}

/// Coefficients (ascending powers) of the `m`-th derivative of the Legendre polynomial `P_l`.
fn legendre_derivative(l: u32, m: u32) -> [f64; 5] {
    let mut prev = [1.0, 0.0, 0.0, 0.0, 0.0];
    let mut cur = [0.0, 1.0, 0.0, 0.0, 0.0];
    if l == 0 {
        cur = prev;
    }
    for n in 1..l as usize {
        let nf = n as f64;
        let mut next = [0.0; 5];
        for k in 0..=n {
            next[k + 1] += (2.0 * nf + 1.0) * cur[k] / (nf + 1.0);
            next[k] -= nf * prev[k] / (nf + 1.0);
        }
        prev = cur;
        cur = next;
    }
    for _ in 0..m {
        let mut d = [0.0; 5];
        for k in 0..4 {
            d[k] = (k + 1) as f64 * cur[k + 1];
        }
        cur = d;
    }
    cur
}

#[cfg(test)]
fn velocity(harmonics: &[Harmonic], x: &Vector3<f64>) -> Vector3<f64> {
    harmonics.iter().map(|h| h.field(x)).sum()
}

/// Time-`time` map of the harmonic flow, realised as a fixed-step RK4 scheme projected back to
/// the sphere each step. The discrete map is itself smooth in the initial point.
pub fn flow_map(harmonics: &[Harmonic], time: f64, x0: &Vector3<f64>) -> Result<Vector3<f64>> {
    if time == 0.0 || harmonics.is_empty() {
        return Ok(*x0);
    }
    let field = Field::new(harmonics);
    let dt = time / RK4_STEPS as f64;
    let mut x = *x0;
    for step in 0..RK4_STEPS {
        let k1 = field.velocity(&x);
        let k2 = field.velocity(&(x + k1 * (dt / 2.0)));
        let k3 = field.velocity(&(x + k2 * (dt / 2.0)));
        let k4 = field.velocity(&(x + k3 * dt));
        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let n = next.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-2 {
            return Err(Error::FlowDivergence(format!("left the sphere at step {step} (|x| = {n})")));
        }
        x = next / n;
    }
    Ok(x)
}
