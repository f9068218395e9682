//! Legendrian lifts of holomorphic disks to projective 3-space.
//!
//! In working charts a disk `(F1, F2)` lifts to `z = (F1, 1, mu F2, mu)` with
//! `mu^2 = -F1' / F2'`. The contact form `z1 dz2 - z2 dz1 + z3 dz4 - z4 dz3` pulls back to
//! `-(dF1 + mu^2 dF2)`, which vanishes identically.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{conformal_factor, round_density, SphereDiffeo};
use crate::weld::spectral::{horner, horner_derivative, nodes, Spectrum};
use crate::weld::HolomorphicDisk;

/// Branch of the square root at `zeta = 0`: `+1` is the principal root there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum SignChoice {
    Plus,
    Minus,
}

impl SignChoice {
    pub fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

impl TryFrom<i8> for SignChoice {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Self::Plus),
            -1 => Ok(Self::Minus),
            _ => Err(format!("sign must be 1 or -1, got {v}")),
        }
    }
}

impl From<SignChoice> for i8 {
    fn from(s: SignChoice) -> i8 {
        s.value() as i8
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftedDisk {
    #[serde(flatten)]
    pub base: HolomorphicDisk,
    #[serde(with = "pairs")]
    pub mu: Vec<C>,
    pub sign: SignChoice,
}

mod pairs {
    use num_complex::Complex64 as C;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(|p| C::new(p[0], p[1])).collect())
    }
}

impl LiftedDisk {
    pub fn mu_at(&self, zeta: C) -> C {
        horner(&self.mu, zeta)
    }

    /// Homogeneous lift `(F1, 1, mu F2, mu)` at `zeta`.
    pub fn point(&self, zeta: C) -> [C; 4] {
        let mu = self.mu_at(zeta);
        [self.base.value1(zeta), C::new(1.0, 0.0), mu * self.base.value2(zeta), mu]
    }

    /// The circle action `(z3, z4) -> e^{i angle} (z3, z4)`.
    pub fn rotate_fiber(&self, angle: f64) -> Self {
        let u = C::from_polar(1.0, angle);
        Self { mu: self.mu.iter().map(|m| m * u).collect(), ..self.clone() }
    }

    /// Sup of `|mu^2 + F1'/F2'|` on the sampling grid.
    pub fn relation_residual(&self) -> f64 {
        grid()
            .iter()
            .map(|z| {
                let m = self.mu_at(*z);
                (m * m + self.base.derivative1(*z) / self.base.derivative2(*z)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Radii `0, 1/4, .., 1` times 64 angles.
fn grid() -> Vec<C> {
    let ring = nodes(64);
    let mut out = vec![C::new(0.0, 0.0)];
    for k in 1..=4 {
        let r = k as f64 / 4.0;
        out.extend(ring.iter().map(|z| z * r));
    }
    out
}

/// Winding number of a nonvanishing boundary sample around 0.
fn winding(values: &[C]) -> f64 {
    let mut total = 0.0;
    for k in 0..values.len() {
        total += (values[(k + 1) % values.len()] / values[k]).arg();
    }
    total / std::f64::consts::TAU
}

pub fn lift_disk(disk: &HolomorphicDisk, sign: SignChoice) -> Result<LiftedDisk> {
    let m = (8 * disk.n).max(64).next_power_of_two();
    let z = nodes(m);
    let d1: Vec<C> = z.iter().map(|z| disk.derivative1(*z)).collect();
    let d2: Vec<C> = z.iter().map(|z| disk.derivative2(*z)).collect();
    let scale = d1.iter().chain(&d2).map(|v| v.norm()).fold(0.0, f64::max);
    let floor = d1.iter().chain(&d2).map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    if !(floor > 1e-10 * scale) {
        return Err(Error::DerivativeZero);
    }
    // a holomorphic function with no boundary zeros and winding 0 has none inside
    if winding(&d1).abs() > 0.5 || winding(&d2).abs() > 0.5 {
        return Err(Error::DerivativeZero);
    }
    let g: Vec<C> = d1.iter().zip(&d2).map(|(a, b)| -a / b).collect();
    let mut log = Vec::with_capacity(m);
    let mut prev = g[0].ln();
    log.push(prev);
    for v in &g[1..] {
        prev += (v / g[log.len() - 1]).ln();
        log.push(prev);
    }
    let spec = Spectrum::new(m);
    let mut hat = spec.forward(&log);
    // branch at the origin: the mean is log g(0), brought to the principal strip
    let shift = (hat[0].im / std::f64::consts::TAU).round() * std::f64::consts::TAU;
    hat[0].im -= shift;
    hat[m / 2..].iter_mut().for_each(|c| *c = C::new(0.0, 0.0));
    let half: Vec<C> = z.iter().map(|z| (horner(&hat[..m / 2], *z) * 0.5).exp() * sign.value()).collect();
    let mut mu = spec.forward(&half);
    mu.truncate(2 * disk.n + 1);
    Ok(LiftedDisk { base: disk.clone(), mu, sign })
}

/// Sup over the grid of `|theta(dz/dzeta)|` for the form `z1 dz2 - z2 dz1 + w (z3 dz4 - z4 dz3)`.
pub fn weighted_legendrian_residual(lifted: &LiftedDisk, weight: C) -> f64 {
    grid()
        .iter()
        .map(|z| {
            let mu = lifted.mu_at(*z);
            let dmu = horner_derivative(&lifted.mu, *z);
            let (f2, df2) = (lifted.base.value2(*z), lifted.base.derivative2(*z));
            let first = -lifted.base.derivative1(*z);
            let second = mu * f2 * dmu - mu * (dmu * f2 + mu * df2);
            (first + weight * second).norm()
        })
        .fold(0.0, f64::max)
}

pub fn legendrian_residual(lifted: &LiftedDisk) -> f64 {
    weighted_legendrian_residual(lifted, C::new(1.0, 0.0))
}

/// Boundary conditions of a lift, each a max over the boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtpResidual {
    /// Chordal distance of `F2` from `psi(F1)`.
    pub graph: f64,
    /// Failure of the complex direction `[1 : -1/mu^2]` to contain a real graph tangent.
    pub direction: f64,
    /// `| |V|_h - 1 |` for the normalized represented vector.
    pub norm: f64,
}

impl UtpResidual {
    pub fn max(&self) -> f64 {
        self.graph.max(self.direction).max(self.norm)
    }
}

/// Checks that the boundary of a lift lies on the totally real locus of `psi`.
///
/// The represented vector of `(lambda, mu)` is `(1/lambda^2, -1/mu^2)` in chart coordinates.
/// It is normalized by rescaling `(lambda, mu)` so that its first component is the unit-`h`
/// multiple of the boundary tangent `i zeta F1'`, where `h` is `f g_round` on the first factor
/// (`f` the conformal factor of `psi`) plus `g_round` on the second.
pub fn boundary_utp_residual(lifted: &LiftedDisk, psi: &SphereDiffeo) -> Result<UtpResidual> {
    let disk = &lifted.base;
    let mut out = UtpResidual { graph: 0.0, direction: 0.0, norm: 0.0 };
    for zeta in nodes(128) {
        let (p, q) = (disk.point1(zeta), disk.point2(zeta));
        out.graph = out.graph.max(psi.eval(&p)?.distance(&q));
        let (c1, c2) = (disk.value1(zeta), disk.value2(zeta));
        let d = psi.chart_derivative(&disk.chart1, &disk.chart2, c1)?;
        let inv_mu2 = lifted.mu_at(zeta).powi(-2);
        // smallest singular value of u -> D psi(u) + u / mu^2, relative to |D psi|
        let a = crate::sphere::ChartDerivative { value: d.value, dz: d.dz + inv_mu2, dzbar: d.dzbar };
        let sv = a.real_matrix().singular_values();
        let dpsi = d.real_matrix().singular_values().max();
        out.direction = out.direction.max(sv.min() / dpsi);
        let u = C::new(0.0, 1.0) * zeta * disk.derivative1(zeta);
        let metric = |v1: C, v2: C| -> Result<f64> {
            let f = conformal_factor(psi, &p)?;
            Ok((f * round_density(c1) * v1.norm_sqr() + round_density(c2) * v2.norm_sqr()).sqrt())
        };
        let s = u / metric(u, d.apply(u))?;
        let v = (s, -s * inv_mu2);
        out.norm = out.norm.max((metric(v.0, v.1)? - 1.0).abs());
    }
    Ok(out)
}
