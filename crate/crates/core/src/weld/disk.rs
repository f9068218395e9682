use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::spectral::{horner, horner_derivative, nodes, Spectrum};
use crate::desitter::{gauge_reduce, DiskParam};
use crate::error::{Error, Result};
use crate::sphere::{Chart, MobiusMap, SpherePoint};

/// Boundary images closer than this (chordal) to a working chart's pole are rejected by the
/// public residual evaluators.
pub const POLE_MARGIN: f64 = 0.1;
/// The looser margin used inside the solver and chart changes. Strongly contracted factors near
/// the ends of null families have inradius close to `POLE_MARGIN`.
pub const SOLVER_POLE_MARGIN: f64 = 0.04;

/// A holomorphic disk `(F1, F2)` with both factors stored as degree-`n` Taylor polynomials in
/// their working charts.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicDisk {
    pub n: usize,
    pub f1: Vec<C>,
    pub f2: Vec<C>,
    pub chart1: Chart,
    pub chart2: Chart,
    /// Negative-frequency boundary energy at the last solve; NaN when unsolved.
    pub residual: f64,
}

pub(crate) fn pole_distance(c: C) -> f64 {
    2.0 / (1.0 + c.norm_sqr()).sqrt()
}

pub(crate) fn coordinate_checked(chart: &Chart, p: &SpherePoint, what: &str) -> Result<C> {
    match chart.coordinate(p) {
        Some(c) if pole_distance(c) >= SOLVER_POLE_MARGIN => Ok(c),
        _ => Err(Error::ChartPole(format!("{what} within {SOLVER_POLE_MARGIN} of the working chart pole"))),
    }
}

impl HolomorphicDisk {
    /// Taylor coefficients of two maps on the closed disk from their boundary values.
    pub fn from_maps(
        n: usize,
        chart1: Chart,
        chart2: Chart,
        f1: impl Fn(C) -> SpherePoint,
        f2: impl Fn(C) -> SpherePoint,
    ) -> Result<Self> {
        let m = 4 * n;
        let spec = Spectrum::new(m);
        let z = nodes(m);
        let mut v1 = Vec::with_capacity(m);
        let mut v2 = Vec::with_capacity(m);
        for zeta in &z {
            v1.push(coordinate_checked(&chart1, &f1(*zeta), "first factor")?);
            v2.push(coordinate_checked(&chart2, &f2(*zeta), "second factor")?);
        }
        let (s1, s2) = (spec.forward(&v1), spec.forward(&v2));
        Ok(Self { n, f1: s1[..=n].to_vec(), f2: s2[..=n].to_vec(), chart1, chart2, residual: f64::NAN })
    }

    pub fn from_mobius_pair_in(m1: &MobiusMap, m2: &MobiusMap, chart1: Chart, chart2: Chart, n: usize) -> Result<Self> {
        let lift = |z: C| SpherePoint::new(z, C::new(1.0, 0.0));
        Self::from_maps(n, chart1, chart2, |z| m1.apply(&lift(z)), |z| m2.apply(&lift(z)))
    }

    /// Disk of two Mobius factors in the charts centred at their values at `zeta = 0`.
    pub fn from_mobius_pair(m1: &MobiusMap, m2: &MobiusMap, n: usize) -> Result<Self> {
        let origin = SpherePoint::new(C::new(0.0, 0.0), C::new(1.0, 0.0));
        let (c1, c2) = (Chart::centered_at(m1.apply(&origin)), Chart::centered_at(m2.apply(&origin)));
        Self::from_mobius_pair_in(m1, m2, c1, c2, n)
    }

    /// De Sitter disk in its canonical gauge: `F1 = r zeta`, `F2 = -zeta / r` in the chart
    /// centred at the first image cap.
    pub fn from_desitter(param: &DiskParam, n: usize) -> Result<Self> {
        let rep = gauge_reduce(param).representative;
        let chart = Chart::centered_at(rep.first().apply(&SpherePoint::new(C::new(0.0, 0.0), C::new(1.0, 0.0))));
        Self::from_mobius_pair_in(&rep.first(), &rep.second(), chart, chart, n)
    }

    pub fn value1(&self, zeta: C) -> C {
        horner(&self.f1, zeta)
    }

    pub fn value2(&self, zeta: C) -> C {
        horner(&self.f2, zeta)
    }

    pub fn derivative1(&self, zeta: C) -> C {
        horner_derivative(&self.f1, zeta)
    }

    pub fn derivative2(&self, zeta: C) -> C {
        horner_derivative(&self.f2, zeta)
    }

    pub fn point1(&self, zeta: C) -> SpherePoint {
        self.chart1.to_point(self.value1(zeta))
    }

    pub fn point2(&self, zeta: C) -> SpherePoint {
        self.chart2.to_point(self.value2(zeta))
    }

    /// Resolution check: the last two coefficients relative to the largest, worst factor.
    pub fn tail(&self) -> f64 {
        let t = |c: &[C]| {
            let max = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let last = c.iter().rev().take(2).map(|z| z.norm()).fold(0.0, f64::max);
            if max == 0.0 {
                0.0
            } else {
                last / max
            }
        };
        t(&self.f1).max(t(&self.f2))
    }

    /// Pads or truncates both factors to degree `n`.
    pub fn with_degree(&self, n: usize) -> Self {
        let resize = |c: &[C]| {
            let mut v = c.to_vec();
            v.resize(n + 1, C::new(0.0, 0.0));
            v
        };
        Self { n, f1: resize(&self.f1), f2: resize(&self.f2), ..self.clone() }
    }

    /// Re-expands both factors in new working charts.
    pub fn rechart(&self, chart1: Chart, chart2: Chart) -> Result<Self> {
        let mut out = Self::from_maps(self.n, chart1, chart2, |z| self.point1(z), |z| self.point2(z))?;
        out.residual = self.residual;
        Ok(out)
    }

    /// Precomposes with the disk automorphism `zeta -> zeta'` given as a Mobius map.
    pub fn reparametrized(&self, phi: &MobiusMap) -> Result<Self> {
        let at = |z: C| phi.apply_affine(z);
        let mut out =
            Self::from_maps(self.n, self.chart1, self.chart2, |z| self.point1(at(z)), |z| self.point2(at(z)))?;
        out.residual = self.residual;
        Ok(out)
    }

    /// Sup chordal distance between the two parametrized disks on a polar sample grid.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=8 {
            for k in 0..64 {
                let z = C::from_polar(i as f64 / 8.0, std::f64::consts::TAU * k as f64 / 64.0);
                worst = worst.max(self.point1(z).distance(&other.point1(z)));
                worst = worst.max(self.point2(z).distance(&other.point2(z)));
            }
        }
        worst
    }

    /// Smallest chordal distance of the boundary images from the working chart poles.
    pub fn pole_clearance(&self) -> (f64, f64) {
        let z = nodes(4 * self.n);
        let d1 = z.iter().map(|z| pole_distance(self.value1(*z))).fold(f64::INFINITY, f64::min);
        let d2 = z.iter().map(|z| pole_distance(self.value2(*z))).fold(f64::INFINITY, f64::min);
        (d1, d2)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ChartJson {
    Tag(u8),
    Center([[f64; 2]; 2]),
}

impl From<&Chart> for ChartJson {
    fn from(c: &Chart) -> Self {
        match c.tag() {
            Some(t) => Self::Tag(t),
            None => Self::Center([[c.center.z0.re, c.center.z0.im], [c.center.z1.re, c.center.z1.im]]),
        }
    }
}

impl ChartJson {
    fn chart(&self) -> std::result::Result<Chart, String> {
        match self {
            Self::Tag(t) => Chart::from_tag(*t).ok_or_else(|| format!("unknown chart tag {t}")),
            Self::Center(c) => {
                let (z0, z1) = (C::new(c[0][0], c[0][1]), C::new(c[1][0], c[1][1]));
                if z0.norm() + z1.norm() == 0.0 {
                    return Err("zero chart centre".into());
                }
                Ok(Chart::centered_at(SpherePoint::new(z0, z1)))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DiskJson {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "F1")]
    f1: Vec<[f64; 2]>,
    #[serde(rename = "F2")]
    f2: Vec<[f64; 2]>,
    charts: [ChartJson; 2],
    residual: Option<f64>,
}

impl Serialize for HolomorphicDisk {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = |c: &[C]| c.iter().map(|z| [z.re, z.im]).collect();
        DiskJson {
            n: self.n,
            f1: pairs(&self.f1),
            f2: pairs(&self.f2),
            charts: [(&self.chart1).into(), (&self.chart2).into()],
            residual: self.residual.is_finite().then_some(self.residual),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HolomorphicDisk {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = DiskJson::deserialize(d)?;
        if j.n == 0 || j.f1.len() != j.n + 1 || j.f2.len() != j.n + 1 {
            return Err(D::Error::custom("coefficient lists must have length N + 1"));
        }
        let coeffs = |v: &[[f64; 2]]| v.iter().map(|p| C::new(p[0], p[1])).collect();
        Ok(Self {
            n: j.n,
            f1: coeffs(&j.f1),
            f2: coeffs(&j.f2),
            chart1: j.charts[0].chart().map_err(D::Error::custom)?,
            chart2: j.charts[1].chart().map_err(D::Error::custom)?,
            residual: j.residual.unwrap_or(f64::NAN),
        })
    }
}
