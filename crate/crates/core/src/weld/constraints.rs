//! Constraint selectors: gauge fixing plus a position within the moduli family.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use super::area::{omega_from_coeffs, omega_gradient};
use super::disk::coordinate_checked;
use super::spectral::{horner, horner_derivative};
use crate::error::Result;
use crate::sphere::{Chart, MobiusMap, SpherePoint};

/// Which family a selector traces when its parameter is released.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Timelike,
    Null,
    Spacelike,
}

/// Each selector contributes five anchor equations and one scalar family parameter:
///
/// - `CenterPoint`: `F1(0) = z`, `arg F1'(0) = 0`, `F2(0) = w`; parameter `ln |F1'(0)|`, both
///   read in the chart centred at `z`.
/// - `BoundaryContact`: `F1(1) = x`, boundary tangent at `zeta = 1` along `direction` (in the
///   chart centred at `x`) and `F1(0)` at the first working chart centre; parameter `Omega`.
/// - `TwoBoundaryPoints`: `F1(1) = x`, `F1(-1) = y`, `F1(i)` equidistant from both; parameter
///   the boundary tangent angle at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeldConstraints {
    CenterPoint {
        #[serde(with = "point_json")]
        z: SpherePoint,
        #[serde(with = "point_json")]
        w: SpherePoint,
        radius: f64,
    },
    BoundaryContact {
        #[serde(with = "point_json")]
        x: SpherePoint,
        direction: f64,
    },
    TwoBoundaryPoints {
        #[serde(with = "point_json")]
        x: SpherePoint,
        #[serde(with = "point_json")]
        y: SpherePoint,
    },
}

/// Points as affine `[re, im]`, `"inf"`, or homogeneous `{"z0": .., "z1": ..}`.
pub(crate) mod point_json {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Affine([f64; 2]),
        Infinity(String),
        Homogeneous { z0: [f64; 2], z1: [f64; 2] },
    }

    pub fn serialize<S: serde::Serializer>(p: &SpherePoint, s: S) -> std::result::Result<S::Ok, S::Error> {
        match p.affine() {
            Some(w) if w.norm() <= 1e6 => Repr::Affine([w.re, w.im]).serialize(s),
            _ => Repr::Homogeneous { z0: [p.z0.re, p.z0.im], z1: [p.z1.re, p.z1.im] }.serialize(s),
        }
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<SpherePoint, D::Error> {
        use serde::de::Error as _;
        match Repr::deserialize(d)? {
            Repr::Affine(a) => Ok(SpherePoint::from_affine(C::new(a[0], a[1]))),
            Repr::Infinity(s) if s == "inf" => Ok(SpherePoint::infinity()),
            Repr::Infinity(s) => Err(D::Error::custom(format!("unknown point {s:?}"))),
            Repr::Homogeneous { z0, z1 } => {
                let (a, b) = (C::new(z0[0], z0[1]), C::new(z1[0], z1[1]));
                if a.norm() + b.norm() == 0.0 {
                    return Err(D::Error::custom("zero homogeneous coordinates"));
                }
                Ok(SpherePoint::new(a, b))
            }
        }
    }
}

pub(crate) const ANCHORS: usize = 5;

fn wrap_near(angle: f64, reference: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    reference + (angle - reference + std::f64::consts::PI).rem_euclid(tau) - std::f64::consts::PI
}

/// Tangent of `F1` at a boundary point `zeta`, read in the chart centred at `at`.
fn boundary_tangent(a: &[C], chart1: &Chart, at: &SpherePoint, zeta: C) -> C {
    let m = MobiusMap::chart_transition(chart1, &Chart::centered_at(*at));
    m.derivatives(horner(a, zeta)).0 * C::new(0.0, 1.0) * zeta * horner_derivative(a, zeta)
}

impl WeldConstraints {
    pub fn kind(&self) -> FamilyKind {
        match self {
            Self::CenterPoint { .. } => FamilyKind::Timelike,
            Self::BoundaryContact { .. } => FamilyKind::Null,
            Self::TwoBoundaryPoints { .. } => FamilyKind::Spacelike,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        match self {
            Self::CenterPoint { radius, .. } if !(radius.is_finite() && *radius > 0.0) => {
                Err(Error::ConfigInvalid(format!("center-point radius must be positive, got {radius}")))
            }
            Self::BoundaryContact { direction, .. } if !direction.is_finite() => {
                Err(Error::ConfigInvalid("contact direction must be finite".into()))
            }
            Self::TwoBoundaryPoints { x, y } if x.distance(y) < 1e-6 => {
                Err(Error::ConfigInvalid("boundary points must be distinct".into()))
            }
            _ => Ok(()),
        }
    }

    /// Parameter value fixed by the selector itself, if any.
    pub fn fixed_parameter(&self) -> Option<f64> {
        match self {
            Self::CenterPoint { radius, .. } => Some(radius.ln()),
            _ => None,
        }
    }

    /// Jacobians of [`Self::rows`] along the real parts of `a` and of `f`. The `a` part is by
    /// central differences; the `f` part is analytic.
    pub(crate) fn jacobians(
        &self,
        a: &[C],
        f: &[C],
        chart1: &Chart,
        chart2: &Chart,
        reference: f64,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (na, nf) = (2 * a.len(), 2 * f.len());
        let mut da = DMatrix::zeros(ANCHORS + 1, na);
        let mut df = DMatrix::zeros(ANCHORS + 1, nf);
        // Omega is the only row reading `f` beyond its constant term
        let empty = [C::new(0.0, 0.0)];
        let f_for_a: &[C] = if matches!(self, Self::BoundaryContact { .. }) { &empty } else { f };
        let h = 1e-7;
        for u in 0..na {
            let mut w = a.to_vec();
            let step = if u % 2 == 0 { C::new(h, 0.0) } else { C::new(0.0, h) };
            w[u / 2] += step;
            let (plus, pp) = self.rows(&w, f_for_a, chart1, chart2, reference)?;
            w[u / 2] -= step * 2.0;
            let (minus, pm) = self.rows(&w, f_for_a, chart1, chart2, reference)?;
            for r in 0..ANCHORS {
                da[(r, u)] = (plus[r] - minus[r]) / (2.0 * h);
            }
            if !matches!(self, Self::BoundaryContact { .. }) {
                da[(ANCHORS, u)] = (pp - pm) / (2.0 * h);
            }
        }
        match self {
            Self::CenterPoint { .. } => {
                df[(3, 0)] = 1.0;
                df[(4, 1)] = 1.0;
            }
            Self::BoundaryContact { .. } => {
                for (u, g) in omega_gradient(f).into_iter().enumerate() {
                    df[(ANCHORS, u)] = g;
                }
            }
            Self::TwoBoundaryPoints { .. } => {}
        }
        Ok((da, df))
    }

    /// Anchor equations and the family parameter for coefficients `a` (first factor) and
    /// `f` (second factor). Angles are unwrapped next to `reference`.
    pub(crate) fn rows(
        &self,
        a: &[C],
        f: &[C],
        chart1: &Chart,
        chart2: &Chart,
        reference: f64,
    ) -> Result<([f64; ANCHORS], f64)> {
        let one = C::new(1.0, 0.0);
        Ok(match self {
            Self::CenterPoint { z, w, .. } => {
                let zc = coordinate_checked(chart1, z, "center point")?;
                let wc = coordinate_checked(chart2, w, "second center point")?;
                let m = MobiusMap::chart_transition(chart1, &Chart::centered_at(*z));
                let d = m.derivatives(a[0]).0 * a[1];
                let (dz, dw) = (a[0] - zc, f[0] - wc);
                ([dz.re, dz.im, d.im, dw.re, dw.im], d.norm().ln())
            }
            Self::BoundaryContact { x, direction } => {
                let xc = coordinate_checked(chart1, x, "contact point")?;
                let e = horner(a, one) - xc;
                let t = boundary_tangent(a, chart1, x, one);
                let dir = (t * C::from_polar(1.0, -direction)).im / t.norm();
                ([a[0].re, a[0].im, e.re, e.im, dir], omega_from_coeffs(f))
            }
            Self::TwoBoundaryPoints { x, y } => {
                let (xc, yc) = (
                    coordinate_checked(chart1, x, "boundary point")?,
                    coordinate_checked(chart1, y, "boundary point")?,
                );
                let (ex, ey) = (horner(a, one) - xc, horner(a, -one) - yc);
                let mid = chart1.to_point(horner(a, C::new(0.0, 1.0)));
                let eq = mid.distance(x).powi(2) - mid.distance(y).powi(2);
                let t = boundary_tangent(a, chart1, x, one);
                ([ex.re, ex.im, ey.re, ey.im, eq], wrap_near(t.arg(), reference))
            }
        })
    }
}
