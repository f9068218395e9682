use std::ops::Mul;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::point::{Chart, SpherePoint};

/// An element of SL(2, C) acting projectively on the sphere.
/// JSON form is the row-major entry list `[[re, im]; 4]`, normalized to unit determinant on read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
}

impl MobiusMap {
    pub fn identity() -> Self {
        Self::new_unchecked(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0))
    }

    const fn new_unchecked(a: C, b: C, c: C, d: C) -> Self {
        Self { a, b, c, d }
    }

    /// Scales arbitrary non-singular entries to unit determinant.
    pub fn normalized(a: C, b: C, c: C, d: C) -> Self {
        let det = a * d - b * c;
        assert!(det.norm() > 0.0, "singular Mobius matrix");
        let k = det.sqrt().inv();
        Self { a: a * k, b: b * k, c: c * k, d: d * k }
    }

    pub fn det(&self) -> C {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        SpherePoint::new(self.a * p.z0 + self.b * p.z1, self.c * p.z0 + self.d * p.z1)
    }

    pub fn apply_vec(&self, v: (C, C)) -> (C, C) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }

    /// Right-handed rotation of the sphere about the unit vector `axis` by `angle`.
    pub fn rotation(axis: nalgebra::Vector3<f64>, angle: f64) -> Self {
        let c = SpherePoint::from_r3(&axis);
        let r = Self { a: c.z1.conj(), b: c.z0, c: -c.z0.conj(), d: c.z1 };
        let half = C::from_polar(1.0, angle / 2.0);
        let spin = Self { a: half, b: C::new(0.0, 0.0), c: C::new(0.0, 0.0), d: half.conj() };
        r * spin * r.inverse()
    }

    /// Affine action `(a c + b) / (c c + d)` on a finite coordinate.
    pub fn apply_affine(&self, z: C) -> C {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// First and second complex derivatives of the affine action (unit determinant).
    pub fn derivatives(&self, z: C) -> (C, C) {
        let q = self.c * z + self.d;
        (q.powi(-2), -2.0 * self.c * q.powi(-3))
    }

    /// Unitary of a chart as a Mobius map: `chart coordinate -> affine coordinate`.
    pub fn of_chart(chart: &Chart) -> Self {
        let (c0, c1) = (chart.center.z0, chart.center.z1);
        Self { a: c1.conj(), b: c0, c: -c0.conj(), d: c1 }
    }

    /// Coordinate change from chart `from` to chart `to`.
    pub fn chart_transition(from: &Chart, to: &Chart) -> Self {
        Self::of_chart(to).inverse() * Self::of_chart(from)
    }

    pub fn max_abs_entry(&self) -> f64 {
        [self.a, self.b, self.c, self.d].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Mul for MobiusMap {
    type Output = MobiusMap;

    fn mul(self, o: MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

impl Serialize for MobiusMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [[self.a.re, self.a.im], [self.b.re, self.b.im], [self.c.re, self.c.im], [self.d.re, self.d.im]].serialize(s)
    }
}

impl<'de> Deserialize<'de> for MobiusMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let e = <[[f64; 2]; 4]>::deserialize(d)?;
        let z = |k: usize| C::new(e[k][0], e[k][1]);
        let det = z(0) * z(3) - z(1) * z(2);
        if det.norm() < 1e-300 || !det.is_finite() {
            return Err(serde::de::Error::custom("singular Mobius matrix"));
        }
        Ok(MobiusMap::normalized(z(0), z(1), z(2), z(3)))
    }
}

pub fn mobius_apply(m: &MobiusMap, p: &SpherePoint) -> SpherePoint {
    m.apply(p)
}
