use nalgebra::Vector3;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// A point of the Riemann sphere in unit-normalized homogeneous coordinates `[z0 : z1]`.
///
/// Affine coordinate `w = z0 / z1`; `w = 0` sits at the north pole `(0, 0, 1)` of the
/// embedding returned by [`SpherePoint::to_r3`], which is orientation compatible with the
/// complex orientation of `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub z0: C,
    pub z1: C,
}

impl SpherePoint {
    pub fn new(z0: C, z1: C) -> Self {
        let n = (z0.norm_sqr() + z1.norm_sqr()).sqrt();
        assert!(n > 0.0, "homogeneous coordinates must not both vanish");
        Self { z0: z0 / n, z1: z1 / n }
    }

    pub fn from_affine(w: C) -> Self {
        if w.norm() <= 1.0 {
            Self::new(w, ONE)
        } else {
            Self::new(ONE, w.inv())
        }
    }

    pub fn infinity() -> Self {
        Self { z0: ONE, z1: ZERO }
    }

    /// Spherical coordinates: `theta` is the polar angle from the north pole.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        Self::from_r3(&Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()))
    }

    pub fn to_spherical(&self) -> (f64, f64) {
        let x = self.to_r3();
        let theta = x.z.clamp(-1.0, 1.0).acos();
        let mut phi = x.y.atan2(x.x);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        (theta, phi)
    }

    /// Affine coordinate `z0 / z1`, `None` at infinity.
    pub fn affine(&self) -> Option<C> {
        if self.z1 == ZERO {
            None
        } else {
            Some(self.z0 / self.z1)
        }
    }

    pub fn to_r3(&self) -> Vector3<f64> {
        let p = self.z0 * self.z1.conj();
        Vector3::new(2.0 * p.re, 2.0 * p.im, self.z1.norm_sqr() - self.z0.norm_sqr())
    }

    pub fn from_r3(x: &Vector3<f64>) -> Self {
        let x = x.normalize();
        if x.z > 0.0 {
            let z1 = ((1.0 + x.z) / 2.0).sqrt();
            Self::new(C::new(x.x, x.y) / (2.0 * z1), C::new(z1, 0.0))
        } else {
            let z0 = ((1.0 - x.z) / 2.0).sqrt();
            Self::new(C::new(z0, 0.0), C::new(x.x, -x.y) / (2.0 * z0))
        }
    }

    /// The antipodal map `[z0 : z1] -> [-conj(z1) : conj(z0)]`.
    pub fn antipodal(&self) -> Self {
        Self { z0: -self.z1.conj(), z1: self.z0.conj() }
    }

    /// Chordal distance of the unit-sphere embedding, in `[0, 2]`.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        2.0 * (self.z0 * other.z1 - self.z1 * other.z0).norm()
    }

    pub fn normalization_error(&self) -> f64 {
        (self.z0.norm_sqr() + self.z1.norm_sqr() - 1.0).abs()
    }
}

pub fn antipodal(p: &SpherePoint) -> SpherePoint {
    p.antipodal()
}

/// An affine chart of the sphere, recentred by a rotation so that `center` has coordinate 0.
///
/// Chart coordinate of `p` is the affine coordinate of `R^* p`, where the unitary
/// `R = [[conj c1, c0], [-conj c0, c1]]` carries `[0 : 1]` to the centre. The pole of the chart
/// is the antipode of the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub center: SpherePoint,
}

impl Chart {
    /// Standard chart `w = z0 / z1`.
    pub fn standard() -> Self {
        Self { center: SpherePoint { z0: ZERO, z1: ONE } }
    }

    /// Chart centred at infinity, coordinate `-1 / w`.
    pub fn inverted() -> Self {
        Self { center: SpherePoint::infinity() }
    }

    pub fn centered_at(p: SpherePoint) -> Self {
        Self { center: p }
    }

    /// Integer tag for the two standard charts.
    pub fn tag(&self) -> Option<u8> {
        if *self == Self::standard() {
            Some(0)
        } else if *self == Self::inverted() {
            Some(1)
        } else {
            None
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Self::standard()),
            1 => Some(Self::inverted()),
            _ => None,
        }
    }

    /// Rotation columns `(R e0, R e1)`; `R e1` is the centre, `R e0` the pole.
    pub(crate) fn rotation(&self) -> [[C; 2]; 2] {
        let (c0, c1) = (self.center.z0, self.center.z1);
        [[c1.conj(), c0], [-c0.conj(), c1]]
    }

    pub fn pole(&self) -> SpherePoint {
        self.center.antipodal()
    }

    /// Homogeneous lift of a chart coordinate, `R (c, 1)`.
    pub fn lift(&self, c: C) -> (C, C) {
        let r = self.rotation();
        (r[0][0] * c + r[0][1], r[1][0] * c + r[1][1])
    }

    pub fn to_point(&self, c: C) -> SpherePoint {
        let (a, b) = self.lift(c);
        SpherePoint::new(a, b)
    }

    /// Homogeneous coordinates of `p` in the rotated frame, `R^* p`.
    pub fn rotated(&self, p: &SpherePoint) -> (C, C) {
        let r = self.rotation();
        (r[0][0].conj() * p.z0 + r[1][0].conj() * p.z1, r[0][1].conj() * p.z0 + r[1][1].conj() * p.z1)
    }

    /// Chart coordinate; `None` at the pole.
    pub fn coordinate(&self, p: &SpherePoint) -> Option<C> {
        let (q0, q1) = self.rotated(p);
        if q1.norm() < 1e-300 {
            None
        } else {
            Some(q0 / q1)
        }
    }

    /// Chordal distance from the pole.
    pub fn pole_distance(&self, p: &SpherePoint) -> f64 {
        p.distance(&self.pole())
    }
}

/// Round area density of the chart coordinate, `4 / (1 + |c|^2)^2`.
pub fn round_density(c: C) -> f64 {
    let s = 1.0 + c.norm_sqr();
    4.0 / (s * s)
}

/// Differential of the inclusion of a chart into R^3 at `c`, as columns for `d/dx`, `d/dy`.
pub fn chart_embedding_differential(chart: &Chart, c: C) -> (Vector3<f64>, Vector3<f64>) {
    let h = 1e-6;
    let d = |dc: C| (chart.to_point(c + dc * h).to_r3() - chart.to_point(c - dc * h).to_r3()) / (2.0 * h);
    (d(ONE), d(C::new(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_point(rng: &mut impl Rng) -> SpherePoint {
        SpherePoint::new(
            C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
            C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
        )
    }

    #[test]
    fn antipodal_examples() {
        let p = SpherePoint::new(ONE, ZERO);
        let q = p.antipodal();
        assert!(q.distance(&SpherePoint::new(ZERO, ONE)) < 1e-15);
        let w = SpherePoint::from_affine(ONE).antipodal().affine().unwrap();
        assert!((w + 1.0).norm() < 1e-15);
    }

    #[test]
    fn antipodal_is_fixed_point_free_involution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let a = p.antipodal();
            assert!(a.antipodal().distance(&p) < 1e-14);
            assert!((a.distance(&p) - 2.0).abs() < 1e-14);
            assert!((a.to_r3() + p.to_r3()).norm() < 1e-14);
        }
    }

    #[test]
    fn r3_round_trip_and_orientation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let p = random_point(&mut rng);
            assert!(SpherePoint::from_r3(&p.to_r3()).distance(&p) < 1e-14);
        }
        // d/dx and d/dy of the standard chart at 0 give a positively oriented frame
        let (ex, ey) = chart_embedding_differential(&Chart::standard(), ZERO);
        let n = SpherePoint::from_affine(ZERO).to_r3();
        assert!(n.dot(&ex.cross(&ey)) > 0.0);
    }

    #[test]
    fn charts_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let chart = Chart::centered_at(random_point(&mut rng));
            let p = random_point(&mut rng);
            let c = chart.coordinate(&p).unwrap();
            assert!(chart.to_point(c).distance(&p) < 1e-12);
            assert!(chart.coordinate(&chart.center).unwrap().norm() < 1e-14);
        }
        let w = C::new(0.3, -0.7);
        let c = Chart::inverted().coordinate(&SpherePoint::from_affine(w)).unwrap();
        assert!((c + w.inv()).norm() < 1e-14);
    }
}
