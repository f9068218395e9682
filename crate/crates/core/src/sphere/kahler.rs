use nalgebra::Vector3;

use super::diffeo::{active_chart, SphereDiffeo};
use super::point::{round_density, SpherePoint};
use crate::error::{Error, Result};
use crate::quad::SphereQuadrature;

/// Density of `omega_1 = -psi^* omega_2` against the round form, with its quadrature grid.
#[derive(Debug, Clone)]
pub struct KahlerData {
    pub psi: SphereDiffeo,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl KahlerData {
    pub fn conformal_factor(&self, p: &SpherePoint) -> Result<f64> {
        conformal_factor(&self.psi, p)
    }

    /// Total `omega_1` mass over the product Gauss-Legendre grid.
    pub fn total_mass(&self) -> Result<f64> {
        let q = SphereQuadrature::new(self.n_theta, self.n_phi);
        let mut total = 0.0;
        for (p, w) in q.points.iter().zip(&q.weights) {
            let f = self.conformal_factor(p)?;
            if f <= 0.0 {
                return Err(Error::NonPositiveDensity(f));
            }
            total += w * f;
        }
        Ok(total)
    }
}

/// `-(psi^* omega_2 / omega_2)(p)`, computed in the active charts at `p` and `psi(p)`.
pub fn conformal_factor(psi: &SphereDiffeo, p: &SpherePoint) -> Result<f64> {
    let ci = active_chart(p);
    let c = ci.coordinate(p).ok_or_else(|| Error::ChartPole("sample at chart pole".into()))?;
    let q = psi.eval(p)?;
    let d = psi.chart_derivative(&ci, &active_chart(&q), c)?;
    Ok(-round_density(d.value) * d.det() / round_density(c))
}

pub fn pullback_area_data(psi: &SphereDiffeo) -> Result<KahlerData> {
    let data = KahlerData { psi: psi.clone(), n_theta: 128, n_phi: 256 };
    for p in SphereQuadrature::new(16, 32).points {
        let f = data.conformal_factor(&p)?;
        if f <= 0.0 {
            return Err(Error::NonPositiveDensity(f));
        }
    }
    Ok(data)
}

fn tangent_frame(x: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if x.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (seed - x * x.dot(&seed)).normalize();
    (u, x.cross(&u))
}

/// Pushes an ambient tangent vector through `map` by a fourth-order central stencil.
fn push_forward(
    map: &impl Fn(&SpherePoint) -> Result<SpherePoint>,
    x: &Vector3<f64>,
    v: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    let h = 1e-3;
    let f = |t: f64| -> Result<Vector3<f64>> { Ok(map(&SpherePoint::from_r3(&(x + v * t)))?.to_r3()) };
    Ok((f(-2.0 * h)? - f(2.0 * h)? + (f(h)? - f(-h)?) * 8.0) / (12.0 * h))
}

/// `omega_1 + omega_2` on the tangent plane of the graph of `map` at `p`, using the density of
/// `data` for the first factor and ambient differences for the second.
pub fn graph_form_residual(
    data: &KahlerData,
    map: impl Fn(&SpherePoint) -> Result<SpherePoint>,
    p: &SpherePoint,
) -> Result<f64> {
    let x = p.to_r3();
    let (u, v) = tangent_frame(&x);
    let y = map(p)?.to_r3();
    let (pu, pv) = (push_forward(&map, &x, &u)?, push_forward(&map, &x, &v)?);
    let omega1 = data.conformal_factor(p)? * x.dot(&u.cross(&v));
    let omega2 = y.dot(&pu.cross(&pv));
    Ok((omega1 + omega2).abs())
}

pub fn lagrangian_residual(psi: &SphereDiffeo, p: &SpherePoint) -> Result<f64> {
    let data = KahlerData { psi: psi.clone(), n_theta: 128, n_phi: 256 };
    graph_form_residual(&data, |q| psi.eval(q), p)
}

#[cfg(test)]
mod tests {
    use super::super::flow::{Harmonic, HarmonicKind};
    use super::super::mobius::MobiusMap;
    use super::*;
    use num_complex::Complex64 as C;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn flow(eps: f64) -> SphereDiffeo {
        SphereDiffeo::flow(
            SphereDiffeo::Antipodal,
            1.0,
            vec![
                Harmonic { l: 2, m: 1, kind: HarmonicKind::Gradient, coef: eps },
                Harmonic { l: 3, m: 0, kind: HarmonicKind::Rotational, coef: eps },
            ],
        )
        .unwrap()
    }

    fn random_points(n: usize, seed: u64) -> Vec<SpherePoint> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| SpherePoint::from_spherical((rng.gen::<f64>() * 2.0 - 1.0).acos(), rng.gen::<f64>() * 2.0 * PI))
            .collect()
    }

    #[test]
    fn antipodal_factor_is_one() {
        let data = pullback_area_data(&SphereDiffeo::Antipodal).unwrap();
        for p in random_points(50, 1) {
            assert!((data.conformal_factor(&p).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn total_mass_is_four_pi() {
        let m = MobiusMap::normalized(C::new(1.2, 0.1), C::new(0.3, -0.2), C::new(0.0, 0.4), C::new(0.9, 0.0));
        for psi in [flow(0.05), SphereDiffeo::mobius_conjugate(m, m.inverse() * m.inverse(), SphereDiffeo::Antipodal)] {
            let mass = pullback_area_data(&psi).unwrap().total_mass().unwrap();
            assert!((mass - 4.0 * PI).abs() < 1e-6, "{mass}");
        }
    }

    #[test]
    fn graphs_are_lagrangian() {
        for p in random_points(200, 2) {
            assert!(lagrangian_residual(&SphereDiffeo::Antipodal, &p).unwrap() < 1e-10);
        }
        let psi = flow(0.1);
        for p in random_points(40, 3) {
            assert!(lagrangian_residual(&psi, &p).unwrap() < 1e-8);
        }
    }

    #[test]
    fn orientation_preserving_graph_is_not_lagrangian() {
        let data = pullback_area_data(&SphereDiffeo::Antipodal).unwrap();
        for p in random_points(20, 4) {
            let r = graph_form_residual(&data, |q| Ok(SphereDiffeo::Antipodal.eval(q)?.antipodal()), &p).unwrap();
            assert!((r - 2.0).abs() < 1e-8);
        }
    }
}
