use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rayon::prelude::*;

use super::diffeo::SphereDiffeo;
use super::mobius::MobiusMap;
use super::point::{Chart, SpherePoint};
use crate::error::{Error, Result};
use crate::quad::fibonacci_sphere;

const MIN_SEPARATION: f64 = 1e-6;
/// Admissible gauges keep the anchor triple and its image this far apart. Without a bound the
/// infimum degenerates: blown-up gauges reduce any map to its (nearly conformal) linearization.
const GAUGE_SEPARATION: f64 = 0.5;

/// Best gauge found for `psi_1 ~ post . psi_2 . pre`.
#[derive(Debug, Clone)]
pub struct GaugeFit {
    /// Sup chordal distance over the sample set.
    pub distance: f64,
    pub rms: f64,
    pub pre: MobiusMap,
    pub post: MobiusMap,
}

/// Mobius map carrying `0, infinity, 1` to the three given points.
fn frame(p: &[SpherePoint; 3]) -> Result<MobiusMap> {
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if p[i].distance(&p[j]) < MIN_SEPARATION {
            return Err(Error::DegenerateAnchors);
        }
    }
    let det = p[0].z0 * p[1].z1 - p[1].z0 * p[0].z1;
    let l0 = (p[2].z0 * p[1].z1 - p[1].z0 * p[2].z1) / det;
    let l1 = (p[0].z0 * p[2].z1 - p[2].z0 * p[0].z1) / det;
    Ok(MobiusMap::normalized(l0 * p[0].z0, l1 * p[1].z0, l0 * p[0].z1, l1 * p[1].z1))
}

/// The unique Mobius map sending the triple `from` to the triple `to`.
pub fn three_point_map(from: &[SpherePoint; 3], to: &[SpherePoint; 3]) -> Result<MobiusMap> {
    Ok(frame(to)? * frame(from)?.inverse())
}

struct Problem<'a, F> {
    anchors: [SpherePoint; 3],
    anchor_images: [SpherePoint; 3],
    samples: &'a [(SpherePoint, SpherePoint)],
    psi2: &'a F,
}

impl<F> Problem<'_, F>
where
    F: Fn(&SpherePoint) -> Result<SpherePoint> + Sync,
{
    fn gauge(&self, b: &[SpherePoint; 3]) -> Result<(MobiusMap, MobiusMap)> {
        let images = [(self.psi2)(&b[0])?, (self.psi2)(&b[1])?, (self.psi2)(&b[2])?];
        for t in [b, &images] {
            if t[0].distance(&t[1]).min(t[1].distance(&t[2])).min(t[0].distance(&t[2])) < GAUGE_SEPARATION {
                return Err(Error::DegenerateAnchors);
            }
        }
        let pre = three_point_map(&self.anchors, b)?;
        let post = three_point_map(&images, &self.anchor_images)?;
        Ok((pre, post))
    }

    fn residual(&self, b: &[SpherePoint; 3]) -> Result<DVector<f64>> {
        let (pre, post) = self.gauge(b)?;
        let mut r = DVector::zeros(3 * self.samples.len());
        for (k, (x, y)) in self.samples.iter().enumerate() {
            let g = post.apply(&(self.psi2)(&pre.apply(x))?).to_r3() - y.to_r3();
            r.fixed_rows_mut::<3>(3 * k).copy_from(&g);
        }
        Ok(r)
    }

    fn perturbed(b: &[SpherePoint; 3], d: &DVector<f64>) -> [SpherePoint; 3] {
        std::array::from_fn(|i| Chart::centered_at(b[i]).to_point(C::new(d[2 * i], d[2 * i + 1])))
    }

    /// Levenberg-Marquardt over the six real coordinates of the anchor images `b`.
    fn solve(&self, seed: [SpherePoint; 3]) -> Result<[SpherePoint; 3]> {
        let mut b = seed;
        let mut r = self.residual(&b)?;
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..200 {
            if cost < 1e-28 {
                break;
            }
            let h = 1e-7;
            let mut jac = DMatrix::zeros(r.len(), 6);
            for j in 0..6 {
                let mut d = DVector::zeros(6);
                d[j] = h;
                let Ok(rp) = self.residual(&Self::perturbed(&b, &d)) else {
                    return Ok(b);
                };
                d[j] = -h;
                let Ok(rm) = self.residual(&Self::perturbed(&b, &d)) else {
                    return Ok(b);
                };
                jac.set_column(j, &((rp - rm) / (2.0 * h)));
            }
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * &r;
            let mut improved = false;
            while lambda < 1e12 {
                let mut a = jtj.clone();
                for i in 0..6 {
                    a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
                }
                let Some(step) = a.cholesky().map(|c| -c.solve(&g)) else {
                    lambda *= 4.0;
                    continue;
                };
                let trial = Self::perturbed(&b, &step);
                match self.residual(&trial) {
                    Ok(rt) if rt.norm_squared() < cost => {
                        let small = step.norm() < 1e-14;
                        b = trial;
                        r = rt;
                        cost = r.norm_squared();
                        lambda = (lambda / 3.0).max(1e-12);
                        improved = !small;
                        break;
                    }
                    _ => lambda *= 4.0,
                }
            }
            if !improved {
                break;
            }
        }
        Ok(b)
    }
}

/// Gauge-fitted sup distance between a sampled map and `psi2` over Mobius pre/post pairs.
///
/// `anchors` pins the post-composition: the gauged map agrees with the sampled one on them.
/// Multi-starts from rotated copies of the anchor triple.
pub fn gauge_distance_samples<F>(
    anchors: &[(SpherePoint, SpherePoint); 3],
    samples: &[(SpherePoint, SpherePoint)],
    psi2: &F,
) -> Result<GaugeFit>
where
    F: Fn(&SpherePoint) -> Result<SpherePoint> + Sync,
{
    let problem = Problem {
        anchors: [anchors[0].0, anchors[1].0, anchors[2].0],
        anchor_images: [anchors[0].1, anchors[1].1, anchors[2].1],
        samples,
        psi2,
    };
    frame(&problem.anchors)?;
    frame(&problem.anchor_images)?;
    let rotations = [
        MobiusMap::identity(),
        MobiusMap::rotation(nalgebra::Vector3::x(), std::f64::consts::PI),
        MobiusMap::rotation(nalgebra::Vector3::y(), std::f64::consts::FRAC_PI_2),
        MobiusMap::rotation(nalgebra::Vector3::z(), std::f64::consts::FRAC_PI_3),
        MobiusMap::rotation(nalgebra::Vector3::new(1.0, 1.0, 1.0).normalize(), 2.0),
    ];
    let fits: Vec<GaugeFit> = rotations
        .par_iter()
        .filter_map(|m| {
            let seed = problem.anchors.map(|a| m.apply(&a));
            let b = problem.solve(seed).ok()?;
            let (pre, post) = problem.gauge(&b).ok()?;
            let mut sup: f64 = 0.0;
            let mut sq = 0.0;
            for (x, y) in samples {
                let d = post.apply(&psi2(&pre.apply(x)).ok()?).distance(y);
                sup = sup.max(d);
                sq += d * d;
            }
            Some(GaugeFit { distance: sup, rms: (sq / samples.len() as f64).sqrt(), pre, post })
        })
        .collect();
    fits.into_iter().min_by(|a, b| a.distance.total_cmp(&b.distance)).ok_or(Error::DegenerateAnchors)
}

/// Heuristic upper bound on the Mobius-orbit distance between two sphere maps.
pub fn diffeo_gauge_distance(psi1: &SphereDiffeo, psi2: &SphereDiffeo) -> Result<f64> {
    let anchors: [SpherePoint; 3] = std::array::from_fn(|k| {
        SpherePoint::from_affine(C::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0))
    });
    let anchors = [
        (anchors[0], psi1.eval(&anchors[0])?),
        (anchors[1], psi1.eval(&anchors[1])?),
        (anchors[2], psi1.eval(&anchors[2])?),
    ];
    let samples = fibonacci_sphere(96).into_iter().map(|x| Ok((x, psi1.eval(&x)?))).collect::<Result<Vec<_>>>()?;
    Ok(gauge_distance_samples(&anchors, &samples, &|p: &SpherePoint| psi2.eval(p))?.distance)
}

#[cfg(test)]
mod tests {
    use super::super::flow::{Harmonic, HarmonicKind};
    use super::*;

    #[test]
    fn three_point_map_hits_targets() {
        let from = [
            SpherePoint::from_affine(C::new(0.0, 0.0)),
            SpherePoint::infinity(),
            SpherePoint::from_affine(C::new(1.0, 0.0)),
        ];
        let to = [
            SpherePoint::from_affine(C::new(0.3, 0.2)),
            SpherePoint::from_affine(C::new(-2.0, 0.5)),
            SpherePoint::from_affine(C::new(0.1, -1.0)),
        ];
        let m = three_point_map(&from, &to).unwrap();
        for i in 0..3 {
            assert!(m.apply(&from[i]).distance(&to[i]) < 1e-13);
        }
        let bad = [to[0], to[0], to[2]];
        assert_eq!(three_point_map(&from, &bad).unwrap_err(), Error::DegenerateAnchors);
    }

    #[test]
    fn identical_maps() {
        let d = diffeo_gauge_distance(&SphereDiffeo::Antipodal, &SphereDiffeo::Antipodal).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn conjugated_antipodal_is_equivalent() {
        let m = MobiusMap::normalized(C::new(1.1, 0.2), C::new(0.3, 0.0), C::new(-0.2, 0.1), C::new(0.8, -0.1));
        let m2 = MobiusMap::rotation(nalgebra::Vector3::new(0.0, 1.0, 1.0).normalize(), 0.7)
            * MobiusMap::normalized(C::new(1.3, 0.0), C::new(0.0, 0.0), C::new(0.2, 0.0), C::new(1.0, 0.0));
        let psi = SphereDiffeo::mobius_conjugate(m, m2, SphereDiffeo::Antipodal);
        let d = diffeo_gauge_distance(&SphereDiffeo::Antipodal, &psi).unwrap();
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn flow_is_separated() {
        let psi = SphereDiffeo::flow(
            SphereDiffeo::Antipodal,
            1.0,
            vec![
                Harmonic { l: 2, m: 0, kind: HarmonicKind::Gradient, coef: 0.2 },
                Harmonic { l: 3, m: 1, kind: HarmonicKind::Rotational, coef: 0.2 },
            ],
        )
        .unwrap();
        let d = diffeo_gauge_distance(&SphereDiffeo::Antipodal, &psi).unwrap();
        assert!(d > 0.01, "{d}");
    }
}
