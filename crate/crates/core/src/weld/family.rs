//! Seeds, constrained one-parameter families and the endpoints of null families.

use nalgebra::Vector3;
use num_complex::Complex64 as C;
use serde::Serialize;

use super::area::area_centroid;
use super::constraints::{FamilyKind, WeldConstraints};
use super::disk::HolomorphicDisk;
use super::solver::{continue_family, continue_psi, ContinuationOptions, SolverOptions};
use crate::desitter::DiskParam;
use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::sphere::{gauge_distance_samples, three_point_map, Chart, MobiusMap, SphereDiffeo, SpherePoint};

/// Chart centred on the spherical cap `m(|zeta| < 1)`.
fn cap_chart(m: &MobiusMap) -> Chart {
    let one = C::new(1.0, 0.0);
    let at = |z: C| m.apply(&SpherePoint::new(z, one)).to_r3();
    // the boundary circle is planar; its normal through three images gives the cap axis
    let p = [one, C::new(0.0, 1.0), -one].map(at);
    let axis = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
    let level = axis.dot(&p[0]);
    let center = if at(C::new(0.0, 0.0)).dot(&axis) > level { axis } else { -axis };
    Chart::centered_at(SpherePoint::from_r3(&center))
}

/// Closed-form disk of the unperturbed antipodal map meeting the selector's anchors.
pub fn desitter_seed(constraints: &WeldConstraints, n: usize) -> Result<HolomorphicDisk> {
    constraints.validate()?;
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let pair = |m: MobiusMap| {
        let second = DiskParam::new(m).second();
        HolomorphicDisk::from_mobius_pair_in(&m, &second, cap_chart(&m), cap_chart(&second), n)
    };
    match constraints {
        WeldConstraints::CenterPoint { z, w, radius } => {
            // F1 = q r zeta / (q + r zeta) in the chart centred at z, with F1(infinity) = q
            let chart = Chart::centered_at(*z);
            let inv_q =
                chart.coordinate(&w.antipodal()).map_or(zero, |q| if q.norm() < 1e-300 { zero } else { q.inv() });
            let local = MobiusMap::normalized(C::new(*radius, 0.0), zero, *radius * inv_q, one);
            pair(MobiusMap::of_chart(&chart) * local)
        }
        WeldConstraints::BoundaryContact { x, direction } => {
            // hemisphere whose boundary leaves x along the given direction
            let at_x = Chart::centered_at(*x);
            let center = at_x.to_point(C::new(0.0, 1.0) * C::from_polar(1.0, *direction));
            let rc = MobiusMap::of_chart(&Chart::centered_at(center));
            let u = rc.inverse().apply(x).affine().ok_or(Error::DegenerateAnchors)?;
            let half = C::from_polar(1.0, u.arg() / 2.0);
            let m = rc * MobiusMap::normalized(half, zero, zero, half.conj());
            pair(m)
        }
        WeldConstraints::TwoBoundaryPoints { x, y } => {
            let (a, b) = (x.to_r3(), y.to_r3());
            let mut v = a + b;
            if v.norm() < 1e-6 {
                let seed = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
                v = seed - a * a.dot(&seed);
            }
            let mid = SpherePoint::from_r3(&v);
            let from =
                [SpherePoint::new(one, one), SpherePoint::new(C::new(0.0, 1.0), one), SpherePoint::new(-one, one)];
            let m = three_point_map(&from, &[*x, mid, *y])?;
            pair(m)
        }
    }
}

/// A solved starting disk for `psi`: the closed-form seed, carried along the flow homotopy if
/// `psi` is flow perturbed. Mobius-conjugated maps need an explicit seed.
pub fn seed_disk(
    psi: &SphereDiffeo,
    constraints: &WeldConstraints,
    n: usize,
    opts: &SolverOptions,
) -> Result<HolomorphicDisk> {
    fn unperturbed(psi: &SphereDiffeo) -> &SphereDiffeo {
        match psi {
            SphereDiffeo::FlowPerturbed { base, .. } => unperturbed(base),
            other => other,
        }
    }
    if *unperturbed(psi) != SphereDiffeo::Antipodal {
        return Err(Error::ConfigInvalid(
            "automatic seeds exist only for flow perturbations of the antipodal map".into(),
        ));
    }
    let seed = desitter_seed(constraints, n)?;
    if *psi == SphereDiffeo::Antipodal {
        return super::solver::solve_disk(psi, constraints, &seed, opts).map(|r| r.disk);
    }
    let path = continue_psi(&|s| psi.scaled_flow(s), constraints, &seed, 5, opts)?;
    Ok(path.last().expect("non-empty homotopy").disk.clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicFamily {
    pub kind: FamilyKind,
    pub disks: Vec<HolomorphicDisk>,
    pub parameter_values: Vec<f64>,
    pub omegas: Vec<f64>,
    pub anchors: WeldConstraints,
    /// Indices of the members placed exactly on the requested parameter values.
    pub hits: Vec<usize>,
}

impl GeodesicFamily {
    /// Whether Omega is strictly monotone along the family.
    pub fn omega_monotone(&self) -> bool {
        let d: Vec<f64> = self.omegas.windows(2).map(|w| w[1] - w[0]).collect();
        d.iter().all(|x| *x > 0.0) || d.iter().all(|x| *x < 0.0)
    }
}

/// Traces the family of `constraints` through each requested parameter value in turn.
pub fn geodesic_family(
    psi: &SphereDiffeo,
    constraints: &WeldConstraints,
    span: &[f64],
    seed: Option<&HolomorphicDisk>,
    copts: &ContinuationOptions,
    sopts: &SolverOptions,
) -> Result<GeodesicFamily> {
    let seed = match seed {
        Some(d) => d.clone(),
        None => seed_disk(psi, constraints, 16, sopts)?,
    };
    let path = continue_family(psi, constraints, &seed, span, copts, sopts)?;
    Ok(GeodesicFamily {
        kind: constraints.kind(),
        parameter_values: path.points.iter().map(|p| p.parameter).collect(),
        omegas: path.points.iter().map(|p| p.omega).collect(),
        disks: path.points.into_iter().map(|p| p.disk).collect(),
        anchors: constraints.clone(),
        hits: path.hits,
    })
}

/// Omega values approached at either end of a null family.
pub const ENDPOINT_OMEGAS: [f64; 5] = [0.27, 0.18, 0.12, 0.08, 0.05];

#[derive(Debug, Clone, Serialize)]
pub struct NullEndpoints {
    /// Limit of the shrinking second projection as Omega decreases to 0.
    pub past: SpherePoint,
    /// Limit of the shrinking first projection as Omega increases to 4 pi.
    pub future: SpherePoint,
    /// Difference between the quartic and cubic extrapolants, as a chordal distance.
    pub past_uncertainty: f64,
    pub future_uncertainty: f64,
}

/// Lagrange extrapolation of points `(s_k, x_k)` to `s = 0`, using the `count` smallest `s`.
fn extrapolate(samples: &[(f64, Vector3<f64>)], count: usize) -> Vector3<f64> {
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts = &pts[..count];
    let mut out = Vector3::zeros();
    for (i, (si, xi)) in pts.iter().enumerate() {
        let w: f64 = pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (sj, _))| sj / (sj - si)).product();
        out += xi * w;
    }
    out
}

fn limit_point(samples: &[(f64, Vector3<f64>)]) -> (SpherePoint, f64) {
    let quartic = SpherePoint::from_r3(&extrapolate(samples, samples.len()));
    let cubic = SpherePoint::from_r3(&extrapolate(samples, samples.len() - 1));
    (quartic, quartic.distance(&cubic))
}

/// Continues the null family of `contact` towards both degenerations and extrapolates the
/// points its shrinking projections collapse onto.
pub fn null_family_endpoints(
    psi: &SphereDiffeo,
    contact: &WeldConstraints,
    seed: Option<&HolomorphicDisk>,
    copts: &ContinuationOptions,
    sopts: &SolverOptions,
) -> Result<NullEndpoints> {
    if contact.kind() != FamilyKind::Null {
        return Err(Error::ConfigInvalid("null endpoints need a boundary-contact selector".into()));
    }
    let seed = match seed {
        Some(d) => d.clone(),
        None => seed_disk(psi, contact, 16, sopts)?,
    };
    let four_pi = 4.0 * std::f64::consts::PI;
    let past = continue_family(psi, contact, &seed, &ENDPOINT_OMEGAS, copts, sopts)?;
    let past_samples: Vec<(f64, Vector3<f64>)> = past
        .hits
        .iter()
        .map(|k| {
            let p = &past.points[*k];
            (p.omega.sqrt(), area_centroid(&p.disk.f2, &p.disk.chart2).to_r3())
        })
        .collect();
    let future_targets: Vec<f64> = ENDPOINT_OMEGAS.iter().map(|o| four_pi - o).collect();
    let future = continue_family(psi, contact, &seed, &future_targets, copts, sopts)?;
    let future_samples: Vec<(f64, Vector3<f64>)> = future
        .hits
        .iter()
        .map(|k| {
            let p = &future.points[*k];
            ((four_pi - p.omega).sqrt(), area_centroid(&p.disk.f1, &p.disk.chart1).to_r3())
        })
        .collect();
    let (past, past_uncertainty) = limit_point(&past_samples);
    let (future, future_uncertainty) = limit_point(&future_samples);
    Ok(NullEndpoints { past, future, past_uncertainty, future_uncertainty })
}

/// Boundary contacts used by the round-trip check: a spiral of points and directions.
pub fn round_trip_contacts(count: usize) -> Vec<WeldConstraints> {
    (0..count)
        .map(|k| {
            let k = k as f64;
            WeldConstraints::BoundaryContact {
                x: SpherePoint::from_spherical(0.6 + 0.25 * k, 0.9 * k),
                direction: 0.7 * k,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripSample {
    pub contact: WeldConstraints,
    pub endpoints: NullEndpoints,
    /// Chordal distance of the past endpoint from `psi(x)`.
    pub past_error: f64,
    /// Chordal distance of the future endpoint from `x`.
    pub future_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub samples: Vec<RoundTripSample>,
    pub max_error: f64,
    /// Gauge-fitted distance between the map `future -> past` and `psi`.
    pub gauge_distance: f64,
}

/// Recovers `psi` from the endpoints of null families through each contact.
pub fn round_trip(
    psi: &SphereDiffeo,
    contacts: &[WeldConstraints],
    copts: &ContinuationOptions,
    sopts: &SolverOptions,
) -> Result<RoundTrip> {
    if contacts.len() < 3 {
        return Err(Error::ConfigInvalid("round trip needs at least three contacts".into()));
    }
    let samples = contacts
        .par_iter()
        .map(|contact| {
            let WeldConstraints::BoundaryContact { x, .. } = contact else {
                return Err(Error::ConfigInvalid("round trip contacts must be boundary contacts".into()));
            };
            let endpoints = null_family_endpoints(psi, contact, None, copts, sopts)?;
            Ok(RoundTripSample {
                contact: contact.clone(),
                past_error: endpoints.past.distance(&psi.eval(x)?),
                future_error: endpoints.future.distance(x),
                endpoints,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_error = samples.iter().map(|s| s.past_error.max(s.future_error)).fold(0.0, f64::max);
    let pairs: Vec<(SpherePoint, SpherePoint)> =
        samples.iter().map(|s| (s.endpoints.future, s.endpoints.past)).collect();
    let anchors = [pairs[0], pairs[1], pairs[2]];
    let fit = gauge_distance_samples(&anchors, &pairs, &|p: &SpherePoint| psi.eval(p))?;
    Ok(RoundTrip { samples, max_error, gauge_distance: fit.distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weld::omega_area;
    use std::f64::consts::PI;

    fn affine(re: f64, im: f64) -> SpherePoint {
        SpherePoint::from_affine(C::new(re, im))
    }

    #[test]
    fn cap_chart_keeps_the_pole_outside_the_cap() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let mut z = || C::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
            let m = MobiusMap::normalized(z(), z(), z(), z());
            let pole = cap_chart(&m).pole();
            let pre = m.inverse().apply(&pole);
            assert!(pre.z0.norm() > pre.z1.norm(), "{m:?}");
        }
    }

    #[test]
    fn seeds_meet_their_anchors() {
        let selectors = [
            WeldConstraints::CenterPoint { z: affine(0.3, -0.2), w: affine(-0.3, 0.5), radius: 0.7 },
            WeldConstraints::BoundaryContact { x: affine(1.0, 0.0), direction: 0.4 },
            WeldConstraints::TwoBoundaryPoints { x: affine(0.5, 0.0), y: affine(-0.2, 1.0) },
        ];
        for sel in &selectors {
            let d = desitter_seed(sel, 64).unwrap();
            assert!(d.tail() < 1e-12, "{sel:?}: tail {}", d.tail());
            let r = crate::weld::solve_disk(&SphereDiffeo::Antipodal, sel, &d, &SolverOptions::default()).unwrap();
            assert!(r.disk.distance(&d) < 1e-10, "{sel:?}: {}", r.disk.distance(&d));
            assert!(r.history[0] < 1e-10, "{sel:?}: {:?}", r.history);
        }
    }

    #[test]
    fn timelike_family_is_the_diagonal_family() {
        let o = affine(0.0, 0.0);
        let sel = WeldConstraints::CenterPoint { z: o, w: o, radius: 1.0 };
        let (c, s) = (ContinuationOptions::default(), SolverOptions::default());
        for end in [2.0, -2.0] {
            let fam = geodesic_family(&SphereDiffeo::Antipodal, &sel, &[end], None, &c, &s).unwrap();
            assert!(fam.omega_monotone());
            for (d, p) in fam.disks.iter().zip(&fam.parameter_values) {
                let r = p.exp();
                assert!((omega_area(d) - 4.0 * PI / (1.0 + r * r)).abs() < 1e-8);
            }
            let last = fam.disks.last().unwrap();
            let r = end.exp();
            let chart = last.chart1;
            assert!(last.point1(C::new(0.5, 0.0)).distance(&chart.to_point(C::new(0.5 * r, 0.0))) < 1e-8);
        }
    }

    #[test]
    fn null_endpoints_of_the_antipodal_map() {
        let sel = WeldConstraints::BoundaryContact { x: affine(1.0, 0.0), direction: 1.2 };
        let e = null_family_endpoints(
            &SphereDiffeo::Antipodal,
            &sel,
            None,
            &ContinuationOptions::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(e.past.distance(&affine(-1.0, 0.0)) < 1e-3, "{:?}", e);
        assert!(e.future.distance(&affine(1.0, 0.0)) < 1e-3, "{:?}", e);
    }

    #[test]
    fn spacelike_family_closes() {
        let sel = WeldConstraints::TwoBoundaryPoints { x: affine(0.5, 0.0), y: affine(-0.2, 1.0) };
        let (c, s) = (ContinuationOptions::default(), SolverOptions::default());
        let seed = seed_disk(&SphereDiffeo::Antipodal, &sel, 16, &s).unwrap();
        let p0 = crate::weld::family_parameter(&SphereDiffeo::Antipodal, &sel, &seed, 0.0).unwrap();
        let span: Vec<f64> = (1..=8).map(|k| p0 + PI / 4.0 * k as f64).collect();
        let fam = geodesic_family(&SphereDiffeo::Antipodal, &sel, &span, Some(&seed), &c, &s).unwrap();
        let last = fam.disks.last().unwrap();
        assert!(last.distance(&fam.disks[0]) < 1e-6, "{}", last.distance(&fam.disks[0]));
    }
}
