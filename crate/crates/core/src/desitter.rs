//! Closed-form de Sitter disk family and its moduli gauge.

use nalgebra::Vector3;
use num_complex::Complex64 as C;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::sphere::{MobiusMap, SpherePoint};
use crate::weyl::DeSitter;

/// Parameter `A` in SL(2, C) of a de Sitter disk. JSON form `{"A": [[re, im]; 4]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskParam {
    #[serde(rename = "A")]
    pub matrix: MobiusMap,
}

impl DiskParam {
    pub fn new(matrix: MobiusMap) -> Self {
        Self { matrix }
    }

    pub fn identity() -> Self {
        Self::new(MobiusMap::identity())
    }

    /// The first factor as a Mobius map of `zeta`.
    pub fn first(&self) -> MobiusMap {
        self.matrix
    }

    /// The second factor `zeta -> [-conj(d) zeta - conj(c) : conj(b) zeta + conj(a)]`.
    pub fn second(&self) -> MobiusMap {
        let m = self.matrix;
        MobiusMap { a: -m.d.conj(), b: -m.c.conj(), c: m.b.conj(), d: m.a.conj() }
    }

    /// Spectral condition number, `|A|_2^2` for unit determinant.
    pub fn condition_number(&self) -> f64 {
        let m = nalgebra::Matrix2::new(self.matrix.a, self.matrix.b, self.matrix.c, self.matrix.d);
        let s = m.singular_values();
        s[0] / s[1]
    }
}

pub fn desitter_disk(param: &DiskParam, zeta: C) -> (SpherePoint, SpherePoint) {
    let p = SpherePoint::new(zeta, C::new(1.0, 0.0));
    (param.first().apply(&p), param.second().apply(&p))
}

/// Residual of the boundary circle against the graph of the antipodal map, with conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub residual: f64,
    pub condition: f64,
}

pub fn boundary_on_graph_report(param: &DiskParam, n_theta: usize) -> BoundaryReport {
    let residual = (0..n_theta)
        .map(|k| {
            let zeta = C::from_polar(1.0, std::f64::consts::TAU * k as f64 / n_theta as f64);
            let (p, q) = desitter_disk(param, zeta);
            q.distance(&p.antipodal())
        })
        .fold(0.0, f64::max);
    BoundaryReport { residual, condition: param.condition_number() }
}

pub fn boundary_on_graph_residual(param: &DiskParam) -> f64 {
    boundary_on_graph_report(param, 256).residual
}

/// Spherical cap covered by the image of the closed unit disk under `m`: centre and angular radius.
pub fn image_cap(m: &MobiusMap) -> (SpherePoint, f64) {
    let at = |z: C| m.apply(&SpherePoint::new(z, C::new(1.0, 0.0))).to_r3();
    let (p1, p2, p3) = (at(C::new(1.0, 0.0)), at(C::new(0.0, 1.0)), at(C::new(-1.0, 0.0)));
    let mut n: Vector3<f64> = (p2 - p1).cross(&(p3 - p1)).normalize();
    let mut d = n.dot(&(p1 + p2 + p3)) / 3.0;
    if n.dot(&at(C::new(0.0, 0.0))) < d {
        n = -n;
        d = -d;
    }
    (SpherePoint::from_r3(&n), d.clamp(-1.0, 1.0).acos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeTag {
    Identity,
    Canonical,
}

/// A de Sitter moduli point: the canonical coset representative modulo disk automorphisms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeSitterModuliPoint {
    pub representative: DiskParam,
    pub tag: GaugeTag,
}

impl DeSitterModuliPoint {
    /// Entry-wise distance between representatives, modulo the sign of SL(2, C).
    pub fn distance(&self, other: &Self) -> f64 {
        let (a, b) = (self.representative.matrix, other.representative.matrix);
        let diff = |s: f64| {
            [a.a - b.a * s, a.b - b.b * s, a.c - b.c * s, a.d - b.d * s].iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        diff(1.0).min(diff(-1.0))
    }
}

/// Canonical representative `R_c diag(sqrt r, 1/sqrt r)` with `c` the centre of the first
/// image cap, `r = tan(rho / 2)` its chart radius and `R_c` the unitary taking `[0 : 1]` to `c`.
pub fn gauge_reduce(param: &DiskParam) -> DeSitterModuliPoint {
    let (c, rho) = image_cap(&param.first());
    let s = (rho / 2.0).tan().sqrt();
    let rot = MobiusMap { a: c.z1.conj(), b: c.z0, c: -c.z0.conj(), d: c.z1 };
    let diag = MobiusMap { a: C::new(s, 0.0), b: C::new(0.0, 0.0), c: C::new(0.0, 0.0), d: C::new(1.0 / s, 0.0) };
    let representative = DiskParam::new(rot * diag);
    let id = DeSitterModuliPoint { representative: DiskParam::identity(), tag: GaugeTag::Identity };
    let tag = if id.distance(&DeSitterModuliPoint { representative, tag: GaugeTag::Canonical }) < 1e-12 {
        GaugeTag::Identity
    } else {
        GaugeTag::Canonical
    };
    DeSitterModuliPoint { representative, tag }
}

/// Largest sampled distance of the disk image of `a` from the disk image of `b` and back.
///
/// Each sample of one image is located exactly on the other through the inverse of its first
/// factor, so no resampling error enters.
pub fn image_distance(a: &DiskParam, b: &DiskParam) -> f64 {
    let one_way = |a: &DiskParam, b: &DiskParam| {
        let inv = b.first().inverse();
        let mut worst: f64 = 0.0;
        for i in 0..=8 {
            let r = i as f64 / 8.0;
            for k in 0..32 {
                let zeta = C::from_polar(r, std::f64::consts::TAU * k as f64 / 32.0);
                let (p, q) = desitter_disk(a, zeta);
                let pre = inv.apply(&p);
                let outside = match pre.affine() {
                    Some(z) => (z.norm() - 1.0).max(0.0),
                    None => f64::INFINITY,
                };
                let z = pre.affine().unwrap_or(C::new(f64::INFINITY, 0.0));
                let mismatch = if z.is_finite() { b.second().apply(&pre).distance(&q) } else { 2.0 };
                worst = worst.max(outside + mismatch);
            }
        }
        worst
    };
    one_way(a, b).max(one_way(b, a))
}

/// Compactified de Sitter chart structure on `S^2 x [-pi/2 + delta, pi/2 - delta]`.
pub fn compactified_desitter() -> DeSitter {
    DeSitter::default()
}

/// Element of SL(2, C) with i.i.d. complex Gaussian entries, scaled to unit determinant.
pub fn random_param(rng: &mut impl rand::Rng) -> DiskParam {
    let mut g = || C::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    DiskParam::new(MobiusMap::normalized(g(), g(), g(), g()))
}

/// `count` reproducible random parameters.
pub fn random_params(count: usize, seed: u64) -> Vec<DiskParam> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_param(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_automorphism(rng: &mut impl Rng) -> MobiusMap {
        let beta = C::from_polar(rng.gen::<f64>() * 1.5, rng.gen::<f64>() * std::f64::consts::TAU);
        let alpha = C::from_polar((1.0 + beta.norm_sqr()).sqrt(), rng.gen::<f64>() * std::f64::consts::TAU);
        MobiusMap { a: alpha, b: beta, c: beta.conj(), d: alpha.conj() }
    }

    #[test]
    fn identity_and_diagonal_disks() {
        let z = C::new(0.3, -0.2);
        let (p, q) = desitter_disk(&DiskParam::identity(), z);
        assert!((p.affine().unwrap() - z).norm() < 1e-15 && (q.affine().unwrap() + z).norm() < 1e-15);
        let t: f64 = 0.4;
        let d = DiskParam::new(MobiusMap {
            a: C::new(t.exp(), 0.0),
            b: C::new(0.0, 0.0),
            c: C::new(0.0, 0.0),
            d: C::new((-t).exp(), 0.0),
        });
        let (p, q) = desitter_disk(&d, z);
        assert!((p.affine().unwrap() - z * (2.0 * t).exp()).norm() < 1e-14);
        assert!((q.affine().unwrap() + z * (-2.0 * t).exp()).norm() < 1e-14);
    }

    #[test]
    fn boundary_lies_on_antipodal_graph() {
        assert!(boundary_on_graph_residual(&DiskParam::identity()) < 1e-14);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert!(boundary_on_graph_residual(&random_param(&mut rng)) < 1e-12);
        }
        let big = DiskParam::new(MobiusMap::normalized(
            C::new(1e3, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            C::new(1e-3, 0.0),
        ));
        let report = boundary_on_graph_report(&big, 256);
        assert!(report.residual < 1e-9);
        assert!((report.condition - 1e6).abs() < 1.0);
    }

    #[test]
    fn gauge_reduce_is_a_coset_invariant() {
        assert_eq!(gauge_reduce(&DiskParam::identity()).tag, GaugeTag::Identity);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let a = random_param(&mut rng);
            let g = gauge_reduce(&a);
            assert_eq!(g.tag, GaugeTag::Canonical);
            assert!(gauge_reduce(&g.representative).distance(&g) < 1e-10);
            assert!(image_distance(&a, &g.representative) < 1e-10);
            for _ in 0..50 {
                let b = random_automorphism(&mut rng);
                let gb = gauge_reduce(&DiskParam::new(a.matrix * b));
                assert!(gb.distance(&g) < 1e-10, "{}", gb.distance(&g));
            }
        }
    }

    #[test]
    fn different_disks_have_distinct_images() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (a, b) = (random_param(&mut rng), random_param(&mut rng));
        assert!(image_distance(&a, &b) > 1e-3);
    }
}
