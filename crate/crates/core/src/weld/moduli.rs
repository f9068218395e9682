//! Tangent spaces of the disk moduli, their causal classification and the conformal form.

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64 as C;
use serde::Serialize;

use super::constraints::FamilyKind;
use super::disk::HolomorphicDisk;
use super::residual::{induced_second_factor, Collocation};
use super::solver::{to_complex, to_real};
use super::spectral::{horner, horner_derivative, nodes, Spectrum};
use crate::error::{Error, Result};
use crate::sphere::SphereDiffeo;

/// Relative degeneracy below which a boundary zero counts as double.
pub const NULL_SCORE: f64 = 1e-9;
/// Relative degeneracy below which the zero count alone is not trusted.
pub const AMBIGUOUS_SCORE: f64 = 1e-6;
/// Smallest accepted ratio between the fourth and third smallest singular values.
pub const MIN_GAP: f64 = 1e6;

/// Boundary data of a disk needed to turn a first-factor variation into its normal field.
#[derive(Debug, Clone)]
struct BoundaryNormal {
    zeta: Vec<C>,
    f1p: Vec<C>,
    a: Vec<C>,
    b: Vec<C>,
    /// `dF2 / dF1` along the boundary.
    ratio: Vec<C>,
    /// Reality trivialization `i B conj(i zeta F1')`.
    sigma: Vec<C>,
}

impl BoundaryNormal {
    fn new(psi: &SphereDiffeo, disk: &HolomorphicDisk, m: usize) -> Result<Self> {
        let f2 = induced_second_factor(psi, disk)?;
        let zeta = nodes(m);
        let i = C::new(0.0, 1.0);
        let scale = disk.f1.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut out = Self { zeta: zeta.clone(), f1p: vec![], a: vec![], b: vec![], ratio: vec![], sigma: vec![] };
        for z in zeta {
            let f1p = horner_derivative(&disk.f1, z);
            if f1p.norm() < 1e-10 * scale {
                return Err(Error::DerivativeZero);
            }
            let d = psi.chart_derivative(&disk.chart1, &disk.chart2, horner(&disk.f1, z))?;
            out.ratio.push(horner_derivative(&f2, z) / f1p);
            out.sigma.push(i * d.dzbar * (i * z * f1p).conj());
            out.f1p.push(f1p);
            out.a.push(d.dz);
            out.b.push(d.dzbar);
        }
        Ok(out)
    }

    /// Normal field `n = dF2 - (dF2/dF1) dF1` and its trivialization `rho = n / sigma`.
    fn normal(&self, delta: &[C]) -> (Vec<C>, Vec<C>) {
        let mut n = Vec::with_capacity(self.zeta.len());
        let mut rho = Vec::with_capacity(self.zeta.len());
        for j in 0..self.zeta.len() {
            let d1 = horner(delta, self.zeta[j]);
            let d2 = self.a[j] * d1 + self.b[j] * d1.conj();
            let v = d2 - self.ratio[j] * d1;
            n.push(v);
            rho.push(v / self.sigma[j]);
        }
        (n, rho)
    }
}

/// Real function on the circle held by samples and trigonometric coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryFunction {
    pub samples: Vec<f64>,
    #[serde(skip)]
    coeffs: Vec<C>,
}

impl BoundaryFunction {
    fn new(samples: Vec<f64>, spec: &Spectrum) -> Self {
        let half = spec.m / 2;
        let modes = spec.forward(&samples.iter().map(|x| C::new(*x, 0.0)).collect::<Vec<_>>());
        Self { samples, coeffs: modes[..half].to_vec() }
    }

    fn combine(parts: &[&BoundaryFunction], c: &[f64]) -> Self {
        let m = parts[0].samples.len();
        let samples = (0..m).map(|j| parts.iter().zip(c).map(|(p, w)| p.samples[j] * w).sum()).collect();
        let coeffs =
            (0..parts[0].coeffs.len()).map(|k| parts.iter().zip(c).map(|(p, w)| p.coeffs[k] * *w).sum()).collect();
        Self { samples, coeffs }
    }

    /// Value and first two derivatives of the trigonometric interpolant.
    fn jet(&self, theta: f64) -> (f64, f64, f64) {
        let mut v = self.coeffs[0].re;
        let (mut d1, mut d2) = (0.0, 0.0);
        for (k, r) in self.coeffs.iter().enumerate().skip(1) {
            let e = *r * C::from_polar(2.0, k as f64 * theta);
            let kf = k as f64;
            v += e.re;
            d1 -= kf * e.im;
            d2 -= kf * kf * e.re;
        }
        (v, d1, d2)
    }

    /// Critical value near grid index `j` by Newton on the derivative.
    fn refine(&self, j: usize) -> f64 {
        let step = std::f64::consts::TAU / self.samples.len() as f64;
        let mut t = step * j as f64;
        let start = t;
        for _ in 0..8 {
            let (_, d1, d2) = self.jet(t);
            if d2 == 0.0 {
                break;
            }
            let dt = (-d1 / d2).clamp(-step, step);
            t += dt;
            if (t - start).abs() > 1.5 * step {
                return self.samples[j];
            }
            if dt.abs() < 1e-15 {
                break;
            }
        }
        self.jet(t).0
    }

    /// Refined maximum and minimum.
    pub fn extremes(&self) -> (f64, f64) {
        let (mut jmax, mut jmin) = (0, 0);
        for (j, v) in self.samples.iter().enumerate() {
            if *v > self.samples[jmax] {
                jmax = j;
            }
            if *v < self.samples[jmin] {
                jmin = j;
            }
        }
        (self.refine(jmax).max(self.samples[jmax]), self.refine(jmin).min(self.samples[jmin]))
    }

    pub fn sign_changes(&self) -> usize {
        let s = &self.samples;
        (0..s.len()).filter(|j| s[*j] * s[(*j + 1) % s.len()] < 0.0).count()
    }

    /// Lorentzian cone function: negative without zeros, positive with separated zeros.
    fn cone(&self) -> f64 {
        let (hi, lo) = self.extremes();
        let scale = hi.abs().max(lo.abs());
        if scale == 0.0 {
            0.0
        } else {
            -hi * lo / (scale * scale)
        }
    }
}

/// One infinitesimal disk variation with its boundary-normal data.
#[derive(Debug, Clone, Serialize)]
pub struct ModuliTangent {
    /// First-factor coefficient variation.
    pub delta: Vec<C>,
    pub rho: BoundaryFunction,
    /// Largest imaginary part of `rho` relative to its size.
    pub rho_imaginary: f64,
    pub boundary_sign_changes: usize,
    /// Winding number of `n` along the boundary.
    pub interior_zeros: i64,
    /// `min(|max rho|, |min rho|) / max(...)`: zero for a double boundary zero.
    pub degeneracy: f64,
    pub kind: FamilyKind,
    pub form_value: Option<f64>,
}

/// Orthonormal basis of the linearized moduli directions at a disk.
#[derive(Debug, Clone, Serialize)]
pub struct TangentSpace {
    pub basis: Vec<ModuliTangent>,
    /// Singular values of the gauge-fixed linearized residual, descending.
    pub singular_values: Vec<f64>,
    pub nullity: usize,
    /// Ratio of the fourth to the third smallest singular value.
    pub gap: f64,
    #[serde(skip)]
    normal: Option<BoundaryNormal>,
    #[serde(skip)]
    vectors: Vec<Vec<f64>>,
    #[serde(skip)]
    m: usize,
}

fn winding(values: &[C]) -> i64 {
    let total: f64 = (0..values.len()).map(|j| (values[(j + 1) % values.len()] / values[j]).arg()).sum();
    (total / std::f64::consts::TAU).round() as i64
}

/// Coefficients of `F1' v` truncated to degree `n`.
fn gauge_direction(f1: &[C], v: [C; 3], n: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); n + 1];
    for (k, a) in f1.iter().enumerate().skip(1) {
        let d = *a * k as f64;
        for (j, vj) in v.iter().enumerate() {
            if k - 1 + j <= n {
                out[k - 1 + j] += d * vj;
            }
        }
    }
    out
}

/// Nullspace of the linearized welding residual with the three disk automorphisms sliced off.
pub fn linearized_tangent_basis(psi: &SphereDiffeo, disk: &HolomorphicDisk) -> Result<TangentSpace> {
    let n = disk.n;
    let col = Collocation::new(n);
    let b = col.boundary(psi, &disk.f1, &disk.chart1, &disk.chart2, true)?;
    let (ah, bh) = b.derivative.expect("derivative spectra");
    let jr = col.residual_jacobian(&ah, &bh);
    let (zero, one, i) = (C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0));
    // automorphism generators i zeta, 1 - zeta^2, i (1 + zeta^2)
    let gens = [[zero, i, zero], [one, zero, -one], [i, zero, i]];
    let nx = 2 * (n + 1);
    let mut j = DMatrix::zeros(jr.nrows() + 3, nx);
    j.view_mut((0, 0), (jr.nrows(), nx)).copy_from(&jr);
    for (r, g) in gens.iter().enumerate() {
        let row = to_real(&gauge_direction(&disk.f1, *g, n));
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (u, x) in row.iter().enumerate() {
            j[(jr.nrows() + r, u)] = x / norm;
        }
    }
    let svd = j.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    let singular_values: Vec<f64> = order.iter().map(|k| svd.singular_values[*k]).collect();
    let smax = singular_values[0];
    let count = singular_values.len();
    let nullity = singular_values.iter().filter(|s| **s <= 1e-7 * smax).count();
    let gap = singular_values[count - 4] / singular_values[count - 3].max(f64::MIN_POSITIVE);
    if nullity != 3 || gap < MIN_GAP {
        return Err(Error::RankDeficient { expected: 3, found: nullity });
    }
    let vectors: Vec<Vec<f64>> = order[count - 3..].iter().map(|k| v_t.row(*k).iter().copied().collect()).collect();
    let m = 4 * n.max(64);
    let mut space = TangentSpace {
        basis: Vec::new(),
        singular_values,
        nullity,
        gap,
        normal: Some(BoundaryNormal::new(psi, disk, m)?),
        vectors,
        m,
    };
    let basis =
        space.vectors.iter().map(|v| classify_tangent(&space, &to_complex(v), None)).collect::<Result<Vec<_>>>()?;
    space.basis = basis;
    Ok(space)
}

impl TangentSpace {
    fn normal(&self) -> &BoundaryNormal {
        self.normal.as_ref().expect("tangent space carries boundary data")
    }

    /// Coordinates of a variation in the orthonormal basis.
    pub fn coordinates(&self, delta: &[C]) -> Vector3<f64> {
        let x = to_real(delta);
        Vector3::from_iterator(self.vectors.iter().map(|v| v.iter().zip(&x).map(|(a, b)| a * b).sum()))
    }

    pub fn tangent(&self, c: &Vector3<f64>) -> Vec<C> {
        let x: Vec<f64> = (0..self.vectors[0].len()).map(|u| (0..3).map(|i| c[i] * self.vectors[i][u]).sum()).collect();
        to_complex(&x)
    }

    fn rho_of(&self, c: &Vector3<f64>) -> BoundaryFunction {
        let parts: Vec<&BoundaryFunction> = self.basis.iter().map(|t| &t.rho).collect();
        BoundaryFunction::combine(&parts, c.as_slice())
    }

    pub fn cone_function(&self, c: &Vector3<f64>) -> f64 {
        self.rho_of(c).cone()
    }

    /// Linear map from basis coordinates to `(alpha, beta, gamma)` of
    /// `rho = alpha + 2 beta cos + 2 gamma sin`.
    pub fn trigonometric_coordinates(&self) -> Matrix3<f64> {
        let mut l = Matrix3::zeros();
        for (i, t) in self.basis.iter().enumerate() {
            let (r0, r1) = (t.rho.coeffs[0], t.rho.coeffs[1]);
            l[(0, i)] = r0.re;
            l[(1, i)] = r1.re;
            l[(2, i)] = -r1.im;
        }
        l
    }
}

/// Boundary-normal function of `delta`, counted zeros and causal type; the form value is
/// attached when a fitted conformal form is supplied.
pub fn classify_tangent(space: &TangentSpace, delta: &[C], form: Option<&Matrix3<f64>>) -> Result<ModuliTangent> {
    let bn = space.normal();
    let (n, rho) = bn.normal(delta);
    let size = rho.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let rho_imaginary = if size == 0.0 { 0.0 } else { rho.iter().map(|r| r.im.abs()).fold(0.0, f64::max) / size };
    let spec = Spectrum::new(space.m);
    let rho = BoundaryFunction::new(rho.iter().map(|r| r.re).collect(), &spec);
    let (hi, lo) = rho.extremes();
    let scale = hi.abs().max(lo.abs());
    if scale == 0.0 {
        return Err(Error::AmbiguousZeros);
    }
    let degeneracy = hi.abs().min(lo.abs()) / scale;
    let mut changes = rho.sign_changes();
    if hi * lo < 0.0 && changes == 0 {
        changes = 2;
    }
    let form_value = form.map(|q| {
        let c = space.coordinates(delta);
        (c.transpose() * q * c)[0]
    });
    let by_zeros = if degeneracy < NULL_SCORE {
        Some(FamilyKind::Null)
    } else if hi * lo > 0.0 {
        Some(FamilyKind::Timelike)
    } else if changes == 2 {
        Some(FamilyKind::Spacelike)
    } else {
        None
    };
    let kind = match (by_zeros, form_value) {
        (Some(k), _) if degeneracy >= AMBIGUOUS_SCORE || k == FamilyKind::Null => k,
        (_, Some(f)) => {
            let c = space.coordinates(delta);
            let rel = f / c.norm_squared().max(f64::MIN_POSITIVE);
            if rel > AMBIGUOUS_SCORE {
                FamilyKind::Spacelike
            } else if rel < -AMBIGUOUS_SCORE {
                FamilyKind::Timelike
            } else {
                return Err(Error::AmbiguousZeros);
            }
        }
        _ => return Err(Error::AmbiguousZeros),
    };
    Ok(ModuliTangent {
        delta: delta.to_vec(),
        rho,
        rho_imaginary,
        boundary_sign_changes: changes,
        interior_zeros: winding(&n),
        degeneracy,
        kind,
        form_value,
    })
}

fn unit_sphere_samples(k: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|j| {
            let z = 1.0 - 2.0 * (j as f64 + 0.5) / k as f64;
            let r = (1.0 - z * z).sqrt();
            Vector3::new(r * (golden * j as f64).cos(), r * (golden * j as f64).sin(), z)
        })
        .collect()
}

/// Null directions of the tangent space, two per plane through a timelike direction.
pub fn null_directions(space: &TangentSpace, planes: usize) -> Result<(Vector3<f64>, Vec<Vector3<f64>>)> {
    let eta = |c: &Vector3<f64>| space.cone_function(c);
    let t = unit_sphere_samples(200)
        .into_iter()
        .map(|c| (eta(&c), c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(e, _)| *e < 0.0)
        .ok_or_else(|| Error::ConeFitFailure("no timelike direction".into()))?
        .1;
    let seed = if t.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u1 = (seed - t * t.dot(&seed)).normalize();
    let u2 = t.cross(&u1);
    let mut nulls = Vec::new();
    for p in 0..planes {
        let a = std::f64::consts::PI * p as f64 / planes as f64;
        let u = u1 * a.cos() + u2 * a.sin();
        let at = |phi: f64| t * phi.cos() + u * phi.sin();
        let scan = 96;
        let mut prev = (0.0, eta(&t));
        for k in 1..scan {
            let phi = std::f64::consts::PI * k as f64 / scan as f64;
            let e = eta(&at(phi));
            if prev.1 * e <= 0.0 {
                let (mut lo, mut hi, mut elo) = (prev.0, phi, prev.1);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let em = eta(&at(mid));
                    if em * elo > 0.0 {
                        lo = mid;
                        elo = em;
                    } else {
                        hi = mid;
                    }
                }
                nulls.push(at(0.5 * (lo + hi)));
            }
            prev = (phi, e);
        }
    }
    if nulls.len() < 5 {
        return Err(Error::ConeFitFailure(format!("only {} null directions found", nulls.len())));
    }
    Ok((t, nulls))
}

/// Quadratic form on the basis coordinates whose null cone is the tangent null cone; signature
/// `(+, +, -)`, negative on timelike directions, unit Frobenius norm.
pub fn moduli_conformal_form(space: &TangentSpace) -> Result<Matrix3<f64>> {
    let (t, nulls) = null_directions(space, 8)?;
    let rows = DMatrix::from_fn(nulls.len(), 6, |r, k| {
        let v = &nulls[r];
        match k {
            0 => v.x * v.x,
            1 => v.y * v.y,
            2 => v.z * v.z,
            3 => 2.0 * v.x * v.y,
            4 => 2.0 * v.x * v.z,
            _ => 2.0 * v.y * v.z,
        }
    });
    let svd = rows.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|a, b| svd.singular_values[*a].total_cmp(&svd.singular_values[*b]));
    let (s0, s1) = (svd.singular_values[order[0]], svd.singular_values[order[1]]);
    if s0 > 1e-4 * s1 {
        return Err(Error::ConeFitFailure(format!("null directions do not lie on one cone ({s0:e} vs {s1:e})")));
    }
    let q = v_t.row(order[0]);
    let mut form = Matrix3::new(q[0], q[3], q[4], q[3], q[1], q[5], q[4], q[5], q[2]);
    if (t.transpose() * form * t)[0] > 0.0 {
        form = -form;
    }
    form /= form.norm();
    let eig = form.symmetric_eigen().eigenvalues;
    let pos = eig.iter().filter(|e| **e > 0.0).count();
    if pos != 2 || eig.iter().any(|e| e.abs() < 1e-8) {
        return Err(Error::ConeFitFailure(format!("signature {eig:?} is not (+, +, -)")));
    }
    Ok(form)
}

/// The form transported to `(alpha, beta, gamma)` coordinates and scaled so its first entry is `-1`.
pub fn form_in_trigonometric_coordinates(space: &TangentSpace, form: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let l_inv = space.trigonometric_coordinates().try_inverse()?;
    let q = l_inv.transpose() * form * l_inv;
    (q[(0, 0)] < 0.0).then(|| q / -q[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desitter::DiskParam;

    fn identity_space() -> TangentSpace {
        let d = HolomorphicDisk::from_desitter(&DiskParam::identity(), 16).unwrap();
        linearized_tangent_basis(&SphereDiffeo::Antipodal, &d).unwrap()
    }

    fn poly(c: &[(usize, C)], n: usize) -> Vec<C> {
        let mut v = vec![C::new(0.0, 0.0); n + 1];
        for (k, z) in c {
            v[*k] = *z;
        }
        v
    }

    #[test]
    fn identity_disk_has_three_moduli() {
        let s = identity_space();
        assert_eq!(s.nullity, 3);
        assert!(s.gap > 1e6, "{}", s.gap);
        for t in &s.basis {
            assert!(t.rho_imaginary < 1e-9);
        }
    }

    #[test]
    fn hand_tangents_classify() {
        let s = identity_space();
        let one = C::new(1.0, 0.0);
        // scaling, translation along the real axis, and their null combination
        let cases = [
            (poly(&[(1, one)], 16), FamilyKind::Timelike),
            (poly(&[(0, one)], 16), FamilyKind::Spacelike),
            (poly(&[(0, one), (1, one)], 16), FamilyKind::Null),
        ];
        for (delta, kind) in cases {
            let t = classify_tangent(&s, &delta, None).unwrap();
            assert_eq!(t.kind, kind);
        }
        let t = classify_tangent(&s, &poly(&[(1, one)], 16), None).unwrap();
        assert_eq!(t.interior_zeros, 1);
    }

    #[test]
    fn conformal_form_matches_the_trigonometric_discriminant() {
        let s = identity_space();
        let q = moduli_conformal_form(&s).unwrap();
        let d = form_in_trigonometric_coordinates(&s, &q).unwrap();
        let expected = Matrix3::from_diagonal(&Vector3::new(-1.0, 4.0, 4.0));
        assert!((d - expected).abs().max() < 1e-6, "{d}");
    }

    #[test]
    fn random_tangents_agree_with_the_form_on_a_perturbed_disk() {
        use crate::sphere::{Harmonic, HarmonicKind};
        use crate::weld::{solve_disk, SolverOptions, WeldConstraints};
        use rand::{Rng, SeedableRng};
        let psi = SphereDiffeo::flow(
            SphereDiffeo::Antipodal,
            1.0,
            vec![Harmonic { l: 2, m: 1, kind: HarmonicKind::Gradient, coef: 0.03 }],
        )
        .unwrap();
        let o = crate::sphere::SpherePoint::from_affine(C::new(0.0, 0.0));
        let sel = WeldConstraints::CenterPoint { z: o, w: o, radius: 1.0 };
        let seed = HolomorphicDisk::from_desitter(&DiskParam::identity(), 16).unwrap();
        let disk = solve_disk(&psi, &sel, &seed, &SolverOptions::default()).unwrap().disk;
        let s = linearized_tangent_basis(&psi, &disk).unwrap();
        assert!(s.gap > 1e6, "{}", s.gap);
        let q = moduli_conformal_form(&s).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (mut agree, mut total) = (0, 0);
        for _ in 0..200 {
            let c = Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let Ok(t) = classify_tangent(&s, &s.tangent(&c), Some(&q)) else {
                continue;
            };
            total += 1;
            let f = t.form_value.unwrap();
            agree += usize::from(match t.kind {
                FamilyKind::Timelike => f < 0.0,
                FamilyKind::Spacelike => f > 0.0,
                FamilyKind::Null => true,
            });
        }
        assert!(total >= 198 && agree == total, "{agree}/{total}");
    }
}
