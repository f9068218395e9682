//! Boundary residual of the welding problem and its linearization in the first factor.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rayon::prelude::*;

use super::disk::{pole_distance, HolomorphicDisk, POLE_MARGIN, SOLVER_POLE_MARGIN};
use super::spectral::{horner, nodes, Spectrum};
use crate::error::{Error, Result};
use crate::sphere::{Chart, SphereDiffeo};

/// Collocation on `M = 4N` boundary nodes; negative modes `-1..=-K`, `K = M/3`, form the residual.
pub(crate) struct Collocation {
    pub n: usize,
    pub k: usize,
    margin: f64,
    spec: Spectrum,
    z: Vec<C>,
}

/// Spectrum of `G = psi . F1` on the boundary, optionally with the spectra of its Wirtinger
/// derivatives `A = dG/dF1` and `B = dG/dconj F1`.
pub(crate) struct BoundarySpectrum {
    pub modes: Vec<C>,
    pub derivative: Option<(Vec<C>, Vec<C>)>,
}

impl Collocation {
    pub fn new(n: usize) -> Self {
        let m = 4 * n;
        Self { n, k: m / 3, margin: SOLVER_POLE_MARGIN, spec: Spectrum::new(m), z: nodes(m) }
    }

    /// Collocation rejecting boundary images within [`POLE_MARGIN`] of a chart pole.
    pub fn strict(n: usize) -> Self {
        Self { margin: POLE_MARGIN, ..Self::new(n) }
    }

    pub fn boundary(
        &self,
        psi: &SphereDiffeo,
        f1: &[C],
        chart1: &Chart,
        chart2: &Chart,
        with_derivative: bool,
    ) -> Result<BoundarySpectrum> {
        let samples: Vec<(C, C, C)> = self
            .z
            .par_iter()
            .map(|zeta| {
                let c = horner(f1, *zeta);
                if pole_distance(c) < self.margin {
                    return Err(Error::ChartPole("first-factor boundary near the working chart pole".into()));
                }
                let (g, a, b) = if with_derivative {
                    let d = psi.chart_derivative(chart1, chart2, c)?;
                    (d.value, d.dz, d.dzbar)
                } else {
                    (psi.chart_value(chart1, chart2, c)?, C::new(0.0, 0.0), C::new(0.0, 0.0))
                };
                if pole_distance(g) < self.margin {
                    return Err(Error::ChartPole("graph boundary near the second working chart pole".into()));
                }
                Ok((g, a, b))
            })
            .collect::<Result<_>>()?;
        let modes = self.spec.forward(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
        let derivative = with_derivative.then(|| {
            (
                self.spec.forward(&samples.iter().map(|s| s.1).collect::<Vec<_>>()),
                self.spec.forward(&samples.iter().map(|s| s.2).collect::<Vec<_>>()),
            )
        });
        Ok(BoundarySpectrum { modes, derivative })
    }

    /// Negative-mode residual as interleaved `(Re, Im)` rows for modes `-1, -2, ..., -K`.
    pub fn residual_rows(&self, modes: &[C]) -> Vec<f64> {
        (1..=self.k as isize)
            .flat_map(|j| {
                let g = Spectrum::mode(modes, -j);
                [g.re, g.im]
            })
            .collect()
    }

    /// Residual rows differentiated along the real unknowns.
    pub fn residual_jacobian(&self, a_hat: &[C], b_hat: &[C]) -> DMatrix<f64> {
        DMatrix::from_fn(2 * self.k, 2 * (self.n + 1), |r, u| {
            let d = Self::mode_derivative(a_hat, b_hat, -((r / 2) as isize + 1), u);
            if r % 2 == 0 {
                d.re
            } else {
                d.im
            }
        })
    }

    /// Second-factor coefficients (interleaved real rows) differentiated along the real unknowns.
    pub fn second_factor_jacobian(&self, a_hat: &[C], b_hat: &[C]) -> DMatrix<f64> {
        DMatrix::from_fn(2 * (self.n + 1), 2 * (self.n + 1), |r, u| {
            let d = Self::mode_derivative(a_hat, b_hat, (r / 2) as isize, u);
            if r % 2 == 0 {
                d.re
            } else {
                d.im
            }
        })
    }

    /// Change of mode `m` of `G` along the real unknown `u` (`Re a_{u/2}` or `Im a_{u/2}`).
    pub fn mode_derivative(a_hat: &[C], b_hat: &[C], mode: isize, u: usize) -> C {
        let k = (u / 2) as isize;
        let (a, b) = (Spectrum::mode(a_hat, mode - k), Spectrum::mode(b_hat, mode + k));
        if u.is_multiple_of(2) {
            a + b
        } else {
            C::new(0.0, 1.0) * (a - b)
        }
    }
}

/// L2 norm of the negative-frequency content of `psi . F1` on the boundary and that spectrum
/// (entry `j` is the coefficient of `zeta^-(j+1)`).
pub fn boundary_residual(psi: &SphereDiffeo, disk: &HolomorphicDisk) -> Result<(f64, Vec<C>)> {
    let col = Collocation::strict(disk.n);
    let b = col.boundary(psi, &disk.f1, &disk.chart1, &disk.chart2, false)?;
    let neg: Vec<C> = (1..=col.k as isize).map(|j| Spectrum::mode(&b.modes, -j)).collect();
    Ok((neg.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), neg))
}

/// The second factor read off as the non-negative spectrum of `psi . F1`.
pub fn induced_second_factor(psi: &SphereDiffeo, disk: &HolomorphicDisk) -> Result<Vec<C>> {
    let col = Collocation::strict(disk.n);
    let b = col.boundary(psi, &disk.f1, &disk.chart1, &disk.chart2, false)?;
    Ok(b.modes[..=disk.n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desitter::DiskParam;

    #[test]
    fn antipodal_identity_disk_has_no_negative_modes() {
        let d = HolomorphicDisk::from_desitter(&DiskParam::identity(), 32).unwrap();
        let (r, _) = boundary_residual(&SphereDiffeo::Antipodal, &d).unwrap();
        assert!(r < 1e-15);
        let f2 = induced_second_factor(&SphereDiffeo::Antipodal, &d).unwrap();
        assert!((f2[1] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn shifted_disk_is_off_the_graph_and_resolution_independent() {
        let mut d = HolomorphicDisk::from_desitter(&DiskParam::identity(), 32).unwrap();
        d.f1[2] = C::new(0.1, 0.0);
        let (r, _) = boundary_residual(&SphereDiffeo::Antipodal, &d).unwrap();
        assert!(r > 1e-3, "{r}");
        let (r2, _) = boundary_residual(&SphereDiffeo::Antipodal, &d.with_degree(64)).unwrap();
        assert!((r - r2).abs() < 1e-12);
    }

    #[test]
    fn linearization_matches_differences() {
        let psi = SphereDiffeo::mobius_conjugate(
            crate::sphere::MobiusMap::normalized(
                C::new(1.0, 0.1),
                C::new(0.1, 0.0),
                C::new(0.0, 0.1),
                C::new(1.0, 0.0),
            ),
            crate::sphere::MobiusMap::identity(),
            SphereDiffeo::Antipodal,
        );
        let d = HolomorphicDisk::from_desitter(&DiskParam::identity(), 8).unwrap();
        let col = Collocation::new(8);
        let b = col.boundary(&psi, &d.f1, &d.chart1, &d.chart2, true).unwrap();
        let (ah, bh) = b.derivative.unwrap();
        let h = 1e-6;
        for u in [0, 1, 4, 7] {
            let mut p = d.f1.clone();
            let mut q = d.f1.clone();
            let e = if u % 2 == 0 { C::new(h, 0.0) } else { C::new(0.0, h) };
            p[u / 2] += e;
            q[u / 2] -= e;
            let mp = col.boundary(&psi, &p, &d.chart1, &d.chart2, false).unwrap().modes;
            let mq = col.boundary(&psi, &q, &d.chart1, &d.chart2, false).unwrap().modes;
            for mode in [-3isize, -1, 0, 2] {
                let fd = (Spectrum::mode(&mp, mode) - Spectrum::mode(&mq, mode)) / (2.0 * h);
                let an = Collocation::mode_derivative(&ah, &bh, mode, u);
                assert!((fd - an).norm() < 1e-8, "u={u} mode={mode}");
            }
        }
    }
}
