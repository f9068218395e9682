//! Shared fixtures for the criterion benches under `benches/`.

use miniweyl_core::sphere::SpherePoint;
use miniweyl_core::sphere::{Harmonic, HarmonicKind, SphereDiffeo};
use miniweyl_core::weld::WeldConstraints;
use miniweyl_core::Complex64 as C;

/// Antipodal map followed by a small three-harmonic flow of strength `eps`.
pub fn perturbed(eps: f64) -> SphereDiffeo {
    let h = |l, m, kind, coef| Harmonic { l, m, kind, coef };
    SphereDiffeo::flow(
        SphereDiffeo::Antipodal,
        1.0,
        vec![
            h(2, 1, HarmonicKind::Gradient, eps),
            h(3, -2, HarmonicKind::Rotational, 0.25 * eps),
            h(1, 0, HarmonicKind::Gradient, 0.5 * eps),
        ],
    )
    .expect("valid flow")
}

pub fn center() -> WeldConstraints {
    let o = SpherePoint::from_affine(C::new(0.0, 0.0));
    WeldConstraints::CenterPoint { z: o, w: o, radius: 1.0 }
}
