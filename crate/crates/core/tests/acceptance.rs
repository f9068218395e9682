//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run alone with `cargo test --release -p miniweyl-core --test acceptance`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use miniweyl_core::desitter::{boundary_on_graph_residual, random_params, DiskParam};
use miniweyl_core::lift::{boundary_utp_residual, legendrian_residual, lift_disk, SignChoice};
use miniweyl_core::quad::fibonacci_sphere;
use miniweyl_core::scattering::{
    integrate_null_geodesic, jacobi_transport, refocus_check, scattering_jacobian, ScatterOptions,
};
use miniweyl_core::sphere::{
    lagrangian_residual, pullback_area_data, Chart, Harmonic, HarmonicKind, MobiusMap, SphereDiffeo, SpherePoint,
};
use miniweyl_core::weld::moduli::form_in_trigonometric_coordinates;
use miniweyl_core::weld::{
    classify_tangent, family_parameter, first_area, geodesic_family, linearized_tangent_basis, moduli_conformal_form,
    omega_area, round_trip, round_trip_contacts, seed_disk, solve_disk, ContinuationOptions, FamilyKind,
    HolomorphicDisk, SolverOptions, WeldConstraints,
};
use miniweyl_core::weyl::{
    ew_residual, interior_samples, weyl_connection_coeffs, ConformalRescaling, DeSitter, StaticCylinder, WPoint,
};
use miniweyl_core::Complex64 as C;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Debug>(what: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{what}: {e:?}")
}

fn perturbed(eps: f64) -> SphereDiffeo {
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

fn origin() -> SpherePoint {
    SpherePoint::from_affine(C::new(0.0, 0.0))
}

fn center_selector() -> WeldConstraints {
    WeldConstraints::CenterPoint { z: origin(), w: origin(), radius: 1.0 }
}

fn random_mobius(rng: &mut impl Rng, spread: f64) -> MobiusMap {
    let mut g = || C::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0) * spread;
    let one = C::new(1.0, 0.0);
    MobiusMap::normalized(one + g(), g(), g(), one + g())
}

fn c1_boundary_identity() -> Outcome {
    let worst = random_params(100, 11).iter().map(boundary_on_graph_residual).fold(0.0, f64::max);
    check(worst < 1e-12, format!("max residual {worst:.2e} over 100 parameters"))
}

fn c2_disk_area() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in random_params(20, 12) {
        let d = HolomorphicDisk::from_desitter(&p, 16).map_err(fail("disk"))?;
        let area = first_area(&SphereDiffeo::Antipodal, &d).map_err(fail("area"))? + omega_area(&d);
        worst = worst.max((area - 4.0 * PI).abs());
    }
    check(worst < 1e-7, format!("max |area - 4 pi| {worst:.2e} over 20 disks"))
}

fn c3_lagrangian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let maps = [
        ("antipodal", SphereDiffeo::Antipodal),
        (
            "mobius",
            SphereDiffeo::mobius_conjugate(
                random_mobius(&mut rng, 0.4),
                random_mobius(&mut rng, 0.4),
                SphereDiffeo::Antipodal,
            ),
        ),
        ("flow", perturbed(0.05)),
    ];
    let points = fibonacci_sphere(200);
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, psi) in &maps {
        let mut worst: f64 = 0.0;
        for p in &points {
            worst = worst.max(lagrangian_residual(psi, p).map_err(fail(name))?);
        }
        let mass = pullback_area_data(psi).and_then(|k| k.total_mass()).map_err(fail(name))?;
        ok &= worst < 1e-8 && (mass - 4.0 * PI).abs() < 1e-6;
        parts.push(format!("{name}: residual {worst:.1e}, mass err {:.1e}", (mass - 4.0 * PI).abs()));
    }
    check(ok, parts.join("; "))
}

fn c4_scattering() -> Outcome {
    let ds = DeSitter::default();
    let opts = ScatterOptions::default();
    let (mut disp, mut anti, mut det_err, mut positive) = (0.0f64, 0.0f64, 0.0f64, 0);
    for p in fibonacci_sphere(20) {
        let r = refocus_check(&ds, &p, 32, &opts).map_err(fail("refocus"))?;
        disp = disp.max(r.dispersion);
        anti = anti.max(r.mean_q.distance(&p.antipodal()));
        let (m, _) = scattering_jacobian(&ds, &p, &opts).map_err(fail("jacobian"))?;
        let det = m.determinant();
        positive += usize::from(det >= 0.0);
        det_err = det_err.max((det + 1.0).abs());
    }
    check(
        disp < 1e-6 && anti < 1e-6 && positive == 0 && det_err < 1e-3,
        format!(
            "dispersion {disp:.1e}, antipodal error {anti:.1e}, |det + 1| {det_err:.1e}, non-negative dets {positive}"
        ),
    )
}

fn c5_jacobi() -> Outcome {
    let opts = ScatterOptions::default();
    let ds = DeSitter::default();
    let cyl = StaticCylinder { half_height: 1.0 };
    let (mut bad_ds, mut refocused_cyl, mut total) = (0, 0, 0);
    for (k, p) in fibonacci_sphere(6).into_iter().enumerate() {
        for theta in [0.3 + k as f64, 2.5 + 0.7 * k as f64] {
            total += 1;
            let g = integrate_null_geodesic(&ds, &p, theta, &opts).map_err(fail("de Sitter geodesic"))?;
            let j = jacobi_transport(&ds, &g, &opts).map_err(fail("de Sitter jacobi"))?;
            bad_ds += usize::from(j.sign_changes != 1);
            let g = integrate_null_geodesic(&cyl, &p, theta, &opts).map_err(fail("cylinder geodesic"))?;
            let j = jacobi_transport(&cyl, &g, &opts).map_err(fail("cylinder jacobi"))?;
            refocused_cyl += usize::from(j.refocused || j.sign_changes != 0);
        }
    }
    check(
        bad_ds == 0 && refocused_cyl == 0,
        format!(
            "{total} geodesics: de Sitter without exactly one sign change {bad_ds}, cylinder refocused {refocused_cyl}"
        ),
    )
}

fn c6_welding_oracle() -> Outcome {
    let exact = HolomorphicDisk::from_desitter(&DiskParam::identity(), 32).map_err(fail("disk"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut seed = exact.clone();
    for a in seed.f1.iter_mut().chain(seed.f2.iter_mut()) {
        *a += C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 2e-2;
    }
    let r = solve_disk(&SphereDiffeo::Antipodal, &center_selector(), &seed, &SolverOptions::default())
        .map_err(fail("solve"))?;
    let d = r.disk.with_degree(32);
    let coeff_err = if d.chart1 == exact.chart1 && d.chart2 == exact.chart2 {
        d.f1.iter().zip(&exact.f1).chain(d.f2.iter().zip(&exact.f2)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let late: Vec<f64> = r.history.windows(2).filter(|w| w[0] < 1e-3 && w[1] > 1e-14).map(|w| w[1] / w[0]).collect();
    let worst_ratio = late.iter().copied().fold(0.0, f64::max);
    check(
        coeff_err < 1e-10 && worst_ratio < 1e-2 && r.disk.n == 32,
        format!(
            "coefficient error {coeff_err:.1e}, worst late ratio {worst_ratio:.1e}, {} iterations",
            r.history.len()
        ),
    )
}

/// Centre-point selector met by `disk`, after rotating the disk so `arg F1'(0) = 0`.
fn center_gauge(n1: MobiusMap, n2: MobiusMap) -> (WeldConstraints, MobiusMap, MobiusMap) {
    let z = n1.apply(&origin());
    let local = MobiusMap::of_chart(&Chart::centered_at(z)).inverse() * n1;
    let d = local.derivatives(C::new(0.0, 0.0)).0;
    let half = C::from_polar(1.0, -d.arg() / 2.0);
    let rot = MobiusMap::normalized(half, C::new(0.0, 0.0), C::new(0.0, 0.0), half.conj());
    let sel = WeldConstraints::CenterPoint { z, w: n2.apply(&origin()), radius: d.norm() };
    (sel, n1 * rot, n2 * rot)
}

fn c7_mobius_equivariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (pre, post) = (random_mobius(&mut rng, 0.3), random_mobius(&mut rng, 0.3));
        let psi = SphereDiffeo::mobius_conjugate(pre, post, SphereDiffeo::Antipodal);
        let base = random_params(1, rng.gen()).remove(0);
        let base = DiskParam::new(random_mobius(&mut rng, 0.3) * base.matrix * MobiusMap::identity());
        let base = if base.condition_number() > 3.0 { DiskParam::identity() } else { base };
        // (F1, F2) solves the antipodal problem iff (pre^-1 F1, post F2) solves the conjugated one
        let (sel, n1, n2) = center_gauge(pre.inverse() * base.first(), post * base.second());
        let chart = |m: &MobiusMap| Chart::centered_at(miniweyl_core::desitter::image_cap(m).0);
        let expected = HolomorphicDisk::from_mobius_pair_in(&n1, &n2, chart(&n1), chart(&n2), 48)
            .map_err(fail("expected disk"))?;
        let mut seed = expected.clone();
        for a in seed.f1.iter_mut() {
            *a += C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 1e-3;
        }
        let r = solve_disk(&psi, &sel, &seed, &opts).map_err(fail("solve"))?;
        worst = worst.max(r.disk.distance(&expected));
    }
    check(worst < 1e-8, format!("max disk distance {worst:.1e} over 10 conjugations"))
}

fn c8_moduli() -> Outcome {
    let disk = HolomorphicDisk::from_desitter(&DiskParam::identity(), 16).map_err(fail("disk"))?;
    let s = linearized_tangent_basis(&SphereDiffeo::Antipodal, &disk).map_err(fail("tangent basis"))?;
    let poly = |c: &[(usize, C)]| {
        let mut v = vec![C::new(0.0, 0.0); 17];
        for (k, z) in c {
            v[*k] = *z;
        }
        v
    };
    let one = C::new(1.0, 0.0);
    let hand = [
        (poly(&[(1, one)]), FamilyKind::Timelike),
        (poly(&[(0, one)]), FamilyKind::Spacelike),
        (poly(&[(0, one), (1, one)]), FamilyKind::Null),
    ];
    let mut hand_ok = true;
    for (delta, kind) in &hand {
        hand_ok &= classify_tangent(&s, delta, None).map_err(fail("hand tangent"))?.kind == *kind;
    }
    let form = moduli_conformal_form(&s).map_err(fail("form"))?;
    let eig = form.symmetric_eigen().eigenvalues;
    let signature_ok = eig.iter().filter(|e| **e > 0.0).count() == 2 && eig.iter().filter(|e| **e < 0.0).count() == 1;
    let trig = form_in_trigonometric_coordinates(&s, &form).ok_or("form not transportable")?;
    let match_err = (trig - Matrix3::from_diagonal(&Vector3::new(-1.0, 4.0, 4.0))).abs().max();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut agree = 0;
    for _ in 0..1000 {
        let c = Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        if let Ok(t) = classify_tangent(&s, &s.tangent(&c), Some(&form)) {
            let f = t.form_value.unwrap_or(f64::NAN);
            agree += usize::from(match t.kind {
                FamilyKind::Timelike => f < 0.0,
                FamilyKind::Spacelike => f > 0.0,
                FamilyKind::Null => f.abs() < 1e-6,
            });
        }
    }
    check(
        s.nullity == 3 && s.gap >= 1e6 && hand_ok && signature_ok && match_err < 1e-6 && agree >= 990,
        format!(
            "nullity {}, gap {:.1e}, hand tangents {}, signature {}, diag(-1,4,4) error {match_err:.1e}, agreement {agree}/1000",
            s.nullity,
            s.gap,
            if hand_ok { "ok" } else { "wrong" },
            if signature_ok { "(+,+,-)" } else { "wrong" }
        ),
    )
}

fn c9_omega() -> Outcome {
    let id = HolomorphicDisk::from_desitter(&DiskParam::identity(), 16).map_err(fail("disk"))?;
    let id_err = (omega_area(&id) - TAU).abs();
    let (c, s) = (ContinuationOptions::default(), SolverOptions::default());
    let mut in_range = true;
    let mut monotone = true;
    let mut count = 0;
    let sel = center_selector();
    for psi in [SphereDiffeo::Antipodal, perturbed(0.05)] {
        let seed = seed_disk(&psi, &sel, 16, &s).map_err(fail("seed"))?;
        for end in [1.5, -1.5] {
            let fam = geodesic_family(&psi, &sel, &[end], Some(&seed), &c, &s).map_err(fail("family"))?;
            monotone &= fam.omega_monotone();
            in_range &= fam.omegas.iter().all(|o| *o > 0.0 && *o < 4.0 * PI);
            count += fam.omegas.len();
        }
    }
    check(
        id_err < 1e-8 && in_range && monotone,
        format!("|Omega(id) - 2 pi| {id_err:.1e}; {count} solved disks in (0, 4 pi): {in_range}; monotone: {monotone}"),
    )
}

fn c10_spacelike_zoll() -> Outcome {
    let sel = WeldConstraints::TwoBoundaryPoints {
        x: SpherePoint::from_affine(C::new(0.5, 0.0)),
        y: SpherePoint::from_affine(C::new(-0.2, 1.0)),
    };
    let (c, s) = (ContinuationOptions::default(), SolverOptions::default());
    let psi = SphereDiffeo::Antipodal;
    let seed = seed_disk(&psi, &sel, 16, &s).map_err(fail("seed"))?;
    let p0 = family_parameter(&psi, &sel, &seed, 0.0).map_err(fail("parameter"))?;
    let span: Vec<f64> = (1..=8).map(|k| p0 + PI / 4.0 * k as f64).collect();
    let fam = geodesic_family(&psi, &sel, &span, Some(&seed), &c, &s).map_err(fail("family"))?;
    let closure = fam.disks.last().expect("non-empty").distance(&fam.disks[0]);
    check(closure < 1e-6, format!("closure error {closure:.1e} after one turn, {} disks", fam.disks.len()))
}

fn c11_lift() -> Outcome {
    let mut disks: Vec<(SphereDiffeo, HolomorphicDisk)> = Vec::new();
    for p in random_params(10, 21) {
        disks.push((SphereDiffeo::Antipodal, HolomorphicDisk::from_desitter(&p, 16).map_err(fail("disk"))?));
    }
    let s = SolverOptions::default();
    let off_center = WeldConstraints::CenterPoint {
        z: SpherePoint::from_affine(C::new(0.2, -0.1)),
        w: SpherePoint::from_affine(C::new(-0.3, 0.2)),
        radius: 0.9,
    };
    for eps in [0.02, 0.05] {
        for sel in [center_selector(), off_center.clone()] {
            let psi = perturbed(eps);
            let d = seed_disk(&psi, &sel, 32, &s).map_err(fail("perturbed disk"))?;
            disks.push((psi, d));
        }
    }
    let (mut leg, mut utp) = (0.0f64, 0.0f64);
    for (psi, d) in &disks {
        for sign in [SignChoice::Plus, SignChoice::Minus] {
            let l = lift_disk(d, sign).map_err(fail("lift"))?;
            leg = leg.max(legendrian_residual(&l));
            utp = utp.max(boundary_utp_residual(&l, psi).map_err(fail("utp"))?.max());
        }
    }
    check(
        leg < 1e-10 && utp < 1e-8,
        format!("{} disks x 2 signs: legendrian {leg:.1e}, boundary {utp:.1e}", disks.len()),
    )
}

fn c12_round_trip() -> Outcome {
    let psi = perturbed(0.05);
    let r = round_trip(&psi, &round_trip_contacts(8), &ContinuationOptions::default(), &SolverOptions::default())
        .map_err(fail("round trip"))?;
    check(
        r.max_error < 5e-3 && r.gauge_distance < 1e-2,
        format!("8 contacts: max endpoint error {:.1e}, gauge distance {:.1e}", r.max_error, r.gauge_distance),
    )
}

fn c13_einstein_weyl() -> Outcome {
    let ds = DeSitter::default();
    let mut worst: f64 = 0.0;
    for p in interior_samples(&ds, 100, 0.35, 23) {
        worst = worst.max(ew_residual(&ds, &p).map_err(fail("ew residual"))?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut cov: f64 = 0.0;
    for _ in 0..3 {
        let k: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>() - 0.5);
        let rescaled = ConformalRescaling {
            inner: DeSitter::default(),
            phi: Arc::new(move |p: &WPoint| {
                k[0] * p.t.sin() + k[1] * p.w.re * p.w.im + k[2] * p.w.norm_sqr() + k[3] * (p.t * p.w.re).cos()
            }),
        };
        for p in interior_samples(&ds, 20, 0.3, rng.gen()) {
            let a = weyl_connection_coeffs(&ds, &p).map_err(fail("connection"))?;
            let b = weyl_connection_coeffs(&rescaled, &p).map_err(fail("rescaled connection"))?;
            cov = cov.max(a.max_abs_diff(&b));
        }
    }
    check(worst < 1e-6 && cov < 1e-8, format!("max ew residual {worst:.1e}; rescaling defect {cov:.1e}"))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("de Sitter boundary identity", 1, c1_boundary_identity),
        ("de Sitter disk area", 5, c2_disk_area),
        ("graphs are Lagrangian", 10, c3_lagrangian),
        ("scattering oracle", 60, c4_scattering),
        ("Jacobi sign structure", 10, c5_jacobi),
        ("welding oracle", 2, c6_welding_oracle),
        ("Mobius equivariance", 10, c7_mobius_equivariance),
        ("moduli structure", 30, c8_moduli),
        ("Omega properties", 10, c9_omega),
        ("space-like Zoll", 60, c10_spacelike_zoll),
        ("Legendrian lift", 10, c11_lift),
        ("round trip", 600, c12_round_trip),
        ("Einstein-Weyl residual", 30, c13_einstein_weyl),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let label = format!("{:>2} {name}", k + 1);
        if filter.as_ref().is_some_and(|f| !label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let (pass, detail) = match outcome {
            Ok(d) => (!over, d),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        let budget_note = if over { " OVER BUDGET" } else { "" };
        println!(
            "[{}] {label}: {detail} ({:.2} s / {budget} s{budget_note})",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
