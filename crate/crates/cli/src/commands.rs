//! One runner per subcommand: resolve the config, compute, write artifacts and the manifest.

use std::path::{Path, PathBuf};

use clap::Args;
use miniweyl_core::desitter::{boundary_on_graph_report, gauge_reduce, random_params};
use miniweyl_core::lift::{boundary_utp_residual, legendrian_residual, lift_disk, SignChoice};
use miniweyl_core::scattering::{scattering_map, GridSpec, ScatterOptions};
use miniweyl_core::sphere::{SphereDiffeo, SpherePoint};
use miniweyl_core::weld::moduli::form_in_trigonometric_coordinates;
use miniweyl_core::weld::{
    first_area, geodesic_family, linearized_tangent_basis, moduli_conformal_form, omega_area, round_trip,
    round_trip_contacts, seed_disk, solve_disk, ContinuationOptions, HolomorphicDisk, SolverOptions, WeldConstraints,
};
use miniweyl_core::weyl::{conformal_compactness_check, ew_residual, interior_samples, StructureDescriptor};
use miniweyl_core::Complex64 as C;
use serde::Serialize;
use serde_json::json;

use crate::io::{self, CliError, CliResult, Output};
use crate::svg;

fn matrix3(m: &nalgebra::Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn boundary_curve(disk: &HolomorphicDisk, second: bool, samples: usize) -> Vec<SpherePoint> {
    (0..samples)
        .map(|k| {
            let zeta = C::from_polar(1.0, std::f64::consts::TAU * k as f64 / samples as f64);
            if second {
                disk.point2(zeta)
            } else {
                disk.point1(zeta)
            }
        })
        .collect()
}

fn solver_options(tolerance: f64) -> CliResult<SolverOptions> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(CliError::Config(format!("tolerance must lie in (0, 1), got {tolerance}")));
    }
    Ok(SolverOptions { tolerance, ..SolverOptions::default() })
}

fn positive(name: &str, v: usize) -> CliResult<usize> {
    if v == 0 {
        return Err(CliError::Config(format!("{name} must be positive")));
    }
    Ok(v)
}

#[derive(Debug, Args, Serialize)]
pub struct DesitterArgs {
    /// Number of random SL(2, C) parameters.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Seed of the parameter sampler.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Boundary nodes for the on-graph residual.
    #[arg(long, default_value_t = 256)]
    pub nodes: usize,
    /// Taylor degree of the disks whose area is integrated.
    #[arg(long, default_value_t = 16)]
    pub degree: usize,
}

pub fn desitter(a: &DesitterArgs, out: &Path) -> CliResult<PathBuf> {
    positive("samples", a.samples)?;
    positive("nodes", a.nodes)?;
    positive("degree", a.degree)?;
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut rows = Vec::new();
    let (mut max_residual, mut max_area_error) = (0.0f64, 0.0f64);
    for param in random_params(a.samples, a.seed) {
        let report = boundary_on_graph_report(&param, a.nodes);
        let disk = HolomorphicDisk::from_desitter(&param, a.degree)?;
        let area = first_area(&SphereDiffeo::Antipodal, &disk)? + omega_area(&disk);
        max_residual = max_residual.max(report.residual);
        max_area_error = max_area_error.max((area - four_pi).abs());
        rows.push(json!({ "param": param, "boundary": report, "area": area, "reduced": gauge_reduce(&param) }));
    }
    let mut o = Output::new(out, "desitter");
    o.write("json", &io::json(&rows))?;
    o.finish("desitter", a, json!({ "max_boundary_residual": max_residual, "max_area_error": max_area_error }))
}

#[derive(Debug, Args, Serialize)]
pub struct CheckEwArgs {
    /// Structure descriptor: JSON file, inline JSON, or one of desitter / cylinder / flat.
    #[arg(long, default_value = "desitter")]
    pub structure: String,
    /// Interior sample points.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Seed of the interior sampler.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Distance kept from the boundary slices.
    #[arg(long, default_value_t = 0.35)]
    pub margin: f64,
}

pub fn check_ew(a: &CheckEwArgs, out: &Path) -> CliResult<PathBuf> {
    positive("points", a.points)?;
    let descriptor: StructureDescriptor = io::load(&a.structure, "structure")?;
    let w = descriptor.build()?;
    let (t0, t1) = w.boundary_times();
    if !(a.margin >= 0.0 && 2.0 * a.margin < t1 - t0) {
        return Err(CliError::Config(format!("margin {} does not fit between the boundary slices", a.margin)));
    }
    let residuals = interior_samples(w.as_ref(), a.points, a.margin, a.seed)
        .iter()
        .map(|p| ew_residual(w.as_ref(), p))
        .collect::<miniweyl_core::Result<Vec<f64>>>()?;
    let max = residuals.iter().copied().fold(0.0, f64::max);
    let compactness = conformal_compactness_check(w.as_ref());
    let mut o = Output::new(out, "check-ew");
    o.write("json", &io::json(&json!({ "structure": w.name(), "residuals": residuals, "compactness": compactness })))?;
    let config = json!({ "args": a, "structure": descriptor });
    o.finish("check-ew", &config, json!({ "max_ew_residual": max, "compact": compactness.pass }))
}

#[derive(Debug, Args, Serialize)]
pub struct ScatterArgs {
    /// Structure descriptor, as for `check-ew`.
    #[arg(long, default_value = "desitter")]
    pub structure: String,
    /// Grid size in both polar and azimuthal angle.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Null directions refocused per base point.
    #[arg(long, default_value_t = 16)]
    pub dirs: usize,
    /// Also estimate the scattering Jacobian determinant.
    #[arg(long)]
    pub jacobian: bool,
}

pub fn scatter(a: &ScatterArgs, out: &Path) -> CliResult<PathBuf> {
    positive("grid", a.grid)?;
    positive("dirs", a.dirs)?;
    let descriptor: StructureDescriptor = io::load(&a.structure, "structure")?;
    let w = descriptor.build()?;
    let samples =
        scattering_map(w.as_ref(), &GridSpec::square(a.grid), a.dirs, a.jacobian, &ScatterOptions::default())?;
    let plot = svg::scatter_svg(&samples)?;
    let mut o = Output::new(out, "scatter");
    o.write("csv", &io::scatter_csv(&samples))?;
    o.write("svg", &plot)?;
    let summary = json!({
        "samples": samples.len(),
        "failed": samples.iter().filter(|s| !s.ok).count(),
        "max_dispersion": samples.iter().map(|s| s.dispersion).fold(0.0, f64::max),
        "max_antipodal_distance": samples.iter().map(|s| s.q.distance(&s.p.antipodal())).fold(0.0, f64::max),
    });
    o.finish("scatter", &json!({ "args": a, "structure": descriptor }), summary)
}

#[derive(Debug, Args, Serialize)]
pub struct WeldArgs {
    /// Boundary map descriptor: JSON file, inline JSON, or `antipodal`.
    #[arg(long)]
    pub psi: String,
    /// Constraint selector: JSON file or inline JSON.
    #[arg(long)]
    pub constraints: String,
    /// Starting disk (JSON); defaults to the homotopy seed from the unperturbed map.
    #[arg(long)]
    pub seed_disk: Option<String>,
    /// Taylor degree of the generated seed.
    #[arg(long, default_value_t = 32)]
    pub degree: usize,
    /// Newton residual target.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
}

pub fn weld(a: &WeldArgs, out: &Path) -> CliResult<PathBuf> {
    positive("degree", a.degree)?;
    let psi: SphereDiffeo = io::load(&a.psi, "psi")?;
    psi.validate()?;
    let sel: WeldConstraints = io::load(&a.constraints, "constraints")?;
    sel.validate()?;
    let opts = solver_options(a.tolerance)?;
    let seed = match &a.seed_disk {
        Some(s) => io::load(s, "seed disk")?,
        None => seed_disk(&psi, &sel, a.degree, &opts)?,
    };
    let report = solve_disk(&psi, &sel, &seed, &opts)?;
    let mut o = Output::new(out, "weld");
    o.write("json", &io::json(&report.disk))?;
    let summary = json!({
        "degree": report.disk.n,
        "residual": report.disk.residual,
        "constraint_error": report.constraint_error,
        "parameter": report.parameter,
        "omega": omega_area(&report.disk),
        "history": report.history,
    });
    o.finish("weld", &json!({ "args": a, "psi": psi, "constraints": sel }), summary)
}

#[derive(Debug, Args, Serialize)]
pub struct ModuliArgs {
    /// Boundary map descriptor, as for `weld`.
    #[arg(long, default_value = "antipodal")]
    pub psi: String,
    /// Solved disk (JSON), e.g. the output of `weld`.
    #[arg(long)]
    pub disk: String,
}

pub fn moduli(a: &ModuliArgs, out: &Path) -> CliResult<PathBuf> {
    let psi: SphereDiffeo = io::load(&a.psi, "psi")?;
    psi.validate()?;
    let disk: HolomorphicDisk = io::load(&a.disk, "disk")?;
    let space = linearized_tangent_basis(&psi, &disk)?;
    let form = moduli_conformal_form(&space)?;
    let eigenvalues: Vec<f64> = {
        let mut e: Vec<f64> = form.symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let trig = form_in_trigonometric_coordinates(&space, &form).map(|m| matrix3(&m));
    let tail = &space.singular_values[space.singular_values.len().saturating_sub(6)..];
    let report = json!({
        "nullity": space.nullity,
        "gap": space.gap,
        "smallest_singular_values": tail,
        "basis_kinds": space.basis.iter().map(|t| t.kind).collect::<Vec<_>>(),
        "form": matrix3(&form),
        "form_eigenvalues": eigenvalues,
        "form_trigonometric": trig,
    });
    let mut o = Output::new(out, "moduli");
    o.write("json", &io::json(&report))?;
    let summary = json!({ "nullity": space.nullity, "gap": space.gap, "form_eigenvalues": eigenvalues });
    o.finish("moduli", &json!({ "args": a, "psi": psi }), summary)
}

fn parse_targets(s: &str) -> CliResult<Vec<f64>> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Config(format!("target {x:?}: {e}"))))
        .collect::<CliResult<Vec<f64>>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config("targets must be finite".into()));
    }
    Ok(v)
}

#[derive(Debug, Args, Serialize)]
pub struct GeodesicArgs {
    /// Boundary map descriptor, as for `weld`.
    #[arg(long, default_value = "antipodal")]
    pub psi: String,
    /// Constraint selector; its type picks the timelike, null or space-like family.
    #[arg(long)]
    pub constraints: String,
    /// Comma-separated family parameter values, visited in order.
    #[arg(long)]
    pub targets: String,
    /// Starting disk (JSON); defaults to the homotopy seed.
    #[arg(long)]
    pub seed_disk: Option<String>,
    /// Boundary samples per plotted curve.
    #[arg(long, default_value_t = 128)]
    pub curve_samples: usize,
}

pub fn geodesic(a: &GeodesicArgs, out: &Path) -> CliResult<PathBuf> {
    let psi: SphereDiffeo = io::load(&a.psi, "psi")?;
    psi.validate()?;
    let sel: WeldConstraints = io::load(&a.constraints, "constraints")?;
    sel.validate()?;
    let targets = parse_targets(&a.targets)?;
    if a.curve_samples < 3 {
        return Err(CliError::Config("curve-samples must be at least 3".into()));
    }
    let seed: Option<HolomorphicDisk> = a.seed_disk.as_deref().map(|s| io::load(s, "seed disk")).transpose()?;
    let fam = geodesic_family(
        &psi,
        &sel,
        &targets,
        seed.as_ref(),
        &ContinuationOptions::default(),
        &SolverOptions::default(),
    )?;
    let lines: Vec<_> = fam
        .disks
        .iter()
        .enumerate()
        .map(|(k, d)| {
            json!({
                "index": k,
                "parameter": fam.parameter_values[k],
                "omega": fam.omegas[k],
                "hit": fam.hits.contains(&k),
                "disk": d,
            })
        })
        .collect();
    let plotted: Vec<&HolomorphicDisk> = fam.hits.iter().map(|k| &fam.disks[*k]).collect();
    let c1: Vec<_> = plotted.iter().map(|d| boundary_curve(d, false, a.curve_samples)).collect();
    let c2: Vec<_> = plotted.iter().map(|d| boundary_curve(d, true, a.curve_samples)).collect();
    let touch = match &sel {
        WeldConstraints::BoundaryContact { x, .. } => [Some(*x), Some(psi.eval(x)?)],
        _ => [None; 2],
    };
    let title = format!("{:?} family, {} curves", fam.kind, plotted.len());
    let (plot, geometry) = svg::family_svg(&title, &c1, &c2, touch)?;
    let mut by_parameter: Vec<(f64, f64)> =
        fam.hits.iter().map(|k| (fam.parameter_values[*k], fam.omegas[*k])).collect();
    by_parameter.sort_by(|a, b| a.0.total_cmp(&b.0));
    let steps: Vec<f64> = by_parameter.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let monotone = steps.iter().all(|d| *d > 0.0) || steps.iter().all(|d| *d < 0.0);
    let mut o = Output::new(out, "geodesic");
    o.write("jsonl", &io::json_lines(&lines))?;
    o.write("svg", &plot)?;
    let summary = json!({
        "kind": fam.kind,
        "points": fam.disks.len(),
        "omega_monotone": monotone,
        "hit_omegas": fam.hits.iter().map(|k| fam.omegas[*k]).collect::<Vec<_>>(),
        "curves": geometry,
    });
    o.finish("geodesic", &json!({ "args": a, "psi": psi, "constraints": sel, "targets": targets }), summary)
}

#[derive(Debug, Args, Serialize)]
pub struct RoundtripArgs {
    /// Boundary map descriptor, as for `weld`.
    #[arg(long)]
    pub psi: String,
    /// Number of boundary contacts (at least three).
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
}

pub fn roundtrip(a: &RoundtripArgs, out: &Path) -> CliResult<PathBuf> {
    let psi: SphereDiffeo = io::load(&a.psi, "psi")?;
    psi.validate()?;
    let contacts = round_trip_contacts(a.samples);
    let report = round_trip(&psi, &contacts, &ContinuationOptions::default(), &SolverOptions::default())?;
    let mut o = Output::new(out, "roundtrip");
    o.write("json", &io::json(&report))?;
    let summary = json!({ "max_error": report.max_error, "gauge_distance": report.gauge_distance });
    o.finish("roundtrip", &json!({ "args": a, "psi": psi, "contacts": contacts }), summary)
}

fn parse_sign(s: &str) -> Result<SignChoice, String> {
    match s {
        "plus" | "+" | "1" | "+1" => Ok(SignChoice::Plus),
        "minus" | "-" | "-1" => Ok(SignChoice::Minus),
        _ => Err(format!("expected plus or minus, got {s:?}")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct LiftArgs {
    /// Boundary map the lifted boundary is checked against.
    #[arg(long, default_value = "antipodal")]
    pub psi: String,
    /// Disk to lift (JSON), e.g. the output of `weld`.
    #[arg(long)]
    pub disk: String,
    /// Square-root branch: plus or minus.
    #[arg(long, default_value = "plus", value_parser = parse_sign, allow_hyphen_values = true)]
    pub sign: SignChoice,
}

pub fn lift(a: &LiftArgs, out: &Path) -> CliResult<PathBuf> {
    let psi: SphereDiffeo = io::load(&a.psi, "psi")?;
    psi.validate()?;
    let disk: HolomorphicDisk = io::load(&a.disk, "disk")?;
    let lifted = lift_disk(&disk, a.sign)?;
    let utp = boundary_utp_residual(&lifted, &psi)?;
    let mut o = Output::new(out, "lift");
    o.write("json", &io::json(&lifted))?;
    let summary = json!({
        "legendrian_residual": legendrian_residual(&lifted),
        "relation_residual": lifted.relation_residual(),
        "utp": utp,
        "utp_max": utp.max(),
    });
    o.finish("lift", &json!({ "args": a, "psi": psi }), summary)
}
