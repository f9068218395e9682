//! Bordered Gauss-Newton solver and pseudo-arclength continuation for welded disks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use serde::Serialize;

use super::area::omega_area;
use super::constraints::{WeldConstraints, ANCHORS};
use super::disk::{HolomorphicDisk, POLE_MARGIN};
use super::residual::Collocation;
use super::spectral::{horner, horner_derivative, nodes};
use crate::error::{Error, Result};
use crate::sphere::{Chart, MobiusMap, SphereDiffeo, SpherePoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Acceptance bound on the boundary residual and on every constraint.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_degree: usize,
    pub tail_tolerance: f64,
    /// Relative singular value below which the bordered system counts as rank deficient.
    pub rank_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 40, max_degree: 256, tail_tolerance: 1e-8, rank_tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub disk: HolomorphicDisk,
    /// Norm of the full bordered residual at each iterate.
    pub history: Vec<f64>,
    pub constraint_error: f64,
    pub parameter: f64,
    /// Singular values of the bordered Jacobian at the solution, descending.
    pub singular_values: Vec<f64>,
}

pub(crate) fn to_real(a: &[C]) -> Vec<f64> {
    a.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub(crate) fn to_complex(x: &[f64]) -> Vec<C> {
    x.chunks(2).map(|p| C::new(p[0], p[1])).collect()
}

pub(crate) struct Evaluated {
    pub residual: Vec<f64>,
    pub anchors: [f64; ANCHORS],
    pub parameter: f64,
    pub f2: Vec<C>,
    /// Residual rows over the real unknowns.
    pub jac_residual: Option<DMatrix<f64>>,
    /// Anchor rows followed by the parameter row.
    pub jac_constraints: Option<DMatrix<f64>>,
    /// Second-factor coefficients (interleaved real rows) over the real unknowns.
    pub jac_f2: Option<DMatrix<f64>>,
}

/// Welding equations in fixed working charts at a fixed truncation degree.
pub(crate) struct System<'a> {
    pub psi: &'a SphereDiffeo,
    pub sel: &'a WeldConstraints,
    pub chart1: Chart,
    pub chart2: Chart,
    pub col: Collocation,
    pub reference: f64,
}

impl<'a> System<'a> {
    pub fn new(psi: &'a SphereDiffeo, sel: &'a WeldConstraints, disk: &HolomorphicDisk, reference: f64) -> Self {
        Self { psi, sel, chart1: disk.chart1, chart2: disk.chart2, col: Collocation::new(disk.n), reference }
    }

    pub fn unknowns(&self) -> usize {
        2 * (self.col.n + 1)
    }

    pub fn eval(&self, x: &[f64], with_jac: bool) -> Result<Evaluated> {
        let n = self.col.n;
        let a = to_complex(x);
        let b = self.col.boundary(self.psi, &a, &self.chart1, &self.chart2, with_jac)?;
        let f2 = b.modes[..=n].to_vec();
        let residual = self.col.residual_rows(&b.modes);
        let (anchors, parameter) = self.sel.rows(&a, &f2, &self.chart1, &self.chart2, self.reference)?;
        let mut out = Evaluated {
            residual,
            anchors,
            parameter,
            f2: f2.clone(),
            jac_residual: None,
            jac_constraints: None,
            jac_f2: None,
        };
        if let Some((ah, bh)) = &b.derivative {
            let jf = self.col.second_factor_jacobian(ah, bh);
            let jr = self.col.residual_jacobian(ah, bh);
            let (da, df) = self.sel.jacobians(&a, &f2, &self.chart1, &self.chart2, self.reference)?;
            out.jac_constraints = Some(da + df * &jf);
            out.jac_residual = Some(jr);
            out.jac_f2 = Some(jf);
        }
        Ok(out)
    }
}

/// How the family parameter is treated by the corrector.
#[derive(Debug, Clone)]
pub(crate) enum Mode {
    /// Parameter held at a value; unknowns are the first-factor coefficients.
    Fixed(f64),
    /// Parameter is an extra unknown; the step is orthogonal to `tangent` through `predictor`.
    Arclength { tangent: DVector<f64>, predictor: DVector<f64> },
}

pub(crate) struct Corrected {
    pub y: DVector<f64>,
    pub eval: Evaluated,
    pub history: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub converged: bool,
}

fn bordered(
    sys: &System,
    y: &[f64],
    mode: &Mode,
    with_jac: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>, Evaluated)> {
    let nx = sys.unknowns();
    let e = sys.eval(&y[..nx], with_jac)?;
    let nr = e.residual.len();
    let arclength = matches!(mode, Mode::Arclength { .. });
    let s = match mode {
        Mode::Fixed(s) => *s,
        Mode::Arclength { .. } => y[nx],
    };
    let rows = nr + ANCHORS + 1 + usize::from(arclength);
    let mut f = DVector::zeros(rows);
    f.rows_mut(0, nr).copy_from_slice(&e.residual);
    f.rows_mut(nr, ANCHORS).copy_from_slice(&e.anchors);
    f[nr + ANCHORS] = e.parameter - s;
    if let Mode::Arclength { tangent, predictor } = mode {
        f[rows - 1] = tangent.dot(&(DVector::from_column_slice(y) - predictor));
    }
    let jac = if with_jac {
        let cols = nx + usize::from(arclength);
        let mut j = DMatrix::zeros(rows, cols);
        j.view_mut((0, 0), (nr, nx)).copy_from(e.jac_residual.as_ref().expect("jacobian"));
        j.view_mut((nr, 0), (ANCHORS + 1, nx)).copy_from(e.jac_constraints.as_ref().expect("jacobian"));
        if let Mode::Arclength { tangent, .. } = mode {
            j[(nr + ANCHORS, nx)] = -1.0;
            j.row_mut(rows - 1).copy_from(&tangent.transpose());
        }
        Some(j)
    } else {
        None
    };
    Ok((f, jac, e))
}

fn sorted_singular_values(j: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = j.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Damped Gauss-Newton on the bordered system with a rank monitor.
pub(crate) fn correct(
    sys: &System,
    y0: DVector<f64>,
    mode: &Mode,
    opts: &SolverOptions,
    max_iter: usize,
) -> Result<Corrected> {
    let mut y = y0;
    let mut history = Vec::new();
    let (mut f, mut jac, mut eval) = bordered(sys, y.as_slice(), mode, true)?;
    loop {
        let norm = f.norm();
        history.push(norm);
        let j = jac.take().expect("jacobian");
        let svd = j.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let deficient = svd.singular_values.iter().filter(|s| **s <= opts.rank_tolerance * smax).count();
        if deficient > 0 {
            return Err(Error::RankDeficient { expected: 0, found: deficient });
        }
        if norm < 1e-14 || history.len() > max_iter {
            let singular_values = sorted_singular_values(&j);
            return Ok(finish(sys, y, eval, history, singular_values, opts, mode));
        }
        let step = svd.solve(&f, 0.0).map_err(|_| Error::NewtonStall { iterations: history.len(), residual: norm })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..8 {
            let trial = &y - &step * lambda;
            if let Ok((ft, _, _)) = bordered(sys, trial.as_slice(), mode, false) {
                if ft.norm() < norm || ft.norm() < 1e-14 {
                    accepted = Some(trial);
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some(next) = accepted else {
            let singular_values = sorted_singular_values(&j);
            return Ok(finish(sys, y, eval, history, singular_values, opts, mode));
        };
        let small = (&next - &y).norm() < 1e-15 * (1.0 + y.norm());
        y = next;
        (f, jac, eval) = bordered(sys, y.as_slice(), mode, true)?;
        if small {
            history.push(f.norm());
            let singular_values = sorted_singular_values(jac.as_ref().expect("jacobian"));
            return Ok(finish(sys, y, eval, history, singular_values, opts, mode));
        }
    }
}

fn finish(
    sys: &System,
    y: DVector<f64>,
    eval: Evaluated,
    history: Vec<f64>,
    singular_values: Vec<f64>,
    opts: &SolverOptions,
    mode: &Mode,
) -> Corrected {
    let nx = sys.unknowns();
    let s = match mode {
        Mode::Fixed(s) => *s,
        Mode::Arclength { .. } => y[nx],
    };
    let res = eval.residual.iter().map(|r| r * r).sum::<f64>().sqrt();
    let cons = eval.anchors.iter().map(|r| r.abs()).fold((eval.parameter - s).abs(), f64::max);
    let converged = res <= opts.tolerance && cons <= opts.tolerance;
    Corrected { y, eval, history, singular_values, converged }
}

pub(crate) fn disk_from(sys: &System, y: &DVector<f64>, eval: &Evaluated) -> HolomorphicDisk {
    let nx = sys.unknowns();
    HolomorphicDisk {
        n: sys.col.n,
        f1: to_complex(&y.as_slice()[..nx]),
        f2: eval.f2.clone(),
        chart1: sys.chart1,
        chart2: sys.chart2,
        residual: eval.residual.iter().map(|r| r * r).sum::<f64>().sqrt(),
    }
}

/// Family parameter of `disk` with the second factor induced by `psi`.
pub fn family_parameter(
    psi: &SphereDiffeo,
    constraints: &WeldConstraints,
    disk: &HolomorphicDisk,
    reference: f64,
) -> Result<f64> {
    let sys = System::new(psi, constraints, disk, reference);
    Ok(sys.eval(&to_real(&disk.f1), false)?.parameter)
}

/// Solves with the parameter held at `s`, doubling the degree while the spectral tail or the
/// residual floor demands it.
pub(crate) fn solve_fixed(
    psi: &SphereDiffeo,
    sel: &WeldConstraints,
    seed: &HolomorphicDisk,
    s: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let mut disk = seed.clone();
    loop {
        let sys = System::new(psi, sel, &disk, s);
        let c = correct(&sys, DVector::from_vec(to_real(&disk.f1)), &Mode::Fixed(s), opts, opts.max_iterations)?;
        let solved = disk_from(&sys, &c.y, &c.eval);
        let resolved = solved.tail() <= opts.tail_tolerance;
        if c.converged && resolved {
            let constraint_error = c.eval.anchors.iter().map(|r| r.abs()).fold((c.eval.parameter - s).abs(), f64::max);
            return Ok(SolveReport {
                disk: solved,
                history: c.history,
                constraint_error,
                parameter: c.eval.parameter,
                singular_values: c.singular_values,
            });
        }
        if disk.n * 2 > opts.max_degree {
            return Err(Error::NewtonStall {
                iterations: c.history.len(),
                residual: *c.history.last().unwrap_or(&f64::NAN),
            });
        }
        disk = solved.with_degree(disk.n * 2);
    }
}

/// Solves the welding problem for `constraints`, holding the family parameter at the value fixed
/// by the selector or, failing that, at the value of `seed`.
pub fn solve_disk(
    psi: &SphereDiffeo,
    constraints: &WeldConstraints,
    seed: &HolomorphicDisk,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    constraints.validate()?;
    let s = match constraints.fixed_parameter() {
        Some(s) => s,
        None => {
            let raw = family_parameter(psi, constraints, seed, 0.0)?;
            family_parameter(psi, constraints, seed, raw)?
        }
    };
    solve_fixed(psi, constraints, seed, s, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
    /// Working charts are re-chosen once a boundary image comes this close to a chart pole.
    pub rechart_clearance: f64,
    /// ... or once the truncation degree has grown past this.
    pub recenter_degree: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            min_step: 1e-4,
            max_step: 1.0,
            max_points: 2000,
            rechart_clearance: 0.6,
            recenter_degree: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyPoint {
    pub disk: HolomorphicDisk,
    pub parameter: f64,
    pub omega: f64,
}

/// Accepted continuation points; `hits[i]` indexes the point placed exactly on target `i`.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyPath {
    pub points: Vec<FamilyPoint>,
    pub hits: Vec<usize>,
}

fn tangent(sys: &System, x: &[f64], dir: f64) -> Result<DVector<f64>> {
    let e = sys.eval(x, true)?;
    let nx = sys.unknowns();
    let nr = e.residual.len();
    let mut j = DMatrix::zeros(nr + ANCHORS + 1, nx + 1);
    j.view_mut((0, 0), (nr, nx)).copy_from(e.jac_residual.as_ref().expect("jacobian"));
    j.view_mut((nr, 0), (ANCHORS + 1, nx)).copy_from(e.jac_constraints.as_ref().expect("jacobian"));
    j[(nr + ANCHORS, nx)] = -1.0;
    let svd = j.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*a].total_cmp(&svd.singular_values[*b]));
    let smax = svd.singular_values.max();
    if svd.singular_values[order[1]] <= 1e-10 * smax {
        return Err(Error::RankDeficient { expected: 1, found: 2 });
    }
    let mut t = v_t.row(order[0]).transpose();
    if t[nx] * dir < 0.0 {
        t = -t;
    }
    Ok(t)
}

fn winding(curve: &[C], w: C) -> i64 {
    let mut total = 0.0;
    for i in 0..curve.len() {
        let (a, b) = (curve[i] - w, curve[(i + 1) % curve.len()] - w);
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).round() as i64
}

/// A chart centred inside the image of the disk factor with its pole outside, chosen among
/// the two directions of the boundary mean.
pub(crate) fn auto_chart(coeffs: &[C], chart: &Chart) -> Option<Chart> {
    let curve: Vec<C> = nodes(512).iter().map(|z| horner(coeffs, *z)).collect();
    let pts: Vec<nalgebra::Vector3<f64>> = curve.iter().map(|c| chart.to_point(*c).to_r3()).collect();
    // arclength-weighted, so that crowded parametrizations still find the circle centre
    let k = pts.len();
    let (mut sum, mut length) = (nalgebra::Vector3::zeros(), 0.0);
    for j in 0..k {
        let w = (pts[(j + 1) % k] - pts[(j + k - 1) % k]).norm() / 2.0;
        sum += pts[j] * w;
        length += w;
    }
    let mean = sum / length;
    if mean.norm() < 1e-3 {
        return None;
    }
    let inside = |p: &SpherePoint| chart.coordinate(p).is_some_and(|c| winding(&curve, c) != 0);
    for v in [mean, -mean] {
        let p = SpherePoint::from_r3(&v);
        if inside(&p) && !inside(&p.antipodal()) {
            return Some(Chart::centered_at(p));
        }
    }
    None
}

/// Chordal clearance of a boundary image from the pole of `target`.
fn clearance_in(coeffs: &[C], chart: &Chart, target: &Chart) -> f64 {
    let pole = target.pole();
    nodes(256).iter().map(|z| chart.to_point(horner(coeffs, *z)).distance(&pole)).fold(f64::INFINITY, f64::min)
}

/// Disk automorphism fixing `1` and sending `0` to `alpha`.
fn automorphism_fixing_one(alpha: C) -> MobiusMap {
    let one = C::new(1.0, 0.0);
    let k = (one + alpha.conj()) / (one + alpha);
    MobiusMap::normalized(k, k * alpha, alpha.conj(), one)
}

/// Precomposes so that `F1(0)` sits at the centre of the first working chart.
fn regauge_to_center(disk: &HolomorphicDisk) -> Result<HolomorphicDisk> {
    let mut alpha = C::new(0.0, 0.0);
    let mut value = horner(&disk.f1, alpha).norm();
    for _ in 0..100 {
        let step = horner(&disk.f1, alpha) / horner_derivative(&disk.f1, alpha);
        let mut lambda = 1.0;
        // damped so that the iterate stays inside the disk and the value decreases
        while lambda > 1e-4 {
            let trial = alpha - step * lambda;
            let v = horner(&disk.f1, trial).norm();
            if trial.norm() < 0.999 && v < value {
                alpha = trial;
                value = v;
                break;
            }
            lambda *= 0.5;
        }
        if value < 1e-14 || lambda <= 1e-4 {
            break;
        }
    }
    if value > 1e-10 {
        return Err(Error::ChartPole("chart centre outside the first-factor image".into()));
    }
    disk.reparametrized(&automorphism_fixing_one(alpha))
}

/// Truncates while the discarded upper half of both factors is negligible.
fn shrink(disk: &HolomorphicDisk, floor: usize) -> HolomorphicDisk {
    let mut d = disk.clone();
    let upper = |c: &[C], half: usize| {
        let max = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        c[half + 1..].iter().map(|z| z.norm()).fold(0.0, f64::max) / max
    };
    while d.n / 2 >= floor && upper(&d.f1, d.n / 2).max(upper(&d.f2, d.n / 2)) < 1e-14 {
        d = d.with_degree(d.n / 2);
    }
    d
}

/// Chart maintenance after an accepted step: new working charts when a boundary image nears
/// a chart pole, or when the expansion has grown long because the charts sit off centre.
fn maintain(
    psi: &SphereDiffeo,
    sel: &WeldConstraints,
    disk: &HolomorphicDisk,
    s: f64,
    copts: &ContinuationOptions,
    sopts: &SolverOptions,
) -> HolomorphicDisk {
    let (d1, d2) = disk.pole_clearance();
    let crowded = disk.n > copts.recenter_degree;
    if d1.min(d2) >= copts.rechart_clearance && !crowded {
        return disk.clone();
    }
    // a new chart must clear the boundary image markedly better than the current one, less so
    // once the image crowds the pole margin
    let gain = |d: f64| if d < 2.0 * POLE_MARGIN { 1.02 } else { 1.25 };
    let pick = |coeffs: &[C], chart: &Chart, d: f64| match auto_chart(coeffs, chart) {
        Some(c) if crowded || (d < copts.rechart_clearance && clearance_in(coeffs, chart, &c) > gain(d) * d) => c,
        _ => *chart,
    };
    let c1 = pick(&disk.f1, &disk.chart1, d1);
    let c2 = pick(&disk.f2, &disk.chart2, d2);
    if c1 == disk.chart1 && c2 == disk.chart2 {
        return disk.clone();
    }
    let attempt = || -> Result<HolomorphicDisk> {
        let mut moved = disk.rechart(c1, c2)?;
        if matches!(sel, WeldConstraints::BoundaryContact { .. }) && c1 != disk.chart1 {
            moved = match regauge_to_center(&moved) {
                Ok(m) => m,
                Err(_) => disk.rechart(disk.chart1, c2)?,
            };
        }
        let solved = solve_fixed(psi, sel, &shrink(&moved, 16), s, sopts)?.disk;
        Ok(shrink(&solved, 16))
    };
    // the current disk is a converged member, so a failed chart change just keeps it
    match attempt() {
        Ok(d) if !crowded || d.n < disk.n || d1.min(d2) < copts.rechart_clearance => d,
        _ => disk.clone(),
    }
}

/// Pseudo-arclength continuation of the constrained family from `seed` through each target
/// parameter value in turn.
pub fn continue_family(
    psi: &SphereDiffeo,
    constraints: &WeldConstraints,
    seed: &HolomorphicDisk,
    targets: &[f64],
    copts: &ContinuationOptions,
    sopts: &SolverOptions,
) -> Result<FamilyPath> {
    constraints.validate()?;
    let raw = family_parameter(psi, constraints, seed, 0.0)?;
    let s0 = family_parameter(psi, constraints, seed, raw)?;
    let start = solve_fixed(psi, constraints, seed, s0, sopts)?;
    let mut disk = start.disk;
    let mut s = start.parameter;
    let mut points = vec![FamilyPoint { omega: omega_area(&disk), disk: disk.clone(), parameter: s }];
    let mut hits = Vec::new();
    let mut h = copts.initial_step;
    let corrector = SolverOptions { max_iterations: 12, ..*sopts };
    for &target in targets {
        let dir = if target >= s { 1.0 } else { -1.0 };
        while (target - s) * dir > 1e-14 {
            if points.len() >= copts.max_points {
                return Err(Error::StepCollapse { parameter: s });
            }
            let sys = System::new(psi, constraints, &disk, s);
            let x = to_real(&disk.f1);
            let nx = x.len();
            let t = tangent(&sys, &x, dir)?;
            let mut y = DVector::from_vec(x);
            y = y.push(s);
            let reach = (target - s) / t[nx];
            let (mode, y_pred) = if reach <= h {
                let pred = &y + &t * reach;
                (Mode::Fixed(target), pred.rows(0, nx).into_owned())
            } else {
                let pred = &y + &t * h;
                (Mode::Arclength { tangent: t.clone(), predictor: pred.clone() }, pred)
            };
            let outcome = correct(&sys, y_pred, &mode, &corrector, corrector.max_iterations);
            let mut truncated = false;
            let accepted = match outcome {
                Ok(c) if c.converged => {
                    let new_s = match mode {
                        Mode::Fixed(v) => v,
                        Mode::Arclength { .. } => c.y[nx],
                    };
                    let dy = (c.y.rows(0, nx) - y.rows(0, nx)).norm() + (new_s - s).abs();
                    ((new_s - s) * dir > 0.0 && dy <= 3.0 * h)
                        .then(|| (disk_from(&sys, &c.y, &c.eval), new_s, c.history.len()))
                }
                Ok(c) => {
                    // a stagnating corrector on a smooth branch means the degree is too low
                    let h = &c.history;
                    truncated = h.len() >= 2 && h[h.len() - 1] > 0.3 * h[h.len() - 2] && h[h.len() - 1] < 1e-4;
                    None
                }
                Err(_) => None,
            };
            if truncated && disk.n * 2 <= sopts.max_degree {
                disk = solve_fixed(psi, constraints, &disk.with_degree(disk.n * 2), s, sopts)?.disk;
                continue;
            }
            match accepted {
                Some((d, new_s, iters)) => {
                    s = new_s;
                    disk = maintain(psi, constraints, &d, s, copts, sopts);
                    if disk.tail() > sopts.tail_tolerance && disk.n * 2 <= sopts.max_degree {
                        disk = solve_fixed(psi, constraints, &disk.with_degree(disk.n * 2), s, sopts)?.disk;
                    }
                    points.push(FamilyPoint { omega: omega_area(&disk), disk: disk.clone(), parameter: s });
                    if iters <= 4 {
                        h = (h * 1.5).min(copts.max_step);
                    }
                }
                None => {
                    h *= 0.5;
                    if h < copts.min_step {
                        return Err(Error::StepCollapse { parameter: s });
                    }
                }
            }
        }
        hits.push(points.len() - 1);
    }
    Ok(FamilyPath { points, hits })
}

/// Carries a solved disk along a path of maps `psi(lambda)`, `lambda` in `[0, 1]`, holding the
/// constraints and the family parameter of the seed.
pub fn continue_psi(
    path: &dyn Fn(f64) -> SphereDiffeo,
    constraints: &WeldConstraints,
    seed: &HolomorphicDisk,
    steps: usize,
    opts: &SolverOptions,
) -> Result<Vec<SolveReport>> {
    let psi0 = path(0.0);
    let s = match constraints.fixed_parameter() {
        Some(s) => s,
        None => {
            let raw = family_parameter(&psi0, constraints, seed, 0.0)?;
            family_parameter(&psi0, constraints, seed, raw)?
        }
    };
    let mut out = Vec::with_capacity(steps);
    let mut disk = seed.clone();
    let mut lambda = 0.0;
    let mut dl = 1.0 / steps.max(1) as f64;
    while lambda < 1.0 - 1e-15 {
        let next = (lambda + dl).min(1.0);
        match solve_fixed(&path(next), constraints, &disk, s, opts) {
            Ok(r) => {
                disk = r.disk.clone();
                lambda = next;
                out.push(r);
            }
            Err(e) => {
                dl *= 0.5;
                if dl < 1e-3 {
                    return Err(match e {
                        Error::NewtonStall { .. } => Error::StepCollapse { parameter: lambda },
                        other => other,
                    });
                }
            }
        }
    }
    Ok(out)
}
