//! Null geodesics through conformal infinity, refocusing and the scattering map.

use std::cell::Cell;

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions, OdeStats};
use crate::sphere::{Chart, MobiusMap, SpherePoint};
use crate::weyl::{WPoint, WeylChartStructure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterOptions {
    pub ode: OdeOptions,
    /// Recentre the chart once `|w|` exceeds this radius.
    pub switch_radius: f64,
    /// Finite-difference step of the scattering Jacobian, in boundary chart coordinates.
    pub fd_step: f64,
    /// Directions per refocusing evaluation inside the Jacobian.
    pub jacobian_directions: usize,
    /// Samples with larger dispersion are flagged as failed.
    pub dispersion_tol: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions { rtol: 1e-10, atol: 1e-12, initial_step: 1e-3, max_step: 0.05, max_steps: 20_000 },
            switch_radius: 2.0,
            fd_step: 1e-4,
            jacobian_directions: 4,
            dispersion_tol: 1e-4,
        }
    }
}

/// Geodesic state `(T, w, dw/dT)`; `T` is the curve parameter in the compactified chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNode {
    pub t: f64,
    pub chart: Chart,
    pub w: C,
    pub wdot: C,
}

impl PathNode {
    pub fn point(&self) -> SpherePoint {
        self.chart.to_point(self.w)
    }
}

#[derive(Debug, Clone)]
pub struct NullGeodesic {
    pub p: SpherePoint,
    /// Endpoint extrapolated to `u = 0` from the collar stops.
    pub q: SpherePoint,
    /// Endpoint reached by integrating onto the boundary slice itself.
    pub q_direct: SpherePoint,
    pub extrapolation_error: f64,
    /// Largest normalized `|g(v, v)|` seen before reprojection.
    pub max_null_drift: f64,
    pub path: Vec<PathNode>,
    /// Derivative of the initial velocity with respect to the direction angle.
    pub initial_variation: C,
    pub stats: OdeStats,
}

fn vel3(wdot: C) -> Vector3<f64> {
    Vector3::new(1.0, wdot.re, wdot.im)
}

/// `d^2 w / dT^2` from the geodesic equation with `T` as parameter:
/// `x''^k = -Gamma^k_ij x'^i x'^j + Gamma^0_ij x'^i x'^j x'^k`.
fn acceleration(w: &dyn WeylChartStructure, node: &PathNode) -> Result<C> {
    let p = WPoint::new(node.chart, node.t, node.w);
    let conn = crate::weyl::connection::connection_with(w, &p, &w.geodesic_alpha(&p))?;
    let v = vel3(node.wdot);
    let g = conn.contract(&v, &v);
    Ok(C::new(-g[1] + g[0] * v[1], -g[2] + g[0] * v[2]))
}

fn null_form(w: &dyn WeylChartStructure, node: &PathNode) -> f64 {
    let g = w.metric(&WPoint::new(node.chart, node.t, node.w));
    let v = vel3(node.wdot);
    v.dot(&(g * v))
}

/// Scales the spatial velocity so that `g(v, v) = 0`; returns the normalized drift before.
fn reproject(w: &dyn WeylChartStructure, node: &mut PathNode) -> f64 {
    let g = w.metric(&WPoint::new(node.chart, node.t, node.w));
    let s = Vector2::new(node.wdot.re, node.wdot.im);
    let b = g[(0, 1)] * s[0] + g[(0, 2)] * s[1];
    let c = s.dot(&(g.fixed_view::<2, 2>(1, 1) * s));
    let drift = (g[(0, 0)] + 2.0 * b + c).abs() / (g[(0, 0)].abs() + c);
    let disc = b * b - g[(0, 0)] * c;
    if c > 0.0 && disc >= 0.0 {
        node.wdot *= (-b + disc.sqrt()) / c;
    }
    drift
}

fn node_from(chart: Chart, t: f64, y: &[f64]) -> PathNode {
    PathNode { t, chart, w: C::new(y[0], y[1]), wdot: C::new(y[2], y[3]) }
}

/// Moves the state to the chart centred at the current point when it strays from the centre.
/// Variations `(dw, dwdot)` in `y[4..8]` are carried along.
fn maybe_recentre(chart: &Cell<Chart>, t: f64, y: &mut [f64], radius: f64) {
    let node = node_from(chart.get(), t, y);
    if node.w.norm() <= radius {
        return;
    }
    let to = Chart::centered_at(node.point());
    let m = MobiusMap::chart_transition(&chart.get(), &to);
    let (d1, d2) = m.derivatives(node.w);
    let w = m.apply_affine(node.w);
    let wdot = d1 * node.wdot;
    y[..4].copy_from_slice(&[w.re, w.im, wdot.re, wdot.im]);
    if y.len() >= 8 {
        let dw = C::new(y[4], y[5]);
        let dwdot = C::new(y[6], y[7]);
        let (nw, nd) = (d1 * dw, d2 * node.wdot * dw + d1 * dwdot);
        y[4..8].copy_from_slice(&[nw.re, nw.im, nd.re, nd.im]);
    }
    chart.set(to);
}

/// Initial null velocity at `p` on the past boundary for the angle `theta`, measured in a
/// metric-orthonormal, positively oriented spatial frame of the chart centred at `p`.
fn initial_velocity(w: &dyn WeylChartStructure, p: &SpherePoint, theta: f64) -> PathNode {
    let chart = Chart::centered_at(*p);
    let t0 = w.boundary_times().0;
    let g = w.metric(&WPoint::new(chart, t0, C::new(0.0, 0.0)));
    let e1 = Vector2::new(1.0 / g[(1, 1)].sqrt(), 0.0);
    let raw = Vector2::new(0.0, 1.0);
    let gs = g.fixed_view::<2, 2>(1, 1).into_owned();
    let proj = raw - e1 * e1.dot(&(gs * raw));
    let e2 = proj / proj.dot(&(gs * proj)).sqrt();
    let d = e1 * theta.cos() + e2 * theta.sin();
    let mut node = PathNode { t: t0, chart, w: C::new(0.0, 0.0), wdot: C::new(d[0], d[1]) };
    reproject(w, &mut node);
    node
}

fn lagrange_at_zero(u: [f64; 3], x: [Vector3<f64>; 3]) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    for k in 0..3 {
        let mut l = 1.0;
        for j in 0..3 {
            if j != k {
                l *= -u[j] / (u[k] - u[j]);
            }
        }
        out += x[k] * l;
    }
    out
}

fn run_segments(
    w: &dyn WeylChartStructure,
    start: PathNode,
    stops: &[f64],
    opts: &ScatterOptions,
    path: &mut Vec<PathNode>,
    drift: &mut f64,
    stats: &mut OdeStats,
) -> Result<Vec<PathNode>> {
    let chart = Cell::new(start.chart);
    let mut y = vec![start.w.re, start.w.im, start.wdot.re, start.wdot.im];
    let mut t = start.t;
    let mut out = Vec::new();
    path.push(start);
    for &stop in stops {
        let (y_new, s) = integrate(
            |time, y, dy| {
                let node = node_from(chart.get(), time, y);
                let a = acceleration(w, &node)?;
                dy.copy_from_slice(&[y[2], y[3], a.re, a.im]);
                Ok(())
            },
            t,
            &y,
            stop,
            &opts.ode,
            |time, y| {
                let mut node = node_from(chart.get(), time, y);
                *drift = drift.max(reproject(w, &mut node));
                y[2] = node.wdot.re;
                y[3] = node.wdot.im;
                maybe_recentre(&chart, time, y, opts.switch_radius);
                path.push(node_from(chart.get(), time, y));
                Ok(())
            },
        )
        .map_err(|e| match e {
            Error::StepBudgetExceeded(_) => Error::TrappedGeodesic(t),
            other => other,
        })?;
        stats.accepted += s.accepted;
        stats.rejected += s.rejected;
        stats.evaluations += s.evaluations;
        y = y_new;
        t = stop;
        out.push(node_from(chart.get(), t, &y));
    }
    Ok(out)
}

/// Integrates the null geodesic leaving `p` on the past boundary in direction `theta`.
pub fn integrate_null_geodesic(
    w: &dyn WeylChartStructure,
    p: &SpherePoint,
    theta: f64,
    opts: &ScatterOptions,
) -> Result<NullGeodesic> {
    let start = initial_velocity(w, p, theta);
    let h = 1e-6;
    let variation = (initial_velocity(w, p, theta + h).wdot - initial_velocity(w, p, theta - h).wdot) / (2.0 * h);
    let (_, t1) = w.boundary_times();
    let delta = w.collar();
    let stops = [t1 - 3.0 * delta, t1 - 2.0 * delta, t1 - delta, t1];
    let mut path = Vec::new();
    let mut drift: f64 = 0.0;
    let mut stats = OdeStats::default();
    let ends = run_segments(w, start, &stops, opts, &mut path, &mut drift, &mut stats)?;
    let u = [0, 1, 2].map(|k| w.defining_function(&WPoint::new(ends[k].chart, ends[k].t, ends[k].w)));
    let x = [0, 1, 2].map(|k| ends[k].point().to_r3());
    let q = SpherePoint::from_r3(&lagrange_at_zero(u, x));
    let q_direct = ends[3].point();
    Ok(NullGeodesic {
        p: *p,
        q,
        q_direct,
        extrapolation_error: q.distance(&q_direct),
        max_null_drift: drift,
        path,
        initial_variation: variation,
        stats,
    })
}

/// Integrates backwards from the final state of `geodesic` to the past boundary.
pub fn reverse_null_geodesic(
    w: &dyn WeylChartStructure,
    geodesic: &NullGeodesic,
    opts: &ScatterOptions,
) -> Result<SpherePoint> {
    let end = *geodesic.path.last().expect("non-empty path");
    let t0 = w.boundary_times().0;
    let mut path = Vec::new();
    let (mut drift, mut stats) = (0.0, OdeStats::default());
    let ends = run_segments(w, end, &[t0], opts, &mut path, &mut drift, &mut stats)?;
    Ok(ends[0].point())
}

#[derive(Debug, Clone, Serialize)]
pub struct RefocusReport {
    pub p: SpherePoint,
    pub mean_q: SpherePoint,
    pub dispersion: f64,
    pub endpoints: Vec<SpherePoint>,
    pub max_extrapolation_error: f64,
    pub max_null_drift: f64,
}

pub fn refocus_check(
    w: &dyn WeylChartStructure,
    p: &SpherePoint,
    n_directions: usize,
    opts: &ScatterOptions,
) -> Result<RefocusReport> {
    let geodesics: Vec<NullGeodesic> = (0..n_directions)
        .into_par_iter()
        .map(|k| integrate_null_geodesic(w, p, std::f64::consts::TAU * k as f64 / n_directions as f64, opts))
        .collect::<Result<_>>()?;
    let endpoints: Vec<SpherePoint> = geodesics.iter().map(|g| g.q).collect();
    let mean: Vector3<f64> = endpoints.iter().map(|q| q.to_r3()).sum();
    let mut dispersion: f64 = 0.0;
    for (i, a) in endpoints.iter().enumerate() {
        for b in &endpoints[i + 1..] {
            dispersion = dispersion.max(a.distance(b));
        }
    }
    Ok(RefocusReport {
        p: *p,
        mean_q: SpherePoint::from_r3(&mean),
        dispersion,
        endpoints,
        max_extrapolation_error: geodesics.iter().map(|g| g.extrapolation_error).fold(0.0, f64::max),
        max_null_drift: geodesics.iter().map(|g| g.max_null_drift).fold(0.0, f64::max),
    })
}

/// Real Jacobian of `p -> q` in the charts centred at `p` and `q`, and the sign of its determinant.
pub fn scattering_jacobian(
    w: &dyn WeylChartStructure,
    p: &SpherePoint,
    opts: &ScatterOptions,
) -> Result<(Matrix2<f64>, f64)> {
    let n = opts.jacobian_directions;
    let q0 = refocus_check(w, p, n, opts)?.mean_q;
    let (cp, cq) = (Chart::centered_at(*p), Chart::centered_at(q0));
    let h = opts.fd_step;
    let image = |c: C| -> Result<C> {
        let q = refocus_check(w, &cp.to_point(c), n, opts)?.mean_q;
        cq.coordinate(&q).ok_or_else(|| Error::ChartPole("scattering image at chart pole".into()))
    };
    let dx = (image(C::new(h, 0.0))? - image(C::new(-h, 0.0))?) / (2.0 * h);
    let dy = (image(C::new(0.0, h))? - image(C::new(0.0, -h))?) / (2.0 * h);
    let m = Matrix2::new(dx.re, dy.re, dx.im, dy.im);
    Ok((m, m.determinant().signum()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self { n_theta: n, n_phi: n }
    }

    /// Cell-centred points in polar angle, uniform in azimuth.
    pub fn points(&self) -> Vec<SpherePoint> {
        let mut out = Vec::with_capacity(self.n_theta * self.n_phi);
        for i in 0..self.n_theta {
            let theta = std::f64::consts::PI * (i as f64 + 0.5) / self.n_theta as f64;
            for j in 0..self.n_phi {
                out.push(SpherePoint::from_spherical(theta, std::f64::consts::TAU * j as f64 / self.n_phi as f64));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringSample {
    pub p: SpherePoint,
    pub q: SpherePoint,
    pub dispersion: f64,
    pub jacobian_det: Option<f64>,
    pub ok: bool,
}

/// Scattering map sampled on a grid; each sample refocuses `n_directions` geodesics.
pub fn scattering_map(
    w: &dyn WeylChartStructure,
    grid: &GridSpec,
    n_directions: usize,
    with_jacobian: bool,
    opts: &ScatterOptions,
) -> Result<Vec<ScatteringSample>> {
    grid.points()
        .par_iter()
        .map(|p| {
            let r = refocus_check(w, p, n_directions, opts)?;
            let jacobian_det =
                if with_jacobian { Some(scattering_jacobian(w, p, opts)?.0.determinant()) } else { None };
            let ok = r.dispersion <= opts.dispersion_tol && jacobian_det.is_none_or(|d| d < 0.0);
            Ok(ScatteringSample { p: *p, q: r.mean_q, dispersion: r.dispersion, jacobian_det, ok })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiReport {
    /// Parameter `T` of the first sign change of the screen component after the start.
    pub sign_change: Option<f64>,
    pub sign_changes: usize,
    /// Sign at the future end relative to the start: of `a` itself, or of `a'` when `a`
    /// vanishes there.
    pub end_sign: i32,
    /// The screen field vanishes at the future end, i.e. the end is conjugate to the start.
    pub refocused: bool,
    pub max_abs: f64,
}

fn screen_component(w: &dyn WeylChartStructure, node: &PathNode, dw: C, dwdot: C) -> (f64, f64) {
    let g = w.metric(&WPoint::new(node.chart, node.t, node.w));
    let gs = g.fixed_view::<2, 2>(1, 1).into_owned();
    let u = Vector2::new(node.wdot.re, node.wdot.im);
    let ginv = gs.try_inverse().unwrap_or_else(Matrix2::identity);
    let mut n = ginv * Vector2::new(-u[1], u[0]);
    n /= n.dot(&(gs * n)).sqrt();
    let gn = gs * n;
    (gn.dot(&Vector2::new(dw.re, dw.im)), gn.dot(&Vector2::new(dwdot.re, dwdot.im)))
}

/// Transports the Jacobi field that vanishes at the start with unit angular derivative and
/// tracks the sign structure of its screen component.
pub fn jacobi_transport(
    w: &dyn WeylChartStructure,
    geodesic: &NullGeodesic,
    opts: &ScatterOptions,
) -> Result<JacobiReport> {
    let start = geodesic.path[0];
    let (_, t1) = w.boundary_times();
    let chart = Cell::new(start.chart);
    let dv = geodesic.initial_variation;
    let y0 = [start.w.re, start.w.im, start.wdot.re, start.wdot.im, 0.0, 0.0, dv.re, dv.im];
    let base_rhs = |chart: Chart, t: f64, y: &[f64]| -> Result<[f64; 4]> {
        let a = acceleration(w, &node_from(chart, t, y))?;
        Ok([y[2], y[3], a.re, a.im])
    };
    // Linearized right-hand side by a central directional difference.
    let directional = |chart: Chart, t: f64, y: &[f64]| -> Result<[f64; 4]> {
        let d = &y[4..8];
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok([0.0; 4]);
        }
        let eps = 1e-5 / norm;
        let shift = |s: f64| -> Vec<f64> { (0..4).map(|i| y[i] + s * eps * d[i]).collect() };
        let (fp, fm) = (base_rhs(chart, t, &shift(1.0))?, base_rhs(chart, t, &shift(-1.0))?);
        Ok(std::array::from_fn(|i| (fp[i] - fm[i]) / (2.0 * eps)))
    };
    let mut samples: Vec<(f64, f64, f64)> = Vec::new();
    integrate(
        |t, y, dy| {
            let c = chart.get();
            let f0 = base_rhs(c, t, y)?;
            let fv = directional(c, t, y)?;
            dy[..4].copy_from_slice(&f0);
            dy[4..].copy_from_slice(&fv);
            Ok(())
        },
        start.t,
        &y0,
        t1,
        &opts.ode,
        |t, y| {
            let c = chart.get();
            let mut node = node_from(c, t, y);
            reproject(w, &mut node);
            y[2] = node.wdot.re;
            y[3] = node.wdot.im;
            // Keep the variation tangent to the null constraint.
            let nf = |z: &[f64]| null_form(w, &node_from(c, t, z));
            let d: Vec<f64> = y[4..8].to_vec();
            let eps = 1e-6;
            let plus: Vec<f64> = (0..4).map(|i| y[i] + eps * d[i]).collect();
            let minus: Vec<f64> = (0..4).map(|i| y[i] - eps * d[i]).collect();
            let dn = (nf(&plus) - nf(&minus)) / (2.0 * eps);
            let mut a = y[..4].to_vec();
            let mut b = y[..4].to_vec();
            a[2] += eps * y[2];
            a[3] += eps * y[3];
            b[2] -= eps * y[2];
            b[3] -= eps * y[3];
            let en = (nf(&a) - nf(&b)) / (2.0 * eps);
            if en.abs() > 1e-300 {
                let mu = -dn / en;
                y[6] += mu * y[2];
                y[7] += mu * y[3];
            }
            maybe_recentre(&chart, t, y, opts.switch_radius);
            let node = node_from(chart.get(), t, y);
            let (s, sd) = screen_component(w, &node, C::new(y[4], y[5]), C::new(y[6], y[7]));
            samples.push((t, s, sd));
            Ok(())
        },
    )?;
    let max_abs = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let zero = 1e-6 * max_abs;
    let mut sign: f64 = 1.0;
    let mut changes = Vec::new();
    let mut prev: (f64, f64) = (start.t, 0.0);
    let (last_t, last_a, last_ad) = *samples.last().expect("accepted steps");
    let end_zero = last_a.abs() <= zero;
    let interior = if end_zero { &samples[..samples.len() - 1] } else { &samples[..] };
    for &(t, a, _) in interior {
        if a.abs() > zero {
            if a.signum() != sign {
                changes.push(prev.0 + (t - prev.0) * prev.1.abs() / (prev.1.abs() + a.abs()));
                sign = a.signum();
            }
            prev = (t, a);
        }
    }
    let end_sign = if end_zero {
        changes.push(last_t - last_a / last_ad);
        last_ad.signum()
    } else {
        sign
    };
    if changes.len() > 1 {
        return Err(Error::MultipleSignChanges(changes.len()));
    }
    Ok(JacobiReport {
        sign_change: changes.first().copied(),
        sign_changes: changes.len(),
        end_sign: end_sign as i32,
        refocused: end_zero && changes.len() == 1,
        max_abs,
    })
}
