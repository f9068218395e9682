//! Deterministic SVG plots: stereographic family curves and scattering arrow fields.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use miniweyl_core::scattering::ScatteringSample;
use miniweyl_core::sphere::{Chart, SpherePoint};
use miniweyl_core::Complex64 as C;
use serde::Serialize;

use crate::io::{CliError, CliResult};

const PANEL: f64 = 400.0;
const PAD: f64 = 20.0;
const TOUCH_RADIUS: f64 = 0.05;

/// Shape diagnostics of the plotted curves, in the stereographic plane of each panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveGeometry {
    /// Largest relative deviation of a curve from its least-squares circle.
    pub circle_fit_residual: f64,
    /// Number of intersecting segment pairs between distinct curves.
    pub crossings: usize,
}

/// Fitted centre and radius, plus the sup of `| |p - c| - r | / r`.
pub fn circle_fit(points: &[C]) -> Option<(C, f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    // algebraic fit x^2 + y^2 + D x + E y + F = 0 about the centroid
    let mean = points.iter().sum::<C>() / points.len() as f64;
    let (mut m, mut rhs) = ([[0.0; 3]; 3], [0.0; 3]);
    for p in points {
        let q = p - mean;
        let row = [q.re, q.im, 1.0];
        let b = -q.norm_sqr();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * b;
        }
    }
    let det3 = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-300 {
        return None;
    }
    let solve = |k: usize| {
        let mut a = m;
        for (r, row) in a.iter_mut().enumerate() {
            row[k] = rhs[r];
        }
        det3(&a) / d
    };
    let (dx, ey, f) = (solve(0), solve(1), solve(2));
    let center = mean + C::new(-dx / 2.0, -ey / 2.0);
    let r2 = (dx * dx + ey * ey) / 4.0 - f;
    if r2.is_nan() || r2 <= 0.0 {
        return None;
    }
    let r = r2.sqrt();
    let dev = points.iter().map(|p| ((p - center).norm() - r).abs() / r).fold(0.0, f64::max);
    Some((center, r, dev))
}

fn orient(a: C, b: C, c: C) -> f64 {
    (b - a).re * (c - a).im - (b - a).im * (c - a).re
}

fn segments_cross(a: C, b: C, c: C, d: C) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Intersecting segment pairs between distinct closed polylines, ignoring segments with an
/// endpoint inside the disk `touch` (a point all curves pass through).
pub fn count_crossings(curves: &[Vec<C>], touch: Option<(C, f64)>) -> usize {
    let near = |z: C| touch.is_some_and(|(c, r)| (z - c).norm() < r);
    let segs: Vec<Vec<(C, C)>> = curves
        .iter()
        .map(|c| (0..c.len()).map(|k| (c[k], c[(k + 1) % c.len()])).filter(|(a, b)| !near(*a) && !near(*b)).collect())
        .collect();
    let bbox = |s: &[(C, C)]| {
        s.iter().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |b, (p, q)| {
            (b.0.min(p.re.min(q.re)), b.1.min(p.im.min(q.im)), b.2.max(p.re.max(q.re)), b.3.max(p.im.max(q.im)))
        })
    };
    let mut count = 0;
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if segs[i].is_empty() {
                continue;
            }
            let (a, b) = (bbox(&segs[i]), bbox(&segs[j]));
            if a.2 < b.0 || b.2 < a.0 || a.3 < b.1 || b.3 < a.1 {
                continue;
            }
            for (p, q) in &segs[i] {
                for (r, s) in &segs[j] {
                    count += usize::from(segments_cross(*p, *q, *r, *s));
                }
            }
        }
    }
    count
}

/// Chart centred on the mean direction of all points: stereographic projection from its antipode.
fn view_chart(curves: &[Vec<SpherePoint>]) -> Chart {
    let sum = curves.iter().flatten().fold(nalgebra::Vector3::zeros(), |s, p| s + p.to_r3());
    if sum.norm() < 1e-9 {
        Chart::standard()
    } else {
        Chart::centered_at(SpherePoint::from_r3(&sum))
    }
}

fn project(chart: &Chart, curves: &[Vec<SpherePoint>]) -> CliResult<Vec<Vec<C>>> {
    curves
        .iter()
        .map(|c| {
            c.iter()
                .map(|p| chart.coordinate(p).filter(|z| z.norm() < 1e6))
                .collect::<Option<Vec<C>>>()
                .ok_or_else(|| CliError::Numeric(miniweyl_core::Error::ChartPole("curve passes the view pole".into())))
        })
        .collect()
}

struct Frame {
    center: C,
    scale: f64,
    offset: f64,
}

impl Frame {
    fn new(curves: &[Vec<C>], offset: f64) -> Self {
        let pts = curves.iter().flatten();
        let (mut lo, mut hi) = (C::new(f64::INFINITY, f64::INFINITY), C::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in pts {
            lo = C::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = C::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        Self { center: (lo + hi) / 2.0, scale: (PANEL - 2.0 * PAD) / span, offset }
    }

    fn map(&self, z: C) -> (f64, f64) {
        let d = (z - self.center) * self.scale;
        (self.offset + PANEL / 2.0 + d.re, PANEL / 2.0 - d.im)
    }
}

fn header(s: &mut String, width: f64, height: f64) {
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
}

/// Boundary curves of both factors of a family, one stereographic panel per factor.
///
/// `touch` gives, per factor, a point shared by all curves (the contact of a null family);
/// crossings are not counted within `TOUCH_RADIUS` of it.
pub fn family_svg(
    title: &str,
    factor1: &[Vec<SpherePoint>],
    factor2: &[Vec<SpherePoint>],
    touch: [Option<SpherePoint>; 2],
) -> CliResult<(String, [CurveGeometry; 2])> {
    if factor1.is_empty() || factor2.is_empty() || factor1.iter().chain(factor2).any(|c| c.len() < 3) {
        return Err(CliError::Config("family plot needs at least one curve of three or more points".into()));
    }
    let mut s = String::new();
    header(&mut s, 2.0 * PANEL, PANEL + 40.0);
    writeln!(s, r#"<text x="10" y="{}" font-family="monospace" font-size="12">{}</text>"#, PANEL + 16.0, escape(title))
        .unwrap();
    let mut geometry = [CurveGeometry { circle_fit_residual: 0.0, crossings: 0 }; 2];
    for (k, curves) in [factor1, factor2].into_iter().enumerate() {
        let chart = view_chart(curves);
        let planar = project(&chart, curves)?;
        let fit = planar.iter().map(|c| circle_fit(c).map_or(f64::INFINITY, |f| f.2)).fold(0.0, f64::max);
        let touch = touch[k].and_then(|p| {
            let c = chart.coordinate(&p)?;
            // chordal radius TOUCH_RADIUS, converted with the local stereographic scale
            Some((c, TOUCH_RADIUS * (1.0 + c.norm_sqr()) / 2.0))
        });
        geometry[k] = CurveGeometry { circle_fit_residual: fit, crossings: count_crossings(&planar, touch) };
        let frame = Frame::new(&planar, k as f64 * PANEL);
        let n = planar.len();
        for (j, c) in planar.iter().enumerate() {
            let hue = if n > 1 { 240.0 * j as f64 / (n - 1) as f64 } else { 0.0 };
            let mut d = String::new();
            for (i, z) in c.iter().enumerate() {
                let (x, y) = frame.map(*z);
                write!(d, "{}{x:.3},{y:.3}", if i == 0 { "M" } else { " L" }).unwrap();
            }
            writeln!(s, r#"<path d="{d} Z" fill="none" stroke="hsl({hue:.0},70%,40%)" stroke-width="1"/>"#).unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.0}" y="{}" font-family="monospace" font-size="12">F{} circle-fit {:.3e} crossings {}</text>"#,
            k as f64 * PANEL + 10.0,
            PANEL + 32.0,
            k + 1,
            geometry[k].circle_fit_residual,
            geometry[k].crossings
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok((s, geometry))
}

/// Arrows from `p` to `q` in the `(phi, theta)` rectangle; failed samples drawn red.
pub fn scatter_svg(samples: &[ScatteringSample]) -> CliResult<String> {
    if samples.is_empty() {
        return Err(CliError::Config("scatter plot needs at least one sample".into()));
    }
    let (w, h) = (2.0 * PANEL, PANEL);
    let at = |p: &SpherePoint| {
        let (theta, phi) = p.to_spherical();
        (PAD + phi / TAU * (w - 2.0 * PAD), PAD + theta / PI * (h - 2.0 * PAD))
    };
    let mut s = String::new();
    header(&mut s, w, h);
    s.push_str(concat!(
        r#"<defs><marker id="tip" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="5" markerHeight="5" orient="auto">"#,
        r#"<path d="M0,0 L10,5 L0,10 z"/></marker></defs>"#,
        "\n"
    ));
    for x in samples {
        let ((x0, y0), (x1, y1)) = (at(&x.p), at(&x.q));
        let color = if x.ok { "black" } else { "red" };
        writeln!(
            s,
            r#"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}" stroke="{color}" stroke-opacity="0.5" marker-end="url(#tip)"/>"#
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
