use nalgebra::Matrix2;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::flow::{flow_map, Harmonic};
use super::mobius::MobiusMap;
use super::point::{Chart, SpherePoint};
use crate::error::{Error, Result};

/// Orientation-reversing self-map of the sphere, built from a recursive descriptor.
///
/// `MobiusConjugated` evaluates `post . base . pre`; `FlowPerturbed` evaluates the time-`time`
/// harmonic flow after `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SphereDiffeo {
    Antipodal,
    #[serde(rename = "mobius_conjugate")]
    MobiusConjugated {
        pre: MobiusMap,
        post: MobiusMap,
        base: Box<SphereDiffeo>,
    },
    #[serde(rename = "flow")]
    FlowPerturbed {
        base: Box<SphereDiffeo>,
        time: f64,
        harmonics: Vec<Harmonic>,
    },
}

/// Value and Wirtinger derivatives `(df/dc, df/dconj c)` of a map written in charts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartDerivative {
    pub value: C,
    pub dz: C,
    pub dzbar: C,
}

impl ChartDerivative {
    /// The real 2x2 Jacobian in `(Re, Im)` coordinates.
    pub fn real_matrix(&self) -> Matrix2<f64> {
        let (s, d) = (self.dz + self.dzbar, self.dz - self.dzbar);
        Matrix2::new(s.re, -d.im, s.im, d.re)
    }

    pub fn det(&self) -> f64 {
        self.dz.norm_sqr() - self.dzbar.norm_sqr()
    }

    /// Real-linear action on a tangent vector.
    pub fn apply(&self, v: C) -> C {
        self.dz * v + self.dzbar * v.conj()
    }
}

/// A homogeneous vector with its Wirtinger derivatives along a chart coordinate.
#[derive(Clone, Copy)]
struct Jet {
    v: (C, C),
    dz: (C, C),
    dzbar: (C, C),
}

fn mobius_jet(m: &MobiusMap, j: Jet) -> Jet {
    Jet { v: m.apply_vec(j.v), dz: m.apply_vec(j.dz), dzbar: m.apply_vec(j.dzbar) }
}

fn antipodal_vec(v: (C, C)) -> (C, C) {
    (-v.1.conj(), v.0.conj())
}

impl SphereDiffeo {
    pub fn mobius_conjugate(pre: MobiusMap, post: MobiusMap, base: SphereDiffeo) -> Self {
        Self::MobiusConjugated { pre, post, base: Box::new(base) }
    }

    pub fn flow(base: SphereDiffeo, time: f64, harmonics: Vec<Harmonic>) -> Result<Self> {
        for h in &harmonics {
            h.validate(time)?;
        }
        Ok(Self::FlowPerturbed { base: Box::new(base), time, harmonics })
    }

    /// Checks every flow factor against the degree and strength caps.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Antipodal => Ok(()),
            Self::MobiusConjugated { base, .. } => base.validate(),
            Self::FlowPerturbed { base, time, harmonics } => {
                for h in harmonics {
                    h.validate(*time)?;
                }
                base.validate()
            }
        }
    }

    /// Copy with every flow time multiplied by `s` (homotopy to the unperturbed map at `s = 0`).
    pub fn scaled_flow(&self, s: f64) -> Self {
        match self {
            Self::Antipodal => Self::Antipodal,
            Self::MobiusConjugated { pre, post, base } => {
                Self::MobiusConjugated { pre: *pre, post: *post, base: Box::new(base.scaled_flow(s)) }
            }
            Self::FlowPerturbed { base, time, harmonics } => Self::FlowPerturbed {
                base: Box::new(base.scaled_flow(s)),
                time: time * s,
                harmonics: harmonics.clone(),
            },
        }
    }

    fn has_flow(&self) -> bool {
        match self {
            Self::Antipodal => false,
            Self::MobiusConjugated { base, .. } => base.has_flow(),
            Self::FlowPerturbed { time, harmonics, base } => (*time != 0.0 && !harmonics.is_empty()) || base.has_flow(),
        }
    }

    pub fn eval(&self, p: &SpherePoint) -> Result<SpherePoint> {
        match self {
            Self::Antipodal => Ok(p.antipodal()),
            Self::MobiusConjugated { pre, post, base } => Ok(post.apply(&base.eval(&pre.apply(p))?)),
            Self::FlowPerturbed { base, time, harmonics } => {
                let q = base.eval(p)?;
                if *time == 0.0 || harmonics.is_empty() {
                    return Ok(q);
                }
                Ok(SpherePoint::from_r3(&flow_map(harmonics, *time, &q.to_r3())?))
            }
        }
    }

    /// Exact inverse for flow-free descriptors; a seed for the Newton inverse otherwise.
    fn approximate_inverse(&self, q: &SpherePoint) -> Result<SpherePoint> {
        match self {
            Self::Antipodal => Ok(q.antipodal()),
            Self::MobiusConjugated { pre, post, base } => {
                Ok(pre.inverse().apply(&base.approximate_inverse(&post.inverse().apply(q))?))
            }
            Self::FlowPerturbed { base, time, harmonics } => {
                let back = flow_map(harmonics, -time, &q.to_r3())?;
                base.approximate_inverse(&SpherePoint::from_r3(&back))
            }
        }
    }

    /// Analytic propagation of a homogeneous jet; `None` when a flow factor is present.
    fn jet(&self, j: Jet) -> Option<Jet> {
        match self {
            Self::Antipodal => {
                Some(Jet { v: antipodal_vec(j.v), dz: antipodal_vec(j.dzbar), dzbar: antipodal_vec(j.dz) })
            }
            Self::MobiusConjugated { pre, post, base } => Some(mobius_jet(post, base.jet(mobius_jet(pre, j))?)),
            Self::FlowPerturbed { .. } => None,
        }
    }

    /// `chart_out . psi . chart_in^{-1}` in the coordinate `c`, without derivatives.
    pub fn chart_value(&self, chart_in: &Chart, chart_out: &Chart, c: C) -> Result<C> {
        let q = self.eval(&chart_in.to_point(c))?;
        chart_out.coordinate(&q).ok_or_else(|| Error::ChartPole("image at the pole of the output chart".into()))
    }

    /// Value and Wirtinger derivatives of `psi` written in the given charts.
    ///
    /// Analytic for antipodal and Mobius factors; central differences with step `1e-6`
    /// whenever a flow factor is present.
    pub fn chart_derivative(&self, chart_in: &Chart, chart_out: &Chart, c: C) -> Result<ChartDerivative> {
        if self.has_flow() {
            let h = 1e-6;
            let value = self.chart_value(chart_in, chart_out, c)?;
            let fx = (self.chart_value(chart_in, chart_out, c + h)? - self.chart_value(chart_in, chart_out, c - h)?)
                / (2.0 * h);
            let dy = C::new(0.0, h);
            let fy = (self.chart_value(chart_in, chart_out, c + dy)?
                - self.chart_value(chart_in, chart_out, c - dy)?)
                / (2.0 * h);
            let i = C::new(0.0, 1.0);
            return Ok(ChartDerivative { value, dz: (fx - i * fy) / 2.0, dzbar: (fx + i * fy) / 2.0 });
        }
        let r = chart_in.rotation();
        let zero = (C::new(0.0, 0.0), C::new(0.0, 0.0));
        let start = Jet { v: chart_in.lift(c), dz: (r[0][0], r[1][0]), dzbar: zero };
        let out = self.jet(start).expect("flow-free descriptor");
        let rot = |v: (C, C)| {
            let p = SpherePoint { z0: v.0, z1: v.1 };
            chart_out.rotated(&p)
        };
        let (q, qz, qzb) = (rot(out.v), rot(out.dz), rot(out.dzbar));
        if q.1.norm() < 1e-12 * q.0.norm() {
            return Err(Error::ChartPole("image at the pole of the output chart".into()));
        }
        let d = |dq: (C, C)| (dq.0 * q.1 - q.0 * dq.1) / (q.1 * q.1);
        Ok(ChartDerivative { value: q.0 / q.1, dz: d(qz), dzbar: d(qzb) })
    }

    /// Newton inverse in charts, seeded by the base-case inverse.
    pub fn inverse(&self, q: &SpherePoint) -> Result<SpherePoint> {
        let seed = self.approximate_inverse(q)?;
        if !self.has_flow() {
            return Ok(seed);
        }
        let chart_in = Chart::centered_at(seed);
        let chart_out = Chart::centered_at(*q);
        let mut c = C::new(0.0, 0.0);
        let mut last = f64::INFINITY;
        for it in 0..30 {
            let d = self.chart_derivative(&chart_in, &chart_out, c)?;
            let r = d.value;
            if r.norm() < 1e-14 {
                return Ok(chart_in.to_point(c));
            }
            let step =
                d.real_matrix().try_inverse().ok_or(Error::NewtonStall { iterations: it, residual: r.norm() })?
                    * nalgebra::Vector2::new(r.re, r.im);
            c -= C::new(step.x, step.y);
            if r.norm() >= last && r.norm() < 1e-12 {
                return Ok(chart_in.to_point(c));
            }
            last = r.norm();
        }
        if last < 1e-11 {
            Ok(chart_in.to_point(c))
        } else {
            Err(Error::NewtonStall { iterations: 30, residual: last })
        }
    }
}

/// The working affine chart of a point: standard when `|z1| >= |z0|`, inverted otherwise.
pub fn active_chart(p: &SpherePoint) -> Chart {
    if p.z1.norm() >= p.z0.norm() {
        Chart::standard()
    } else {
        Chart::inverted()
    }
}

pub fn diffeo_eval(psi: &SphereDiffeo, p: &SpherePoint) -> Result<SpherePoint> {
    psi.eval(p)
}

pub fn diffeo_inverse(psi: &SphereDiffeo, q: &SpherePoint) -> Result<SpherePoint> {
    psi.inverse(q)
}

/// Real Jacobian of `psi` in the active affine charts at `p` and `psi(p)`.
pub fn diffeo_jacobian(psi: &SphereDiffeo, p: &SpherePoint) -> Result<Matrix2<f64>> {
    let q = psi.eval(p)?;
    let (ci, co) = (active_chart(p), active_chart(&q));
    let c = ci.coordinate(p).ok_or_else(|| Error::ChartPole("input at chart pole".into()))?;
    Ok(psi.chart_derivative(&ci, &co, c)?.real_matrix())
}
