//! Pointwise monitors: interior/exterior extremes, the `w` functional and its
//! supersolution residual, and the exponential envelopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Field, Params, State};
use crate::solver::operators::{add_laplacian, gradient_norm_sq};
use crate::theory;

/// Distance-like coordinate defining the regions `{s(x) <= ct}` and `{s(x) >= ct}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `s = |x|` (compactly supported data).
    Radial,
    /// `s = |x . xi|` (data positive on a slab).
    Slab(Vec<f64>),
    /// `s = x . xi` (front-like data).
    HalfSpace(Vec<f64>),
}

impl Geometry {
    pub fn measure(&self, x: &[f64]) -> f64 {
        match self {
            Geometry::Radial => x.iter().map(|c| c * c).sum::<f64>().sqrt(),
            Geometry::Slab(xi) => dot(x, xi).abs(),
            Geometry::HalfSpace(xi) => dot(x, xi),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Infimum of `field` over `{s(x) <= speed t}`; when no grid point qualifies,
/// the value nearest the origin.
pub fn interior_infimum(field: &Field, t: f64, geometry: &Geometry, speed: f64) -> f64 {
    let grid = field.grid();
    let dim = grid.dim();
    let bound = speed * t;
    let mut inf = f64::INFINITY;
    for (i, &u) in field.values().iter().enumerate() {
        let x = grid.point(i);
        if geometry.measure(&x[..dim]) <= bound {
            inf = inf.min(u);
        }
    }
    if inf.is_finite() {
        inf
    } else {
        field.values()[grid.nearest_index(&[0.0; 3])]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorSup {
    pub value: f64,
    /// The region holds no grid point: it lies beyond the simulated box.
    pub outside_box: bool,
}

/// Supremum of `field` over `{s(x) >= speed t}` within the box.
pub fn exterior_supremum(field: &Field, t: f64, geometry: &Geometry, speed: f64) -> ExteriorSup {
    let grid = field.grid();
    let dim = grid.dim();
    let bound = speed * t;
    let mut sup = f64::NEG_INFINITY;
    for (i, &u) in field.values().iter().enumerate() {
        let x = grid.point(i);
        if geometry.measure(&x[..dim]) >= bound {
            sup = sup.max(u);
        }
    }
    if sup.is_finite() {
        ExteriorSup {
            value: sup,
            outside_box: false,
        }
    } else {
        ExteriorSup {
            value: 0.0,
            outside_box: true,
        }
    }
}

/// `w = u + chi / (2 mu) |grad v|^2` with centred differences.
pub fn w_functional(state: &State, params: &Params) -> Result<Field> {
    let g = gradient_norm_sq(&state.v);
    let k = params.chi / (2.0 * params.mu);
    state.u.zip_map(&g, |u, g2| u + k * g2)
}

/// Sign given to the `(b - N mu chi / 4) u^2` term when checking the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticSign {
    /// The residual as computed from the trajectory.
    Natural,
    /// Negative control: add back twice the damping term, turning the
    /// favourable `-(b - N mu chi / 4) u^2` contribution into a positive one.
    Flipped,
}

/// Discrete residual `w_t - Lap w - a w` between two consecutive states, with
/// the Laplacian and the linear term at the time midpoint.
pub fn supersolution_residual(prev: &State, next: &State, params: &Params, sign: QuadraticSign) -> Result<Field> {
    if !prev.u.same_grid(&next.u) {
        return Err(Error::GridMismatch);
    }
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("states must be ordered in time, dt = {dt}")));
    }
    let w0 = w_functional(prev, params)?;
    let w1 = w_functional(next, params)?;
    let avg = w0.zip_map(&w1, |a, b| 0.5 * (a + b))?;
    let mut lap = vec![0.0; avg.len()];
    add_laplacian(&avg, 1.0, &mut lap);
    let margin = params.damping_margin();
    let values = w0
        .values()
        .iter()
        .zip(w1.values())
        .zip(avg.values())
        .zip(&lap)
        .enumerate()
        .map(|(i, (((&a, &b), &m), &l))| {
            let r = (b - a) / dt - l - params.a * m;
            match sign {
                QuadraticSign::Natural => r,
                QuadraticSign::Flipped => {
                    let u = 0.5 * (prev.u.values()[i] + next.u.values()[i]);
                    r + 2.0 * margin * u * u
                }
            }
        })
        .collect();
    Field::from_values(avg.grid_arc().clone(), values)
}

/// Family of directions the envelope is minimised over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeShape {
    /// All unit directions: `min_xi e^{-k x.xi} = e^{-k|x|}`.
    Radial,
    /// One direction: `e^{-k x.xi}`.
    Directional(Vec<f64>),
    /// Both `xi` and `-xi`: `e^{-k|x.xi|}`.
    TwoSided(Vec<f64>),
}

impl EnvelopeShape {
    fn coordinate(&self, x: &[f64]) -> f64 {
        match self {
            EnvelopeShape::Radial => x.iter().map(|c| c * c).sum::<f64>().sqrt(),
            EnvelopeShape::Directional(xi) => dot(x, xi),
            EnvelopeShape::TwoSided(xi) => dot(x, xi).abs(),
        }
    }
}

/// Moving exponential supersolutions `M e^{-k(s - ct)}` for `w` and
/// `d e^{-k(s - ct)}` for `v`, with `c = (k^2 + a)/k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub k: f64,
    pub speed: f64,
    pub bound_w: f64,
    pub bound_v: f64,
    pub shape: EnvelopeShape,
}

/// Relative slack allowed when re-checking the initial data against an envelope.
const PRECONDITION_SLACK: f64 = 1e-12;

impl Envelope {
    /// Envelope with the smallest `M` and `d` admitted by the initial data:
    /// `M = max w_0 e^{k s}` and `d = max(mu M / (a + lambda), max v_0 e^{k s})`.
    pub fn minimal(initial: &State, params: &Params, k: f64, shape: EnvelopeShape) -> Result<Self> {
        let speed = theory::envelope_speed(k, params.a)?;
        let w0 = w_functional(initial, params)?;
        let grid = initial.grid();
        let dim = grid.dim();
        let mut m: f64 = 0.0;
        let mut dv: f64 = 0.0;
        for i in 0..grid.len() {
            let x = grid.point(i);
            let s = shape.coordinate(&x[..dim]);
            let grow = (k * s).exp();
            m = m.max(w0.values()[i] * grow);
            dv = dv.max(initial.v.values()[i] * grow);
        }
        let d = theory::envelope_v_coefficient(m, params.a, params.mu, params.lambda).max(dv);
        Ok(Envelope {
            k,
            speed,
            bound_w: m,
            bound_v: d,
            shape,
        })
    }

    /// Envelope with given constants; rejects initial data that is not below it.
    pub fn new(initial: &State, params: &Params, k: f64, bound_w: f64, bound_v: f64, shape: EnvelopeShape) -> Result<Self> {
        let speed = theory::envelope_speed(k, params.a)?;
        let env = Envelope {
            k,
            speed,
            bound_w,
            bound_v,
            shape,
        };
        let w0 = w_functional(initial, params)?;
        let grid = initial.grid();
        let dim = grid.dim();
        for i in 0..grid.len() {
            let x = grid.point(i);
            let (ew, ev) = env.at(&x[..dim], initial.t);
            let excess = (w0.values()[i] - ew).max(initial.v.values()[i] - ev);
            if excess > PRECONDITION_SLACK * ew.max(ev) {
                return Err(Error::Precondition {
                    location: x[..dim].to_vec(),
                    excess,
                });
            }
        }
        Ok(env)
    }

    /// Envelope values `(w bound, v bound)` at `(x, t)`.
    pub fn at(&self, x: &[f64], t: f64) -> (f64, f64) {
        let e = (-self.k * (self.shape.coordinate(x) - self.speed * t)).exp();
        (self.bound_w * e, self.bound_v * e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub t: f64,
    /// `max(w - M e^{-k(s - ct)})`, zero when the envelope holds everywhere.
    pub max_w_violation: f64,
    pub max_v_violation: f64,
    pub w_location: Vec<f64>,
    pub v_location: Vec<f64>,
}

impl EnvelopeReport {
    pub fn max_violation(&self) -> f64 {
        self.max_w_violation.max(self.max_v_violation)
    }
}

pub fn envelope_check(state: &State, params: &Params, envelope: &Envelope) -> Result<EnvelopeReport> {
    let w = w_functional(state, params)?;
    let grid = state.grid();
    let dim = grid.dim();
    let mut report = EnvelopeReport {
        t: state.t,
        max_w_violation: 0.0,
        max_v_violation: 0.0,
        w_location: vec![],
        v_location: vec![],
    };
    for i in 0..grid.len() {
        let x = grid.point(i);
        let (ew, ev) = envelope.at(&x[..dim], state.t);
        let dw = w.values()[i] - ew;
        let dv = state.v.values()[i] - ev;
        if dw > report.max_w_violation {
            report.max_w_violation = dw;
            report.w_location = x[..dim].to_vec();
        }
        if dv > report.max_v_violation {
            report.max_v_violation = dv;
            report.v_location = x[..dim].to_vec();
        }
    }
    Ok(report)
}

/// Largest of `|u|, |v|, |grad v|, |Lap v|` over the given states: an
/// empirical stand-in for the a-priori bound `M`.
pub fn measured_bound<'a>(states: impl IntoIterator<Item = &'a State>) -> f64 {
    let mut m: f64 = 0.0;
    for s in states {
        let grad = gradient_norm_sq(&s.v).max().max(0.0).sqrt();
        let mut lap = vec![0.0; s.v.len()];
        add_laplacian(&s.v, 1.0, &mut lap);
        let lap_max = lap.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        m = m.max(s.u.max_abs()).max(s.v.max_abs()).max(grad).max(lap_max);
    }
    m
}
