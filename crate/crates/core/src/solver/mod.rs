//! IMEX time stepping of the chemotaxis system.
//!
//! Diffusion (and the linear decay of the chemical) is implicit, applied as a
//! sequence of one-dimensional tridiagonal solves, one per axis. Chemotaxis,
//! the logistic source, chemical production and moving-frame advection are
//! explicit.

pub mod operators;
mod run;
pub mod tridiag;

use serde::{Deserialize, Serialize};

pub use operators::FluxScheme;
pub use run::{run, Observer, RunOptions};

use crate::error::{Error, Result};
use crate::model::{Boundary, Field, Grid, Params, State};
use operators::{add_flux_divergence, add_frame_advection, add_laplacian, for_each_line, max_face_gradient};
use tridiag::{thomas, thomas_cyclic, CyclicScratch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed,
    AdaptiveCfl { safety: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionIntegrator {
    BackwardEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    /// Base step; the adaptive policy never exceeds it.
    pub dt: f64,
    pub dt_policy: DtPolicy,
    pub flux: FluxScheme,
    pub diffusion: DiffusionIntegrator,
    /// Speed `c` of the moving frame `x -> x + c t xi`.
    #[serde(default)]
    pub frame_speed: f64,
    /// Unit vector `xi`; empty means the first coordinate axis.
    #[serde(default)]
    pub frame_direction: Vec<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            dt: 0.05,
            dt_policy: DtPolicy::AdaptiveCfl { safety: 0.4 },
            flux: FluxScheme::UpwindConservative,
            diffusion: DiffusionIntegrator::BackwardEuler,
            frame_speed: 0.0,
            frame_direction: Vec::new(),
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("scheme.dt", format!("must be positive, got {}", self.dt)));
        }
        if let DtPolicy::AdaptiveCfl { safety } = self.dt_policy {
            if !(safety > 0.0 && safety <= 1.0) {
                return Err(Error::config("scheme.dt_policy.adaptive_cfl.safety", format!("must lie in (0, 1], got {safety}")));
            }
        }
        if !self.frame_speed.is_finite() {
            return Err(Error::config("scheme.frame_speed", "must be finite"));
        }
        if !self.frame_direction.is_empty() {
            if self.frame_direction.len() != dim {
                return Err(Error::config(
                    "scheme.frame_direction",
                    format!("expected {dim} components, got {}", self.frame_direction.len()),
                ));
            }
            let norm = self.frame_direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if self.frame_speed != 0.0 && (norm - 1.0).abs() > 1e-12 {
                return Err(Error::config("scheme.frame_direction", format!("must be a unit vector, |xi| = {norm}")));
            }
        }
        Ok(())
    }

    /// Frame direction padded to three components.
    pub fn direction(&self) -> [f64; 3] {
        let mut xi = [0.0; 3];
        if self.frame_direction.is_empty() {
            xi[0] = 1.0;
        } else {
            for (slot, v) in xi.iter_mut().zip(&self.frame_direction) {
                *slot = *v;
            }
        }
        xi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub dt: f64,
    pub max_u: f64,
    pub max_v: f64,
    pub max_grad_v: f64,
    pub cfl_advective: f64,
    pub cfl_chemotactic: f64,
    pub clipped: usize,
}

/// Same parameters with chemotaxis switched off (the Fisher-KPP baseline).
pub fn fisher_kpp_mode(params: &Params) -> Params {
    Params { chi: 0.0, ..*params }
}

fn check_pair(state: &State) -> Result<()> {
    if !state.u.same_grid(&state.v) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Continuous-time right-hand side of the density equation.
pub fn rhs_u(state: &State, params: &Params, scheme: &SchemeConfig) -> Result<Field> {
    check_pair(state)?;
    let mut out = Field::zeros(state.u.grid_arc().clone());
    let o = out.values_mut();
    add_laplacian(&state.u, 1.0, o);
    add_explicit_u(state, params, scheme, 1.0, o);
    Ok(out)
}

/// Continuous-time right-hand side of the chemical equation.
pub fn rhs_v(state: &State, params: &Params, scheme: &SchemeConfig) -> Result<Field> {
    check_pair(state)?;
    let mut out = Field::zeros(state.v.grid_arc().clone());
    let o = out.values_mut();
    add_laplacian(&state.v, 1.0, o);
    for (slot, v) in o.iter_mut().zip(state.v.values()) {
        *slot -= params.lambda * v;
    }
    add_explicit_v(state, params, scheme, 1.0, o);
    Ok(out)
}

fn add_explicit_u(state: &State, params: &Params, scheme: &SchemeConfig, scale: f64, out: &mut [f64]) {
    for (slot, &u) in out.iter_mut().zip(state.u.values()) {
        *slot += scale * u * (params.a - params.b * u);
    }
    if params.chi != 0.0 {
        add_flux_divergence(&state.u, &state.v, scheme.flux, -scale * params.chi, out);
    }
    let xi = scheme.direction();
    add_frame_advection(&state.u, scheme.frame_speed, &xi, scale, out);
}

fn add_explicit_v(state: &State, params: &Params, scheme: &SchemeConfig, scale: f64, out: &mut [f64]) {
    for (slot, &u) in out.iter_mut().zip(state.u.values()) {
        *slot += scale * params.mu * u;
    }
    let xi = scheme.direction();
    add_frame_advection(&state.v, scheme.frame_speed, &xi, scale, out);
}

/// Rates per unit time of the explicit transport `(frame, chemotaxis)`,
/// summed over axes as `sum_d speed_d / dx_d`.
fn transport_rates(state: &State, params: &Params, scheme: &SchemeConfig) -> (f64, f64, f64) {
    let grid = state.grid();
    let xi = scheme.direction();
    let grad = max_face_gradient(&state.v);
    let mut frame = 0.0;
    let mut chemo = 0.0;
    for axis in 0..grid.dim() {
        frame += (scheme.frame_speed * xi[axis]).abs() / grid.dx()[axis];
        chemo += params.chi * grad[axis] / grid.dx()[axis];
    }
    let grad_norm = grad[..grid.dim()].iter().map(|g| g * g).sum::<f64>().sqrt();
    (frame, chemo, grad_norm)
}

/// Step size the policy allows from `state`.
pub fn admissible_dt(state: &State, params: &Params, scheme: &SchemeConfig) -> f64 {
    match scheme.dt_policy {
        DtPolicy::Fixed => scheme.dt,
        DtPolicy::AdaptiveCfl { safety } => {
            let (frame, chemo, _) = transport_rates(state, params, scheme);
            let rate = frame + chemo;
            let transport = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
            let reaction = 1.0 / (2.0 * params.a);
            scheme.dt.min(safety * transport.min(reaction))
        }
    }
}

/// One step with the policy's step size.
pub fn step(state: &State, params: &Params, scheme: &SchemeConfig) -> Result<(State, StepReport)> {
    let dt = admissible_dt(state, params, scheme);
    step_with_dt(state, params, scheme, dt)
}

/// One IMEX step of size `dt`.
pub fn step_with_dt(state: &State, params: &Params, scheme: &SchemeConfig, dt: f64) -> Result<(State, StepReport)> {
    check_pair(state)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("step size must be positive, got {dt}")));
    }
    let grid = state.grid();
    let (frame_rate, chemo_rate, _) = transport_rates(state, params, scheme);

    let mut u = state.u.values().to_vec();
    let theta = match scheme.diffusion {
        DiffusionIntegrator::BackwardEuler => 1.0,
        DiffusionIntegrator::CrankNicolson => 0.5,
    };
    // theta-weighted decay: the explicit part scales v before the sources are added.
    let explicit_decay = 1.0 - (1.0 - theta) * params.lambda * dt;
    let mut v: Vec<f64> = state.v.values().iter().map(|x| x * explicit_decay).collect();
    add_explicit_u(state, params, scheme, dt, &mut u);
    add_explicit_v(state, params, scheme, dt, &mut v);

    let mut sweeper = Sweeper::new(grid);
    for axis in 0..grid.dim() {
        sweeper.diffuse(grid, axis, dt, scheme.diffusion, &mut u);
        sweeper.diffuse(grid, axis, dt, scheme.diffusion, &mut v);
    }
    let implicit_decay = 1.0 / (1.0 + theta * params.lambda * dt);
    v.iter_mut().for_each(|x| *x *= implicit_decay);

    let t = state.t + dt;
    let mut next = State {
        u: Field::from_values(state.u.grid_arc().clone(), u)?,
        v: Field::from_values(state.v.grid_arc().clone(), v)?,
        t,
    };
    if !next.is_finite() {
        return Err(Error::Unstable { t });
    }
    let clipped = next.enforce_nonnegative()?;
    let (_, _, grad_norm) = transport_rates(&next, params, scheme);
    let report = StepReport {
        dt,
        max_u: next.u.max_abs(),
        max_v: next.v.max_abs(),
        max_grad_v: grad_norm,
        cfl_advective: dt * frame_rate,
        cfl_chemotactic: dt * chemo_rate,
        clipped,
    };
    Ok((next, report))
}

/// Reusable buffers for the per-axis implicit solves.
struct Sweeper {
    line: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    work: Vec<f64>,
    cyclic: CyclicScratch,
}

impl Sweeper {
    fn new(grid: &Grid) -> Self {
        let n = grid.n().iter().copied().max().unwrap_or(0);
        Sweeper {
            line: vec![0.0; n],
            a: vec![0.0; n],
            b: vec![0.0; n],
            c: vec![0.0; n],
            work: vec![0.0; n],
            cyclic: CyclicScratch::new(n),
        }
    }

    /// Applies `(I - theta dt D)^{-1} (I + (1 - theta) dt D)` along `axis`,
    /// where `D` is the second difference on that axis.
    fn diffuse(&mut self, grid: &Grid, axis: usize, dt: f64, integrator: DiffusionIntegrator, values: &mut [f64]) {
        let n = grid.n()[axis];
        let dx = grid.dx()[axis];
        let theta = match integrator {
            DiffusionIntegrator::BackwardEuler => 1.0,
            DiffusionIntegrator::CrankNicolson => 0.5,
        };
        let r = theta * dt / (dx * dx);
        let r_explicit = (1.0 - theta) * dt / (dx * dx);
        let boundary = grid.boundary();

        self.a[..n].fill(-r);
        self.b[..n].fill(1.0 + 2.0 * r);
        self.c[..n].fill(-r);
        if boundary == Boundary::Neumann {
            // Mirror ghost points double the inward coupling at the ends.
            self.c[0] = -2.0 * r;
            self.a[n - 1] = -2.0 * r;
        }

        let Sweeper {
            line,
            a,
            b,
            c,
            work,
            cyclic,
        } = self;
        let line = &mut line[..n];
        for_each_line(grid, axis, |base, stride| {
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = values[base + j * stride];
            }
            if r_explicit > 0.0 {
                for j in 0..n {
                    let l = values[base + grid.neighbor_along(axis, j, -1) * stride];
                    let rr = values[base + grid.neighbor_along(axis, j, 1) * stride];
                    line[j] += r_explicit * (l - 2.0 * values[base + j * stride] + rr);
                }
            }
            match boundary {
                Boundary::Neumann => thomas(&a[..n], &b[..n], &c[..n], line, &mut work[..n]),
                Boundary::Periodic => thomas_cyclic(&a[..n], &b[..n], &c[..n], -r, -r, line, cyclic),
            }
            for (j, x) in line.iter().enumerate() {
                values[base + j * stride] = *x;
            }
        });
    }
}
