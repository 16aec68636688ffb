//! Exact chemical field from a density history.
//!
//! `v(t) = e^{-lambda t} e^{t Lap} v0 + mu int_0^t e^{-lambda (t-s)} e^{(t-s) Lap} u(s) ds`,
//! with the heat semigroup applied spectrally (FFT for periodic boxes, the
//! even extension for Neumann ones) and the time integral by the trapezoid
//! rule over the recorded times.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{Boundary, Field, Grid, Params, State};
use crate::solver::operators::for_each_line;
use crate::solver::{Observer, StepReport};

struct AxisPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Squared wavenumbers in FFT order.
    k2: Vec<f64>,
}

fn plans(grid: &Grid) -> Vec<AxisPlan> {
    let mut planner = FftPlanner::new();
    (0..grid.dim())
        .map(|axis| {
            let n = grid.n()[axis];
            let len = match grid.boundary() {
                Boundary::Periodic => n,
                Boundary::Neumann => 2 * (n - 1),
            };
            let period = len as f64 * grid.dx()[axis];
            let k2 = (0..len)
                .map(|m| {
                    let m = if m <= len / 2 { m as f64 } else { m as f64 - len as f64 };
                    let k = 2.0 * std::f64::consts::PI * m / period;
                    k * k
                })
                .collect();
            AxisPlan {
                len,
                forward: planner.plan_fft_forward(len),
                inverse: planner.plan_fft_inverse(len),
                k2,
            }
        })
        .collect()
}

fn apply_semigroup(grid: &Grid, plans: &[AxisPlan], t: f64, values: &mut [f64]) {
    let boundary = grid.boundary();
    for (axis, plan) in plans.iter().enumerate() {
        let n = grid.n()[axis];
        let mut buf = vec![Complex::new(0.0, 0.0); plan.len];
        let decay: Vec<f64> = plan.k2.iter().map(|k2| (-k2 * t).exp() / plan.len as f64).collect();
        for_each_line(grid, axis, |base, stride| {
            for j in 0..n {
                buf[j] = Complex::new(values[base + j * stride], 0.0);
            }
            if boundary == Boundary::Neumann {
                for j in 1..n - 1 {
                    buf[plan.len - j] = buf[j];
                }
            }
            plan.forward.process(&mut buf);
            for (z, d) in buf.iter_mut().zip(&decay) {
                *z *= *d;
            }
            plan.inverse.process(&mut buf);
            for j in 0..n {
                values[base + j * stride] = buf[j].re;
            }
        });
    }
}

/// `e^{t Lap} f` on the box with its boundary condition.
pub fn heat_semigroup(field: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("semigroup time must be non-negative, got {t}")));
    }
    let grid = field.grid();
    let mut values = field.values().to_vec();
    apply_semigroup(grid, &plans(grid), t, &mut values);
    Field::from_values(field.grid_arc().clone(), values)
}

/// Oracle for `v(t)` at the last recorded time.
///
/// `times` must start at 0 and increase; `u[i]` is the density at `times[i]`.
pub fn duhamel_v_oracle(v0: &Field, times: &[f64], u: &[Field], params: &Params) -> Result<Field> {
    if times.len() < 2 || times.len() != u.len() {
        return Err(Error::InsufficientHistory(format!(
            "need at least two matching samples, got {} times and {} fields",
            times.len(),
            u.len()
        )));
    }
    if times[0] != 0.0 {
        return Err(Error::InsufficientHistory(format!("history starts at {} instead of 0", times[0])));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InsufficientHistory("times must increase strictly".into()));
    }
    if u.iter().any(|f| !f.same_grid(v0)) {
        return Err(Error::GridMismatch);
    }
    let grid = v0.grid();
    let plans = plans(grid);
    let t = *times.last().unwrap();

    let mut out = v0.values().to_vec();
    apply_semigroup(grid, &plans, t, &mut out);
    let e0 = (-params.lambda * t).exp();
    out.iter_mut().for_each(|x| *x *= e0);

    let n = times.len();
    let mut scratch = vec![0.0; out.len()];
    for (i, (&s, field)) in times.iter().zip(u).enumerate() {
        let h = if i == 0 {
            0.5 * (times[1] - times[0])
        } else if i == n - 1 {
            0.5 * (times[n - 1] - times[n - 2])
        } else {
            0.5 * (times[i + 1] - times[i - 1])
        };
        scratch.copy_from_slice(field.values());
        apply_semigroup(grid, &plans, t - s, &mut scratch);
        let w = params.mu * h * (-params.lambda * (t - s)).exp();
        for (o, x) in out.iter_mut().zip(&scratch) {
            *o += w * x;
        }
    }
    Field::from_values(v0.grid_arc().clone(), out)
}

/// Observer recording the density after every step, for the oracle.
#[derive(Debug, Clone, Default)]
pub struct DensityHistory {
    pub times: Vec<f64>,
    pub u: Vec<Field>,
}

impl DensityHistory {
    pub fn starting_at(initial: &State) -> Self {
        DensityHistory {
            times: vec![initial.t],
            u: vec![initial.u.clone()],
        }
    }
}

impl Observer for DensityHistory {
    fn after_step(&mut self, _prev: &State, next: &State, _report: &StepReport) -> Result<()> {
        self.times.push(next.t);
        self.u.push(next.u.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn semigroup_damps_fourier_modes() {
        for boundary in [Boundary::Periodic, Boundary::Neumann] {
            let g = Arc::new(Grid::cube(2, 0.0, 2.0 * PI, 40, boundary).unwrap());
            let f = Field::from_fn(g.clone(), |x| x[0].cos() * (2.0 * x[1]).cos() + 1.0);
            let out = heat_semigroup(&f, 0.3).unwrap();
            let exact = Field::from_fn(g, |x| (-1.5f64).exp() * x[0].cos() * (2.0 * x[1]).cos() + 1.0);
            assert!(out.max_abs_diff(&exact).unwrap() < 1e-12, "{boundary:?}");
        }
    }

    #[test]
    fn semigroup_preserves_neumann_mass() {
        let g = Arc::new(Grid::cube(1, -10.0, 10.0, 201, Boundary::Neumann).unwrap());
        let f = Field::from_fn(g, |x| (-(x[0] - 3.0).powi(2)).exp());
        let out = heat_semigroup(&f, 2.0).unwrap();
        assert!((out.integral() - f.integral()).abs() < 1e-10);
    }

    #[test]
    fn uniform_density_closed_form() {
        let g = Arc::new(Grid::cube(1, 0.0, 10.0, 32, Boundary::Periodic).unwrap());
        let p = Params::new(0.5, 1.0, 1.0, 0.7, 1.3, 1).unwrap();
        let (u0, v0) = (0.8, 0.25);
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.005).collect();
        let u: Vec<Field> = times.iter().map(|_| Field::constant(g.clone(), u0)).collect();
        let v = duhamel_v_oracle(&Field::constant(g.clone(), v0), &times, &u, &p).unwrap();
        let t: f64 = 2.0;
        let e = (-p.lambda * t).exp();
        let exact = v0 * e + p.mu * u0 * (1.0 - e) / p.lambda;
        for x in v.values() {
            assert!((x - exact).abs() < 1e-4);
        }
    }

    #[test]
    fn history_must_start_at_zero() {
        let g = Arc::new(Grid::cube(1, 0.0, 1.0, 16, Boundary::Periodic).unwrap());
        let f = Field::zeros(g);
        let p = Params::new(0.5, 1.0, 1.0, 1.0, 1.0, 1).unwrap();
        let err = duhamel_v_oracle(&f, &[0.5, 1.0], &[f.clone(), f.clone()], &p).unwrap_err();
        assert!(matches!(err, Error::InsufficientHistory(_)));
        let err = duhamel_v_oracle(&f, &[0.0], std::slice::from_ref(&f), &p).unwrap_err();
        assert!(matches!(err, Error::InsufficientHistory(_)));
    }
}
