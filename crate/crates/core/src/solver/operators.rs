//! Finite-difference stencils on tensor grids.
//!
//! All stencils work line by line along one axis at a time; the boundary
//! closure comes from [`Grid::neighbor_along`], so a Neumann boundary behaves
//! like an even reflection about the end points and a periodic one wraps.

use serde::{Deserialize, Serialize};

use crate::model::{Field, Grid};

/// How the density is evaluated on a cell face in the chemotactic flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    /// Arithmetic mean of the two neighbours.
    CentralConservative,
    /// Density from the side the drift `chi grad v` comes from.
    UpwindConservative,
}

/// Calls `f(base, stride)` once for every grid line along `axis`.
pub(crate) fn for_each_line(grid: &Grid, axis: usize, mut f: impl FnMut(usize, usize)) {
    let stride = grid.stride(axis);
    let n = grid.n()[axis];
    let outer = grid.len() / (n * stride);
    for o in 0..outer {
        for r in 0..stride {
            f(o * n * stride + r, stride);
        }
    }
}

/// Second-order Laplacian added into `out`.
pub fn add_laplacian(field: &Field, scale: f64, out: &mut [f64]) {
    let grid = field.grid();
    let u = field.values();
    for axis in 0..grid.dim() {
        let n = grid.n()[axis];
        let k = scale / (grid.dx()[axis] * grid.dx()[axis]);
        for_each_line(grid, axis, |base, stride| {
            for j in 0..n {
                let l = base + grid.neighbor_along(axis, j, -1) * stride;
                let r = base + grid.neighbor_along(axis, j, 1) * stride;
                let c = base + j * stride;
                out[c] += k * (u[l] - 2.0 * u[c] + u[r]);
            }
        });
    }
}

pub fn laplacian(field: &Field) -> Field {
    let mut out = Field::zeros(field.grid_arc().clone());
    add_laplacian(field, 1.0, out.values_mut());
    out
}

fn face_density(scheme: FluxScheme, u_left: f64, u_right: f64, gradient: f64) -> f64 {
    match scheme {
        FluxScheme::CentralConservative => 0.5 * (u_left + u_right),
        FluxScheme::UpwindConservative => {
            if gradient > 0.0 {
                u_left
            } else if gradient < 0.0 {
                u_right
            } else {
                0.5 * (u_left + u_right)
            }
        }
    }
}

/// Adds `scale * div(u grad v)` into `out` using face fluxes, so the sum of
/// the divergence against the quadrature weights telescopes to zero.
pub fn add_flux_divergence(u: &Field, v: &Field, scheme: FluxScheme, scale: f64, out: &mut [f64]) {
    let grid = u.grid();
    let (uu, vv) = (u.values(), v.values());
    for axis in 0..grid.dim() {
        let n = grid.n()[axis];
        let dx = grid.dx()[axis];
        let k = scale / dx;
        for_each_line(grid, axis, |base, stride| {
            let flux = |p: usize, q: usize| {
                let g = (vv[q] - vv[p]) / dx;
                face_density(scheme, uu[p], uu[q], g) * g
            };
            for j in 0..n {
                let c = base + j * stride;
                let l = base + grid.neighbor_along(axis, j, -1) * stride;
                let r = base + grid.neighbor_along(axis, j, 1) * stride;
                out[c] += k * (flux(c, r) - flux(l, c));
            }
        });
    }
}

/// Adds `scale * c xi . grad f` into `out` with a second-order upwind
/// derivative. The transport velocity is `-c xi`, so for `c xi_d > 0`
/// information arrives from the right.
pub fn add_frame_advection(field: &Field, c: f64, xi: &[f64], scale: f64, out: &mut [f64]) {
    if c == 0.0 {
        return;
    }
    let grid = field.grid();
    let f = field.values();
    for axis in 0..grid.dim() {
        let beta = c * xi[axis];
        if beta == 0.0 {
            continue;
        }
        let n = grid.n()[axis];
        let k = scale * beta / (2.0 * grid.dx()[axis]);
        let sign: isize = if beta > 0.0 { 1 } else { -1 };
        for_each_line(grid, axis, |base, stride| {
            for j in 0..n {
                let c0 = base + j * stride;
                let c1 = base + grid.neighbor_along(axis, j, sign) * stride;
                let c2 = base + grid.neighbor_along(axis, j, 2 * sign) * stride;
                out[c0] += sign as f64 * k * (-3.0 * f[c0] + 4.0 * f[c1] - f[c2]);
            }
        });
    }
}

/// Largest one-sided difference quotient `|f_{j+1} - f_j| / dx` per axis.
pub fn max_face_gradient(field: &Field) -> [f64; 3] {
    let grid = field.grid();
    let f = field.values();
    let mut out = [0.0; 3];
    for (axis, slot) in out.iter_mut().enumerate().take(grid.dim()) {
        let n = grid.n()[axis];
        let dx = grid.dx()[axis];
        let mut m: f64 = 0.0;
        for_each_line(grid, axis, |base, stride| {
            for j in 0..n {
                let r = base + grid.neighbor_along(axis, j, 1) * stride;
                m = m.max((f[r] - f[base + j * stride]).abs() / dx);
            }
        });
        *slot = m;
    }
    out
}

/// Centred-difference gradient, one field per axis.
pub fn gradient(field: &Field) -> Vec<Field> {
    let grid = field.grid();
    let f = field.values();
    (0..grid.dim())
        .map(|axis| {
            let mut g = Field::zeros(field.grid_arc().clone());
            let n = grid.n()[axis];
            let k = 1.0 / (2.0 * grid.dx()[axis]);
            let out = g.values_mut();
            for_each_line(grid, axis, |base, stride| {
                for j in 0..n {
                    let l = base + grid.neighbor_along(axis, j, -1) * stride;
                    let r = base + grid.neighbor_along(axis, j, 1) * stride;
                    out[base + j * stride] = k * (f[r] - f[l]);
                }
            });
            g
        })
        .collect()
}

/// `|grad f|^2` with centred differences.
pub fn gradient_norm_sq(field: &Field) -> Field {
    let mut out = Field::zeros(field.grid_arc().clone());
    for g in gradient(field) {
        for (o, v) in out.values_mut().iter_mut().zip(g.values()) {
            *o += v * v;
        }
    }
    out
}
