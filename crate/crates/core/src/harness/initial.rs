//! Library of initial data for the three classes of the spreading theorems.

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::FrontDirection;
use crate::error::{Error, Result};
use crate::harness::snapshot;
use crate::model::{Field, Grid, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `max(0, 1 - (|x|/R)^2)^2`.
    CompactBump { radius: f64 },
    /// `S((x.xi - location) / width)`: one behind the interface, zero ahead of it.
    FrontLike {
        direction: Vec<f64>,
        location: f64,
        width: f64,
    },
    /// Product of two opposed cutoffs, positive on the slab `|x.xi| < half_width`.
    TwoSided {
        direction: Vec<f64>,
        half_width: f64,
        width: f64,
    },
    /// Fields read from a snapshot file on the same grid.
    Custom { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    pub shape: Shape,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Amplitude of `v0`, built with the same profile.
    #[serde(default)]
    pub v_amplitude: f64,
    /// Relative multiplicative noise on the support, in `[0, 1)`.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl InitialDataSpec {
    pub fn compact_bump(radius: f64, amplitude: f64) -> Self {
        InitialDataSpec {
            shape: Shape::CompactBump { radius },
            amplitude,
            v_amplitude: 0.0,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// C^2 cutoff: 1 for `z <= -1`, 0 for `z >= 1`, quintic smoothstep between.
pub fn cutoff(z: f64) -> f64 {
    if z <= -1.0 {
        1.0
    } else if z >= 1.0 {
        0.0
    } else {
        let s = 0.5 * (z + 1.0);
        1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(path: &str, xi: &[f64], dim: usize) -> Result<()> {
    if xi.len() != dim {
        return Err(Error::config(path, format!("expected {dim} components, got {}", xi.len())));
    }
    let norm = dot(xi, xi).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::config(path, format!("must be a unit vector, |xi| = {norm}")));
    }
    Ok(())
}

impl Shape {
    fn profile(&self, x: &[f64]) -> f64 {
        match self {
            Shape::CompactBump { radius } => {
                let r2 = dot(x, x) / (radius * radius);
                (1.0 - r2).max(0.0).powi(2)
            }
            Shape::FrontLike {
                direction,
                location,
                width,
            } => cutoff((dot(x, direction) - location) / width),
            Shape::TwoSided {
                direction,
                half_width,
                width,
            } => {
                let s = dot(x, direction);
                cutoff((s - half_width) / width) * cutoff((-s - half_width) / width)
            }
            Shape::Custom { .. } => unreachable!("custom data is read from file"),
        }
    }
}

/// Interval of `x.xi` values inside the box.
fn projection_range(grid: &Grid, xi: &[f64]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (axis, &d) in xi.iter().enumerate() {
        let (a, b) = (grid.lo()[axis] * d, grid.hi()[axis] * d);
        lo += a.min(b);
        hi += a.max(b);
    }
    (lo, hi)
}

impl InitialDataSpec {
    /// Checks the shape fits the box with `clearance` (fraction of the width) to spare.
    pub fn validate(&self, grid: &Grid, clearance: f64) -> Result<()> {
        let dim = grid.dim();
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config("initial.amplitude", "must be positive"));
        }
        if !(self.v_amplitude >= 0.0 && self.v_amplitude.is_finite()) {
            return Err(Error::config("initial.v_amplitude", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::config("initial.noise", "must lie in [0, 1)"));
        }
        let margin = |axis: usize| clearance * (grid.hi()[axis] - grid.lo()[axis]);
        match &self.shape {
            Shape::CompactBump { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::config("initial.shape.radius", "must be positive"));
                }
                for axis in 0..dim {
                    if grid.lo()[axis] + margin(axis) > -radius || grid.hi()[axis] - margin(axis) < *radius {
                        return Err(Error::config(
                            "initial.shape.radius",
                            format!("support of radius {radius} exceeds the clearance margin on axis {axis}"),
                        ));
                    }
                }
            }
            Shape::FrontLike {
                direction,
                location,
                width,
            } => {
                unit("initial.shape.direction", direction, dim)?;
                if !(*width > 0.0) {
                    return Err(Error::config("initial.shape.width", "must be positive"));
                }
                let (lo, hi) = projection_range(grid, direction);
                let m = (0..dim).map(margin).fold(0.0, f64::max);
                if location - width < lo + m || location + width > hi - m {
                    return Err(Error::config(
                        "initial.shape.location",
                        "interface layer exceeds the clearance margin",
                    ));
                }
            }
            Shape::TwoSided {
                direction,
                half_width,
                width,
            } => {
                unit("initial.shape.direction", direction, dim)?;
                if !(*width > 0.0 && *half_width > 0.0) {
                    return Err(Error::config("initial.shape", "half_width and width must be positive"));
                }
                let (lo, hi) = projection_range(grid, direction);
                let m = (0..dim).map(margin).fold(0.0, f64::max);
                let reach = half_width + width;
                if -reach < lo + m || reach > hi - m {
                    return Err(Error::config(
                        "initial.shape.half_width",
                        "slab exceeds the clearance margin",
                    ));
                }
            }
            Shape::Custom { path } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::config("initial.shape.path", "empty path"));
                }
            }
        }
        Ok(())
    }

    pub fn default_directions(&self, dim: usize) -> Vec<FrontDirection> {
        match &self.shape {
            Shape::FrontLike { direction, .. } => vec![FrontDirection::Ray(direction.clone())],
            Shape::TwoSided { direction, .. } => vec![
                FrontDirection::Ray(direction.clone()),
                FrontDirection::Ray(direction.iter().map(|v| -v).collect()),
            ],
            _ if dim == 1 => vec![FrontDirection::Ray(vec![1.0]), FrontDirection::Ray(vec![-1.0])],
            _ => vec![FrontDirection::Radial],
        }
    }

    /// Geometry matching the class of the data, for the interior/exterior checks.
    pub fn geometry(&self, dim: usize) -> crate::analysis::Geometry {
        use crate::analysis::Geometry;
        match &self.shape {
            Shape::FrontLike { direction, .. } => Geometry::HalfSpace(direction.clone()),
            Shape::TwoSided { direction, .. } => Geometry::Slab(direction.clone()),
            _ => {
                let _ = dim;
                Geometry::Radial
            }
        }
    }

    pub fn envelope_shape(&self) -> crate::analysis::EnvelopeShape {
        use crate::analysis::EnvelopeShape;
        match &self.shape {
            Shape::FrontLike { direction, .. } => EnvelopeShape::Directional(direction.clone()),
            Shape::TwoSided { direction, .. } => EnvelopeShape::TwoSided(direction.clone()),
            _ => EnvelopeShape::Radial,
        }
    }

    /// Builds `(u0, v0)` at `t = 0`.
    pub fn build(&self, grid: &Grid) -> Result<State> {
        let grid = Arc::new(grid.clone());
        if let Shape::Custom { path } = &self.shape {
            let s = snapshot::read_snapshot(path)?;
            if s.grid() != grid.as_ref() {
                return Err(Error::config("initial.shape.path", "snapshot grid differs from the configured grid"));
            }
            return State::new(s.u, s.v, 0.0);
        }
        let dim = grid.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut u = Vec::with_capacity(grid.len());
        let mut v = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = grid.point(i);
            let p = self.shape.profile(&x[..dim]);
            let factor = if self.noise > 0.0 && p > 0.0 {
                1.0 + self.noise * rng.gen_range(-1.0..1.0)
            } else {
                1.0
            };
            u.push(self.amplitude * p * factor);
            v.push(self.v_amplitude * p);
        }
        State::new(Field::from_values(grid.clone(), u)?, Field::from_values(grid, v)?, 0.0)
    }

    /// Class predicate evaluated on the grid.
    pub fn check_membership(&self, state: &State) -> Result<()> {
        let grid = state.grid();
        let dim = grid.dim();
        let (u, v) = (state.u.values(), state.v.values());
        if u.iter().chain(v).any(|x| *x < 0.0) {
            return Err(Error::Domain("initial data must be non-negative".into()));
        }
        let fail = |m: &str| Err(Error::Domain(m.to_string()));
        match &self.shape {
            Shape::CompactBump { .. } | Shape::Custom { .. } => {
                if !u.iter().any(|x| *x > 0.0) {
                    return fail("support of u0 is empty");
                }
                let on_wall = (0..grid.len()).any(|i| {
                    let idx = grid.multi_index(i);
                    (0..dim).any(|a| idx[a] == 0 || idx[a] == grid.n()[a] - 1) && (u[i] > 0.0 || v[i] > 0.0)
                });
                if on_wall {
                    return fail("support touches the boundary");
                }
            }
            Shape::FrontLike { direction, .. } => {
                let (lo, hi) = projection_range(grid, direction);
                let mut behind = f64::INFINITY;
                let mut ahead: f64 = 0.0;
                for i in 0..grid.len() {
                    let x = grid.point(i);
                    let s = dot(&x[..dim], direction);
                    if s <= lo + 0.05 * (hi - lo) {
                        behind = behind.min(u[i]);
                    }
                    if s >= hi - 0.05 * (hi - lo) {
                        ahead = ahead.max(u[i]);
                    }
                }
                if !(behind > 0.0 && ahead == 0.0) {
                    return fail("front-like data must be positive behind and vanish ahead");
                }
            }
            Shape::TwoSided { direction, half_width, .. } => {
                let mut inside = f64::INFINITY;
                let mut far: f64 = 0.0;
                let (lo, hi) = projection_range(grid, direction);
                for i in 0..grid.len() {
                    let x = grid.point(i);
                    let s = dot(&x[..dim], direction);
                    if s.abs() < 0.5 * half_width {
                        inside = inside.min(u[i]);
                    }
                    if s <= lo + 0.05 * (hi - lo) || s >= hi - 0.05 * (hi - lo) {
                        far = far.max(u[i]);
                    }
                }
                if !(inside > 0.0 && far == 0.0) {
                    return fail("two-sided data must be positive on the slab and vanish far from it");
                }
            }
        }
        Ok(())
    }
}
