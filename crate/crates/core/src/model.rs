//! Domain types shared by the solver, the analysis monitors and the harness.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::FrontTrace;
use crate::error::{Error, Result};
use crate::solver::SchemeConfig;

/// Undershoot below zero that is treated as round-off and clipped.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// The five constants of the chemotaxis system plus the spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Chemotactic sensitivity.
    pub chi: f64,
    /// Intrinsic growth rate.
    pub a: f64,
    /// Logistic damping.
    pub b: f64,
    /// Chemical decay rate.
    pub lambda: f64,
    /// Chemical production rate.
    pub mu: f64,
    /// Spatial dimension.
    pub dim: usize,
}

impl Params {
    pub fn new(chi: f64, a: f64, b: f64, lambda: f64, mu: f64, dim: usize) -> Result<Self> {
        let p = Params {
            chi,
            a,
            b,
            lambda,
            mu,
            dim,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("a", self.a), ("b", self.b), ("lambda", self.lambda), ("mu", self.mu)];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.chi.is_finite() && self.chi >= 0.0) {
            return Err(Error::InvalidParams(format!("chi must be nonnegative, got {}", self.chi)));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidParams(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        Ok(())
    }

    /// `b > N mu chi / 4`, the hypothesis under which the spreading speed is `2 sqrt(a)`.
    pub fn damping_condition(&self) -> bool {
        damping_condition(self)
    }

    pub fn steady_state(&self) -> (f64, f64) {
        steady_state(self)
    }

    /// Margin `b - N mu chi / 4` by which the damping condition holds.
    pub fn damping_margin(&self) -> f64 {
        self.b - self.dim as f64 * self.mu * self.chi / 4.0
    }
}

pub fn damping_condition(params: &Params) -> bool {
    params.damping_margin() > 0.0
}

/// Positive constant steady state `(a/b, mu a / (lambda b))`.
pub fn steady_state(params: &Params) -> (f64, f64) {
    let u = params.a / params.b;
    (u, params.mu * u / params.lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Neumann,
    Periodic,
}

/// Uniform tensor grid on a box.
///
/// Neumann grids are vertex centred and include both endpoints; periodic grids
/// omit the right endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDef", into = "GridDef")]
pub struct Grid {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
    dx: Vec<f64>,
    boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
    pub boundary: Boundary,
}

impl TryFrom<GridDef> for Grid {
    type Error = Error;

    fn try_from(def: GridDef) -> Result<Self> {
        Grid::new(def.lo, def.hi, def.n, def.boundary)
    }
}

impl From<Grid> for GridDef {
    fn from(g: Grid) -> Self {
        GridDef {
            lo: g.lo,
            hi: g.hi,
            n: g.n,
            boundary: g.boundary,
        }
    }
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>, boundary: Boundary) -> Result<Self> {
        let dim = lo.len();
        if !(1..=3).contains(&dim) || hi.len() != dim || n.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "axis counts disagree or out of range: lo {}, hi {}, n {}",
                lo.len(),
                hi.len(),
                n.len()
            )));
        }
        let mut dx = Vec::with_capacity(dim);
        for axis in 0..dim {
            if !(lo[axis].is_finite() && hi[axis].is_finite() && hi[axis] > lo[axis]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need hi > lo, got [{}, {}]",
                    lo[axis], hi[axis]
                )));
            }
            if n[axis] < 8 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need at least 8 points, got {}",
                    n[axis]
                )));
            }
            let cells = match boundary {
                Boundary::Neumann => n[axis] - 1,
                Boundary::Periodic => n[axis],
            };
            dx.push((hi[axis] - lo[axis]) / cells as f64);
        }
        Ok(Grid {
            dim,
            lo,
            hi,
            n,
            dx,
            boundary,
        })
    }

    /// Same extent and point count on every axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Grid::new(vec![lo; dim], vec![hi; dim], vec![n; dim], boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_dx(&self) -> f64 {
        self.dx.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_dx(&self) -> f64 {
        self.dx.iter().copied().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.iter().product()
    }

    /// Row-major stride of `axis` (the last axis is contiguous).
    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.dx[axis]
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.n[axis];
            flat /= self.n[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .zip(&self.n)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Physical coordinates of a grid point (unused axes are zero).
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coord(axis, idx[axis]);
        }
        x
    }

    /// Index of the neighbour `offset` points away along an axis, with the
    /// boundary closure applied (mirror for Neumann, wrap for periodic).
    pub fn neighbor_along(&self, axis: usize, i: usize, offset: isize) -> usize {
        let n = self.n[axis] as isize;
        let j = i as isize + offset;
        match self.boundary {
            Boundary::Periodic => j.rem_euclid(n) as usize,
            Boundary::Neumann => {
                let last = n - 1;
                let mut j = j;
                // Mirror about the end points; offsets are small so one fold suffices.
                if j < 0 {
                    j = -j;
                }
                if j > last {
                    j = 2 * last - j;
                }
                j.clamp(0, last) as usize
            }
        }
    }

    /// Trapezoidal weight of a point for integrals over the box.
    pub fn quadrature_weight(&self, flat: usize) -> f64 {
        let mut w = self.cell_volume();
        if self.boundary == Boundary::Neumann {
            let idx = self.multi_index(flat);
            for axis in 0..self.dim {
                if idx[axis] == 0 || idx[axis] == self.n[axis] - 1 {
                    w *= 0.5;
                }
            }
        }
        w
    }

    /// Flat index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let mut idx = [0usize; 3];
        for axis in 0..self.dim {
            let s = ((x[axis] - self.lo[axis]) / self.dx[axis]).round();
            idx[axis] = s.clamp(0.0, (self.n[axis] - 1) as f64) as usize;
        }
        self.flat_index(&idx[..self.dim])
    }

    /// Upper coordinate actually covered by grid points along `axis`.
    pub fn last_coord(&self, axis: usize) -> f64 {
        self.coord(axis, self.n[axis] - 1)
    }

    /// Same box with every axis coarsened by an integer factor.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        let n = self
            .n
            .iter()
            .map(|&n| match self.boundary {
                Boundary::Neumann => (n - 1) / factor + 1,
                Boundary::Periodic => n / factor,
            })
            .collect();
        Grid::new(self.lo.clone(), self.hi.clone(), n, self.boundary)
    }
}

/// Scalar samples on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        Field {
            grid,
            values: vec![0.0; len],
        }
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let len = grid.len();
        Field {
            grid,
            values: vec![value; len],
        }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field { grid, values })
    }

    /// Samples `f` at every grid point; `f` sees a `dim`-length coordinate slice.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..dim])
            })
            .collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Trapezoidal integral over the box.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.quadrature_weight(i))
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Sup-norm distance to another field on the same grid.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// One time slice `(u, v)` of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    pub fn new(u: Field, v: Field, t: f64) -> Result<Self> {
        if !u.same_grid(&v) {
            return Err(Error::GridMismatch);
        }
        Ok(State { u, v, t })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Clips round-off undershoot to zero; undershoot beyond
    /// [`NEGATIVITY_TOLERANCE`] is a scheme failure. Returns the clip count.
    pub fn enforce_nonnegative(&mut self) -> Result<usize> {
        let t = self.t;
        let mut clipped = 0;
        for field in [&mut self.u, &mut self.v] {
            for (index, value) in field.values.iter_mut().enumerate() {
                if *value < 0.0 {
                    if *value < -NEGATIVITY_TOLERANCE {
                        return Err(Error::SchemeFailure {
                            t,
                            min: *value,
                            index,
                        });
                    }
                    *value = 0.0;
                    clipped += 1;
                }
            }
        }
        Ok(clipped)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.v.is_finite()
    }
}

/// Summary statistics recorded at each sampling time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub t: f64,
    pub max_u: f64,
    pub min_u: f64,
    pub max_v: f64,
    pub min_v: f64,
    pub mass_u: f64,
    pub max_grad_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Termination {
    HorizonReached,
    /// `t` is the last time reached; the message names the failing step.
    StepFailure { t: f64, message: String },
}

/// Everything a run leaves behind apart from the full field history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub params: Params,
    pub grid: Grid,
    pub scheme: SchemeConfig,
    pub steps: usize,
    pub dt_min: f64,
    pub dt_max: f64,
    pub clipped: usize,
    pub snapshots: Vec<SnapshotStats>,
    pub fronts: Vec<FrontTrace>,
    /// Last sampling time at which every front kept its clearance margin.
    pub trusted_until: f64,
    pub warnings: Vec<String>,
    pub termination: Termination,
    /// States retained at the sampling cadence when requested.
    #[serde(skip)]
    pub states: Vec<State>,
}
