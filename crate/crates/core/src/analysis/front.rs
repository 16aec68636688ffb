use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Field, Grid};

/// Where a front is looked for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontDirection {
    /// Along the ray `s xi` through the origin; the position is the largest `s`.
    Ray(Vec<f64>),
    /// Radial profile: max of the field over each sphere, in bins of width `dx`.
    Radial,
}

impl FrontDirection {
    pub fn label(&self) -> String {
        match self {
            FrontDirection::Radial => "radial".to_string(),
            FrontDirection::Ray(xi) => {
                let parts: Vec<String> = xi.iter().map(|v| format!("{v}")).collect();
                format!("ray({})", parts.join(";"))
            }
        }
    }

    /// Whether a front at `position` keeps `clearance` (fraction of box width)
    /// from every boundary.
    pub fn clears_boundary(&self, grid: &Grid, position: f64, clearance: f64) -> bool {
        let dim = grid.dim();
        match self {
            FrontDirection::Ray(xi) => (0..dim).all(|axis| {
                let margin = clearance * (grid.hi()[axis] - grid.lo()[axis]);
                let x = position * xi[axis];
                x >= grid.lo()[axis] + margin && x <= grid.hi()[axis] - margin
            }),
            FrontDirection::Radial => (0..dim).all(|axis| {
                let margin = clearance * (grid.hi()[axis] - grid.lo()[axis]);
                position <= grid.hi()[axis].min(-grid.lo()[axis]) - margin
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontSample {
    pub t: f64,
    pub position: f64,
    pub trusted: bool,
}

/// Time series of front positions at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrace {
    pub threshold: f64,
    pub direction: FrontDirection,
    pub samples: Vec<FrontSample>,
}

impl FrontTrace {
    pub fn new(threshold: f64, direction: FrontDirection) -> Self {
        FrontTrace {
            threshold,
            direction,
            samples: Vec::new(),
        }
    }
}

/// Outermost crossing of `profile` (pairs of increasing coordinate and value)
/// through `threshold`, linearly interpolated.
fn outermost_crossing(profile: &[(f64, f64)], threshold: f64) -> Result<f64> {
    let last = profile
        .iter()
        .rposition(|&(_, u)| u >= threshold)
        .ok_or(Error::NoFront { threshold })?;
    let (s0, u0) = profile[last];
    match profile.get(last + 1) {
        None => Ok(s0),
        Some(&(s1, u1)) => Ok(s0 + (u0 - threshold) / (u0 - u1) * (s1 - s0)),
    }
}

/// Front position of `field` at `threshold` in `direction`.
///
/// For one-dimensional rays the grid points themselves form the profile, so
/// grid-aligned shifts move the position by exactly the shift.
pub fn front_position(field: &Field, threshold: f64, direction: &FrontDirection) -> Result<f64> {
    let grid = field.grid();
    let profile = match direction {
        FrontDirection::Ray(xi) => {
            if xi.len() != grid.dim() {
                return Err(Error::Domain(format!(
                    "ray direction has {} components on a {}-d grid",
                    xi.len(),
                    grid.dim()
                )));
            }
            if grid.dim() == 1 {
                ray_profile_1d(field, xi[0])
            } else {
                ray_profile(field, xi)
            }
        }
        FrontDirection::Radial => radial_profile(field),
    };
    outermost_crossing(&profile, threshold)
}

fn ray_profile_1d(field: &Field, sign: f64) -> Vec<(f64, f64)> {
    let grid = field.grid();
    let mut profile: Vec<(f64, f64)> = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, &u)| (sign * grid.coord(0, i), u))
        .collect();
    if sign < 0.0 {
        profile.reverse();
    }
    profile
}

fn ray_profile(field: &Field, xi: &[f64]) -> Vec<(f64, f64)> {
    let grid = field.grid();
    let h = grid.min_dx();
    // Extent of the ray inside the box, in both directions.
    let mut s_max = f64::INFINITY;
    let mut s_min = f64::NEG_INFINITY;
    for (axis, &d) in xi.iter().enumerate() {
        if d.abs() < 1e-15 {
            continue;
        }
        let (a, b) = (grid.lo()[axis] / d, grid.last_coord(axis) / d);
        s_max = s_max.min(a.max(b));
        s_min = s_min.max(a.min(b));
    }
    let k_lo = (s_min / h).ceil() as i64;
    let k_hi = (s_max / h).floor() as i64;
    (k_lo..=k_hi)
        .map(|k| {
            let s = k as f64 * h;
            let x: Vec<f64> = xi.iter().map(|d| s * d).collect();
            (s, interpolate(field, &x))
        })
        .collect()
}

fn radial_profile(field: &Field) -> Vec<(f64, f64)> {
    let grid = field.grid();
    let h = grid.min_dx();
    let reach = (0..grid.dim())
        .map(|axis| grid.last_coord(axis).min(-grid.lo()[axis]))
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let bins = (reach / h).floor() as usize + 1;
    let mut maxima = vec![f64::NEG_INFINITY; bins];
    for (i, &u) in field.values().iter().enumerate() {
        let x = grid.point(i);
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let bin = (r / h).round() as usize;
        if bin < bins {
            maxima[bin] = maxima[bin].max(u);
        }
    }
    maxima
        .into_iter()
        .enumerate()
        .filter(|(_, m)| m.is_finite())
        .map(|(b, m)| (b as f64 * h, m))
        .collect()
}

/// Multilinear interpolation; points outside the box are clamped to it.
pub fn interpolate(field: &Field, x: &[f64]) -> f64 {
    let grid = field.grid();
    let dim = grid.dim();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for axis in 0..dim {
        let s = ((x[axis] - grid.lo()[axis]) / grid.dx()[axis]).clamp(0.0, (grid.n()[axis] - 1) as f64);
        let i = (s.floor() as usize).min(grid.n()[axis] - 1);
        base[axis] = i;
        frac[axis] = s - i as f64;
    }
    let mut total = 0.0;
    for corner in 0..(1usize << dim) {
        let mut weight = 1.0;
        let mut idx = [0usize; 3];
        for axis in 0..dim {
            let up = (corner >> axis) & 1 == 1;
            weight *= if up { frac[axis] } else { 1.0 - frac[axis] };
            idx[axis] = if up {
                grid.neighbor_along(axis, base[axis], 1)
            } else {
                base[axis]
            };
        }
        if weight != 0.0 {
            total += weight * field.values()[grid.flat_index(&idx[..dim])];
        }
    }
    total
}

/// Least-squares line through the trailing part of a front trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub intercept: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub residual_rms: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Fits `position = speed t + intercept` over the trusted samples in the
/// trailing `window_fraction` of the trace's time span.
pub fn fit_speed(trace: &FrontTrace, window_fraction: f64) -> Result<SpeedFit> {
    let trusted: Vec<&FrontSample> = trace.samples.iter().filter(|s| s.trusted).collect();
    let got = trusted.len();
    let (first, last) = match (trusted.first(), trusted.last()) {
        (Some(f), Some(l)) => (f.t, l.t),
        _ => return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES, got }),
    };
    let t_start = last - window_fraction.clamp(0.0, 1.0) * (last - first);
    let window: Vec<(f64, f64)> = trusted
        .iter()
        .filter(|s| s.t >= t_start - 1e-12 * last.abs().max(1.0))
        .map(|s| (s.t, s.position))
        .collect();
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: window.len(),
        });
    }
    let n = window.len() as f64;
    let mt = window.iter().map(|p| p.0).sum::<f64>() / n;
    let mp = window.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mt) * (p.1 - mp)).sum();
    let speed = sxy / sxx;
    let intercept = mp - speed * mt;
    let rss: f64 = window.iter().map(|p| (p.1 - speed * p.0 - intercept).powi(2)).sum();
    Ok(SpeedFit {
        speed,
        intercept,
        t_start: window[0].0,
        t_end: window[window.len() - 1].0,
        residual_rms: (rss / n).sqrt(),
        samples: window.len(),
    })
}
