//! Closed-form constants of the spreading-speed argument.
//!
//! Everything here is a pure function of its inputs. The bundle gathers the
//! quantities that depend on the speed margin `eps`: the reduced growth rate
//! `abar`, the half-width `ell` of the cell on which the principal Dirichlet
//! eigenproblem is posed, and the uniform lower bound on the eigenvalue.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

const RANGE_SLACK: f64 = 1e-12;

/// Bisection tolerance on the persistence radius.
pub const RADIUS_TOLERANCE: f64 = 1e-9;

/// Spreading speed `2 sqrt(a)` of the Fisher-KPP equation.
pub fn kpp_speed(a: f64) -> f64 {
    2.0 * a.sqrt()
}

/// Speed `(k^2 + a) / k` of the exponential envelope `exp(-k (x.xi - c t))`.
pub fn envelope_speed(k: f64, a: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("envelope decay rate must be positive, got {k}")));
    }
    Ok((k * k + a) / k)
}

fn check_margin(eps: f64, a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("growth rate must be positive, got {a}")));
    }
    if !(eps > 0.0 && eps < a.sqrt()) {
        return Err(Error::Domain(format!(
            "speed margin must lie in (0, sqrt(a)) = (0, {}), got {eps}",
            a.sqrt()
        )));
    }
    Ok(())
}

/// Smallest `abar` with `4 abar - c^2 >= eps sqrt(a)` for every `|c| <= 2 sqrt(a) - eps`.
pub fn choose_abar(eps: f64, a: f64) -> Result<f64> {
    check_margin(eps, a)?;
    let c_max = kpp_speed(a) - eps;
    Ok((c_max * c_max + eps * a.sqrt()) / 4.0)
}

/// Half-width `2 pi sqrt(N) / (eps sqrt(a))^(1/2)` of the eigenvalue cell.
pub fn cell_halfwidth(eps: f64, a: f64, dim: usize) -> Result<f64> {
    check_margin(eps, a)?;
    check_dim(dim)?;
    Ok(2.0 * PI * (dim as f64).sqrt() / (eps * a.sqrt()).sqrt())
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    Ok(())
}

fn check_speed(c: f64, eps: f64, a: f64) -> Result<()> {
    let c_max = kpp_speed(a) - eps;
    if !(c.abs() <= c_max + RANGE_SLACK) {
        return Err(Error::Domain(format!("frame speed |{c}| exceeds 2 sqrt(a) - eps = {c_max}")));
    }
    Ok(())
}

/// `(4 abar - c^2 - N pi^2 / l^2) / 4`.
pub fn principal_eigenvalue(c: f64, abar: f64, eps: f64, a: f64, dim: usize) -> Result<f64> {
    check_speed(c, eps, a)?;
    let ell = cell_halfwidth(eps, a, dim)?;
    Ok((4.0 * abar - c * c - dim as f64 * PI * PI / (ell * ell)) / 4.0)
}

/// `exp(-(c/2) xi.x) prod cos(pi x_i / (2 l))` on the closed cell `|x_i| <= l`.
pub fn eigenfunction(x: &[f64], xi: &[f64], c: f64, eps: f64, a: f64, dim: usize) -> Result<f64> {
    let ell = cell_halfwidth(eps, a, dim)?;
    check_speed(c, eps, a)?;
    eigenfunction_on_cell(x, xi, c, ell)
}

fn check_unit(xi: &[f64]) -> Result<()> {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("direction must be a unit vector, |xi| = {norm}")));
    }
    Ok(())
}

fn eigenfunction_on_cell(x: &[f64], xi: &[f64], c: f64, ell: f64) -> Result<f64> {
    if x.len() != xi.len() {
        return Err(Error::Domain("point and direction have different dimensions".into()));
    }
    check_unit(xi)?;
    if let Some(xi_out) = x.iter().find(|v| v.abs() > ell * (1.0 + 1e-14)) {
        return Err(Error::Domain(format!("point component {xi_out} lies outside the cell |x_i| <= {ell}")));
    }
    Ok(eigenfunction_unchecked(x, xi, c, ell))
}

fn eigenfunction_unchecked(x: &[f64], xi: &[f64], c: f64, ell: f64) -> f64 {
    let dot: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
    let cosines: f64 = x.iter().map(|&v| (PI * v / (2.0 * ell)).cos()).product();
    (-0.5 * c * dot).exp() * cosines
}

/// Smallest `T >= 1` with `exp(-lambda T) M <= eta`.
pub fn persistence_time(eta: f64, big_m: f64, lambda: f64) -> f64 {
    ((big_m / eta).ln() / lambda).max(1.0)
}

/// Area of the unit sphere `S^{N-1}`.
fn sphere_area(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Gaussian tail masses outside the ball of radius `r`:
/// `(int e^{-|z|^2} dz, int |z| e^{-|z|^2} dz)` over `R^N \ B_r`.
///
/// A nonpositive radius means the whole space.
pub fn gaussian_tails(r: f64, dim: usize) -> (f64, f64) {
    let start = r.max(0.0);
    // e^{-r^2} is below 1e-60 twelve units past the start.
    let end = start + 12.0;
    let n = dim as i32;
    let plain = quadrature::integrate(|s| s.powi(n - 1) * (-s * s).exp(), start, end, 1e-14);
    let weighted = quadrature::integrate(|s| s.powi(n) * (-s * s).exp(), start, end, 1e-14);
    let area = sphere_area(dim);
    (area * plain.integral, area * weighted.integral)
}

fn tail_radius(big_l: f64, t: f64, a: f64) -> f64 {
    (big_l - 4.0 * t * a.sqrt()) / (2.0 * (2.0 * t).sqrt())
}

/// Smallest `L >= l` (with the ball `B_L` covering the cell) whose Gaussian
/// tails outside radius `(L - 4 T sqrt(a)) / (2 sqrt(2T))` are both at most `eta`.
pub fn persistence_radius(eta: f64, t: f64, a: f64, dim: usize, ell: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("T must be at least 1, got {t}")));
    }
    check_dim(dim)?;
    let ok = |big_l: f64| {
        let (p, q) = gaussian_tails(tail_radius(big_l, t, a), dim);
        p <= eta && q <= eta
    };
    // B_L contains the cube of half-width l iff L >= l sqrt(N).
    let mut lo = ell * (dim as f64).sqrt();
    if ok(lo) {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo.max(1.0);
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > RADIUS_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Bound on `v` and its gradient near a region where `u` stays small.
pub fn m_tilde(big_m: f64, lambda: f64, mu: f64, dim: usize) -> f64 {
    let pi_n = PI.powf(dim as f64 / 2.0);
    let first = 1.0 + mu * big_m / (lambda * pi_n) + mu / lambda;
    let g = mu / pi_n / lambda.sqrt() * PI.sqrt();
    let second = 1.0 + g * big_m + g;
    first.max(second)
}

/// Minimal coefficient `d = mu M / (a + lambda)` of the chemical envelope.
pub fn envelope_v_coefficient(big_m: f64, a: f64, mu: f64, lambda: f64) -> f64 {
    mu * big_m / (a + lambda)
}

/// All margin-dependent constants for one `(a, N, eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryBundle {
    pub a: f64,
    pub dim: usize,
    pub eps: f64,
    pub abar: f64,
    pub ell: f64,
    pub lambda_floor: f64,
    pub kpp_speed: f64,
}

impl TheoryBundle {
    pub fn new(a: f64, dim: usize, eps: f64) -> Result<Self> {
        let abar = choose_abar(eps, a)?;
        let ell = cell_halfwidth(eps, a, dim)?;
        Ok(TheoryBundle {
            a,
            dim,
            eps,
            abar,
            ell,
            lambda_floor: 3.0 * eps * a.sqrt() / 16.0,
            kpp_speed: kpp_speed(a),
        })
    }

    /// Largest admissible frame speed `2 sqrt(a) - eps`.
    pub fn max_frame_speed(&self) -> f64 {
        self.kpp_speed - self.eps
    }

    pub fn principal_eigenvalue(&self, c: f64) -> Result<f64> {
        principal_eigenvalue(c, self.abar, self.eps, self.a, self.dim)
    }

    pub fn eigenfunction(&self, x: &[f64], xi: &[f64], c: f64) -> Result<f64> {
        check_speed(c, self.eps, self.a)?;
        eigenfunction_on_cell(x, xi, c, self.ell)
    }

    pub fn t_of_eta(&self, eta: f64, big_m: f64, lambda: f64) -> f64 {
        persistence_time(eta, big_m, lambda)
    }

    pub fn l_of_eta(&self, eta: f64, big_m: f64, lambda: f64) -> Result<f64> {
        let t = self.t_of_eta(eta, big_m, lambda);
        persistence_radius(eta, t, self.a, self.dim, self.ell)
    }

    /// `(c, lambda(c))` minimising the eigenvalue over an evenly spaced grid
    /// of `points` admissible speeds.
    pub fn min_eigenvalue_on_grid(&self, points: usize) -> Result<(f64, f64)> {
        let c_max = self.max_frame_speed();
        let mut best = (0.0, f64::INFINITY);
        for i in 0..points.max(2) {
            let c = -c_max + 2.0 * c_max * i as f64 / (points.max(2) - 1) as f64;
            let l = self.principal_eigenvalue(c)?;
            if l < best.1 {
                best = (c, l);
            }
        }
        Ok(best)
    }

    /// Central-difference residual `|Lap phi + c xi.grad phi + abar phi - lambda phi|` at `x`.
    pub fn eigen_residual(&self, x: &[f64], xi: &[f64], c: f64, h: f64) -> Result<f64> {
        let lambda = self.principal_eigenvalue(c)?;
        check_unit(xi)?;
        let phi = |p: &[f64]| eigenfunction_unchecked(p, xi, c, self.ell);
        let centre = phi(x);
        let mut lap = 0.0;
        let mut drift = 0.0;
        let mut p = x.to_vec();
        for axis in 0..x.len() {
            p[axis] = x[axis] + h;
            let plus = phi(&p);
            p[axis] = x[axis] - h;
            let minus = phi(&p);
            p[axis] = x[axis];
            lap += (plus - 2.0 * centre + minus) / (h * h);
            drift += xi[axis] * (plus - minus) / (2.0 * h);
        }
        Ok((lap + c * drift + (self.abar - lambda) * centre).abs())
    }

    /// Observed convergence orders of the eigen-residual between consecutive
    /// steps in `steps`, using the max over `points` seeded sample points.
    pub fn eigen_residual_orders(&self, c: f64, xi: &[f64], steps: &[f64], points: usize, seed: u64) -> Result<EigenStudy> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Vec<f64>> = (0..points)
            .map(|_| (0..self.dim).map(|_| rng.gen_range(-0.7..0.7) * self.ell).collect())
            .collect();
        let mut residuals = Vec::with_capacity(steps.len());
        for &h in steps {
            let mut worst: f64 = 0.0;
            for x in &samples {
                worst = worst.max(self.eigen_residual(x, xi, c, h)?);
            }
            residuals.push(worst);
        }
        let orders = residuals
            .windows(2)
            .zip(steps.windows(2))
            .map(|(r, h)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln())
            .collect();
        Ok(EigenStudy {
            c,
            steps: steps.to_vec(),
            residuals,
            orders,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenStudy {
    pub c: f64,
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    pub orders: Vec<f64>,
}

impl EigenStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
