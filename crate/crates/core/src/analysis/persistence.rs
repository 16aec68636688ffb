//! Empirical lower bound of the density on a ball once it has been seeded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Field, RunRecord, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceOptions {
    pub eta: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Samples before this time cannot trigger.
    pub earliest: f64,
    /// Time after the trigger before the floor is required to have settled.
    pub burn_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub eta: f64,
    pub radius: f64,
    /// First sampled time from `earliest` on at which the ball supremum reaches `eta`.
    pub trigger: Option<f64>,
    /// Infimum over the ball and over all sampled times from the trigger on.
    pub delta_meas: Option<f64>,
    /// Ball infimum at each sampled time from the trigger on.
    pub series: Vec<(f64, f64)>,
    /// Ball infimum at the last sample.
    pub late_floor: Option<f64>,
    /// Smallest ball infimum after trigger plus burn-in.
    pub settled_min: Option<f64>,
}

impl PersistenceReport {
    /// The ball infimum never drops below half the late floor after the burn-in.
    pub fn settled(&self) -> bool {
        match (self.settled_min, self.late_floor) {
            (Some(m), Some(f)) => m >= 0.5 * f,
            _ => false,
        }
    }
}

/// `(inf, sup)` of `field` over grid points in the closed ball.
fn ball_extremes(field: &Field, center: &[f64], radius: f64) -> Option<(f64, f64)> {
    let grid = field.grid();
    let dim = grid.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &u) in field.values().iter().enumerate() {
        let x = grid.point(i);
        let r2: f64 = (0..dim).map(|d| (x[d] - center[d]).powi(2)).sum();
        if r2 <= radius * radius {
            lo = lo.min(u);
            hi = hi.max(u);
        }
    }
    lo.is_finite().then_some((lo, hi))
}

pub fn persistence_check_states(states: &[State], options: &PersistenceOptions) -> Result<PersistenceReport> {
    let first = states
        .first()
        .ok_or_else(|| Error::InsufficientHistory("no retained states".into()))?;
    let dim = first.grid().dim();
    if options.center.len() != dim {
        return Err(Error::Domain(format!(
            "ball center has {} components on a {dim}-d grid",
            options.center.len()
        )));
    }
    if !(options.eta > 0.0 && options.radius > 0.0 && options.burn_in >= 0.0) {
        return Err(Error::Domain("eta and radius must be positive, burn-in non-negative".into()));
    }
    let mut report = PersistenceReport {
        eta: options.eta,
        radius: options.radius,
        trigger: None,
        delta_meas: None,
        series: vec![],
        late_floor: None,
        settled_min: None,
    };
    for s in states {
        let (inf, sup) = ball_extremes(&s.u, &options.center, options.radius)
            .ok_or_else(|| Error::Domain("ball contains no grid point".into()))?;
        if report.trigger.is_none() && s.t >= options.earliest && sup >= options.eta {
            report.trigger = Some(s.t);
        }
        if let Some(t0) = report.trigger {
            report.series.push((s.t, inf));
            report.delta_meas = Some(report.delta_meas.map_or(inf, |d: f64| d.min(inf)));
            if s.t >= t0 + options.burn_in {
                report.settled_min = Some(report.settled_min.map_or(inf, |d: f64| d.min(inf)));
            }
        }
    }
    report.late_floor = report.series.last().map(|p| p.1);
    Ok(report)
}

/// Persistence check on the states a run retained.
pub fn persistence_check(run: &RunRecord, options: &PersistenceOptions) -> Result<PersistenceReport> {
    persistence_check_states(&run.states, options)
}
