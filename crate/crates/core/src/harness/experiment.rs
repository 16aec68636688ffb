//! Running a configuration with the in-run monitors attached.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    envelope_check, fit_speed, supersolution_residual, Envelope, QuadraticSign, SpeedFit,
};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::model::{Params, RunRecord, State};
use crate::solver::{run, DtPolicy, Observer, RunOptions, SchemeConfig, StepReport};

/// Largest residual of `w_t <= Lap w + a w` over every step, plus the negative control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max_natural: f64,
    pub t_natural: f64,
    pub max_flipped: f64,
}

impl Default for ResidualStats {
    fn default() -> Self {
        ResidualStats {
            max_natural: f64::NEG_INFINITY,
            t_natural: 0.0,
            max_flipped: f64::NEG_INFINITY,
        }
    }
}

/// Observer evaluating the residual and the envelope on every step.
pub struct TrajectoryMonitor {
    params: Params,
    residual_start: f64,
    pub residual: ResidualStats,
    pub envelope: Option<Envelope>,
    pub envelope_violation: f64,
    pub envelope_violation_t: f64,
}

impl TrajectoryMonitor {
    pub fn new(params: Params, envelope: Option<Envelope>) -> Self {
        TrajectoryMonitor {
            params,
            residual_start: 0.0,
            residual: ResidualStats::default(),
            envelope,
            envelope_violation: 0.0,
            envelope_violation_t: 0.0,
        }
    }

    /// Ignores residuals of steps starting before `t`.
    pub fn with_residual_start(mut self, t: f64) -> Self {
        self.residual_start = t;
        self
    }
}

impl Observer for TrajectoryMonitor {
    fn after_step(&mut self, prev: &State, next: &State, _report: &StepReport) -> Result<()> {
        if prev.t >= self.residual_start {
            let r = supersolution_residual(prev, next, &self.params, QuadraticSign::Natural)?.max();
            if r > self.residual.max_natural {
                self.residual.max_natural = r;
                self.residual.t_natural = prev.t;
            }
            let f = supersolution_residual(prev, next, &self.params, QuadraticSign::Flipped)?.max();
            self.residual.max_flipped = self.residual.max_flipped.max(f);
        }
        if let Some(env) = &self.envelope {
            let v = envelope_check(next, &self.params, env)?.max_violation();
            if v > self.envelope_violation {
                self.envelope_violation = v;
                self.envelope_violation_t = next.t;
            }
        }
        Ok(())
    }
}

/// Snapshot `a` at a sampling time and, when a step followed, `b` one step later.
#[derive(Debug, Clone)]
pub struct SnapshotPair {
    pub a: State,
    pub b: Option<State>,
}

/// Keeps every `every`-th sample together with the state one step later.
pub struct SnapshotCollector {
    every: usize,
    count: usize,
    pending: bool,
    pub pairs: Vec<SnapshotPair>,
}

impl SnapshotCollector {
    pub fn new(every: usize) -> Self {
        SnapshotCollector {
            every,
            count: 0,
            pending: false,
            pairs: vec![],
        }
    }
}

impl Observer for SnapshotCollector {
    fn sample(&mut self, state: &State) -> Result<()> {
        if self.every > 0 && self.count.is_multiple_of(self.every) {
            self.pairs.push(SnapshotPair {
                a: state.clone(),
                b: None,
            });
            self.pending = true;
        }
        self.count += 1;
        Ok(())
    }

    fn after_step(&mut self, _prev: &State, next: &State, _report: &StepReport) -> Result<()> {
        if self.pending {
            if let Some(last) = self.pairs.last_mut() {
                last.b = Some(next.clone());
            }
            self.pending = false;
        }
        Ok(())
    }
}

/// Tolerance `tau = 3 C (dx^2 + dt)` from a least-squares fit of the residual
/// maxima against `dx^2 + dt` across refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `(dx, dt, max residual)` per level, finest first.
    pub levels: Vec<(f64, f64, f64)>,
    pub constant: f64,
    pub tau_disc: f64,
}

pub fn calibrate_constant(levels: &[(f64, f64, f64)]) -> Calibration {
    let (mut num, mut den) = (0.0, 0.0);
    for &(dx, dt, r) in levels {
        let h = dx * dx + dt;
        num += r.max(0.0) * h;
        den += h * h;
    }
    let constant = if den > 0.0 { num / den } else { 0.0 };
    let (dx, dt, _) = levels[0];
    Calibration {
        levels: levels.to_vec(),
        constant,
        tau_disc: 3.0 * constant * (dx * dx + dt),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionFit {
    pub direction: String,
    pub threshold: f64,
    pub fit: Option<SpeedFit>,
    pub error: Option<String>,
}

/// Everything `execute` produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: RunRecord,
    pub initial: State,
    pub residual: ResidualStats,
    pub envelope: Option<Envelope>,
    pub envelope_violation: f64,
    pub calibration: Option<Calibration>,
    pub fits: Vec<DirectionFit>,
    pub snapshots: Vec<SnapshotPair>,
}

impl Outcome {
    /// Tolerance for the residual and envelope checks, if one is known.
    pub fn tau_disc(&self, config: &RunConfig) -> Option<f64> {
        self.calibration.as_ref().map(|c| c.tau_disc).or(config.analysis.tau_disc)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExecuteOptions {
    /// Keep every sampled state in `record.states`.
    pub retain_states: bool,
    /// Snapshot cadence override; `None` uses the config.
    pub snapshot_every: Option<usize>,
}

pub fn run_options(config: &RunConfig, retain_states: bool) -> RunOptions {
    RunOptions {
        horizon: config.horizon,
        cadence: config.observe.cadence,
        thresholds: config.thresholds(),
        directions: config.directions(),
        clearance: config.observe.clearance,
        retain_states,
    }
}

pub fn fits(record: &RunRecord, window_fraction: f64) -> Vec<DirectionFit> {
    record
        .fronts
        .iter()
        .map(|trace| {
            let (fit, error) = match fit_speed(trace, window_fraction) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            DirectionFit {
                direction: trace.direction.label(),
                threshold: trace.threshold,
                fit,
                error,
            }
        })
        .collect()
}

/// Runs the configuration with residual, envelope and snapshot monitors.
pub fn execute(config: &RunConfig, options: &ExecuteOptions) -> Result<Outcome> {
    config.validate()?;
    let initial = config.initial.build(&config.grid)?;
    let envelope = Envelope::minimal(&initial, &config.params, config.analysis.k, config.initial.envelope_shape())?;
    let mut monitor = TrajectoryMonitor::new(config.params, Some(envelope.clone()))
        .with_residual_start(config.analysis.residual_start);
    let mut snaps = SnapshotCollector::new(options.snapshot_every.unwrap_or(config.observe.snapshot_every));
    let record = run(
        initial.clone(),
        &config.params,
        &config.scheme,
        &run_options(config, options.retain_states),
        &mut [&mut monitor, &mut snaps],
    )?;

    let calibration = if config.analysis.calibrate && matches!(record.termination, crate::model::Termination::HorizonReached) {
        let dx = config.grid.max_dx();
        let mut levels = vec![(dx, record.dt_max, monitor.residual.max_natural)];
        for factor in [2usize, 4] {
            let r = coarse_residual(config, factor)?;
            levels.push((dx * factor as f64, config.scheme.dt * factor as f64, r));
        }
        Some(calibrate_constant(&levels))
    } else {
        None
    };

    let fits = fits(&record, config.analysis.window_fraction);
    Ok(Outcome {
        record,
        initial,
        residual: monitor.residual,
        envelope: Some(envelope),
        envelope_violation: monitor.envelope_violation,
        calibration,
        fits,
        snapshots: snaps.pairs,
    })
}

/// Maximum residual of the same run on a grid coarsened by `factor` with a
/// fixed step `factor * dt`.
fn coarse_residual(config: &RunConfig, factor: usize) -> Result<f64> {
    let grid = &config.grid;
    for axis in 0..grid.dim() {
        let cells = match grid.boundary() {
            crate::model::Boundary::Neumann => grid.n()[axis] - 1,
            crate::model::Boundary::Periodic => grid.n()[axis],
        };
        if cells % factor != 0 {
            return Err(Error::config(
                "grid.n",
                format!("calibration needs the cell count on axis {axis} divisible by {factor}"),
            ));
        }
    }
    let coarse = grid.coarsened(factor)?;
    let initial = config.initial.build(&coarse)?;
    let scheme = SchemeConfig {
        dt: config.scheme.dt * factor as f64,
        dt_policy: DtPolicy::Fixed,
        ..config.scheme.clone()
    };
    let mut monitor = TrajectoryMonitor::new(config.params, None).with_residual_start(config.analysis.residual_start);
    let options = RunOptions {
        horizon: config.horizon,
        cadence: config.observe.cadence,
        thresholds: vec![],
        directions: vec![],
        clearance: config.observe.clearance,
        retain_states: false,
    };
    let record = run(initial, &config.params, &scheme, &options, &mut [&mut monitor])?;
    if let crate::model::Termination::StepFailure { t, message } = record.termination {
        return Err(Error::Domain(format!("calibration run at factor {factor} failed at t = {t}: {message}")));
    }
    Ok(monitor.residual.max_natural)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_fits_through_origin() {
        let levels = [(0.1, 0.05, 0.06 * 2.0), (0.2, 0.1, 0.14 * 2.0), (0.4, 0.2, 0.36 * 2.0)];
        let c = calibrate_constant(&levels);
        assert!((c.constant - 2.0).abs() < 1e-12);
        assert!((c.tau_disc - 3.0 * 2.0 * 0.06).abs() < 1e-12);
        let none = calibrate_constant(&[(0.1, 0.05, -1.0), (0.2, 0.1, -2.0)]);
        assert_eq!(none.tau_disc, 0.0);
    }
}
