use crate::analysis::front::{front_position, FrontDirection, FrontSample, FrontTrace};
use crate::error::{Error, Result};
use crate::model::{Params, RunRecord, SnapshotStats, State, Termination};
use crate::solver::operators::gradient_norm_sq;
use crate::solver::{admissible_dt, step_with_dt, SchemeConfig, StepReport};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub horizon: f64,
    /// Spacing of sampling times; steps are shortened to land on them.
    pub cadence: f64,
    pub thresholds: Vec<f64>,
    pub directions: Vec<FrontDirection>,
    /// Fraction of the box width a front must keep from the boundary to be trusted.
    pub clearance: f64,
    pub retain_states: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            horizon: 10.0,
            cadence: 0.5,
            thresholds: vec![],
            directions: vec![],
            clearance: 0.1,
            retain_states: false,
        }
    }
}

/// Hooks called during a run. Errors abort the run.
pub trait Observer {
    fn after_step(&mut self, _prev: &State, _next: &State, _report: &StepReport) -> Result<()> {
        Ok(())
    }

    fn sample(&mut self, _state: &State) -> Result<()> {
        Ok(())
    }
}

fn stats(state: &State) -> SnapshotStats {
    let g2 = gradient_norm_sq(&state.v);
    SnapshotStats {
        t: state.t,
        max_u: state.u.max(),
        min_u: state.u.min(),
        max_v: state.v.max(),
        min_v: state.v.min(),
        mass_u: state.u.integral(),
        max_grad_v: g2.max().max(0.0).sqrt(),
    }
}

struct Recorder<'a> {
    options: &'a RunOptions,
    record: RunRecord,
    warned: Vec<bool>,
    broken: bool,
}

impl Recorder<'_> {
    fn sample(&mut self, state: &State, observers: &mut [&mut dyn Observer]) -> Result<()> {
        self.record.snapshots.push(stats(state));
        let grid = state.grid();
        let mut all_trusted = true;
        for (k, trace) in self.record.fronts.iter_mut().enumerate() {
            match front_position(&state.u, trace.threshold, &trace.direction) {
                Ok(position) => {
                    let trusted = trace.direction.clears_boundary(grid, position, self.options.clearance);
                    if !trusted && !self.warned[k] {
                        self.warned[k] = true;
                        self.record.warnings.push(format!(
                            "front {} at threshold {} within clearance of the boundary from t = {}",
                            trace.direction.label(),
                            trace.threshold,
                            state.t
                        ));
                    }
                    all_trusted &= trusted;
                    trace.samples.push(FrontSample {
                        t: state.t,
                        position,
                        trusted,
                    });
                }
                Err(Error::NoFront { .. }) => all_trusted = false,
                Err(e) => return Err(e),
            }
        }
        if all_trusted && !self.broken {
            self.record.trusted_until = state.t;
        } else {
            self.broken = true;
        }
        if self.options.retain_states {
            self.record.states.push(state.clone());
        }
        for o in observers.iter_mut() {
            o.sample(state)?;
        }
        Ok(())
    }
}

/// Integrates from `initial` to `options.horizon`, sampling at the cadence.
///
/// Numerical failures (blow-up, negativity beyond tolerance) end the run
/// early and are reported through [`RunRecord::termination`].
pub fn run(
    initial: State,
    params: &Params,
    scheme: &SchemeConfig,
    options: &RunOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord> {
    params.validate()?;
    let grid = initial.grid().clone();
    if params.dim != grid.dim() {
        return Err(Error::config(
            "params.dim",
            format!("{} does not match the {}-d grid", params.dim, grid.dim()),
        ));
    }
    scheme.validate(grid.dim())?;
    if !(options.horizon >= 0.0 && options.horizon.is_finite()) {
        return Err(Error::config("horizon", format!("must be non-negative, got {}", options.horizon)));
    }
    if !(options.cadence > 0.0) {
        return Err(Error::config("observe.cadence", format!("must be positive, got {}", options.cadence)));
    }
    for d in &options.directions {
        if let FrontDirection::Ray(xi) = d {
            if xi.len() != grid.dim() {
                return Err(Error::config("analysis.directions", "ray dimension does not match the grid"));
            }
        }
    }

    let mut fronts = Vec::new();
    for d in &options.directions {
        for &th in &options.thresholds {
            fronts.push(FrontTrace::new(th, d.clone()));
        }
    }
    let mut rec = Recorder {
        options,
        warned: vec![false; fronts.len()],
        broken: false,
        record: RunRecord {
            params: *params,
            grid,
            scheme: scheme.clone(),
            steps: 0,
            dt_min: f64::INFINITY,
            dt_max: 0.0,
            clipped: 0,
            snapshots: vec![],
            fronts,
            trusted_until: initial.t,
            warnings: vec![],
            termination: Termination::HorizonReached,
            states: vec![],
        },
    };

    let t0 = initial.t;
    let end = t0 + options.horizon;
    let mut state = initial;
    rec.sample(&state, observers)?;

    let mut k = 1usize;
    while state.t < end {
        let target = (t0 + k as f64 * options.cadence).min(end);
        while state.t < target {
            let mut dt = admissible_dt(&state, params, scheme);
            let landing = target - state.t <= dt * (1.0 + 1e-9);
            if landing {
                dt = target - state.t;
            }
            match step_with_dt(&state, params, scheme, dt) {
                Ok((mut next, report)) => {
                    if landing {
                        next.t = target;
                    }
                    for o in observers.iter_mut() {
                        o.after_step(&state, &next, &report)?;
                    }
                    let r = &mut rec.record;
                    r.steps += 1;
                    r.dt_min = r.dt_min.min(dt);
                    r.dt_max = r.dt_max.max(dt);
                    r.clipped += report.clipped;
                    state = next;
                }
                Err(e) if e.is_numerical() => {
                    rec.record.termination = Termination::StepFailure {
                        t: state.t,
                        message: e.to_string(),
                    };
                    rec.record.warnings.push(format!("integration stopped: {e}"));
                    return Ok(rec.record);
                }
                Err(e) => return Err(e),
            }
        }
        rec.sample(&state, observers)?;
        k += 1;
    }
    if rec.record.steps == 0 {
        rec.record.dt_min = 0.0;
    }
    Ok(rec.record)
}
