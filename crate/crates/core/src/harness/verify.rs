//! Offline verdicts per theorem clause, computed from snapshot pairs only so
//! that `run` and `verify` agree byte for byte.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    envelope_check, exterior_supremum, fit_speed, front_position, interior_infimum, measured_bound,
    persistence_check_states, supersolution_residual, Envelope, FrontSample, FrontTrace, PersistenceOptions,
    QuadraticSign,
};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::experiment::SnapshotPair;
use crate::model::{State, NEGATIVITY_TOLERANCE};
use crate::theory::{self, TheoryBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// No prediction applies or the data cannot decide.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub status: Status,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl Clause {
    fn new(name: &str, pass: bool, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Clause {
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            value: Some(value),
            limit: Some(limit),
            detail: detail.into(),
        }
    }

    fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Clause {
            name: name.to_string(),
            status: Status::Skipped,
            value: None,
            limit: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub damping_condition: bool,
    pub tau_disc: Option<f64>,
    pub snapshots: usize,
    pub clauses: Vec<Clause>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.status != Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn nonnegativity(pairs: &[SnapshotPair]) -> Clause {
    let mut min = f64::INFINITY;
    for s in pairs.iter().flat_map(|p| std::iter::once(&p.a).chain(p.b.as_ref())) {
        min = min.min(s.u.min()).min(s.v.min());
    }
    Clause::new(
        "nonnegativity",
        min >= -NEGATIVITY_TOLERANCE,
        min,
        -NEGATIVITY_TOLERANCE,
        "minimum of u and v over all snapshots",
    )
}

fn speed_clauses(config: &RunConfig, states: &[&State], out: &mut Vec<Clause>) -> Result<()> {
    let target = theory::kpp_speed(config.params.a);
    let threshold = config.thresholds()[0];
    for dir in config.directions() {
        let mut trace = FrontTrace::new(threshold, dir.clone());
        for s in states {
            if let Ok(position) = front_position(&s.u, threshold, &dir) {
                let trusted = dir.clears_boundary(s.grid(), position, config.observe.clearance);
                trace.samples.push(FrontSample { t: s.t, position, trusted });
            }
        }
        let name = format!("spreading_speed[{}]", dir.label());
        match fit_speed(&trace, config.analysis.window_fraction) {
            Ok(fit) => {
                let rel = (fit.speed - target).abs() / target;
                let detail = format!("fitted {:.6} vs 2 sqrt(a) = {:.6} on [{}, {}]", fit.speed, target, fit.t_start, fit.t_end);
                if config.params.damping_condition() {
                    out.push(Clause::new(&name, rel <= config.analysis.speed_tolerance, rel, config.analysis.speed_tolerance, detail));
                } else {
                    out.push(Clause {
                        status: Status::Skipped,
                        ..Clause::new(&name, true, rel, config.analysis.speed_tolerance, format!("{detail}; outside b > N mu chi / 4"))
                    });
                }
            }
            Err(e) => out.push(Clause::skipped(&name, e.to_string())),
        }
    }
    Ok(())
}

fn residual_clauses(config: &RunConfig, pairs: &[SnapshotPair], tau: Option<f64>, out: &mut Vec<Clause>) -> Result<()> {
    let p = &config.params;
    let Some(tau) = tau else {
        out.push(Clause::skipped("supersolution_residual", "no tolerance: enable calibration or set analysis.tau_disc"));
        return Ok(());
    };
    let mut natural = f64::NEG_INFINITY;
    let mut flipped = f64::NEG_INFINITY;
    let mut where_t = 0.0;
    for pair in pairs.iter().filter(|p| p.a.t >= config.analysis.residual_start) {
        if let Some(b) = &pair.b {
            let r = supersolution_residual(&pair.a, b, p, QuadraticSign::Natural)?.max();
            if r > natural {
                natural = r;
                where_t = pair.a.t;
            }
            flipped = flipped.max(supersolution_residual(&pair.a, b, p, QuadraticSign::Flipped)?.max());
        }
    }
    if !natural.is_finite() {
        out.push(Clause::skipped("supersolution_residual", "no snapshot pairs"));
        return Ok(());
    }
    if !p.damping_condition() {
        out.push(Clause::skipped("supersolution_residual", "outside b > N mu chi / 4"));
        return Ok(());
    }
    out.push(Clause::new(
        "supersolution_residual",
        natural <= tau,
        natural,
        tau,
        format!(
            "max of w_t - Lap w - a w for t >= {}, attained at t = {where_t}",
            config.analysis.residual_start
        ),
    ));
    let needed = 10.0 * tau;
    out.push(Clause::new(
        "supersolution_negative_control",
        flipped >= needed && flipped > 0.0,
        flipped,
        needed,
        "residual with the damping term sign flipped must exceed 10 tau",
    ));
    Ok(())
}

fn envelope_clause(config: &RunConfig, pairs: &[SnapshotPair], tau: Option<f64>) -> Result<Clause> {
    let first = &pairs[0].a;
    if first.t != 0.0 {
        return Ok(Clause::skipped("envelope", "first snapshot is not the initial data"));
    }
    let env = Envelope::minimal(first, &config.params, config.analysis.k, config.initial.envelope_shape())?;
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for s in pairs.iter().flat_map(|p| std::iter::once(&p.a).chain(p.b.as_ref())) {
        let v = envelope_check(s, &config.params, &env)?.max_violation();
        if v > worst {
            worst = v;
            at = s.t;
        }
    }
    let tau = tau.unwrap_or(0.0);
    Ok(Clause::new(
        "envelope",
        worst <= tau,
        worst,
        tau,
        format!("k = {}, c = {}, M = {}, d = {}; worst at t = {at}", env.k, env.speed, env.bound_w, env.bound_v),
    ))
}

fn dichotomy_clauses(config: &RunConfig, states: &[&State], out: &mut Vec<Clause>) {
    let a = &config.analysis;
    let c = theory::kpp_speed(config.params.a);
    let geometry = config.initial.geometry(config.grid.dim());
    let late: Vec<&&State> = states.iter().filter(|s| s.t >= 0.5 * config.horizon && s.t > 0.0).collect();
    if late.is_empty() {
        out.push(Clause::skipped("interior_infimum", "no snapshot in the late window"));
    } else {
        let mut inf = f64::INFINITY;
        for s in &late {
            inf = inf
                .min(interior_infimum(&s.u, s.t, &geometry, c - a.eps))
                .min(interior_infimum(&s.v, s.t, &geometry, c - a.eps));
        }
        out.push(Clause::new(
            "interior_infimum",
            inf > a.floor,
            inf,
            a.floor,
            format!("min of u, v over s(x) <= (2 sqrt(a) - eps) t for t in [{}, {}]", 0.5 * config.horizon, config.horizon),
        ));
    }
    let last = states.last().unwrap();
    let eu = exterior_supremum(&last.u, last.t, &geometry, c + a.eps);
    let ev = exterior_supremum(&last.v, last.t, &geometry, c + a.eps);
    if eu.outside_box || last.t == 0.0 {
        out.push(Clause::skipped("exterior_supremum", "region lies outside the box"));
    } else {
        let sup = eu.value.max(ev.value);
        out.push(Clause::new(
            "exterior_supremum",
            sup < a.floor,
            sup,
            a.floor,
            format!("max of u, v over s(x) >= (2 sqrt(a) + eps) t at t = {}", last.t),
        ));
    }
}

/// Ball radius `2 L(eta)` for the persistence check, with `M` measured from
/// the persistence start on.
pub fn persistence_radius_for(config: &RunConfig, states: &[&State]) -> Result<(f64, f64)> {
    let p = &config.params;
    let eta = config.analysis.eta_fraction * p.a / p.b;
    let late: Vec<&State> = states.iter().copied().filter(|s| s.t >= config.analysis.persistence_start).collect();
    let big_m = if late.is_empty() {
        measured_bound(states.iter().copied())
    } else {
        measured_bound(late)
    };
    let bundle = TheoryBundle::new(p.a, p.dim, config.analysis.eps)?;
    let l = bundle.l_of_eta(eta, big_m.max(eta), p.lambda)?;
    Ok((2.0 * l, big_m))
}

fn persistence_clause(config: &RunConfig, states: &[&State]) -> Result<Clause> {
    let p = &config.params;
    let eta = config.analysis.eta_fraction * p.a / p.b;
    let (radius, big_m) = persistence_radius_for(config, states)?;
    let owned: Vec<State> = states.iter().map(|s| (*s).clone()).collect();
    let report = persistence_check_states(
        &owned,
        &PersistenceOptions {
            eta,
            center: vec![0.0; p.dim],
            radius,
            earliest: config.analysis.persistence_start,
            burn_in: config.analysis.burn_in,
        },
    )?;
    let Some(delta) = report.delta_meas else {
        return Ok(Clause::skipped("persistence", format!("ball supremum never reached eta = {eta}")));
    };
    let pass = delta > config.analysis.floor && report.settled();
    Ok(Clause::new(
        "persistence",
        pass,
        delta,
        config.analysis.floor,
        format!(
            "ball radius {radius:.6} (M = {big_m:.6}), trigger t = {}, late floor {:?}, settled {}",
            report.trigger.unwrap_or(f64::NAN),
            report.late_floor,
            report.settled()
        ),
    ))
}

/// Evaluates every clause on the snapshot pairs of one run.
pub fn verify_snapshots(config: &RunConfig, pairs: &[SnapshotPair], tau: Option<f64>) -> Result<VerifyReport> {
    if pairs.is_empty() {
        return Err(Error::InsufficientHistory("no snapshots to verify".into()));
    }
    for pair in pairs {
        if pair.a.grid() != &config.grid || pair.b.as_ref().is_some_and(|b| b.grid() != &config.grid) {
            return Err(Error::GridMismatch);
        }
    }
    let states: Vec<&State> = pairs.iter().map(|p| &p.a).collect();
    let mut clauses = vec![nonnegativity(pairs)];
    speed_clauses(config, &states, &mut clauses)?;
    residual_clauses(config, pairs, tau, &mut clauses)?;
    clauses.push(envelope_clause(config, pairs, tau)?);
    dichotomy_clauses(config, &states, &mut clauses);
    clauses.push(persistence_clause(config, &states)?);
    Ok(VerifyReport {
        damping_condition: config.params.damping_condition(),
        tau_disc: tau,
        snapshots: pairs.len(),
        clauses,
    })
}
